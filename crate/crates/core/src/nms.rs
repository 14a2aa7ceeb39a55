//! Normalized min-sum decoding over a redundant parity-check matrix, plus an
//! automorphism-dilated variant that decodes several permuted copies of the
//! received frame jointly and folds the averaged extrinsics back into the
//! working frame each iteration.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::bch::{
    dilation_stride, generator_encode, perm_cyclic, perm_frobenius, perm_interleave, CodeSpec,
    Permutation,
};
use crate::gf2::{BitMatrix, BitVector};
use crate::{Error, Result};

/// Default message saturation, mirroring a fixed-point range.
pub const DEFAULT_LLR_CLIP: f64 = 31.75;

/// Channel log-likelihood ratios for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    pub values: Vec<f64>,
    pub sigma_sq: f64,
}

/// Computes per-bit LLRs 2*y/sigma_sq for a BPSK observation.
pub fn llr_init(y: &[f64], sigma_sq: f64) -> Result<LlrFrame> {
    if sigma_sq <= 0.0 {
        return Err(Error::Parameter(format!(
            "sigma_sq must be positive, got {sigma_sq}"
        )));
    }
    Ok(LlrFrame {
        values: y.iter().map(|v| 2.0 * v / sigma_sq).collect(),
        sigma_sq,
    })
}

/// Coordinate-permutation family used when dilating a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Identity,
    Interleave,
    Frobenius,
}

impl Family {
    pub fn permutation(self, n: usize) -> Result<Permutation> {
        match self {
            Family::Identity => Ok(Permutation::identity(n)),
            Family::Interleave => perm_interleave(n),
            Family::Frobenius => perm_frobenius(n),
        }
    }
}

/// How a frame is dilated: every (family, s) pair contributes one branch
/// whose permutation is a cyclic shift by s*d_p + d_o composed after the
/// family map, with d_o redrawn uniformly from [0, d_p) per branch.
#[derive(Debug, Clone)]
pub struct DilationConfig {
    pub d_p: usize,
    pub s_values: Vec<usize>,
    pub families: Vec<Family>,
    /// Fixes d_o instead of drawing it; for reduced/deterministic setups.
    pub offset_override: Option<usize>,
}

impl DilationConfig {
    /// The full nine-branch configuration with the stride wired for N.
    pub fn for_length(n: usize) -> Result<DilationConfig> {
        Ok(DilationConfig {
            d_p: dilation_stride(n)?,
            s_values: vec![0, 1, 2],
            families: vec![Family::Identity, Family::Interleave, Family::Frobenius],
            offset_override: None,
        })
    }

    pub fn branches(&self) -> usize {
        self.families.len() * self.s_values.len()
    }

    fn validate(&self) -> Result<()> {
        if self.d_p == 0 {
            return Err(Error::Parameter("dilation stride d_p must be >= 1".into()));
        }
        if self.families.is_empty() || self.s_values.is_empty() {
            return Err(Error::Parameter(
                "dilation needs at least one family and one shift index".into(),
            ));
        }
        if let Some(d_o) = self.offset_override {
            if d_o >= self.d_p {
                return Err(Error::Parameter(format!(
                    "offset override {d_o} outside [0, d_p={})",
                    self.d_p
                )));
            }
        }
        Ok(())
    }
}

/// Decoder settings shared by the plain and dilated variants.
#[derive(Debug, Clone)]
pub struct NmsConfig {
    /// Check-node normalization factor in (0, 1].
    pub alpha: f64,
    /// Iteration budget I_m.
    pub max_iters: usize,
    pub llr_clip: f64,
    pub dilation: DilationConfig,
}

impl NmsConfig {
    pub fn new(alpha: f64, max_iters: usize, dilation: DilationConfig) -> NmsConfig {
        NmsConfig {
            alpha,
            max_iters,
            llr_clip: DEFAULT_LLR_CLIP,
            dilation,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be >= 1".into()));
        }
        if self.llr_clip <= 0.0 {
            return Err(Error::Parameter("llr_clip must be positive".into()));
        }
        self.dilation.validate()
    }
}

/// Which stage produced the final decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStage {
    Nms,
    Osd,
}

#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    pub hard_decision: BitVector,
    pub iterations_used: usize,
    pub syndrome_pass: bool,
    pub stage: DecodeStage,
    pub posterior: LlrFrame,
}

/// The permuted copies of a frame together with the permutations that built
/// them, so extrinsics can be aligned back afterwards.
#[derive(Debug, Clone)]
pub struct DilationBlock {
    pub rows: Vec<LlrFrame>,
    pub perms: Vec<Permutation>,
}

/// Permutes `frame` into one branch copy per (family, s) pair. Offsets d_o
/// are drawn fresh per branch unless the config pins them.
pub fn dilate(
    frame: &LlrFrame,
    cfg: &DilationConfig,
    rng: &mut impl Rng,
) -> Result<DilationBlock> {
    cfg.validate()?;
    let n = frame.values.len();
    let mut rows = Vec::with_capacity(cfg.branches());
    let mut perms = Vec::with_capacity(cfg.branches());
    for &family in &cfg.families {
        let fam = family.permutation(n)?;
        for &s in &cfg.s_values {
            let d_o = match cfg.offset_override {
                Some(fixed) => fixed,
                None => rng.gen_range(0..cfg.d_p),
            };
            let perm = perm_cyclic(n, cfg.d_p, s, d_o)?.compose(&fam);
            rows.push(LlrFrame {
                values: perm.apply(&frame.values),
                sigma_sq: frame.sigma_sq,
            });
            perms.push(perm);
        }
    }
    Ok(DilationBlock { rows, perms })
}

/// Aligns each branch output back to the original coordinate order by the
/// recorded permutation's inverse, then averages coordinate-wise.
pub fn merge_extrinsic(outputs: &[Vec<f64>], perms: &[Permutation]) -> Vec<f64> {
    assert_eq!(outputs.len(), perms.len(), "one permutation per output");
    assert!(!outputs.is_empty(), "nothing to merge");
    let n = outputs[0].len();
    let mut acc = vec![0.0; n];
    for (out, perm) in outputs.iter().zip(perms) {
        assert_eq!(out.len(), n);
        for (i, a) in acc.iter_mut().enumerate() {
            *a += out[perm.destination_of(i)];
        }
    }
    let scale = 1.0 / outputs.len() as f64;
    for a in &mut acc {
        *a *= scale;
    }
    acc
}

/// Applies the normalized min-sum check update to one row of
/// variable-to-check messages: output slot k gets alpha times the sign
/// product and the minimum magnitude over all other slots.
fn row_min_sum(v2c: &[f64], c2v: &mut [f64], alpha: f64, clip: f64) {
    debug_assert!(v2c.len() >= 2);
    let mut sign = 1.0f64;
    let mut min1 = f64::INFINITY;
    let mut min2 = f64::INFINITY;
    let mut argmin = 0;
    for (k, &v) in v2c.iter().enumerate() {
        if v < 0.0 {
            sign = -sign;
        }
        let a = v.abs();
        if a < min1 {
            min2 = min1;
            min1 = a;
            argmin = k;
        } else if a < min2 {
            min2 = a;
        }
    }
    for (k, out) in c2v.iter_mut().enumerate() {
        let self_sign = if v2c[k] < 0.0 { -1.0 } else { 1.0 };
        let m = if k == argmin { min2 } else { min1 };
        *out = (alpha * sign * self_sign * m).clamp(-clip, clip);
    }
}

/// Min-sum decoder bound to one parity-check matrix, with the Tanner-graph
/// adjacency flattened into edge arrays up front.
#[derive(Debug, Clone)]
pub struct NmsDecoder {
    pcm: BitMatrix,
    cfg: NmsConfig,
    /// Edge e lives in row j iff row_ptr[j] <= e < row_ptr[j+1].
    row_ptr: Vec<usize>,
    edge_col: Vec<u32>,
}

impl NmsDecoder {
    pub fn new(pcm: BitMatrix, cfg: NmsConfig) -> Result<NmsDecoder> {
        cfg.validate()?;
        let mut row_ptr = Vec::with_capacity(pcm.rows() + 1);
        let mut edge_col = Vec::new();
        row_ptr.push(0);
        for (j, row) in pcm.iter_rows().enumerate() {
            let w = row.weight();
            if w < 2 {
                return Err(Error::Parameter(format!(
                    "check row {j} has weight {w}; min-sum needs >= 2 variables per check"
                )));
            }
            edge_col.extend(row.iter_ones().map(|i| i as u32));
            row_ptr.push(edge_col.len());
        }
        if pcm.rows() == 0 {
            return Err(Error::Parameter("parity-check matrix has no rows".into()));
        }
        Ok(NmsDecoder {
            pcm,
            cfg,
            row_ptr,
            edge_col,
        })
    }

    pub fn pcm(&self) -> &BitMatrix {
        &self.pcm
    }

    pub fn config(&self) -> &NmsConfig {
        &self.cfg
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<NmsDecoder> {
        let mut cfg = self.cfg.clone();
        cfg.alpha = alpha;
        cfg.validate()?;
        Ok(NmsDecoder {
            cfg,
            ..self.clone()
        })
    }

    fn hard_decision(posterior: &[f64]) -> BitVector {
        let mut c = BitVector::zeros(posterior.len());
        for (i, &x) in posterior.iter().enumerate() {
            if x < 0.0 {
                c.set(i, true);
            }
        }
        c
    }

    /// One full check-node pass from a fresh frame (all check-to-variable
    /// state zero): returns the per-variable extrinsic sums.
    fn one_round_extrinsic(&self, z: &[f64]) -> Vec<f64> {
        let clip = self.cfg.llr_clip;
        let v2c: Vec<f64> = self
            .edge_col
            .iter()
            .map(|&i| z[i as usize].clamp(-clip, clip))
            .collect();
        let mut c2v = vec![0.0; v2c.len()];
        for j in 0..self.pcm.rows() {
            let span = self.row_ptr[j]..self.row_ptr[j + 1];
            row_min_sum(&v2c[span.clone()], &mut c2v[span], self.cfg.alpha, clip);
        }
        let mut ext = vec![0.0; z.len()];
        for (e, &i) in self.edge_col.iter().enumerate() {
            ext[i as usize] += c2v[e];
        }
        ext
    }

    /// Flooding-schedule decode: variable updates with extrinsic exclusion,
    /// normalized check updates, per-iteration posterior and syndrome test.
    pub fn decode(&self, llr: &LlrFrame) -> DecodeOutcome {
        let n = self.pcm.cols();
        assert_eq!(llr.values.len(), n, "LLR length != matrix columns");
        let clip = self.cfg.llr_clip;
        let ne = self.edge_col.len();
        let mut c2v = vec![0.0f64; ne];
        let mut v2c = vec![0.0f64; ne];
        let mut colsum = vec![0.0f64; n];
        let mut posterior = llr.values.clone();
        let mut hard = Self::hard_decision(&posterior);
        let mut pass = false;
        let mut used = self.cfg.max_iters;
        for t in 1..=self.cfg.max_iters {
            colsum.copy_from_slice(&llr.values);
            for (e, &i) in self.edge_col.iter().enumerate() {
                colsum[i as usize] += c2v[e];
            }
            for (e, &i) in self.edge_col.iter().enumerate() {
                v2c[e] = (colsum[i as usize] - c2v[e]).clamp(-clip, clip);
            }
            for j in 0..self.pcm.rows() {
                let span = self.row_ptr[j]..self.row_ptr[j + 1];
                row_min_sum(&v2c[span.clone()], &mut c2v[span], self.cfg.alpha, clip);
            }
            // extrinsics are summed before the channel term is added, in the
            // same order as the dilated path, so a one-branch one-iteration
            // dilation reproduces this decoder bit for bit
            colsum.iter_mut().for_each(|v| *v = 0.0);
            for (e, &i) in self.edge_col.iter().enumerate() {
                colsum[i as usize] += c2v[e];
            }
            for (p, (&l, &s)) in posterior.iter_mut().zip(llr.values.iter().zip(&colsum)) {
                *p = l + s;
            }
            hard = Self::hard_decision(&posterior);
            if self.pcm.syndrome_ok(&hard).expect("length checked") {
                pass = true;
                used = t;
                break;
            }
        }
        DecodeOutcome {
            hard_decision: hard,
            iterations_used: used,
            syndrome_pass: pass,
            stage: DecodeStage::Nms,
            posterior: LlrFrame {
                values: posterior,
                sigma_sq: llr.sigma_sq,
            },
        }
    }

    /// Dilated decode: each iteration permutes the working frame into one
    /// branch per (family, s) pair, runs a single message round per branch
    /// from fresh state, aligns and averages the extrinsics, and adds the
    /// average to the working frame. The frame carries all accumulated
    /// belief, so branch state never persists across iterations.
    pub fn decode_enhanced(&self, llr: &LlrFrame, rng: &mut impl Rng) -> DecodeOutcome {
        let n = self.pcm.cols();
        assert_eq!(llr.values.len(), n, "LLR length != matrix columns");
        let mut frame = llr.clone();
        let mut hard = Self::hard_decision(&frame.values);
        let mut pass = false;
        let mut used = self.cfg.max_iters;
        for t in 1..=self.cfg.max_iters {
            let block = dilate(&frame, &self.cfg.dilation, rng).expect("validated config");
            let outputs: Vec<Vec<f64>> = block
                .rows
                .iter()
                .map(|row| self.one_round_extrinsic(&row.values))
                .collect();
            let merged = merge_extrinsic(&outputs, &block.perms);
            for (f, m) in frame.values.iter_mut().zip(&merged) {
                *f += m;
            }
            hard = Self::hard_decision(&frame.values);
            if self.pcm.syndrome_ok(&hard).expect("length checked") {
                pass = true;
                used = t;
                break;
            }
        }
        DecodeOutcome {
            hard_decision: hard,
            iterations_used: used,
            syndrome_pass: pass,
            stage: DecodeStage::Nms,
            posterior: frame,
        }
    }
}

/// Grid-searches the normalization factor: simulates `frames` random frames
/// at `train_snr_db` for every candidate with common random numbers and
/// returns the FER-minimizing value, ties resolved toward smaller alpha.
pub fn calibrate_alpha(
    spec: &CodeSpec,
    pcm: &BitMatrix,
    base: &NmsConfig,
    train_snr_db: f64,
    grid: &[f64],
    frames: usize,
    seed: u64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Parameter("alpha grid is empty".into()));
    }
    for &a in grid {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::Parameter(format!(
                "alpha grid value {a} outside (0, 1]"
            )));
        }
    }
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("validated finite"));
    let rate = spec.k as f64 / spec.n as f64;
    let sigma = crate::sim::sigma_sq_for(train_snr_db, rate).sqrt();
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    let mut best: Option<(f64, usize)> = None;
    for &alpha in &sorted {
        let mut cfg = base.clone();
        cfg.alpha = alpha;
        let dec = NmsDecoder::new(pcm.clone(), cfg)?;
        let errors: usize = (0..frames)
            .into_par_iter()
            .map(|f| {
                let mut chan = ChaCha8Rng::seed_from_u64(seed);
                chan.set_stream(2 * f as u64);
                let msg = BitVector::from_bits(
                    &(0..spec.k).map(|_| chan.gen_range(0..2u8)).collect::<Vec<_>>(),
                );
                let c = generator_encode(spec, &msg).expect("length checked");
                let y: Vec<f64> = (0..spec.n)
                    .map(|i| {
                        let s = if c.get(i) { -1.0 } else { 1.0 };
                        s + noise.sample(&mut chan)
                    })
                    .collect();
                let llr = llr_init(&y, 2.0).expect("positive sigma_sq");
                let mut dec_rng = ChaCha8Rng::seed_from_u64(seed);
                dec_rng.set_stream(2 * f as u64 + 1);
                let out = dec.decode_enhanced(&llr, &mut dec_rng);
                usize::from(out.hard_decision != c)
            })
            .sum();
        match best {
            Some((_, e)) if errors >= e => {}
            _ => best = Some((alpha, errors)),
        }
    }
    Ok(best.expect("grid non-empty").0)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bch::{build_code, standard_pcm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noiseless_llr(c: &BitVector, mag: f64) -> LlrFrame {
        let values = (0..c.len())
            .map(|i| if c.get(i) { -mag } else { mag })
            .collect();
        LlrFrame {
            values,
            sigma_sq: 2.0,
        }
    }

    fn small_dilation(d_p: usize) -> DilationConfig {
        DilationConfig {
            d_p,
            s_values: vec![0, 1, 2],
            families: vec![Family::Identity, Family::Interleave, Family::Frobenius],
            offset_override: None,
        }
    }

    #[test]
    fn test_1_llr_init_scaling() {
        let f = llr_init(&[3.0, 0.0, -1.5], 2.0).unwrap();
        assert_eq!(f.values, vec![3.0, 0.0, -1.5]);
        let g = llr_init(&[3.0], 0.5).unwrap();
        assert_eq!(g.values, vec![12.0]);
        assert!(llr_init(&[1.0], 0.0).is_err());
        assert!(llr_init(&[1.0], -1.0).is_err());
    }

    #[test]
    fn test_2_llr_init_preserves_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<f64> = (0..200).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let f = llr_init(&y, 0.37).unwrap();
        for (a, b) in y.iter().zip(&f.values) {
            assert_eq!(a.signum(), b.signum());
        }
    }

    #[test]
    fn test_3_check_update_hand_example() {
        let v2c = [2.0, -3.0, 4.0];
        let mut c2v = [0.0; 3];
        row_min_sum(&v2c, &mut c2v, 0.5, DEFAULT_LLR_CLIP);
        assert_eq!(c2v, [-1.5, 1.0, -1.0]);
    }

    #[test]
    fn test_4_second_min_trick_matches_naive_exclusion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100_000 {
            let w = rng.gen_range(2..=8);
            let v2c: Vec<f64> = (0..w)
                .map(|_| {
                    // occasional exact ties and zeros
                    if rng.gen_range(0..8) == 0 {
                        rng.gen_range(-2..=2) as f64
                    } else {
                        rng.gen_range(-10.0..10.0)
                    }
                })
                .collect();
            let alpha = rng.gen_range(0.1..=1.0);
            let mut fast = vec![0.0; w];
            row_min_sum(&v2c, &mut fast, alpha, DEFAULT_LLR_CLIP);
            for k in 0..w {
                let mut sign = 1.0;
                let mut m = f64::INFINITY;
                for (o, &v) in v2c.iter().enumerate() {
                    if o == k {
                        continue;
                    }
                    if v < 0.0 {
                        sign = -sign;
                    }
                    m = m.min(v.abs());
                }
                let naive = (alpha * sign * m).clamp(-DEFAULT_LLR_CLIP, DEFAULT_LLR_CLIP);
                assert_eq!(fast[k], naive, "slot {k} of {v2c:?}");
            }
        }
    }

    #[test]
    fn test_5_noiseless_decodes_in_one_iteration() {
        let spec = build_code(4, 7).unwrap();
        let dec = NmsDecoder::new(
            standard_pcm(&spec),
            NmsConfig::new(0.7, 8, small_dilation(5)),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let msg = BitVector::from_bits(
                &(0..7).map(|_| rng.gen_range(0..2u8)).collect::<Vec<_>>(),
            );
            let c = generator_encode(&spec, &msg).unwrap();
            let out = dec.decode(&noiseless_llr(&c, 4.0));
            assert!(out.syndrome_pass);
            assert_eq!(out.iterations_used, 1);
            assert_eq!(out.hard_decision, c);
        }
    }

    #[test]
    fn test_6_repetition_code_matches_map() {
        // two-check chain v0-c0-v1-c1-v2; exact on this tree once messages
        // cross its diameter, which takes two flooding iterations
        let h = BitMatrix::from_rows(vec![
            BitVector::from_bits(&[1, 1, 0]),
            BitVector::from_bits(&[0, 1, 1]),
        ]);
        let dec = NmsDecoder::new(h, NmsConfig::new(1.0, 2, small_dilation(1))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let llr: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let total: f64 = llr.iter().sum();
            let map_bit = total < 0.0;
            let out = dec.decode(&LlrFrame {
                values: llr.clone(),
                sigma_sq: 2.0,
            });
            for i in 0..3 {
                assert_eq!(
                    out.hard_decision.get(i),
                    map_bit,
                    "llr {llr:?} total {total}"
                );
            }
        }
    }

    #[test]
    fn test_7_decisions_invariant_to_positive_scaling() {
        let spec = build_code(4, 7).unwrap();
        let dec = NmsDecoder::new(
            standard_pcm(&spec),
            NmsConfig::new(0.7, 4, small_dilation(5)),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..40 {
            let y: Vec<f64> = (0..15).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let base = LlrFrame {
                values: y.clone(),
                sigma_sq: 2.0,
            };
            let scaled = LlrFrame {
                values: y.iter().map(|v| v * 7.3).collect(),
                sigma_sq: 2.0,
            };
            assert_eq!(
                dec.decode(&base).hard_decision,
                dec.decode(&scaled).hard_decision
            );
            let mut r1 = ChaCha8Rng::seed_from_u64(trial);
            let mut r2 = ChaCha8Rng::seed_from_u64(trial);
            assert_eq!(
                dec.decode_enhanced(&base, &mut r1).hard_decision,
                dec.decode_enhanced(&scaled, &mut r2).hard_decision
            );
        }
    }

    #[test]
    fn test_8_dilation_block_shape_and_inversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let frame = LlrFrame {
            values: (0..63).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            sigma_sq: 2.0,
        };
        let cfg = DilationConfig::for_length(63).unwrap();
        assert_eq!(cfg.d_p, 21);
        let block = dilate(&frame, &cfg, &mut rng).unwrap();
        assert_eq!(block.rows.len(), 9);
        for (row, perm) in block.rows.iter().zip(&block.perms) {
            assert_eq!(perm.invert().apply(&row.values), frame.values);
        }
        // identity family, s = 0, pinned zero offset reproduces the input
        let pinned = DilationConfig {
            offset_override: Some(0),
            ..cfg
        };
        let block = dilate(&frame, &pinned, &mut rng).unwrap();
        assert_eq!(block.rows[0].values, frame.values);
    }

    #[test]
    fn test_9_merge_extrinsic_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 63;
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let ident: Vec<Permutation> = (0..9).map(|_| Permutation::identity(n)).collect();
        let zeros = vec![vec![0.0; n]; 9];
        assert_eq!(merge_extrinsic(&zeros, &ident), vec![0.0; n]);
        let copies = vec![v.clone(); 9];
        let merged = merge_extrinsic(&copies, &ident);
        for (a, b) in merged.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
        // permutation-equivariant inputs collapse back to the source vector
        let frame = LlrFrame {
            values: v.clone(),
            sigma_sq: 2.0,
        };
        let block = dilate(&frame, &DilationConfig::for_length(n).unwrap(), &mut rng).unwrap();
        let outs: Vec<Vec<f64>> = block.rows.iter().map(|r| r.values.clone()).collect();
        let merged = merge_extrinsic(&outs, &block.perms);
        for (a, b) in merged.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn test_10_single_branch_first_iteration_equals_plain() {
        // one identity branch with pinned offset and a one-iteration budget
        // walks exactly the plain decoder's first iteration
        let spec = build_code(4, 7).unwrap();
        let reduced = DilationConfig {
            d_p: 5,
            s_values: vec![0],
            families: vec![Family::Identity],
            offset_override: Some(0),
        };
        let plain = NmsDecoder::new(
            standard_pcm(&spec),
            NmsConfig::new(0.7, 1, small_dilation(5)),
        )
        .unwrap();
        let reduced = NmsDecoder::new(standard_pcm(&spec), NmsConfig::new(0.7, 1, reduced)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..50 {
            let llr = LlrFrame {
                values: (0..15).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                sigma_sq: 2.0,
            };
            let a = plain.decode(&llr);
            let mut dec_rng = ChaCha8Rng::seed_from_u64(trial);
            let b = reduced.decode_enhanced(&llr, &mut dec_rng);
            assert_eq!(a.hard_decision, b.hard_decision);
            assert_eq!(a.posterior.values, b.posterior.values);
            assert_eq!(a.syndrome_pass, b.syndrome_pass);
        }
    }

    #[test]
    fn test_11_enhanced_noiseless_stops_immediately() {
        let spec = build_code(6, 45).unwrap();
        let dec = NmsDecoder::new(
            standard_pcm(&spec),
            NmsConfig::new(0.7, 4, DilationConfig::for_length(63).unwrap()),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let msg = BitVector::from_bits(
            &(0..45).map(|_| rng.gen_range(0..2u8)).collect::<Vec<_>>(),
        );
        let c = generator_encode(&spec, &msg).unwrap();
        let out = dec.decode_enhanced(&noiseless_llr(&c, 4.0), &mut rng);
        assert!(out.syndrome_pass);
        assert_eq!(out.iterations_used, 1);
        assert_eq!(out.hard_decision, c);
        assert_eq!(out.stage, DecodeStage::Nms);
    }

    #[test]
    fn test_12_syndrome_flag_matches_matrix_check() {
        let spec = build_code(4, 7).unwrap();
        let pcm = standard_pcm(&spec);
        let dec = NmsDecoder::new(pcm.clone(), NmsConfig::new(0.7, 3, small_dilation(5)))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut saw_fail = false;
        for trial in 0..200 {
            // heavy noise so both outcomes appear
            let llr = LlrFrame {
                values: (0..15).map(|_| 1.0 + rng.gen_range(-2.5..2.5)).collect(),
                sigma_sq: 2.0,
            };
            let out = dec.decode(&llr);
            assert_eq!(
                out.syndrome_pass,
                pcm.syndrome_ok(&out.hard_decision).unwrap()
            );
            assert!(out.iterations_used <= 3);
            let mut dec_rng = ChaCha8Rng::seed_from_u64(trial);
            let out = dec.decode_enhanced(&llr, &mut dec_rng);
            assert_eq!(
                out.syndrome_pass,
                pcm.syndrome_ok(&out.hard_decision).unwrap()
            );
            saw_fail |= !out.syndrome_pass;
        }
        assert!(saw_fail, "noise level should produce some failures");
    }

    #[test]
    fn test_13_calibrate_alpha_basics() {
        let spec = build_code(4, 7).unwrap();
        let pcm = standard_pcm(&spec);
        let base = NmsConfig::new(0.5, 2, small_dilation(5));
        let a = calibrate_alpha(&spec, &pcm, &base, 3.0, &[0.5], 40, 11).unwrap();
        assert_eq!(a, 0.5);
        let g = [0.4, 0.6, 0.8];
        let a1 = calibrate_alpha(&spec, &pcm, &base, 3.0, &g, 60, 12).unwrap();
        let a2 = calibrate_alpha(&spec, &pcm, &base, 3.0, &g, 60, 12).unwrap();
        assert_eq!(a1, a2);
        assert!(calibrate_alpha(&spec, &pcm, &base, 3.0, &[], 10, 13).is_err());
        assert!(calibrate_alpha(&spec, &pcm, &base, 3.0, &[0.0], 10, 13).is_err());
        assert!(calibrate_alpha(&spec, &pcm, &base, 3.0, &[1.1], 10, 13).is_err());
    }

    #[test]
    fn test_14_config_validation() {
        let spec = build_code(4, 7).unwrap();
        let pcm = standard_pcm(&spec);
        let dil = small_dilation(5);
        assert!(NmsDecoder::new(pcm.clone(), NmsConfig::new(0.0, 4, dil.clone())).is_err());
        assert!(NmsDecoder::new(pcm.clone(), NmsConfig::new(1.2, 4, dil.clone())).is_err());
        assert!(NmsDecoder::new(pcm.clone(), NmsConfig::new(0.7, 0, dil.clone())).is_err());
        let mut bad_clip = NmsConfig::new(0.7, 4, dil.clone());
        bad_clip.llr_clip = 0.0;
        assert!(NmsDecoder::new(pcm.clone(), bad_clip).is_err());
        let mut bad_dil = NmsConfig::new(0.7, 4, dil.clone());
        bad_dil.dilation.offset_override = Some(99);
        assert!(NmsDecoder::new(pcm.clone(), bad_dil).is_err());
        // a weight-1 check row is rejected
        let mut h = BitMatrix::new(4);
        h.push_row(BitVector::from_bits(&[1, 0, 0, 0]));
        assert!(NmsDecoder::new(h, NmsConfig::new(0.7, 4, dil)).is_err());
    }
}
