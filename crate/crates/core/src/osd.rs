//! Ordered-statistics decoding: sort bits by reliability, eliminate the
//! parity-check matrix into systematic form over the least reliable
//! positions, then search every candidate obtained by flipping at most p
//! bits of the most reliable basis and re-encoding.

use crate::bch::{CodeSpec, Permutation};
use crate::gf2::{BitMatrix, BitVector};
use crate::nms::{DecodeOutcome, DecodeStage, LlrFrame};
use crate::{Error, Result};

/// Settings for an order-p decode against one code.
#[derive(Debug, Clone)]
pub struct OsdConfig {
    pub order: usize,
    pub code: CodeSpec,
    /// (N-K) x N, full rank; rows carry no redundancy.
    pub full_rank_pcm: BitMatrix,
}

impl OsdConfig {
    pub fn new(order: usize, code: CodeSpec, full_rank_pcm: BitMatrix) -> Result<OsdConfig> {
        if order > code.k {
            return Err(Error::Parameter(format!(
                "order {order} exceeds dimension K={}",
                code.k
            )));
        }
        if full_rank_pcm.rows() != code.n - code.k || full_rank_pcm.cols() != code.n {
            return Err(Error::DimensionMismatch(format!(
                "expected a {}x{} parity-check matrix, got {}x{}",
                code.n - code.k,
                code.n,
                full_rank_pcm.rows(),
                full_rank_pcm.cols()
            )));
        }
        if full_rank_pcm.rank() != full_rank_pcm.rows() {
            return Err(Error::Parameter(
                "parity-check matrix is rank deficient".into(),
            ));
        }
        Ok(OsdConfig {
            order,
            code,
            full_rank_pcm,
        })
    }
}

/// A parity-check matrix brought to [I | P] form over reliability-ordered
/// columns, together with the total column permutation that got it there.
#[derive(Debug, Clone)]
pub struct SystematizedCode {
    /// Identity on the first M columns, parity block on the last K.
    pub h_sys: BitMatrix,
    /// Source coordinate -> final column position (reliability order
    /// composed with any dependency swaps).
    pub perm: Permutation,
    /// Original coordinates occupying the last K positions.
    pub mrb: Vec<usize>,
}

/// Stable-sorts coordinates by |llr| ascending; the returned permutation
/// sends each coordinate to its sorted position, so the most reliable one
/// lands at position N-1.
pub fn reliability_order(llr: &LlrFrame) -> Permutation {
    let n = llr.values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        llr.values[a]
            .abs()
            .partial_cmp(&llr.values[b].abs())
            .expect("finite LLRs")
    });
    let mut map = vec![0; n];
    for (pos, &src) in idx.iter().enumerate() {
        map[src] = pos;
    }
    Permutation::from_map(map).expect("sort produces a bijection")
}

/// Permutes columns by `order`, then eliminates to put an identity block on
/// the first M columns. A dependent pivot column is swapped with the nearest
/// more reliable column to its right and the swap is folded into the
/// returned permutation.
pub fn systematize(pcm: &BitMatrix, order: &Permutation) -> Result<SystematizedCode> {
    let n = pcm.cols();
    let m = pcm.rows();
    assert_eq!(order.len(), n, "permutation length != matrix columns");
    let mut rows: Vec<BitVector> = pcm.iter_rows().map(|r| order.apply_bits(r)).collect();
    let mut total: Vec<usize> = (0..n).map(|i| order.destination_of(i)).collect();
    let mut pos_src = vec![0; n];
    for (src, &pos) in total.iter().enumerate() {
        pos_src[pos] = src;
    }
    for p in 0..m {
        let mut piv = (p..m).find(|&r| rows[r].get(p));
        if piv.is_none() {
            let mut found = None;
            'scan: for q in (p + 1)..n {
                for r in p..m {
                    if rows[r].get(q) {
                        found = Some((q, r));
                        break 'scan;
                    }
                }
            }
            let Some((q, r)) = found else {
                return Err(Error::Parameter(format!(
                    "matrix rank is below {m}; cannot systematize"
                )));
            };
            for row in &mut rows {
                let (a, b) = (row.get(p), row.get(q));
                row.set(p, b);
                row.set(q, a);
            }
            let (sp, sq) = (pos_src[p], pos_src[q]);
            total[sp] = q;
            total[sq] = p;
            pos_src[p] = sq;
            pos_src[q] = sp;
            piv = Some(r);
        }
        rows.swap(p, piv.expect("pivot found"));
        let pivot_row = rows[p].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != p && row.get(p) {
                row.xor_assign(&pivot_row);
            }
        }
    }
    let mrb = pos_src[m..].to_vec();
    Ok(SystematizedCode {
        h_sys: BitMatrix::from_rows(rows),
        perm: Permutation::from_map(total).expect("swaps keep a bijection"),
        mrb,
    })
}

/// Number of flip patterns an order-p search visits: sum of C(k, w) for
/// w = 0..=p.
pub fn candidate_count(k: usize, p: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128; // C(k, 0)
    for w in 0..=p.min(k) {
        if w > 0 {
            c = c * (k - w + 1) as u128 / w as u128;
        }
        total += c;
    }
    total
}

/// Walks combinations of `k` positions taken `w` at a time in lexicographic
/// order, invoking `f` on each index set.
fn for_each_combination(k: usize, w: usize, mut f: impl FnMut(&[usize])) {
    if w == 0 {
        f(&[]);
        return;
    }
    if w > k {
        return;
    }
    let mut c: Vec<usize> = (0..w).collect();
    loop {
        f(&c);
        // advance: find the rightmost index that can still move right
        let mut i = w;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] != i + k - w {
                break;
            }
            if i == 0 {
                return;
            }
        }
        c[i] += 1;
        for j in i + 1..w {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Order-p decode of one frame: hard-decide the most reliable basis, try
/// every flip pattern of weight 0..=p, re-encode the parity side, and keep
/// the candidate with the highest correlation to the channel observation.
/// Ties go to the earlier (lower weight, then lexicographic) pattern.
pub fn osd_decode(y: &[f64], llr: &LlrFrame, cfg: &OsdConfig) -> DecodeOutcome {
    let n = cfg.code.n;
    let m = n - cfg.code.k;
    let k = cfg.code.k;
    assert_eq!(y.len(), n, "observation length != N");
    assert_eq!(llr.values.len(), n, "LLR length != N");
    let order = reliability_order(llr);
    let sys = systematize(&cfg.full_rank_pcm, &order).expect("config guarantees full rank");
    let llr_p = sys.perm.apply(&llr.values);
    let y_p = sys.perm.apply(y);

    // parity block columns, one bit vector of length M per MRB position
    let pcols: Vec<BitVector> = (0..k)
        .map(|t| {
            let mut col = BitVector::zeros(m);
            for r in 0..m {
                if sys.h_sys.get(r, m + t) {
                    col.set(r, true);
                }
            }
            col
        })
        .collect();

    let mut u0 = BitVector::zeros(k);
    for t in 0..k {
        if llr_p[m + t] < 0.0 {
            u0.set(t, true);
        }
    }
    let mut parity0 = BitVector::zeros(m);
    for t in u0.iter_ones() {
        parity0.xor_assign(&pcols[t]);
    }
    let mrb_sum0: f64 = u0.iter_ones().map(|t| y_p[m + t]).sum();

    // correlation = sum(y) - 2 * sum(y over one-bits); maximize by
    // minimizing the one-bit sum
    let mut best: Option<(f64, BitVector, BitVector)> = None;
    for w in 0..=cfg.order {
        for_each_combination(k, w, |flips| {
            let mut parity = parity0.clone();
            let mut mrb_sum = mrb_sum0;
            for &t in flips {
                parity.xor_assign(&pcols[t]);
                mrb_sum += if u0.get(t) { -y_p[m + t] } else { y_p[m + t] };
            }
            let ones_sum: f64 = parity.iter_ones().map(|r| y_p[r]).sum::<f64>() + mrb_sum;
            let better = match &best {
                None => true,
                Some((s, _, _)) => ones_sum < *s,
            };
            if better {
                let mut u = u0.clone();
                for &t in flips {
                    u.set(t, !u.get(t));
                }
                best = Some((ones_sum, parity, u));
            }
        });
    }
    let (_, parity, u) = best.expect("weight-0 pattern always evaluated");

    let mut c_p = BitVector::zeros(n);
    for r in parity.iter_ones() {
        c_p.set(r, true);
    }
    for t in u.iter_ones() {
        c_p.set(m + t, true);
    }
    let mut hard = BitVector::zeros(n);
    for i in 0..n {
        if c_p.get(sys.perm.destination_of(i)) {
            hard.set(i, true);
        }
    }
    debug_assert!(cfg
        .full_rank_pcm
        .syndrome_ok(&hard)
        .expect("length checked"));
    DecodeOutcome {
        hard_decision: hard,
        iterations_used: 0,
        syndrome_pass: true,
        stage: DecodeStage::Osd,
        // re-encoding produces no soft information; channel LLRs pass through
        posterior: llr.clone(),
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
