//! Parity-check matrix optimization.
//!
//! Starting from the standard staircase matrix, the pipeline lowers row
//! density by greedy row additions, hunts further with cyclic shifts,
//! deduplicates rows up to cyclic equivalence, pads the surviving base with
//! redundant rows controlled by a factor beta, and finally anneals row
//! placement to jointly minimize length-4 cycles and column-weight variance:
//!
//! ```text
//! standard H -> row echelon -> reduce_density -> cyclic_refine(Q)
//!            -> pad_redundancy(beta) -> anneal_layout -> H_o
//! ```
//!
//! The search loops run on `u128` bitsets (block lengths here are <= 127),
//! so a candidate row costs a couple of word ops plus a popcount.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashSet;

use crate::bch::{generator_matrix, standard_pcm, CodeSpec};
use crate::gf2::{BitMatrix, BitVector, WeightProfile};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// u128 bitset helpers
// ---------------------------------------------------------------------------

#[inline]
fn rot(x: u128, q: usize, n: usize, mask: u128) -> u128 {
    if q == 0 {
        x
    } else {
        (x << q | x >> (n - q)) & mask
    }
}

/// Order key matching BitVector::lex_cmp: index 0 is the most significant
/// position, so smaller keys read smaller left-to-right.
#[inline]
fn lex_key(x: u128, n: usize) -> u128 {
    x.reverse_bits() >> (128 - n)
}

/// Lexicographically smallest rotation.
fn canon(x: u128, n: usize, mask: u128) -> u128 {
    let mut best = x;
    let mut best_key = lex_key(x, n);
    for q in 1..n {
        let cand = rot(x, q, n, mask);
        let key = lex_key(cand, n);
        if key < best_key {
            best = cand;
            best_key = key;
        }
    }
    best
}

/// Incremental GF(2) row basis over u128 rows, keyed by leading set bit.
#[derive(Default)]
struct RankBasis {
    basis: Vec<u128>, // one slot per bit position, 0 = empty
}

impl RankBasis {
    fn with_bits(n: usize) -> RankBasis {
        RankBasis { basis: vec![0; n] }
    }

    /// Inserts `v` if it is independent of the rows so far; returns whether
    /// the rank grew.
    fn add(&mut self, mut v: u128) -> bool {
        while v != 0 {
            let lead = 127 - v.leading_zeros() as usize;
            if self.basis[lead] == 0 {
                self.basis[lead] = v;
                return true;
            }
            v ^= self.basis[lead];
        }
        false
    }

    fn would_grow(&self, mut v: u128) -> bool {
        while v != 0 {
            let lead = 127 - v.leading_zeros() as usize;
            if self.basis[lead] == 0 {
                return true;
            }
            v ^= self.basis[lead];
        }
        false
    }

    fn rank(&self) -> usize {
        self.basis.iter().filter(|&&b| b != 0).count()
    }
}

fn rank_of(rows: &[u128], n: usize) -> usize {
    let mut b = RankBasis::with_bits(n);
    for &r in rows {
        b.add(r);
    }
    b.rank()
}

// ---------------------------------------------------------------------------
// Candidate pool
// ---------------------------------------------------------------------------

/// Low-density candidate rows, one representative per cyclic equivalence
/// class, sorted by (weight, lexicographic canonical form).
#[derive(Clone, Debug)]
pub struct CandidatePool {
    n: usize,
    classes: Vec<u128>,
}

impl CandidatePool {
    fn from_set(set: HashSet<u128>, n: usize) -> CandidatePool {
        let mut classes: Vec<u128> = set.into_iter().collect();
        classes.sort_by_key(|&x| (x.count_ones(), lex_key(x, n)));
        CandidatePool { n, classes }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    pub fn min_weight(&self) -> Option<usize> {
        self.classes.iter().map(|x| x.count_ones() as usize).min()
    }

    /// GF(2) rank of the class representatives (without shifts).
    pub fn rank(&self) -> usize {
        rank_of(&self.classes, self.n)
    }

    pub fn iter(&self) -> impl Iterator<Item = BitVector> + '_ {
        self.classes.iter().map(|&x| BitVector::from_u128(x, self.n))
    }
}

fn require_u128(n: usize) -> Result<()> {
    if n == 0 || n > 128 {
        return Err(Error::Parameter(format!(
            "matrix optimization supports block lengths 1..=128, got {n}"
        )));
    }
    Ok(())
}

/// One sweep of the density search. For each row r_i the best-weight
/// candidate set S_f starts as {r_i}; candidates t that tie the best weight
/// join S_f, candidates that beat it reset S_f. With `shifted` false the
/// candidates are r_i + r_j (j != i); with `shifted` true they are
/// r_i + rot(r_j, q) over all j and q, zero excluded.
fn density_sweep(rows: &[u128], n: usize, shifted: bool) -> HashSet<u128> {
    let mask = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut pool = HashSet::new();
    let mut s_f: Vec<u128> = Vec::new();
    for (i, &ri) in rows.iter().enumerate() {
        let mut w_g = ri.count_ones();
        s_f.clear();
        s_f.push(ri);
        for (j, &rj) in rows.iter().enumerate() {
            if shifted {
                for q in 0..n {
                    let t = ri ^ rot(rj, q, n, mask);
                    if t == 0 {
                        continue;
                    }
                    let w = t.count_ones();
                    if w == w_g {
                        s_f.push(t);
                    } else if w < w_g {
                        w_g = w;
                        s_f.clear();
                        s_f.push(t);
                    }
                }
            } else {
                if j == i {
                    continue;
                }
                let t = ri ^ rj;
                let w = t.count_ones();
                if w == w_g {
                    s_f.push(t);
                } else if w < w_g {
                    w_g = w;
                    s_f.clear();
                    s_f.push(t);
                }
            }
        }
        pool.extend(s_f.iter().map(|&t| canon(t, n, mask)));
    }
    pool
}

/// Density reduction by pairwise row additions; the result keeps one
/// representative per cyclic class.
pub fn reduce_density(h_r: &BitMatrix) -> Result<CandidatePool> {
    let n = h_r.cols();
    require_u128(n)?;
    let rows: Vec<u128> = h_r
        .iter_rows()
        .filter(|r| !r.is_zero())
        .map(BitVector::as_u128)
        .collect();
    Ok(CandidatePool::from_set(density_sweep(&rows, n, false), n))
}

/// Q passes of the density search with all cyclic shifts of the partner row
/// admitted as candidates. The minimum row weight never increases.
pub fn cyclic_refine(pool: &CandidatePool, q_passes: usize) -> CandidatePool {
    let mut current = pool.clone();
    for _ in 0..q_passes {
        current = CandidatePool::from_set(density_sweep(&current.classes, current.n, true), current.n);
    }
    current
}

// ---------------------------------------------------------------------------
// Redundancy padding
// ---------------------------------------------------------------------------

/// Base matrix plus padding, with the base row count that the padding
/// formula used.
#[derive(Debug, Clone)]
pub struct PaddedPcm {
    pub matrix: BitMatrix,
    /// Rows in the deduplicated independent base H_r1.
    pub m_r1: usize,
}

/// Builds the padded matrix. The base H_r1 is a maximal linearly independent
/// subset drawn from the pool in ascending (weight, canonical form) order;
/// the beta * (M - M_r1) padding rows are copies of the base rows taken
/// heaviest-first, round-robin. Copies are then turned into cyclic shifts:
/// first whatever shifts complete the rank to M = N-K, then a distinct shift
/// for every remaining duplicate pattern. Shifting preserves row weight, so
/// the padding leaves the weight composition of the copy step intact.
pub fn pad_redundancy(pool: &CandidatePool, spec: &CodeSpec, beta: usize) -> Result<PaddedPcm> {
    let n = spec.n;
    let m_target = n - spec.k;
    if beta == 0 {
        return Err(Error::Parameter("beta must be >= 1".into()));
    }
    if pool.n != n {
        return Err(Error::DimensionMismatch(format!(
            "pool is over length {}, code over {}",
            pool.n, n
        )));
    }
    let mask = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };

    // the pool plus shifts must span the full dual space
    let mut span = RankBasis::with_bits(n);
    for &c in &pool.classes {
        for q in 0..n {
            span.add(rot(c, q, n, mask));
        }
    }
    if span.rank() < m_target {
        return Err(Error::Parameter(format!(
            "pool and its shifts have rank {} < {}; not a parity-check basis",
            span.rank(),
            m_target
        )));
    }

    // base: greedy maximal independent subset in pool order
    let mut basis = RankBasis::with_bits(n);
    let mut rows: Vec<u128> = Vec::new();
    for &c in &pool.classes {
        if basis.add(c) {
            rows.push(c);
        }
    }
    let m_r1 = rows.len();
    let budget = beta * m_target.saturating_sub(m_r1);

    // padding: copies of the base, heaviest row first, wrapping around
    for i in 0..budget {
        rows.push(rows[m_r1 - 1 - i % m_r1]);
    }
    debug_assert_eq!(rows.len(), m_r1 + beta * (m_target - m_r1));

    // replace copies with shifts until the rank reaches M; same-weight
    // substitutes keep the composition, the any-shift tier is a last resort
    for i in m_r1..rows.len() {
        if basis.rank() >= m_target {
            break;
        }
        let w = rows[i].count_ones();
        let same_weight = std::iter::once(rows[i])
            .chain(pool.classes.iter().copied().filter(|c| c.count_ones() == w));
        let any = pool.classes.iter().copied();
        let replacement = same_weight
            .chain(any)
            .flat_map(|c| (1..n).map(move |q| rot(c, q, n, mask)))
            .find(|&s| basis.would_grow(s));
        if let Some(s) = replacement {
            basis.add(s);
            rows[i] = s;
        }
    }
    debug_assert_eq!(basis.rank(), m_target);

    // distinct shifts for every remaining duplicate pattern; duplicates are
    // redundant rows, so swapping them for shifts cannot lower the rank
    let mut used: HashSet<u128> = HashSet::with_capacity(rows.len());
    for i in 0..rows.len() {
        if used.insert(rows[i]) {
            continue;
        }
        let w = rows[i].count_ones();
        let fresh = std::iter::once(rows[i])
            .chain(pool.classes.iter().copied().filter(|c| c.count_ones() == w))
            .flat_map(|c| (1..n).map(move |q| rot(c, q, n, mask)))
            .find(|s| !used.contains(s));
        match fresh {
            Some(s) => {
                used.insert(s);
                rows[i] = s;
            }
            None => {
                let needed = rows[i..].iter().filter(|r| used.contains(r)).count();
                return Err(Error::PoolExhausted { needed, available: 0 });
            }
        }
    }

    let bit_rows = rows.into_iter().map(|x| BitVector::from_u128(x, n)).collect();
    Ok(PaddedPcm {
        matrix: BitMatrix::from_rows(bit_rows),
        m_r1,
    })
}

// ---------------------------------------------------------------------------
// Simulated annealing over row shifts
// ---------------------------------------------------------------------------

/// Annealing schedule and loss weights. `None` fields derive their defaults
/// from the starting matrix: w_v = cycles0 / N (both loss terms start at
/// comparable magnitude) and T0 = 0.05 * loss0.
#[derive(Clone, Debug)]
pub struct AnnealConfig {
    /// Steps per restart; `None` means 200 * (row count).
    pub max_steps: Option<usize>,
    /// Initial temperature; `None` means 0.05 * initial loss.
    pub t0: Option<f64>,
    /// Geometric cooling factor per step.
    pub gamma: f64,
    /// Loss weight on the length-4 cycle count.
    pub w_c: f64,
    /// Loss weight on column-weight variance; `None` derives it.
    pub w_v: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            max_steps: None,
            t0: None,
            gamma: 0.999,
            w_c: 1.0,
            w_v: None,
            restarts: 10,
            seed: 1,
        }
    }
}

struct AnnealState {
    rows: Vec<u128>,
    overlaps: Vec<u32>, // M x M pairwise support overlaps
    cycles: u64,
    involvement: Vec<u64>, // per-row length-4 cycle count
    col_weight: Vec<u32>,
    sum_sq: u64,
}

fn pairs(l: u64) -> u64 {
    l * l.saturating_sub(1) / 2
}

impl AnnealState {
    fn new(rows: Vec<u128>, n: usize) -> AnnealState {
        let m = rows.len();
        let mut overlaps = vec![0u32; m * m];
        let mut involvement = vec![0u64; m];
        let mut cycles = 0u64;
        for i in 0..m {
            for j in i + 1..m {
                let l = (rows[i] & rows[j]).count_ones();
                overlaps[i * m + j] = l;
                overlaps[j * m + i] = l;
                let p = pairs(l as u64);
                cycles += p;
                involvement[i] += p;
                involvement[j] += p;
            }
        }
        let mut col_weight = vec![0u32; n];
        for &r in &rows {
            let mut x = r;
            while x != 0 {
                col_weight[x.trailing_zeros() as usize] += 1;
                x &= x - 1;
            }
        }
        let sum_sq = col_weight.iter().map(|&w| (w as u64) * (w as u64)).sum();
        AnnealState { rows, overlaps, cycles, involvement, col_weight, sum_sq }
    }

    fn col_variance(&self, n: usize) -> f64 {
        let total: u64 = self.col_weight.iter().map(|&w| w as u64).sum();
        let mean = total as f64 / n as f64;
        self.sum_sq as f64 / n as f64 - mean * mean
    }
}

/// Shifts rows around to minimize `w_c * cycles + w_v * Var(column weight)`.
/// Each step samples a row with probability proportional to its length-4
/// cycle involvement, proposes a random cyclic shift of it, and applies the
/// Metropolis rule with a geometrically cooling temperature. Proposals that
/// would drop the matrix rank are rejected outright. Returns the best
/// (strictly lowest) loss matrix seen; with zero steps the input comes back
/// unchanged.
pub fn anneal_layout(m: &BitMatrix, cfg: &AnnealConfig) -> Result<BitMatrix> {
    let n = m.cols();
    require_u128(n)?;
    let mask = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let rows: Vec<u128> = m.iter_rows().map(BitVector::as_u128).collect();
    let m_rows = rows.len();
    let steps = cfg.max_steps.unwrap_or(200 * m_rows);
    let rank0 = rank_of(&rows, n);

    let init = AnnealState::new(rows.clone(), n);
    let w_v = cfg.w_v.unwrap_or(init.cycles as f64 / n as f64);
    let loss0 = cfg.w_c * init.cycles as f64 + w_v * init.col_variance(n);
    let t0 = cfg.t0.unwrap_or(0.05 * loss0);

    let run_restart = |restart: usize| -> (f64, Vec<u128>) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64);
        let mut st = AnnealState::new(rows.clone(), n);
        let mut temp = t0;
        let mut best_rows = st.rows.clone();
        let mut best_loss = loss0;
        let mut scratch_overlap = vec![0u32; m_rows];
        for _ in 0..steps {
            // pick a row weighted by its cycle involvement
            let total: u64 = st.involvement.iter().sum();
            let i = if total == 0 {
                rng.gen_range(0..m_rows)
            } else {
                let mut ticket = rng.gen_range(0..total);
                let mut idx = 0;
                for (j, &inv) in st.involvement.iter().enumerate() {
                    if ticket < inv {
                        idx = j;
                        break;
                    }
                    ticket -= inv;
                }
                idx
            };
            let q = rng.gen_range(1..n);
            let candidate = rot(st.rows[i], q, n, mask);

            let mut delta_cycles = 0i64;
            for j in 0..m_rows {
                if j == i {
                    scratch_overlap[j] = 0;
                    continue;
                }
                let l_new = (candidate & st.rows[j]).count_ones();
                scratch_overlap[j] = l_new;
                delta_cycles +=
                    pairs(l_new as u64) as i64 - pairs(st.overlaps[i * m_rows + j] as u64) as i64;
            }
            let mut delta_sum_sq = 0i64;
            let mut changed = st.rows[i] ^ candidate;
            while changed != 0 {
                let col = changed.trailing_zeros() as usize;
                changed &= changed - 1;
                let w = st.col_weight[col] as i64;
                if candidate >> col & 1 == 1 {
                    delta_sum_sq += 2 * w + 1; // gains a bit
                } else {
                    delta_sum_sq += -2 * w + 1; // loses a bit
                }
            }
            let delta_loss =
                cfg.w_c * delta_cycles as f64 + w_v * delta_sum_sq as f64 / n as f64;

            let accept = if delta_loss < 0.0 {
                true
            } else if temp > 0.0 {
                rng.gen::<f64>() < (-delta_loss / temp).exp()
            } else {
                false
            };
            temp *= cfg.gamma;
            if !accept {
                continue;
            }
            // never let the matrix stop being a parity-check basis
            let old = st.rows[i];
            st.rows[i] = candidate;
            if rank_of(&st.rows, n) < rank0 {
                st.rows[i] = old;
                continue;
            }
            for j in 0..m_rows {
                if j == i {
                    continue;
                }
                let l_old = st.overlaps[i * m_rows + j] as u64;
                let l_new = scratch_overlap[j];
                st.overlaps[i * m_rows + j] = l_new;
                st.overlaps[j * m_rows + i] = l_new;
                let d = pairs(l_new as u64) as i64 - pairs(l_old) as i64;
                st.involvement[i] = (st.involvement[i] as i64 + d) as u64;
                st.involvement[j] = (st.involvement[j] as i64 + d) as u64;
            }
            st.cycles = (st.cycles as i64 + delta_cycles) as u64;
            let mut changed = old ^ candidate;
            while changed != 0 {
                let col = changed.trailing_zeros() as usize;
                changed &= changed - 1;
                if candidate >> col & 1 == 1 {
                    st.col_weight[col] += 1;
                } else {
                    st.col_weight[col] -= 1;
                }
            }
            st.sum_sq = (st.sum_sq as i64 + delta_sum_sq) as u64;

            let loss = cfg.w_c * st.cycles as f64 + w_v * st.col_variance(n);
            if loss < best_loss {
                best_loss = loss;
                best_rows.clone_from(&st.rows);
            }
        }
        (best_loss, best_rows)
    };

    let results: Vec<(f64, Vec<u128>)> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(run_restart)
        .collect();
    // merge by loss, then by restart index (earliest wins ties)
    let best = results
        .into_iter()
        .enumerate()
        .min_by(|(ia, (la, _)), (ib, (lb, _))| la.total_cmp(lb).then(ia.cmp(ib)))
        .map(|(_, (_, rows))| rows)
        .expect("at least one restart");
    Ok(BitMatrix::from_rows(
        best.into_iter().map(|x| BitVector::from_u128(x, n)).collect(),
    ))
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// An optimized parity-check matrix with its construction parameters and
/// final weight statistics.
pub struct OptimizedPcm {
    pub spec: CodeSpec,
    pub matrix: BitMatrix,
    pub beta: usize,
    /// Row count of the independent low-density base.
    pub m_r1: usize,
    pub profile: WeightProfile,
}

/// Runs the whole pipeline for a code. `q_passes` is the cyclic refinement
/// depth; every fixture in the test suite uses 4.
pub fn build_optimized_pcm(
    spec: &CodeSpec,
    beta: usize,
    q_passes: usize,
    cfg: &AnnealConfig,
) -> Result<OptimizedPcm> {
    let h = standard_pcm(spec);
    let (echelon, _) = h.row_echelon();
    let pool = reduce_density(&echelon)?;
    let pool = cyclic_refine(&pool, q_passes);
    let padded = pad_redundancy(&pool, spec, beta)?;
    let matrix = anneal_layout(&padded.matrix, cfg)?;

    let profile = matrix.weight_profile();
    assert_eq!(profile.rank, spec.n - spec.k, "pipeline must preserve rank");
    let gen = generator_matrix(spec);
    for row in matrix.iter_rows() {
        for basis_cw in gen.iter_rows() {
            assert_eq!(row.overlap(basis_cw) % 2, 0, "row left the dual code");
        }
    }
    Ok(OptimizedPcm {
        spec: spec.clone(),
        matrix,
        beta,
        m_r1: padded.m_r1,
        profile,
    })
}

// ---------------------------------------------------------------------------
// Rank deficiency report
// ---------------------------------------------------------------------------

/// Whether a full-rank matrix could be composed of uniform minimum-weight
/// rows: takes the matrix rows at the minimum observed weight, adds all
/// their cyclic shifts, and checks the GF(2) rank against N-K. The answer
/// reflects the rows this pipeline found, not proven-minimum dual codewords.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct RankDeficiencyReport {
    pub min_weight: usize,
    pub rank_of_min_weight_rows: usize,
    pub full_rank_achievable: bool,
}

pub fn rank_deficiency_report(pcm: &OptimizedPcm) -> RankDeficiencyReport {
    let n = pcm.spec.n;
    let m_target = n - pcm.spec.k;
    let mask = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let min_weight = pcm
        .matrix
        .iter_rows()
        .map(BitVector::weight)
        .min()
        .unwrap_or(0);
    let mut basis = RankBasis::with_bits(n);
    for row in pcm.matrix.iter_rows() {
        if row.weight() == min_weight {
            let x = row.as_u128();
            for q in 0..n {
                basis.add(rot(x, q, n, mask));
            }
        }
    }
    let rank = basis.rank();
    RankDeficiencyReport {
        min_weight,
        rank_of_min_weight_rows: rank,
        full_rank_achievable: rank == m_target,
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
