//! BCH code construction and code automorphisms.
//!
//! Builds narrow-sense binary BCH codes from first principles: GF(2^m)
//! log/antilog tables, cyclotomic cosets, minimal polynomials, the generator
//! polynomial g(x) as their least common multiple, and the parity polynomial
//! h(x) = (x^N + 1) / g(x). The standard parity-check matrix is the
//! (N-K) x N staircase of reversed h, and the permutations that the dilated
//! decoder relies on (interleaving, Frobenius doubling, cyclic shifts) are
//! provided with verification helpers.

use rand::Rng;
use std::fmt;
use std::str::FromStr;

use crate::gf2::{BitMatrix, BitVector};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// GF(2^m)
// ---------------------------------------------------------------------------

/// Primitive polynomial per extension degree, low bit = constant term.
fn primitive_poly(m: u32) -> Option<u32> {
    match m {
        3 => Some(0b1011),      // x^3 + x + 1
        4 => Some(0b1_0011),    // x^4 + x + 1
        6 => Some(0b100_0011),  // x^6 + x + 1
        7 => Some(0b1000_1001), // x^7 + x^3 + 1
        _ => None,
    }
}

/// GF(2^m) in polynomial basis with log/antilog tables over a fixed
/// primitive element alpha.
pub struct FieldGF2m {
    pub m: u32,
    order: usize, // 2^m - 1
    log: Vec<u16>,
    antilog: Vec<u16>,
}

impl FieldGF2m {
    pub fn new(m: u32) -> Result<FieldGF2m> {
        let prim = primitive_poly(m).ok_or_else(|| {
            Error::Parameter(format!("no primitive polynomial wired for m={m}; supported m: 3, 4, 6, 7"))
        })?;
        let order = (1usize << m) - 1;
        let mut log = vec![0u16; order + 1];
        let mut antilog = vec![0u16; order];
        let mut x = 1u32;
        for e in 0..order {
            antilog[e] = x as u16;
            log[x as usize] = e as u16;
            x <<= 1;
            if x >> m & 1 == 1 {
                x ^= prim;
            }
        }
        debug_assert_eq!(x, 1, "alpha must have order 2^m - 1");
        Ok(FieldGF2m { m, order, log, antilog })
    }

    /// Multiplicative group order, 2^m - 1.
    pub fn order(&self) -> usize {
        self.order
    }

    /// alpha^e for any exponent.
    pub fn alpha_pow(&self, e: usize) -> u16 {
        self.antilog[e % self.order]
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        let e = self.log[a as usize] as usize + self.log[b as usize] as usize;
        self.antilog[e % self.order]
    }
}

/// Cyclotomic coset of `i` modulo 2^m - 1: orbit of doubling.
fn cyclotomic_coset(i: usize, order: usize) -> Vec<usize> {
    let mut coset = vec![i % order];
    let mut j = i * 2 % order;
    while j != coset[0] {
        coset.push(j);
        j = j * 2 % order;
    }
    coset
}

/// Minimal polynomial of alpha^i over GF(2): product of (x + alpha^j) for j
/// in the cyclotomic coset of i. The product collapses to 0/1 coefficients.
fn minimal_poly(field: &FieldGF2m, i: usize) -> Vec<u8> {
    let mut coeffs: Vec<u16> = vec![1];
    for &j in &cyclotomic_coset(i, field.order()) {
        let root = field.alpha_pow(j);
        let mut next = vec![0u16; coeffs.len() + 1];
        for (d, &c) in coeffs.iter().enumerate() {
            next[d + 1] ^= c;
            next[d] ^= field.mul(c, root);
        }
        coeffs = next;
    }
    coeffs
        .into_iter()
        .map(|c| {
            debug_assert!(c <= 1, "minimal polynomial left GF(2)");
            c as u8
        })
        .collect()
}

// ---------------------------------------------------------------------------
// GF(2) polynomials, little-endian coefficient vectors
// ---------------------------------------------------------------------------

fn poly_mul(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 1 {
            for (j, &bj) in b.iter().enumerate() {
                out[i + j] ^= bj;
            }
        }
    }
    out
}

fn poly_deg(a: &[u8]) -> usize {
    a.iter().rposition(|&c| c == 1).unwrap_or(0)
}

/// Quotient and remainder of a/b over GF(2). b must be non-zero.
fn poly_divmod(a: &[u8], b: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let db = poly_deg(b);
    let mut rem = a.to_vec();
    let mut quot = vec![0u8; a.len().max(db + 1)];
    loop {
        let dr = poly_deg(&rem);
        if rem[dr] == 0 || dr < db {
            break;
        }
        let shift = dr - db;
        quot[shift] = 1;
        for (j, &bj) in b.iter().enumerate() {
            rem[j + shift] ^= bj;
        }
    }
    (quot, rem)
}

fn poly_is_zero(a: &[u8]) -> bool {
    a.iter().all(|&c| c == 0)
}

// ---------------------------------------------------------------------------
// CodeSpec
// ---------------------------------------------------------------------------

/// A narrow-sense binary BCH code: block length N = 2^m - 1, dimension K,
/// generator polynomial g (degree N-K) and parity polynomial h (degree K)
/// with g(x) * h(x) = x^N + 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    pub n: usize,
    pub k: usize,
    pub m: u32,
    /// Coefficients of g(x), index = power, length N-K+1.
    pub g: BitVector,
    /// Coefficients of h(x), index = power, length K+1.
    pub h: BitVector,
    /// Largest t whose designed roots alpha^1..alpha^(2t) give deg(g) = N-K.
    pub designed_t: usize,
}

/// Builds the BCH code of length 2^m - 1 and dimension K, taking g(x) as the
/// least common multiple of the minimal polynomials of alpha^1..alpha^(2t)
/// for the largest t at which deg(g) lands exactly on N-K.
pub fn build_code(m: u32, k: usize) -> Result<CodeSpec> {
    let field = FieldGF2m::new(m)?;
    let n = field.order();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!("K={k} out of range for N={n}")));
    }
    let target = n - k;

    let mut coset_reps: Vec<usize> = Vec::new();
    let mut deg = 0usize;
    let mut best_t = None;
    let mut reachable = Vec::new(); // K values this m supports, for the error path
    let mut t = 0usize;
    while deg <= target {
        // Consecutive designed distances can add no new cosets; record each
        // dimension once.
        if deg > 0 && reachable.last() != Some(&(n - deg)) {
            reachable.push(n - deg);
        }
        if deg == target {
            best_t = Some(t);
        }
        t += 1;
        for root in [2 * t - 1, 2 * t] {
            let rep = *cyclotomic_coset(root, n).iter().min().unwrap();
            if !coset_reps.contains(&rep) {
                coset_reps.push(rep);
                deg += cyclotomic_coset(rep, n).len();
            }
        }
    }
    let Some(designed_t) = best_t else {
        // The search stops once dimensions drop below the request; finish the
        // sweep so the error names every K this length supports.
        loop {
            let k_here = n - deg;
            if reachable.last() != Some(&k_here) {
                reachable.push(k_here);
            }
            if k_here <= 1 {
                break;
            }
            t += 1;
            for root in [2 * t - 1, 2 * t] {
                let rep = *cyclotomic_coset(root, n).iter().min().unwrap();
                if !coset_reps.contains(&rep) {
                    coset_reps.push(rep);
                    deg += cyclotomic_coset(rep, n).len();
                }
            }
        }
        return Err(Error::Parameter(format!(
            "no narrow-sense BCH code with N={n}, K={k}; supported K for m={m}: {reachable:?}"
        )));
    };

    let mut g = vec![1u8];
    let mut cosets_used: Vec<usize> = Vec::new();
    for root in 1..=2 * designed_t {
        let rep = *cyclotomic_coset(root, n).iter().min().unwrap();
        if !cosets_used.contains(&rep) {
            cosets_used.push(rep);
            g = poly_mul(&g, &minimal_poly(&field, rep));
        }
    }
    g.truncate(poly_deg(&g) + 1);
    debug_assert_eq!(g.len(), target + 1);

    // h = (x^N + 1) / g, exact by construction
    let mut xn1 = vec![0u8; n + 1];
    xn1[0] = 1;
    xn1[n] = 1;
    let (h, rem) = poly_divmod(&xn1, &g);
    debug_assert!(poly_is_zero(&rem), "g(x) must divide x^N + 1");
    let h = h[..=k].to_vec();

    Ok(CodeSpec {
        n,
        k,
        m,
        g: BitVector::from_bits(&g),
        h: BitVector::from_bits(&h),
        designed_t,
    })
}

/// The (N-K) x N staircase parity-check matrix: row i carries the reversed
/// parity polynomial at offset i, i.e. H[i][i+j] = coeff of x^(K-j) in h.
pub fn standard_pcm(spec: &CodeSpec) -> BitMatrix {
    let (n, k) = (spec.n, spec.k);
    let mut h = BitMatrix::zeros(n - k, n);
    for i in 0..n - k {
        for j in 0..=k {
            if spec.h.get(k - j) {
                h.set(i, i + j, true);
            }
        }
    }
    h
}

/// The K x N generator matrix in non-systematic cyclic form: row i is g(x)
/// shifted up by i places.
pub fn generator_matrix(spec: &CodeSpec) -> BitMatrix {
    let (n, k) = (spec.n, spec.k);
    let mut g = BitMatrix::zeros(k, n);
    for i in 0..k {
        for j in 0..=(n - k) {
            if spec.g.get(j) {
                g.set(i, i + j, true);
            }
        }
    }
    g
}

/// c = m * G over GF(2). The result is a multiple of g(x), hence a codeword.
pub fn generator_encode(spec: &CodeSpec, msg: &BitVector) -> Result<BitVector> {
    if msg.len() != spec.k {
        return Err(Error::DimensionMismatch(format!(
            "message length {} != K={}",
            msg.len(),
            spec.k
        )));
    }
    let mut c = BitVector::zeros(spec.n);
    for i in msg.iter_ones() {
        for j in 0..=(spec.n - spec.k) {
            if spec.g.get(j) {
                let pos = i + j;
                let cur = c.get(pos);
                c.set(pos, !cur);
            }
        }
    }
    Ok(c)
}

impl fmt::Display for CodeSpec {
    /// "N K g=<hex> h=<hex>", hex little-endian in the coefficient index.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} g={:x} h={:x}",
            self.n,
            self.k,
            self.g.as_u128(),
            self.h.as_u128()
        )
    }
}

impl FromStr for CodeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<CodeSpec> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let bad = || Error::Format(format!("expected \"N K g=<hex> h=<hex>\", got {s:?}"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let n: usize = parts[0].parse().map_err(|_| bad())?;
        let k: usize = parts[1].parse().map_err(|_| bad())?;
        let g = u128::from_str_radix(parts[2].strip_prefix("g=").ok_or_else(bad)?, 16)
            .map_err(|_| bad())?;
        let h = u128::from_str_radix(parts[3].strip_prefix("h=").ok_or_else(bad)?, 16)
            .map_err(|_| bad())?;
        let m = (usize::BITS - n.leading_zeros()) as u32;
        let spec = build_code(m, k)?;
        if spec.n != n || spec.g.as_u128() != g || spec.h.as_u128() != h {
            return Err(Error::Format(format!(
                "polynomials in {s:?} do not match the ({n},{k}) construction"
            )));
        }
        Ok(spec)
    }
}

// ---------------------------------------------------------------------------
// Permutations
// ---------------------------------------------------------------------------

/// A permutation of {0..N-1}; `map[i]` is the destination of source index i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Permutation {
        Permutation { map: (0..n).collect() }
    }

    /// Builds a permutation from an explicit destination map; `map[i]` is
    /// where source index i lands. Rejects non-bijective maps.
    pub fn from_map(map: Vec<usize>) -> Result<Permutation> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &d in &map {
            if d >= n || seen[d] {
                return Err(Error::Parameter(format!(
                    "map is not a bijection on 0..{n}"
                )));
            }
            seen[d] = true;
        }
        Ok(Permutation { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Scatters: out[map[i]] = seq[i].
    pub fn apply<T: Clone + Default>(&self, seq: &[T]) -> Vec<T> {
        assert_eq!(seq.len(), self.map.len(), "sequence length != permutation length");
        let mut out = vec![T::default(); seq.len()];
        for (i, &d) in self.map.iter().enumerate() {
            out[d] = seq[i].clone();
        }
        out
    }

    pub fn apply_bits(&self, v: &BitVector) -> BitVector {
        assert_eq!(v.len(), self.map.len());
        let mut out = BitVector::zeros(v.len());
        for i in v.iter_ones() {
            out.set(self.map[i], true);
        }
        out
    }

    pub fn invert(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &d) in self.map.iter().enumerate() {
            inv[d] = i;
        }
        Permutation { map: inv }
    }

    pub fn destination_of(&self, i: usize) -> usize {
        self.map[i]
    }

    /// Returns self ∘ inner: `inner` is applied first, then `self`.
    pub fn compose(&self, inner: &Permutation) -> Permutation {
        assert_eq!(self.len(), inner.len(), "permutation length mismatch");
        Permutation {
            map: inner.map.iter().map(|&d| self.map[d]).collect(),
        }
    }
}

fn require_odd(n: usize) -> Result<()> {
    if n % 2 == 0 {
        return Err(Error::Parameter(format!(
            "length {n} is even; the doubling map is only a bijection for odd N"
        )));
    }
    Ok(())
}

/// Gathers even indices then odd indices: output position j receives input
/// index 2j mod N.
pub fn perm_interleave(n: usize) -> Result<Permutation> {
    require_odd(n)?;
    // source index 2j mod N lands at output position j
    let mut map = vec![0; n];
    for j in 0..n {
        map[2 * j % n] = j;
    }
    Ok(Permutation { map })
}

/// The doubling map i -> 2i mod N.
pub fn perm_frobenius(n: usize) -> Result<Permutation> {
    require_odd(n)?;
    Ok(Permutation {
        map: (0..n).map(|i| 2 * i % n).collect(),
    })
}

/// Cyclic shift by s*d_p + d_o positions.
pub fn perm_cyclic(n: usize, d_p: usize, s: usize, d_o: usize) -> Result<Permutation> {
    if s > 2 {
        return Err(Error::Parameter(format!("shift family index s={s} outside {{0,1,2}}")));
    }
    if d_o >= d_p {
        return Err(Error::Parameter(format!("offset d_o={d_o} must lie in [0, d_p={d_p})")));
    }
    let shift = (s * d_p + d_o) % n;
    Ok(Permutation {
        map: (0..n).map(|i| (i + shift) % n).collect(),
    })
}

/// Per-block-length dilation stride: N=63 uses 21, N=127 uses 42.
pub fn dilation_stride(n: usize) -> Result<usize> {
    match n {
        63 => Ok(21),
        127 => Ok(42),
        _ => Err(Error::Parameter(format!(
            "no dilation stride wired for N={n}; supply d_p explicitly"
        ))),
    }
}

/// Checks that `p` preserves the code: permuted random codewords must still
/// satisfy every parity check.
pub fn automorphism_verify(
    p: &Permutation,
    spec: &CodeSpec,
    trials: usize,
    rng: &mut impl Rng,
) -> bool {
    let pcm = standard_pcm(spec);
    for _ in 0..trials {
        let msg = BitVector::from_bits(
            &(0..spec.k).map(|_| rng.gen_range(0..2u8)).collect::<Vec<_>>(),
        );
        let c = generator_encode(spec, &msg).expect("length checked");
        let permuted = p.apply_bits(&c);
        if !pcm.syndrome_ok(&permuted).expect("length checked") {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
