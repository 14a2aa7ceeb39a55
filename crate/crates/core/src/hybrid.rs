//! Two-stage decoding: the dilated min-sum decoder runs first, and only
//! frames it cannot validate are handed to the ordered-statistics stage.
//! Also carries the iteration-product complexity accounting used to compare
//! decoder settings.

use rand::Rng;

use crate::nms::{DecodeOutcome, NmsDecoder};
use crate::osd::{osd_decode, OsdConfig};
use crate::{Error, Result};

/// First-stage decoder plus the fallback search stage.
#[derive(Debug, Clone)]
pub struct HybridDecoder {
    pub nms: NmsDecoder,
    pub osd: OsdConfig,
    pub osd_enabled: bool,
}

impl HybridDecoder {
    pub fn new(nms: NmsDecoder, osd: OsdConfig, osd_enabled: bool) -> Result<HybridDecoder> {
        if nms.pcm().cols() != osd.code.n {
            return Err(Error::DimensionMismatch(format!(
                "stage lengths disagree: {} vs {}",
                nms.pcm().cols(),
                osd.code.n
            )));
        }
        Ok(HybridDecoder {
            nms,
            osd,
            osd_enabled,
        })
    }

    /// Runs the dilated decoder; on a syndrome failure (and when enabled)
    /// re-decodes the original channel observation with the order-p search,
    /// whose output is always a valid codeword. `iterations_used` keeps the
    /// message-passing count either way.
    pub fn decode(
        &self,
        y: &[f64],
        llr: &crate::nms::LlrFrame,
        rng: &mut impl Rng,
    ) -> DecodeOutcome {
        let first = self.nms.decode_enhanced(llr, rng);
        if first.syndrome_pass || !self.osd_enabled {
            return first;
        }
        let mut second = osd_decode(y, llr, &self.osd);
        second.iterations_used = first.iterations_used;
        second
    }
}

/// Decoder settings whose product models per-frame work: permuted copies per
/// iteration x iterations x parallel branches x parity-check rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityEntry {
    pub name: String,
    pub autos_per_iter: u64,
    pub iters: u64,
    pub parallel_branches: u64,
    pub pcm_rows: u64,
}

impl ComplexityEntry {
    pub fn new(
        name: &str,
        autos_per_iter: u64,
        iters: u64,
        parallel_branches: u64,
        pcm_rows: u64,
    ) -> Result<ComplexityEntry> {
        if autos_per_iter == 0 || iters == 0 || parallel_branches == 0 || pcm_rows == 0 {
            return Err(Error::Parameter(
                "complexity entry fields must all be positive".into(),
            ));
        }
        Ok(ComplexityEntry {
            name: name.to_string(),
            autos_per_iter,
            iters,
            parallel_branches,
            pcm_rows,
        })
    }

    pub fn product(&self) -> u64 {
        self.autos_per_iter * self.iters * self.parallel_branches * self.pcm_rows
    }
}

/// Work of `e` relative to `baseline`, as the ratio of their setting
/// products.
pub fn complexity_ratio(e: &ComplexityEntry, baseline: &ComplexityEntry) -> f64 {
    e.product() as f64 / baseline.product() as f64
}

/// Expected per-frame cost of a two-stage decoder whose second stage runs on
/// the fraction f1 of frames the first stage fails.
pub fn hybrid_cost(c1: f64, c2: f64, f1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f1) {
        return Err(Error::Parameter(format!(
            "failure fraction {f1} outside [0, 1]"
        )));
    }
    if c1 < 0.0 || c2 < 0.0 {
        return Err(Error::Parameter("costs must be non-negative".into()));
    }
    Ok(c1 + f1 * c2)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
