//! AWGN/BPSK Monte-Carlo engine: frame generation, per-SNR error tallies,
//! stopping rules, and CSV emission. Frames decode in parallel but are
//! tallied in frame order, so every figure is reproducible bit-for-bit
//! regardless of worker count or batch size.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bch::{generator_encode, CodeSpec};
use crate::gf2::BitVector;
use crate::hybrid::HybridDecoder;
use crate::nms::{llr_init, DecodeOutcome, DecodeStage, LlrFrame, NmsDecoder};
use crate::osd::{osd_decode, OsdConfig};
use crate::{Error, Result};

/// LLR initialization assumes this noise variance instead of the channel's
/// true value; min-sum decisions are invariant to the positive scaling, so
/// the decoder genuinely runs blind to the actual SNR.
pub const DECODER_FACING_SIGMA_SQ: f64 = 2.0;

const BATCH: usize = 512;

/// Noise variance for a given Eb/N0 in dB at code rate R under BPSK:
/// sigma^2 = 1 / (2 R 10^(EbN0/10)).
pub fn sigma_sq_for(eb_n0_db: f64, rate: f64) -> f64 {
    debug_assert!(rate > 0.0 && rate < 1.0);
    1.0 / (2.0 * rate * 10f64.powf(eb_n0_db / 10.0))
}

/// One simulated operating point of the channel.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelConfig {
    pub eb_n0_db: f64,
    pub rate: f64,
    pub sigma_sq: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(eb_n0_db: f64, rate: f64, seed: u64) -> Result<ChannelConfig> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::Parameter(format!(
                "code rate {rate} outside (0, 1)"
            )));
        }
        if !eb_n0_db.is_finite() {
            return Err(Error::Parameter("Eb/N0 must be finite".into()));
        }
        Ok(ChannelConfig {
            eb_n0_db,
            rate,
            sigma_sq: sigma_sq_for(eb_n0_db, rate),
            seed,
        })
    }
}

/// Halt after this many frame errors or this many frames, whichever first.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StopRule {
    pub min_frame_errors: usize,
    pub max_frames: usize,
}

impl Default for StopRule {
    fn default() -> StopRule {
        StopRule {
            min_frame_errors: 100,
            max_frames: 1_000_000,
        }
    }
}

/// BPSK-modulates a codeword and adds white Gaussian noise.
pub fn transmit_frame(c: &BitVector, ch: &ChannelConfig, rng: &mut impl Rng) -> Vec<f64> {
    let noise = Normal::new(0.0, ch.sigma_sq.sqrt()).expect("finite sigma");
    (0..c.len())
        .map(|i| {
            let s = if c.get(i) { -1.0 } else { 1.0 };
            s + noise.sample(rng)
        })
        .collect()
}

/// How a decoded frame relates to what was sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Correct,
    /// Output fails the parity checks; the receiver knows it lost the frame.
    DetectedFailure,
    /// Output is a valid codeword, just not the transmitted one.
    UndetectedError,
}

pub fn classify_outcome(decoded: &DecodeOutcome, transmitted: &BitVector) -> Outcome {
    if decoded.hard_decision == *transmitted {
        Outcome::Correct
    } else if decoded.syndrome_pass {
        Outcome::UndetectedError
    } else {
        Outcome::DetectedFailure
    }
}

/// Any of the decoders the harness can drive.
#[derive(Debug, Clone)]
pub enum Decoder {
    Nms(NmsDecoder),
    EnhancedNms(NmsDecoder),
    Osd(OsdConfig),
    Hybrid(HybridDecoder),
}

impl Decoder {
    pub fn label(&self) -> &'static str {
        match self {
            Decoder::Nms(_) => "nms",
            Decoder::EnhancedNms(_) => "enhanced-nms",
            Decoder::Osd(_) => "osd",
            Decoder::Hybrid(_) => "hybrid",
        }
    }

    fn run(&self, y: &[f64], llr: &LlrFrame, rng: &mut ChaCha8Rng) -> DecodeOutcome {
        match self {
            Decoder::Nms(d) => d.decode(llr),
            Decoder::EnhancedNms(d) => d.decode_enhanced(llr, rng),
            Decoder::Osd(cfg) => osd_decode(y, llr, cfg),
            Decoder::Hybrid(h) => h.decode(y, llr, rng),
        }
    }
}

/// Tallies for one SNR point.
#[derive(Debug, Clone, Serialize)]
pub struct SimPointReport {
    pub eb_n0_db: f64,
    pub frames: usize,
    pub bit_errors: usize,
    pub frame_errors: usize,
    pub undetected_frame_errors: usize,
    pub undetected_bit_errors: usize,
    pub fer: f64,
    pub ber: f64,
    pub undetected_ber: f64,
    pub mean_iterations: f64,
    /// Fraction of frames the order-p search stage handled.
    pub osd_rate: f64,
    pub wall_time: f64,
    pub seed: u64,
}

struct FrameStat {
    outcome: Outcome,
    bit_errors: usize,
    iterations: usize,
    used_osd: bool,
}

fn run_point_impl(
    dec: &Decoder,
    spec: &CodeSpec,
    ch: &ChannelConfig,
    stop: &StopRule,
    all_zero: bool,
) -> SimPointReport {
    let t0 = Instant::now();
    let n = spec.n;
    let mut frames = 0usize;
    let mut bit_errors = 0usize;
    let mut frame_errors = 0usize;
    let mut und_frames = 0usize;
    let mut und_bits = 0usize;
    let mut iter_sum = 0usize;
    let mut osd_frames = 0usize;
    'outer: while frames < stop.max_frames && frame_errors < stop.min_frame_errors {
        let batch = BATCH.min(stop.max_frames - frames);
        let stats: Vec<FrameStat> = (frames..frames + batch)
            .into_par_iter()
            .map(|f| {
                let mut rng = ChaCha8Rng::seed_from_u64(ch.seed);
                rng.set_stream(f as u64);
                let c = if all_zero {
                    BitVector::zeros(n)
                } else {
                    let msg = BitVector::from_bits(
                        &(0..spec.k).map(|_| rng.gen_range(0..2u8)).collect::<Vec<_>>(),
                    );
                    generator_encode(spec, &msg).expect("length checked")
                };
                let y = transmit_frame(&c, ch, &mut rng);
                let llr = llr_init(&y, DECODER_FACING_SIGMA_SQ).expect("positive variance");
                let out = dec.run(&y, &llr, &mut rng);
                let outcome = classify_outcome(&out, &c);
                let mut diff = out.hard_decision.clone();
                diff.xor_assign(&c);
                FrameStat {
                    outcome,
                    bit_errors: diff.weight(),
                    iterations: out.iterations_used,
                    used_osd: out.stage == DecodeStage::Osd,
                }
            })
            .collect();
        for st in stats {
            frames += 1;
            bit_errors += st.bit_errors;
            iter_sum += st.iterations;
            osd_frames += usize::from(st.used_osd);
            match st.outcome {
                Outcome::Correct => {}
                Outcome::DetectedFailure => frame_errors += 1,
                Outcome::UndetectedError => {
                    frame_errors += 1;
                    und_frames += 1;
                    und_bits += st.bit_errors;
                }
            }
            if frame_errors >= stop.min_frame_errors {
                break 'outer;
            }
        }
    }
    let nf = frames as f64;
    let bits = nf * n as f64;
    SimPointReport {
        eb_n0_db: ch.eb_n0_db,
        frames,
        bit_errors,
        frame_errors,
        undetected_frame_errors: und_frames,
        undetected_bit_errors: und_bits,
        fer: frame_errors as f64 / nf,
        ber: bit_errors as f64 / bits,
        undetected_ber: und_bits as f64 / bits,
        mean_iterations: iter_sum as f64 / nf,
        osd_rate: osd_frames as f64 / nf,
        wall_time: t0.elapsed().as_secs_f64(),
        seed: ch.seed,
    }
}

/// Simulates one SNR point with random messages until the stop rule fires.
pub fn run_point(
    dec: &Decoder,
    spec: &CodeSpec,
    ch: &ChannelConfig,
    stop: &StopRule,
) -> SimPointReport {
    run_point_impl(dec, spec, ch, stop, false)
}

/// Same engine pinned to the all-zero codeword; exists so the symmetry
/// between zero-frame and random-frame statistics stays checkable.
pub fn run_point_all_zero(
    dec: &Decoder,
    spec: &CodeSpec,
    ch: &ChannelConfig,
    stop: &StopRule,
) -> SimPointReport {
    run_point_impl(dec, spec, ch, stop, true)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for sweep point `index` from a master seed.
pub fn point_seed(master_seed: u64, index: usize) -> u64 {
    splitmix64(master_seed ^ splitmix64(index as u64 + 1))
}

/// Runs one report per SNR value; point seeds derive from the master seed by
/// counter, so a sweep is reproducible as a whole or point by point.
pub fn sweep(
    dec: &Decoder,
    spec: &CodeSpec,
    snrs_db: &[f64],
    stop: &StopRule,
    master_seed: u64,
) -> Result<Vec<SimPointReport>> {
    if snrs_db.is_empty() {
        return Err(Error::Parameter("SNR list is empty".into()));
    }
    let rate = spec.k as f64 / spec.n as f64;
    snrs_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let ch = ChannelConfig::new(snr, rate, point_seed(master_seed, i))?;
            Ok(run_point(dec, spec, &ch, stop))
        })
        .collect()
}

/// Run-level metadata for CSV rows.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub decoder: String,
    pub beta: u32,
    pub alpha: f64,
    pub im: usize,
}

pub const CSV_HEADER: &str =
    "code,N,K,decoder,beta,alpha,Im,ebn0_db,frames,fer,ber,undetected_ber,mean_iters,osd_rate,seed";

/// Renders reports as CSV, one row per SNR point. Timing is deliberately
/// excluded so output is byte-identical under seed replay.
pub fn to_csv(meta: &RunMeta, reports: &[SimPointReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            meta.code,
            meta.n,
            meta.k,
            meta.decoder,
            meta.beta,
            meta.alpha,
            meta.im,
            r.eb_n0_db,
            r.frames,
            r.fer,
            r.ber,
            r.undetected_ber,
            r.mean_iterations,
            r.osd_rate,
            r.seed,
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bch::{build_code, standard_pcm};
    use crate::nms::{DilationConfig, Family, NmsConfig};

    fn small_enhanced(alpha: f64, iters: usize) -> Decoder {
        let spec = build_code(4, 7).unwrap();
        let dil = DilationConfig {
            d_p: 5,
            s_values: vec![0, 1, 2],
            families: vec![Family::Identity, Family::Interleave, Family::Frobenius],
            offset_override: None,
        };
        Decoder::EnhancedNms(
            NmsDecoder::new(standard_pcm(&spec), NmsConfig::new(alpha, iters, dil)).unwrap(),
        )
    }

    fn spec15() -> CodeSpec {
        build_code(4, 7).unwrap()
    }

    #[test]
    fn test_1_sigma_sq_formula() {
        let s = sigma_sq_for(3.0, 45.0 / 63.0);
        assert!((s - 0.3509).abs() < 5e-4, "got {s}");
        assert!(sigma_sq_for(0.0, 0.5) > sigma_sq_for(1.0, 0.5));
        assert!(ChannelConfig::new(3.0, 1.5, 0).is_err());
        assert!(ChannelConfig::new(f64::NAN, 0.5, 0).is_err());
    }

    #[test]
    fn test_2_transmit_statistics() {
        let ch = ChannelConfig::new(3.0, 7.0 / 15.0, 99).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let c = BitVector::zeros(15);
        let mut sum = 0.0;
        let mut sq = 0.0;
        let samples = 1_000_000;
        for _ in 0..samples / 15 {
            for v in transmit_frame(&c, &ch, &mut rng) {
                let nval = v - 1.0;
                sum += nval;
                sq += nval * nval;
            }
        }
        let m = sum / samples as f64;
        let var = sq / samples as f64 - m * m;
        assert!(
            (var - ch.sigma_sq).abs() / ch.sigma_sq < 0.01,
            "variance {var} vs {}",
            ch.sigma_sq
        );
        // vanishing-noise limit reproduces the modulated symbols
        let quiet = ChannelConfig::new(120.0, 0.5, 1).unwrap();
        let mut c = BitVector::zeros(4);
        c.set(2, true);
        let y = transmit_frame(&c, &quiet, &mut rng);
        for (i, v) in y.iter().enumerate() {
            let s = if c.get(i) { -1.0 } else { 1.0 };
            assert!((v - s).abs() < 1e-4);
        }
    }

    #[test]
    fn test_3_classification() {
        let spec = spec15();
        let c = generator_encode(&spec, &BitVector::from_bits(&[1, 0, 0, 1, 1, 0, 1])).unwrap();
        let mk = |hard: BitVector, pass: bool| DecodeOutcome {
            hard_decision: hard,
            iterations_used: 1,
            syndrome_pass: pass,
            stage: DecodeStage::Nms,
            posterior: LlrFrame {
                values: vec![0.0; 15],
                sigma_sq: 2.0,
            },
        };
        assert_eq!(classify_outcome(&mk(c.clone(), true), &c), Outcome::Correct);
        let other = generator_encode(&spec, &BitVector::from_bits(&[0, 1, 0, 1, 1, 0, 1])).unwrap();
        assert_eq!(
            classify_outcome(&mk(other, true), &c),
            Outcome::UndetectedError
        );
        let mut garbled = c.clone();
        garbled.set(0, !garbled.get(0));
        assert_eq!(
            classify_outcome(&mk(garbled, false), &c),
            Outcome::DetectedFailure
        );
    }

    #[test]
    fn test_4_extreme_snr_limits() {
        let spec = spec15();
        let dec = small_enhanced(0.7, 4);
        let quiet = ChannelConfig::new(40.0, 7.0 / 15.0, 5).unwrap();
        let r = run_point(&dec, &spec, &quiet, &StopRule { min_frame_errors: 10, max_frames: 200 });
        assert_eq!(r.fer, 0.0);
        assert_eq!(r.mean_iterations, 1.0);
        assert_eq!(r.frames, 200);
        let loud = ChannelConfig::new(-20.0, 7.0 / 15.0, 6).unwrap();
        let r = run_point(&dec, &spec, &loud, &StopRule { min_frame_errors: 1000, max_frames: 300 });
        assert!(r.fer > 0.95, "fer {}", r.fer);
    }

    #[test]
    fn test_5_deterministic_across_worker_counts() {
        let spec = spec15();
        let dec = small_enhanced(0.7, 3);
        let ch = ChannelConfig::new(2.0, 7.0 / 15.0, 42).unwrap();
        let stop = StopRule { min_frame_errors: 60, max_frames: 5000 };
        let run = || run_point(&dec, &spec, &ch, &stop);
        let base = run();
        for workers in [1usize, 3] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            let r = pool.install(run);
            assert_eq!(r.frames, base.frames);
            assert_eq!(r.frame_errors, base.frame_errors);
            assert_eq!(r.bit_errors, base.bit_errors);
            assert_eq!(r.undetected_bit_errors, base.undetected_bit_errors);
            assert_eq!(r.mean_iterations, base.mean_iterations);
        }
    }

    #[test]
    fn test_6_tally_identities() {
        let spec = spec15();
        let dec = small_enhanced(0.7, 3);
        let ch = ChannelConfig::new(1.0, 7.0 / 15.0, 7).unwrap();
        let stop = StopRule { min_frame_errors: 80, max_frames: 4000 };
        let r = run_point(&dec, &spec, &ch, &stop);
        assert!(r.frame_errors >= 80 || r.frames == 4000);
        assert!(r.undetected_frame_errors <= r.frame_errors);
        assert!(r.undetected_bit_errors <= r.bit_errors);
        assert_eq!(r.fer, r.frame_errors as f64 / r.frames as f64);
        assert_eq!(r.ber, r.bit_errors as f64 / (r.frames * 15) as f64);
        assert_eq!(
            r.undetected_ber,
            r.undetected_bit_errors as f64 / (r.frames * 15) as f64
        );
        assert!(r.osd_rate == 0.0, "no fallback stage in this decoder");
        assert!(r.mean_iterations <= 3.0);
    }

    #[test]
    fn test_7_csv_replay_and_header() {
        let spec = spec15();
        let dec = small_enhanced(0.7, 2);
        let stop = StopRule { min_frame_errors: 30, max_frames: 2000 };
        let meta = RunMeta {
            code: "bch".into(),
            n: 15,
            k: 7,
            decoder: dec.label().into(),
            beta: 0,
            alpha: 0.7,
            im: 2,
            };
        let reports = sweep(&dec, &spec, &[1.0, 2.0], &stop, 11).unwrap();
        let a = to_csv(&meta, &reports);
        let reports = sweep(&dec, &spec, &[1.0, 2.0], &stop, 11).unwrap();
        let b = to_csv(&meta, &reports);
        assert_eq!(a, b, "CSV must replay byte-identically");
        assert!(a.starts_with(CSV_HEADER));
        assert_eq!(a.lines().count(), 3);
        let row = a.lines().nth(1).unwrap();
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("bch,15,7,enhanced-nms,"));
    }

    #[test]
    fn test_8_sweep_single_point_matches_run_point() {
        let spec = spec15();
        let dec = small_enhanced(0.7, 2);
        let stop = StopRule { min_frame_errors: 25, max_frames: 1500 };
        let s = sweep(&dec, &spec, &[2.5], &stop, 77).unwrap();
        let ch = ChannelConfig::new(2.5, 7.0 / 15.0, point_seed(77, 0)).unwrap();
        let direct = run_point(&dec, &spec, &ch, &stop);
        assert_eq!(s[0].frames, direct.frames);
        assert_eq!(s[0].frame_errors, direct.frame_errors);
        assert!(sweep(&dec, &spec, &[], &stop, 1).is_err());
    }

    #[test]
    fn test_9_fer_decreases_with_snr() {
        let spec = spec15();
        let dec = small_enhanced(0.7, 4);
        let stop = StopRule { min_frame_errors: 60, max_frames: 20000 };
        let r = sweep(&dec, &spec, &[0.0, 4.0], &stop, 13).unwrap();
        assert!(r[0].fer > r[1].fer);
    }

    #[test]
    fn test_10_zero_and_random_frames_statistically_equal() {
        let spec = spec15();
        let dec = small_enhanced(0.7, 3);
        let ch = ChannelConfig::new(2.0, 7.0 / 15.0, 1234).unwrap();
        let stop = StopRule { min_frame_errors: usize::MAX, max_frames: 6000 };
        let a = run_point(&dec, &spec, &ch, &stop);
        let b = run_point_all_zero(&dec, &spec, &ch, &stop);
        let (p1, p2) = (a.fer, b.fer);
        let pooled = (a.frame_errors + b.frame_errors) as f64 / (a.frames + b.frames) as f64;
        let se = (pooled * (1.0 - pooled) * (2.0 / a.frames as f64)).sqrt();
        assert!(
            (p1 - p2).abs() <= 1.96 * se,
            "zero-codeword fer {p2} vs random fer {p1} (se {se})"
        );
    }

    #[test]
    fn test_11_hybrid_never_worse_with_common_randomness() {
        let spec = spec15();
        let dil = DilationConfig {
            d_p: 5,
            s_values: vec![0, 1, 2],
            families: vec![Family::Identity, Family::Interleave, Family::Frobenius],
            offset_override: None,
        };
        let nms =
            NmsDecoder::new(standard_pcm(&spec), NmsConfig::new(0.7, 3, dil)).unwrap();
        let osd = OsdConfig::new(2, spec.clone(), standard_pcm(&spec)).unwrap();
        let hybrid = Decoder::Hybrid(HybridDecoder::new(nms.clone(), osd, true).unwrap());
        let plain = Decoder::EnhancedNms(nms);
        let ch = ChannelConfig::new(2.0, 7.0 / 15.0, 4242).unwrap();
        let stop = StopRule { min_frame_errors: usize::MAX, max_frames: 4000 };
        let h = run_point(&hybrid, &spec, &ch, &stop);
        let p = run_point(&plain, &spec, &ch, &stop);
        assert!(h.fer <= p.fer, "hybrid {} vs nms {}", h.fer, p.fer);
        // the fallback rate equals the first stage's detected-failure rate
        let nms_detected = p.frame_errors - p.undetected_frame_errors;
        assert_eq!(h.osd_rate, nms_detected as f64 / p.frames as f64);
    }
}
