//! bchdec: build and analyze parity-check matrices for short BCH codes,
//! calibrate the min-sum normalization factor, and run AWGN error-rate
//! sweeps that write plot-ready CSV.
//!
//! Every file-producing run also writes a `.manifest.json` recording the
//! resolved parameters, so any output can be reproduced bit-exactly. A
//! `--config FILE` of `key = value` lines (keys are the long flag names)
//! can supply any flag; explicit command-line flags win. The environment
//! variable `BCHDEC_SEED` provides the default seed.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bch_toolkit::bch::{build_code, standard_pcm, CodeSpec};
use bch_toolkit::hybrid::{complexity_ratio, hybrid_cost, ComplexityEntry, HybridDecoder};
use bch_toolkit::io::{read_alist, write_alist};
use bch_toolkit::nms::{calibrate_alpha, DilationConfig, Family, NmsConfig, NmsDecoder};
use bch_toolkit::osd::OsdConfig;
use bch_toolkit::pcmopt::{
    build_optimized_pcm, rank_deficiency_report, AnnealConfig, OptimizedPcm,
};
use bch_toolkit::sim::{sweep, Decoder, RunMeta, StopRule};
use bch_toolkit::{BitMatrix, Error as CoreError};

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "bchdec",
    version,
    about = "Parity-check matrix optimization and decoding toolkit for short BCH codes"
)]
struct Cli {
    /// Plain key=value file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Simulation worker threads (default: all cores). Results do not
    /// depend on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the optimized parity-check matrix H_o and write it as alist.
    BuildMatrix(BuildMatrixArgs),
    /// Run an AWGN Monte-Carlo sweep and emit CSV.
    Simulate(SimulateArgs),
    /// Report matrix attributes and/or decoder complexity ratios.
    Analyze(AnalyzeArgs),
    /// Grid-search the min-sum normalization factor at a training SNR.
    CalibrateAlpha(CalibrateAlphaArgs),
}

#[derive(Args)]
struct BuildMatrixArgs {
    /// Code as N,K (e.g. 63,45).
    #[arg(long)]
    code: String,
    /// Redundancy factor for padding.
    #[arg(long, default_value_t = 2)]
    beta: usize,
    /// Cyclic refinement passes.
    #[arg(long, default_value_t = 4)]
    q: usize,
    /// Annealing steps per restart (default 200 x rows; 0 skips annealing).
    #[arg(long)]
    anneal_steps: Option<usize>,
    /// Annealing restarts.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, env = "BCHDEC_SEED", default_value_t = 1)]
    seed: u64,
    /// Output prefix; writes PREFIX.alist, PREFIX.profile.json,
    /// PREFIX.manifest.json. Defaults to ho_N_K_bBETA.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Code as N,K (e.g. 63,45).
    #[arg(long)]
    code: String,
    /// One of: nms, enhanced-nms, osd, hybrid.
    #[arg(long)]
    decoder: String,
    /// alist file for the message-passing stage; omitted = build H_o here.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Redundancy factor when building H_o on the fly.
    #[arg(long, default_value_t = 2)]
    beta: usize,
    /// Seed for the on-the-fly matrix build (kept separate from --seed so
    /// changing the simulation seed never changes the matrix).
    #[arg(long, default_value_t = 1)]
    matrix_seed: u64,
    /// Min-sum normalization factor; required for nms/enhanced-nms/hybrid.
    #[arg(long)]
    alpha: Option<f64>,
    /// Iteration budget I_m (default: 4 for N=63, 8 for N=127).
    #[arg(long)]
    iters: Option<usize>,
    /// Reprocessing order p for osd/hybrid.
    #[arg(long, default_value_t = 2)]
    osd_order: usize,
    /// Dilation stride override for block lengths without a wired default.
    #[arg(long)]
    d_p: Option<usize>,
    /// SNR grid in dB: single value or start:step:stop (inclusive).
    #[arg(long)]
    snr: String,
    /// Stop a point after this many frame errors.
    #[arg(long, default_value_t = 100)]
    min_errors: usize,
    /// Hard frame cap per point.
    #[arg(long, default_value_t = 1_000_000)]
    max_frames: usize,
    #[arg(long, env = "BCHDEC_SEED", default_value_t = 1)]
    seed: u64,
    /// CSV output path (default: standard output). A manifest is written
    /// next to the file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// alist file to profile.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Code as N,K; enables the minimum-weight-row rank report.
    #[arg(long)]
    code: Option<String>,
    /// Decoder settings "autos,iters,branches,rows" to cost against the
    /// baseline.
    #[arg(long)]
    complexity: Option<String>,
    /// Baseline settings (default 1,750,1,18).
    #[arg(long, default_value = "1,750,1,18")]
    baseline: String,
    /// Expected two-stage cost: first-stage cost, second-stage cost, and
    /// first-stage failure fraction as "c1,c2,f1".
    #[arg(long)]
    two_stage: Option<String>,
}

#[derive(Args)]
struct CalibrateAlphaArgs {
    /// Code as N,K (e.g. 63,36).
    #[arg(long)]
    code: String,
    /// alist file; omitted = build H_o here.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    beta: usize,
    #[arg(long, default_value_t = 1)]
    matrix_seed: u64,
    /// Training SNR in dB (default: 2.6 for N=63, 3.0 for N=127).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Candidate factors: single value or start:step:stop (inclusive).
    #[arg(long, default_value = "0.05:0.05:1.0")]
    grid: String,
    /// Frames per candidate.
    #[arg(long, default_value_t = 4096)]
    frames: usize,
    /// Iteration budget I_m (default: 4 for N=63, 8 for N=127).
    #[arg(long)]
    iters: Option<usize>,
    /// Dilation stride override for block lengths without a wired default.
    #[arg(long)]
    d_p: Option<usize>,
    #[arg(long, env = "BCHDEC_SEED", default_value_t = 1)]
    seed: u64,
    /// Optional manifest path recording the result.
    #[arg(long)]
    out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Error/exit-code mapping
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    /// Bad invocation: unusable flag values, unsupported combinations.
    Usage(String),
    /// Bad data: unreadable or malformed files, unwritable outputs.
    Data(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        match e {
            CoreError::Format(_) | CoreError::Io(_) => CliError::Data(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match expand_config(argv) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => e.exit(), // clap prints and exits 2 (errors) or 0 (help)
    };
    if let Some(w) = cli.workers {
        // Ignore "already initialized": only possible if set twice.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    let result = match &cli.cmd {
        Cmd::BuildMatrix(a) => cmd_build_matrix(a, cli.workers),
        Cmd::Simulate(a) => cmd_simulate(a, cli.workers),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::CalibrateAlpha(a) => cmd_calibrate_alpha(a, cli.workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

// ---------------------------------------------------------------------------
// Config file expansion
// ---------------------------------------------------------------------------

/// Pulls `--config FILE` out of the raw arguments, reads `key = value`
/// lines, and appends `--key value` for every key the user did not pass
/// explicitly. `#` starts a comment.
fn expand_config(mut argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut path: Option<String> = None;
    let mut i = 0;
    while i < argv.len() {
        if argv[i] == "--config" {
            if i + 1 >= argv.len() {
                return Err("--config requires a file path".into());
            }
            argv.remove(i);
            path = Some(argv.remove(i));
        } else if let Some(rest) = argv[i].strip_prefix("--config=") {
            path = Some(rest.to_string());
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text =
        fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("{path}:{}: expected key=value", idx + 1));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(format!("{path}:{}: empty key or value", idx + 1));
        }
        let flag = format!("--{key}");
        let given = argv
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if !given {
            argv.push(flag);
            argv.push(value.to_string());
        }
    }
    Ok(argv)
}

// ---------------------------------------------------------------------------
// Shared parsing helpers
// ---------------------------------------------------------------------------

fn parse_code(s: &str) -> CliResult<CodeSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return usage(format!("code must be N,K (e.g. 63,45), got {s:?}"));
    }
    let n: usize = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad block length {:?}", parts[0])))?;
    let k: usize = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad dimension {:?}", parts[1])))?;
    if n == 0 || !(n + 1).is_power_of_two() {
        return usage(format!("block length {n} is not 2^m - 1"));
    }
    let m = (n + 1).trailing_zeros();
    Ok(build_code(m, k)?)
}

/// Parses "v" or "start:step:stop" (inclusive, step > 0) into a grid.
fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| -> CliResult<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad number {t:?} in grid {s:?}")))
    };
    match parts.len() {
        1 => Ok(vec![num(parts[0])?]),
        3 => {
            let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if step <= 0.0 {
                return usage(format!("grid step must be positive, got {step}"));
            }
            if stop < start {
                return usage(format!("grid stop {stop} is below start {start}"));
            }
            let count = ((stop - start) / step + 1.0 + 1e-9).floor() as usize;
            if count > 10_000 {
                return usage(format!("grid {s:?} has {count} points; capped at 10000"));
            }
            Ok((0..count).map(|i| start + step * i as f64).collect())
        }
        _ => usage(format!("grid must be a value or start:step:stop, got {s:?}")),
    }
}

fn parse_complexity(s: &str, name: &str) -> CliResult<ComplexityEntry> {
    let nums: Vec<&str> = s.split(',').map(str::trim).collect();
    if nums.len() != 4 {
        return usage(format!(
            "complexity settings must be autos,iters,branches,rows, got {s:?}"
        ));
    }
    let mut v = [0u64; 4];
    for (slot, t) in v.iter_mut().zip(&nums) {
        *slot = t
            .parse()
            .map_err(|_| CliError::Usage(format!("bad count {t:?} in {s:?}")))?;
    }
    Ok(ComplexityEntry::new(name, v[0], v[1], v[2], v[3])?)
}

fn default_iters(n: usize) -> usize {
    if n == 127 {
        8
    } else {
        4
    }
}

fn default_train_snr(n: usize) -> f64 {
    if n == 127 {
        3.0
    } else {
        2.6
    }
}

/// Rounds to two significant digits and trims trailing digits, so 0.08799
/// prints as 0.088 and 0.9186 as 0.92.
fn fmt_two_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (1 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}

// ---------------------------------------------------------------------------
// Matrix acquisition
// ---------------------------------------------------------------------------

fn load_alist(path: &Path) -> CliResult<BitMatrix> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    Ok(read_alist(&mut BufReader::new(file))?)
}

/// The message-passing matrix: an alist from disk, or H_o built here.
fn mp_matrix(
    spec: &CodeSpec,
    path: &Option<PathBuf>,
    beta: usize,
    matrix_seed: u64,
) -> CliResult<BitMatrix> {
    match path {
        Some(p) => {
            let m = load_alist(p)?;
            if m.cols() != spec.n {
                return Err(CliError::Data(format!(
                    "matrix {} has {} columns but the code has block length {}",
                    p.display(),
                    m.cols(),
                    spec.n
                )));
            }
            Ok(m)
        }
        None => {
            let cfg = AnnealConfig {
                seed: matrix_seed,
                ..AnnealConfig::default()
            };
            Ok(build_optimized_pcm(spec, beta, 4, &cfg)?.matrix)
        }
    }
}

fn dilation_for(spec: &CodeSpec, d_p: Option<usize>) -> CliResult<DilationConfig> {
    match d_p {
        Some(d) => Ok(DilationConfig {
            d_p: d,
            s_values: vec![0, 1, 2],
            families: vec![Family::Identity, Family::Interleave, Family::Frobenius],
            offset_override: None,
        }),
        None => DilationConfig::for_length(spec.n).map_err(|_| {
            CliError::Usage(format!(
                "no default dilation stride for N={}; pass --d-p",
                spec.n
            ))
        }),
    }
}

/// Placeholder dilation for the plain decoder, which never dilates.
fn identity_dilation() -> DilationConfig {
    DilationConfig {
        d_p: 1,
        s_values: vec![0],
        families: vec![Family::Identity],
        offset_override: Some(0),
    }
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

fn write_manifest(
    path: &Path,
    command: &str,
    params: &BTreeMap<String, String>,
    artifacts: &[String],
) -> CliResult<()> {
    let manifest = serde_json::json!({
        "tool": "bchdec",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "params": params,
        "artifacts": artifacts,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("static shape");
    fs::write(path, text + "\n")
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

// ---------------------------------------------------------------------------
// build-matrix
// ---------------------------------------------------------------------------

fn table_row(pcm: &OptimizedPcm) -> String {
    let p = &pcm.profile;
    let uniform = if p.row.min == p.row.max {
        format!("uniform {}", p.row.min)
    } else {
        format!("{}..{} mean {:.2}", p.row.min, p.row.max, p.row.mean)
    };
    format!(
        "BCH({},{}) beta={} H_o {}x{}  row weight {}  col std {:.3}  length-4 cycles {}  rank {}  base rows {}",
        pcm.spec.n,
        pcm.spec.k,
        pcm.beta,
        pcm.matrix.rows(),
        pcm.matrix.cols(),
        uniform,
        p.col.std,
        p.cycle4_count,
        p.rank,
        pcm.m_r1,
    )
}

fn cmd_build_matrix(a: &BuildMatrixArgs, workers: Option<usize>) -> CliResult<()> {
    let spec = parse_code(&a.code)?;
    if a.beta == 0 {
        return usage("beta must be >= 1");
    }
    let cfg = AnnealConfig {
        max_steps: a.anneal_steps,
        restarts: a.restarts,
        seed: a.seed,
        ..AnnealConfig::default()
    };
    let pcm = build_optimized_pcm(&spec, a.beta, a.q, &cfg)?;
    let report = rank_deficiency_report(&pcm);

    let prefix = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("ho_{}_{}_b{}", spec.n, spec.k, a.beta)));
    let alist_path = prefix.with_extension("alist");
    let profile_path = prefix.with_extension("profile.json");

    let mut alist = Vec::new();
    write_alist(&pcm.matrix, &mut alist)?;
    fs::write(&alist_path, alist)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", alist_path.display())))?;

    let profile = serde_json::json!({
        "code": { "n": spec.n, "k": spec.k },
        "beta": pcm.beta,
        "rows": pcm.matrix.rows(),
        "cols": pcm.matrix.cols(),
        "base_rows": pcm.m_r1,
        "profile": pcm.profile,
        "min_weight_rank": report,
    });
    fs::write(
        &profile_path,
        serde_json::to_string_pretty(&profile).expect("static shape") + "\n",
    )
    .map_err(|e| CliError::Data(format!("cannot write {}: {e}", profile_path.display())))?;

    let mut params = BTreeMap::new();
    params.insert("code".into(), a.code.clone());
    params.insert("beta".into(), a.beta.to_string());
    params.insert("q".into(), a.q.to_string());
    params.insert("restarts".into(), a.restarts.to_string());
    params.insert("seed".into(), a.seed.to_string());
    if let Some(s) = a.anneal_steps {
        params.insert("anneal-steps".into(), s.to_string());
    }
    if let Some(w) = workers {
        params.insert("workers".into(), w.to_string());
    }
    write_manifest(
        &manifest_path_for(&prefix),
        "build-matrix",
        &params,
        &[
            alist_path.display().to_string(),
            profile_path.display().to_string(),
        ],
    )?;

    println!("{}", table_row(&pcm));
    println!(
        "min-weight rows: weight {}, cyclic-shift span rank {} of {} -> uniform minimum-weight basis: {}",
        report.min_weight,
        report.rank_of_min_weight_rows,
        spec.n - spec.k,
        if report.full_rank_achievable { "yes" } else { "no" },
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn build_decoder(
    spec: &CodeSpec,
    a: &SimulateArgs,
) -> CliResult<(Decoder, RunMeta)> {
    let needs_alpha = || {
        a.alpha.ok_or_else(|| {
            CliError::Usage(format!("--alpha is required for decoder {}", a.decoder))
        })
    };
    let iters = a.iters.unwrap_or_else(|| default_iters(spec.n));
    let mut meta = RunMeta {
        code: "bch".into(),
        n: spec.n,
        k: spec.k,
        decoder: a.decoder.clone(),
        beta: 0,
        alpha: 0.0,
        im: 0,
    };
    let nms_stage = |dilation: DilationConfig, alpha: f64| -> CliResult<NmsDecoder> {
        let pcm = mp_matrix(spec, &a.matrix, a.beta, a.matrix_seed)?;
        Ok(NmsDecoder::new(pcm, NmsConfig::new(alpha, iters, dilation))?)
    };
    let dec = match a.decoder.as_str() {
        "nms" => {
            let alpha = needs_alpha()?;
            meta.beta = a.beta as u32;
            meta.alpha = alpha;
            meta.im = iters;
            Decoder::Nms(nms_stage(identity_dilation(), alpha)?)
        }
        "enhanced-nms" => {
            let alpha = needs_alpha()?;
            meta.beta = a.beta as u32;
            meta.alpha = alpha;
            meta.im = iters;
            Decoder::EnhancedNms(nms_stage(dilation_for(spec, a.d_p)?, alpha)?)
        }
        "osd" => {
            if a.matrix.is_some() {
                return usage(
                    "--matrix is not used by decoder osd; it reprocesses against the standard parity-check matrix",
                );
            }
            Decoder::Osd(OsdConfig::new(a.osd_order, spec.clone(), standard_pcm(spec))?)
        }
        "hybrid" => {
            let alpha = needs_alpha()?;
            meta.beta = a.beta as u32;
            meta.alpha = alpha;
            meta.im = iters;
            let nms = nms_stage(dilation_for(spec, a.d_p)?, alpha)?;
            let osd = OsdConfig::new(a.osd_order, spec.clone(), standard_pcm(spec))?;
            Decoder::Hybrid(HybridDecoder::new(nms, osd, true)?)
        }
        other => {
            return usage(format!(
                "unknown decoder {other:?}; expected nms, enhanced-nms, osd, or hybrid"
            ))
        }
    };
    Ok((dec, meta))
}

fn cmd_simulate(a: &SimulateArgs, workers: Option<usize>) -> CliResult<()> {
    let spec = parse_code(&a.code)?;
    let snrs = parse_grid(&a.snr)?;
    if a.min_errors == 0 || a.max_frames == 0 {
        return usage("min-errors and max-frames must be >= 1");
    }
    let (decoder, meta) = build_decoder(&spec, a)?;
    let stop = StopRule {
        min_frame_errors: a.min_errors,
        max_frames: a.max_frames,
    };
    let reports = sweep(&decoder, &spec, &snrs, &stop, a.seed)?;
    let csv = bch_toolkit::sim::to_csv(&meta, &reports);

    match &a.out {
        None => {
            print!("{csv}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::Data(format!("cannot write standard output: {e}")))?;
        }
        Some(path) => {
            fs::write(path, &csv)
                .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
            let mut params = BTreeMap::new();
            params.insert("code".into(), a.code.clone());
            params.insert("decoder".into(), a.decoder.clone());
            params.insert("snr".into(), a.snr.clone());
            params.insert("seed".into(), a.seed.to_string());
            params.insert("min-errors".into(), a.min_errors.to_string());
            params.insert("max-frames".into(), a.max_frames.to_string());
            params.insert("osd-order".into(), a.osd_order.to_string());
            params.insert("beta".into(), a.beta.to_string());
            params.insert("matrix-seed".into(), a.matrix_seed.to_string());
            if let Some(al) = a.alpha {
                params.insert("alpha".into(), al.to_string());
            }
            if let Some(it) = a.iters {
                params.insert("iters".into(), it.to_string());
            }
            if let Some(d) = a.d_p {
                params.insert("d-p".into(), d.to_string());
            }
            if let Some(m) = &a.matrix {
                params.insert("matrix".into(), m.display().to_string());
            }
            if let Some(w) = workers {
                params.insert("workers".into(), w.to_string());
            }
            write_manifest(
                &manifest_path_for(path),
                "simulate",
                &params,
                &[path.display().to_string()],
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn cmd_analyze(a: &AnalyzeArgs) -> CliResult<()> {
    if a.matrix.is_none() && a.complexity.is_none() && a.two_stage.is_none() {
        return usage("analyze needs --matrix, --complexity, or --two-stage");
    }
    if let Some(path) = &a.matrix {
        let m = load_alist(path)?;
        let p = m.weight_profile();
        println!("matrix: {}x{}", m.rows(), m.cols());
        println!(
            "row weight: min {} max {} mean {:.3} std {:.3}",
            p.row.min, p.row.max, p.row.mean, p.row.std
        );
        println!(
            "col weight: min {} max {} mean {:.3} std {:.3}",
            p.col.min, p.col.max, p.col.mean, p.col.std
        );
        println!("length-4 cycles: {}", p.cycle4_count);
        println!("rank: {}", p.rank);
        if let Some(code) = &a.code {
            let spec = parse_code(code)?;
            if spec.n != m.cols() {
                return Err(CliError::Data(format!(
                    "matrix has {} columns but code {} has block length {}",
                    m.cols(),
                    code,
                    spec.n
                )));
            }
            let wrapped = OptimizedPcm {
                spec: spec.clone(),
                matrix: m,
                beta: 0,
                m_r1: 0,
                profile: p,
            };
            let r = rank_deficiency_report(&wrapped);
            println!(
                "min-weight rows: weight {}, cyclic-shift span rank {} of {} -> uniform minimum-weight basis: {}",
                r.min_weight,
                r.rank_of_min_weight_rows,
                spec.n - spec.k,
                if r.full_rank_achievable { "yes" } else { "no" },
            );
        }
    }
    if let Some(settings) = &a.complexity {
        let entry = parse_complexity(settings, "entry")?;
        let baseline = parse_complexity(&a.baseline, "baseline")?;
        let ratio = complexity_ratio(&entry, &baseline);
        println!("complexity ratio: {}", fmt_two_sig(ratio));
    }
    if let Some(ts) = &a.two_stage {
        let parts: Vec<&str> = ts.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return usage(format!("--two-stage must be c1,c2,f1, got {ts:?}"));
        }
        let mut v = [0.0f64; 3];
        for (slot, t) in v.iter_mut().zip(&parts) {
            *slot = t
                .parse()
                .map_err(|_| CliError::Usage(format!("bad number {t:?} in {ts:?}")))?;
        }
        let cost = hybrid_cost(v[0], v[1], v[2])?;
        println!("two-stage cost: {}", fmt_two_sig(cost));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// calibrate-alpha
// ---------------------------------------------------------------------------

fn cmd_calibrate_alpha(a: &CalibrateAlphaArgs, workers: Option<usize>) -> CliResult<()> {
    let spec = parse_code(&a.code)?;
    let grid = parse_grid(&a.grid)?;
    if a.frames == 0 {
        return usage("frames must be >= 1");
    }
    let snr = a.snr_db.unwrap_or_else(|| default_train_snr(spec.n));
    let iters = a.iters.unwrap_or_else(|| default_iters(spec.n));
    let pcm = mp_matrix(&spec, &a.matrix, a.beta, a.matrix_seed)?;
    let base = NmsConfig::new(grid[0], iters, dilation_for(&spec, a.d_p)?);
    let best = calibrate_alpha(&spec, &pcm, &base, snr, &grid, a.frames, a.seed)?;
    println!("alpha = {best}");

    if let Some(path) = &a.out {
        let mut params = BTreeMap::new();
        params.insert("code".into(), a.code.clone());
        params.insert("beta".into(), a.beta.to_string());
        params.insert("matrix-seed".into(), a.matrix_seed.to_string());
        params.insert("snr-db".into(), snr.to_string());
        params.insert("grid".into(), a.grid.clone());
        params.insert("frames".into(), a.frames.to_string());
        params.insert("iters".into(), iters.to_string());
        params.insert("seed".into(), a.seed.to_string());
        params.insert("alpha".into(), best.to_string());
        if let Some(m) = &a.matrix {
            params.insert("matrix".into(), m.display().to_string());
        }
        if let Some(w) = workers {
            params.insert("workers".into(), w.to_string());
        }
        write_manifest(path, "calibrate-alpha", &params, &[])?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
