//! Command-line front end for the detector.
//!
//! Four subcommands: `detect` writes keypoint CSV for a PGM input, `gen`
//! renders the synthetic test patterns, `compare` checks that variants
//! produce identical keypoints and prints their cost counters side by side,
//! and `bench` reports per-stage median times. Exit codes: 0 success,
//! 1 usage error, 2 data error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ofast_core::counters::CountReport;
use ofast_core::harris::{default_norm_factor, HarrisParams};
use ofast_core::pattern::generate_test_pattern;
use ofast_core::pgm::{load_pgm_file, write_pgm_file};
use ofast_core::pipeline::{
    bench_stage_times, keypoints_to_csv, run_counted, run_pipeline_timed, DetectorConfig,
    Keypoint, PipelineVariant,
};

/// Environment variable overriding the `--workers` flag.
const WORKERS_ENV: &str = "OFAST_WORKERS";

#[derive(Parser)]
#[command(
    name = "ofast",
    version,
    about = "Oriented FAST keypoint detection over binary PGM images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DetectorArgs {
    /// FAST intensity threshold
    #[arg(long, default_value_t = 20)]
    threshold: u8,
    /// Pyramid levels
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Pyramid scale factor between levels
    #[arg(long, default_value_t = 1.2)]
    scale: f64,
    /// Scoring columns per tile
    #[arg(long, default_value_t = 32)]
    tile_width: usize,
    /// Detection margin kept clear of level borders
    #[arg(long, default_value_t = 16)]
    margin: usize,
    /// Harris k constant
    #[arg(long, default_value_t = 0.04)]
    k: f64,
    /// Harris window side (odd)
    #[arg(long, default_value_t = 7)]
    window: usize,
    /// Worker threads; OFAST_WORKERS overrides
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl DetectorArgs {
    fn config(&self) -> Result<DetectorConfig, CliError> {
        let workers = match std::env::var(WORKERS_ENV) {
            Ok(value) => value
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("{WORKERS_ENV}={value} is not a number")))?,
            Err(_) => self.workers,
        };
        let harris = HarrisParams::new(self.k, self.window, default_norm_factor(self.window))
            .map_err(|e| CliError::usage(e.to_string()))?;
        let cfg = DetectorConfig {
            t: self.threshold,
            harris,
            levels: self.levels,
            scale_factor: self.scale,
            tile_width: self.tile_width,
            margin: self.margin,
            nms: true,
            centroid_radius: 15,
            workers,
        };
        cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Detect keypoints in a PGM image and write them as CSV
    Detect {
        /// Input image (binary PGM)
        input: PathBuf,
        /// Output CSV path
        #[arg(long, default_value = "keypoints.csv")]
        out: PathBuf,
        /// Pipeline variant: baseline, binary, direct-harris, para-sep, semi-sep
        #[arg(long, default_value = "semi-sep")]
        variant: String,
        #[command(flatten)]
        detector: DetectorArgs,
    },
    /// Generate a synthetic test pattern as a PGM file
    Gen {
        /// Pattern case, 1-5
        #[arg(long, default_value_t = 1)]
        case: u8,
        /// Patterns per image side
        #[arg(long, default_value_t = 25)]
        grid: usize,
        /// Cell side in pixels
        #[arg(long, default_value_t = 41)]
        cell: usize,
        /// Output PGM path
        #[arg(long, default_value = "pattern.pgm")]
        out: PathBuf,
    },
    /// Run two or more variants and verify they agree
    Compare {
        /// Input image (binary PGM)
        input: PathBuf,
        /// Comma-separated variant list
        #[arg(long, value_delimiter = ',', default_value = "baseline,binary")]
        variants: Vec<String>,
        #[command(flatten)]
        detector: DetectorArgs,
    },
    /// Benchmark per-stage times for variants over input images
    Bench {
        /// Input images (binary PGM)
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Measured repetitions per image and variant (a warm-up run is
        /// excluded)
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Comma-separated variant list
        #[arg(long, value_delimiter = ',', default_value = "baseline,semi-sep")]
        variants: Vec<String>,
        #[command(flatten)]
        detector: DetectorArgs,
    },
}

/// Writes one line to stdout, exiting quietly when the reader has closed
/// the pipe (e.g. piping into `head`).
fn emit(line: impl AsRef<str>) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if writeln!(out, "{}", line.as_ref()).is_err() {
        std::process::exit(0);
    }
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 1,
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version land on stdout and exit cleanly; everything
            // else is a usage error.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn parse_variant(name: &str) -> Result<PipelineVariant, CliError> {
    PipelineVariant::parse(name).ok_or_else(|| {
        CliError::usage(format!(
            "unknown variant {name:?}; expected one of baseline, binary, direct-harris, para-sep, semi-sep"
        ))
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Detect {
            input,
            out,
            variant,
            detector,
        } => cmd_detect(&input, &out, &variant, &detector),
        Command::Gen {
            case,
            grid,
            cell,
            out,
        } => cmd_gen(case, grid, cell, &out),
        Command::Compare {
            input,
            variants,
            detector,
        } => cmd_compare(&input, &variants, &detector),
        Command::Bench {
            inputs,
            reps,
            variants,
            detector,
        } => cmd_bench(&inputs, reps, &variants, &detector),
    }
}

fn cmd_detect(
    input: &PathBuf,
    out: &PathBuf,
    variant: &str,
    detector: &DetectorArgs,
) -> Result<(), CliError> {
    let variant = parse_variant(variant)?;
    let cfg = detector.config()?;
    let img = load_pgm_file(input).map_err(|e| CliError::data(format!("{}: {e}", input.display())))?;
    let (keypoints, times) =
        run_pipeline_timed(&img, &cfg, variant).map_err(|e| CliError::data(e.to_string()))?;

    std::fs::write(out, keypoints_to_csv(&keypoints))
        .map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;

    let mut per_level: BTreeMap<usize, usize> = BTreeMap::new();
    for kp in &keypoints {
        *per_level.entry(kp.level).or_default() += 1;
    }
    for level in 0..cfg.levels {
        emit(format!(
            "level {level}: {} keypoints",
            per_level.get(&level).copied().unwrap_or(0)
        ));
    }
    emit(format!(
        "total: {} keypoints ({} variant) -> {}",
        keypoints.len(),
        variant.name(),
        out.display()
    ));
    emit(format!(
        "stage times: fast={:.3}ms harris={:.3}ms nms={:.3}ms centroid={:.3}ms",
        times.fast.as_secs_f64() * 1e3,
        times.harris.as_secs_f64() * 1e3,
        times.nms.as_secs_f64() * 1e3,
        times.centroid.as_secs_f64() * 1e3,
    ));
    Ok(())
}

fn cmd_gen(case: u8, grid: usize, cell: usize, out: &PathBuf) -> Result<(), CliError> {
    let img = generate_test_pattern(case, grid, cell).map_err(|e| CliError::usage(e.to_string()))?;
    write_pgm_file(&img, out).map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;
    emit(format!(
        "wrote case {case} pattern, {}x{} -> {}",
        img.width(),
        img.height(),
        out.display()
    ));
    Ok(())
}

fn keypoints_differ(a: &[Keypoint], b: &[Keypoint]) -> Option<usize> {
    if a.len() != b.len() {
        return Some(a.len().min(b.len()));
    }
    a.iter().zip(b).position(|(x, y)| x != y)
}

fn cmd_compare(
    input: &PathBuf,
    variant_names: &[String],
    detector: &DetectorArgs,
) -> Result<(), CliError> {
    if variant_names.len() < 2 {
        return Err(CliError::usage("compare needs at least two variants"));
    }
    let variants: Vec<PipelineVariant> = variant_names
        .iter()
        .map(|n| parse_variant(n))
        .collect::<Result<_, _>>()?;
    let cfg = detector.config()?;
    let img = load_pgm_file(input).map_err(|e| CliError::data(format!("{}: {e}", input.display())))?;

    let mut results: Vec<(PipelineVariant, Vec<Keypoint>, CountReport)> = Vec::new();
    for &variant in &variants {
        let (kps, report) =
            run_counted(&img, &cfg, variant).map_err(|e| CliError::data(e.to_string()))?;
        results.push((variant, kps, report));
    }

    let (ref_variant, ref_kps, _) = &results[0];
    for (variant, kps, _) in &results[1..] {
        if let Some(i) = keypoints_differ(ref_kps, kps) {
            let describe = |kps: &[Keypoint]| match kps.get(i) {
                Some(kp) => format!(
                    "level={} x={:.4} y={:.4} response={:.9e} angle={:.8}",
                    kp.level, kp.x, kp.y, kp.response, kp.angle
                ),
                None => "missing".to_string(),
            };
            return Err(CliError::data(format!(
                "MISMATCH at keypoint {i}: {} has {} but {} has {}",
                ref_variant.name(),
                describe(ref_kps),
                variant.name(),
                describe(kps),
            )));
        }
    }
    emit(format!(
        "EQUAL: {} keypoints from every variant",
        ref_kps.len()
    ));

    type CounterPick = fn(&CountReport) -> u64;
    let rows: [(&str, CounterPick); 10] = [
        ("fast.branch_evals", |r| r.fast.branch_evals),
        ("fast.image_reads", |r| r.fast.image_reads),
        ("harris.branch_evals", |r| r.harris.branch_evals),
        ("harris.image_reads", |r| r.harris.image_reads),
        ("harris.scratch_reads", |r| r.harris.scratch_reads),
        ("harris.scratch_writes", |r| r.harris.scratch_writes),
        ("harris.mac_ops", |r| r.harris.mac_ops),
        ("nms.branch_evals", |r| r.nms.branch_evals),
        ("centroid.image_reads", |r| r.centroid.image_reads),
        ("total.mac_ops", |r| r.total().mac_ops),
    ];
    let mut header = format!("{:<22}", "counter");
    for (variant, _, _) in &results {
        header.push_str(&format!("{:>16}", variant.name()));
    }
    emit(header);
    for (label, pick) in rows {
        let mut line = format!("{label:<22}");
        for (_, _, report) in &results {
            line.push_str(&format!("{:>16}", pick(report)));
        }
        emit(line);
    }

    let find = |v: PipelineVariant| results.iter().find(|(rv, _, _)| *rv == v);
    if let (Some((_, _, bin)), Some((_, _, base))) =
        (find(PipelineVariant::Binary), find(PipelineVariant::Baseline))
    {
        emit(format!(
            "fast branch ratio binary/baseline = {:.3}",
            bin.fast.branch_evals as f64 / base.fast.branch_evals as f64
        ));
        emit(format!(
            "fast image-read ratio binary/baseline = {:.3}",
            bin.fast.image_reads as f64 / base.fast.image_reads as f64
        ));
    }
    Ok(())
}

fn cmd_bench(
    inputs: &[PathBuf],
    reps: usize,
    variant_names: &[String],
    detector: &DetectorArgs,
) -> Result<(), CliError> {
    if reps < 3 {
        return Err(CliError::usage("bench needs --reps >= 3"));
    }
    let variants: Vec<PipelineVariant> = variant_names
        .iter()
        .map(|n| parse_variant(n))
        .collect::<Result<_, _>>()?;
    let cfg = detector.config()?;

    emit("variant,stage,image,median_ms,min_ms");
    for input in inputs {
        let img =
            load_pgm_file(input).map_err(|e| CliError::data(format!("{}: {e}", input.display())))?;
        let name = input
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| input.display().to_string());
        for &variant in &variants {
            let rows = bench_stage_times(&img, &cfg, variant, reps)
                .map_err(|e| CliError::data(e.to_string()))?;
            for row in rows {
                emit(format!(
                    "{},{},{name},{:.4},{:.4}",
                    variant.name(),
                    row.stage,
                    row.median_ms,
                    row.min_ms
                ));
            }
        }
    }
    Ok(())
}
