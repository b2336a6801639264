//! `decomp` — randomized SVD / LU decompositions, sketch-ensemble
//! verification, and the experiment harness, from the command line.
//!
//! Every subcommand prints a human-readable summary to stdout; `--out <dir>`
//! additionally writes machine-readable artifacts in the chosen `--format`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use decomp::bench::{
    emit_report, run_experiment, synth_matrix, ExperimentConfig, Method, SpectrumSpec,
};
use decomp::conservation::{max_singval_tail, min_singval_tail, ConservationConfig, TailReport};
use decomp::linalg::{read_auto, read_matrix_market, CsrMatrix, DenseMatrix};
use decomp::rlu::{randomized_lu, RluParams};
use decomp::rsvd::{randomized_svd_with_kind, MatrixInput, RsvdParams};
use decomp::sketch::derive_seed;
use decomp::{Error, Result};

// ── Argument types ─────────────────────────────────────────────────────────

#[derive(Parser)]
#[command(
    name = "decomp",
    version,
    about = "Randomized low-rank SVD / LU with sparse sub-Gaussian sketching"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized singular value decomposition.
    Svd(SvdArgs),
    /// Randomized LU with row and column pivoting.
    Lu(LuArgs),
    /// Monte-Carlo check of the sketch ensemble's singular-value tails.
    Verify(VerifyArgs),
    /// Run an experiment grid from a JSON config.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Base RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for machine-readable artifacts (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format written under --out.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct MatrixSource {
    /// Matrix file: `.mtx` (MatrixMarket, kept sparse), `.bin`, or dense text.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    input: Option<PathBuf>,

    /// Synthesize a square test matrix from a spectrum spec, e.g.
    /// `exp-decay:1:1e-6:300` (the spec length sets the size).
    #[arg(long)]
    synth: Option<SpectrumSpec>,
}

#[derive(Args)]
struct SvdArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    source: MatrixSource,
    /// Target rank.
    #[arg(long, default_value_t = 10)]
    rank: usize,
    /// First sketch size (default ⌈2.5·r⌉).
    #[arg(long)]
    k1: Option<usize>,
    /// Second sketch size (default ⌈3.5·r⌉).
    #[arg(long)]
    k2: Option<usize>,
    /// Inner subspace dimension (default ⌈1.25·r⌉ + 8).
    #[arg(long)]
    l: Option<usize>,
    /// Sketch density (default 3/n on the first side, 3/m on the second).
    #[arg(long)]
    p: Option<f64>,
    /// First-stage sketch ensemble.
    #[arg(long, default_value = "sparse-subgaussian")]
    sketch: Method,
}

#[derive(Args)]
struct LuArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    source: MatrixSource,
    /// Target rank.
    #[arg(long, default_value_t = 10)]
    rank: usize,
    /// Sketch size (default ⌈2.5·r⌉).
    #[arg(long)]
    k1: Option<usize>,
    /// Sketch density (default 3/n).
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Ambient dimension of the sketched space.
    #[arg(long)]
    n: usize,
    /// Subspace dimension.
    #[arg(long)]
    r: usize,
    /// Sketch size.
    #[arg(long)]
    k: usize,
    /// Nonzero density of the sketch.
    #[arg(long)]
    p: f64,
    /// Monte-Carlo trials.
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Lower-tail threshold in units of √k: reports P(σ_min ≤ threshold·√k).
    /// The upper tail is always reported at 3·√k.
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Experiment grid (JSON; see ExperimentConfig).
    #[arg(long)]
    config: PathBuf,
}

// ── Entry point ────────────────────────────────────────────────────────────

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Svd(args) => run_svd(args),
        Command::Lu(args) => run_lu(args),
        Command::Verify(args) => run_verify(args),
        Command::Bench(args) => run_bench(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

// ── Matrix loading ─────────────────────────────────────────────────────────

enum LoadedMatrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl LoadedMatrix {
    fn input(&self) -> MatrixInput<'_> {
        match self {
            LoadedMatrix::Dense(a) => MatrixInput::Dense(a),
            LoadedMatrix::Sparse(a) => MatrixInput::Sparse(a),
        }
    }

    fn describe(&self) -> String {
        match self {
            LoadedMatrix::Dense(a) => format!("{} x {} dense", a.rows(), a.cols()),
            LoadedMatrix::Sparse(a) => {
                format!("{} x {} sparse, {} nonzeros", a.rows(), a.cols(), a.nnz())
            }
        }
    }
}

fn load_matrix(source: &MatrixSource, seed: u64) -> Result<LoadedMatrix> {
    if let Some(spec) = source.synth {
        let n = spec.length();
        let (a, _) = synth_matrix(n, n, &spec, seed)?;
        return Ok(LoadedMatrix::Dense(a));
    }
    let path = source
        .input
        .as_ref()
        .expect("clap enforces --input or --synth");
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") => Ok(LoadedMatrix::Sparse(read_matrix_market(path)?)),
        _ => Ok(LoadedMatrix::Dense(read_auto(path)?)),
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::MatrixFile {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::MatrixFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn to_json_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::InvalidParams(format!("serialization failed: {e}")))
}

// ── decomp svd ─────────────────────────────────────────────────────────────

fn run_svd(args: SvdArgs) -> Result<()> {
    let kind = args.sketch.sketch_kind().ok_or_else(|| {
        Error::InvalidParams(
            "full-svd is the dense baseline of `decomp bench`, not a sketch ensemble".into(),
        )
    })?;
    let matrix = load_matrix(&args.source, derive_seed(args.common.seed, 0x5EED))?;
    let input = matrix.input();
    let (m, n) = input.shape();

    let mut params = RsvdParams::defaults(args.rank, m, n, args.common.seed)?;
    if let Some(k1) = args.k1 {
        params.k1 = k1;
    }
    if let Some(k2) = args.k2 {
        params.k2 = k2;
    }
    if let Some(l) = args.l {
        params.l = l;
    }
    if let Some(p) = args.p {
        params.p1 = p;
        params.p2 = p;
    }
    params.validate(m, n)?;

    let result = randomized_svd_with_kind(&input, &params, kind)?;
    let record = result.record(&params);

    println!("matrix: {}", matrix.describe());
    println!(
        "params: r = {}, k1 = {}, k2 = {}, l = {}, p1 = {:.3e}, p2 = {:.3e}, seed = {}, sketch = {}",
        params.r, params.k1, params.k2, params.l, params.p1, params.p2, params.seed, args.sketch
    );
    let t = &result.timings;
    println!(
        "stage times (ms): sketch {:.2}, qr {:.2}, second sketch {:.2}, small svd {:.2}, total {:.2}",
        t.sketch_ms, t.qr_ms, t.second_sketch_ms, t.small_svd_ms, t.total_ms
    );
    print!("spectral residual ~ {:.4e}", result.spectral_residual);
    match result.frobenius_residual {
        Some(f) => println!(", frobenius residual = {f:.4e}"),
        None => println!(" (matrix-free input: no exact frobenius residual)"),
    }
    let shown = result.factors.s.len().min(8);
    let leading: Vec<String> = result.factors.s[..shown]
        .iter()
        .map(|s| format!("{s:.4e}"))
        .collect();
    println!("leading singular values: {}", leading.join(", "));

    if let Some(dir) = &args.common.out {
        ensure_out_dir(dir)?;
        match args.common.format {
            OutputFormat::Json => write_text(&dir.join("svd.json"), to_json_pretty(&record)?)?,
            OutputFormat::Csv => {
                let mut text = String::from("index,singular_value\n");
                for (i, s) in result.factors.s.iter().enumerate() {
                    text.push_str(&format!("{i},{s}\n"));
                }
                write_text(&dir.join("svd.csv"), text)?;
            }
        }
    }
    Ok(())
}

// ── decomp lu ──────────────────────────────────────────────────────────────

fn run_lu(args: LuArgs) -> Result<()> {
    let matrix = load_matrix(&args.source, derive_seed(args.common.seed, 0x5EED))?;
    let input = matrix.input();
    let (m, n) = input.shape();

    let mut params = RluParams::defaults(args.rank, m, n, args.common.seed)?;
    if let Some(k) = args.k1 {
        params.k = k;
    }
    if let Some(p) = args.p {
        params.p = p;
    }
    params.validate(args.rank, m, n)?;

    let result = randomized_lu(&input, args.rank, &params)?;
    let record = result.record(args.rank, &params);
    let structure = &record.structure;

    println!("matrix: {}", matrix.describe());
    println!(
        "params: r = {}, k = {}, p = {:.3e}, seed = {}",
        args.rank, params.k, params.p, params.seed
    );
    println!("elapsed: {:.2} ms", result.elapsed_ms);
    println!("spectral residual ~ {:.4e}", result.spectral_residual);
    println!(
        "structure: max|L| = {:.6}, L diag defect = {:.1e}, L upper mass = {:.1e}, U lower mass = {:.1e}",
        structure.l_max_abs,
        structure.l_diag_defect,
        structure.l_strict_upper,
        structure.u_strict_lower
    );

    if let Some(dir) = &args.common.out {
        ensure_out_dir(dir)?;
        match args.common.format {
            OutputFormat::Json => write_text(&dir.join("lu.json"), to_json_pretty(&record)?)?,
            OutputFormat::Csv => {
                let text = format!(
                    "r,k,p,seed,elapsed_ms,err_spectral,l_max_abs\n{},{},{},{},{},{},{}\n",
                    record.r,
                    record.params.k,
                    record.params.p,
                    record.params.seed,
                    record.elapsed_ms,
                    record.err_spectral,
                    structure.l_max_abs
                );
                write_text(&dir.join("lu.csv"), text)?;
            }
        }
    }
    Ok(())
}

// ── decomp verify ──────────────────────────────────────────────────────────

fn print_tail(label: &str, report: &TailReport, comparison: &str) {
    println!(
        "{label}: fraction = {:.4} ± {:.4} ({comparison}, {} trials)",
        report.fraction, report.standard_error, report.trials
    );
}

fn run_verify(args: VerifyArgs) -> Result<()> {
    let config = ConservationConfig::new(
        args.n,
        args.r,
        args.k,
        args.p,
        args.trials,
        args.common.seed,
    )?;
    println!(
        "config: n = {}, r = {}, k = {}, p = {:.3e}, trials = {}, seed = {}",
        config.n, config.r, config.k, config.p, config.trials, config.seed
    );

    let min_tail = min_singval_tail(&config, args.threshold)?;
    let max_tail = max_singval_tail(&config, 3.0)?;
    print_tail(
        "min tail",
        &min_tail,
        &format!("P(σ_min(ΩB) ≤ {}·√k)", args.threshold),
    );
    print_tail("max tail", &max_tail, "P(σ_max(ΩB) > 3·√k)");
    if let Some(f) = max_tail.omega_sigma1_fraction {
        println!("whole-sketch norm: P(σ₁(Ω) > 3·√n) = {f:.4}");
    }
    println!("quantiles of σ_min/√k and σ_max/√k:");
    for (lo, hi) in min_tail.quantiles.iter().zip(&max_tail.quantiles) {
        println!("  p{:<4} {:>8.4}  {:>8.4}", lo.probe * 100.0, lo.value, hi.value);
    }

    if let Some(dir) = &args.common.out {
        ensure_out_dir(dir)?;
        match args.common.format {
            OutputFormat::Json => {
                let report = serde_json::json!({
                    "config": config,
                    "min_tail": min_tail,
                    "max_tail": max_tail,
                });
                write_text(&dir.join("verify.json"), to_json_pretty(&report)?)?;
            }
            OutputFormat::Csv => {
                let mut text = String::from("probe,min_quantile,max_quantile\n");
                for (lo, hi) in min_tail.quantiles.iter().zip(&max_tail.quantiles) {
                    text.push_str(&format!("{},{},{}\n", lo.probe, lo.value, hi.value));
                }
                write_text(&dir.join("verify.csv"), text)?;
            }
        }
    }
    Ok(())
}

// ── decomp bench ───────────────────────────────────────────────────────────

fn run_bench(args: BenchArgs) -> Result<()> {
    let mut config = ExperimentConfig::from_file(&args.config)?;
    if args.common.seed != 0 {
        // Re-randomize the whole grid without editing the config file.
        for mat in &mut config.matrices {
            mat.seed = derive_seed(mat.seed, args.common.seed);
        }
    }
    if args.common.out.is_some() {
        config.output = args.common.out.clone();
    }

    let cells = config.matrices.len() * config.methods.len() * config.ranks.len();
    println!(
        "grid: {} matrices x {} methods x {} ranks = {cells} cells, {} repeats",
        config.matrices.len(),
        config.methods.len(),
        config.ranks.len(),
        config.repeats
    );
    let run = run_experiment(&config)?;
    println!("{} records, {} failures", run.records.len(), run.failures.len());
    for failure in &run.failures {
        println!(
            "  failed: {} on {}x{} seed {} r {}: {}",
            failure.method, failure.m, failure.n, failure.seed, failure.r, failure.message
        );
    }

    match &config.output {
        Some(dir) => {
            let paths = emit_report(&run, &config, dir)?;
            println!("wrote {}", paths.csv.display());
            println!("wrote {}", paths.json.display());
        }
        None => {
            // No output directory: dump the records to stdout instead.
            match args.common.format {
                OutputFormat::Json => {
                    print!("{}", to_json_pretty(&run.records)?);
                }
                OutputFormat::Csv => {
                    let mut writer = csv::Writer::from_writer(std::io::stdout());
                    for record in &run.records {
                        writer.serialize(record).map_err(|e| {
                            Error::InvalidParams(format!("csv serialization failed: {e}"))
                        })?;
                    }
                    writer
                        .flush()
                        .map_err(|e| Error::InvalidParams(format!("csv flush failed: {e}")))?;
                }
            }
        }
    }
    Ok(())
}
