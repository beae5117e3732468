//! Command-line front end: instance generation, BP runs, exact comparison,
//! and landscape reports.
//!
//! Exit codes: 0 success, 1 input error, 2 non-convergence, 3 size guard.
//! Every JSON output embeds a run manifest; apart from the `created_at`
//! timestamp field, re-running the same command reproduces identical bytes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use motif_bp::bethe::{self, EnergyReport};
use motif_bp::bp::{self, BpConfig, Schedule};
use motif_bp::exact::{self, ExactError};
use motif_bp::generate::{self, GeneratorKind, GeneratorSpec, Law};
use motif_bp::landscape::{self, FixedPointCensus, SignAuditReport, XStarEstimate};
use motif_bp::model::{Instance, InstanceFile};

const EXIT_INPUT: u8 = 1;
const EXIT_NON_CONVERGENCE: u8 = 2;
const EXIT_SIZE_GUARD: u8 = 3;

/// Environment variable consulted for the default seed.
const SEED_ENV: &str = "MOTIF_BP_SEED";

#[derive(Parser)]
#[command(
    name = "motif-bp",
    version,
    about = "Belief propagation and Bethe free-energy diagnostics for triangle-motif Ising models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file from a seeded structural family.
    Gen(GenArgs),
    /// Run belief propagation on an instance file.
    Bp(BpArgs),
    /// Exact enumeration: log Z and exact marginals.
    Exact(ExactArgs),
    /// Landscape report: x*, gradient sign audit, fixed-point census.
    Landscape(LandscapeArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Structural family: triangle-tree | random-motif | shared-edge-chain.
    #[arg(long, conflicts_with = "spec_file", required_unless_present = "spec_file")]
    kind: Option<String>,

    /// Read the full generator spec from a JSON file instead of flags.
    #[arg(long)]
    spec_file: Option<PathBuf>,

    /// Number of triangles.
    #[arg(long, default_value_t = 0)]
    triangles: usize,

    /// Vertex count (random-motif only).
    #[arg(long)]
    vertices: Option<usize>,

    /// Constant coupling J (exclusive with --J-range).
    #[arg(long = "J", allow_hyphen_values = true)]
    coupling: Option<f64>,

    /// Coupling range "lo,hi" drawn uniformly.
    #[arg(long = "J-range", value_parser = parse_range)]
    coupling_range: Option<(f64, f64)>,

    /// Constant field h (exclusive with --h-range).
    #[arg(long = "h", allow_hyphen_values = true)]
    field: Option<f64>,

    /// Field range "lo,hi" drawn uniformly.
    #[arg(long = "h-range", value_parser = parse_range)]
    field_range: Option<(f64, f64)>,

    /// Inverse temperature.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,

    /// Allow negative couplings/fields.
    #[arg(long)]
    allow_negative: bool,

    #[arg(long)]
    seed: Option<u64>,

    /// Output path for the instance JSON.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct BpArgs {
    /// Instance JSON file.
    instance: PathBuf,

    #[arg(long, default_value_t = 1e-10)]
    tol: f64,

    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,

    #[arg(long, default_value_t = 0.0)]
    damping: f64,

    /// Sweep order: synchronous | sequential.
    #[arg(long, default_value = "synchronous")]
    schedule: String,

    /// Initial message value in (-1, 1].
    #[arg(long, default_value_t = 1.0)]
    init: f64,

    /// Per-iteration trace CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,

    /// Result JSON path (stdout when omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    /// Instance JSON file.
    instance: PathBuf,

    /// Output path (stdout when omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LandscapeArgs {
    /// Instance JSON file.
    instance: PathBuf,

    /// Random BP initializations for the census (each sign regime).
    #[arg(long, default_value_t = 20)]
    inits: usize,

    /// Candidate points for the gradient sign audit.
    #[arg(long, default_value_t = 100)]
    samples: usize,

    #[arg(long)]
    seed: Option<u64>,

    /// Run audits even for non-ferromagnetic instances.
    #[arg(long)]
    force: bool,

    /// Output path (stdout when omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Reproducibility record embedded in every output.
#[derive(Debug, Clone, Serialize)]
struct RunManifest {
    command: String,
    instance: Option<String>,
    bp_config: Option<BpConfig>,
    seed: Option<u64>,
    tool_version: &'static str,
    /// The only field excluded from byte-identical reproducibility.
    created_at: u64,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            instance: None,
            bp_config: None,
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION"),
            created_at: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected \"lo,hi\"".to_string());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("bad lo: {e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("bad hi: {e}"))?;
    Ok((lo, hi))
}

fn default_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

fn fail(msg: impl std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are not input errors
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT),
            };
        }
    };
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Bp(args) => cmd_bp(args),
        Command::Exact(args) => cmd_exact(args),
        Command::Landscape(args) => cmd_landscape(args),
    }
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
    file.build().map_err(|e| e.to_string())
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(args: GenArgs) -> ExitCode {
    let spec = if let Some(spec_path) = &args.spec_file {
        let text = match std::fs::read_to_string(spec_path) {
            Ok(text) => text,
            Err(e) => return fail(format!("cannot read {}: {e}", spec_path.display()), EXIT_INPUT),
        };
        match serde_json::from_str::<GeneratorSpec>(&text) {
            Ok(spec) => spec,
            Err(e) => return fail(format!("cannot parse {}: {e}", spec_path.display()), EXIT_INPUT),
        }
    } else {
        let kind = match args.kind.as_deref() {
            Some("triangle-tree") => GeneratorKind::TriangleTree,
            Some("random-motif") => GeneratorKind::RandomMotif,
            Some("shared-edge-chain") => GeneratorKind::SharedEdgeChain,
            Some(other) => return fail(format!("unknown kind {other:?}"), EXIT_INPUT),
            None => return fail("either --kind or --spec-file is required", EXIT_INPUT),
        };
        let coupling_law = match (args.coupling, args.coupling_range) {
            (Some(c), None) => Law::Constant(c),
            (None, Some((lo, hi))) => Law::Uniform { lo, hi },
            (None, None) => Law::Constant(1.0),
            (Some(_), Some(_)) => return fail("give --J or --J-range, not both", EXIT_INPUT),
        };
        let field_law = match (args.field, args.field_range) {
            (Some(h), None) => Law::Constant(h),
            (None, Some((lo, hi))) => Law::Uniform { lo, hi },
            (None, None) => Law::Constant(0.0),
            (Some(_), Some(_)) => return fail("give --h or --h-range, not both", EXIT_INPUT),
        };
        GeneratorSpec {
            kind,
            n_triangles: args.triangles,
            n_vertices: args.vertices,
            coupling_law,
            field_law,
            seed: default_seed(args.seed),
            beta: args.beta,
            ferromagnetic: !args.allow_negative,
        }
    };
    let instance = match generate::generate(&spec) {
        Ok(inst) => inst,
        Err(e) => return fail(e, EXIT_INPUT),
    };
    let file = instance.to_file();
    let text = match serde_json::to_string_pretty(&file) {
        Ok(mut t) => {
            t.push('\n');
            t
        }
        Err(e) => return fail(e, EXIT_INPUT),
    };
    if let Err(e) = std::fs::write(&args.out, text) {
        return fail(format!("cannot write {}: {e}", args.out.display()), EXIT_INPUT);
    }
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct BpResultFile {
    manifest: RunManifest,
    converged: bool,
    iterations: usize,
    final_residual: Option<f64>,
    monotone_decreasing: bool,
    /// Messages aligned with triangle list order (3 per triangle).
    final_messages: Vec<f64>,
    energy: EnergyReport,
    node_marginals: Vec<[f64; 2]>,
}

fn cmd_bp(args: BpArgs) -> ExitCode {
    let instance = match load_instance(&args.instance) {
        Ok(inst) => inst,
        Err(e) => return fail(e, EXIT_INPUT),
    };
    let schedule = match args.schedule.as_str() {
        "synchronous" => Schedule::Synchronous,
        "sequential" => Schedule::Sequential,
        other => return fail(format!("unknown schedule {other:?}"), EXIT_INPUT),
    };
    let config = BpConfig {
        schedule,
        tolerance: args.tol,
        max_iters: args.max_iters,
        damping: args.damping,
        init_value: args.init,
        record_trace: true,
    };
    let run = match bp::run_bp(&instance, &config) {
        Ok(run) => run,
        Err(e) => return fail(e, EXIT_INPUT),
    };

    if let Some(trace_path) = &args.trace {
        if let Err(e) = write_trace(&instance, &run, trace_path) {
            return fail(e, EXIT_INPUT);
        }
    }

    let energy = match EnergyReport::at(&instance, &run.final_messages) {
        Ok(report) => report,
        Err(e) => return fail(e, EXIT_INPUT),
    };
    let mut manifest = RunManifest::new("bp");
    manifest.instance = Some(args.instance.display().to_string());
    manifest.bp_config = Some(config);
    let result = BpResultFile {
        manifest,
        converged: run.converged,
        iterations: run.iterations,
        final_residual: run.residual_trace.last().copied(),
        monotone_decreasing: run.monotone_decreasing,
        final_messages: run.final_messages.values().to_vec(),
        node_marginals: (0..instance.n_vertices())
            .map(|v| bp::node_marginal(&instance, &run.final_messages, v).expect("in range"))
            .collect(),
        energy,
    };
    if let Err(e) = write_json(&result, args.out.as_deref()) {
        return fail(e, EXIT_INPUT);
    }
    if run.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NON_CONVERGENCE)
    }
}

/// Trace CSV: iteration, residual, dual_free_energy_nu, min_message,
/// max_message. One row per completed sweep; header always present.
fn write_trace(instance: &Instance, run: &bp::BpRunResult, path: &Path) -> Result<(), String> {
    use std::fmt::Write as _;
    let mut csv = String::from("iteration,residual,dual_free_energy_nu,min_message,max_message\n");
    let states = run.message_trace.as_deref().unwrap_or(&[]);
    for (iter, residual) in run.residual_trace.iter().enumerate() {
        // states[0] is the initial vector; state after sweep k is states[k+1]
        let state = &states[iter + 1];
        let dual = bethe::dual_free_energy_nu(instance, state);
        let min = state.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let max = state
            .values()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        writeln!(
            csv,
            "{},{:e},{:.17e},{:.17e},{:.17e}",
            iter + 1,
            residual,
            dual,
            min,
            max
        )
        .expect("string write");
    }
    std::fs::write(path, csv).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

#[derive(Serialize)]
struct ExactResultFile {
    manifest: RunManifest,
    log_partition: f64,
    one_node_marginals: Vec<[f64; 2]>,
    three_node_marginals: Vec<[f64; 8]>,
}

fn cmd_exact(args: ExactArgs) -> ExitCode {
    let instance = match load_instance(&args.instance) {
        Ok(inst) => inst,
        Err(e) => return fail(e, EXIT_INPUT),
    };
    let result = match exact::enumerate(&instance) {
        Ok(result) => result,
        Err(e @ ExactError::TooLarge { .. }) => return fail(e, EXIT_SIZE_GUARD),
        Err(e) => return fail(e, EXIT_INPUT),
    };
    let mut manifest = RunManifest::new("exact");
    manifest.instance = Some(args.instance.display().to_string());
    let file = ExactResultFile {
        manifest,
        log_partition: result.log_partition,
        one_node_marginals: result.one_node_marginals,
        three_node_marginals: result.three_node_marginals,
    };
    match write_json(&file, args.out.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e, EXIT_INPUT),
    }
}

#[derive(Serialize)]
struct LandscapeReportFile {
    manifest: RunManifest,
    warning: Option<String>,
    xstar: Option<XStarReport>,
    audit: Option<SignAuditReport>,
    census: Option<CensusReport>,
}

#[derive(Serialize)]
struct XStarReport {
    value: f64,
    per_pair: Vec<PairRoot>,
}

#[derive(Serialize)]
struct PairRoot {
    pair: String,
    root: f64,
    c: f64,
}

#[derive(Serialize)]
struct CensusReport {
    points: Vec<CensusRow>,
    dominant: Option<usize>,
    non_converged_runs: usize,
    dominance_holds: bool,
    nu_maximal: bool,
}

#[derive(Serialize)]
struct CensusRow {
    id: usize,
    dual_nu: f64,
    dual_lambda: f64,
    reached_from: landscape::InitKind,
    in_region: bool,
    dominated_by_all_ones: bool,
    messages: Vec<f64>,
}

fn census_report(census: &FixedPointCensus) -> CensusReport {
    let star = census.dominant.map(|i| census.points[i].messages.clone());
    CensusReport {
        points: census
            .points
            .iter()
            .enumerate()
            .map(|(id, p)| CensusRow {
                id,
                dual_nu: p.dual_nu,
                dual_lambda: p.dual_lambda,
                reached_from: p.reached_from,
                in_region: p.in_region,
                dominated_by_all_ones: star
                    .as_ref()
                    .map(|s| p.messages.iter().zip(s).all(|(mu, nu)| *mu <= nu + 1e-9))
                    .unwrap_or(false),
                messages: p.messages.clone(),
            })
            .collect(),
        dominant: census.dominant,
        non_converged_runs: census.non_converged_runs,
        dominance_holds: census.dominance_holds,
        nu_maximal: census.nu_maximal,
    }
}

fn cmd_landscape(args: LandscapeArgs) -> ExitCode {
    let instance = match load_instance(&args.instance) {
        Ok(inst) => inst,
        Err(e) => return fail(e, EXIT_INPUT),
    };
    let seed = default_seed(args.seed);
    let ferro = instance.is_ferromagnetic();
    let mut manifest = RunManifest::new("landscape");
    manifest.instance = Some(args.instance.display().to_string());
    manifest.seed = Some(seed);

    if !ferro && !args.force {
        let report = LandscapeReportFile {
            manifest,
            warning: Some(
                "instance is not ferromagnetic: audits skipped (use --force to run them)"
                    .to_string(),
            ),
            xstar: None,
            audit: None,
            census: None,
        };
        return match write_json(&report, args.out.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(e, EXIT_INPUT),
        };
    }

    let est: XStarEstimate = landscape::estimate_xstar(&instance);
    let audit: SignAuditReport =
        match landscape::gradient_sign_audit(&instance, est.value, args.samples, seed) {
            Ok(audit) => audit,
            Err(e) => return fail(e, EXIT_INPUT),
        };
    let census = match landscape::fixed_point_census(
        &instance,
        est.value,
        args.inits,
        seed,
        &BpConfig::default(),
    ) {
        Ok(census) => census,
        Err(e) => return fail(e, EXIT_INPUT),
    };

    let report = LandscapeReportFile {
        manifest,
        warning: (!ferro).then(|| {
            "instance is not ferromagnetic: sign and dominance guarantees do not apply".to_string()
        }),
        xstar: Some(XStarReport {
            value: est.value,
            per_pair: est
                .per_pair_roots
                .iter()
                .zip(&est.per_pair_c)
                .enumerate()
                .map(|(pair, (&root, &c))| PairRoot {
                    pair: bp::pair_label(&instance, pair),
                    root,
                    c,
                })
                .collect(),
        }),
        audit: Some(audit),
        census: Some(census_report(&census)),
    };
    match write_json(&report, args.out.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e, EXIT_INPUT),
    }
}
