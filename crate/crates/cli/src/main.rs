//! `selfsim`: generate graphs, spectra, consensus metrics, oracle validation
//! tables and simulations for hierarchical and Sierpiński graphs.

mod config;

use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use selfsim::export;
use selfsim::graph::{DEFAULT_DENSE_BUDGET, DEFAULT_VERTEX_BUDGET};
use selfsim::metrics;
use selfsim::sim::{self, SimConfig, SimKind};
use selfsim::sweep::{self, OutputFormat, SweepSpec};
use selfsim::validate;
use selfsim::{Budget, Family, Graph, GraphSpec, SpectrumMultiset};

#[derive(Parser, Debug)]
#[command(name = "selfsim", version, about, args_override_self = true)]
struct Cli {
    /// Largest graph (vertices) that may be constructed explicitly.
    #[arg(long, global = true, default_value_t = DEFAULT_VERTEX_BUDGET)]
    budget_vertices: usize,
    /// Largest graph (vertices) handed to the dense eigensolver.
    #[arg(long, global = true, default_value_t = DEFAULT_DENSE_BUDGET)]
    budget_dense: usize,
    /// Only report errors on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// TOML file supplying flags; the command line takes precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GraphArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(short = 'n', value_parser = clap::value_parser!(u32).range(1..))]
    n: u32,
    #[arg(short = 'k', value_parser = clap::value_parser!(u32).range(3..))]
    k: u32,
}

impl GraphArgs {
    fn spec(&self) -> selfsim::Result<GraphSpec> {
        GraphSpec::new(self.family, self.n, self.k)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum GraphFormat {
    Edgelist,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TableFormat {
    Csv,
    Json,
}

impl From<TableFormat> for OutputFormat {
    fn from(f: TableFormat) -> Self {
        match f {
            TableFormat::Csv => OutputFormat::Csv,
            TableFormat::Json => OutputFormat::Json,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum KindArg {
    Noiseless,
    Delayed,
    Noisy1,
    Noisy2,
}

impl From<KindArg> for SimKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Noiseless => SimKind::Noiseless,
            KindArg::Delayed => SimKind::Delayed,
            KindArg::Noisy1 => SimKind::FirstOrderNoisy,
            KindArg::Noisy2 => SimKind::SecondOrderNoisy,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a graph and write its edge list.
    Generate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum, default_value_t = GraphFormat::Edgelist)]
        format: GraphFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Laplacian spectrum by spectral decimation.
    Spectrum {
        #[command(flatten)]
        graph: GraphArgs,
        /// One eigenvalue per line, repeated by multiplicity.
        #[arg(long)]
        expand: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consensus metrics for one graph or a range of generations.
    Metrics {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(short = 'n', value_parser = clap::value_parser!(u32).range(1..), required_unless_present = "sweep")]
        n: Option<u32>,
        #[arg(short = 'k', value_parser = clap::value_parser!(u32).range(3..))]
        k: u32,
        /// Inclusive generation range `n1..n2`, replacing `-n`.
        #[arg(long, value_parser = parse_range)]
        sweep: Option<RangeInclusive<u32>>,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check analytic results against dense linear algebra and
    /// simulation; exits 1 if any check fails.
    Validate {
        #[arg(long, value_parser = parse_family, requires_all = ["n", "k"])]
        family: Option<Family>,
        #[arg(short = 'n', value_parser = clap::value_parser!(u32).range(1..))]
        n: Option<u32>,
        #[arg(short = 'k', value_parser = clap::value_parser!(u32).range(3..))]
        k: Option<u32>,
        /// Run the full matrix over both families and k = 3, 4, 5.
        #[arg(long, conflicts_with_all = ["family", "edgelist"])]
        all: bool,
        /// Largest generation for `--all`; graphs beyond the dense budget are skipped.
        #[arg(long, default_value_t = 8)]
        max_n: u32,
        /// Validate an edge-list file against the spec in its header.
        #[arg(long, conflicts_with = "family")]
        edgelist: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one of the consensus systems.
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Uniform delay (delayed kind only).
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[arg(long, default_value_t = 16)]
        trials: usize,
        /// Step size; defaults to 0.02/zeta, adjusted to divide tau.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise standard deviation per unit time.
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// Keep every stride-th step in the trace.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Trace CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary JSON destination; stdout if omitted.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Metrics table over families × k values × generations.
    Sweep {
        #[arg(long, value_parser = parse_family, value_delimiter = ',', action = ArgAction::Set, default_value = "hier,sier")]
        families: Vec<Family>,
        #[arg(short = 'k', long = "k-values", value_delimiter = ',', action = ArgAction::Set, default_value = "3,4,5")]
        k_values: Vec<u32>,
        /// Inclusive generation range `n1..n2`.
        #[arg(short = 'n', long = "n-range", value_parser = parse_range, default_value = "1..8")]
        n_range: RangeInclusive<u32>,
        /// Metric columns to keep; all if omitted.
        #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
        outputs: Vec<String>,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: selfsim::Error| e.to_string())
}

/// `a..b` and `a..=b` are both inclusive; a bare `a` is `a..=a`.
fn parse_range(s: &str) -> std::result::Result<RangeInclusive<u32>, String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("bad range bound '{t}'"));
    match s.split_once("..") {
        Some((a, b)) => Ok(num(a)?..=num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let a = num(s)?;
            Ok(a..=a)
        }
    }
}

struct Output<'a> {
    out_dir: Option<&'a Path>,
}

impl Output<'_> {
    fn write(&self, dest: Option<&Path>, bytes: &[u8]) -> Result<()> {
        let Some(dest) = dest else {
            io::stdout().lock().write_all(bytes)?;
            return Ok(());
        };
        let path = match self.out_dir {
            Some(dir) if dest.is_relative() => dir.join(dest),
            _ => dest.to_path_buf(),
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

enum Outcome {
    Success,
    ValidationFailed,
}

fn run(cli: Cli) -> Result<Outcome> {
    let budget = Budget { vertices: cli.budget_vertices, dense: cli.budget_dense, ..Budget::default() };
    let output = Output { out_dir: cli.out_dir.as_deref() };

    match cli.command {
        Command::Generate { graph, format, out } => {
            let g = Graph::build(graph.spec()?, &budget)?;
            let mut buf = Vec::new();
            match format {
                GraphFormat::Edgelist => export::write_edgelist(&g, &mut buf)?,
                GraphFormat::Json => {
                    buf = serde_json::to_vec_pretty(&export::graph_json(&g))?;
                    buf.push(b'\n');
                }
            }
            output.write(out.as_deref(), &buf)?;
        }
        Command::Spectrum { graph, expand, out } => {
            let spectrum = SpectrumMultiset::compute(graph.spec()?, &budget)?;
            if expand {
                budget.check_vertices(spectrum.total_multiplicity())?;
            }
            let mut buf = Vec::new();
            export::write_spectrum_csv(&spectrum, expand, &mut buf)?;
            output.write(out.as_deref(), &buf)?;
        }
        Command::Metrics { family, n, k, sweep, format, out } => {
            let n_range = match (sweep, n) {
                (Some(r), _) => r,
                (None, Some(n)) => n..=n,
                (None, None) => bail!(selfsim::Error::InvalidSweep("need -n or --sweep".into())),
            };
            let spec = SweepSpec {
                families: vec![family],
                k_values: vec![k],
                n_range,
                outputs: Vec::new(),
                format: format.into(),
            };
            let reports = sweep::cmd_sweep(&spec, &budget)?;
            output.write(out.as_deref(), sweep::render_sweep(&spec, &reports)?.as_bytes())?;
        }
        Command::Validate { family, n, k, all, max_n, edgelist, out } => {
            let table = if let Some(path) = edgelist {
                let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                let g = export::read_edgelist(io::BufReader::new(file))?;
                validate::validate_graph(&g, &budget)?
            } else if let (Some(family), Some(n), Some(k)) = (family, n, k) {
                validate::validate_spec(GraphSpec::new(family, n, k)?, &budget)?
            } else if all {
                validate::validate_all(max_n, &budget)?
            } else {
                bail!(selfsim::Error::InvalidConfig("give --family/-n/-k, --edgelist FILE or --all".into()));
            };
            if table.checks.is_empty() {
                bail!(selfsim::Error::NoChecks);
            }
            output.write(out.as_deref(), table.render().as_bytes())?;
            if !table.all_passed() {
                return Ok(Outcome::ValidationFailed);
            }
        }
        Command::Simulate { graph, kind, tau, trials, dt, t_end, seed, noise, stride, out, summary } => {
            let spec = graph.spec()?;
            let g = Graph::build(spec, &budget)?;
            let mut cfg = SimConfig::new(&g, kind.into());
            cfg.seed = seed;
            cfg.t_end = t_end;
            cfg.tau = tau;
            cfg.noise_intensity = noise;
            cfg.stride = stride;
            cfg.dt = match dt {
                Some(dt) => dt,
                // largest step not above the default that divides tau evenly
                None if kind == KindArg::Delayed && tau > 0.0 => tau / (tau / cfg.dt).ceil(),
                None => cfg.dt,
            };
            if matches!(kind, KindArg::Noiseless | KindArg::Delayed) {
                cfg.initial_state = sim::random_initial_state(g.num_vertices(), seed);
            }

            let (family, n, k) = (spec.family, spec.n, spec.k);
            let (trace, coherence, analytic_name, analytic) = match kind {
                KindArg::Noiseless => {
                    (sim::run_noiseless(&cfg)?, None, "epsilon", metrics::epsilon_recursive(family, n, k))
                }
                KindArg::Delayed => {
                    (sim::run_delayed(&cfg)?, None, "tau_max", metrics::tau_max(metrics::zeta(family, n, k)))
                }
                KindArg::Noisy1 => {
                    let run = sim::run_first_order_noisy(&cfg, trials)?;
                    (run.trace, Some(run.estimate), "H1", metrics::h1(family, n, k)?)
                }
                KindArg::Noisy2 => {
                    let run = sim::run_second_order_noisy(&cfg, trials)?;
                    (run.trace, Some(run.estimate), "H2", metrics::h2(family, n, k)?)
                }
            };

            if let Some(out) = out {
                let mut buf = Vec::new();
                export::write_trace_csv(&trace, &mut buf)?;
                output.write(Some(&out), &buf)?;
            }
            let doc = json!({
                "schema": format!("selfsim-sim-summary/{}", export::SCHEMA_VERSION),
                "spec": spec,
                "kind": trace.kind,
                "seed": seed,
                "dt": cfg.dt,
                "t_end": cfg.t_end,
                "tau": cfg.tau,
                "trials": coherence.map(|c| c.trials),
                "empirical_coherence": coherence.map(|c| c.value),
                "stderr": coherence.and_then(|c| c.stderr),
                "analytic_quantity": analytic_name,
                "analytic": analytic,
                "diverged": trace.diverged,
                "divergence_time": trace.divergence_time,
            });
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            output.write(summary.as_deref(), text.as_bytes())?;
        }
        Command::Sweep { families, k_values, n_range, outputs, format, out } => {
            let spec = SweepSpec { families, k_values, n_range, outputs, format: format.into() };
            let reports = sweep::cmd_sweep(&spec, &budget)?;
            output.write(out.as_deref(), sweep::render_sweep(&spec, &reports)?.as_bytes())?;
        }
    }
    Ok(Outcome::Success)
}

/// Bad input is a usage error (2); everything else that stops a run early
/// counts as a failure (1).
fn exit_code_for(err: &anyhow::Error) -> u8 {
    use selfsim::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::InvalidSpec(_) | E::InvalidConfig(_) | E::InvalidSweep(_) | E::BudgetExceeded { .. } | E::NoChecks) => {
            2
        }
        _ => 1,
    }
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    // clap exits with status 2 on usage errors
    let cli = Cli::parse_from(args);
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();

    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
