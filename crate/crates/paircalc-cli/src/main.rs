//! Batch front end: tree/bayes queries, product classification, the
//! rate-exponent table, prior sampling, and network simulation, all
//! seedable and reproducible. JSON in, text table or CSV out.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use paircalc_core::born::{mean_rate_closed, mean_rate_mc, solve_alpha};
use paircalc_core::hilbert::sample_objects;
use paircalc_core::network::{
    compare_modes_with_trials, simulate_with_trials, Mode, NetworkSpec, DEFAULT_TRIALS,
};
use paircalc_core::pair::{classify, BilinearProduct};
use paircalc_core::tree::{bayes, PartitionTree, TreeDoc, TreePath};

#[derive(Parser)]
#[command(
    name = "paircalc",
    version,
    about = "Partition-tree proportions, pair products, and amplitude networks"
)]
struct Cli {
    /// Seed for stochastic operations; echoed in every output header.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Emit CSV instead of the text table.
    #[arg(long, global = true)]
    csv: bool,
    /// Worker threads for Monte Carlo sampling. Results are identical
    /// for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Query node values and path proportions of a partition tree.
    Tree {
        /// Tree document ({"nodes": [...], "root": ...}).
        #[arg(long)]
        file: PathBuf,
        /// Node id to value (repeatable).
        #[arg(long)]
        node: Vec<String>,
        /// Path DEST:SOURCE to value (repeatable).
        #[arg(long)]
        path: Vec<String>,
    },
    /// Discrete Bayes update from a prior and a likelihood vector.
    Bayes {
        /// Comma-separated prior over K hypotheses (sums to 1).
        #[arg(long, value_delimiter = ',', required = true)]
        prior: Vec<f64>,
        /// Comma-separated likelihood of the data under each hypothesis.
        #[arg(long, value_delimiter = ',', required = true)]
        likelihood: Vec<f64>,
    },
    /// Classify a bilinear pair product from its 8 gamma coefficients.
    Classify {
        /// Flat coefficients g111,g112,g121,g122,g211,g212,g221,g222.
        #[arg(long, value_delimiter = ',', required = true)]
        gamma: Vec<f64>,
        /// Tolerance for the associativity, degeneracy, and discriminant
        /// probes.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Closed-form vs Monte Carlo mean-rate table and the solved exponent.
    BornAlpha {
        /// Mean rate to solve the exponent for.
        #[arg(long, default_value_t = 2.0)]
        target: f64,
        /// Monte Carlo samples per table row.
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Residual tolerance for the bisection.
        #[arg(long, default_value_t = 1e-10)]
        solve_tol: f64,
    },
    /// Draw sample objects and emit their components as CSV.
    Sample {
        /// Number of base states per object.
        #[arg(long)]
        n: usize,
        /// Number of objects to draw.
        #[arg(long, default_value_t = 1)]
        draws: usize,
    },
    /// Evaluate a network in one mode.
    Simulate {
        /// Network document ({"elements": [...], "edges": [...]}).
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Trials for stochastic mode.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run all three modes side by side and report interference.
    Compare {
        /// Network document ({"elements": [...], "edges": [...]}).
        #[arg(long)]
        file: PathBuf,
        /// Trials for stochastic mode.
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Scalar,
    Pair,
    Stochastic,
}

impl From<ModeArg> for Mode {
    fn from(mode: ModeArg) -> Mode {
        match mode {
            ModeArg::Scalar => Mode::Scalar,
            ModeArg::Pair => Mode::Pair,
            ModeArg::Stochastic => Mode::Stochastic,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(anyhow::Error::from);
            pool.and_then(|pool| pool.install(|| run(&cli)))
        }
        None => run(&cli),
    };
    match result {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

/// Deserialize a JSON file, reporting the JSON path of the offending
/// field on schema violations.
fn load_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read '{}'", path.display()))?;
    let mut deserializer = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut deserializer).map_err(|err| {
        anyhow!(
            "schema violation in '{}' at {}: {}",
            path.display(),
            err.path(),
            err.inner()
        )
    })
}

fn run(cli: &Cli) -> anyhow::Result<String> {
    let mut out = String::new();
    writeln!(out, "# seed: {}", cli.seed)?;
    match &cli.command {
        Command::Tree { file, node, path } => {
            let doc: TreeDoc = load_json(file)?;
            let tree = PartitionTree::from_doc(&doc)?;
            if node.is_empty() && path.is_empty() {
                bail!("nothing to query: pass --node and/or --path");
            }
            if cli.csv {
                writeln!(out, "query,value")?;
            }
            for id in node {
                let value = tree.node_value(id)?;
                if cli.csv {
                    writeln!(out, "node:{id},{value}")?;
                } else {
                    writeln!(out, "node {id} = {value}")?;
                }
            }
            for spec in path {
                let (dest, source) = spec
                    .split_once(':')
                    .ok_or_else(|| anyhow!("path '{spec}' is not of the form DEST:SOURCE"))?;
                let value = tree.path_value(&TreePath::new(dest, source))?;
                if cli.csv {
                    writeln!(out, "path:{spec},{value}")?;
                } else {
                    writeln!(out, "path {spec} = {value}")?;
                }
            }
        }
        Command::Bayes { prior, likelihood } => {
            let (posterior, evidence) = bayes(prior, likelihood)?;
            if cli.csv {
                writeln!(out, "# evidence: {evidence}")?;
                writeln!(out, "k,prior,likelihood,posterior")?;
                for (k, post) in posterior.iter().enumerate() {
                    writeln!(out, "{k},{},{},{post}", prior[k], likelihood[k])?;
                }
            } else {
                writeln!(out, "evidence = {evidence}")?;
                for (k, post) in posterior.iter().enumerate() {
                    writeln!(out, "posterior[{k}] = {post}")?;
                }
            }
        }
        Command::Classify { gamma, tol } => {
            let coefficients: [f64; 8] = gamma
                .as_slice()
                .try_into()
                .map_err(|_| anyhow!("--gamma needs exactly 8 values, got {}", gamma.len()))?;
            let product = BilinearProduct::new(coefficients)?;
            let class = classify(&product, *tol)?;
            if cli.csv {
                writeln!(out, "class,mu")?;
                let mu = class.mu().map_or(String::new(), |m| m.to_string());
                writeln!(out, "{:?},{mu}", class)?;
            } else {
                writeln!(out, "{class}")?;
            }
        }
        Command::BornAlpha {
            target,
            samples,
            solve_tol,
        } => {
            let alpha_star = solve_alpha(*target, *solve_tol)?;
            let rows: Vec<(f64, f64, paircalc_core::born::McEstimate)> = [0.5, 1.0, 2.0, 3.0, 4.0]
                .into_iter()
                .enumerate()
                .map(|(i, alpha)| {
                    let closed = mean_rate_closed(alpha)?;
                    let est = mean_rate_mc(alpha, *samples, cli.seed.wrapping_add(i as u64));
                    Ok((alpha, closed, est))
                })
                .collect::<anyhow::Result<_>>()?;
            if cli.csv {
                writeln!(out, "# target: {target}")?;
                writeln!(out, "# solved_alpha: {alpha_star:.10}")?;
                writeln!(out, "alpha,closed_form,mc_mean,std_error")?;
                for (alpha, closed, est) in rows {
                    writeln!(
                        out,
                        "{alpha},{closed:.10},{:.10},{:.10}",
                        est.estimate, est.std_error
                    )?;
                }
            } else {
                writeln!(
                    out,
                    "{:<8} {:<16} {:<16} {:<16}",
                    "alpha", "closed_form", "mc_mean", "std_error"
                )?;
                for (alpha, closed, est) in rows {
                    writeln!(
                        out,
                        "{alpha:<8} {closed:<16.10} {:<16.10} {:<16.10}",
                        est.estimate, est.std_error
                    )?;
                }
                writeln!(out, "solved alpha (target {target}) = {alpha_star:.10}")?;
            }
        }
        Command::Sample { n, draws } => {
            let objects = sample_objects(*n, *draws, cli.seed)?;
            let header: Vec<String> = (0..*n)
                .flat_map(|k| [format!("re{k}"), format!("im{k}")])
                .collect();
            writeln!(out, "draw,{}", header.join(","))?;
            for (i, object) in objects.iter().enumerate() {
                let cells: Vec<String> = object
                    .components()
                    .iter()
                    .flat_map(|p| [p.c1.to_string(), p.c2.to_string()])
                    .collect();
                writeln!(out, "{i},{}", cells.join(","))?;
            }
        }
        Command::Simulate { file, mode, trials } => {
            let spec: NetworkSpec = load_json(file)?;
            let mode = Mode::from(*mode);
            let trials = trials.unwrap_or(DEFAULT_TRIALS);
            let result = simulate_with_trials(&spec, mode, Some(cli.seed), trials)?;
            writeln!(out, "# mode: {mode}")?;
            if mode == Mode::Stochastic {
                writeln!(out, "# trials: {trials}")?;
            }
            if cli.csv {
                writeln!(out, "detector,rate,std_error")?;
                for (id, rate) in &result.detector_rates {
                    let se = result
                        .std_error
                        .as_ref()
                        .map_or(String::new(), |e| e[id].to_string());
                    writeln!(out, "{id},{rate},{se}")?;
                }
            } else {
                for (id, rate) in &result.detector_rates {
                    match &result.std_error {
                        Some(errors) => writeln!(out, "detector {id} = {rate} +- {}", errors[id])?,
                        None => writeln!(out, "detector {id} = {rate}")?,
                    }
                }
            }
        }
        Command::Compare { file, trials } => {
            let spec: NetworkSpec = load_json(file)?;
            let trials = trials.unwrap_or(DEFAULT_TRIALS);
            let report = compare_modes_with_trials(&spec, cli.seed, trials)?;
            writeln!(out, "# trials: {trials}")?;
            let errors = report.stochastic.std_error.as_ref().expect("stochastic errors");
            if cli.csv {
                writeln!(
                    out,
                    "detector,scalar,pair,stochastic,std_error,interference,matches_scalar"
                )?;
                for (id, scalar) in &report.scalar.detector_rates {
                    writeln!(
                        out,
                        "{id},{scalar},{},{},{},{},{}",
                        report.pair.detector_rates[id],
                        report.stochastic.detector_rates[id],
                        errors[id],
                        report.interference[id],
                        report.stochastic_matches_scalar[id]
                    )?;
                }
            } else {
                writeln!(
                    out,
                    "{:<10} {:<12} {:<12} {:<12} {:<12} {:<13} matches_scalar",
                    "detector", "scalar", "pair", "stochastic", "std_error", "interference"
                )?;
                for (id, scalar) in &report.scalar.detector_rates {
                    writeln!(
                        out,
                        "{id:<10} {scalar:<12.6} {:<12.6} {:<12.6} {:<12.6} {:<+13.6} {}",
                        report.pair.detector_rates[id],
                        report.stochastic.detector_rates[id],
                        errors[id],
                        report.interference[id],
                        report.stochastic_matches_scalar[id]
                    )?;
                }
                writeln!(
                    out,
                    "stochastic matches scalar on all detectors: {}",
                    report.all_match()
                )?;
            }
        }
    }
    Ok(out)
}
