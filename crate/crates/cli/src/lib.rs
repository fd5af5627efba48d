//! Front end of the `wclt` binary: argument parsing, command execution and
//! artifact writing. Commands return their artifacts so they can be tested
//! without touching the filesystem.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use wclt_core::artifacts::{distance_json, samples_csv, sweep_csv, Envelope, RunConfig, SimulationMeta, SweepRow};
use wclt_core::bounds::{rate_term, regime_bound, wasserstein_bound, BoundReport};
use wclt_core::chaos::suite::{check_supplied_kernel, report, run_suite, SuiteConfig};
use wclt_core::chaos::{GridSpec, KernelDump};
use wclt_core::distance::wasserstein1_to_normal;
use wclt_core::graph_stats::{exact_moments, normalized_samples, normalized_samples_with};
use wclt_core::pattern::{parse_pattern, PatternGraph};
use wclt_core::weights::WeightModel;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] wclt_core::Error),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("verification failed: {0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use wclt_core::Error as E;
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Core(E::Degenerate(_)) => 3,
            CliError::Core(E::Resource(_)) => 4,
            _ => 2,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "wclt",
    version,
    about = "Normal approximation of weighted subgraph counts in G(n, p)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Named pattern (triangle, cycle:r, complete:r, path:r, star:r) or an edge-list file.
    #[arg(long)]
    pub pattern: String,
    /// Edge-weight law: const:c, unif:b, exp:lambda or twopoint:a,b,q.
    #[arg(long, default_value = "unif:1")]
    pub weights: WeightModel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate bound and regime bound as JSON.
    Bound {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, required_unless_present = "sweep_n")]
        n: Option<usize>,
        #[arg(long)]
        p: f64,
        /// Evaluate at every listed n instead of a single one.
        #[arg(long, value_delimiter = ',')]
        sweep_n: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        cutoff_c: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalised samples of W as CSV, with `<out>.meta.json` alongside.
    Simulate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wasserstein-1 distance of the `normalized` column to N(0, 1).
    Distance {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the chaos identity suite, optionally on a supplied kernel too.
    ChaosVerify {
        #[arg(long, default_value = "4,4")]
        grid: GridArg,
        /// Paths per check.
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Kernel dump (JSON) to check alongside the suite.
        #[arg(long)]
        kernel: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical distance against the rate term over a list of n.
    RateSweep {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        sweep_n: Vec<usize>,
        #[arg(long, conflicts_with = "p_rule", required_unless_present = "p_rule")]
        p: Option<f64>,
        /// `pow:c,alpha` for p = c n^{-alpha}.
        #[arg(long)]
        p_rule: Option<PRule>,
        #[arg(long, default_value_t = 20_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridArg {
    pub blocks: usize,
    pub cells_per_block: usize,
}

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (k, m) = s.split_once(',').ok_or_else(|| format!("expected K,M, found '{s}'"))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid grid size '{x}'"))
        };
        Ok(Self {
            blocks: parse(k)?,
            cells_per_block: parse(m)?,
        })
    }
}

/// `p = c n^{-alpha}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PRule {
    pub c: f64,
    pub alpha: f64,
}

impl PRule {
    pub fn at(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(-self.alpha)
    }
}

impl FromStr for PRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let body = s
            .strip_prefix("pow:")
            .ok_or_else(|| format!("expected pow:c,alpha, found '{s}'"))?;
        let (c, alpha) = body
            .split_once(',')
            .ok_or_else(|| format!("expected pow:c,alpha, found '{s}'"))?;
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("invalid number '{x}'"));
        let rule = Self {
            c: parse(c)?,
            alpha: parse(alpha)?,
        };
        if !(rule.c > 0.0) || !rule.alpha.is_finite() {
            return Err(format!("p-rule needs c > 0 and finite alpha, found '{s}'"));
        }
        Ok(rule)
    }
}

impl std::fmt::Display for PRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "pow:{},{}", self.c, self.alpha)
    }
}

/// One file (or stdout when `path` is `None`) produced by a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: Option<PathBuf>,
    pub contents: String,
}

#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Set when the command ran but its checks did not all pass.
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Self {
            artifacts,
            failure: None,
        }
    }
}

fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// A pattern name, or a path to an edge-list file if one exists.
pub fn load_pattern(spec: &str) -> Result<PatternGraph, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        return Ok(parse_pattern(&text)?);
    }
    PatternGraph::named(spec).map_err(|e| CliError::Usage(e.to_string()))
}

fn base_config(subcommand: &str, graph: &GraphArgs) -> RunConfig {
    RunConfig {
        subcommand: subcommand.into(),
        pattern: Some(graph.pattern.clone()),
        weights: Some(graph.weights.to_string()),
        ..Default::default()
    }
}

fn display(path: &Option<PathBuf>) -> Option<String> {
    path.as_ref().map(|p| p.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundOutput {
    pub n: usize,
    pub p: f64,
    pub general: BoundReport,
    pub regime: Option<BoundReport>,
    /// Why no regime bound is available, when it is not.
    pub regime_unavailable: Option<String>,
}

fn bound_at(g: &PatternGraph, n: usize, p: f64, model: &WeightModel, c: f64) -> Result<BoundOutput, CliError> {
    let general = wasserstein_bound(g, n, p, model)?;
    let (regime, regime_unavailable) = match regime_bound(g, n, p, model, c) {
        Ok(r) => (Some(r), None),
        Err(e @ (wclt_core::Error::Unsupported(_) | wclt_core::Error::Degenerate(_))) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    Ok(BoundOutput {
        n,
        p,
        general,
        regime,
        regime_unavailable,
    })
}

fn read_normalized_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        .clone();
    if headers.is_empty() {
        return Err(wclt_core::Error::Domain(format!("{} is empty", path.display())).into());
    }
    let column = headers
        .iter()
        .position(|h| h == "normalized")
        .ok_or_else(|| CliError::Usage(format!("{} has no 'normalized' column", path.display())))?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| wclt_core::Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = record.get(column).unwrap_or("");
        let x: f64 = field.parse().map_err(|_| wclt_core::Error::Parse {
            line,
            message: format!("'{field}' is not a number"),
        })?;
        values.push(x);
    }
    Ok(values)
}

fn check_p(p: f64) -> Result<(), CliError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(wclt_core::Error::Domain(format!("p = {p} must lie in (0, 1]")).into());
    }
    Ok(())
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Bound {
            graph,
            n,
            p,
            sweep_n,
            cutoff_c,
            out,
        } => {
            let g = load_pattern(&graph.pattern)?;
            check_p(*p)?;
            let config = RunConfig {
                n: *n,
                p: Some(*p),
                sweep_n: (!sweep_n.is_empty()).then(|| sweep_n.clone()),
                cutoff_c: Some(*cutoff_c),
                out: display(out),
                ..base_config("bound", graph)
            };
            let contents = if sweep_n.is_empty() {
                let n = n.ok_or_else(|| CliError::Usage("--n or --sweep-n is required".into()))?;
                Envelope::new(config, bound_at(&g, n, *p, &graph.weights, *cutoff_c)?).to_json()
            } else {
                let rows = sweep_n
                    .iter()
                    .map(|&n| bound_at(&g, n, *p, &graph.weights, *cutoff_c))
                    .collect::<Result<Vec<_>, _>>()?;
                Envelope::new(config, rows).to_json()
            };
            Ok(Outcome::ok(vec![Artifact {
                path: out.clone(),
                contents,
            }]))
        }
        Command::Simulate {
            graph,
            n,
            p,
            reps,
            seed,
            out,
        } => {
            let g = load_pattern(&graph.pattern)?;
            check_p(*p)?;
            let exact = exact_moments(&g, *n, *p, &graph.weights)?;
            let samples = normalized_samples_with(&g, *n, *p, &graph.weights, *reps, *seed, &exact)?;
            let config = RunConfig {
                n: Some(*n),
                p: Some(*p),
                reps: Some(*reps),
                seed: Some(*seed),
                out: Some(out.display().to_string()),
                ..base_config("simulate", graph)
            };
            let meta = SimulationMeta {
                exact_mean: exact.mean,
                exact_variance: exact.variance,
                census: exact.census,
                rows: samples.len() as u64,
            };
            Ok(Outcome::ok(vec![
                Artifact {
                    path: Some(out.clone()),
                    contents: samples_csv(&samples),
                },
                Artifact {
                    path: Some(meta_path(out)),
                    contents: Envelope::new(config, meta).to_json(),
                },
            ]))
        }
        Command::Distance { input, out } => {
            let values = read_normalized_column(input)?;
            let config = RunConfig {
                subcommand: "distance".into(),
                input: Some(input.display().to_string()),
                out: display(out),
                ..Default::default()
            };
            Ok(Outcome::ok(vec![Artifact {
                path: out.clone(),
                contents: distance_json(config, wasserstein1_to_normal(&values)?),
            }]))
        }
        Command::ChaosVerify {
            grid,
            reps,
            seed,
            kernel,
            out,
        } => {
            let cfg = SuiteConfig {
                grid: GridSpec::new(grid.blocks, grid.cells_per_block)?,
                paths: *reps,
                seed: *seed,
            };
            let mut checks = run_suite(&cfg)?.checks;
            if let Some(path) = kernel {
                let text = std::fs::read_to_string(path).map_err(io_error(path))?;
                let dump: KernelDump = serde_json::from_str(&text).map_err(|e| wclt_core::Error::Parse {
                    line: e.line(),
                    message: e.to_string(),
                })?;
                checks.extend(check_supplied_kernel(&dump, &cfg)?);
            }
            let suite = report(&cfg, checks);
            let failed: Vec<String> = suite
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.clone())
                .collect();
            let config = RunConfig {
                subcommand: "chaos-verify".into(),
                reps: Some(*reps),
                seed: Some(*seed),
                grid: Some((grid.blocks, grid.cells_per_block)),
                kernel: display(kernel),
                out: display(out),
                ..Default::default()
            };
            Ok(Outcome {
                artifacts: vec![Artifact {
                    path: out.clone(),
                    contents: Envelope::new(config, suite).to_json(),
                }],
                failure: (!failed.is_empty()).then(|| failed.join(", ")),
            })
        }
        Command::RateSweep {
            graph,
            sweep_n,
            p,
            p_rule,
            reps,
            seed,
            out,
        } => {
            if sweep_n.is_empty() {
                return Err(CliError::Usage("--sweep-n needs at least one value".into()));
            }
            let g = load_pattern(&graph.pattern)?;
            let p_at = |n: usize| match (p, p_rule) {
                (Some(p), _) => *p,
                (None, Some(rule)) => rule.at(n),
                (None, None) => unreachable!("clap requires --p or --p-rule"),
            };
            let mut rows = Vec::with_capacity(sweep_n.len());
            for &n in sweep_n {
                let p = p_at(n);
                check_p(p)?;
                let xs: Vec<f64> = normalized_samples(&g, n, p, &graph.weights, *reps, *seed)?
                    .into_iter()
                    .map(|s| s.normalized)
                    .collect();
                let empirical_dw = wasserstein1_to_normal(&xs)?.w1;
                let rate = rate_term(&g, n, p)?;
                rows.push(SweepRow {
                    n,
                    p,
                    empirical_dw,
                    rate_term: rate,
                    ratio: empirical_dw / rate,
                });
            }
            let config = RunConfig {
                p: *p,
                p_rule: p_rule.map(|r| r.to_string()),
                reps: Some(*reps),
                seed: Some(*seed),
                sweep_n: Some(sweep_n.clone()),
                out: display(out),
                ..base_config("rate-sweep", graph)
            };
            let mut artifacts = vec![Artifact {
                path: out.clone(),
                contents: sweep_csv(&rows),
            }];
            if let Some(out) = out {
                artifacts.push(Artifact {
                    path: Some(meta_path(out)),
                    contents: Envelope::new(config, rows).to_json(),
                });
            }
            Ok(Outcome::ok(artifacts))
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_error(path))?;
    tmp.write_all(contents.as_bytes()).map_err(io_error(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

pub fn emit(artifacts: &[Artifact]) -> Result<(), CliError> {
    for a in artifacts {
        match &a.path {
            Some(path) => write_atomic(path, &a.contents)?,
            None => print!("{}", a.contents),
        }
    }
    Ok(())
}

/// Applies `WCLT_THREADS` to the global pool. Results do not depend on it.
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(raw) = value else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("WCLT_THREADS must be a positive integer, found '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("wclt").chain(args.iter().copied()))
    }

    #[test]
    fn grid_and_rule_parse() {
        assert_eq!(
            "3,5".parse::<GridArg>().unwrap(),
            GridArg {
                blocks: 3,
                cells_per_block: 5
            }
        );
        assert!("3".parse::<GridArg>().is_err());
        let rule: PRule = "pow:0.5,0.25".parse().unwrap();
        assert!((rule.at(16) - 0.25).abs() < 1e-15);
        assert_eq!(rule.to_string(), "pow:0.5,0.25");
        assert!("pow:-1,1".parse::<PRule>().is_err());
    }

    #[test]
    fn bound_example() {
        let cli = parse(&[
            "bound",
            "--pattern",
            "triangle",
            "--n",
            "10",
            "--p",
            "0.1",
            "--weights",
            "unif:1",
        ])
        .unwrap();
        let out = execute(&cli.command).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.artifacts[0].contents).unwrap();
        assert!((v["result"]["general"]["rate_term"].as_f64().unwrap() - 1.0541).abs() < 1e-4);
        assert_eq!(v["config"]["n"], 10);
        assert_eq!(v["format_version"], 1);
    }

    #[test]
    fn unknown_pattern_is_usage_error() {
        let cli = parse(&["bound", "--pattern", "pentagram", "--n", "10", "--p", "0.1"]).unwrap();
        assert_eq!(execute(&cli.command).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn p_one_is_rejected() {
        let cli = parse(&["bound", "--pattern", "triangle", "--n", "10", "--p", "1"]).unwrap();
        assert_eq!(execute(&cli.command).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn degenerate_simulation_exit_code() {
        let cli = parse(&[
            "simulate",
            "--pattern",
            "triangle",
            "--n",
            "5",
            "--p",
            "1",
            "--weights",
            "const:1",
            "--out",
            "x.csv",
        ])
        .unwrap();
        assert_eq!(execute(&cli.command).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn resource_cap_exit_code() {
        let cli = parse(&["chaos-verify", "--grid", "64,8"]).unwrap();
        assert_eq!(execute(&cli.command).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn rate_sweep_requires_a_p() {
        assert!(parse(&["rate-sweep", "--pattern", "triangle", "--sweep-n", "10"]).is_err());
        assert!(parse(&[
            "rate-sweep",
            "--pattern",
            "triangle",
            "--sweep-n",
            "10",
            "--p",
            "0.5",
            "--p-rule",
            "pow:1,0.5"
        ])
        .is_err());
    }

    #[test]
    fn meta_path_appends_suffix() {
        assert_eq!(meta_path(Path::new("out/s.csv")), PathBuf::from("out/s.csv.meta.json"));
    }
}
