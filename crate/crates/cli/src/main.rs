use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gerbe_sym::gerbe::{CoverSpec, GerbeDataset};
use gerbe_sym::suite::{self, Preset, Report, Suite, SuiteConfig};

#[derive(Parser)]
#[command(name = "gerbe-sym", version, about = "Generate gerbe datasets and verify the symmetry identities numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a gerbe dataset (transition phases, connection, curving) as JSON.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Use the trivial gerbe with zero connective data.
        #[arg(long)]
        trivial: bool,
    },
    /// Run the selected identity suites and report deviations.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Verify the gerbe stored in this dataset instead of a random one.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Run only the flow correspondence checks.
    Flow {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Torus preset: t1, t2 or t3.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    splits: Option<usize>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample points per overlap.
    #[arg(long)]
    samples: Option<usize>,
    /// Sample points for each flow identity.
    #[arg(long)]
    flow_points: Option<usize>,
    /// Tolerance override, as `<identity>=<value>`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Comma-separated suites to run.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// Failures that are not identity failures map to exit code 2.
struct Usage(anyhow::Error);

impl From<anyhow::Error> for Usage {
    fn from(e: anyhow::Error) -> Usage {
        Usage(e)
    }
}

fn build_config(c: &Common) -> Result<SuiteConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SuiteConfig::from_json(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SuiteConfig::default(),
    };
    if let Some(p) = &c.preset {
        cfg.preset = p.parse::<Preset>()?;
    }
    if let Some(v) = c.splits {
        cfg.splits = v;
    }
    if let Some(v) = c.margin {
        cfg.margin = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.samples {
        cfg.samples = v;
    }
    if let Some(v) = c.flow_points {
        cfg.flow_points = v;
    }
    for t in &c.tol {
        let Some((name, value)) = t.split_once('=') else {
            bail!("--tol expects NAME=VALUE, got `{t}`");
        };
        let v: f64 = value.parse().with_context(|| format!("bad tolerance value `{value}`"))?;
        cfg.tolerances.insert(name.to_string(), v);
    }
    if !c.suite.is_empty() {
        cfg.suites = c.suite.iter().map(|s| s.parse::<Suite>()).collect::<Result<_, _>>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn emit_report(c: &Common, report: &Report) -> Result<()> {
    let text = match c.format {
        Format::Json => report.to_json(),
        Format::Text => report.to_string(),
    };
    emit(c.out.as_deref(), &text)
}

fn run(cli: Cli) -> Result<bool, Usage> {
    match cli.command {
        Command::Generate { common, trivial } => {
            let cfg = build_config(&common)?;
            let spec = CoverSpec { dim: cfg.preset.dim(), splits: cfg.splits, margin: cfg.margin };
            let data = GerbeDataset::generate(spec, cfg.seed, trivial).map_err(anyhow::Error::from)?;
            emit(common.out.as_deref(), &data.to_json())?;
            Ok(true)
        }
        Command::Verify { common, dataset } => {
            let cfg = build_config(&common)?;
            let report = match dataset {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    let data = GerbeDataset::from_json(&text)
                        .with_context(|| format!("parsing {}", p.display()))?;
                    suite::verify_dataset(&cfg, &data).map_err(anyhow::Error::from)?
                }
                None => suite::run_suites(&cfg, None).map_err(anyhow::Error::from)?,
            };
            emit_report(&common, &report)?;
            Ok(report.pass)
        }
        Command::Flow { common } => {
            let mut cfg = build_config(&common)?;
            cfg.suites = vec![Suite::Flows];
            let report = suite::run_suites(&cfg, None).map_err(anyhow::Error::from)?;
            emit_report(&common, &report)?;
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
