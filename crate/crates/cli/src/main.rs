use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qcontinuity::bounds::{BoundName, BoundSpec};
use qcontinuity::entropic::Units;
use qcontinuity::harness::{
    emit_report, load_report, run_suite, sweep_tightness, write_sweep_csv, CampaignConfig, ReportFormat, Suite,
    SweepFamily, SweepGrid,
};

#[derive(Parser)]
#[command(name = "qcontinuity", version, about = "Continuity bounds for quantum channels: verification campaigns, sweeps and evaluators")]
struct Cli {
    /// Units for printed entropic quantities. Report files are always in nats.
    #[arg(long, value_enum, global = true, default_value_t = UnitArg::Nats)]
    units: UnitArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Nats,
    Bits,
}

impl From<UnitArg> for Units {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Nats => Units::Nats,
            UnitArg::Bits => Units::Bits,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded verification campaign.
    Verify {
        #[arg(long)]
        suite: Option<Suite>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Campaign config (JSON). Flags given on the command line override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path; `.csv` writes CSV, anything else JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form tightness sweep over erasure pairs.
    Sweep {
        #[arg(long)]
        family: SweepFamily,
        /// Grid file (JSON).
        #[arg(long)]
        grid: PathBuf,
        /// CSV output; rows go to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one bound and print its value.
    Eval {
        #[arg(long)]
        bound: BoundName,
        /// Comma-separated `key=value` pairs; `eps` is the bound's argument.
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Inspect a JSON report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        summary: bool,
    },
}

fn parse_params(s: &str) -> Result<(f64, BoundSpec), String> {
    let mut eps = None;
    let mut pairs = Vec::new();
    for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value, got `{item}`"))?;
        let v: f64 = v.trim().parse().map_err(|_| format!("`{k}` is not a number: `{v}`"))?;
        if k.trim() == "eps" {
            eps = Some(v);
        } else {
            pairs.push((k.trim().to_string(), v));
        }
    }
    let eps = eps.ok_or("missing `eps` parameter")?;
    Ok((eps, BoundSpec { name: BoundName::Thm1Chi, params: pairs.into_iter().collect(), energy: None }))
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let units: Units = cli.units.into();
    match cli.command {
        Command::Verify { suite, trials, seed, config, out } => {
            let mut cfg = match (&config, suite) {
                (Some(path), _) => CampaignConfig::from_json(&std::fs::read_to_string(path)?)?,
                (None, Some(s)) => CampaignConfig::new(s, 100, 0),
                (None, None) => return Err("either --suite or --config is required".into()),
            };
            if let Some(s) = suite {
                cfg.suite = s;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let result = run_suite(&cfg)?;
            println!("{}: {}", cfg.suite, result.summary);
            if let Some(path) = out {
                emit_report(&result, ReportFormat::from_path(&path), &path)?;
            }
            Ok(ExitCode::from(result.summary.exit_code() as u8))
        }
        Command::Sweep { family, grid, out } => {
            let grid: SweepGrid = serde_json::from_str(&std::fs::read_to_string(grid)?)?;
            let rows = sweep_tightness(family, &grid)?;
            match out {
                Some(path) => write_sweep_csv(&rows, &path)?,
                None => {
                    for r in &rows {
                        println!(
                            "{} {} log_d={:?} E={:?} x={} dC={} bound={} ratio={:.6}",
                            r.family.as_str(),
                            r.capacity.as_str(),
                            r.log_d,
                            r.energy,
                            r.x,
                            units.convert(r.delta_c),
                            units.convert(r.bound),
                            r.ratio
                        );
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { bound, params } => {
            let (eps, mut spec) = parse_params(&params)?;
            spec.name = bound;
            println!("{}", units.convert(spec.evaluate(eps)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { input, summary } => {
            let report = load_report(&input)?;
            if summary {
                println!("{} seed {}: {}", report.suite, report.seed, report.summary);
            } else {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
            Ok(ExitCode::from(report.summary.exit_code() as u8))
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
