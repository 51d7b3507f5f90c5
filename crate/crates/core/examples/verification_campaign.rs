//! A seeded verification campaign with three-way verdicts, written as JSON and CSV.
//!
//! ```bash
//! cargo run --release -p qcontinuity --example verification_campaign [suite] [trials]
//! ```

use qcontinuity::harness::{emit_report, load_report, run_suite, CampaignConfig, Outcome, ReportFormat, Suite};
use qcontinuity::metrics::BracketBudget;
use qcontinuity::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let suite: Suite = args.next().as_deref().unwrap_or("prop2").parse()?;
    let trials: u64 = args.next().and_then(|t| t.parse().ok()).unwrap_or(20);

    let cfg = CampaignConfig::new(suite, trials, 42).with_budget(BracketBudget::quick());
    let result = run_suite(&cfg)?;
    println!("{suite}: {}", result.summary);

    let tightest = result
        .rows
        .iter()
        .filter(|r| r.rhs_lo > 0.0)
        .max_by(|a, b| (a.lhs / a.rhs_lo).total_cmp(&(b.lhs / b.rhs_lo)));
    if let Some(r) = tightest {
        println!(
            "tightest row: trial {} {} lhs {:.3e} rhs [{:.3e}, {:.3e}] ε [{:.3e}, {:.3e}] ({})",
            r.trial, r.bound_name, r.lhs, r.rhs_lo, r.rhs_hi, r.eps_lo, r.eps_hi, r.epsilon
        );
    }
    for r in result.rows.iter().filter(|r| r.outcome != Outcome::Pass) {
        println!("{} trial {}: {} lhs {:.6e} rhs_hi {:.6e}", r.outcome, r.trial, r.bound_name, r.lhs, r.rhs_hi);
    }

    let dir = std::env::temp_dir();
    let json = dir.join(format!("{suite}_report.json"));
    let csv = dir.join(format!("{suite}_report.csv"));
    emit_report(&result, ReportFormat::Json, &json)?;
    emit_report(&result, ReportFormat::Csv, &csv)?;
    let back = load_report(&json)?;
    println!("wrote {} and {}; reloaded summary: {}", json.display(), csv.display(), back.summary);
    std::process::exit(result.summary.exit_code());
}
