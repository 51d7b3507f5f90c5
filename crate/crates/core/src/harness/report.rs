use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoundVerdict, CampaignConfig, CampaignResult, Suite, Summary};
use crate::error::{Error, Result};

/// Column order of CSV reports.
pub const CSV_HEADER: &str = "suite,trial,bound_name,lhs,eps_lo,eps_hi,rhs_lo,rhs_hi,outcome";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// `.csv` selects CSV; anything else is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub seed: u64,
    pub config: CampaignConfig,
    pub rows: Vec<BoundVerdict>,
    pub summary: Summary,
}

impl From<&CampaignResult> for Report {
    fn from(r: &CampaignResult) -> Self {
        Report {
            suite: r.config.suite,
            seed: r.config.seed,
            config: r.config.clone(),
            rows: r.rows.clone(),
            summary: r.summary,
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit_report(result: &CampaignResult, format: ReportFormat, path: &Path) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::Config("refusing to write a report with no rows".into()));
    }
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &Report::from(result))?;
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER.split(','))?;
            for r in &result.rows {
                w.write_record([
                    r.suite.as_str().to_string(),
                    r.trial.to_string(),
                    r.bound_name.clone(),
                    fmt_float(r.lhs),
                    fmt_float(r.eps_lo),
                    fmt_float(r.eps_hi),
                    fmt_float(r.rhs_lo),
                    fmt_float(r.rhs_hi),
                    r.outcome.as_str().to_string(),
                ])?;
            }
            w.flush()?;
            return Ok(());
        }
    }
    out.flush()?;
    Ok(())
}

/// Loads a JSON report and recomputes its summary from the rows.
pub fn load_report(path: &Path) -> Result<Report> {
    let mut report: Report = serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?;
    let fresh = Summary::of(&report.rows);
    if fresh != report.summary {
        log::warn!("stored summary differs from the rows; using the recomputed one");
        report.summary = fresh;
    }
    Ok(report)
}
