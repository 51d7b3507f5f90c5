//! Seeded verification campaigns with three-way verdicts, tightness sweeps
//! and report files.
//!
//! A campaign runs one [`Suite`] for a number of trials. Each trial draws its
//! instances from its own RNG stream (see [`generators::Generator::for_trial`]),
//! so results do not depend on thread scheduling.

pub mod generators;
mod report;
mod suites;
mod sweep;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::EnergySpec;
use crate::error::{Error, Result};
use crate::metrics::BracketBudget;

pub use report::{emit_report, load_report, Report, ReportFormat, CSV_HEADER};
pub use sweep::{sweep_tightness, write_sweep_csv, SweepFamily, SweepGrid, SweepRow};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Largest total dimension any trial may build densely.
pub const DIM_GUARD: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemma4,
    Prop2,
    Prop3,
    Prop4,
    Prop5,
    Prop6,
    Prop7,
    Prop8,
    Thm1,
    Thm2,
    Identities,
    Metrics,
}

impl Suite {
    pub const ALL: [Suite; 12] = [
        Suite::Lemma4,
        Suite::Prop2,
        Suite::Prop3,
        Suite::Prop4,
        Suite::Prop5,
        Suite::Prop6,
        Suite::Prop7,
        Suite::Prop8,
        Suite::Thm1,
        Suite::Thm2,
        Suite::Identities,
        Suite::Metrics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Lemma4 => "lemma4",
            Suite::Prop2 => "prop2",
            Suite::Prop3 => "prop3",
            Suite::Prop4 => "prop4",
            Suite::Prop5 => "prop5",
            Suite::Prop6 => "prop6",
            Suite::Prop7 => "prop7",
            Suite::Prop8 => "prop8",
            Suite::Thm1 => "thm1",
            Suite::Thm2 => "thm2",
            Suite::Identities => "identities",
            Suite::Metrics => "metrics",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Pass,
    Inconclusive,
    Violation,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Inconclusive => "INCONCLUSIVE",
            Outcome::Violation => "VIOLATION",
        }
    }

    /// PASS iff `lhs ≤ rhs_lo + tol`, VIOLATION iff `lhs > rhs_hi + tol`.
    pub fn judge(lhs: f64, rhs_lo: f64, rhs_hi: f64, tol: f64) -> Outcome {
        if lhs <= rhs_lo + tol {
            Outcome::Pass
        } else if lhs > rhs_hi + tol {
            Outcome::Violation
        } else {
            Outcome::Inconclusive
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One checked inequality `lhs ≤ bound(ε)` with `ε ∈ [eps_lo, eps_hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub suite: Suite,
    pub trial: u64,
    pub bound_name: String,
    pub lhs: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub rhs_lo: f64,
    pub rhs_hi: f64,
    pub outcome: Outcome,
    /// What `ε` measures, e.g. `trace_distance+beta` or `sqrt_diamond`.
    #[serde(default)]
    pub epsilon: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub certificates: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub inconclusive: usize,
    pub violation: usize,
}

impl Summary {
    pub fn of(rows: &[BoundVerdict]) -> Self {
        let mut s = Summary::default();
        for r in rows {
            s.total += 1;
            match r.outcome {
                Outcome::Pass => s.pass += 1,
                Outcome::Inconclusive => s.inconclusive += 1,
                Outcome::Violation => s.violation += 1,
            }
        }
        s
    }

    /// 0 when everything passed, 1 on any violation, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.violation > 0 {
            1
        } else if self.inconclusive > 0 {
            2
        } else {
            0
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} rows: {} PASS, {} INCONCLUSIVE, {} VIOLATION",
            self.total, self.pass, self.inconclusive, self.violation
        )
    }
}

/// Energy constraint `Tr Hρ_A ≤ bound` used by the energy suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    pub spec: EnergySpec,
    pub bound: f64,
}

fn default_trials() -> u64 {
    100
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub suite: Suite,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Per-factor dimensions by name (`a`, `b`, `c`, `d`, `r`, `e`, `truncation`, `k`).
    #[serde(default)]
    pub dims: BTreeMap<String, usize>,
    #[serde(default)]
    pub energy: Option<EnergyConfig>,
    #[serde(default)]
    pub budget: BracketBudget,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl CampaignConfig {
    pub fn new(suite: Suite, trials: u64, seed: u64) -> Self {
        CampaignConfig {
            suite,
            trials,
            seed,
            dims: BTreeMap::new(),
            energy: None,
            budget: BracketBudget::default(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_dim(mut self, key: &str, value: usize) -> Self {
        self.dims.insert(key.to_string(), value);
        self
    }

    pub fn with_energy(mut self, spec: EnergySpec, bound: f64) -> Self {
        self.energy = Some(EnergyConfig { spec, bound });
        self
    }

    pub fn with_budget(mut self, budget: BracketBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: CampaignConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self, key: &str, default: usize) -> usize {
        self.dims.get(key).copied().unwrap_or(default)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config("tolerance must be finite and nonnegative".into()));
        }
        const KEYS: [&str; 9] = ["a", "b", "c", "d", "r", "e", "truncation", "k", "n"];
        for (k, v) in &self.dims {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown dims key `{k}`")));
            }
            if *v < 1 || *v > 64 {
                return Err(Error::Config(format!("dims.{k} = {v} outside [1, 64]")));
            }
        }
        let product: usize = ["a", "b", "c", "d", "r"].iter().map(|k| self.dim(k, 2)).product();
        if product > DIM_GUARD {
            return Err(Error::Config(format!(
                "total dimension {product} exceeds the guard {DIM_GUARD}"
            )));
        }
        if let Some(e) = &self.energy {
            let profile = e.spec.profile()?;
            if e.bound < profile.ground_energy() {
                return Err(Error::Config("energy bound below the ground energy".into()));
            }
            if e.spec.hamiltonian()?.dim() > 64 {
                return Err(Error::Config("Hamiltonian dimension above 64".into()));
            }
        }
        if self.budget.random_starts == 0 && self.budget.iterations == 0 {
            return Err(Error::Config("bracket budget is empty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    pub rows: Vec<BoundVerdict>,
    pub summary: Summary,
}

/// Runs every trial of the configured suite. Rows come back ordered by trial.
pub fn run_suite(config: &CampaignConfig) -> Result<CampaignResult> {
    config.validate()?;
    let per_trial: Vec<Vec<BoundVerdict>> = (0..config.trials)
        .into_par_iter()
        .map(|t| suites::run_trial(config, t))
        .collect::<Result<_>>()?;
    let rows: Vec<BoundVerdict> = per_trial.into_iter().flatten().collect();
    let summary = Summary::of(&rows);
    Ok(CampaignResult {
        config: config.clone(),
        rows,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judge_three_ways() {
        assert_eq!(Outcome::judge(1.0, 1.0, 2.0, 0.0), Outcome::Pass);
        assert_eq!(Outcome::judge(1.5, 1.0, 2.0, 0.0), Outcome::Inconclusive);
        assert_eq!(Outcome::judge(2.5, 1.0, 2.0, 0.0), Outcome::Violation);
        assert_eq!(Outcome::judge(1.0 + 1e-10, 1.0, 1.0, 1e-9), Outcome::Pass);
    }

    #[test]
    fn exit_codes() {
        let mut s = Summary { total: 3, pass: 3, ..Default::default() };
        assert_eq!(s.exit_code(), 0);
        s.inconclusive = 1;
        assert_eq!(s.exit_code(), 2);
        s.violation = 1;
        assert_eq!(s.exit_code(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(CampaignConfig::new(Suite::Lemma4, 0, 1).validate().is_err());
        assert!(CampaignConfig::new(Suite::Lemma4, 1, 1).with_dim("a", 65).validate().is_err());
        assert!(CampaignConfig::new(Suite::Lemma4, 1, 1).with_dim("zz", 2).validate().is_err());
        let big = CampaignConfig::new(Suite::Lemma4, 1, 1)
            .with_dim("a", 16)
            .with_dim("b", 16)
            .with_dim("c", 16);
        assert!(big.validate().is_err());
        let bad = r#"{"suite": "lemma4", "trials": "many"}"#;
        assert!(CampaignConfig::from_json(bad).is_err());
        let ok = CampaignConfig::from_json(r#"{"suite": "thm1", "trials": 3, "seed": 9}"#).unwrap();
        assert_eq!(ok.tolerance, DEFAULT_TOLERANCE);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn degenerate_trial_passes() {
        // ρ = σ and Φ = Ψ give lhs = 0 in the second and third prop2 sub-suites
        let res = run_suite(&CampaignConfig::new(Suite::Prop2, 3, 5).with_budget(BracketBudget::quick())).unwrap();
        assert!(res.rows.iter().all(|r| r.lhs >= 0.0));
        let zero = suites::degenerate_prop2_row(11).unwrap();
        assert_eq!(zero.lhs, 0.0);
        assert_eq!(zero.outcome, Outcome::Pass);
    }

    #[test]
    fn campaigns_are_deterministic() {
        let cfg = CampaignConfig::new(Suite::Lemma4, 12, 3);
        let a = run_suite(&cfg).unwrap();
        let b = run_suite(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_suite_runs_without_violation() {
        for suite in Suite::ALL {
            let cfg = CampaignConfig::new(suite, 4, 1).with_budget(BracketBudget::quick());
            let res = run_suite(&cfg).unwrap();
            assert!(!res.rows.is_empty(), "{suite}");
            assert_eq!(res.summary.violation, 0, "{suite}: {:?}", res.rows);
        }
    }
}
