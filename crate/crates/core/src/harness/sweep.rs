use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bounds::{erasure_pair_epsilon, optimal_r, p_r, theorem1_bound_log, theorem2_bound, Capacity};
use crate::energy::OscillatorSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    /// `(Φ_{1/2−x}, Φ_{1/2})` on `d` dimensions against the finite-dimensional bounds.
    ErasureDim,
    /// Erasure channels on the oscillator against the energy-constrained bounds with `P_r`.
    ErasureEnergy,
}

impl SweepFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepFamily::ErasureDim => "erasure_dim",
            SweepFamily::ErasureEnergy => "erasure_energy",
        }
    }
}

impl std::str::FromStr for SweepFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "erasure_dim" => Ok(SweepFamily::ErasureDim),
            "erasure_energy" => Ok(SweepFamily::ErasureEnergy),
            _ => Err(Error::Config(format!("unknown sweep family `{s}`"))),
        }
    }
}

fn all_capacities() -> Vec<Capacity> {
    Capacity::ALL.to_vec()
}

fn single_mode() -> OscillatorSpec {
    OscillatorSpec::single_mode(1.0)
}

/// Grid for [`sweep_tightness`]. `log_d` is used by `erasure_dim`, `energies` by
/// `erasure_energy`; `r = None` picks the minimizing `r` at each point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    #[serde(default)]
    pub log_d: Vec<f64>,
    #[serde(default)]
    pub energies: Vec<f64>,
    pub x: Vec<f64>,
    #[serde(default = "all_capacities")]
    pub capacities: Vec<Capacity>,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default = "single_mode")]
    pub oscillator: OscillatorSpec,
}

impl SweepGrid {
    pub fn dims(log_d: Vec<f64>, x: Vec<f64>) -> Self {
        SweepGrid {
            log_d,
            energies: Vec::new(),
            x,
            capacities: all_capacities(),
            r: None,
            oscillator: single_mode(),
        }
    }

    pub fn energies(energies: Vec<f64>, x: Vec<f64>) -> Self {
        SweepGrid {
            energies,
            ..SweepGrid::dims(Vec::new(), x)
        }
    }

    pub fn with_capacities(mut self, caps: Vec<Capacity>) -> Self {
        self.capacities = caps;
        self
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: SweepFamily,
    pub capacity: Capacity,
    pub log_d: Option<f64>,
    pub energy: Option<f64>,
    pub x: f64,
    pub r: Option<f64>,
    pub delta_c: f64,
    pub eps_upper: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Zero: every quantity here is closed form.
    pub bracket_width: f64,
}

/// `|C_*(Φ_{1/2−x}) − C_*(Φ_{1/2})|` as a multiple of `M`.
fn delta_factor(cap: Capacity, x: f64) -> f64 {
    match cap {
        Capacity::Chi | Capacity::C => x,
        Capacity::Q | Capacity::Pbar | Capacity::P => 2.0 * x,
    }
}

fn ratio(delta: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        delta / bound
    } else {
        0.0
    }
}

/// Closed-form tightness sweep over erasure pairs. No matrices are built.
pub fn sweep_tightness(family: SweepFamily, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    match family {
        SweepFamily::ErasureDim => {
            for &log_d in &grid.log_d {
                if !(log_d >= 0.0 && log_d.is_finite()) {
                    return Err(Error::Domain(format!("log d = {log_d} must be finite and nonnegative")));
                }
                for &x in &grid.x {
                    let eps = erasure_pair_epsilon(x)?;
                    for &cap in &grid.capacities {
                        let delta_c = delta_factor(cap, x) * log_d;
                        let bound = theorem1_bound_log(cap, eps, log_d)?;
                        rows.push(SweepRow {
                            family,
                            capacity: cap,
                            log_d: Some(log_d),
                            energy: None,
                            x,
                            r: None,
                            delta_c,
                            eps_upper: eps,
                            bound,
                            ratio: ratio(delta_c, bound),
                            bracket_width: 0.0,
                        });
                    }
                }
            }
        }
        SweepFamily::ErasureEnergy => {
            let osc = &grid.oscillator;
            for &e in &grid.energies {
                let m = osc.f_exact(e)?;
                for &x in &grid.x {
                    let eps = erasure_pair_epsilon(x)?;
                    let (r, main) = match grid.r {
                        Some(r) => (r, p_r(osc, e, eps, r)?),
                        None => optimal_r(osc, e, eps)?,
                    };
                    for &cap in &grid.capacities {
                        let delta_c = delta_factor(cap, x) * m;
                        let bound = theorem2_bound(cap, eps, main);
                        rows.push(SweepRow {
                            family,
                            capacity: cap,
                            log_d: None,
                            energy: Some(e),
                            x,
                            r: Some(r),
                            delta_c,
                            eps_upper: eps,
                            bound,
                            ratio: ratio(delta_c, bound),
                            bracket_width: 0.0,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Writes sweep rows as CSV with floats at 17 significant digits.
pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    use super::report::fmt_float;
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "family", "capacity", "log_d", "energy", "x", "r", "delta_c", "eps_upper", "bound", "ratio", "bracket_width",
    ])?;
    for row in rows {
        w.write_record([
            row.family.as_str().to_string(),
            row.capacity.as_str().to_string(),
            opt(row.log_d),
            opt(row.energy),
            fmt_float(row.x),
            opt(row.r),
            fmt_float(row.delta_c),
            fmt_float(row.eps_upper),
            fmt_float(row.bound),
            fmt_float(row.ratio),
            fmt_float(row.bracket_width),
        ])?;
    }
    w.flush()?;
    Ok(())
}
