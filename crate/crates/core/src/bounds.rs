//! Continuity-bound evaluators, the quantities `T_{s,t}` and `P_r`, and the
//! closed-form capacities of the erasure family. All values are in nats and
//! nondecreasing in `ε` on their domains (except where noted on [`p_r`]).

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::brent::BrentOpt;
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::StinespringChannel;
use crate::energy::{gibbs_state, EnergyProfile, EnergySpec, Hamiltonian, OscillatorSpec};
use crate::entropic::{eta, g};
use crate::error::{Error, Result};
use crate::metrics::{BracketBudget, ByRef, EnergyConstraint};
use crate::qstate::{cr, hermitian_part, spectral_map, trace_re, CMatrix};

/// Default upper end of the `d` scan in [`t_st`].
pub const D_SEARCH_CAP: u64 = 1_000_000;
/// Consecutive non-improving `d` after which the scan stops.
pub const PATIENCE: u64 = 50;

fn check_eps(eps: f64, max: f64) -> Result<()> {
    if !(0.0..=max).contains(&eps) {
        return Err(Error::Domain(format!("ε = {eps} outside [0, {max}]")));
    }
    Ok(())
}

fn g_coeff(halved: bool) -> f64 {
    if halved {
        1.0
    } else {
        2.0
    }
}

/// `2ε log d + 2g(ε)`; with `part_c` (when `ρ_BC = σ_BC`) the `g` term has coefficient 1.
pub fn lemma4_finite(eps: f64, d: f64, part_c: bool) -> Result<f64> {
    check_eps(eps, 1.0)?;
    Ok(2.0 * eps * d.ln() + g_coeff(part_c) * g(eps))
}

/// qc-state variant: `ε log d + 2g(ε)`.
pub fn lemma4_qc(eps: f64, d: f64, part_c: bool) -> Result<f64> {
    check_eps(eps, 1.0)?;
    Ok(eps * d.ln() + g_coeff(part_c) * g(eps))
}

/// `2√(2ε) F(E/ε) + 2g(√(2ε))` for states with `Tr Hρ_A, Tr Hσ_A ≤ E`.
pub fn lemma4_energy(eps: f64, profile: &EnergyProfile, e: f64, part_c: bool) -> Result<f64> {
    check_eps(eps, 1.0)?;
    if eps == 0.0 {
        return Ok(0.0);
    }
    let r = (2.0 * eps).sqrt();
    Ok(2.0 * r * profile.f(e / eps)? + g_coeff(part_c) * g(r))
}

/// Pure-state form of [`lemma4_energy`] (`ε → ε²/2`): `2ε F(2E/ε²) + 2g(ε)`.
pub fn lemma4_pure(eps: f64, profile: &EnergyProfile, e: f64, part_c: bool) -> Result<f64> {
    check_eps(eps, 1.0)?;
    if eps == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * eps * profile.f(2.0 * e / (eps * eps))? + g_coeff(part_c) * g(eps))
}

/// `2ε log d_A + 2ε log 2 + 2g(ε)`.
pub fn prop2_bound(eps: f64, d_a: f64, same_channel: bool, same_state: bool) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("ε = {eps} must be nonnegative")));
    }
    let ch = if same_channel { 0.0 } else { 2.0 * eps * LN_2 };
    Ok(2.0 * eps * d_a.ln() + ch + g_coeff(same_state) * g(eps))
}

/// `2√(2ε) F̄(Ē/ε) + 2g(√(2ε))`; `pure` substitutes `ε²/2`.
pub fn prop3_bound(eps: f64, profile: &EnergyProfile, e: f64, pure: bool) -> Result<f64> {
    check_eps(eps, 1.0)?;
    if eps == 0.0 {
        return Ok(0.0);
    }
    let e_bar = e - profile.ground_energy();
    if e_bar < 0.0 {
        return Err(Error::Domain(format!("E = {e} below the ground energy")));
    }
    let x = if pure { eps * eps / 2.0 } else { eps };
    let r = (2.0 * x).sqrt();
    Ok(2.0 * r * profile.f_bar(e_bar / x)? + 2.0 * g(r))
}

/// `n(2ε log(2d_A) + g(ε))`.
pub fn prop4_bound(eps: f64, d_a: f64, n: f64) -> Result<f64> {
    check_eps(eps, 2f64.sqrt())?;
    if n < 1.0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Ok(n * (2.0 * eps * (2.0 * d_a).ln() + g(eps)))
}

/// `ε log d_A + ε log 2 + 2g(ε)`.
pub fn prop6_bound(eps: f64, d_a: f64, same_channel: bool, same_ensemble: bool) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("ε = {eps} must be nonnegative")));
    }
    let ch = if same_channel { 0.0 } else { eps * LN_2 };
    Ok(eps * d_a.ln() + ch + g_coeff(same_ensemble) * g(eps))
}

/// Same form as [`prop3_bound`] without the pure option; needs `ε ≤ 1`.
pub fn prop7_bound(eps: f64, profile: &EnergyProfile, e: f64) -> Result<f64> {
    prop3_bound(eps, profile, e, false)
}

/// Outcome of the `d` scan defining `T_{s,t}(E,ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TstResult {
    pub value: f64,
    pub d_star: u64,
    pub first_feasible: u64,
    pub scanned_up_to: u64,
    /// Stopped by the patience rule rather than the cap or the end of the spectrum.
    pub stopped_early: bool,
}

/// Objective inside `T_{s,t}` at one `d`.
pub fn t_st_objective(e_bar: f64, gamma: f64, d: u64, s: u8, t: u8, eps: f64) -> f64 {
    let ratio = if e_bar == 0.0 { 0.0 } else { e_bar / gamma };
    let x = (2f64.powi(s as i32) * ratio).sqrt();
    (4.0 * x + 4.0 * (s as f64) * (t as f64) * ratio + 2.0 * eps) * (d as f64).ln() + 4.0 * g(x)
}

fn first_feasible_d(profile: &EnergyProfile, e_bar: f64, cap: u64) -> Option<u64> {
    match profile {
        EnergyProfile::Oscillator(spec) => {
            let l = spec.modes() as f64;
            let domain = spec.f_bar_closed(0.0).ok()?.exp();
            let need = ((2.0 * e_bar + 2.0 * spec.e0()) * std::f64::consts::E / (l * spec.e_star()))
                .powf(l);
            let mut d = (domain.floor() as u64 + 1).max(need.floor().max(1.0) as u64);
            // step back over rounding, then forward to the exact threshold
            while d > 1 && (d - 1) as f64 > domain && spec.gamma_hat_unchecked((d - 1) as f64) >= 2.0 * e_bar {
                d -= 1;
            }
            while spec.gamma_hat_unchecked(d as f64) < 2.0 * e_bar || d as f64 <= domain {
                d += 1;
                if d > cap {
                    return None;
                }
            }
            (d <= cap).then_some(d)
        }
        EnergyProfile::Numeric(h) => {
            let (mut lo, mut hi) = (h.ground_multiplicity() as u64, h.dim() as u64);
            let ok = |d: u64| profile.gamma(d as usize).is_some_and(|gm| gm >= 2.0 * e_bar);
            if !ok(hi) {
                return None;
            }
            if ok(lo) {
                return (lo <= cap).then_some(lo);
            }
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (hi <= cap).then_some(hi)
        }
    }
}

/// `T_{s,t}(E,ε) = min_{γ(d) ≥ 2Ē} [(4√(2^s Ē/γ(d)) + 4stĒ/γ(d) + 2ε) log d + 4g(√(2^s Ē/γ(d)))]`.
///
/// The scan starts at the smallest feasible `d` and ends after [`PATIENCE`]
/// consecutive non-improving values, at `cap`, or at the top of a finite spectrum.
pub fn t_st(profile: &EnergyProfile, e: f64, s: u8, t: u8, eps: f64, cap: u64) -> Result<TstResult> {
    if s > 1 || t > 1 {
        return Err(Error::Domain("s and t are 0 or 1".into()));
    }
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("ε = {eps} must be nonnegative")));
    }
    let e_bar = e - profile.ground_energy();
    if e_bar < 0.0 {
        return Err(Error::Domain(format!("E = {e} below the ground energy")));
    }
    let start = first_feasible_d(profile, e_bar, cap).ok_or_else(|| {
        Error::Infeasible(format!("no d <= {cap} with γ(d) >= 2Ē = {}", 2.0 * e_bar))
    })?;
    let last = cap.min(profile.gamma_limit() as u64);
    let mut best = (f64::INFINITY, start);
    let mut since = 0;
    let mut d = start;
    let mut stopped_early = false;
    while d <= last {
        let gm = profile
            .gamma(d as usize)
            .ok_or_else(|| Error::Numerical(format!("γ({d}) unavailable")))?;
        let v = t_st_objective(e_bar, gm, d, s, t, eps);
        if v < best.0 {
            best = (v, d);
            since = 0;
        } else {
            since += 1;
            if since >= PATIENCE {
                stopped_early = true;
                break;
            }
        }
        d += 1;
    }
    Ok(TstResult {
        value: best.0,
        d_star: best.1,
        first_feasible: start,
        scanned_up_to: d.min(last),
        stopped_early,
    })
}

/// `P_r(E,ε) = 2ε(1+2r)F_{ℓ,ω}(E) + 4ℓ(2+1/r)η(εr) + 4g(εr) + 6εe^{−ℓ}`.
///
/// Nondecreasing in `ε` while `εr ≤ 1/e`; the `η` term decreases beyond that.
pub fn p_r(spec: &OscillatorSpec, e: f64, eps: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("r = {r} outside (0, 1]")));
    }
    if !(eps >= 0.0) || eps * r > 1.0 {
        return Err(Error::Domain(format!("εr = {} outside [0, 1]", eps * r)));
    }
    let l = spec.modes() as f64;
    Ok(2.0 * eps * (1.0 + 2.0 * r) * spec.f_closed(e)?
        + 4.0 * l * (2.0 + 1.0 / r) * eta(eps * r)
        + 4.0 * g(eps * r)
        + 6.0 * eps * (-l).exp())
}

/// `r ∈ (0, min(1, 1/ε)]` minimizing [`p_r`]: log-grid scan refined by Brent's method.
pub fn optimal_r(spec: &OscillatorSpec, e: f64, eps: f64) -> Result<(f64, f64)> {
    if eps == 0.0 {
        return Ok((1.0, 0.0));
    }
    let top = (1.0f64).min(1.0 / eps);
    let grid: Vec<f64> = (0..=200).map(|i| top * 10f64.powf(-8.0 * (1.0 - i as f64 / 200.0))).collect();
    let mut best = (grid[0], p_r(spec, e, eps, grid[0])?);
    let mut at = 0;
    for (i, r) in grid.iter().enumerate() {
        let v = p_r(spec, e, eps, *r)?;
        if v < best.1 {
            best = (*r, v);
            at = i;
        }
    }
    struct P<'a> {
        spec: &'a OscillatorSpec,
        e: f64,
        eps: f64,
    }
    impl CostFunction for P<'_> {
        type Param = f64;
        type Output = f64;
        fn cost(&self, r: &f64) -> std::result::Result<f64, argmin::core::Error> {
            p_r(self.spec, self.e, self.eps, *r).map_err(|e| argmin::core::Error::msg(e.to_string()))
        }
    }
    let lo = grid[at.saturating_sub(1)];
    let hi = grid[(at + 1).min(grid.len() - 1)];
    if hi > lo {
        if let Ok(res) = Executor::new(P { spec, e, eps }, BrentOpt::new(lo, hi).set_tolerance(1e-10, 1e-14))
            .configure(|s| s.max_iters(200))
            .run()
        {
            if let Some(r) = res.state().get_best_param() {
                let v = p_r(spec, e, eps, *r)?;
                if v < best.1 {
                    best = (*r, v);
                }
            }
        }
    }
    Ok(best)
}

/// `n(T_{s,t}(E,ε) + g(ε) + 2ε log 2)`.
pub fn prop5_bound(eps: f64, tst: &TstResult, n: f64) -> f64 {
    n * (tst.value + g(eps) + 2.0 * eps * LN_2)
}

/// `n(P_r(E,ε) + g(ε) + 2ε log 2)`.
pub fn corollary_osc_bound(spec: &OscillatorSpec, e: f64, eps: f64, r: f64, n: f64) -> Result<f64> {
    Ok(n * (p_r(spec, e, eps, r)? + g(eps) + 2.0 * eps * LN_2))
}

/// `T_{s,0}(E,ε) + g(ε) + 2ε log 2` (or with `P_r` in place of `T`).
pub fn prop8_bound(eps: f64, main: f64) -> f64 {
    main + g(eps) + 2.0 * eps * LN_2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capacity {
    Chi,
    C,
    Q,
    Pbar,
    P,
}

impl Capacity {
    pub const ALL: [Capacity; 5] = [Capacity::Chi, Capacity::C, Capacity::Q, Capacity::Pbar, Capacity::P];

    pub fn as_str(self) -> &'static str {
        match self {
            Capacity::Chi => "chi",
            Capacity::C => "c",
            Capacity::Q => "q",
            Capacity::Pbar => "pbar",
            Capacity::P => "p",
        }
    }

    /// The `t` flag used in the energy-constrained bound for this capacity.
    pub fn t_flag(self) -> u8 {
        match self {
            Capacity::Chi | Capacity::C | Capacity::Pbar => 0,
            Capacity::Q | Capacity::P => 1,
        }
    }
}

/// Finite-dimensional capacity bounds; `ε` is `β(Φ,Ψ)` or `√‖Φ−Ψ‖_⋄`.
pub fn theorem1_bound(cap: Capacity, eps: f64, d_a: f64) -> Result<f64> {
    theorem1_bound_log(cap, eps, d_a.ln())
}

/// [`theorem1_bound`] in terms of `log d_A`, so huge dimensions can be swept.
pub fn theorem1_bound_log(cap: Capacity, eps: f64, log_d_a: f64) -> Result<f64> {
    check_eps(eps, 2f64.sqrt())?;
    let (a, b) = match cap {
        Capacity::Chi => (1.0, 1.0),
        Capacity::C | Capacity::Q => (2.0, 1.0),
        Capacity::Pbar => (2.0, 2.0),
        Capacity::P => (4.0, 2.0),
    };
    Ok(a * eps * (log_d_a + LN_2) + b * g(eps))
}

/// Energy-constrained capacity bounds given the main term `M_t`, the value of
/// `T_{s,t}` (or `P_r`) with `t` from [`Capacity::t_flag`].
pub fn theorem2_bound(cap: Capacity, eps: f64, main: f64) -> f64 {
    let k = match cap {
        Capacity::Chi | Capacity::C | Capacity::Q => 1.0,
        Capacity::Pbar | Capacity::P => 2.0,
    };
    k * (main + g(eps) + 2.0 * eps * LN_2)
}

/// Source of the main term in [`theorem2_bound`].
#[derive(Clone, Debug)]
pub enum MainTerm<'a> {
    Tst { profile: &'a EnergyProfile, s: u8, cap: u64 },
    Pr { spec: &'a OscillatorSpec, r: f64 },
}

impl MainTerm<'_> {
    pub fn value(&self, e: f64, eps: f64, t: u8) -> Result<f64> {
        match self {
            MainTerm::Tst { profile, s, cap } => Ok(t_st(profile, e, *s, t, eps, *cap)?.value),
            MainTerm::Pr { spec, r } => p_r(spec, e, eps, *r),
        }
    }
}

pub fn theorem2_bound_with(cap: Capacity, eps: f64, e: f64, main: &MainTerm) -> Result<f64> {
    let t = match main {
        MainTerm::Pr { .. } => 0,
        MainTerm::Tst { s: 0, .. } => 0,
        _ => cap.t_flag(),
    };
    Ok(theorem2_bound(cap, eps, main.value(e, eps, t)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErasureCapacities {
    pub c_chi: f64,
    pub c: f64,
    pub q: f64,
    pub c_p: f64,
    pub c_p_bar: f64,
}

impl ErasureCapacities {
    pub fn get(&self, cap: Capacity) -> f64 {
        match cap {
            Capacity::Chi => self.c_chi,
            Capacity::C => self.c,
            Capacity::Q => self.q,
            Capacity::Pbar => self.c_p_bar,
            Capacity::P => self.c_p,
        }
    }

    /// `(1−p)M` and `max{(1−2p)M, 0}`.
    pub fn from_m(p: f64, m: f64) -> Self {
        let classical = (1.0 - p) * m;
        let quantum = ((1.0 - 2.0 * p) * m).max(0.0);
        ErasureCapacities {
            c_chi: classical,
            c: classical,
            q: quantum,
            c_p: quantum,
            c_p_bar: quantum,
        }
    }
}

/// Capacities of `Φ_p` with `M = log d`, or `M = F_H(E)` under an energy constraint.
pub fn erasure_capacities(d: usize, p: f64, energy: Option<(&Hamiltonian, f64)>) -> Result<ErasureCapacities> {
    if d < 2 {
        return Err(Error::Domain("erasure channel needs d >= 2".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p = {p} outside [0,1]")));
    }
    let m = match energy {
        None => (d as f64).ln(),
        Some((h, e)) => {
            if h.dim() != d {
                return Err(Error::Dimension("Hamiltonian dimension differs from d".into()));
            }
            EnergyProfile::Numeric(h.clone()).f(e)?
        }
    };
    Ok(ErasureCapacities::from_m(p, m))
}

/// `√(2 − √(1−2x) − √(1+2x))`: operator norm of `V_{1/2−x} − V_{1/2}`, which equals
/// the Bures distance between these erasure channels.
pub fn erasure_pair_epsilon(x: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1/2]")));
    }
    Ok((2.0 - (1.0 - 2.0 * x).sqrt() - (1.0 + 2.0 * x).sqrt()).max(0.0).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneShotMaxima {
    /// Best coherent information found; a lower bound on `Q̄(Φ)`.
    pub q_bar_lower: f64,
    /// Best channel mutual information found; a lower bound on `C_ea(Φ)`.
    pub c_ea_lower: f64,
    pub converged: bool,
}

fn log_clipped(m: &CMatrix) -> CMatrix {
    spectral_map(m, |x| x.max(1e-300).ln()).unwrap_or_else(|_| m.clone())
}

fn entropy(m: &CMatrix) -> f64 {
    crate::entropic::entropy_raw(m).unwrap_or(f64::NAN)
}

struct OneShot<'a> {
    phi: &'a StinespringChannel,
    comp: StinespringChannel,
    with_input: bool,
    constraint: Option<(Hamiltonian, f64, CMatrix)>,
    best: RefCell<Option<(f64, Vec<f64>)>>,
}

impl OneShot<'_> {
    fn d(&self) -> usize {
        self.phi.d_a()
    }

    fn project(&self, rho: &CMatrix) -> (CMatrix, f64, f64) {
        match &self.constraint {
            None => (rho.clone(), 0.0, 0.0),
            Some((h, e, ground)) => {
                let en = h.energy(rho);
                if en <= *e {
                    return (rho.clone(), 0.0, en);
                }
                let s = ((en - e) / (en - h.ground_energy())).clamp(0.0, 1.0);
                (rho * cr(1.0 - s) + ground * cr(s), s, en)
            }
        }
    }

    fn value(&self, rho: &CMatrix) -> f64 {
        let v = entropy(&self.phi.apply_raw(rho)) - entropy(&self.comp.apply_raw(rho));
        if self.with_input {
            v + entropy(rho)
        } else {
            v
        }
    }

    /// Negative objective and its gradient with respect to the real parameters of `A`.
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let d = self.d();
        let a = unpack(p, d);
        let m = &a * a.adjoint();
        let t = trace_re(&m);
        let tilde = hermitian_part(&m) / cr(t);
        let (rho, s, en) = self.project(&tilde);
        let mut grad_rho = self.comp.dual_raw(&log_clipped(&self.comp.apply_raw(&rho)))
            - self.phi.dual_raw(&log_clipped(&self.phi.apply_raw(&rho)));
        if self.with_input {
            grad_rho -= log_clipped(&rho);
        }
        // objective is −value; chain through the projection when it is active
        let gneg = -grad_rho;
        let gfull = if s > 0.0 {
            let (h, e, ground) = self.constraint.as_ref().unwrap();
            let ds = (e - h.ground_energy()) / (en - h.ground_energy()).powi(2);
            let coupling = trace_re(&(&gneg * (ground - &tilde))) * ds;
            &gneg * cr(1.0 - s) + h.matrix() * cr(coupling)
        } else {
            gneg
        };
        let gr = trace_re(&(&gfull * &tilde));
        let grad = (gfull - CMatrix::identity(d, d) * cr(gr)) * &a * cr(2.0 / t);
        (-self.value(&rho), pack(&grad))
    }
}

fn unpack(p: &[f64], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| num_complex::Complex64::new(p[j * d + i], p[d * d + j * d + i]))
}

fn pack(a: &CMatrix) -> Vec<f64> {
    let d = a.nrows();
    let mut p = vec![0.0; 2 * d * d];
    for j in 0..d {
        for i in 0..d {
            p[j * d + i] = a[(i, j)].re;
            p[d * d + j * d + i] = a[(i, j)].im;
        }
    }
    p
}

impl CostFunction for OneShot<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let c = self.eval(p).0;
        if !c.is_finite() {
            return Err(argmin::core::Error::msg("non-finite objective"));
        }
        let mut best = self.best.borrow_mut();
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            *best = Some((c, p.clone()));
        }
        Ok(c)
    }
}

impl Gradient for OneShot<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;
    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.eval(p).1)
    }
}

/// Multistart ascent of `I_c(Φ,ρ)` and `I(Φ,ρ)` over (energy-feasible) inputs.
/// The returned values are attained by explicit feasible states, hence lower bounds.
pub fn one_shot_maxima(
    channel: &StinespringChannel,
    constraint: Option<&EnergyConstraint>,
    budget: &BracketBudget,
) -> Result<OneShotMaxima> {
    let d = channel.d_a();
    if d > 16 || channel.d_b() * channel.d_e() > 256 {
        return Err(Error::SizeGuard("one-shot ascent is limited to small channels".into()));
    }
    let constraint = match constraint {
        None => None,
        Some(c) => {
            if c.hamiltonian().dim() != d {
                return Err(Error::Dimension("Hamiltonian does not act on the channel input".into()));
            }
            Some((c.hamiltonian().clone(), c.bound(), c.hamiltonian().ground_state_matrix()))
        }
    };
    let mut starts = vec![CMatrix::identity(d, d) / cr(d as f64)];
    if let Some((h, e, _)) = &constraint {
        if let Ok(gs) = gibbs_state(h, e.min(h.max_mean_energy())) {
            starts.push(gs.matrix().clone());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    for _ in 0..budget.random_starts {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let a = CMatrix::from_fn(d, d, |_, _| {
            num_complex::Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let m = hermitian_part(&(&a * a.adjoint()));
        let t = trace_re(&m);
        starts.push(m / cr(t));
    }
    let mut out = [f64::NEG_INFINITY; 2];
    let mut converged = true;
    for (k, with_input) in [false, true].into_iter().enumerate() {
        for start in &starts {
            let problem = OneShot {
                phi: channel,
                comp: channel.complementary(),
                with_input,
                constraint: constraint.clone(),
                best: RefCell::new(None),
            };
            let (rho0, _, _) = problem.project(start);
            out[k] = out[k].max(problem.value(&rho0));
            let a0 = spectral_map(start, |x| x.max(0.0).sqrt())?;
            let solver = LBFGS::new(MoreThuenteLineSearch::new(), 8)
                .with_tolerance_grad(1e-10)
                .and_then(|s| s.with_tolerance_cost(1e-14))
                .map_err(|e| Error::Numerical(e.to_string()))?;
            match Executor::new(ByRef(&problem), solver)
                .configure(|s| s.param(pack(&a0)).max_iters(budget.iterations as u64))
                .run()
            {
                Ok(res) => {
                    if res.state().get_iter() as usize >= budget.iterations {
                        converged = false;
                    }
                }
                Err(_) => converged = false,
            }
            let best = problem.best.borrow().clone();
            if let Some((_, p)) = best {
                let a = unpack(&p, d);
                let m = &a * a.adjoint();
                let t = trace_re(&m);
                let (rho, _, _) = problem.project(&(hermitian_part(&m) / cr(t)));
                out[k] = out[k].max(problem.value(&rho));
            }
        }
    }
    // I(Φ,ρ) − I_c(Φ,ρ) = H(ρ) ≥ 0 pointwise, so the mutual-information maximum dominates
    let c_ea = out[1].max(out[0]);
    Ok(OneShotMaxima {
        q_bar_lower: out[0],
        c_ea_lower: c_ea,
        converged,
    })
}

/// Names of all bound formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    Lemma4Finite,
    Lemma4Qc,
    Lemma4Energy,
    Lemma4Pure,
    Prop2,
    Prop3,
    Prop4,
    Prop5,
    CorollaryOsc,
    Prop6,
    Prop7,
    Prop8,
    Thm1Chi,
    Thm1C,
    Thm1Q,
    Thm1Pbar,
    Thm1P,
    Thm2Chi,
    Thm2C,
    Thm2Q,
    Thm2Pbar,
    Thm2P,
}

impl BoundName {
    pub const ALL: [BoundName; 22] = [
        BoundName::Lemma4Finite,
        BoundName::Lemma4Qc,
        BoundName::Lemma4Energy,
        BoundName::Lemma4Pure,
        BoundName::Prop2,
        BoundName::Prop3,
        BoundName::Prop4,
        BoundName::Prop5,
        BoundName::CorollaryOsc,
        BoundName::Prop6,
        BoundName::Prop7,
        BoundName::Prop8,
        BoundName::Thm1Chi,
        BoundName::Thm1C,
        BoundName::Thm1Q,
        BoundName::Thm1Pbar,
        BoundName::Thm1P,
        BoundName::Thm2Chi,
        BoundName::Thm2C,
        BoundName::Thm2Q,
        BoundName::Thm2Pbar,
        BoundName::Thm2P,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::Lemma4Finite => "lemma4_finite",
            BoundName::Lemma4Qc => "lemma4_qc",
            BoundName::Lemma4Energy => "lemma4_energy",
            BoundName::Lemma4Pure => "lemma4_pure",
            BoundName::Prop2 => "prop2",
            BoundName::Prop3 => "prop3",
            BoundName::Prop4 => "prop4",
            BoundName::Prop5 => "prop5",
            BoundName::CorollaryOsc => "corollary_osc",
            BoundName::Prop6 => "prop6",
            BoundName::Prop7 => "prop7",
            BoundName::Prop8 => "prop8",
            BoundName::Thm1Chi => "thm1_chi",
            BoundName::Thm1C => "thm1_c",
            BoundName::Thm1Q => "thm1_q",
            BoundName::Thm1Pbar => "thm1_pbar",
            BoundName::Thm1P => "thm1_p",
            BoundName::Thm2Chi => "thm2_chi",
            BoundName::Thm2C => "thm2_c",
            BoundName::Thm2Q => "thm2_q",
            BoundName::Thm2Pbar => "thm2_pbar",
            BoundName::Thm2P => "thm2_p",
        }
    }

    fn capacity(self) -> Option<Capacity> {
        use BoundName::*;
        match self {
            Thm1Chi | Thm2Chi => Some(Capacity::Chi),
            Thm1C | Thm2C => Some(Capacity::C),
            Thm1Q | Thm2Q => Some(Capacity::Q),
            Thm1Pbar | Thm2Pbar => Some(Capacity::Pbar),
            Thm1P | Thm2P => Some(Capacity::P),
            _ => None,
        }
    }
}

impl fmt::Display for BoundName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown bound `{s}`")))
    }
}

/// A named bound with its parameters, evaluable at any `ε`.
///
/// Parameters: `d`, `d_a`, `n`, `E`, `s`, `t`, `r`, the 0/1 flags `part_c`,
/// `pure`, `same_channel`, `same_state`, `same_ensemble`, `use_pr`, and `cap`
/// (the `d` scan limit). The energy profile comes from `energy` or, as a
/// shorthand, from `omega` (single-mode oscillator with `hbar`, `truncation`;
/// `numeric = 1` selects the truncated matrix instead of the closed forms).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub name: BoundName,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergySpec>,
}

impl BoundSpec {
    pub fn new(name: BoundName) -> Self {
        BoundSpec {
            name,
            params: BTreeMap::new(),
            energy: None,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_energy(mut self, spec: EnergySpec) -> Self {
        self.energy = Some(spec);
        self
    }

    fn get(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Config(format!("{} needs parameter `{key}`", self.name)))
    }

    fn flag(&self, key: &str) -> bool {
        self.params.get(key).is_some_and(|v| *v != 0.0)
    }

    fn opt(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn small_int(&self, key: &str, default: u8) -> Result<u8> {
        let v = self.opt(key, default as f64);
        if v == 0.0 || v == 1.0 {
            Ok(v as u8)
        } else {
            Err(Error::Config(format!("`{key}` must be 0 or 1")))
        }
    }

    fn oscillator(&self) -> Result<OscillatorSpec> {
        if let Some(EnergySpec::Oscillator(s) | EnergySpec::TruncatedOscillator(s)) = &self.energy {
            return Ok(s.clone());
        }
        let omega = self.get("omega")?;
        let modes = self.opt("modes", 1.0) as usize;
        OscillatorSpec::new(
            vec![omega; modes.max(1)],
            self.opt("hbar", 1.0),
            self.opt("truncation", 40.0) as usize,
        )
    }

    pub fn profile(&self) -> Result<EnergyProfile> {
        if let Some(e) = &self.energy {
            return e.profile();
        }
        let osc = self.oscillator()?;
        if self.flag("numeric") {
            Ok(EnergyProfile::Numeric(osc.to_hamiltonian()?))
        } else {
            Ok(EnergyProfile::Oscillator(osc))
        }
    }

    fn main_term(&self, e: f64, eps: f64, t: u8) -> Result<f64> {
        if self.flag("use_pr") {
            p_r(&self.oscillator()?, e, eps, self.get("r")?)
        } else {
            let cap = self.opt("cap", D_SEARCH_CAP as f64) as u64;
            Ok(t_st(&self.profile()?, e, self.small_int("s", 1)?, t, eps, cap)?.value)
        }
    }

    pub fn evaluate(&self, eps: f64) -> Result<f64> {
        use BoundName::*;
        match self.name {
            Lemma4Finite => lemma4_finite(eps, self.get("d")?, self.flag("part_c")),
            Lemma4Qc => lemma4_qc(eps, self.get("d")?, self.flag("part_c")),
            Lemma4Energy => lemma4_energy(eps, &self.profile()?, self.get("E")?, self.flag("part_c")),
            Lemma4Pure => lemma4_pure(eps, &self.profile()?, self.get("E")?, self.flag("part_c")),
            Prop2 => prop2_bound(eps, self.get("d_a")?, self.flag("same_channel"), self.flag("same_state")),
            Prop3 => prop3_bound(eps, &self.profile()?, self.get("E")?, self.flag("pure")),
            Prop4 => prop4_bound(eps, self.get("d_a")?, self.opt("n", 1.0)),
            Prop5 => {
                let e = self.get("E")?;
                let n = self.opt("n", 1.0);
                let t = self.small_int("t", 1)?;
                let main = self.main_term(e, eps, t)?;
                Ok(n * (main + g(eps) + 2.0 * eps * LN_2))
            }
            CorollaryOsc => corollary_osc_bound(
                &self.oscillator()?,
                self.get("E")?,
                eps,
                self.get("r")?,
                self.opt("n", 1.0),
            ),
            Prop6 => prop6_bound(eps, self.get("d_a")?, self.flag("same_channel"), self.flag("same_ensemble")),
            Prop7 => {
                check_eps(eps, 1.0)?;
                prop7_bound(eps, &self.profile()?, self.get("E")?)
            }
            Prop8 => {
                let e = self.get("E")?;
                Ok(prop8_bound(eps, self.main_term(e, eps, 0)?))
            }
            Thm1Chi | Thm1C | Thm1Q | Thm1Pbar | Thm1P => {
                theorem1_bound(self.name.capacity().unwrap(), eps, self.get("d_a")?)
            }
            Thm2Chi | Thm2C | Thm2Q | Thm2Pbar | Thm2P => {
                let cap = self.name.capacity().unwrap();
                let e = self.get("E")?;
                let t = if self.flag("use_pr") { 0 } else { cap.t_flag() };
                Ok(theorem2_bound(cap, eps, self.main_term(e, eps, t)?))
            }
        }
    }
}

/// Largest `ε` at which [`BoundSpec::evaluate`] is defined for this bound.
pub fn epsilon_domain(name: BoundName) -> f64 {
    use BoundName::*;
    match name {
        Lemma4Finite | Lemma4Qc | Lemma4Energy | Lemma4Pure | Prop3 | Prop7 => 1.0,
        Prop4 | Thm1Chi | Thm1C | Thm1Q | Thm1Pbar | Thm1P => 2f64.sqrt(),
        _ => f64::INFINITY,
    }
}
