//! Fidelity and Bures distance of states, the ensemble metrics `D_0` and `D_K`,
//! and certified brackets for the (energy-constrained) Bures distance and
//! diamond norm between channels.
//!
//! The channel Bures distance is bracketed through the minimax form
//! `β_E² = 2 − 2 min_{ρ∈C} ‖X(ρ)‖₁ = 2 − 2 max_{‖C‖≤1} min_{ρ∈C} Tr[Herm(K_C) ρ]`
//! with `X(ρ) = Tr_B V_Ψ ρ V_Φ†` and `K_C = V_Φ†(I⊗C)V_Ψ`. Any feasible state gives
//! a lower bound and any contraction an upper bound.

use std::cell::RefCell;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::brent::BrentOpt;
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::StinespringChannel;
use crate::energy::{gibbs_state, Hamiltonian};
use crate::entropic::Ensemble;
use crate::error::{Error, Result};
use crate::qstate::{
    cr, eigh_raw, embed, hermitian_part, operator_norm, spectral_map, trace_norm, trace_re,
    CMatrix, CVector, DensityMatrix,
};

/// `F(ρ,σ) = ‖√ρ√σ‖₁²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.layout() != sigma.layout() {
        return Err(Error::Dimension("fidelity needs states on the same layout".into()));
    }
    let sr = spectral_map(rho.matrix(), |x| x.max(0.0).sqrt())?;
    let ss = spectral_map(sigma.matrix(), |x| x.max(0.0).sqrt())?;
    let f = trace_norm(&(sr * ss));
    Ok((f * f).clamp(0.0, 1.0))
}

/// `β(ρ,σ) = √(2 − 2√F(ρ,σ))`.
pub fn bures_state_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let f = fidelity(rho, sigma)?;
    Ok((2.0 - 2.0 * f.sqrt()).max(0.0).sqrt())
}

fn padded(mu: &Ensemble, n: usize) -> Vec<(f64, DensityMatrix)> {
    let mut items = mu.items().to_vec();
    let avg = mu.average();
    while items.len() < n {
        items.push((0.0, avg.clone()));
    }
    items
}

/// `D_0 = ½ Σ ‖p_i ρ_i − q_i σ_i‖₁`, padding the shorter ensemble with
/// zero-weight copies of its average state.
pub fn ensemble_d0(mu: &Ensemble, nu: &Ensemble) -> Result<f64> {
    if mu.layout() != nu.layout() {
        return Err(Error::Dimension("ensembles live on different spaces".into()));
    }
    let n = mu.len().max(nu.len());
    let (a, b) = (padded(mu, n), padded(nu, n));
    Ok(0.5
        * a.iter()
            .zip(&b)
            .map(|((p, r), (q, s))| trace_norm(&(r.matrix() * cr(*p) - s.matrix() * cr(*q))))
            .sum::<f64>())
}

/// Kantorovich distance `½ min_P Σ P_ij ‖ρ_i − σ_j‖₁` as a transportation LP.
pub fn ensemble_dk(mu: &Ensemble, nu: &Ensemble) -> Result<f64> {
    if mu.layout() != nu.layout() {
        return Err(Error::Dimension("ensembles live on different spaces".into()));
    }
    let (k, l) = (mu.len(), nu.len());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut vars = Vec::with_capacity(k * l);
    for (_, r) in mu.items() {
        for (_, s) in nu.items() {
            let c = 0.5 * trace_norm(&(r.matrix() - s.matrix()));
            vars.push(lp.add_var(c, (0.0, f64::INFINITY)));
        }
    }
    for (i, (p, _)) in mu.items().iter().enumerate() {
        let row: Vec<_> = (0..l).map(|j| (vars[i * l + j], 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, *p);
    }
    // the last column constraint is implied by the others
    for (j, (q, _)) in nu.items().iter().enumerate().take(l - 1) {
        let col: Vec<_> = (0..k).map(|i| (vars[i * l + j], 1.0)).collect();
        lp.add_constraint(col.as_slice(), ComparisonOp::Eq, *q);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Numerical(format!("transport LP failed: {e}")))?;
    Ok(sol.objective().max(0.0))
}

/// `min(D_0, D_K)`, an upper bound on the factor metric `D_*`.
pub fn ensemble_dstar_upper(mu: &Ensemble, nu: &Ensemble) -> Result<f64> {
    Ok(ensemble_d0(mu, nu)?.min(ensemble_dk(mu, nu)?))
}

/// Input states with `Tr Hρ ≤ E`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyConstraint {
    hamiltonian: Hamiltonian,
    bound: f64,
}

impl EnergyConstraint {
    pub fn new(hamiltonian: Hamiltonian, bound: f64) -> Result<Self> {
        if !(bound >= hamiltonian.ground_energy()) {
            return Err(Error::Domain(format!(
                "energy bound {bound} below the ground energy {}",
                hamiltonian.ground_energy()
            )));
        }
        Ok(EnergyConstraint { hamiltonian, bound })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BracketBudget {
    /// Random starting states on top of the maximally mixed and Gibbs starts.
    pub random_starts: usize,
    /// Optimizer iterations per start.
    pub iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub diamond_samples: usize,
    pub diamond_steps: usize,
}

impl Default for BracketBudget {
    fn default() -> Self {
        BracketBudget {
            random_starts: 8,
            iterations: 500,
            tolerance: 1e-6,
            seed: 0,
            diamond_samples: 64,
            diamond_steps: 50,
        }
    }
}

impl BracketBudget {
    pub fn quick() -> Self {
        BracketBudget {
            random_starts: 2,
            iterations: 200,
            diamond_samples: 8,
            diamond_steps: 20,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Dense complex matrix in portable form.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixWitness {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, interleaved real and imaginary parts.
    pub entries: Vec<f64>,
}

impl MatrixWitness {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(2 * m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                entries.push(m[(i, j)].re);
                entries.push(m[(i, j)].im);
            }
        }
        MatrixWitness {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let k = 2 * (i * self.cols + j);
            num_complex::Complex64::new(self.entries[k], self.entries[k + 1])
        })
    }
}

/// Witnesses behind a bracket: the input achieving the lower bound and the
/// environment contraction (with its Lagrange multiplier) achieving the upper bound.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Certificates {
    pub lower_state: Option<MatrixWitness>,
    pub lower_state_energy: Option<f64>,
    pub contraction: Option<MatrixWitness>,
    pub contraction_norm: Option<f64>,
    pub multiplier: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default)]
    pub certificates: Certificates,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn exact(value: f64) -> Self {
        Bracket {
            lower: value,
            upper: value,
            iterations: 0,
            converged: true,
            certificates: Certificates::default(),
        }
    }
}

const TAUS: [f64; 5] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10];

struct BuresPair {
    phi: Vec<CMatrix>,
    psi: Vec<CMatrix>,
    d_a: usize,
    constraint: Option<(CMatrix, f64, f64)>,
}

struct Candidate {
    phi: f64,
    rho: CMatrix,
    energy: Option<f64>,
}

struct DualCandidate {
    q: f64,
    c: CMatrix,
    mu: f64,
}

impl BuresPair {
    fn new(
        phi: &StinespringChannel,
        psi: &StinespringChannel,
        constraint: Option<&EnergyConstraint>,
    ) -> Result<Self> {
        if phi.d_a() != psi.d_a() || phi.d_b() != psi.d_b() {
            return Err(Error::Dimension(
                "channels need equal input and output dimensions".into(),
            ));
        }
        let constraint = match constraint {
            None => None,
            Some(c) => {
                if c.hamiltonian.dim() != phi.d_a() {
                    return Err(Error::Dimension("Hamiltonian does not act on the channel input".into()));
                }
                Some((c.hamiltonian.matrix(), c.bound, c.hamiltonian.ground_energy()))
            }
        };
        Ok(BuresPair {
            phi: (0..phi.d_b()).map(|b| phi.block(b)).collect(),
            psi: (0..psi.d_b()).map(|b| psi.block(b)).collect(),
            d_a: phi.d_a(),
            constraint,
        })
    }

    /// `X(ρ) = Σ_b Ψ_b ρ Φ_b†`, a `d_E2 × d_E1` matrix.
    fn x_of(&self, rho: &CMatrix) -> CMatrix {
        let mut x = CMatrix::zeros(self.psi[0].nrows(), self.phi[0].nrows());
        for (p, q) in self.phi.iter().zip(&self.psi) {
            x += q * rho * p.adjoint();
        }
        x
    }

    /// `K_C = Σ_b Φ_b† C Ψ_b` for `C` of shape `d_E1 × d_E2`.
    fn k_of(&self, c: &CMatrix) -> CMatrix {
        let mut k = CMatrix::zeros(self.d_a, self.d_a);
        for (p, q) in self.phi.iter().zip(&self.psi) {
            k += p.adjoint() * c * q;
        }
        k
    }

    /// Smoothed trace norm `Σ √(s_i² + τ²)` with its gradient contraction,
    /// plus the exact trace norm and the polar contraction.
    fn smoothed(&self, rho: &CMatrix, tau: f64) -> (f64, CMatrix, f64, CMatrix) {
        let x = self.x_of(rho);
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            let zero = CMatrix::zeros(x.ncols(), x.nrows());
            return (f64::INFINITY, zero.clone(), f64::INFINITY, zero);
        }
        let svd = nalgebra::SVD::new(x, true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let s = &svd.singular_values;
        let value = s.iter().map(|x| (x * x + tau * tau).sqrt()).sum();
        let exact = s.iter().sum();
        let shrink = CVector::from_iterator(
            s.len(),
            s.iter().map(|x| {
                let r = (x * x + tau * tau).sqrt();
                cr(if r > 0.0 { x / r } else { 0.0 })
            }),
        );
        let c_tau = vt.adjoint() * CMatrix::from_diagonal(&shrink) * u.adjoint();
        let polar = vt.adjoint() * u.adjoint();
        (value, c_tau, exact, polar)
    }

    fn energy(&self, rho: &CMatrix) -> Option<f64> {
        self.constraint
            .as_ref()
            .map(|(h, _, _)| trace_re(&(h * rho)))
    }

    fn feasible(&self, rho: &CMatrix) -> bool {
        match &self.constraint {
            None => true,
            Some((h, e, _)) => trace_re(&(h * rho)) <= e + 1e-12 * e.abs().max(1.0),
        }
    }

    /// Lower-bound candidate for a feasible state.
    fn candidate(&self, rho: &CMatrix) -> Option<Candidate> {
        if !self.feasible(rho) {
            return None;
        }
        let phi = self.smoothed(rho, 0.0).2;
        if !phi.is_finite() {
            return None;
        }
        Some(Candidate {
            phi,
            rho: rho.clone(),
            energy: self.energy(rho),
        })
    }

    /// `max_{μ≥0} λ_min(Herm K_C + μH) − μE`, a lower bound on
    /// `min_{ρ∈C} Re Tr[K_C ρ]` for every `μ`. Returns the value, `μ` and the
    /// minimizing state of the last evaluation.
    fn dual(&self, c: &CMatrix) -> Result<(f64, f64, CMatrix)> {
        let g = hermitian_part(&self.k_of(c));
        let lowest = |mu: f64| -> Result<(f64, CMatrix, Option<f64>)> {
            let m = match &self.constraint {
                None => g.clone(),
                Some((h, _, _)) => &g + h * cr(mu),
            };
            let (vals, vecs) = eigh_raw(&m)?;
            let v = vecs.column(0).into_owned();
            let rho = &v * v.adjoint();
            Ok((vals[0], rho.clone(), self.energy(&rho)))
        };
        let Some((h, e, e0)) = &self.constraint else {
            let (l, rho, _) = lowest(0.0)?;
            return Ok((l, 0.0, rho));
        };
        let value = |mu: f64, l: f64| l - mu * e;
        let (l0, rho0, en0) = lowest(0.0)?;
        if en0.unwrap() <= *e {
            return Ok((l0, 0.0, rho0));
        }
        let scale = operator_norm(&g).max(1e-12) / (e - e0).max(1e-12);
        let mut hi = scale;
        let mut best = (value(0.0, l0), 0.0, rho0);
        for _ in 0..80 {
            let (l, rho, en) = lowest(hi)?;
            if value(hi, l) > best.0 {
                best = (value(hi, l), hi, rho.clone());
            }
            if en.unwrap() < *e {
                break;
            }
            hi *= 2.0;
        }
        let _ = h;
        struct Neg<'a> {
            f: &'a dyn Fn(f64) -> f64,
            seen: RefCell<(f64, f64)>,
        }
        impl CostFunction for Neg<'_> {
            type Param = f64;
            type Output = f64;
            fn cost(&self, mu: &f64) -> std::result::Result<f64, argmin::core::Error> {
                let v = (self.f)(*mu);
                let mut s = self.seen.borrow_mut();
                if v > s.0 {
                    *s = (v, *mu);
                }
                Ok(-v)
            }
        }
        let f = |mu: f64| -> f64 {
            lowest(mu.max(0.0))
                .map(|(l, _, _)| value(mu.max(0.0), l))
                .unwrap_or(f64::NEG_INFINITY)
        };
        let prob = Neg {
            f: &f,
            seen: RefCell::new((best.0, best.1)),
        };
        let solver = BrentOpt::new(0.0, hi).set_tolerance(1e-10, 1e-14 * hi.max(1.0));
        let _ = Executor::new(ByRef(&prob), solver)
            .configure(|s| s.max_iters(200))
            .run();
        let (v, mu) = *prob.seen.borrow();
        if v > best.0 {
            let (_, rho, _) = lowest(mu)?;
            best = (v, mu, rho);
        }
        Ok(best)
    }

    fn dual_candidate(&self, c: &CMatrix) -> Result<(DualCandidate, CMatrix)> {
        // guard against contractions that exceed 1 by rounding
        let n = operator_norm(c);
        let c = if n > 1.0 { c / cr(n) } else { c.clone() };
        let (q, mu, rho) = self.dual(&c)?;
        Ok((DualCandidate { q, c, mu }, rho))
    }
}

fn from_params(p: &[f64], d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| {
        let k = j * d + i;
        num_complex::Complex64::new(p[k], p[d * d + k])
    })
}

fn to_params(a: &CMatrix) -> Vec<f64> {
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

fn rho_of(a: &CMatrix) -> (CMatrix, f64) {
    let m = a * a.adjoint();
    let t = trace_re(&m);
    (hermitian_part(&m) / cr(t), t)
}

/// `A ↦ φ_τ(AA†/Tr AA†) + μ Tr[H AA†]/Tr AA†` for L-BFGS.
struct Smoothed<'a> {
    pair: &'a BuresPair,
    tau: f64,
    mu: f64,
    best: RefCell<Option<(f64, Vec<f64>)>>,
}

impl Smoothed<'_> {
    fn eval(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let d = self.pair.d_a;
        let a = from_params(p, d);
        let (rho, t) = rho_of(&a);
        let (val, c_tau, _, _) = self.pair.smoothed(&rho, self.tau);
        let mut g = hermitian_part(&self.pair.k_of(&c_tau));
        let mut cost = val;
        if let Some((h, _, _)) = &self.pair.constraint {
            g += h * cr(self.mu);
            cost += self.mu * trace_re(&(h * &rho));
        }
        let gr = trace_re(&(&g * &rho));
        let shifted = g - CMatrix::identity(d, d) * cr(gr);
        let grad = (shifted * &a) * cr(2.0 / t);
        (cost, to_params(&grad))
    }
}

impl CostFunction for Smoothed<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let c = self.eval(p).0;
        if !c.is_finite() {
            return Err(argmin::core::Error::msg("non-finite cost"));
        }
        let mut best = self.best.borrow_mut();
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            *best = Some((c, p.clone()));
        }
        Ok(c)
    }
}

impl Gradient for Smoothed<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;
    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        let (c, g) = self.eval(p);
        if !c.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(argmin::core::Error::msg("non-finite gradient"));
        }
        Ok(g)
    }
}

/// Minimizes the smoothed objective from `a`, returning the best factor and iterations used.
fn lbfgs(pair: &BuresPair, a: &CMatrix, tau: f64, mu: f64, iters: usize) -> (CMatrix, usize) {
    let problem = Smoothed {
        pair,
        tau,
        mu,
        best: RefCell::new(None),
    };
    let init = to_params(a);
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), 8)
        .with_tolerance_grad(1e-13)
        .and_then(|s| s.with_tolerance_cost(1e-16));
    let mut used = 0;
    if let Ok(solver) = solver {
        if let Ok(res) = Executor::new(ByRef(&problem), solver)
            .configure(|s| s.param(init.clone()).max_iters(iters as u64))
            .run()
        {
            used = res.state().get_iter() as usize;
        } else {
            used = iters;
        }
    }
    let best = problem.best.into_inner();
    let a = match best {
        Some((_, p)) => from_params(&p, pair.d_a),
        None => a.clone(),
    };
    (a, used)
}

/// Lets argmin borrow a problem so state kept in it survives the run.
pub(crate) struct ByRef<'a, T>(pub(crate) &'a T);

impl<T: CostFunction> CostFunction for ByRef<'_, T> {
    type Param = T::Param;
    type Output = T::Output;
    fn cost(&self, p: &Self::Param) -> std::result::Result<Self::Output, argmin::core::Error> {
        self.0.cost(p)
    }
}

impl<T: Gradient> Gradient for ByRef<'_, T> {
    type Param = T::Param;
    type Gradient = T::Gradient;
    fn gradient(&self, p: &Self::Param) -> std::result::Result<Self::Gradient, argmin::core::Error> {
        self.0.gradient(p)
    }
}

struct StartOutcome {
    lower: Vec<Candidate>,
    contractions: Vec<CMatrix>,
    iterations: usize,
}

fn sqrt_factor(rho: &CMatrix) -> CMatrix {
    spectral_map(rho, |x| x.max(0.0).sqrt()).unwrap_or_else(|_| rho.clone())
}

fn run_start(pair: &BuresPair, start: &CMatrix, budget: &BracketBudget) -> StartOutcome {
    let per_level = (budget.iterations / TAUS.len()).max(10);
    let mut out = StartOutcome {
        lower: Vec::new(),
        contractions: Vec::new(),
        iterations: 0,
    };
    let record = |out: &mut StartOutcome, rho: &CMatrix| {
        if let Some(c) = pair.candidate(rho) {
            out.lower.push(c);
        }
        let (_, c_tau, _, polar) = pair.smoothed(rho, TAUS[TAUS.len() - 1]);
        out.contractions.push(c_tau);
        out.contractions.push(polar);
    };
    let solve = |a: &CMatrix, mu: f64, out: &mut StartOutcome, levels: &[f64]| -> CMatrix {
        let mut a = a.clone();
        for &tau in levels {
            let (next, used) = lbfgs(pair, &a, tau, mu, per_level);
            out.iterations += used;
            a = next;
        }
        a
    };
    let a0 = sqrt_factor(start);
    record(&mut out, start);
    let a = solve(&a0, 0.0, &mut out, &TAUS);
    let rho = rho_of(&a).0;
    record(&mut out, &rho);
    let Some((_, e, e0)) = pair.constraint.clone() else {
        return out;
    };
    let energy = |r: &CMatrix| pair.energy(r).unwrap();
    if energy(&rho) <= e {
        return out;
    }
    // Lagrangian bisection on μ; the minimizer's energy is nonincreasing in μ.
    let coarse = &TAUS[2..4];
    let (mut lo, mut a_lo, mut en_lo) = (0.0, a.clone(), energy(&rho));
    let mut hi = 1.0 / (e - e0).max(1e-9);
    let mut a_hi;
    let mut tries = 0;
    loop {
        let cand = solve(&a_lo, hi, &mut out, coarse);
        let en = energy(&rho_of(&cand).0);
        if en <= e || tries > 60 {
            if en > e {
                return out;
            }
            a_hi = cand;
            break;
        }
        lo = hi;
        a_lo = cand;
        en_lo = en;
        hi *= 4.0;
        tries += 1;
    }
    for _ in 0..40 {
        if hi - lo <= 1e-10 * hi || en_lo - e <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let cand = solve(&a_hi, mid, &mut out, coarse);
        let en = energy(&rho_of(&cand).0);
        if en <= e {
            hi = mid;
            a_hi = cand;
        } else {
            lo = mid;
            a_lo = cand;
            en_lo = en;
        }
    }
    a_hi = solve(&a_hi, hi, &mut out, &TAUS[3..]);
    let rho_hi = rho_of(&a_hi).0;
    let rho_lo = rho_of(&a_lo).0;
    let en_hi = energy(&rho_hi);
    record(&mut out, &rho_hi);
    record(&mut out, &rho_lo);
    if en_hi <= e && en_lo > e {
        let t = ((e - en_hi) / (en_lo - en_hi)).clamp(0.0, 1.0);
        let mut mix = &rho_lo * cr(t) + &rho_hi * cr(1.0 - t);
        if !pair.feasible(&mix) {
            let t = t * (1.0 - 1e-9);
            mix = &rho_lo * cr(t) + &rho_hi * cr(1.0 - t);
        }
        record(&mut out, &mix);
    }
    out
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let rank = rng.random_range(1..=d);
    let g = CMatrix::from_fn(d, rank, |_, _| {
        num_complex::Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = hermitian_part(&(&g * g.adjoint()));
    let t = trace_re(&m);
    m / cr(t)
}

/// Mixes toward the ground-space state until `Tr Hρ ≤ E`.
fn make_feasible(rho: CMatrix, h: &Hamiltonian, e: f64) -> CMatrix {
    let en = h.energy(&rho);
    if en <= e {
        return rho;
    }
    let t = ((en - e) / (en - h.ground_energy())).clamp(0.0, 1.0);
    let t = (t * (1.0 + 1e-12)).min(1.0);
    h.ground_state_matrix() * cr(t) + rho * cr(1.0 - t)
}

fn starting_states(
    d: usize,
    constraint: Option<&EnergyConstraint>,
    budget: &BracketBudget,
) -> Vec<CMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut starts = vec![CMatrix::identity(d, d) / cr(d as f64)];
    if let Some(c) = constraint {
        let top = c.hamiltonian.max_mean_energy();
        if let Ok(g) = gibbs_state(&c.hamiltonian, c.bound.min(top)) {
            starts.push(g.matrix().clone());
        }
    }
    for _ in 0..budget.random_starts {
        starts.push(random_state(&mut rng, d));
    }
    match constraint {
        None => starts,
        Some(c) => starts
            .into_iter()
            .map(|r| make_feasible(r, &c.hamiltonian, c.bound))
            .collect(),
    }
}

/// Certified bracket for `β(Φ,Ψ)`, or `β_E(Φ,Ψ)` when a constraint is given.
///
/// The lower end is `√(2 − 2‖X(ρ)‖₁)` at the best feasible input found, the
/// upper end `√(2 − 2 q(C))` at the best environment contraction, where `q(C)`
/// is evaluated through its Lagrange dual and is valid for any multiplier.
pub fn channel_bures_bracket(
    phi: &StinespringChannel,
    psi: &StinespringChannel,
    constraint: Option<&EnergyConstraint>,
    budget: &BracketBudget,
) -> Result<Bracket> {
    let pair = BuresPair::new(phi, psi, constraint)?;
    let starts = starting_states(pair.d_a, constraint, budget);
    let outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .map(|s| run_start(&pair, s, budget))
        .collect();
    let iterations = outcomes.iter().map(|o| o.iterations).sum();
    let mut lower: Option<Candidate> = None;
    let mut upper: Option<DualCandidate> = None;
    for o in outcomes {
        for c in o.lower {
            if lower.as_ref().is_none_or(|b| c.phi < b.phi) {
                lower = Some(c);
            }
        }
        for c in o.contractions {
            let (d, rho) = pair.dual_candidate(&c)?;
            if let Some(cand) = pair.candidate(&rho) {
                if lower.as_ref().is_none_or(|b| cand.phi < b.phi) {
                    lower = Some(cand);
                }
            }
            if upper.as_ref().is_none_or(|b| d.q > b.q) {
                upper = Some(d);
            }
        }
    }
    let lower = lower.ok_or_else(|| Error::Infeasible("no feasible input state found".into()))?;
    let upper = upper.ok_or_else(|| Error::Numerical("no contraction evaluated".into()))?;
    let lo = (2.0 - 2.0 * lower.phi.min(1.0)).max(0.0).sqrt();
    let hi = (2.0 - 2.0 * upper.q.min(1.0)).max(0.0).sqrt();
    let hi = hi.max(lo);
    let norm = operator_norm(&upper.c);
    Ok(Bracket {
        lower: lo,
        upper: hi,
        iterations,
        converged: hi - lo <= budget.tolerance,
        certificates: Certificates {
            lower_state: Some(MatrixWitness::from_matrix(&lower.rho)),
            lower_state_energy: lower.energy,
            contraction: Some(MatrixWitness::from_matrix(&upper.c)),
            contraction_norm: Some(norm),
            multiplier: constraint.map(|_| upper.mu),
        },
    })
}

/// Output Bures distance `√(2 − 2‖X(ρ)‖₁)` for the purified input `ρ`, i.e.
/// `β(Φ⊗Id(ρ̂), Ψ⊗Id(ρ̂))`.
pub fn output_bures_for_input(
    phi: &StinespringChannel,
    psi: &StinespringChannel,
    rho: &CMatrix,
) -> Result<f64> {
    let pair = BuresPair::new(phi, psi, None)?;
    let f = pair.smoothed(rho, 0.0).2;
    Ok((2.0 - 2.0 * f.min(1.0)).max(0.0).sqrt())
}

/// `((Φ−Ψ)⊗Id)(|ψ⟩⟨ψ|)` for `ψ` on `A⊗R` with `dim R = d_A`.
fn difference_output(phi: &[CMatrix], psi: &[CMatrix], v: &CVector, r: usize) -> CMatrix {
    let apply = |ks: &[CMatrix]| -> CMatrix {
        let mut out: Option<CMatrix> = None;
        for k in ks {
            let w = embed(k, 1, r) * v;
            let term = &w * w.adjoint();
            out = Some(match out {
                None => term,
                Some(o) => o + term,
            });
        }
        out.unwrap()
    };
    hermitian_part(&(apply(phi) - apply(psi)))
}

fn dual_difference(phi: &[CMatrix], psi: &[CMatrix], z: &CMatrix, r: usize) -> CMatrix {
    let dual = |ks: &[CMatrix]| -> CMatrix {
        let mut out: Option<CMatrix> = None;
        for k in ks {
            let big = embed(k, 1, r);
            let term = big.adjoint() * z * &big;
            out = Some(match out {
                None => term,
                Some(o) => o + term,
            });
        }
        out.unwrap()
    };
    hermitian_part(&(dual(phi) - dual(psi)))
}

/// Bracket for the (energy-constrained) diamond norm `‖Φ−Ψ‖_⋄^E`.
///
/// The lower end is the largest `‖(Φ−Ψ)⊗Id(ψ)‖₁` over sampled and locally
/// ascended feasible pure inputs; the upper end is `min(2, 2·β_E upper)`.
pub fn diamond_bracket(
    phi: &StinespringChannel,
    psi: &StinespringChannel,
    constraint: Option<&EnergyConstraint>,
    budget: &BracketBudget,
) -> Result<Bracket> {
    let bures = channel_bures_bracket(phi, psi, constraint, budget)?;
    diamond_bracket_from(phi, psi, constraint, budget, &bures)
}

/// As [`diamond_bracket`], reusing an existing Bures bracket for the upper end.
pub fn diamond_bracket_from(
    phi: &StinespringChannel,
    psi: &StinespringChannel,
    constraint: Option<&EnergyConstraint>,
    budget: &BracketBudget,
    bures: &Bracket,
) -> Result<Bracket> {
    if phi.d_a() != psi.d_a() || phi.d_b() != psi.d_b() {
        return Err(Error::Dimension("channels need equal input and output dimensions".into()));
    }
    let d = phi.d_a();
    let (kp, kq) = (phi.kraus(), psi.kraus());
    let h_big = constraint.map(|c| embed(&c.hamiltonian.matrix(), 1, d));
    let e = constraint.map(|c| c.bound);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut seeds: Vec<CMatrix> = vec![CMatrix::identity(d, d) / cr(d as f64)];
    for _ in 0..budget.diamond_samples {
        seeds.push(random_state(&mut rng, d));
    }
    if let Some(c) = constraint {
        seeds = seeds
            .into_iter()
            .map(|r| make_feasible(r, &c.hamiltonian, c.bound))
            .collect();
    }
    let purify = |rho: &CMatrix| -> CVector {
        let s = sqrt_factor(rho);
        CVector::from_fn(d * d, |k, _| s[(k / d, k % d)])
    };
    let energy_of = |v: &CVector| -> f64 {
        h_big
            .as_ref()
            .map(|h| (v.adjoint() * h * v)[(0, 0)].re)
            .unwrap_or(0.0)
    };
    let feasible = |v: &CVector| -> bool {
        match e {
            None => true,
            Some(e) => energy_of(v) <= e + 1e-12 * e.abs().max(1.0),
        }
    };
    // top eigenvector of M − μH with the smallest μ keeping the energy feasible
    let top_vector = |m: &CMatrix| -> Option<CVector> {
        let top = |mu: f64| -> Option<CVector> {
            let mm = match &h_big {
                None => m.clone(),
                Some(h) => m - h * cr(mu),
            };
            let (_, vecs) = eigh_raw(&mm).ok()?;
            Some(vecs.column(vecs.ncols() - 1).into_owned())
        };
        let v0 = top(0.0)?;
        if feasible(&v0) {
            return Some(v0);
        }
        let mut hi = 1.0;
        let mut v_hi = None;
        for _ in 0..80 {
            let v = top(hi)?;
            if feasible(&v) {
                v_hi = Some(v);
                break;
            }
            hi *= 2.0;
        }
        let mut v_hi = v_hi?;
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let v = top(mid)?;
            if feasible(&v) {
                hi = mid;
                v_hi = v;
            } else {
                lo = mid;
            }
        }
        Some(v_hi)
    };
    let mut best = 0.0_f64;
    let mut best_state: Option<CMatrix> = None;
    let mut iterations = 0;
    for rho in seeds {
        let mut v = purify(&rho);
        if !feasible(&v) {
            continue;
        }
        let mut val = trace_norm(&difference_output(&kp, &kq, &v, d));
        for _ in 0..budget.diamond_steps {
            iterations += 1;
            let delta = difference_output(&kp, &kq, &v, d);
            let z = spectral_map(&delta, |x| if x >= 0.0 { 1.0 } else { -1.0 })?;
            let m = dual_difference(&kp, &kq, &z, d);
            let Some(next) = top_vector(&m) else { break };
            let nv = trace_norm(&difference_output(&kp, &kq, &next, d));
            if nv <= val + 1e-14 {
                break;
            }
            v = next;
            val = nv;
        }
        if val > best {
            best = val;
            let reduced = crate::qstate::partial_trace_raw(&(&v * v.adjoint()), &[d, d], &[0]);
            best_state = Some(reduced);
        }
    }
    let upper = (2.0 * bures.upper).min(2.0).max(best);
    Ok(Bracket {
        lower: best,
        upper,
        iterations,
        converged: upper - best <= budget.tolerance,
        certificates: Certificates {
            lower_state_energy: match (&best_state, constraint) {
                (Some(r), Some(c)) => Some(c.hamiltonian.energy(r)),
                _ => None,
            },
            lower_state: best_state.as_ref().map(MatrixWitness::from_matrix),
            contraction: bures.certificates.contraction.clone(),
            contraction_norm: bures.certificates.contraction_norm,
            multiplier: bures.certificates.multiplier,
        },
    })
}
