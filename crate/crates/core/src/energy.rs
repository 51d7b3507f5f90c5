//! Hamiltonians with finite spectrum, Gibbs states, the maximal-entropy
//! functions `F_H` and `F̄_H`, oscillator closed forms and Schmidt truncation.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::entropic::{eta, g};
use crate::error::{Error, Result};
use crate::qstate::{
    cr, jordan_parts, CMatrix, CVector, DensityMatrix, HermitianOperator, PureState,
    SystemLayout, MAX_DIM,
};

const DEGENERACY_TOL: f64 = 1e-9;
const GIBBS_TOL: f64 = 1e-10;
const INVERSE_TOL: f64 = 1e-10;

/// A positive operator given by its spectrum, optionally in a non-standard eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    eigenvalues: Vec<f64>,
    eigenbasis: Option<CMatrix>,
}

impl Hamiltonian {
    /// Eigenvalues must be nondecreasing with `E_0 ≥ 0`; the basis is computational.
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Domain("a Hamiltonian needs at least one level".into()));
        }
        if eigenvalues.len() > MAX_DIM {
            return Err(Error::SizeGuard(format!("{} levels", eigenvalues.len())));
        }
        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain("non-finite energy level".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("energy levels must be nondecreasing".into()));
        }
        if eigenvalues[0] < 0.0 {
            return Err(Error::Domain(format!("ground energy {} < 0", eigenvalues[0])));
        }
        Ok(Hamiltonian {
            eigenvalues,
            eigenbasis: None,
        })
    }

    /// Columns of `basis` are the eigenvectors matching `eigenvalues`.
    pub fn with_basis(eigenvalues: Vec<f64>, basis: CMatrix) -> Result<Self> {
        let mut h = Self::new(eigenvalues)?;
        let d = h.dim();
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::Dimension("eigenbasis shape does not match the spectrum".into()));
        }
        if crate::channels::isometry_deviation(&basis) > 1e-10 {
            return Err(Error::Domain("eigenbasis is not unitary".into()));
        }
        h.eigenbasis = Some(basis);
        Ok(h)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_multiplicity(&self) -> usize {
        let e0 = self.ground_energy();
        self.eigenvalues
            .iter()
            .take_while(|e| **e - e0 <= DEGENERACY_TOL)
            .count()
    }

    /// Mean of the spectrum: the energy of the maximally mixed state.
    pub fn max_mean_energy(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.dim() as f64
    }

    fn diagonal_operator(&self, f: impl Fn(usize, f64) -> f64) -> CMatrix {
        let d = self.dim();
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(
            d,
            self.eigenvalues.iter().enumerate().map(|(i, e)| cr(f(i, *e))),
        ));
        match &self.eigenbasis {
            None => diag,
            Some(u) => u * diag * u.adjoint(),
        }
    }

    pub fn matrix(&self) -> CMatrix {
        self.diagonal_operator(|_, e| e)
    }

    pub fn operator(&self, label: &str) -> Result<HermitianOperator> {
        HermitianOperator::new(SystemLayout::single(label, self.dim())?, self.matrix())
    }

    /// `H − E_0 I`.
    pub fn shifted_matrix(&self) -> CMatrix {
        let e0 = self.ground_energy();
        self.diagonal_operator(|_, e| e - e0)
    }

    /// Uniform mixture on the ground space.
    pub fn ground_state_matrix(&self) -> CMatrix {
        let d0 = self.ground_multiplicity();
        self.diagonal_operator(|i, _| if i < d0 { 1.0 / d0 as f64 } else { 0.0 })
    }

    /// `Tr[H ρ]` for a matrix on this space.
    pub fn energy(&self, rho: &CMatrix) -> f64 {
        (self.matrix() * rho).trace().re
    }

    pub(crate) fn cache_key(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for e in &self.eigenvalues {
            e.to_bits().hash(&mut h);
        }
        if let Some(u) = &self.eigenbasis {
            for z in u.iter() {
                z.re.to_bits().hash(&mut h);
                z.im.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

fn gibbs_weights_at(levels: &[f64], e0: f64, lambda: f64) -> (Vec<f64>, f64) {
    let w: Vec<f64> = levels.iter().map(|e| (-lambda * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / z).collect();
    let energy = p.iter().zip(levels).map(|(p, e)| p * e).sum();
    (p, energy)
}

/// Gibbs probabilities over the eigenbasis and the inverse temperature λ.
/// At `E = E_0` the weights are uniform on the ground space (λ reported as `+∞`).
pub fn gibbs_distribution(h: &Hamiltonian, e: f64) -> Result<(Vec<f64>, f64)> {
    let (e0, top) = (h.ground_energy(), h.max_mean_energy());
    if !(e >= e0 && e <= top + GIBBS_TOL) {
        return Err(Error::Domain(format!(
            "energy {e} outside the feasible interval [{e0}, {top}]"
        )));
    }
    let levels = h.eigenvalues();
    if e - e0 <= GIBBS_TOL * 1e-3 || top - e0 <= DEGENERACY_TOL {
        let d0 = h.ground_multiplicity();
        let p = (0..h.dim())
            .map(|i| if i < d0 { 1.0 / d0 as f64 } else { 0.0 })
            .collect();
        return Ok((p, f64::INFINITY));
    }
    if e >= top - GIBBS_TOL {
        return Ok((vec![1.0 / h.dim() as f64; h.dim()], 0.0));
    }
    let mut hi = 1.0 / (top - e0);
    while gibbs_weights_at(levels, e0, hi).1 > e {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numerical("could not bracket the Gibbs parameter".into()));
        }
    }
    let mut lo = 0.0;
    let mut best = gibbs_weights_at(levels, e0, hi);
    let mut lambda = hi;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let (p, en) = gibbs_weights_at(levels, e0, mid);
        if (en - e).abs() < (best.1 - e).abs() {
            best = (p, en);
            lambda = mid;
        }
        if (en - e).abs() <= GIBBS_TOL || hi - lo <= f64::EPSILON * hi {
            break;
        }
        if en > e {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((best.0, lambda))
}

/// `e^{−λH}/Tr e^{−λH}` with mean energy `E`, on a single factor labeled `A`.
pub fn gibbs_state(h: &Hamiltonian, e: f64) -> Result<DensityMatrix> {
    let (p, _) = gibbs_distribution(h, e)?;
    let d = h.dim();
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(d, p.iter().map(|x| cr(*x))));
    let m = match &h.eigenbasis {
        None => diag,
        Some(u) => u * diag * u.adjoint(),
    };
    Ok(DensityMatrix::from_parts(SystemLayout::single("A", d)?, m))
}

/// `F_H(E)`: entropy of the Gibbs state at mean energy `E`.
pub fn f_h(h: &Hamiltonian, e: f64) -> Result<f64> {
    let (p, _) = gibbs_distribution(h, e)?;
    Ok(p.iter().map(|x| eta(*x)).sum())
}

/// `F̄_H(E) = F_H(E + E_0)`.
pub fn f_bar(h: &Hamiltonian, e: f64) -> Result<f64> {
    if e < 0.0 {
        return Err(Error::Domain(format!("F̄ needs E >= 0, got {e}")));
    }
    f_h(h, e + h.ground_energy())
}

/// Inverse of `F̄_H` on `[log d_0, log dim]` by bisection.
pub fn f_bar_inverse(h: &Hamiltonian, y: f64) -> Result<f64> {
    let lo_y = (h.ground_multiplicity() as f64).ln();
    let hi_y = (h.dim() as f64).ln();
    if y < lo_y - 1e-12 {
        return Err(Error::Domain(format!("F̄⁻¹ needs y >= log d_0 = {lo_y}, got {y}")));
    }
    if y > hi_y + 1e-12 {
        return Err(Error::Domain(format!("F̄⁻¹ needs y <= log dim = {hi_y}, got {y}")));
    }
    let (mut lo, mut hi) = (0.0, h.max_mean_energy() - h.ground_energy());
    if y <= lo_y {
        return Ok(0.0);
    }
    if y >= hi_y {
        return Ok(hi);
    }
    while hi - lo > INVERSE_TOL * 1e-2 {
        let mid = 0.5 * (lo + hi);
        if f_bar(h, mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `γ(d) = F̄⁻¹(log d)` for `d_0 ≤ d ≤ dim`.
pub fn gamma(h: &Hamiltonian, d: usize) -> Result<f64> {
    if d < h.ground_multiplicity() {
        return Err(Error::Domain(format!(
            "γ(d) needs d >= d_0 = {}",
            h.ground_multiplicity()
        )));
    }
    if d > h.dim() {
        return Err(Error::Domain(format!(
            "γ(d) for a {}-level Hamiltonian is only defined up to d = {}",
            h.dim(),
            h.dim()
        )));
    }
    f_bar_inverse(h, (d as f64).ln())
}

fn gamma_cache() -> &'static Mutex<HashMap<(u64, usize), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Memoized [`gamma`].
pub fn gamma_cached(h: &Hamiltonian, d: usize) -> Result<f64> {
    let key = (h.cache_key(), d);
    if let Some(v) = gamma_cache().lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let v = gamma(h, d)?;
    gamma_cache().lock().unwrap().insert(key, v);
    Ok(v)
}

/// The ℓ-mode oscillator with `H = Σ ħω_i (n_i + ½)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    pub frequencies: Vec<f64>,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    /// Levels per mode for the matrix realization.
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

fn default_hbar() -> f64 {
    1.0
}

fn default_truncation() -> usize {
    40
}

impl OscillatorSpec {
    pub fn new(frequencies: Vec<f64>, hbar: f64, truncation: usize) -> Result<Self> {
        let s = OscillatorSpec {
            frequencies,
            hbar,
            truncation,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn single_mode(omega: f64) -> Self {
        OscillatorSpec {
            frequencies: vec![omega],
            hbar: 1.0,
            truncation: default_truncation(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.is_empty() {
            return Err(Error::Domain("oscillator needs at least one mode".into()));
        }
        if self.frequencies.iter().any(|w| !(*w > 0.0 && w.is_finite())) || !(self.hbar > 0.0) {
            return Err(Error::Domain("frequencies and ħ must be positive".into()));
        }
        if self.truncation < 2 {
            return Err(Error::Domain("truncation needs at least 2 levels per mode".into()));
        }
        if 2.0 * self.e0() < self.e_star() * (1.0 - 1e-12) {
            return Err(Error::Domain("2E_0 >= E_* violated".into()));
        }
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.frequencies.len()
    }

    /// `E_0 = ½ Σ ħω_i`.
    pub fn e0(&self) -> f64 {
        0.5 * self.hbar * self.frequencies.iter().sum::<f64>()
    }

    /// `E_* = (Π ħω_i)^{1/ℓ}`.
    pub fn e_star(&self) -> f64 {
        let l = self.modes() as f64;
        (self.frequencies.iter().map(|w| (self.hbar * w).ln()).sum::<f64>() / l).exp()
    }

    /// `F_{ℓ,ω}(E) = ℓ log((E+E_0)/(ℓE_*)) + ℓ`.
    pub fn f_closed(&self, e: f64) -> Result<f64> {
        if e < self.e0() {
            return Err(Error::Domain(format!("F_ℓω needs E >= E_0 = {}", self.e0())));
        }
        Ok(self.f_closed_unchecked(e))
    }

    fn f_closed_unchecked(&self, e: f64) -> f64 {
        let l = self.modes() as f64;
        l * ((e + self.e0()) / (l * self.e_star())).ln() + l
    }

    /// `F̄_{ℓ,ω}(E) = F_{ℓ,ω}(E + E_0)`.
    pub fn f_bar_closed(&self, e: f64) -> Result<f64> {
        if e < 0.0 {
            return Err(Error::Domain(format!("F̄_ℓω needs E >= 0, got {e}")));
        }
        Ok(self.f_closed_unchecked(e + self.e0()))
    }

    /// `γ̂(d) = (ℓ/e) E_* d^{1/ℓ} − 2E_0` without the domain check.
    pub(crate) fn gamma_hat_unchecked(&self, d: f64) -> f64 {
        let l = self.modes() as f64;
        l / std::f64::consts::E * self.e_star() * d.powf(1.0 / l) - 2.0 * self.e0()
    }

    /// `γ̂(d) = F̄_{ℓ,ω}⁻¹(log d)`, for `d > exp F̄_{ℓ,ω}(0)`.
    pub fn gamma_hat(&self, d: f64) -> Result<f64> {
        let floor = self.f_closed_unchecked(self.e0()).exp();
        if d <= floor {
            return Err(Error::Domain(format!("γ̂(d) needs d > {floor}")));
        }
        Ok(self.gamma_hat_unchecked(d))
    }

    /// Maximal entropy of the untruncated oscillator at mean energy `E`:
    /// `Σ g(n_i)` with Bose occupations at a common temperature.
    pub fn f_exact(&self, e: f64) -> Result<f64> {
        if e < self.e0() {
            return Err(Error::Domain(format!("F needs E >= E_0 = {}", self.e0())));
        }
        let excess = e - self.e0();
        if excess == 0.0 {
            return Ok(0.0);
        }
        let occ = |beta: f64| -> Vec<f64> {
            self.frequencies
                .iter()
                .map(|w| 1.0 / (beta * self.hbar * w).exp_m1())
                .collect()
        };
        let energy = |beta: f64| -> f64 {
            occ(beta)
                .iter()
                .zip(&self.frequencies)
                .map(|(n, w)| n * self.hbar * w)
                .sum()
        };
        let (mut lo, mut hi) = (1e-300_f64, 1.0);
        while energy(hi) > excess {
            hi *= 2.0;
        }
        while energy(lo.max(1e-300)) < excess && lo < hi {
            lo = (lo * 1e3).min(hi);
            if energy(lo) >= excess {
                break;
            }
        }
        let mut lo = if energy(lo) >= excess { lo } else { 1e-300 };
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if energy(mid) > excess {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(occ(0.5 * (lo + hi)).iter().map(|n| g(*n)).sum())
    }

    /// Levels of the product Fock space truncated to `truncation` levels per mode, sorted.
    pub fn truncated_levels(&self) -> Result<Vec<f64>> {
        let n = self.truncation;
        let total = n
            .checked_pow(self.modes() as u32)
            .filter(|t| *t <= MAX_DIM)
            .ok_or_else(|| Error::SizeGuard("truncated oscillator too large".into()))?;
        let mut levels = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rest = idx;
            let mut e = self.e0();
            for w in &self.frequencies {
                e += self.hbar * w * (rest % n) as f64;
                rest /= n;
            }
            levels.push(e);
        }
        levels.sort_by(f64::total_cmp);
        Ok(levels)
    }

    pub fn to_hamiltonian(&self) -> Result<Hamiltonian> {
        Hamiltonian::new(self.truncated_levels()?)
    }

    /// Gibbs weight of Fock states with some mode at the top truncated level.
    pub fn tail_mass(&self, e: f64) -> Result<f64> {
        let n = self.truncation;
        let h = self.to_hamiltonian()?;
        let (_, lambda) = gibbs_distribution(&h, e)?;
        if !lambda.is_finite() {
            return Ok(0.0);
        }
        let total = n.pow(self.modes() as u32);
        let (mut z, mut top) = (0.0, 0.0);
        for idx in 0..total {
            let mut rest = idx;
            let (mut en, mut at_top) = (0.0, false);
            for w in &self.frequencies {
                let k = rest % n;
                en += self.hbar * w * k as f64;
                at_top |= k == n - 1;
                rest /= n;
            }
            let wgt = (-lambda * en).exp();
            z += wgt;
            if at_top {
                top += wgt;
            }
        }
        let mass = top / z;
        if mass > 1e-8 {
            log::warn!(
                "oscillator truncation {} leaves Gibbs tail mass {mass:.3e} at E = {e}",
                self.truncation
            );
        }
        Ok(mass)
    }
}

/// `F_{ℓ,ω}(E)`.
pub fn oscillator_f(spec: &OscillatorSpec, e: f64) -> Result<f64> {
    spec.f_closed(e)
}

/// `γ̂(d)`.
pub fn oscillator_gamma_hat(spec: &OscillatorSpec, d: f64) -> Result<f64> {
    spec.gamma_hat(d)
}

/// Source of `F`, `F̄` and `γ` for the energy-dependent bounds.
#[derive(Clone, Debug, PartialEq)]
pub enum EnergyProfile {
    /// Finite spectrum; `F` saturates at `log dim` above the mean of the spectrum,
    /// where the supremum over `Tr Hρ ≤ E` is attained by the maximally mixed state.
    Numeric(Hamiltonian),
    /// Oscillator closed forms `F_{ℓ,ω}`, `F̄_{ℓ,ω}` and `γ̂`.
    Oscillator(OscillatorSpec),
}

impl EnergyProfile {
    pub fn ground_energy(&self) -> f64 {
        match self {
            EnergyProfile::Numeric(h) => h.ground_energy(),
            EnergyProfile::Oscillator(s) => s.e0(),
        }
    }

    /// `sup{H(ρ) : Tr Hρ ≤ E}`.
    pub fn f(&self, e: f64) -> Result<f64> {
        match self {
            EnergyProfile::Numeric(h) => {
                if e >= h.max_mean_energy() {
                    Ok((h.dim() as f64).ln())
                } else {
                    f_h(h, e)
                }
            }
            EnergyProfile::Oscillator(s) => s.f_closed(e),
        }
    }

    pub fn f_bar(&self, e: f64) -> Result<f64> {
        if e < 0.0 {
            return Err(Error::Domain(format!("F̄ needs E >= 0, got {e}")));
        }
        self.f(e + self.ground_energy())
    }

    /// `γ(d)` (numeric, `None` outside `[d_0, dim]`) or `γ̂(d)` (closed form, any `d`).
    pub fn gamma(&self, d: usize) -> Option<f64> {
        match self {
            EnergyProfile::Numeric(h) => gamma_cached(h, d).ok(),
            EnergyProfile::Oscillator(s) => Some(s.gamma_hat_unchecked(d as f64)),
        }
    }

    /// Largest `d` for which [`Self::gamma`] is defined.
    pub fn gamma_limit(&self) -> usize {
        match self {
            EnergyProfile::Numeric(h) => h.dim(),
            EnergyProfile::Oscillator(_) => usize::MAX,
        }
    }

    pub fn is_oscillator(&self) -> bool {
        matches!(self, EnergyProfile::Oscillator(_))
    }
}

/// Serializable description of an energy profile, as used in configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergySpec {
    /// Explicit spectrum in the computational basis.
    Levels { eigenvalues: Vec<f64> },
    /// Oscillator with the closed forms `F_{ℓ,ω}`, `γ̂`.
    Oscillator(OscillatorSpec),
    /// Oscillator realized as a truncated matrix with numeric `F_H`, `γ`.
    TruncatedOscillator(OscillatorSpec),
}

impl EnergySpec {
    pub fn profile(&self) -> Result<EnergyProfile> {
        Ok(match self {
            EnergySpec::Levels { eigenvalues } => {
                EnergyProfile::Numeric(Hamiltonian::new(eigenvalues.clone())?)
            }
            EnergySpec::Oscillator(s) => {
                s.validate()?;
                EnergyProfile::Oscillator(s.clone())
            }
            EnergySpec::TruncatedOscillator(s) => EnergyProfile::Numeric(s.to_hamiltonian()?),
        })
    }

    /// Matrix realization (the truncation for oscillators).
    pub fn hamiltonian(&self) -> Result<Hamiltonian> {
        match self {
            EnergySpec::Levels { eigenvalues } => Hamiltonian::new(eigenvalues.clone()),
            EnergySpec::Oscillator(s) | EnergySpec::TruncatedOscillator(s) => s.to_hamiltonian(),
        }
    }
}

/// Default grid for [`check_s_flag`].
pub fn default_s_grid() -> Vec<f64> {
    (0..=400).map(|i| 1e-4 * 10f64.powf(i as f64 / 50.0)).collect()
}

/// `0` if `E ↦ F̄(E)/√E` is non-increasing on `grid` (always `0` for the
/// oscillator closed form), `1` otherwise.
pub fn check_s_flag(profile: &EnergyProfile, grid: &[f64]) -> u8 {
    if profile.is_oscillator() {
        return 0;
    }
    let mut prev = f64::INFINITY;
    for &e in grid.iter().filter(|e| **e > 0.0) {
        let Ok(f) = profile.f_bar(e) else { return 1 };
        let r = f / e.sqrt();
        if r > prev + 1e-12 * prev.abs().max(1.0) {
            return 1;
        }
        prev = r;
    }
    0
}

/// Result of the Schmidt truncation.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub state: PureState,
    /// Discarded Schmidt weight `δ_d`.
    pub delta: f64,
    pub kept: usize,
}

/// Keeps the `d` Schmidt terms of lowest `⟨α_k|H̄|α_k⟩` on factor `a_label`
/// and renormalizes. Ties go to the larger Schmidt coefficient.
pub fn truncate_pure_state(
    psi: &PureState,
    h: &Hamiltonian,
    a_label: &str,
    e: f64,
    d: usize,
) -> Result<PureState> {
    Ok(schmidt_truncation(psi, h, a_label, e, d)?.state)
}

pub fn schmidt_truncation(
    psi: &PureState,
    h: &Hamiltonian,
    a_label: &str,
    e: f64,
    d: usize,
) -> Result<Truncation> {
    let layout = psi.layout().clone();
    if layout.dim_of(a_label)? != h.dim() {
        return Err(Error::Dimension("Hamiltonian does not match the truncated factor".into()));
    }
    if d == 0 {
        return Err(Error::Domain("truncation rank must be positive".into()));
    }
    let rho_a = psi.to_density().partial_trace(&[a_label])?;
    let energy = h.energy(rho_a.matrix());
    if energy > e + 1e-10 {
        return Err(Error::Infeasible(format!(
            "state energy {energy} exceeds the bound {e}"
        )));
    }
    let e_bar = e - h.ground_energy();
    if d < h.dim() {
        let gd = gamma_cached(h, d.max(h.ground_multiplicity()))?;
        if e_bar > gd + 1e-12 {
            return Err(Error::Infeasible(format!("Ē = {e_bar} exceeds γ({d}) = {gd}")));
        }
    }
    if layout.len() == 1 {
        return Err(Error::Layout("truncation needs a second factor".into()));
    }
    let s = psi.schmidt(&[a_label])?;
    let nonzero: Vec<usize> = (0..s.coefficients.len())
        .filter(|&k| s.coefficients[k] > 1e-14)
        .collect();
    if nonzero.len() <= d {
        return Ok(Truncation {
            state: psi.clone(),
            delta: 0.0,
            kept: nonzero.len(),
        });
    }
    let hbar = h.shifted_matrix();
    let energies: Vec<f64> = (0..s.coefficients.len())
        .map(|k| {
            let a = s.a_vectors.column(k);
            (a.adjoint() * &hbar * a)[(0, 0)].re
        })
        .collect();
    let mut order = nonzero.clone();
    order.sort_by(|&x, &y| {
        energies[x]
            .total_cmp(&energies[y])
            .then(s.coefficients[y].total_cmp(&s.coefficients[x]))
    });
    let keep = &order[..d];
    let delta: f64 = order[d..].iter().map(|&k| s.coefficients[k].powi(2)).sum();
    let (da, db) = (s.a_layout.dim(), s.b_layout.dim());
    let mut v = CVector::zeros(da * db);
    for &k in keep {
        v += s.a_vectors.column(k).kronecker(&s.b_vectors.column(k)) * cr(s.coefficients[k]);
    }
    v /= cr((1.0 - delta).sqrt());
    let split = PureState::normalized(s.a_layout.concat(&s.b_layout)?, v)?;
    let labels = layout.labels();
    Ok(Truncation {
        state: split.reordered(&labels)?,
        delta,
        kept: d,
    })
}

/// Slack in each claim of the truncation lemma (all nonnegative when the claims hold).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruncationClaims {
    pub rank_slack: f64,
    pub energy_slack: f64,
    pub distance_slack: f64,
    pub positive_part_slack: f64,
    pub negative_part_slack: f64,
    pub delta_slack: f64,
}

impl TruncationClaims {
    pub fn min_slack(&self) -> f64 {
        [
            self.rank_slack,
            self.energy_slack,
            self.distance_slack,
            self.positive_part_slack,
            self.negative_part_slack,
            self.delta_slack,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the four truncation claims plus `δ_d ≤ Ē/γ(d)`.
pub fn truncation_claims(
    psi: &PureState,
    h: &Hamiltonian,
    a_label: &str,
    e: f64,
    d: usize,
) -> Result<TruncationClaims> {
    let t = schmidt_truncation(psi, h, a_label, e, d)?;
    let rho = psi.to_density();
    let sigma = t.state.to_density();
    let sigma_a = sigma.partial_trace(&[a_label])?;
    let rank = sigma_a
        .eigenvalues()?
        .iter()
        .filter(|x| **x > 1e-12)
        .count();
    let e_bar = e - h.ground_energy();
    let gd = if d >= h.dim() {
        f64::INFINITY
    } else {
        gamma_cached(h, d.max(h.ground_multiplicity()))?
    };
    let diff = HermitianOperator::new(rho.layout().clone(), rho.matrix() - sigma.matrix())?;
    let tn = crate::qstate::trace_norm(diff.matrix());
    let (pos, neg) = jordan_parts(&diff)?;
    let hbar = h.shifted_matrix();
    let part_energy = |m: &HermitianOperator| -> Result<f64> {
        let red = DensityMatrix::from_parts(rho.layout().clone(), m.matrix().clone())
            .partial_trace(&[a_label])?;
        Ok((&hbar * red.matrix()).trace().re)
    };
    let dist_bound = if gd.is_infinite() { 0.0 } else { (e_bar / gd).sqrt() };
    let delta_bound = if gd.is_infinite() { 0.0 } else { e_bar / gd };
    Ok(TruncationClaims {
        rank_slack: d as f64 - rank as f64,
        energy_slack: e - h.energy(sigma_a.matrix()),
        distance_slack: dist_bound - 0.5 * tn,
        positive_part_slack: 2.0 * e_bar - tn * part_energy(&pos)?,
        negative_part_slack: 2.0 * e_bar - tn * part_energy(&neg)?,
        delta_slack: delta_bound - t.delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropic::von_neumann_entropy;
    use crate::harness::generators::Generator;

    fn osc(n: usize) -> Hamiltonian {
        OscillatorSpec::new(vec![1.0], 1.0, n).unwrap().to_hamiltonian().unwrap()
    }

    #[test]
    fn qubit_gibbs_at_half_is_maximally_mixed() {
        let h = Hamiltonian::new(vec![0.0, 1.0]).unwrap();
        let s = gibbs_state(&h, 0.5).unwrap();
        assert!((s.matrix() - CMatrix::identity(2, 2) * cr(0.5)).norm() < 1e-9);
        assert!(gibbs_state(&h, 0.7).is_err());
        assert!(gibbs_state(&h, -0.1).is_err());
    }

    #[test]
    fn ground_energy_gives_ground_mixture() {
        let h = Hamiltonian::new(vec![0.5, 0.5, 0.5, 1.0, 2.0]).unwrap();
        assert_eq!(h.ground_multiplicity(), 3);
        let s = gibbs_state(&h, 0.5).unwrap();
        assert!((von_neumann_entropy(&s) - 3f64.ln()).abs() < 1e-12);
        assert!((f_h(&h, 0.5).unwrap() - 3f64.ln()).abs() < 1e-12);
        assert_eq!(gamma(&h, 3).unwrap(), 0.0);
    }

    #[test]
    fn gibbs_energy_is_met() {
        let h = Hamiltonian::new(vec![0.0, 0.3, 1.0, 2.5, 4.0]).unwrap();
        for &e in &[1e-6, 0.01, 0.2, 1.0, 1.5] {
            let s = gibbs_state(&h, e).unwrap();
            assert!((h.energy(s.matrix()) - e).abs() <= 1e-10, "E={e}");
        }
    }

    #[test]
    fn truncated_oscillator_entropy_matches_g() {
        let h = osc(60);
        let s = gibbs_state(&h, 2.0).unwrap();
        assert!((von_neumann_entropy(&s) - g(2.0 - 0.5)).abs() < 1e-6);
        let spec = OscillatorSpec::single_mode(1.0);
        assert!((spec.f_exact(2.0).unwrap() - g(1.5)).abs() < 1e-12);
    }

    #[test]
    fn f_h_is_increasing_and_concave() {
        let h = Hamiltonian::new((0..8).map(|k| k as f64).collect()).unwrap();
        let grid: Vec<f64> = (0..=60).map(|i| i as f64 * 3.5 / 60.0).collect();
        let vals: Vec<f64> = grid.iter().map(|e| f_h(&h, *e).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] < w[1]));
        assert!(vals.windows(3).all(|w| w[1] >= 0.5 * (w[0] + w[2]) - 1e-12));
    }

    #[test]
    fn lambda_decreases_with_energy() {
        let h = Hamiltonian::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let lams: Vec<f64> = (1..30)
            .map(|i| gibbs_distribution(&h, i as f64 * 0.05).unwrap().1)
            .collect();
        assert!(lams.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn f_bar_inverse_round_trip_and_gamma_monotone() {
        let h = osc(64);
        for &e in &[0.0, 0.1, 0.7, 3.0, 9.0] {
            let y = f_bar(&h, e).unwrap();
            assert!((f_bar_inverse(&h, y).unwrap() - e).abs() < 1e-8, "E={e}");
        }
        assert_eq!(gamma(&h, 1).unwrap(), 0.0);
        let gs: Vec<f64> = (1..=64).map(|d| gamma(&h, d).unwrap()).collect();
        assert!(gs.windows(2).all(|w| w[0] <= w[1]));
        assert!(f_bar_inverse(&Hamiltonian::new(vec![0.0, 0.0, 1.0]).unwrap(), 0.1).is_err());
    }

    #[test]
    fn oscillator_closed_forms() {
        let spec = OscillatorSpec::single_mode(1.0);
        assert!((oscillator_f(&spec, 5.0).unwrap() - (5.5f64.ln() + 1.0)).abs() < 1e-15);
        assert!(oscillator_f(&spec, 0.2).is_err());
        assert!(oscillator_gamma_hat(&spec, 1.0).is_err());
        let h = osc(60);
        for d in 3..=20 {
            assert!(spec.gamma_hat(d as f64).unwrap() <= gamma(&h, d).unwrap() + 1e-12);
        }
        for i in 0..50 {
            let e = 0.5 + i as f64 * 0.4;
            assert!(spec.f_closed(e).unwrap() >= f_h(&h, e).unwrap());
        }
        // γ̂ inverts F̄_ℓω
        let two = OscillatorSpec::new(vec![1.0, 2.0], 1.0, 10).unwrap();
        for &d in &[50.0, 400.0, 1e4] {
            let gh = two.gamma_hat(d).unwrap();
            assert!((two.f_bar_closed(gh).unwrap() - f64::ln(d)).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_gap_shrinks_for_large_energy() {
        let spec = OscillatorSpec::single_mode(1.0);
        let gaps: Vec<f64> = [1.0, 5.0, 20.0, 100.0]
            .iter()
            .map(|e| spec.f_closed(*e).unwrap() - spec.f_exact(*e).unwrap())
            .collect();
        assert!(gaps.iter().all(|x| *x > 0.0));
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn s_flag_cases() {
        let osc = EnergyProfile::Oscillator(OscillatorSpec::single_mode(1.0));
        assert_eq!(check_s_flag(&osc, &default_s_grid()), 0);
        let two = EnergyProfile::Numeric(Hamiltonian::new(vec![0.0, 1.0]).unwrap());
        assert_eq!(check_s_flag(&two, &default_s_grid()), 1);
        let flat = EnergyProfile::Numeric(Hamiltonian::new(vec![1.0; 4]).unwrap());
        assert_eq!(check_s_flag(&flat, &default_s_grid()), 0);
    }

    #[test]
    fn truncation_is_identity_when_rank_is_small() {
        let h = Hamiltonian::new((0..4).map(|k| k as f64).collect()).unwrap();
        let l = SystemLayout::new([("A", 4), ("B", 2)]).unwrap();
        let psi = Generator::new(1).pure_with_energy(l, "A", &h, 0.25);
        let t = truncate_pure_state(&psi, &h, "A", 0.25, 2).unwrap();
        assert_eq!(t, psi);
    }

    #[test]
    fn truncation_claims_on_random_states() {
        let h = Hamiltonian::new((0..8).map(|k| k as f64).collect()).unwrap();
        let l = SystemLayout::new([("A", 8), ("B", 8)]).unwrap();
        let mut gen = Generator::new(2);
        let mut checked = 0;
        for _ in 0..60 {
            let psi = gen.pure_with_energy(l.clone(), "A", &h, 0.6);
            for &d in &[2, 4] {
                match truncation_claims(&psi, &h, "A", 0.6, d) {
                    Ok(c) => {
                        assert!(c.min_slack() >= -1e-9, "{c:?}");
                        checked += 1;
                    }
                    Err(Error::Infeasible(_)) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn gibbs_maximizes_entropy() {
        let h = Hamiltonian::new(vec![0.0, 0.5, 1.0, 2.0]).unwrap();
        let mut gen = Generator::new(3);
        let l = SystemLayout::single("A", 4).unwrap();
        for _ in 0..100 {
            let rho = gen.density(l.clone());
            let e = h.energy(rho.matrix()).min(h.max_mean_energy());
            assert!(von_neumann_entropy(&rho) <= f_h(&h, e).unwrap() + 1e-8);
        }
    }
}
