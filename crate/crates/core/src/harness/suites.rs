use std::collections::BTreeMap;
use std::f64::consts::{LN_2, SQRT_2};

use serde_json::{json, Value};

use super::generators::{feasible_mix, scale_to_energy, Generator};
use super::{BoundVerdict, CampaignConfig, Outcome, Suite};
use crate::bounds::{
    erasure_capacities, erasure_pair_epsilon, lemma4_energy, lemma4_finite, lemma4_pure, lemma4_qc,
    p_r, prop2_bound, prop3_bound, prop4_bound, prop6_bound, prop7_bound, t_st, theorem1_bound,
    theorem2_bound, Capacity, D_SEARCH_CAP,
};
use crate::channels::{erasure_channel, tensor_power_apply, ErasureSpec, StinespringChannel};
use crate::energy::{
    check_s_flag, default_s_grid, f_h, truncation_claims, EnergyProfile, Hamiltonian, OscillatorSpec,
};
use crate::entropic::{
    conditional_mutual_information, g, h2, holevo_quantity, mutual_information, qc_state,
    von_neumann_entropy, Ensemble,
};
use crate::error::{Error, Result};
use crate::metrics::{
    bures_state_distance, channel_bures_bracket, diamond_bracket_from, ensemble_d0, ensemble_dk,
    ensemble_dstar_upper, output_bures_for_input, BracketBudget, EnergyConstraint,
};
use crate::qstate::{
    cr, eigh_raw, embed, tensor_product, trace_norm, CMatrix, DensityMatrix, SystemLayout,
};

struct Ctx<'a> {
    cfg: &'a CampaignConfig,
    trial: u64,
    gen: Generator,
    budget: BracketBudget,
    rows: Vec<BoundVerdict>,
}

impl Ctx<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        name: &str,
        epsilon: &str,
        lhs: f64,
        eps: (f64, f64),
        rhs: (f64, f64),
        certificates: BTreeMap<String, Value>,
    ) {
        let outcome = Outcome::judge(lhs, rhs.0, rhs.1, self.cfg.tolerance);
        self.rows.push(BoundVerdict {
            suite: self.cfg.suite,
            trial: self.trial,
            bound_name: name.to_string(),
            lhs,
            eps_lo: eps.0,
            eps_hi: eps.1,
            rhs_lo: rhs.0,
            rhs_hi: rhs.1,
            outcome,
            epsilon: epsilon.to_string(),
            certificates,
        });
    }

    /// Row for a bound evaluated at both ends of the `ε` bracket.
    fn bound(
        &mut self,
        name: &str,
        epsilon: &str,
        lhs: f64,
        eps: (f64, f64),
        f: impl Fn(f64) -> Result<f64>,
        certificates: BTreeMap<String, Value>,
    ) -> Result<()> {
        let rhs = (f(eps.0)?, f(eps.1)?);
        self.push(name, epsilon, lhs, eps, rhs, certificates);
        Ok(())
    }

    /// Row for an exact check `lhs ≤ rhs`.
    fn check(&mut self, name: &str, lhs: f64, rhs: f64) {
        self.push(name, "none", lhs, (0.0, 0.0), (rhs, rhs), BTreeMap::new());
    }

    fn energy_or(&self, default: Hamiltonian, bound: f64) -> Result<(Hamiltonian, f64)> {
        match &self.cfg.energy {
            Some(e) => Ok((e.spec.hamiltonian()?, e.bound)),
            None => Ok((default, bound)),
        }
    }
}

fn certs(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn lay(factors: &[(&str, usize)]) -> SystemLayout {
    SystemLayout::new(factors.iter().map(|(l, d)| (l.to_string(), *d))).expect("distinct labels")
}

fn half_trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    0.5 * trace_norm(&(a.matrix() - b.matrix()))
}

fn per_trial_seed(seed: u64, trial: u64) -> u64 {
    // splitmix64 finalizer on the pair
    let mut z = seed ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(super) fn run_trial(cfg: &CampaignConfig, trial: u64) -> Result<Vec<BoundVerdict>> {
    let mut ctx = Ctx {
        cfg,
        trial,
        gen: Generator::for_trial(cfg.seed, trial),
        budget: cfg.budget.clone().with_seed(per_trial_seed(cfg.seed, trial)),
        rows: Vec::new(),
    };
    match cfg.suite {
        Suite::Lemma4 => lemma4(&mut ctx),
        Suite::Prop2 => prop2(&mut ctx),
        Suite::Prop3 => prop3(&mut ctx),
        Suite::Prop4 => prop4(&mut ctx),
        Suite::Prop5 => prop5(&mut ctx),
        Suite::Prop6 => prop6(&mut ctx),
        Suite::Prop7 => prop7(&mut ctx),
        Suite::Prop8 => prop8(&mut ctx),
        Suite::Thm1 => thm1(&mut ctx),
        Suite::Thm2 => thm2(&mut ctx),
        Suite::Identities => identities(&mut ctx),
        Suite::Metrics => metrics(&mut ctx),
    }
    .map_err(|e| Error::Numerical(format!("{} trial {trial}: {e}", cfg.suite)))?;
    Ok(ctx.rows)
}

/// Convex combination `tσ' + (1−t)ρ` with `t` skewed toward 0, so both near and far pairs occur.
fn nearby_state(gen: &mut Generator, rho: &DensityMatrix) -> DensityMatrix {
    let other = gen.density_mixed_rank(rho.layout().clone());
    let t = gen.uniform().powi(2);
    other.mix(rho, t).expect("same layout")
}

/// `Φ` plus either an independent channel or a small perturbation of it.
fn channel_pair(gen: &mut Generator, d_a: usize, d_b: usize, d_e: usize) -> (StinespringChannel, StinespringChannel) {
    let phi = gen.channel(d_a, d_b, d_e);
    let psi = if gen.uniform() < 0.5 {
        gen.channel(d_a, d_b, d_e)
    } else {
        let scale = 10f64.powf(gen.uniform_in(-3.0, -0.5));
        gen.nearby_channel(&phi, scale)
    };
    (phi, psi)
}

fn bures(
    phi: &StinespringChannel,
    psi: &StinespringChannel,
    constraint: Option<&EnergyConstraint>,
    budget: &BracketBudget,
) -> Result<(f64, f64, BTreeMap<String, Value>)> {
    let b = channel_bures_bracket(phi, psi, constraint, budget)?;
    let c = certs(&[
        ("beta_lower", json!(b.lower)),
        ("beta_upper", json!(b.upper)),
        ("converged", json!(b.converged)),
        ("multiplier", json!(b.certificates.multiplier)),
    ]);
    Ok((b.lower.max(0.0), b.upper.min(SQRT_2), c))
}

/// Dimension of the span of the supports of two states.
fn joint_support_rank(a: &DensityMatrix, b: &DensityMatrix) -> Result<usize> {
    let (vals, _) = eigh_raw(&(a.matrix() + b.matrix()))?;
    let top = vals.iter().cloned().fold(0.0, f64::max);
    Ok(vals.iter().filter(|v| **v > 1e-12 * top.max(1.0)).count().max(1))
}

fn random_unitary(gen: &mut Generator, d: usize, scale: f64) -> Result<CMatrix> {
    let h = gen.hermitian(lay(&[("U", d)]));
    let (vals, vecs) = eigh_raw(h.matrix())?;
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        vals.iter().map(|l| num_complex::Complex64::from_polar(1.0, scale * l)),
    ));
    Ok(&vecs * phases * vecs.adjoint())
}

/// qc state `Σ_i p_i |i⟩⟨i|_{AD} ⊗ ρ_i` on `A,B,C,D,R`, classical on `AD`.
fn qc_on_ad(gen: &mut Generator, dims: [usize; 5]) -> Result<DensityMatrix> {
    let [da, db, dc, dd, dr] = dims;
    let k = da * dd;
    let p = gen.probabilities(k);
    let rest = lay(&[("B", db), ("C", dc), ("R", dr)]);
    let ad = lay(&[("A", da), ("D", dd)]);
    let mut m = CMatrix::zeros(k * rest.dim(), k * rest.dim());
    let mut layout = None;
    for (i, pi) in p.iter().enumerate() {
        let part = tensor_product(&DensityMatrix::basis_state(ad.clone(), i)?, &gen.density_mixed_rank(rest.clone()))?;
        m += part.matrix() * cr(*pi);
        layout = Some(part.layout().clone());
    }
    DensityMatrix::new(layout.expect("k >= 1"), m)?.reordered(&["A", "B", "C", "D", "R"])
}

fn lemma4(ctx: &mut Ctx) -> Result<()> {
    let dims = ["a", "b", "c", "d", "r"].map(|k| ctx.cfg.dim(k, 2));
    let [da, db, dc, dd, dr] = dims;
    let layout = lay(&[("A", da), ("B", db), ("C", dc), ("D", dd), ("R", dr)]);
    let cmi = |s: &DensityMatrix| conditional_mutual_information(s, &["A"], &["B"], &["C"]);
    let kind = ctx.trial % 5;
    let (rho, sigma) = match kind {
        0 => {
            let rho = ctx.gen.density_mixed_rank(layout.clone());
            let sigma = nearby_state(&mut ctx.gen, &rho);
            (rho, sigma)
        }
        1 => {
            let rho = qc_on_ad(&mut ctx.gen, dims)?;
            let other = qc_on_ad(&mut ctx.gen, dims)?;
            let t = ctx.gen.uniform().powi(2);
            let sigma = other.mix(&rho, t)?;
            (rho, sigma)
        }
        2 => {
            // a unitary on ADR leaves ρ_BC unchanged
            let rho = ctx.gen.density_mixed_rank(layout.clone());
            let order = ["A", "D", "R", "B", "C"];
            let r = rho.reordered(&order)?;
            let scale = 10f64.powf(ctx.gen.uniform_in(-3.0, 0.5));
            let u = embed(&random_unitary(&mut ctx.gen, da * dd * dr, scale)?, 1, db * dc);
            let s = DensityMatrix::new(r.layout().clone(), &u * r.matrix() * u.adjoint())?;
            (rho, s.reordered(&["A", "B", "C", "D", "R"])?)
        }
        _ => {
            // energy on the merged factor AD; the matrix is reinterpreted on A,D afterwards
            let h = Hamiltonian::new((0..da * dd).map(|k| k as f64).collect())?;
            let e = ctx.gen.uniform_in(0.3, 0.9) * h.max_mean_energy();
            let merged = lay(&[("AD", da * dd), ("B", db), ("C", dc), ("R", dr)]);
            let split = lay(&[("A", da), ("D", dd), ("B", db), ("C", dc), ("R", dr)]);
            let (rho, sigma) = if kind == 3 {
                let rho = ctx.gen.energy_feasible(merged.clone(), "AD", &h, e);
                let other = ctx.gen.energy_feasible(merged, "AD", &h, e);
                let t = ctx.gen.uniform().powi(2);
                (rho.clone(), other.mix(&rho, t)?)
            } else {
                let psi = ctx.gen.pure_with_energy(merged.clone(), "AD", &h, e);
                let noise = ctx.gen.pure(merged.clone());
                let w = 10f64.powf(ctx.gen.uniform_in(-3.0, 0.5));
                let phi = crate::qstate::PureState::normalized(
                    merged,
                    psi.amplitudes() + noise.amplitudes() * cr(w),
                )?;
                let phi = scale_to_energy(&phi, "AD", &h, e);
                (psi.to_density(), phi.to_density())
            };
            let rho = DensityMatrix::new(split.clone(), rho.matrix().clone())?;
            let sigma = DensityMatrix::new(split, sigma.matrix().clone())?;
            let eps = half_trace_distance(&rho, &sigma);
            let lhs = (cmi(&rho)? - cmi(&sigma)?).abs();
            let profile = EnergyProfile::Numeric(h);
            let c = certs(&[("E", json!(e))]);
            ctx.bound("lemma4_energy", "trace_distance", lhs, (eps, eps), |x| lemma4_energy(x, &profile, e, false), c.clone())?;
            if kind == 4 {
                ctx.bound("lemma4_pure", "trace_distance", lhs, (eps, eps), |x| lemma4_pure(x, &profile, e, false), c)?;
            }
            let d = joint_support_rank(&rho.partial_trace(&["A", "D"])?, &sigma.partial_trace(&["A", "D"])?)? as f64;
            ctx.bound("lemma4_finite", "trace_distance", lhs, (eps, eps), |x| lemma4_finite(x, d, false), certs(&[("d", json!(d))]))?;
            return Ok(());
        }
    };
    let eps = half_trace_distance(&rho, &sigma);
    let lhs = (cmi(&rho)? - cmi(&sigma)?).abs();
    let d = joint_support_rank(&rho.partial_trace(&["A", "D"])?, &sigma.partial_trace(&["A", "D"])?)? as f64;
    let c = certs(&[("d", json!(d))]);
    ctx.bound("lemma4_finite", "trace_distance", lhs, (eps, eps), |x| lemma4_finite(x, d, false), c.clone())?;
    match kind {
        1 => ctx.bound("lemma4_qc", "trace_distance", lhs, (eps, eps), |x| lemma4_qc(x, d, false), c)?,
        2 => {
            let bc = half_trace_distance(&rho.partial_trace(&["B", "C"])?, &sigma.partial_trace(&["B", "C"])?);
            let mut c = c;
            c.insert("bc_marginal_distance".into(), json!(bc));
            ctx.bound("lemma4_finite", "trace_distance", lhs, (eps, eps), |x| lemma4_finite(x, d, true), c)?
        }
        _ => {}
    }
    Ok(())
}

fn prop2(ctx: &mut Ctx) -> Result<()> {
    let (da, db, de, dc, dd) = (ctx.cfg.dim("a", 2), ctx.cfg.dim("b", 2), ctx.cfg.dim("e", 2), ctx.cfg.dim("c", 2), ctx.cfg.dim("d", 2));
    let layout = lay(&[("A", da), ("C", dc), ("D", dd)]);
    let kind = ctx.trial % 3;
    let (phi, psi) = channel_pair(&mut ctx.gen, da, db, de);
    let psi = if kind == 1 { phi.clone() } else { psi };
    let rho = ctx.gen.density_mixed_rank(layout);
    let sigma = if kind == 2 { rho.clone() } else { nearby_state(&mut ctx.gen, &rho) };
    let cmi = |s: &DensityMatrix| conditional_mutual_information(s, &["B"], &["D"], &["C"]);
    let lhs = (cmi(&phi.apply(&rho)?)? - cmi(&psi.apply(&sigma)?)?).abs();
    let tn = half_trace_distance(&rho, &sigma);
    let (lo, hi, c) = if kind == 1 {
        (0.0, 0.0, BTreeMap::new())
    } else {
        bures(&phi, &psi, None, &ctx.budget)?
    };
    let (same_channel, same_state) = (kind == 1, kind == 2);
    ctx.bound(
        "prop2",
        "trace_distance+beta",
        lhs,
        (tn + lo, tn + hi),
        |x| prop2_bound(x, da as f64, same_channel, same_state),
        c,
    )
}

/// Row for `ρ = σ`, `Φ = Ψ`: both sides of the prop2 inequality vanish.
#[cfg(test)]
pub(super) fn degenerate_prop2_row(seed: u64) -> Result<BoundVerdict> {
    let cfg = CampaignConfig::new(Suite::Prop2, 1, seed);
    let mut ctx = Ctx {
        cfg: &cfg,
        trial: 0,
        gen: Generator::new(seed),
        budget: BracketBudget::quick(),
        rows: Vec::new(),
    };
    let phi = ctx.gen.channel(2, 2, 2);
    let rho = ctx.gen.density(lay(&[("A", 2), ("C", 2), ("D", 2)]));
    let out = phi.apply(&rho)?;
    let i = conditional_mutual_information(&out, &["B"], &["D"], &["C"])?;
    ctx.bound("prop2", "trace_distance+beta", (i - i).abs(), (0.0, 0.0), |x| prop2_bound(x, 2.0, true, true), BTreeMap::new())?;
    Ok(ctx.rows.pop().expect("one row"))
}

/// Channel shared by every trial of a campaign.
fn fixed_channel(cfg: &CampaignConfig, d_a: usize, d_b: usize, d_e: usize) -> StinespringChannel {
    Generator::new(cfg.seed ^ 0x00c0_ffee).channel(d_a, d_b, d_e)
}

fn prop3(ctx: &mut Ctx) -> Result<()> {
    let (h, e) = ctx.energy_or(Hamiltonian::new(vec![0.0, 1.0, 2.0])?, 0.8)?;
    let da = h.dim();
    let (db, dc, dd) = (ctx.cfg.dim("b", 2), ctx.cfg.dim("c", 2), ctx.cfg.dim("d", 2));
    let de = ctx.cfg.dim("e", da.div_ceil(db));
    let phi = fixed_channel(ctx.cfg, da, db, de);
    let layout = lay(&[("A", da), ("C", dc), ("D", dd)]);
    let pure = ctx.trial % 2 == 1;
    let (rho, sigma) = if pure {
        let psi = ctx.gen.pure_with_energy(layout.clone(), "A", &h, e);
        let noise = ctx.gen.pure(layout.clone());
        let w = 10f64.powf(ctx.gen.uniform_in(-3.0, 0.5));
        let chi = crate::qstate::PureState::normalized(layout, psi.amplitudes() + noise.amplitudes() * cr(w))?;
        (psi.to_density(), scale_to_energy(&chi, "A", &h, e).to_density())
    } else {
        let rho = ctx.gen.energy_feasible(layout.clone(), "A", &h, e);
        let other = ctx.gen.energy_feasible(layout, "A", &h, e);
        let t = ctx.gen.uniform().powi(2);
        (rho.clone(), other.mix(&rho, t)?)
    };
    let cmi = |s: &DensityMatrix| conditional_mutual_information(s, &["B"], &["D"], &["C"]);
    let lhs = (cmi(&phi.apply(&rho)?)? - cmi(&phi.apply(&sigma)?)?).abs();
    let eps = half_trace_distance(&rho, &sigma);
    let profile = EnergyProfile::Numeric(h);
    let c = certs(&[("E", json!(e))]);
    ctx.bound("prop3", "trace_distance", lhs, (eps, eps), |x| prop3_bound(x, &profile, e, false), c.clone())?;
    if pure {
        ctx.bound("prop3", "trace_distance_pure", lhs, (eps, eps), |x| prop3_bound(x, &profile, e, true), c)?;
    }
    Ok(())
}

fn copies(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

fn prop4(ctx: &mut Ctx) -> Result<()> {
    let n = if let Some(n) = ctx.cfg.dims.get("n") { *n } else { 1 + (ctx.trial % 2) as usize };
    let (da, db, de, dc, dd) = (ctx.cfg.dim("a", 2), ctx.cfg.dim("b", 2), ctx.cfg.dim("e", 2), ctx.cfg.dim("c", 2), ctx.cfg.dim("d", 2));
    let inputs = copies("A", n);
    let mut factors: Vec<(&str, usize)> = inputs.iter().map(|l| (l.as_str(), da)).collect();
    factors.extend([("C", dc), ("D", dd)]);
    let rho = ctx.gen.density_mixed_rank(lay(&factors));
    let (phi, psi) = channel_pair(&mut ctx.gen, da, db, de);
    let outs = copies("B", n);
    let b: Vec<&str> = outs.iter().map(|s| s.as_str()).collect();
    let cmi = |s: &DensityMatrix| conditional_mutual_information(s, &b, &["D"], &["C"]);
    let lhs = (cmi(&tensor_power_apply(&phi, n, &rho)?)? - cmi(&tensor_power_apply(&psi, n, &rho)?)?).abs();
    let bracket = channel_bures_bracket(&phi, &psi, None, &ctx.budget)?;
    let (lo, hi) = (bracket.lower.max(0.0), bracket.upper.min(SQRT_2));
    let c = certs(&[("n", json!(n)), ("beta_lower", json!(lo)), ("beta_upper", json!(hi))]);
    let nf = n as f64;
    ctx.bound("prop4", "beta", lhs, (lo, hi), |x| prop4_bound(x, da as f64, nf), c)?;
    let diamond = diamond_bracket_from(&phi, &psi, None, &ctx.budget, &bracket)?;
    let (dl, du) = (diamond.lower.max(0.0).sqrt(), diamond.upper.min(2.0).sqrt());
    let c = certs(&[("n", json!(n)), ("diamond_lower", json!(diamond.lower)), ("diamond_upper", json!(diamond.upper))]);
    ctx.bound("prop4", "sqrt_diamond", lhs, (dl, du.min(SQRT_2)), |x| prop4_bound(x, da as f64, nf), c)
}

fn oscillator_hamiltonian(ctx: &Ctx, default_truncation: usize) -> Result<Hamiltonian> {
    OscillatorSpec::new(vec![1.0], 1.0, ctx.cfg.dim("truncation", default_truncation))?.to_hamiltonian()
}

fn marginal_energy(rho: &DensityMatrix, label: &str, h: &Hamiltonian) -> Result<f64> {
    Ok(h.energy(rho.partial_trace(&[label])?.matrix()))
}

fn prop5(ctx: &mut Ctx) -> Result<()> {
    let default_h = oscillator_hamiltonian(ctx, 6)?;
    let (h, e) = ctx.energy_or(default_h, 1.0)?;
    let n = if let Some(n) = ctx.cfg.dims.get("n") { *n } else { 1 + (ctx.trial % 2) as usize };
    let da = h.dim();
    let (db, dc, dd) = (ctx.cfg.dim("b", 2), ctx.cfg.dim("c", 2), ctx.cfg.dim("d", 2));
    let de = ctx.cfg.dim("e", da.div_ceil(db));
    let inputs = copies("A", n);
    let mut factors: Vec<(&str, usize)> = inputs.iter().map(|l| (l.as_str(), da)).collect();
    factors.extend([("C", dc), ("D", dd)]);
    let mut rho = ctx.gen.density_mixed_rank(lay(&factors));
    // unequal per-copy limits with the same total exercise t = 1
    let e_bar = e - h.ground_energy();
    let delta = if n > 1 && ctx.trial % 4 >= 2 { 0.9 * e_bar * ctx.gen.uniform() } else { 0.0 };
    for (k, label) in inputs.iter().enumerate() {
        let limit = if k == 0 { e + delta } else if k == 1 { e - delta } else { e };
        rho = feasible_mix(&rho, label, &h, limit);
    }
    let energies: Vec<f64> = inputs.iter().map(|l| marginal_energy(&rho, l, &h)).collect::<Result<_>>()?;
    debug_assert!(energies.iter().sum::<f64>() <= n as f64 * e + 1e-9);
    let t = u8::from(energies.iter().any(|x| *x > e + 1e-12));
    let (phi, psi) = channel_pair(&mut ctx.gen, da, db, de);
    let outs = copies("B", n);
    let b: Vec<&str> = outs.iter().map(|s| s.as_str()).collect();
    let cmi = |s: &DensityMatrix| conditional_mutual_information(s, &b, &["D"], &["C"]);
    let lhs = (cmi(&tensor_power_apply(&phi, n, &rho)?)? - cmi(&tensor_power_apply(&psi, n, &rho)?)?).abs();
    let constraint = EnergyConstraint::new(h.clone(), e)?;
    let (lo, hi, mut c) = bures(&phi, &psi, Some(&constraint), &ctx.budget)?;
    let profile = EnergyProfile::Numeric(h);
    let s = check_s_flag(&profile, &default_s_grid());
    c.extend(certs(&[("n", json!(n)), ("s", json!(s)), ("t", json!(t)), ("E", json!(e)), ("copy_energies", json!(energies))]));
    let nf = n as f64;
    ctx.bound(
        "prop5",
        "beta_e",
        lhs,
        (lo, hi),
        |x| Ok(nf * (t_st(&profile, e, s, t, x, D_SEARCH_CAP)?.value + g(x) + 2.0 * x * LN_2)),
        c,
    )
}

fn random_ensemble(gen: &mut Generator, d: usize, k_max: usize) -> Ensemble {
    let k = 2 + gen.index(k_max.max(2) - 1);
    gen.ensemble(lay(&[("A", d)]), k)
}

/// Ensemble with perturbed states and reweighted probabilities.
fn nearby_ensemble(gen: &mut Generator, mu: &Ensemble) -> Result<Ensemble> {
    let w = gen.uniform().powi(2);
    let q = gen.probabilities(mu.len());
    let items = mu
        .items()
        .iter()
        .zip(q)
        .map(|((p, s), qi)| {
            let other = gen.density_mixed_rank(s.layout().clone());
            let t = gen.uniform().powi(2);
            Ok(((1.0 - w) * p + w * qi, other.mix(s, t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(items)
}

fn ensemble_distance(mu: &Ensemble, nu: &Ensemble) -> Result<(f64, BTreeMap<String, Value>)> {
    let (d0, dk, ds) = (ensemble_d0(mu, nu)?, ensemble_dk(mu, nu)?, ensemble_dstar_upper(mu, nu)?);
    Ok((d0.min(dk).min(ds), certs(&[("d0", json!(d0)), ("dk", json!(dk)), ("dstar_upper", json!(ds))])))
}

fn chi_through(ch: &StinespringChannel, ens: &Ensemble) -> Result<f64> {
    Ok(holevo_quantity(&ens.map_states(|s| ch.apply(s))?))
}

fn prop6(ctx: &mut Ctx) -> Result<()> {
    let (da, db, de) = (ctx.cfg.dim("a", 2), ctx.cfg.dim("b", 2), ctx.cfg.dim("e", 2));
    let kind = ctx.trial % 3;
    let (phi, psi) = channel_pair(&mut ctx.gen, da, db, de);
    let psi = if kind == 1 { phi.clone() } else { psi };
    let mu = random_ensemble(&mut ctx.gen, da, ctx.cfg.dim("k", 4));
    let nu = if kind == 2 { mu.clone() } else { nearby_ensemble(&mut ctx.gen, &mu)? };
    let lhs = (chi_through(&phi, &mu)? - chi_through(&psi, &nu)?).abs();
    let (dist, mut c) = ensemble_distance(&mu, &nu)?;
    let (lo, hi) = if kind == 1 {
        (0.0, 0.0)
    } else {
        let (lo, hi, bc) = bures(&phi, &psi, None, &ctx.budget)?;
        c.extend(bc);
        (lo, hi)
    };
    let (same_channel, same_ensemble) = (kind == 1, kind == 2);
    ctx.bound(
        "prop6",
        "ensemble_distance+beta",
        lhs,
        (dist + lo, dist + hi),
        |x| prop6_bound(x, da as f64, same_channel, same_ensemble),
        c,
    )
}

fn feasible_ensemble(gen: &mut Generator, h: &Hamiltonian, e: f64, k_max: usize) -> Result<Ensemble> {
    let k = 2 + gen.index(k_max.max(2) - 1);
    let p = gen.probabilities(k);
    let layout = lay(&[("A", h.dim())]);
    let items = p
        .into_iter()
        .map(|pi| (pi, gen.energy_feasible(layout.clone(), "A", h, e)))
        .collect();
    Ensemble::new(items)
}

fn prop7(ctx: &mut Ctx) -> Result<()> {
    let (h, e) = ctx.energy_or(Hamiltonian::new(vec![0.0, 1.0, 2.0])?, 0.8)?;
    let da = h.dim();
    let db = ctx.cfg.dim("b", 2);
    let phi = fixed_channel(ctx.cfg, da, db, ctx.cfg.dim("e", da.div_ceil(db)));
    let k = ctx.cfg.dim("k", 4);
    let mu = feasible_ensemble(&mut ctx.gen, &h, e, k)?;
    let nu = if ctx.trial % 2 == 0 {
        feasible_ensemble(&mut ctx.gen, &h, e, k)?
    } else {
        // states mixed with feasible states stay feasible
        let q = ctx.gen.probabilities(mu.len());
        let w = ctx.gen.uniform().powi(2);
        let items = mu
            .items()
            .iter()
            .zip(q)
            .map(|((p, s), qi)| {
                let other = ctx.gen.energy_feasible(s.layout().clone(), "A", &h, e);
                let t = ctx.gen.uniform().powi(2);
                Ok(((1.0 - w) * p + w * qi, other.mix(s, t)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(items)?
    };
    let lhs = (chi_through(&phi, &mu)? - chi_through(&phi, &nu)?).abs();
    let (dist, mut c) = ensemble_distance(&mu, &nu)?;
    c.insert("E".into(), json!(e));
    let profile = EnergyProfile::Numeric(h);
    ctx.bound("prop7", "ensemble_distance", lhs, (dist, dist), |x| prop7_bound(x, &profile, e), c)
}

fn prop8(ctx: &mut Ctx) -> Result<()> {
    let default_h = oscillator_hamiltonian(ctx, 6)?;
    let (h, e) = ctx.energy_or(default_h, 1.0)?;
    let da = h.dim();
    let db = ctx.cfg.dim("b", 2);
    let (phi, psi) = channel_pair(&mut ctx.gen, da, db, ctx.cfg.dim("e", da.div_ceil(db)));
    let mu = feasible_ensemble(&mut ctx.gen, &h, e, ctx.cfg.dim("k", 4))?;
    let lhs = (chi_through(&phi, &mu)? - chi_through(&psi, &mu)?).abs();
    let constraint = EnergyConstraint::new(h.clone(), e)?;
    let (lo, hi, mut c) = bures(&phi, &psi, Some(&constraint), &ctx.budget)?;
    let profile = EnergyProfile::Numeric(h);
    let s = check_s_flag(&profile, &default_s_grid());
    c.extend(certs(&[("s", json!(s)), ("E", json!(e))]));
    ctx.bound(
        "prop8",
        "beta_e",
        lhs,
        (lo, hi),
        |x| Ok(t_st(&profile, e, s, 0, x, D_SEARCH_CAP)?.value + g(x) + 2.0 * x * LN_2),
        c,
    )
}

fn erasure_x(ctx: &mut Ctx) -> f64 {
    match (ctx.trial / 63) % 3 {
        0 => 0.01,
        1 => 0.05,
        _ => ctx.gen.uniform_in(1e-3, 0.49),
    }
}

fn capacity_name(prefix: &str, c: Capacity) -> String {
    format!("{prefix}_{}", c.as_str())
}

fn thm1(ctx: &mut Ctx) -> Result<()> {
    let d = ctx.cfg.dims.get("d").copied().unwrap_or(2 + (ctx.trial % 63) as usize);
    let x = erasure_x(ctx);
    let near = erasure_capacities(d, 0.5 - x, None)?;
    let half = erasure_capacities(d, 0.5, None)?;
    let eps = erasure_pair_epsilon(x)?;
    let mut c = certs(&[("d", json!(d)), ("x", json!(x))]);
    if d <= 3 {
        let b = channel_bures_bracket(
            &erasure_channel(&ErasureSpec { d, p: 0.5 - x })?,
            &erasure_channel(&ErasureSpec { d, p: 0.5 })?,
            None,
            &ctx.budget,
        )?;
        c.insert("beta_bracket".into(), json!([b.lower, b.upper]));
    }
    for cap in Capacity::ALL {
        let lhs = (near.get(cap) - half.get(cap)).abs();
        ctx.bound(&capacity_name("thm1", cap), "beta_closed_form", lhs, (eps, eps), |x| theorem1_bound(cap, x, d as f64), c.clone())?;
    }
    Ok(())
}

fn thm2(ctx: &mut Ctx) -> Result<()> {
    let h = match &ctx.cfg.energy {
        Some(e) => e.spec.hamiltonian()?,
        None => oscillator_hamiltonian(ctx, 40)?,
    };
    let e = match &ctx.cfg.energy {
        Some(c) => c.bound,
        None => [2.0, 5.0, 10.0][(ctx.trial % 3) as usize],
    };
    let x = erasure_x(ctx);
    let d = h.dim();
    let near = erasure_capacities(d, 0.5 - x, Some((&h, e)))?;
    let half = erasure_capacities(d, 0.5, Some((&h, e)))?;
    // ‖X(ρ)‖₁ does not depend on ρ for erasure pairs, so β_E = β
    let eps = erasure_pair_epsilon(x)?;
    let m = f_h(&h, e)?;
    let profile = EnergyProfile::Numeric(h.clone());
    let s = check_s_flag(&profile, &default_s_grid());
    let osc = OscillatorSpec::single_mode(1.0);
    let f_osc = osc.f_closed(e)?;
    for cap in Capacity::ALL {
        let lhs = (near.get(cap) - half.get(cap)).abs();
        let name = capacity_name("thm2", cap);
        for r in [1.0, 0.3, 1.0 / f_osc] {
            let c = certs(&[("E", json!(e)), ("x", json!(x)), ("M", json!(m)), ("main", json!("p_r")), ("r", json!(r))]);
            ctx.bound(&name, "beta_closed_form", lhs, (eps, eps), |y| Ok(theorem2_bound(cap, y, p_r(&osc, e, y, r)?)), c)?;
        }
        let t = if s == 0 { 0 } else { cap.t_flag() };
        let c = certs(&[("E", json!(e)), ("x", json!(x)), ("M", json!(m)), ("main", json!("t_st")), ("s", json!(s)), ("t", json!(t))]);
        match t_st(&profile, e, s, t, eps, D_SEARCH_CAP) {
            Ok(_) => ctx.bound(&name, "beta_closed_form", lhs, (eps, eps), |y| Ok(theorem2_bound(cap, y, t_st(&profile, e, s, t, y, D_SEARCH_CAP)?.value)), c)?,
            Err(Error::Infeasible(_)) => {}
            Err(err) => return Err(err),
        }
    }
    Ok(())
}

fn identities(ctx: &mut Ctx) -> Result<()> {
    let gen = &mut ctx.gen;
    // χ = I(A:X) on the qc state
    let d = 2 + gen.index(3);
    let k = 2 + gen.index(5);
    let ens = gen.ensemble(lay(&[("A", d)]), k);
    let qc = qc_state(&ens, "X")?;
    let chi_gap = (holevo_quantity(&ens) - mutual_information(&qc, &["A"], &["X"])?).abs();
    let (ha, hx) = (von_neumann_entropy(&qc.partial_trace(&["A"])?), von_neumann_entropy(&qc.partial_trace(&["X"])?));
    let i_ax = mutual_information(&qc, &["A"], &["X"])?;
    // chain rule on X,Y,Z,C
    let four = gen.density_mixed_rank(lay(&[("X", 2), ("Y", 2), ("Z", 2), ("C", 2)]));
    let lhs_chain = conditional_mutual_information(&four, &["X"], &["Y", "Z"], &["C"])?;
    let rhs_chain = conditional_mutual_information(&four, &["X"], &["Y"], &["C"])?
        + conditional_mutual_information(&four, &["X"], &["Z"], &["Y", "C"])?;
    // almost affinity
    let p = 0.1 * (1 + gen.index(9)) as f64;
    let (r1, r2) = (gen.density_mixed_rank(lay(&[("A", 2), ("B", 2), ("C", 2)])), gen.density_mixed_rank(lay(&[("A", 2), ("B", 2), ("C", 2)])));
    let cmi = |s: &DensityMatrix| conditional_mutual_information(s, &["A"], &["B"], &["C"]);
    let affinity = (p * cmi(&r1)? + (1.0 - p) * cmi(&r2)? - cmi(&r1.mix(&r2, p)?)?).abs();
    // isometries U, V: ‖UρU† − VρV†‖₁ ≤ 2‖(U−V)ρ‖₁ ≤ 2‖U−V‖
    let (u, v) = (gen.channel(2, 2, 2).isometry().clone(), gen.channel(2, 2, 2).isometry().clone());
    let rho = gen.density_mixed_rank(lay(&[("A", 2)]));
    let m = rho.matrix();
    let lemma1_lhs = trace_norm(&(&u * m * u.adjoint() - &v * m * v.adjoint()));
    let lemma1_mid = 2.0 * trace_norm(&((&u - &v) * m));
    let lemma1_rhs = 2.0 * crate::qstate::operator_norm(&(&u - &v));
    // x f(z/x) ≤ y f(z/y) for concave nonnegative f
    let (x, y) = {
        let a = gen.uniform_in(1e-3, 2.0);
        let b = gen.uniform_in(1e-3, 2.0);
        (a.min(b), a.max(b))
    };
    let z = gen.uniform_in(0.0, 3.0);
    let persp = |f: &dyn Fn(f64) -> f64, t: f64| t * f(z / t);
    let sqrt = |t: f64| t.sqrt();
    // truncation claims
    let h = if ctx.trial % 2 == 0 {
        Hamiltonian::new((0..8).map(|k| k as f64).collect())?
    } else {
        OscillatorSpec::new(vec![1.0], 1.0, 8)?.to_hamiltonian()?
    };
    let e = h.ground_energy() + gen.uniform_in(0.02, 0.6);
    let psi = gen.pure_with_energy(lay(&[("A", 8), ("B", 8)]), "A", &h, e);
    let dtrunc = [2, 4][gen.index(2)];
    let claims = truncation_claims(&psi, &h, "A", e, dtrunc);

    ctx.check("qc_chi_identity", chi_gap, 1e-9);
    ctx.check("qc_separable_bound", i_ax, ha.min(hx));
    ctx.check("chain_rule", (lhs_chain - rhs_chain).abs(), 1e-8);
    ctx.push("almost_affinity", "none", affinity, (p, p), (h2(p), h2(p)), BTreeMap::new());
    ctx.check("isometry_trace_distance", lemma1_lhs, lemma1_mid);
    ctx.check("isometry_operator_norm", lemma1_mid, lemma1_rhs);
    ctx.check("concave_perspective_g", persp(&g, x), persp(&g, y));
    ctx.check("concave_perspective_sqrt", persp(&sqrt, x), persp(&sqrt, y));
    match claims {
        Ok(cl) => {
            let mut c = BTreeMap::new();
            c.insert("claims".to_string(), serde_json::to_value(&cl)?);
            c.insert("d".to_string(), json!(dtrunc));
            ctx.push("truncation_claims", "none", -cl.min_slack(), (0.0, 0.0), (0.0, 0.0), c);
        }
        Err(Error::Infeasible(_)) => {}
        Err(err) => return Err(err),
    }
    Ok(())
}

fn metrics(ctx: &mut Ctx) -> Result<()> {
    let gen = &mut ctx.gen;
    let dim = 2 + gen.index(3);
    let (r, s) = (gen.density_mixed_rank(lay(&[("A", dim)])), gen.density_mixed_rank(lay(&[("A", dim)])));
    let t = trace_norm(&(r.matrix() - s.matrix()));
    let b = bures_state_distance(&r, &s)?;
    // shared weights make the diagonal coupling admissible for D_K
    let mu = gen.ensemble(lay(&[("A", 2)]), 3);
    let nu = Ensemble::new(
        mu.items()
            .iter()
            .map(|(p, _)| (*p, gen.density_mixed_rank(lay(&[("A", 2)]))))
            .collect(),
    )?;
    let (d0, dk) = (ensemble_d0(&mu, &nu)?, ensemble_dk(&mu, &nu)?);
    let (da, db, de) = (ctx.cfg.dim("a", 2), ctx.cfg.dim("b", 2), ctx.cfg.dim("e", 2));
    let (phi, psi) = channel_pair(gen, da, db, de);
    let inputs: Vec<CMatrix> = (0..ctx.cfg.dim("k", 2) * 1000)
        .map(|_| gen.density_mixed_rank(lay(&[("A", da)])).matrix().clone())
        .collect();
    let bracket = channel_bures_bracket(&phi, &psi, None, &ctx.budget)?;
    let diamond = diamond_bracket_from(&phi, &psi, None, &ctx.budget, &bracket)?;
    let mut brute = 0.0f64;
    for rho in &inputs {
        brute = brute.max(output_bures_for_input(&phi, &psi, rho)?);
    }

    ctx.check("bures_state_lower", 0.5 * t, b);
    ctx.check("bures_state_upper", b, t.sqrt());
    ctx.check("d0_dominates_dk_shared_weights", dk, d0);
    let c = certs(&[("beta", json!([bracket.lower, bracket.upper])), ("diamond", json!([diamond.lower, diamond.upper]))]);
    ctx.push("half_diamond_below_beta", "none", 0.5 * diamond.lower, (0.0, 0.0), (bracket.upper, bracket.upper), c.clone());
    ctx.push("beta_below_sqrt_diamond", "none", bracket.lower, (0.0, 0.0), (diamond.upper.sqrt(), diamond.upper.sqrt()), c.clone());
    ctx.push("bracket_ordered", "none", bracket.lower, (0.0, 0.0), (bracket.upper, bracket.upper), c.clone());
    ctx.push("sampled_inputs_below_bracket", "none", brute, (0.0, 0.0), (bracket.upper, bracket.upper), c);
    Ok(())
}
