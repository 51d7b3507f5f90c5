//! Entropies and correlation measures, all in nats.

use serde::{Deserialize, Serialize};

use crate::channels::StinespringChannel;
use crate::error::{Error, Result};
use crate::qstate::{
    eigh_raw, eigvals_raw, partial_trace_raw, purify, CMatrix, DensityMatrix, SystemLayout,
};

const ZERO_EIG: f64 = 1e-12;
const SUPPORT_TOL: f64 = 1e-10;

/// `η(x) = −x log x`, with `η(0) = 0`.
pub fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Binary entropy `h₂(p) = η(p) + η(1−p)`.
pub fn h2(p: f64) -> f64 {
    eta(p) + eta(1.0 - p)
}

/// `g(x) = (1+x) h₂(x/(1+x)) = (x+1)log(x+1) − x log x`.
pub fn g(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (x + 1.0) * (x + 1.0).ln() - x * x.ln()
    }
}

pub(crate) fn entropy_of_spectrum(vals: &[f64]) -> f64 {
    vals.iter()
        .filter(|v| **v > ZERO_EIG)
        .map(|v| eta(*v))
        .sum()
}

pub(crate) fn entropy_raw(m: &CMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&eigvals_raw(m)?))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_raw(rho.matrix()).unwrap_or(f64::NAN)
}

/// `H(ρ‖σ)`; `+∞` when the support of ρ is not inside the support of σ.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.layout() != sigma.layout() {
        return Err(Error::Layout("relative entropy of states on different layouts".into()));
    }
    let (pr, ur) = eigh_raw(rho.matrix())?;
    let (ps, us) = eigh_raw(sigma.matrix())?;
    // overlaps |⟨r_i|s_j⟩|²
    let ov = ur.adjoint() * &us;
    let mut value = 0.0;
    for (i, &p) in pr.iter().enumerate() {
        if p <= SUPPORT_TOL {
            continue;
        }
        let mut cross = 0.0;
        for (j, &q) in ps.iter().enumerate() {
            let w = ov[(i, j)].norm_sqr();
            if q <= SUPPORT_TOL {
                if w > SUPPORT_TOL {
                    return Ok(f64::INFINITY);
                }
                continue;
            }
            cross += w * q.ln();
        }
        value += p * (p.ln() - cross);
    }
    Ok(value.max(0.0))
}

/// Entropy of the marginal on `labels`; the empty set has entropy 0.
pub(crate) fn marginal_entropy(rho: &DensityMatrix, labels: &[&str]) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    let pos = rho.layout().positions(labels)?;
    if pos.len() == rho.layout().len() {
        return entropy_raw(rho.matrix());
    }
    entropy_raw(&partial_trace_raw(rho.matrix(), &rho.layout().dims(), &pos))
}

fn check_disjoint(parts: &[&[&str]]) -> Result<()> {
    let mut seen: Vec<&str> = Vec::new();
    for p in parts {
        for l in p.iter() {
            if seen.contains(l) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
            seen.push(l);
        }
    }
    Ok(())
}

/// `I(A:B) = H(A) + H(B) − H(AB)`; labels outside `A ∪ B` are traced out.
pub fn mutual_information(rho: &DensityMatrix, a: &[&str], b: &[&str]) -> Result<f64> {
    conditional_mutual_information(rho, a, b, &[])
}

/// `I(A:B|C) = H(AC) + H(BC) − H(ABC) − H(C)`; labels outside `A ∪ B ∪ C` are traced out.
pub fn conditional_mutual_information(
    rho: &DensityMatrix,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<f64> {
    check_disjoint(&[a, b, c])?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::Layout("both sides of a mutual information must be non-empty".into()));
    }
    fn cat<'a>(xs: &[&[&'a str]]) -> Vec<&'a str> {
        xs.iter().flat_map(|x| x.iter().copied()).collect()
    }
    let h_ac = marginal_entropy(rho, &cat(&[a, c]))?;
    let h_bc = marginal_entropy(rho, &cat(&[b, c]))?;
    let h_abc = marginal_entropy(rho, &cat(&[a, b, c]))?;
    let h_c = marginal_entropy(rho, c)?;
    Ok(h_ac + h_bc - h_abc - h_c)
}

/// A finite list of weighted states on one layout.
#[derive(Clone, Debug)]
pub struct Ensemble {
    items: Vec<(f64, DensityMatrix)>,
}

impl Ensemble {
    pub fn new(items: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::InvalidState("empty ensemble".into()))?;
        let layout = first.1.layout().clone();
        let mut total = 0.0;
        for (p, s) in &items {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidState(format!("probability {p} not in [0,1]")));
            }
            if *s.layout() != layout {
                return Err(Error::Layout("ensemble states on different layouts".into()));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        Ok(Ensemble { items })
    }

    pub fn items(&self) -> &[(f64, DensityMatrix)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn layout(&self) -> &SystemLayout {
        self.items[0].1.layout()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.items.iter().map(|(p, _)| *p).collect()
    }

    /// The average state `Σ p_i ρ_i`.
    pub fn average(&self) -> DensityMatrix {
        let d = self.layout().dim();
        let mut m = CMatrix::zeros(d, d);
        for (p, s) in &self.items {
            m += s.matrix() * crate::qstate::cr(*p);
        }
        DensityMatrix::from_parts(self.layout().clone(), m)
    }

    /// Applies `f` to every state, keeping the weights.
    pub fn map_states(
        &self,
        mut f: impl FnMut(&DensityMatrix) -> Result<DensityMatrix>,
    ) -> Result<Ensemble> {
        let items = self
            .items
            .iter()
            .map(|(p, s)| Ok((*p, f(s)?)))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(items)
    }
}

/// `χ = H(ρ̄) − Σ p_i H(ρ_i)`.
pub fn holevo_quantity(ens: &Ensemble) -> f64 {
    let avg = von_neumann_entropy(&ens.average());
    let parts: f64 = ens
        .items
        .iter()
        .filter(|(p, _)| *p > 0.0)
        .map(|(p, s)| p * von_neumann_entropy(s))
        .sum();
    (avg - parts).max(0.0)
}

/// `Σ p_i ρ_i ⊗ |i⟩⟨i|` with the classical register appended as the last factor.
pub fn qc_state(ens: &Ensemble, class_label: &str) -> Result<DensityMatrix> {
    let k = ens.len();
    let layout = ens
        .layout()
        .concat(&SystemLayout::single(class_label, k)?)?;
    let d = ens.layout().dim();
    let mut m = CMatrix::zeros(d * k, d * k);
    for (i, (p, s)) in ens.items.iter().enumerate() {
        for c in 0..d {
            for r in 0..d {
                m[(r * k + i, c * k + i)] = s.matrix()[(r, c)] * *p;
            }
        }
    }
    Ok(DensityMatrix::from_parts(layout, m))
}

/// `I_c(Φ,ρ) = H(Φ(ρ)) − H(Φ̂(ρ))`.
pub fn coherent_information(channel: &StinespringChannel, rho: &DensityMatrix) -> Result<f64> {
    let out = channel.apply(rho)?;
    let env = channel.complementary().apply(rho)?;
    Ok(von_neumann_entropy(&out) - von_neumann_entropy(&env))
}

/// `I(B:R)` of `Φ ⊗ Id_R` applied to a purification of ρ.
pub fn channel_mutual_information(channel: &StinespringChannel, rho: &DensityMatrix) -> Result<f64> {
    let r = fresh_label(rho.layout(), "R");
    let psi = purify(rho, &r)?;
    let out = channel.apply(&psi.to_density())?;
    let b: Vec<String> = out
        .layout()
        .labels()
        .into_iter()
        .filter(|l| *l != r)
        .map(String::from)
        .collect();
    let b: Vec<&str> = b.iter().map(String::as_str).collect();
    mutual_information(&out, &b, &[&r])
}

pub(crate) fn fresh_label(layout: &SystemLayout, base: &str) -> String {
    let mut label = base.to_string();
    let mut k = 0;
    while layout.contains(&label) {
        k += 1;
        label = format!("{base}_{k}");
    }
    label
}

/// Entropies reported in bits instead of nats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{erasure_channel, ErasureSpec, StinespringChannel};
    use crate::harness::generators::Generator;
    use crate::qstate::{cr, tensor_product, CVector, PureState};

    fn lay(f: &[(&str, usize)]) -> SystemLayout {
        SystemLayout::new(f.iter().map(|(l, d)| (l.to_string(), *d))).unwrap()
    }

    #[test]
    fn scalar_functions() {
        assert_eq!(eta(0.0), 0.0);
        assert_eq!(g(0.0), 0.0);
        assert!((h2(0.5) - 2f64.ln()).abs() < 1e-15);
        for &x in &[0.01, 0.1, 0.5, 1.0, 1.7] {
            let oracle = (1.0 + x) * h2(x / (1.0 + x));
            assert!((g(x) - oracle).abs() < 1e-13 * (1.0 + oracle));
        }
    }

    #[test]
    fn g_is_increasing_on_grid() {
        let grid: Vec<f64> = (0..=2000).map(|i| i as f64 * 1e-3).collect();
        assert!(grid.windows(2).all(|w| g(w[0]) < g(w[1])));
    }

    #[test]
    fn entropy_cases() {
        let mut gen = Generator::new(1);
        let pure = gen.pure(lay(&[("A", 3)])).to_density();
        assert!(von_neumann_entropy(&pure).abs() < 1e-10);
        let mm = DensityMatrix::maximally_mixed(lay(&[("A", 5)]));
        assert!((von_neumann_entropy(&mm) - 5f64.ln()).abs() < 1e-12);
        let d = DensityMatrix::from_diagonal(lay(&[("A", 2)]), &[0.25, 0.75]).unwrap();
        let oracle = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        assert!((von_neumann_entropy(&d) - oracle).abs() < 1e-14);
    }

    #[test]
    fn relative_entropy_cases() {
        let mut gen = Generator::new(2);
        let rho = gen.density(lay(&[("A", 3)]));
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-10);
        let p0 = DensityMatrix::basis_state(lay(&[("A", 2)]), 0).unwrap();
        let mixed = DensityMatrix::maximally_mixed(lay(&[("A", 2)]));
        assert_eq!(relative_entropy(&mixed, &p0).unwrap(), f64::INFINITY);
        let p: [f64; 3] = [0.2, 0.3, 0.5];
        let q = [0.4, 0.4, 0.2];
        let kl: f64 = p.iter().zip(q.iter()).map(|(a, b)| a * (a / b).ln()).sum();
        let r = DensityMatrix::from_diagonal(lay(&[("A", 3)]), &p).unwrap();
        let s = DensityMatrix::from_diagonal(lay(&[("A", 3)]), &q).unwrap();
        assert!((relative_entropy(&r, &s).unwrap() - kl).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_cases() {
        let mut gen = Generator::new(3);
        let ra = gen.density(lay(&[("A", 2)]));
        let rb = gen.density(lay(&[("B", 3)]));
        let prod = tensor_product(&ra, &rb).unwrap();
        assert!(mutual_information(&prod, &["A"], &["B"]).unwrap().abs() < 1e-10);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(
            lay(&[("A", 2), ("B", 2)]),
            CVector::from_vec(vec![cr(s), cr(0.0), cr(0.0), cr(s)]),
        )
        .unwrap()
        .to_density();
        let i = mutual_information(&bell, &["A"], &["B"]).unwrap();
        assert!((i - 2.0 * 2f64.ln()).abs() < 1e-10);
        // I(A:B) = H(ρ_AB ‖ ρ_A ⊗ ρ_B)
        let rho = gen.density(lay(&[("A", 2), ("B", 2)]));
        let prod = tensor_product(
            &rho.partial_trace(&["A"]).unwrap(),
            &rho.partial_trace(&["B"]).unwrap(),
        )
        .unwrap();
        let rel = relative_entropy(&rho, &prod).unwrap();
        assert!((mutual_information(&rho, &["A"], &["B"]).unwrap() - rel).abs() < 1e-9);
    }

    #[test]
    fn cmi_cases() {
        let mut gen = Generator::new(4);
        let rho = tensor_product(
            &tensor_product(&gen.density(lay(&[("A", 2)])), &gen.density(lay(&[("B", 2)])))
                .unwrap(),
            &gen.density(lay(&[("C", 2)])),
        )
        .unwrap();
        assert!(conditional_mutual_information(&rho, &["A"], &["B"], &["C"])
            .unwrap()
            .abs()
            < 1e-10);
        let rho = gen.density(lay(&[("A", 2), ("B", 2), ("C", 2)]));
        let via_c = conditional_mutual_information(&rho, &["A"], &["B"], &[]).unwrap();
        let mi = mutual_information(&rho, &["A"], &["B"]).unwrap();
        assert!((via_c - mi).abs() < 1e-14);
    }

    #[test]
    fn holevo_and_qc_cases() {
        let l = lay(&[("A", 3)]);
        let single = Ensemble::new(vec![(1.0, Generator::new(5).density(l.clone()))]).unwrap();
        assert!(holevo_quantity(&single).abs() < 1e-10);
        let items = (0..3)
            .map(|i| (1.0 / 3.0, DensityMatrix::basis_state(l.clone(), i).unwrap()))
            .collect();
        let ortho = Ensemble::new(items).unwrap();
        assert!((holevo_quantity(&ortho) - 3f64.ln()).abs() < 1e-10);

        let rho = Generator::new(6).density(l.clone());
        let one = Ensemble::new(vec![(1.0, rho.clone())]).unwrap();
        let q = qc_state(&one, "X").unwrap();
        let want = tensor_product(&rho, &DensityMatrix::basis_state(lay(&[("X", 1)]), 0).unwrap())
            .unwrap();
        assert!((q.matrix() - want.matrix()).norm() < 1e-15);

        let ens = Generator::new(7).ensemble(l, 4);
        let q = qc_state(&ens, "X").unwrap();
        let px = q.partial_trace(&["X"]).unwrap();
        let probs = ens.probabilities();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { probs[i] } else { 0.0 };
                assert!((px.matrix()[(i, j)].re - want).abs() < 1e-14);
                assert!(px.matrix()[(i, j)].im.abs() < 1e-14);
            }
        }
        let i = mutual_information(&q, &["A"], &["X"]).unwrap();
        assert!((i - holevo_quantity(&ens)).abs() < 1e-9);
    }

    #[test]
    fn coherent_information_cases() {
        let l = lay(&[("A", 3)]);
        let id = StinespringChannel::identity(3, "A", "B").unwrap();
        let rho = Generator::new(8).density(l.clone());
        let ic = coherent_information(&id, &rho).unwrap();
        assert!((ic - von_neumann_entropy(&rho)).abs() < 1e-10);

        let er = erasure_channel(&ErasureSpec { d: 2, p: 0.5 }).unwrap();
        let mm = DensityMatrix::maximally_mixed(lay(&[("A", 2)]));
        assert!(coherent_information(&er, &mm).unwrap().abs() < 1e-10);

        let ch = Generator::new(9).channel(3, 2, 3);
        let rho = Generator::new(10).density(l);
        let ic = coherent_information(&ch, &rho).unwrap();
        let i = channel_mutual_information(&ch, &rho).unwrap();
        assert!((ic - (i - von_neumann_entropy(&rho))).abs() < 1e-9);
    }

    #[test]
    fn channel_mutual_information_cases() {
        let id = StinespringChannel::identity(3, "A", "B").unwrap();
        let mm = DensityMatrix::maximally_mixed(lay(&[("A", 3)]));
        let i = channel_mutual_information(&id, &mm).unwrap();
        assert!((i - 2.0 * 3f64.ln()).abs() < 1e-9);

        let fixed = StinespringChannel::replacement(3, &[0.3, 0.7], "A", "B").unwrap();
        let rho = Generator::new(11).density(lay(&[("A", 3)]));
        assert!(channel_mutual_information(&fixed, &rho).unwrap().abs() < 1e-9);

        // A second purification: rotate the reference by a random unitary.
        let ch = Generator::new(12).channel(2, 2, 2);
        let rho = Generator::new(13).density(lay(&[("A", 2)]));
        let psi = purify(&rho, "R").unwrap();
        let u = Generator::new(14).channel(2, 2, 1);
        let rot = StinespringChannel::new(u.isometry().clone(), 2, 2, 1, "R", "R", "E_u").unwrap();
        let psi2 = rot.apply(&psi.to_density()).unwrap();
        let out = ch.apply(&psi2).unwrap();
        let i2 = mutual_information(&out, &["B"], &["R"]).unwrap();
        let i1 = channel_mutual_information(&ch, &rho).unwrap();
        assert!((i1 - i2).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn mi_upper_bound(seed in any::<u64>()) {
                let rho = Generator::new(seed).density_rank(lay(&[("A", 2), ("B", 3)]), 1 + (seed % 6) as usize);
                let i = mutual_information(&rho, &["A"], &["B"]).unwrap();
                let ha = marginal_entropy(&rho, &["A"]).unwrap();
                let hb = marginal_entropy(&rho, &["B"]).unwrap();
                prop_assert!(i >= -1e-9);
                prop_assert!(i <= 2.0 * ha.min(hb) + 1e-9);
            }

            #[test]
            fn cmi_upper_bound(seed in any::<u64>()) {
                let rho = Generator::new(seed).density_rank(lay(&[("A", 2), ("B", 2), ("C", 2)]), 1 + (seed % 8) as usize);
                let i = conditional_mutual_information(&rho, &["A"], &["B"], &["C"]).unwrap();
                let m = [
                    marginal_entropy(&rho, &["A"]).unwrap(),
                    marginal_entropy(&rho, &["B"]).unwrap(),
                    marginal_entropy(&rho, &["A", "C"]).unwrap(),
                    marginal_entropy(&rho, &["B", "C"]).unwrap(),
                ];
                prop_assert!(i >= -1e-9);
                prop_assert!(i <= 2.0 * m.iter().copied().fold(f64::INFINITY, f64::min) + 1e-9);
            }

            #[test]
            fn chain_rule(seed in any::<u64>()) {
                let rho = Generator::new(seed).density(lay(&[("X", 2), ("Y", 2), ("Z", 2), ("C", 2)]));
                let lhs = conditional_mutual_information(&rho, &["X"], &["Y", "Z"], &["C"]).unwrap();
                let a = conditional_mutual_information(&rho, &["X"], &["Y"], &["C"]).unwrap();
                let b = conditional_mutual_information(&rho, &["X"], &["Z"], &["Y", "C"]).unwrap();
                prop_assert!((lhs - a - b).abs() < 1e-8);
            }

            #[test]
            fn almost_affinity(seed in any::<u64>(), k in 1usize..10) {
                let p = k as f64 / 10.0;
                let mut gen = Generator::new(seed);
                let l = lay(&[("A", 2), ("B", 2), ("C", 2)]);
                let (r, s) = (gen.density(l.clone()), gen.density(l));
                let cmi = |x: &DensityMatrix| conditional_mutual_information(x, &["A"], &["B"], &["C"]).unwrap();
                let mix = r.mix(&s, p).unwrap();
                let gap = (p * cmi(&r) + (1.0 - p) * cmi(&s) - cmi(&mix)).abs();
                prop_assert!(gap <= h2(p) + 1e-9);
            }

            #[test]
            fn separable_qc_bound(seed in any::<u64>()) {
                let ens = Generator::new(seed).ensemble(lay(&[("A", 3)]), 2 + (seed % 4) as usize);
                let q = qc_state(&ens, "B").unwrap();
                let i = mutual_information(&q, &["A"], &["B"]).unwrap();
                let ha = marginal_entropy(&q, &["A"]).unwrap();
                let hb = marginal_entropy(&q, &["B"]).unwrap();
                prop_assert!(i <= ha.min(hb) + 1e-9);
            }

            #[test]
            fn concave_perspective_monotone(x in 1e-3f64..5.0, dy in 1e-3f64..5.0, z in 0.0f64..10.0) {
                let y = x + dy;
                prop_assert!(x * g(z / x) <= y * g(z / y) + 1e-12);
                prop_assert!(x * (z / x).sqrt() <= y * (z / y).sqrt() + 1e-12);
            }

            #[test]
            fn log_profile_increasing(a in 1e-3f64..50.0, b in std::f64::consts::E / 2.0..20.0) {
                let f = |x: f64| x * (a / (x * x) + b).ln();
                let grid: Vec<f64> = (1..=400).map(|i| i as f64 * 0.05).collect();
                prop_assert!(grid.windows(2).all(|w| f(w[0]) <= f(w[1]) + 1e-12));
            }
        }
    }
}
