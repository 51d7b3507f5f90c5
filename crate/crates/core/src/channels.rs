//! Channels in Stinespring form `Φ(ρ) = Tr_E VρV†`.
//!
//! Isometry rows are indexed `b·d_E + e`, i.e. the output factor is the more
//! significant one.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{cr, embed, CMatrix, DensityMatrix, SystemLayout};

const ISOMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct StinespringChannel {
    v: CMatrix,
    d_a: usize,
    d_b: usize,
    d_e: usize,
    input_label: String,
    output_label: String,
    env_label: String,
}

/// Portable JSON form: row-major isometry with interleaved real and imaginary parts.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChannelDocument {
    pub d_a: usize,
    pub d_b: usize,
    pub d_e: usize,
    pub input_label: String,
    pub output_label: String,
    pub env_label: String,
    pub isometry: Vec<f64>,
}

pub(crate) fn isometry_deviation(v: &CMatrix) -> f64 {
    let g = v.adjoint() * v;
    let n = g.nrows();
    let mut dev: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - cr(target)).norm());
        }
    }
    dev
}

impl StinespringChannel {
    pub fn new(
        v: CMatrix,
        d_a: usize,
        d_b: usize,
        d_e: usize,
        input_label: impl Into<String>,
        output_label: impl Into<String>,
        env_label: impl Into<String>,
    ) -> Result<Self> {
        if v.nrows() != d_b * d_e || v.ncols() != d_a || d_a == 0 || d_b == 0 || d_e == 0 {
            return Err(Error::Dimension(format!(
                "isometry is {}x{}, expected {}x{d_a}",
                v.nrows(),
                v.ncols(),
                d_b * d_e
            )));
        }
        let (input_label, output_label, env_label) =
            (input_label.into(), output_label.into(), env_label.into());
        if output_label == env_label {
            return Err(Error::DuplicateLabel(env_label));
        }
        let dev = isometry_deviation(&v);
        if dev > ISOMETRY_TOL {
            return Err(Error::NotIsometry(dev));
        }
        Ok(StinespringChannel {
            v,
            d_a,
            d_b,
            d_e,
            input_label,
            output_label,
            env_label,
        })
    }

    /// The identity channel with a one-dimensional environment.
    pub fn identity(d: usize, input_label: &str, output_label: &str) -> Result<Self> {
        Self::new(
            CMatrix::identity(d, d),
            d,
            d,
            1,
            input_label,
            output_label,
            "E",
        )
    }

    /// `ρ ↦ Tr(ρ)·diag(probs)`.
    pub fn replacement(d_a: usize, probs: &[f64], input_label: &str, output_label: &str) -> Result<Self> {
        let d_b = probs.len();
        let d_e = d_b * d_a;
        let mut v = CMatrix::zeros(d_b * d_e, d_a);
        for (b, q) in probs.iter().enumerate() {
            if *q < 0.0 {
                return Err(Error::InvalidState("negative probability".into()));
            }
            for a in 0..d_a {
                v[(b * d_e + b * d_a + a, a)] = cr(q.sqrt());
            }
        }
        Self::new(v, d_a, d_b, d_e, input_label, output_label, "E")
    }

    pub fn with_labels(&self, input: &str, output: &str, env: &str) -> Result<Self> {
        if output == env {
            return Err(Error::DuplicateLabel(env.to_string()));
        }
        let mut c = self.clone();
        c.input_label = input.to_string();
        c.output_label = output.to_string();
        c.env_label = env.to_string();
        Ok(c)
    }

    pub fn isometry(&self) -> &CMatrix {
        &self.v
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn input_label(&self) -> &str {
        &self.input_label
    }

    pub fn output_label(&self) -> &str {
        &self.output_label
    }

    pub fn env_label(&self) -> &str {
        &self.env_label
    }

    /// Kraus operators `K_e = (I ⊗ ⟨e|) V`.
    pub fn kraus(&self) -> Vec<CMatrix> {
        (0..self.d_e)
            .map(|e| CMatrix::from_fn(self.d_b, self.d_a, |b, a| self.v[(b * self.d_e + e, a)]))
            .collect()
    }

    /// Block `V_b = (⟨b| ⊗ I) V`, a `d_E × d_A` matrix.
    pub(crate) fn block(&self, b: usize) -> CMatrix {
        self.v.rows(b * self.d_e, self.d_e).into_owned()
    }

    /// Output of `Φ ⊗ Id` on a raw matrix whose only factor is the input.
    pub(crate) fn apply_raw(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d_b, self.d_b);
        for k in self.kraus() {
            out += &k * rho * k.adjoint();
        }
        out
    }

    /// Dual map `Φ*(Z) = V†(Z ⊗ I_E)V` on the output space.
    pub(crate) fn dual_raw(&self, z: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d_a, self.d_a);
        for k in self.kraus() {
            out += k.adjoint() * z * &k;
        }
        out
    }

    /// Applies `Φ ⊗ Id` to a state whose layout contains the input label; the
    /// input factor is replaced in place by the output factor.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = rho.layout();
        let p = layout
            .position(&self.input_label)
            .ok_or_else(|| Error::UnknownLabel(self.input_label.clone()))?;
        let dims = layout.dims();
        if dims[p] != self.d_a {
            return Err(Error::Dimension(format!(
                "channel input has dimension {}, state factor `{}` has {}",
                self.d_a, self.input_label, dims[p]
            )));
        }
        let mut factors: Vec<(String, usize)> = layout.factors().to_vec();
        factors[p] = (self.output_label.clone(), self.d_b);
        let out_layout = SystemLayout::new(factors)?;
        let pre: usize = dims[..p].iter().product();
        let post: usize = dims[p + 1..].iter().product();
        let m = if pre == 1 && post == 1 {
            self.apply_raw(rho.matrix())
        } else {
            let d = out_layout.dim();
            let mut out = CMatrix::zeros(d, d);
            for k in self.kraus() {
                let big = embed(&k, pre, post);
                out += &big * rho.matrix() * big.adjoint();
            }
            out
        };
        Ok(DensityMatrix::from_parts(out_layout, m))
    }

    /// Applies the isometry itself, keeping the environment as a factor right after the output.
    pub fn apply_isometry(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let layout = rho.layout();
        let p = layout
            .position(&self.input_label)
            .ok_or_else(|| Error::UnknownLabel(self.input_label.clone()))?;
        let dims = layout.dims();
        if dims[p] != self.d_a {
            return Err(Error::Dimension("channel input dimension mismatch".into()));
        }
        let mut factors: Vec<(String, usize)> = layout.factors().to_vec();
        factors[p] = (self.output_label.clone(), self.d_b);
        factors.insert(p + 1, (self.env_label.clone(), self.d_e));
        let out_layout = SystemLayout::new(factors)?;
        let pre: usize = dims[..p].iter().product();
        let post: usize = dims[p + 1..].iter().product();
        let big = embed(&self.v, pre, post);
        Ok(DensityMatrix::from_parts(
            out_layout,
            &big * rho.matrix() * big.adjoint(),
        ))
    }

    /// Same isometry with output and environment exchanged.
    pub fn complementary(&self) -> StinespringChannel {
        let (db, de) = (self.d_b, self.d_e);
        let v = CMatrix::from_fn(db * de, self.d_a, |r, a| {
            let (e, b) = (r / db, r % db);
            self.v[(b * de + e, a)]
        });
        StinespringChannel {
            v,
            d_a: self.d_a,
            d_b: de,
            d_e: db,
            input_label: self.input_label.clone(),
            output_label: self.env_label.clone(),
            env_label: self.output_label.clone(),
        }
    }

    pub fn to_document(&self) -> ChannelDocument {
        let mut isometry = Vec::with_capacity(2 * self.v.len());
        for r in 0..self.v.nrows() {
            for c in 0..self.v.ncols() {
                isometry.push(self.v[(r, c)].re);
                isometry.push(self.v[(r, c)].im);
            }
        }
        ChannelDocument {
            d_a: self.d_a,
            d_b: self.d_b,
            d_e: self.d_e,
            input_label: self.input_label.clone(),
            output_label: self.output_label.clone(),
            env_label: self.env_label.clone(),
            isometry,
        }
    }

    pub fn from_document(doc: &ChannelDocument) -> Result<Self> {
        let (rows, cols) = (doc.d_b * doc.d_e, doc.d_a);
        if doc.isometry.len() != 2 * rows * cols {
            return Err(Error::Dimension(format!(
                "isometry has {} numbers, expected {}",
                doc.isometry.len(),
                2 * rows * cols
            )));
        }
        let v = CMatrix::from_fn(rows, cols, |r, c| {
            let k = 2 * (r * cols + c);
            num_complex::Complex64::new(doc.isometry[k], doc.isometry[k + 1])
        });
        Self::new(
            v,
            doc.d_a,
            doc.d_b,
            doc.d_e,
            doc.input_label.clone(),
            doc.output_label.clone(),
            doc.env_label.clone(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_document(&serde_json::from_str(s)?)
    }
}

/// Erasure channel parameters; output and environment have dimension `d + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErasureSpec {
    pub d: usize,
    pub p: f64,
}

/// `V_p|φ⟩ = √(1−p)|φ⟩⊗|ψ⟩ + √p|ψ⟩⊗|φ⟩` with `|ψ⟩` the last basis vector.
pub fn erasure_channel(spec: &ErasureSpec) -> Result<StinespringChannel> {
    let ErasureSpec { d, p } = *spec;
    if d < 2 {
        return Err(Error::Domain(format!("erasure channel needs d >= 2, got {d}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("erasure probability {p} not in [0,1]")));
    }
    let n = d + 1;
    let mut v = CMatrix::zeros(n * n, d);
    for a in 0..d {
        v[(a * n + d, a)] += cr((1.0 - p).sqrt());
        v[(d * n + a, a)] += cr(p.sqrt());
    }
    StinespringChannel::new(v, d, n, n, "A", "B", "E")
}

pub(crate) fn random_isometry<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let gauss = CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        num_complex::Complex64::new(re * s, im * s)
    });
    orthonormalize(gauss)
}

/// Q factor of a thin QR with the phases of `diag(R)` absorbed, so Gaussian input gives Haar output.
pub(crate) fn orthonormalize(m: CMatrix) -> CMatrix {
    let cols = m.ncols();
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random isometry channel, deterministic in `seed`; labels `A`, `B`, `E`.
pub fn random_channel(d_a: usize, d_b: usize, d_e: usize, seed: u64) -> Result<StinespringChannel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_channel_with(&mut rng, d_a, d_b, d_e)
}

pub(crate) fn random_channel_with<R: Rng>(
    rng: &mut R,
    d_a: usize,
    d_b: usize,
    d_e: usize,
) -> Result<StinespringChannel> {
    if d_b * d_e < d_a {
        return Err(Error::Dimension(format!(
            "no isometry from dimension {d_a} into {d_b}x{d_e}"
        )));
    }
    let v = random_isometry(rng, d_b * d_e, d_a);
    StinespringChannel::new(v, d_a, d_b, d_e, "A", "B", "E")
}

/// Applies `Φ^{⊗n} ⊗ Id` where copy `k` (1-based) acts on `{input}{k}` and
/// produces `{output}{k}`. With `n = 1` the bare input label is also accepted.
pub fn tensor_power_apply(
    channel: &StinespringChannel,
    n: usize,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::Domain("tensor power needs n >= 1".into()));
    }
    let qubits = n as f64 * ((channel.d_b * channel.d_e) as f64).log2();
    if qubits > 24.0 {
        return Err(Error::SizeGuard(format!(
            "n·log2(d_B·d_E) = {qubits:.1} exceeds the dense-simulation guard"
        )));
    }
    if n == 1 && rho.layout().contains(&channel.input_label) {
        return channel.apply(rho);
    }
    let mut state = rho.clone();
    for k in 1..=n {
        let copy = channel.with_labels(
            &format!("{}{k}", channel.input_label),
            &format!("{}{k}", channel.output_label),
            &format!("{}{k}", channel.env_label),
        )?;
        state = copy.apply(&state)?;
    }
    Ok(state)
}

/// Pads both environments to `d_E1 + d_E2` and rotates the second one by the
/// unitary `W` maximizing `Re Tr[V_φ'† (I⊗W) V_ψ']`, which minimizes the
/// Frobenius distance between the two isometries.
pub fn common_stinespring(
    phi: &StinespringChannel,
    psi: &StinespringChannel,
) -> Result<(CMatrix, CMatrix)> {
    if phi.d_a != psi.d_a || phi.d_b != psi.d_b {
        return Err(Error::Dimension(
            "common Stinespring representation needs equal input and output dimensions".into(),
        ));
    }
    let (da, db) = (phi.d_a, phi.d_b);
    let m = phi.d_e + psi.d_e;
    let mut v1 = CMatrix::zeros(db * m, da);
    let mut v2 = CMatrix::zeros(db * m, da);
    for b in 0..db {
        for a in 0..da {
            for e in 0..phi.d_e {
                v1[(b * m + e, a)] = phi.v[(b * phi.d_e + e, a)];
            }
            for e in 0..psi.d_e {
                v2[(b * m + phi.d_e + e, a)] = psi.v[(b * psi.d_e + e, a)];
            }
        }
    }
    let mut x = CMatrix::zeros(m, m);
    for b in 0..db {
        let b1 = v1.rows(b * m, m);
        let b2 = v2.rows(b * m, m);
        x += b2 * b1.adjoint();
    }
    let svd = nalgebra::SVD::try_new(x, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let w = svd.v_t.unwrap().adjoint() * svd.u.unwrap().adjoint();
    let v2 = embed(&w, db, 1) * v2;
    Ok((v1, v2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropic::von_neumann_entropy;
    use crate::harness::generators::Generator;
    use crate::metrics::{channel_bures_bracket, BracketBudget};
    use crate::qstate::{operator_norm, tensor_product, trace_norm};

    fn lay(f: &[(&str, usize)]) -> SystemLayout {
        SystemLayout::new(f.iter().map(|(l, d)| (l.to_string(), *d))).unwrap()
    }

    #[test]
    fn identity_channel_is_transparent() {
        let rho = Generator::new(1).density(lay(&[("A", 3), ("C", 2)]));
        let id = StinespringChannel::identity(3, "A", "A").unwrap();
        let out = id.apply(&rho).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-14);
    }

    #[test]
    fn erasure_output_blocks() {
        let mut g = Generator::new(2);
        for &p in &[0.0, 0.3, 0.5, 1.0] {
            for &d in &[2, 3] {
                let ch = erasure_channel(&ErasureSpec { d, p }).unwrap();
                let rho = g.density(lay(&[("A", d)]));
                let out = ch.apply(&rho).unwrap();
                for i in 0..=d {
                    for j in 0..=d {
                        let want = if i < d && j < d {
                            rho.matrix()[(i, j)] * (1.0 - p)
                        } else if i == d && j == d {
                            cr(p)
                        } else {
                            cr(0.0)
                        };
                        assert!((out.matrix()[(i, j)] - want).norm() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn erasure_norm_closed_form() {
        for &x in &[0.01, 0.05, 0.1] {
            let a = erasure_channel(&ErasureSpec { d: 3, p: 0.5 - x }).unwrap();
            let b = erasure_channel(&ErasureSpec { d: 3, p: 0.5 }).unwrap();
            let n = operator_norm(&(a.isometry() - b.isometry()));
            let f = (2.0 - (1.0 - 2.0 * x).sqrt() - (1.0 + 2.0 * x).sqrt()).sqrt();
            assert!((n - f).abs() <= 1e-10, "x={x}: {n} vs {f}");
        }
    }

    #[test]
    fn random_channel_properties() {
        let ch = random_channel(3, 2, 2, 9).unwrap();
        assert!(isometry_deviation(ch.isometry()) <= 1e-10);
        let again = random_channel(3, 2, 2, 9).unwrap();
        assert_eq!(ch.isometry(), again.isometry());
        let out = ch.apply(&DensityMatrix::maximally_mixed(lay(&[("A", 3)]))).unwrap();
        assert!((out.trace() - 1.0).abs() <= 1e-10);
        assert!(random_channel(5, 2, 2, 1).is_err());
    }

    #[test]
    fn complementary_round_trip_and_erasure_symmetry() {
        let mut g = Generator::new(3);
        let ch = g.channel(2, 3, 2);
        let cc = ch.complementary().complementary();
        let rho = g.density(lay(&[("A", 2)]));
        assert!((cc.apply(&rho).unwrap().matrix() - ch.apply(&rho).unwrap().matrix()).norm() < 1e-12);

        let p = 0.3;
        let er = erasure_channel(&ErasureSpec { d: 2, p }).unwrap();
        let flip = erasure_channel(&ErasureSpec { d: 2, p: 1.0 - p }).unwrap();
        for _ in 0..5 {
            let rho = g.density(lay(&[("A", 2)]));
            let a = er.complementary().apply(&rho).unwrap();
            let b = flip.apply(&rho).unwrap().relabel("B", "E").unwrap();
            assert!((a.matrix() - b.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn coherent_information_flips_sign_under_complement() {
        let mut g = Generator::new(4);
        let ch = g.channel(2, 2, 3);
        let rho = g.density(lay(&[("A", 2)]));
        let ic = crate::entropic::coherent_information(&ch, &rho).unwrap();
        let icc = crate::entropic::coherent_information(&ch.complementary(), &rho).unwrap();
        assert!((ic + icc).abs() < 1e-12);
    }

    #[test]
    fn pure_inputs_give_equal_output_and_environment_entropies() {
        let mut g = Generator::new(5);
        for _ in 0..20 {
            let ch = g.channel(3, 2, 4);
            let rho = g.pure(lay(&[("A", 3)])).to_density();
            let hb = von_neumann_entropy(&ch.apply(&rho).unwrap());
            let he = von_neumann_entropy(&ch.complementary().apply(&rho).unwrap());
            assert!((hb - he).abs() < 1e-9);
        }
    }

    #[test]
    fn apply_preserves_trace_and_positivity() {
        let mut g = Generator::new(6);
        for i in 0..500 {
            let (da, db, de) = (2 + i % 2, 2 + (i / 2) % 2, 1 + (i / 4) % 3);
            if db * de < da {
                continue;
            }
            let ch = g.channel(da, db, de);
            let rho = g.density(lay(&[("C", 2), ("A", da)]));
            let out = ch.apply(&rho).unwrap();
            assert!((out.trace() - 1.0).abs() < 1e-9);
            assert!(out.eigenvalues().unwrap()[0] > -1e-9);
        }
    }

    #[test]
    fn acts_as_channel_tensor_identity() {
        // (Φ ⊗ Id)(ρ_A ⊗ ρ_C) = Φ(ρ_A) ⊗ ρ_C regardless of factor position.
        let mut g = Generator::new(7);
        let ch = g.channel(2, 3, 2);
        let (ra, rc) = (g.density(lay(&[("A", 2)])), g.density(lay(&[("C", 2)])));
        let out = ch.apply(&tensor_product(&rc, &ra).unwrap()).unwrap();
        let want = tensor_product(&rc, &ch.apply(&ra).unwrap()).unwrap();
        assert!((out.matrix() - want.matrix()).norm() < 1e-12);
        assert_eq!(out.layout().labels(), vec!["C", "B"]);
    }

    #[test]
    fn kraus_and_isometry_forms_agree() {
        let mut g = Generator::new(8);
        let ch = g.channel(2, 2, 3);
        let rho = g.density(lay(&[("A", 2)]));
        let full = ch.apply_isometry(&rho).unwrap();
        let traced = full.partial_trace(&["B"]).unwrap();
        assert!((traced.matrix() - ch.apply(&rho).unwrap().matrix()).norm() < 1e-12);
        let env = full.partial_trace(&["E"]).unwrap();
        assert!((env.matrix() - ch.complementary().apply(&rho).unwrap().matrix()).norm() < 1e-12);
    }

    #[test]
    fn tensor_power_cases() {
        let mut g = Generator::new(9);
        let ch = g.channel(2, 2, 2);
        let rho = g.density(lay(&[("A", 2), ("D", 2)]));
        let a = tensor_power_apply(&ch, 1, &rho).unwrap();
        assert!((a.matrix() - ch.apply(&rho).unwrap().matrix()).norm() < 1e-14);

        let r1 = g.density(lay(&[("A1", 2)]));
        let r2 = g.density(lay(&[("A2", 2)]));
        let out = tensor_power_apply(&ch, 2, &tensor_product(&r1, &r2).unwrap()).unwrap();
        let c1 = ch.with_labels("A1", "B1", "E1").unwrap();
        let c2 = ch.with_labels("A2", "B2", "E2").unwrap();
        let want = tensor_product(&c1.apply(&r1).unwrap(), &c2.apply(&r2).unwrap()).unwrap();
        assert!((out.matrix() - want.matrix()).norm() < 1e-12);

        // I(B²:D²) of Φ^{⊗2} on ρ_AD^{⊗2} is twice the single-copy value.
        let one = ch.apply(&rho).unwrap();
        let i1 = crate::entropic::mutual_information(&one, &["B"], &["D"]).unwrap();
        let r1 = rho.relabel("A", "A1").unwrap().relabel("D", "D1").unwrap();
        let r2 = rho.relabel("A", "A2").unwrap().relabel("D", "D2").unwrap();
        let two = tensor_power_apply(&ch, 2, &tensor_product(&r1, &r2).unwrap()).unwrap();
        let i2 = crate::entropic::mutual_information(&two, &["B1", "B2"], &["D1", "D2"]).unwrap();
        assert!((i2 - 2.0 * i1).abs() < 1e-9);

        let big = g.channel(2, 8, 8);
        let r = g.density(lay(&[("A1", 2), ("A2", 2), ("A3", 2), ("A4", 2), ("A5", 2)]));
        assert!(matches!(tensor_power_apply(&big, 5, &r), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn common_representation_reproduces_channels() {
        let mut g = Generator::new(10);
        let phi = g.channel(2, 2, 2);
        let psi = g.channel(2, 2, 3);
        let (v1, v2) = common_stinespring(&phi, &psi).unwrap();
        let m = 5;
        let c1 = StinespringChannel::new(v1.clone(), 2, 2, m, "A", "B", "E").unwrap();
        let c2 = StinespringChannel::new(v2.clone(), 2, 2, m, "A", "B", "E").unwrap();
        for _ in 0..5 {
            let rho = g.density(lay(&[("A", 2)]));
            assert!((c1.apply(&rho).unwrap().matrix() - phi.apply(&rho).unwrap().matrix()).norm() < 1e-10);
            assert!((c2.apply(&rho).unwrap().matrix() - psi.apply(&rho).unwrap().matrix()).norm() < 1e-10);
        }
        let (a, b) = common_stinespring(&phi, &phi).unwrap();
        assert!(operator_norm(&(a - b)) < 1e-9);
    }

    #[test]
    fn common_representation_dominates_bures_lower_bound() {
        let mut g = Generator::new(11);
        for _ in 0..5 {
            let phi = g.channel(2, 2, 2);
            let psi = g.channel(2, 2, 2);
            let (v1, v2) = common_stinespring(&phi, &psi).unwrap();
            let br = channel_bures_bracket(&phi, &psi, None, &BracketBudget::quick()).unwrap();
            assert!(operator_norm(&(v1 - v2)) >= br.lower - 1e-9);
        }
    }

    #[test]
    fn json_round_trip() {
        let ch = random_channel(2, 3, 2, 4).unwrap();
        let back = StinespringChannel::from_json(&ch.to_json().unwrap()).unwrap();
        assert_eq!(back, ch);
        let rho = Generator::new(1).density(lay(&[("A", 2)]));
        assert!(trace_norm(&(back.apply(&rho).unwrap().matrix() - ch.apply(&rho).unwrap().matrix())) == 0.0);
    }
}
