//! Dense states and operators over labeled tensor-product layouts.
//!
//! Factors are ordered as listed in the [`SystemLayout`]; basis indices are
//! lexicographic with the first factor most significant, matching
//! `nalgebra`'s Kronecker product.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest total dimension accepted for dense simulation.
pub const MAX_DIM: usize = 4096;

const HERMITIAN_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-10;
const PURE_NORM_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemLayout {
    factors: Vec<(String, usize)>,
}

impl SystemLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> =
            factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        if factors.is_empty() {
            return Err(Error::Layout("a layout needs at least one factor".into()));
        }
        let mut total: usize = 1;
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::Layout(format!("factor `{label}` has dimension 0")));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
            total = total
                .checked_mul(*dim)
                .filter(|t| *t <= MAX_DIM)
                .ok_or_else(|| Error::SizeGuard(format!("total dimension exceeds {MAX_DIM}")))?;
        }
        Ok(SystemLayout { factors })
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label.into(), dim)])
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|(_, d)| *d).collect()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| *d).product()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|(l, _)| l == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|i| self.factors[i].1)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Positions of `labels`, sorted into layout order.
    pub(crate) fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let mut pos = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self
                .position(l)
                .ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            if pos.contains(&p) {
                return Err(Error::DuplicateLabel(l.to_string()));
            }
            pos.push(p);
        }
        pos.sort_unstable();
        Ok(pos)
    }

    pub fn concat(&self, other: &SystemLayout) -> Result<Self> {
        Self::new(self.factors.iter().chain(other.factors.iter()).cloned())
    }

    pub fn sub_layout(&self, labels: &[&str]) -> Result<Self> {
        let pos = self.positions(labels)?;
        Self::new(pos.iter().map(|&p| self.factors[p].clone()))
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<Self> {
        let p = self
            .position(from)
            .ok_or_else(|| Error::UnknownLabel(from.to_string()))?;
        let mut factors = self.factors.clone();
        factors[p].0 = to.to_string();
        Self::new(factors)
    }

    /// Same factors in the order given by `labels` (which must list every label once).
    pub fn reordered(&self, labels: &[&str]) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Layout("reordering must list every label".into()));
        }
        let mut factors = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self
                .position(l)
                .ok_or_else(|| Error::UnknownLabel(l.to_string()))?;
            factors.push(self.factors[p].clone());
        }
        Self::new(factors)
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Partial trace of a raw operator; `keep` holds factor positions in increasing order.
pub(crate) fn partial_trace_raw(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    let st = strides(dims);
    let dk: usize = keep.iter().map(|&i| dims[i]).product();
    let dt = total / dk;
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let kst = strides(&keep.iter().map(|&i| dims[i]).collect::<Vec<_>>());
    let tst = strides(&traced.iter().map(|&i| dims[i]).collect::<Vec<_>>());
    let mut map = vec![0usize; total];
    for full in 0..total {
        let (mut k, mut t) = (0, 0);
        for (j, &p) in keep.iter().enumerate() {
            k += (full / st[p]) % dims[p] * kst[j];
        }
        for (j, &p) in traced.iter().enumerate() {
            t += (full / st[p]) % dims[p] * tst[j];
        }
        map[k * dt + t] = full;
    }
    let mut out = CMatrix::zeros(dk, dk);
    for kc in 0..dk {
        for kr in 0..dk {
            let mut s = Complex64::new(0.0, 0.0);
            for t in 0..dt {
                s += m[(map[kr * dt + t], map[kc * dt + t])];
            }
            out[(kr, kc)] = s;
        }
    }
    out
}

/// Index permutation taking old basis indices to the basis with factors in `order`.
fn permutation(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let st = strides(dims);
    let new_dims: Vec<usize> = order.iter().map(|&p| dims[p]).collect();
    let nst = strides(&new_dims);
    (0..total)
        .map(|old| {
            order
                .iter()
                .enumerate()
                .map(|(j, &p)| (old / st[p]) % dims[p] * nst[j])
                .sum()
        })
        .collect()
}

pub(crate) fn permute_raw(m: &CMatrix, dims: &[usize], order: &[usize]) -> CMatrix {
    let perm = permutation(dims, order);
    let n = perm.len();
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(perm[i], perm[j])] = m[(i, j)];
        }
    }
    out
}

pub(crate) fn permute_vec_raw(v: &CVector, dims: &[usize], order: &[usize]) -> CVector {
    let perm = permutation(dims, order);
    let mut out = CVector::zeros(v.len());
    for (i, p) in perm.iter().enumerate() {
        out[*p] = v[i];
    }
    out
}

/// `I_pre ⊗ op ⊗ I_post`.
pub(crate) fn embed(op: &CMatrix, pre: usize, post: usize) -> CMatrix {
    let mut out = op.clone();
    if pre > 1 {
        out = CMatrix::identity(pre, pre).kronecker(&out);
    }
    if post > 1 {
        out = out.kronecker(&CMatrix::identity(post, post));
    }
    out
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * cr(0.5)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..=j {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Hermitian eigendecomposition of a raw matrix, eigenvalues ascending.
pub(crate) fn eigh_raw(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    let h = hermitian_part(m);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    Ok((vals, vecs))
}

pub(crate) fn eigvals_raw(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.nrows();
    let h = hermitian_part(m);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 1000 * n.max(1))
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub(crate) fn spectral_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let (vals, vecs) = eigh_raw(m)?;
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let fv = f(*v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    Ok(scaled * vecs.adjoint())
}

pub(crate) fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// A Hermitian operator on a labeled layout.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    layout: SystemLayout,
    mat: CMatrix,
}

impl HermitianOperator {
    /// Symmetrizes `mat` as `(M + M†)/2`; rejects matrices that are far from Hermitian.
    pub fn new(layout: SystemLayout, mat: CMatrix) -> Result<Self> {
        check_square(&layout, &mat)?;
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL.max(1e-8 * mat.norm()) {
            return Err(Error::InvalidState(format!(
                "operator is not Hermitian (deviation {dev:e})"
            )));
        }
        Ok(HermitianOperator {
            layout,
            mat: hermitian_part(&mat),
        })
    }

    pub fn from_diagonal(layout: SystemLayout, diag: &[f64]) -> Result<Self> {
        if diag.len() != layout.dim() {
            return Err(Error::Dimension(format!(
                "{} diagonal entries for dimension {}",
                diag.len(),
                layout.dim()
            )));
        }
        let mat = CMatrix::from_diagonal(&CVector::from_iterator(
            diag.len(),
            diag.iter().map(|x| cr(*x)),
        ));
        Ok(HermitianOperator { layout, mat })
    }

    pub fn identity(layout: SystemLayout) -> Self {
        let d = layout.dim();
        HermitianOperator {
            layout,
            mat: CMatrix::identity(d, d),
        }
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.mat)
    }

    pub fn eigh(&self) -> Result<(DVector<f64>, CMatrix)> {
        eigh(self)
    }
}

fn check_square(layout: &SystemLayout, mat: &CMatrix) -> Result<()> {
    let d = layout.dim();
    if mat.nrows() != d || mat.ncols() != d {
        return Err(Error::Dimension(format!(
            "matrix is {}x{} but layout dimension is {d}",
            mat.nrows(),
            mat.ncols()
        )));
    }
    Ok(())
}

/// A Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SystemLayout,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(layout: SystemLayout, mat: CMatrix) -> Result<Self> {
        check_square(&layout, &mat)?;
        let dev = hermitian_deviation(&mat);
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let mat = hermitian_part(&mat);
        let tr = trace_re(&mat);
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let min = eigvals_raw(&mat)?.first().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityMatrix { layout, mat })
    }

    /// Skips the spectral check; callers guarantee the invariants by construction.
    pub(crate) fn from_parts(layout: SystemLayout, mat: CMatrix) -> Self {
        debug_assert_eq!(layout.dim(), mat.nrows());
        DensityMatrix {
            layout,
            mat: hermitian_part(&mat),
        }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = &psi.amps;
        DensityMatrix {
            layout: psi.layout.clone(),
            mat: v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let d = layout.dim();
        DensityMatrix {
            layout,
            mat: CMatrix::identity(d, d) * cr(1.0 / d as f64),
        }
    }

    pub fn from_diagonal(layout: SystemLayout, probs: &[f64]) -> Result<Self> {
        if probs.len() != layout.dim() {
            return Err(Error::Dimension(format!(
                "{} probabilities for dimension {}",
                probs.len(),
                layout.dim()
            )));
        }
        if probs.iter().any(|p| *p < -STATE_TOL) {
            return Err(Error::InvalidState("negative probability".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("probabilities sum to {s}")));
        }
        let mat = CMatrix::from_diagonal(&CVector::from_iterator(
            probs.len(),
            probs.iter().map(|p| cr(*p)),
        ));
        Ok(DensityMatrix { layout, mat })
    }

    pub fn basis_state(layout: SystemLayout, index: usize) -> Result<Self> {
        let d = layout.dim();
        if index >= d {
            return Err(Error::Dimension(format!("basis index {index} >= {d}")));
        }
        let mut mat = CMatrix::zeros(d, d);
        mat[(index, index)] = cr(1.0);
        Ok(DensityMatrix { layout, mat })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.mat)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        eigvals_raw(&self.mat)
    }

    pub fn as_operator(&self) -> HermitianOperator {
        HermitianOperator {
            layout: self.layout.clone(),
            mat: self.mat.clone(),
        }
    }

    /// `Tr[op ρ]` for an operator on the full layout.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        (op * &self.mat).trace().re
    }

    /// `p·self + (1−p)·other`.
    pub fn mix(&self, other: &DensityMatrix, p: f64) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::Layout("mixing states on different layouts".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("mixing weight {p} not in [0,1]")));
        }
        Ok(DensityMatrix {
            layout: self.layout.clone(),
            mat: &self.mat * cr(p) + &other.mat * cr(1.0 - p),
        })
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        partial_trace(self, keep)
    }

    pub fn reordered(&self, labels: &[&str]) -> Result<Self> {
        let layout = self.layout.reordered(labels)?;
        let order: Vec<usize> = labels
            .iter()
            .map(|l| self.layout.position(l).unwrap())
            .collect();
        Ok(DensityMatrix {
            mat: permute_raw(&self.mat, &self.layout.dims(), &order),
            layout,
        })
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<Self> {
        Ok(DensityMatrix {
            layout: self.layout.relabel(from, to)?,
            mat: self.mat.clone(),
        })
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: SystemLayout,
    amps: CVector,
}

/// Schmidt decomposition `|ψ⟩ = Σ_k c_k |a_k⟩ ⊗ |b_k⟩` across a bipartition.
#[derive(Clone, Debug)]
pub struct Schmidt {
    pub coefficients: Vec<f64>,
    /// Columns are the `|a_k⟩`.
    pub a_vectors: CMatrix,
    /// Columns are the `|b_k⟩`.
    pub b_vectors: CMatrix,
    pub a_layout: SystemLayout,
    pub b_layout: SystemLayout,
}

impl PureState {
    pub fn new(layout: SystemLayout, amps: CVector) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for dimension {}",
                amps.len(),
                layout.dim()
            )));
        }
        let n = amps.norm();
        if (n - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {n}")));
        }
        Ok(PureState { layout, amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(layout: SystemLayout, amps: CVector) -> Result<Self> {
        let n = amps.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(layout, amps / cr(n))
    }

    pub fn basis(layout: SystemLayout, index: usize) -> Result<Self> {
        let d = layout.dim();
        if index >= d {
            return Err(Error::Dimension(format!("basis index {index} >= {d}")));
        }
        let mut amps = CVector::zeros(d);
        amps[index] = cr(1.0);
        Ok(PureState { layout, amps })
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn reordered(&self, labels: &[&str]) -> Result<Self> {
        let layout = self.layout.reordered(labels)?;
        let order: Vec<usize> = labels
            .iter()
            .map(|l| self.layout.position(l).unwrap())
            .collect();
        Ok(PureState {
            amps: permute_vec_raw(&self.amps, &self.layout.dims(), &order),
            layout,
        })
    }

    /// Schmidt decomposition with `a_labels` on the left; coefficients descending.
    pub fn schmidt(&self, a_labels: &[&str]) -> Result<Schmidt> {
        let a_pos = self.layout.positions(a_labels)?;
        if a_pos.is_empty() || a_pos.len() == self.layout.len() {
            return Err(Error::Layout("Schmidt split needs two non-empty sides".into()));
        }
        let b_pos: Vec<usize> = (0..self.layout.len()).filter(|p| !a_pos.contains(p)).collect();
        let order: Vec<usize> = a_pos.iter().chain(b_pos.iter()).copied().collect();
        let v = permute_vec_raw(&self.amps, &self.layout.dims(), &order);
        let f = self.layout.factors();
        let a_layout = SystemLayout::new(a_pos.iter().map(|&p| f[p].clone()))?;
        let b_layout = SystemLayout::new(b_pos.iter().map(|&p| f[p].clone()))?;
        let (da, db) = (a_layout.dim(), b_layout.dim());
        let m = CMatrix::from_fn(da, db, |i, j| v[i * db + j]);
        let svd = SVD::try_new(m, true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        let k = svd.singular_values.len();
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        Ok(Schmidt {
            coefficients: idx.iter().map(|&i| svd.singular_values[i]).collect(),
            a_vectors: CMatrix::from_fn(da, k, |r, c| u[(r, idx[c])]),
            b_vectors: CMatrix::from_fn(db, k, |r, c| vt[(idx[c], r)]),
            a_layout,
            b_layout,
        })
    }
}

pub trait TensorProduct: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl TensorProduct for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(DensityMatrix {
            layout: self.layout.concat(&other.layout)?,
            mat: self.mat.kronecker(&other.mat),
        })
    }
}

impl TensorProduct for HermitianOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(HermitianOperator {
            layout: self.layout.concat(&other.layout)?,
            mat: self.mat.kronecker(&other.mat),
        })
    }
}

impl TensorProduct for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(PureState {
            layout: self.layout.concat(&other.layout)?,
            amps: self.amps.kronecker(&other.amps),
        })
    }
}

/// Kronecker product with concatenated layouts; label sets must be disjoint.
pub fn tensor_product<T: TensorProduct>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Reduced state on `keep`, factors in layout order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::Layout("partial trace must keep at least one label".into()));
    }
    let pos = rho.layout.positions(keep)?;
    let f = rho.layout.factors();
    let layout = SystemLayout::new(pos.iter().map(|&p| f[p].clone()))?;
    let mat = partial_trace_raw(&rho.mat, &rho.layout.dims(), &pos);
    Ok(DensityMatrix { layout, mat })
}

/// Eigenvalues ascending with the matching unitary of eigenvectors.
pub fn eigh(op: &HermitianOperator) -> Result<(DVector<f64>, CMatrix)> {
    let (vals, vecs) = eigh_raw(&op.mat)?;
    Ok((DVector::from_vec(vals), vecs))
}

/// Sum of singular values.
pub fn trace_norm(op: &CMatrix) -> f64 {
    if op.is_square() && hermitian_deviation(op) <= 1e-14 * (1.0 + op.norm()) {
        if let Ok(v) = eigvals_raw(op) {
            return v.iter().map(|x| x.abs()).sum();
        }
    }
    singular_values(op)
        .map(|s| s.iter().sum())
        .unwrap_or(f64::NAN)
}

/// Largest singular value.
pub fn operator_norm(op: &CMatrix) -> f64 {
    singular_values(op)
        .map(|s| s.iter().copied().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

/// Canonical purification `Σ √λ_k |u_k⟩ ⊗ |k⟩_R` with `dim R = dim ρ`.
pub fn purify(rho: &DensityMatrix, ref_label: &str) -> Result<PureState> {
    if rho.layout.contains(ref_label) {
        return Err(Error::DuplicateLabel(ref_label.to_string()));
    }
    let d = rho.dim();
    let layout = rho.layout.concat(&SystemLayout::single(ref_label, d)?)?;
    let (vals, vecs) = eigh_raw(&rho.mat)?;
    let mut amps = CVector::zeros(d * d);
    for (k, lam) in vals.iter().enumerate() {
        let w = lam.max(0.0).sqrt();
        if w == 0.0 {
            continue;
        }
        for i in 0..d {
            amps[i * d + k] += vecs[(i, k)] * w;
        }
    }
    PureState::normalized(layout, amps)
}

/// Positive and negative parts, `op = pos − neg`.
pub fn jordan_parts(op: &HermitianOperator) -> Result<(HermitianOperator, HermitianOperator)> {
    let pos = spectral_map(&op.mat, |x| x.max(0.0))?;
    let neg = spectral_map(&op.mat, |x| (-x).max(0.0))?;
    Ok((
        HermitianOperator {
            layout: op.layout.clone(),
            mat: hermitian_part(&pos),
        },
        HermitianOperator {
            layout: op.layout.clone(),
            mat: hermitian_part(&neg),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::Generator;

    fn lay(f: &[(&str, usize)]) -> SystemLayout {
        SystemLayout::new(f.iter().map(|(l, d)| (l.to_string(), *d))).unwrap()
    }

    fn ket(bits: &[f64]) -> CVector {
        CVector::from_iterator(bits.len(), bits.iter().map(|x| cr(*x)))
    }

    #[test]
    fn layout_rejects_duplicates_and_zero_dims() {
        assert!(matches!(
            SystemLayout::new([("A", 2), ("A", 3)]),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(SystemLayout::new([("A", 0)]).is_err());
        assert_eq!(lay(&[("A", 2), ("B", 3)]).dim(), 6);
    }

    #[test]
    fn tensor_of_maximally_mixed_qubits() {
        let a = DensityMatrix::maximally_mixed(lay(&[("A", 2)]));
        let b = DensityMatrix::maximally_mixed(lay(&[("B", 2)]));
        let ab = tensor_product(&a, &b).unwrap();
        let want = CMatrix::identity(4, 4) * cr(0.25);
        assert!((ab.matrix() - want).norm() < 1e-15);
        assert!(tensor_product(&a, &a).is_err());
    }

    #[test]
    fn tensor_of_basis_states_is_lexicographic() {
        let a = DensityMatrix::basis_state(lay(&[("A", 2)]), 0).unwrap();
        let b = DensityMatrix::basis_state(lay(&[("B", 2)]), 1).unwrap();
        let ab = tensor_product(&a, &b).unwrap();
        let diag: Vec<f64> = ab.matrix().diagonal().iter().map(|z| z.re).collect();
        assert_eq!(diag, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn tensor_trace_is_multiplicative() {
        let mut g = Generator::new(3);
        for _ in 0..20 {
            let a = g.hermitian(lay(&[("A", 2)]));
            let b = g.hermitian(lay(&[("B", 2)]));
            let ab = tensor_product(&a, &b).unwrap();
            assert!((ab.trace() - a.trace() * b.trace()).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_product_and_bell() {
        let mut g = Generator::new(5);
        let ra = g.density(lay(&[("A", 2)]));
        let rb = g.density(lay(&[("B", 3)]));
        let ab = ra.tensor(&rb).unwrap();
        let back = partial_trace(&ab, &["A"]).unwrap();
        assert!((back.matrix() - ra.matrix()).norm() < 1e-14);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(lay(&[("A", 2), ("B", 2)]), ket(&[s, 0.0, 0.0, s])).unwrap();
        let ra = partial_trace(&bell.to_density(), &["A"]).unwrap();
        assert!((ra.matrix() - CMatrix::identity(2, 2) * cr(0.5)).norm() < 1e-15);
        assert!(matches!(
            partial_trace(&bell.to_density(), &["Z"]),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn partial_trace_composes() {
        let mut g = Generator::new(11);
        for _ in 0..10 {
            let rho = g.density(lay(&[("A", 2), ("B", 3), ("C", 2)]));
            let two = partial_trace(&partial_trace(&rho, &["A", "B"]).unwrap(), &["A"]).unwrap();
            let one = partial_trace(&rho, &["A"]).unwrap();
            assert!((two.matrix() - one.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_traces_over_disjoint_sets_commute() {
        let mut g = Generator::new(12);
        for _ in 0..10 {
            let rho = g.density(lay(&[("A", 2), ("B", 2), ("C", 2)]));
            let x = partial_trace(&partial_trace(&rho, &["B", "C"]).unwrap(), &["C"]).unwrap();
            let y = partial_trace(&partial_trace(&rho, &["A", "C"]).unwrap(), &["C"]).unwrap();
            assert!((x.matrix() - y.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn partial_trace_oracle_by_explicit_sum() {
        // ρ_A[i,j] = Σ_k ρ[(i,k),(j,k)] written out for a 2x3 system.
        let mut g = Generator::new(13);
        let rho = g.density(lay(&[("A", 2), ("B", 3)]));
        let m = rho.matrix();
        let ra = partial_trace(&rho, &["A"]).unwrap();
        let rb = partial_trace(&rho, &["B"]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let s: Complex64 = (0..3).map(|k| m[(i * 3 + k, j * 3 + k)]).sum();
                assert!((s - ra.matrix()[(i, j)]).norm() < 1e-15);
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let s: Complex64 = (0..2).map(|k| m[(k * 3 + i, k * 3 + j)]).sum();
                assert!((s - rb.matrix()[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn reorder_round_trip() {
        let mut g = Generator::new(14);
        let rho = g.density(lay(&[("A", 2), ("B", 3), ("C", 2)]));
        let r = rho.reordered(&["C", "A", "B"]).unwrap();
        assert_eq!(r.layout().labels(), vec!["C", "A", "B"]);
        let back = r.reordered(&["A", "B", "C"]).unwrap();
        assert!((back.matrix() - rho.matrix()).norm() < 1e-15);
        let ra = partial_trace(&r, &["A"]).unwrap();
        assert!((ra.matrix() - partial_trace(&rho, &["A"]).unwrap().matrix()).norm() < 1e-14);
    }

    #[test]
    fn eigh_known_spectra() {
        let h = HermitianOperator::from_diagonal(lay(&[("A", 3)]), &[3.0, 1.0, 2.0]).unwrap();
        let (v, _) = eigh(&h).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0]);
        let x = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let (v, _) = eigh(&HermitianOperator::new(lay(&[("A", 2)]), x).unwrap()).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut g = Generator::new(21);
        for _ in 0..10 {
            let h = g.hermitian(lay(&[("A", 8)]));
            let (v, u) = eigh(&h).unwrap();
            let d = CMatrix::from_diagonal(&v.map(cr));
            let rec = &u * d * u.adjoint();
            assert!(operator_norm(&(rec - h.matrix())) <= 1e-9);
            assert!(v.as_slice().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn trace_norm_cases() {
        let mut g = Generator::new(22);
        let rho = g.density(lay(&[("A", 3)]));
        assert!((trace_norm(rho.matrix()) - 1.0).abs() < 1e-12);
        let a = DensityMatrix::basis_state(lay(&[("A", 2)]), 0).unwrap();
        let b = DensityMatrix::basis_state(lay(&[("A", 2)]), 1).unwrap();
        assert!((trace_norm(&(a.matrix() - b.matrix())) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn jordan_parts_cases() {
        let l = lay(&[("A", 2)]);
        let op = HermitianOperator::from_diagonal(l.clone(), &[1.0, -2.0]).unwrap();
        let (p, n) = jordan_parts(&op).unwrap();
        let want_p = CMatrix::from_diagonal(&ket(&[1.0, 0.0]));
        let want_n = CMatrix::from_diagonal(&ket(&[0.0, 2.0]));
        assert!((p.matrix() - want_p).norm() < 1e-14);
        assert!((n.matrix() - want_n).norm() < 1e-14);
        let rho = Generator::new(1).density(l);
        let (p, n) = jordan_parts(&rho.as_operator()).unwrap();
        assert!((p.matrix() - rho.matrix()).norm() < 1e-12);
        assert!(n.matrix().norm() < 1e-12);
    }

    #[test]
    fn purify_cases() {
        let l = lay(&[("A", 2)]);
        let mixed = DensityMatrix::maximally_mixed(l.clone());
        let psi = purify(&mixed, "R").unwrap();
        let back = partial_trace(&psi.to_density(), &["A"]).unwrap();
        assert!((back.matrix() - mixed.matrix()).norm() < 1e-12);
        let rr = partial_trace(&psi.to_density(), &["R"]).unwrap();
        assert!((rr.matrix() - CMatrix::identity(2, 2) * cr(0.5)).norm() < 1e-12);

        let pure = DensityMatrix::basis_state(l.clone(), 1).unwrap();
        let psi = purify(&pure, "R").unwrap();
        let s = psi.schmidt(&["A"]).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12 && s.coefficients[1].abs() < 1e-12);
        assert!(purify(&pure, "A").is_err());
    }

    #[test]
    fn schmidt_reconstructs_state() {
        let mut g = Generator::new(31);
        let psi = g.pure(lay(&[("A", 2), ("B", 3), ("C", 2)]));
        let s = psi.schmidt(&["B"]).unwrap();
        let mut v = CVector::zeros(12);
        for k in 0..s.coefficients.len() {
            v += s.a_vectors.column(k).kronecker(&s.b_vectors.column(k)) * cr(s.coefficients[k]);
        }
        let back = PureState::new(s.a_layout.concat(&s.b_layout).unwrap(), v)
            .unwrap()
            .reordered(&["A", "B", "C"])
            .unwrap();
        assert!((back.amplitudes() - psi.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        let l = lay(&[("A", 2)]);
        let bad = CMatrix::from_diagonal(&ket(&[1.5, -0.5]));
        assert!(DensityMatrix::new(l.clone(), bad).is_err());
        let bad_tr = CMatrix::from_diagonal(&ket(&[0.5, 0.6]));
        assert!(DensityMatrix::new(l.clone(), bad_tr).is_err());
        let ok = CMatrix::from_diagonal(&ket(&[0.25, 0.75]));
        assert!(DensityMatrix::new(l, ok).is_ok());
    }

    mod props {
        use super::*;
        use crate::channels::random_channel;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn trace_distance_in_range(seed in any::<u64>()) {
                let mut g = Generator::new(seed);
                let l = lay(&[("A", 3)]);
                let (r, s) = (g.density(l.clone()), g.density(l));
                let t = trace_norm(&(r.matrix() - s.matrix()));
                prop_assert!((0.0..=2.0 + 1e-12).contains(&t));
            }

            #[test]
            fn density_spectrum_is_a_distribution(seed in any::<u64>()) {
                let rho = Generator::new(seed).density(lay(&[("A", 2), ("B", 2)]));
                let v = rho.eigenvalues().unwrap();
                prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(v.iter().all(|x| *x >= -1e-9));
            }

            #[test]
            fn jordan_parts_orthogonal_and_complete(seed in any::<u64>()) {
                let h = Generator::new(seed).hermitian(lay(&[("A", 4)]));
                let (p, n) = jordan_parts(&h).unwrap();
                prop_assert!((p.matrix() * n.matrix()).trace().re.abs() <= 1e-9);
                prop_assert!((p.trace() + n.trace() - trace_norm(h.matrix())).abs() <= 1e-9);
                prop_assert!((p.matrix() - n.matrix() - h.matrix()).norm() <= 1e-9);
            }

            #[test]
            fn purification_round_trip(seed in any::<u64>()) {
                let rho = Generator::new(seed).density(lay(&[("A", 3)]));
                let psi = purify(&rho, "R").unwrap();
                let back = partial_trace(&psi.to_density(), &["A"]).unwrap();
                prop_assert!((back.matrix() - rho.matrix()).norm() <= 1e-9);
            }

            #[test]
            fn isometry_difference_bound(seed in any::<u64>()) {
                // ‖UρU† − VρV†‖₁ ≤ 2‖(U−V)ρ‖₁ ≤ 2‖U−V‖
                let mut g = Generator::new(seed);
                let u = random_channel(3, 2, 3, seed).unwrap();
                let v = random_channel(3, 2, 3, seed ^ 0x5555).unwrap();
                let rho = g.density(lay(&[("A", 3)]));
                let (u, v) = (u.isometry(), v.isometry());
                let lhs = trace_norm(&(u * rho.matrix() * u.adjoint() - v * rho.matrix() * v.adjoint()));
                let mid = 2.0 * trace_norm(&((u - v) * rho.matrix()));
                let rhs = 2.0 * operator_norm(&(u - v));
                prop_assert!(lhs <= mid + 1e-9);
                prop_assert!(mid <= rhs + 1e-9);
            }
        }
    }

    #[test]
    fn operator_norm_matches_power_iteration() {
        let mut g = Generator::new(41);
        for _ in 0..10 {
            let m = g.complex_matrix(5, 4);
            let mtm = m.adjoint() * &m;
            let mut x = CVector::from_element(4, cr(1.0));
            let mut lam = 0.0;
            for _ in 0..5000 {
                let y = &mtm * &x;
                lam = y.norm();
                x = y / cr(lam);
            }
            assert!((operator_norm(&m) - lam.sqrt()).abs() < 1e-8);
            assert!((operator_norm(&CMatrix::identity(3, 3)) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn trace_norm_matches_independent_svd() {
        // Singular values as square roots of the eigenvalues of M†M.
        let mut g = Generator::new(42);
        for _ in 0..10 {
            let m = g.complex_matrix(4, 4);
            let ev = eigvals_raw(&(m.adjoint() * &m)).unwrap();
            let oracle: f64 = ev.iter().map(|x| x.max(0.0).sqrt()).sum();
            assert!((trace_norm(&m) - oracle).abs() < 1e-9);
        }
    }
}
