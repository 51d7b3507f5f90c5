//! Seeded random instances: states, ensembles, channels, energy-feasible inputs.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::channels::{random_channel_with, StinespringChannel};
use crate::energy::Hamiltonian;
use crate::entropic::Ensemble;
use crate::qstate::{
    cr, hermitian_part, tensor_product, trace_re, CMatrix, CVector, DensityMatrix,
    HermitianOperator, PureState, SystemLayout,
};

pub struct Generator {
    rng: ChaCha8Rng,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream per trial so results do not depend on scheduling.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        Generator { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Entries with independent standard normal real and imaginary parts.
    pub fn complex_matrix(&mut self, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            num_complex::Complex64::new(self.gaussian(), self.gaussian())
        })
    }

    pub fn hermitian(&mut self, layout: SystemLayout) -> HermitianOperator {
        let d = layout.dim();
        let m = hermitian_part(&self.complex_matrix(d, d));
        HermitianOperator::new(layout, m).expect("Hermitian by construction")
    }

    /// Full-rank Wishart state `GG†/Tr GG†`.
    pub fn density(&mut self, layout: SystemLayout) -> DensityMatrix {
        let d = layout.dim();
        self.density_rank(layout, d)
    }

    pub fn density_rank(&mut self, layout: SystemLayout, rank: usize) -> DensityMatrix {
        let d = layout.dim();
        let g = self.complex_matrix(d, rank.clamp(1, d));
        let w = hermitian_part(&(&g * g.adjoint()));
        let t = trace_re(&w);
        DensityMatrix::new(layout, w / cr(t)).expect("Wishart matrix is a state")
    }

    /// Either a full-rank state or one of random rank, so low-rank edge cases appear.
    pub fn density_mixed_rank(&mut self, layout: SystemLayout) -> DensityMatrix {
        let d = layout.dim();
        let r = 1 + self.index(d);
        self.density_rank(layout, r)
    }

    pub fn pure(&mut self, layout: SystemLayout) -> PureState {
        let d = layout.dim();
        let v = CVector::from_fn(d, |_, _| {
            num_complex::Complex64::new(self.gaussian(), self.gaussian())
        });
        PureState::normalized(layout, v).expect("nonzero Gaussian vector")
    }

    /// Flat Dirichlet sample.
    pub fn probabilities(&mut self, k: usize) -> Vec<f64> {
        let w: Vec<f64> = (0..k).map(|_| self.rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    pub fn ensemble(&mut self, layout: SystemLayout, k: usize) -> Ensemble {
        let p = self.probabilities(k);
        let items = p
            .into_iter()
            .map(|p| (p, self.density_mixed_rank(layout.clone())))
            .collect();
        Ensemble::new(items).expect("valid ensemble")
    }

    /// Random Stinespring channel labeled `A → B` with environment `E`.
    pub fn channel(&mut self, d_a: usize, d_b: usize, d_e: usize) -> StinespringChannel {
        random_channel_with(&mut self.rng, d_a, d_b, d_e).expect("d_B·d_E >= d_A")
    }

    /// A channel whose isometry is `V + s·G` re-orthonormalized, so `β(Φ,Ψ)` is small.
    pub fn nearby_channel(&mut self, base: &StinespringChannel, scale: f64) -> StinespringChannel {
        let v = base.isometry();
        let noise = self.complex_matrix(v.nrows(), v.ncols()) * cr(scale);
        let w = crate::channels::orthonormalize(v + noise);
        StinespringChannel::new(
            w,
            base.d_a(),
            base.d_b(),
            base.d_e(),
            base.input_label(),
            base.output_label(),
            base.env_label(),
        )
        .expect("orthonormalized isometry")
    }

    /// Mixes a random state toward `ground ⊗ ρ_rest` with the smallest weight
    /// making `Tr H ρ_label ≤ E`. The marginal energy is affine in the weight.
    pub fn energy_feasible(
        &mut self,
        layout: SystemLayout,
        label: &str,
        h: &Hamiltonian,
        e: f64,
    ) -> DensityMatrix {
        let rho = self.density_mixed_rank(layout);
        feasible_mix(&rho, label, h, e)
    }

    /// Random pure state whose component outside the ground space of `H` on
    /// `label` is scaled down until `Tr H ψ_label ≤ E`.
    pub fn pure_with_energy(
        &mut self,
        layout: SystemLayout,
        label: &str,
        h: &Hamiltonian,
        e: f64,
    ) -> PureState {
        let psi = self.pure(layout);
        scale_to_energy(&psi, label, h, e)
    }
}

pub(crate) fn feasible_mix(rho: &DensityMatrix, label: &str, h: &Hamiltonian, e: f64) -> DensityMatrix {
    let layout = rho.layout().clone();
    let marginal = rho.partial_trace(&[label]).expect("label in layout");
    let en = h.energy(marginal.matrix());
    if en <= e {
        return rho.clone();
    }
    let e0 = h.ground_energy();
    let t = ((en - e) / (en - e0)).clamp(0.0, 1.0);
    let ground = DensityMatrix::from_parts(
        SystemLayout::single(label, h.dim()).expect("valid label"),
        h.ground_state_matrix(),
    );
    let rest_labels: Vec<&str> = layout.labels().into_iter().filter(|l| *l != label).collect();
    let target = if rest_labels.is_empty() {
        ground
    } else {
        let rest = rho.partial_trace(&rest_labels).expect("labels in layout");
        tensor_product(&ground, &rest)
            .and_then(|p| p.reordered(&layout.labels()))
            .expect("same label set")
    };
    let out = target.mix(rho, t).expect("same layout");
    debug_assert!(h.energy(out.partial_trace(&[label]).unwrap().matrix()) <= e + 1e-10);
    out
}

pub(crate) fn scale_to_energy(psi: &PureState, label: &str, h: &Hamiltonian, e: f64) -> PureState {
    let layout = psi.layout().clone();
    let p = layout.position(label).expect("label in layout");
    let dims = layout.dims();
    let pre: usize = dims[..p].iter().product();
    let post: usize = dims[p + 1..].iter().product();
    let ground_proj = h.ground_state_matrix() * cr(h.ground_multiplicity() as f64);
    let proj = crate::qstate::embed(&ground_proj, pre, post);
    let hbar = crate::qstate::embed(&h.shifted_matrix(), pre, post);
    let amps = psi.amplitudes();
    let vg = &proj * amps;
    let vx = amps - &vg;
    let excess = (vx.adjoint() * &hbar * &vx)[(0, 0)].re;
    let e_bar = e - h.ground_energy();
    if excess <= e_bar {
        return psi.clone();
    }
    let (wg, wx) = (vg.norm_squared(), vx.norm_squared());
    if wg <= 1e-300 {
        // no ground component at all: fall back to |0⟩ ⊗ ground ⊗ |0⟩
        let col = (0..ground_proj.ncols())
            .max_by(|&i, &j| ground_proj.column(i).norm().total_cmp(&ground_proj.column(j).norm()))
            .unwrap_or(0);
        let g = ground_proj.column(col).normalize();
        let mut v = CVector::zeros(amps.len());
        for (k, z) in g.iter().enumerate() {
            v[k * post] = *z;
        }
        return PureState::normalized(layout, v).expect("unit vector");
    }
    let s2 = e_bar.max(0.0) / excess;
    let c2 = (1.0 - s2 * wx) / wg;
    let v = vg * cr(c2.sqrt()) + vx * cr(s2.sqrt());
    PureState::normalized(layout, v).expect("nonzero vector")
}
