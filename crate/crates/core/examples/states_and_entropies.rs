//! Labeled states, partial traces and the basic entropic quantities.
//!
//! ```bash
//! cargo run -p qcontinuity --example states_and_entropies
//! ```

use qcontinuity::entropic::{conditional_mutual_information, holevo_quantity, mutual_information, qc_state, von_neumann_entropy, Ensemble};
use qcontinuity::harness::generators::Generator;
use qcontinuity::qstate::{tensor_product, trace_norm, DensityMatrix, PureState, SystemLayout};
use qcontinuity::Result;

fn main() -> Result<()> {
    let mut gen = Generator::new(7);

    // a maximally entangled pair: pure globally, maximally mixed locally
    let ab = SystemLayout::new([("A", 2), ("B", 2)])?;
    let bell = PureState::normalized(
        ab.clone(),
        nalgebra::DVector::from_vec(vec![1.0.into(), 0.0.into(), 0.0.into(), 1.0.into()]),
    )?
    .to_density();
    println!("S(AB) = {:.3e}", von_neumann_entropy(&bell));
    println!("S(A)  = {:.6} (log 2 = {:.6})", von_neumann_entropy(&bell.partial_trace(&["A"])?), 2f64.ln());
    println!("I(A:B) = {:.6}", mutual_information(&bell, &["A"], &["B"])?);

    // conditional mutual information on a random three-party state
    let abc = SystemLayout::new([("A", 2), ("B", 2), ("C", 2)])?;
    let rho = gen.density(abc);
    println!("I(A:B|C) = {:.6}", conditional_mutual_information(&rho, &["A"], &["B"], &["C"])?);
    let reordered = rho.reordered(&["C", "A", "B"])?;
    println!(
        "same after reordering: {:.6}",
        conditional_mutual_information(&reordered, &["A"], &["B"], &["C"])?
    );

    // a product state has no correlations
    let prod = tensor_product(&gen.density(SystemLayout::single("X", 3)?), &gen.density(SystemLayout::single("Y", 2)?))?;
    println!("I(X:Y) on a product state = {:.2e}", mutual_information(&prod, &["X"], &["Y"])?);

    // Holevo quantity equals I(A:X) on the classical-quantum state
    let ens: Ensemble = gen.ensemble(SystemLayout::single("A", 3)?, 4);
    let qc = qc_state(&ens, "X")?;
    println!(
        "chi = {:.9}, I(A:X)_qc = {:.9}",
        holevo_quantity(&ens),
        mutual_information(&qc, &["A"], &["X"])?
    );

    let sigma = DensityMatrix::maximally_mixed(SystemLayout::single("A", 3)?);
    println!("trace distance to I/3: {:.6}", 0.5 * trace_norm(&(ens.average().matrix() - sigma.matrix())));
    Ok(())
}
