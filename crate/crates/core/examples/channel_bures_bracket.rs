//! Certified brackets for the Bures distance and diamond norm between two channels,
//! with and without an energy constraint.
//!
//! ```bash
//! cargo run --release -p qcontinuity --example channel_bures_bracket
//! ```

use qcontinuity::energy::Hamiltonian;
use qcontinuity::harness::generators::Generator;
use qcontinuity::metrics::{channel_bures_bracket, diamond_bracket_from, output_bures_for_input, BracketBudget, EnergyConstraint};
use qcontinuity::qstate::SystemLayout;
use qcontinuity::Result;

fn main() -> Result<()> {
    let mut gen = Generator::new(3);
    let phi = gen.channel(2, 2, 2);
    let psi = gen.nearby_channel(&phi, 0.05);
    let budget = BracketBudget::default();

    let beta = channel_bures_bracket(&phi, &psi, None, &budget)?;
    println!(
        "β ∈ [{:.8}, {:.8}] width {:.1e} converged={}",
        beta.lower,
        beta.upper,
        beta.width(),
        beta.converged
    );
    let diamond = diamond_bracket_from(&phi, &psi, None, &budget, &beta)?;
    println!("‖Φ−Ψ‖⋄ ∈ [{:.6}, {:.6}]", diamond.lower, diamond.upper);
    println!("½‖Φ−Ψ‖⋄ ≤ β ≤ √‖Φ−Ψ‖⋄: {:.6} ≤ {:.6} ≤ {:.6}", 0.5 * diamond.lower, beta.upper, diamond.upper.sqrt());

    // random inputs never beat the upper end
    let layout = SystemLayout::single("A", 2)?;
    let mut best = 0.0f64;
    for _ in 0..2000 {
        let rho = gen.density(layout.clone());
        best = best.max(output_bures_for_input(&phi, &psi, rho.matrix())?);
    }
    println!("best of 2000 random inputs: {best:.8}");

    // an energy constraint can only shrink the distance
    let h = Hamiltonian::new(vec![0.0, 1.0])?;
    for e in [0.05, 0.2, 0.5, 1.0] {
        let b = channel_bures_bracket(&phi, &psi, Some(&EnergyConstraint::new(h.clone(), e)?), &budget)?;
        println!("E={e}: β_E ∈ [{:.8}, {:.8}]", b.lower, b.upper);
    }
    Ok(())
}
