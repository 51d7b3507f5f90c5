//! Gibbs states, the maximal entropy F_H(E), γ(d), and the oscillator closed forms.
//!
//! ```bash
//! cargo run -p qcontinuity --example gibbs_and_oscillator
//! ```

use qcontinuity::energy::{f_h, gamma, gibbs_state, Hamiltonian, OscillatorSpec};
use qcontinuity::entropic::von_neumann_entropy;
use qcontinuity::Result;

fn main() -> Result<()> {
    let h = Hamiltonian::new(vec![0.0, 1.0, 1.0, 3.0, 4.5])?;
    for e in [0.2, 1.0, 1.9] {
        let gibbs = gibbs_state(&h, e)?;
        println!(
            "E={e}: Tr Hγ = {:.9}, S(γ) = {:.9}, F_H(E) = {:.9}",
            h.energy(gibbs.matrix()),
            von_neumann_entropy(&gibbs),
            f_h(&h, e)?
        );
    }
    for d in 2..=5 {
        println!("γ({d}) = {:.6}", gamma(&h, d)?);
    }

    let osc = OscillatorSpec::single_mode(1.0);
    println!("oscillator: E0 = {}, E* = {}", osc.e0(), osc.e_star());
    for e in [1.0, 2.0, 5.0, 20.0] {
        println!(
            "E={e}: exact F = {:.6}, upper bound F_ℓω = {:.6}",
            osc.f_exact(e)?,
            osc.f_closed(e)?
        );
    }

    // the truncated matrix approaches the exact value once the tail is negligible
    for levels in [5, 10, 20, 40] {
        let spec = OscillatorSpec::new(vec![1.0], 1.0, levels)?;
        let h = spec.to_hamiltonian()?;
        println!("truncation {levels:>2}: F_H(2) = {:.9} (tail mass {:.1e})", f_h(&h, 2.0)?, spec.tail_mass(2.0)?);
    }

    let two = OscillatorSpec::new(vec![1.0, 2.0], 1.0, 8)?;
    println!("two modes: E0 = {}, F_ℓω(5) = {:.6}, γ̂(100) = {:.6}", two.e0(), two.f_closed(5.0)?, two.gamma_hat(100.0)?);
    Ok(())
}
