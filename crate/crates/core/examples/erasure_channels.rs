//! Erasure channels: Stinespring form, complementary channel and capacities.
//!
//! ```bash
//! cargo run -p qcontinuity --example erasure_channels
//! ```

use qcontinuity::bounds::{erasure_capacities, erasure_pair_epsilon, one_shot_maxima, Capacity};
use qcontinuity::channels::{erasure_channel, ErasureSpec};
use qcontinuity::metrics::BracketBudget;
use qcontinuity::qstate::{operator_norm, DensityMatrix, SystemLayout};
use qcontinuity::Result;

fn main() -> Result<()> {
    let d = 3;
    let ch = erasure_channel(&ErasureSpec { d, p: 0.3 })?;
    println!("erasure d={d}: output dim {}, env dim {}", ch.d_b(), ch.d_e());

    let rho = DensityMatrix::basis_state(SystemLayout::single("A", d)?, 1)?;
    let out = ch.apply(&rho)?;
    println!("Φ(|1><1|) diagonal: {:?}", out.matrix().diagonal().iter().map(|z| (z.re * 1e6).round() / 1e6).collect::<Vec<_>>());

    // the complement of Φ_p is Φ_{1-p} up to relabeling
    let comp = ch.complementary();
    let flipped = erasure_channel(&ErasureSpec { d, p: 0.7 })?;
    let diff = comp.apply(&rho)?.matrix() - flipped.apply(&rho)?.matrix();
    println!("‖Φ_p^c(ρ) − Φ_(1−p)(ρ)‖ = {:.2e}", operator_norm(&diff));

    for p in [0.1, 0.3, 0.5, 0.7] {
        let caps = erasure_capacities(d, p, None)?;
        println!(
            "p={p}: C = {:.4}, Q = {:.4}, P = {:.4}",
            caps.get(Capacity::C),
            caps.get(Capacity::Q),
            caps.get(Capacity::P)
        );
    }

    // closed-form ε for the pair (Φ_{1/2−x}, Φ_{1/2}) vs the isometry norm
    for x in [0.01, 0.05, 0.2] {
        let v1 = erasure_channel(&ErasureSpec { d, p: 0.5 - x })?;
        let v2 = erasure_channel(&ErasureSpec { d, p: 0.5 })?;
        let norm = operator_norm(&(v1.isometry() - v2.isometry()));
        println!("x={x}: ‖V−V'‖ = {norm:.12}, closed form = {:.12}", erasure_pair_epsilon(x)?);
    }

    // one-shot coherent information is a lower bound on Q
    let best = one_shot_maxima(&ch, None, &BracketBudget::quick())?;
    println!(
        "max I_c found: {:.6} (Q = {:.6}); max I(Φ,ρ) found: {:.6}",
        best.q_bar_lower,
        erasure_capacities(d, 0.3, None)?.q,
        best.c_ea_lower
    );
    Ok(())
}
