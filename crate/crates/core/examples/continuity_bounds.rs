//! Evaluating the continuity bounds directly and through `BoundSpec`.
//!
//! ```bash
//! cargo run -p qcontinuity --example continuity_bounds
//! ```

use qcontinuity::bounds::{
    lemma4_finite, optimal_r, p_r, prop4_bound, t_st, theorem1_bound, theorem2_bound, BoundName, BoundSpec, Capacity,
};
use qcontinuity::energy::{EnergyProfile, EnergySpec, OscillatorSpec};
use qcontinuity::Result;

fn main() -> Result<()> {
    for eps in [1e-3, 1e-2, 0.1] {
        println!(
            "ε={eps}: lemma4 (d=4) {:.5}, prop4 (d=2, n=2) {:.5}, thm1 Q (d=64) {:.5}",
            lemma4_finite(eps, 4.0, false)?,
            prop4_bound(eps, 2.0, 2.0)?,
            theorem1_bound(Capacity::Q, eps, 64.0)?
        );
    }

    // energy-constrained: T_st minimizes over the truncation dimension d
    let osc = OscillatorSpec::single_mode(1.0);
    let profile = EnergyProfile::Oscillator(osc.clone());
    let e = 5.0;
    for eps in [1e-3, 1e-2, 0.1] {
        let t = t_st(&profile, e, 0, 0, eps, 1_000_000)?;
        let (r, pr) = optimal_r(&osc, e, eps)?;
        println!(
            "ε={eps}: T_00 = {:.5} at d* = {}{}, P_r = {:.5} at r = {r:.4}, P_1 = {:.5}",
            t.value,
            t.d_star,
            if t.stopped_early { "" } else { " (cap reached)" },
            pr,
            p_r(&osc, e, eps, 1.0)?
        );
        println!("   thm2 Q bound with P_r: {:.5}", theorem2_bound(Capacity::Q, eps, pr));
    }

    // the same evaluators from a serializable spec
    let spec = BoundSpec::new(BoundName::Thm2Q)
        .with("E", 5.0)
        .with("use_pr", 1.0)
        .with("r", 0.3)
        .with_energy(EnergySpec::Oscillator(osc));
    println!("spec: {}", serde_json::to_string(&spec)?);
    println!("thm2_q(ε=0.01) = {:.6}", spec.evaluate(0.01)?);
    Ok(())
}
