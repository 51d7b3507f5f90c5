//! Closed-form tightness sweeps on erasure pairs: ratio of the actual capacity
//! gap to the bound as the dimension or the energy grows.
//!
//! ```bash
//! cargo run -p qcontinuity --example tightness_sweep
//! ```

use qcontinuity::bounds::Capacity;
use qcontinuity::harness::{sweep_tightness, SweepFamily, SweepGrid};
use qcontinuity::Result;

fn main() -> Result<()> {
    let log_d = vec![1.0, 5.0, 20.0, 50.0, 100.0, 200.0, 500.0];
    let grid = SweepGrid::dims(log_d, vec![1e-4, 1e-2]).with_capacities(vec![Capacity::C, Capacity::Q]);
    println!("{:>6} {:>8} {:>4} {:>12} {:>12} {:>8}", "log d", "x", "cap", "ΔC", "bound", "ratio");
    for r in sweep_tightness(SweepFamily::ErasureDim, &grid)? {
        println!(
            "{:>6} {:>8} {:>4} {:>12.4e} {:>12.4e} {:>8.4}",
            r.log_d.unwrap_or_default(),
            r.x,
            r.capacity.as_str(),
            r.delta_c,
            r.bound,
            r.ratio
        );
    }

    println!();
    let grid = SweepGrid::energies(vec![2.0, 5.0, 10.0, 1e2, 1e4, 1e8], vec![1e-3]).with_capacities(vec![Capacity::Q]);
    println!("{:>8} {:>10} {:>12} {:>12} {:>8}", "E", "r", "ΔC", "bound", "ratio");
    for r in sweep_tightness(SweepFamily::ErasureEnergy, &grid)? {
        println!(
            "{:>8} {:>10.3e} {:>12.4e} {:>12.4e} {:>8.4}",
            r.energy.unwrap_or_default(),
            r.r.unwrap_or_default(),
            r.delta_c,
            r.bound,
            r.ratio
        );
    }
    Ok(())
}
