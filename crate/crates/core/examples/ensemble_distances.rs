//! Distances between discrete ensembles: the transport distance D₀, the
//! Kantorovich distance D_K, and the factorized upper estimate.
//!
//! ```bash
//! cargo run -p qcontinuity --example ensemble_distances
//! ```

use qcontinuity::entropic::{holevo_quantity, Ensemble};
use qcontinuity::harness::generators::Generator;
use qcontinuity::metrics::{ensemble_d0, ensemble_dk, ensemble_dstar_upper};
use qcontinuity::qstate::{DensityMatrix, SystemLayout};
use qcontinuity::Result;

fn main() -> Result<()> {
    let mut gen = Generator::new(11);
    let layout = SystemLayout::single("A", 2)?;
    let mu = gen.ensemble(layout.clone(), 3);
    let nu = gen.ensemble(layout.clone(), 4);
    println!(
        "random pair: D0 = {:.6}, DK = {:.6}, D* ≤ {:.6}",
        ensemble_d0(&mu, &nu)?,
        ensemble_dk(&mu, &nu)?,
        ensemble_dstar_upper(&mu, &nu)?
    );
    println!("χ(μ) = {:.6}, χ(ν) = {:.6}", holevo_quantity(&mu), holevo_quantity(&nu));

    // same weights: D_K never exceeds D0
    let shared = Ensemble::new(mu.items().iter().map(|(p, _)| (*p, gen.density(layout.clone()))).collect())?;
    println!("shared weights: D0 = {:.6} ≥ DK = {:.6}", ensemble_d0(&mu, &shared)?, ensemble_dk(&mu, &shared)?);

    // different weights: D_K can be larger
    let zero = DensityMatrix::basis_state(layout.clone(), 0)?;
    let one = DensityMatrix::basis_state(layout.clone(), 1)?;
    let plus = DensityMatrix::new(layout.clone(), nalgebra::DMatrix::from_element(2, 2, 0.5.into()))?;
    let a = Ensemble::new(vec![(1.0, zero), (0.0, one.clone())])?;
    let b = Ensemble::new(vec![(0.5, plus), (0.5, one)])?;
    println!("different weights: D0 = {:.6}, DK = {:.6}", ensemble_d0(&a, &b)?, ensemble_dk(&a, &b)?);
    Ok(())
}
