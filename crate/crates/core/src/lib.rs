//! Continuity bounds for capacities and entropic quantities of quantum
//! channels, with the numerics needed to check them.
//!
//! * [`qstate`]: labeled multipartite states, partial traces, norms, purifications.
//! * [`entropic`]: entropies, (conditional) mutual information, Holevo quantity.
//! * [`channels`]: Stinespring channels, complementary channels, the erasure family.
//! * [`metrics`]: fidelity, Bures distances, ensemble metrics and certified
//!   brackets for the (energy-constrained) Bures distance and diamond norm of channels.
//! * [`energy`]: Hamiltonians, Gibbs states, `F_H`, `γ(d)`, oscillator closed forms.
//! * [`bounds`]: evaluators for every continuity bound and the erasure capacities.
//! * [`harness`]: seeded verification campaigns, tightness sweeps and reports.
//!
//! All entropies are in nats. The `examples/` directory has one runnable
//! program per capability.

pub mod bounds;
pub mod channels;
pub mod energy;
pub mod entropic;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod qstate;

pub use error::{Error, Result};
