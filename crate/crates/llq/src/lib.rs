//! Quench dynamics of a one-dimensional Bose gas driven from strong
//! repulsion (Tonks-Girardeau) to strong attraction.
//!
//! The crate combines two independent routes to the same physics:
//!
//! * a number-conserving TEBD engine on the discretized (Bose-Hubbard)
//!   lattice — [`model`], [`mps`], [`tebd`], [`observables`] — able to follow
//!   the pair-correlation dynamics of trapped many-particle clouds, and
//! * the exact two-particle Bethe solution on a ring — [`bethe2`] — with its
//!   strong-coupling beating approximations, used both as physics in its own
//!   right and as an analytic cross-check of the many-body results.
//!
//! Small instances are validated against dense exact diagonalization
//! ([`ed`]). The [`experiments`] module drives the reproducible scenario
//! runs (spectrum, quench, two-particle comparison, validation suite) behind
//! the `llq` command-line binary; each major capability also has a runnable
//! example under `examples/`.

pub mod bethe2;
pub mod ed;
pub mod experiments;
pub mod model;
pub mod mps;
pub mod observables;
pub mod tebd;

pub use model::{ContinuumParams, LatticeParams, UnitSystem};
pub use mps::{BondSpectrum, SymmetricMps, TruncationPolicy, TwoSiteOp};
pub use observables::{CorrelationRow, LocalSeries, Trajectory};
pub use tebd::{EvolutionConfig, QuenchProtocol, TrotterScheme};
