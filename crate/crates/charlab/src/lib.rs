//! Numerical laboratory for closed characteristics on compact convex
//! hypersurfaces in `R^{2n}`.
//!
//! The crate is organized as a pipeline:
//!
//! * [`sympl`] — symplectic linear algebra: validated matrices, the
//!   diamond product, unit-circle spectra, elliptic height, and basic
//!   normal-form decompositions.
//! * [`path`] — discretized symplectic paths and the omega-index of a
//!   path computed by co-oriented crossing counts.
//! * [`iteration`] — index iteration: `(i(γ,m), ν(γ,m))` tables, mean
//!   index, splitting numbers, and orbit classification.
//! * [`hypersurface`] — convex body models, Hamiltonian flow and
//!   linearized-flow integration, closed-form ellipsoid characteristics.
//! * [`dual`] — the Clarke–Ekeland dual action functional on mean-zero
//!   loops: evaluation, critical-point search, and Morse data.
//! * [`jump`] — the common-index-jump arithmetic and the stability
//!   certificates (non-hyperbolic and elliptic lower bounds).
//! * [`pipeline`] — run configuration, orchestration, reports, audits.

pub mod config;
pub mod dual;
pub mod hypersurface;
pub mod iteration;
pub mod jump;
pub mod path;
pub mod pipeline;
pub mod sympl;

pub use config::Tolerances;
pub use sympl::SymplecticMatrix;
