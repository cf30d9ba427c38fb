//! Two-vortex Hamiltonian dynamics in planar domains.
//!
//! The crate builds up from domain models (regular part of a hydrodynamic
//! Green's function and its Robin function) through trajectory integration to
//! the certification and construction of periodic pair solutions whose center
//! of vorticity shadows a star-shaped level line of the Robin function while
//! the two vortices spin rapidly around it:
//!
//! * [`domain`] — disk, radial-power and user-supplied domain models,
//!   harmonic-center search.
//! * [`dynamics`] — the pair Hamiltonian, its vector field, the fast/slow
//!   change of variables, remainder and fast-rate diagnostics.
//! * [`flow`] — adaptive embedded Runge-Kutta integration with dense output,
//!   angle lifts, section crossings, flow-map Jacobians.
//! * [`levelset`] — level-line tracing, the period function, star-shape and
//!   monotonicity certification.
//! * [`twist`] — rotation numbers and twist certificates on annular product
//!   regions.
//! * [`orbits`] — shooting for periodic solutions, action evaluation, family
//!   sweeps and asymptotics verification.

pub mod domain;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod levelset;
pub mod orbits;
pub mod par;
pub mod report;
pub mod twist;

pub use domain::{harmonic_center, DomainModel, HarmonicCenter, UserModel};
pub use dynamics::{PairState, VortexConfig, WState};
pub use error::{Error, Result, TwistStage};
pub use flow::IntegratorSettings;
pub use geometry::Point2;
