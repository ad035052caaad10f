//! Numerical toolkit for positive contactomorphism paths: Lorentzian-type
//! distance estimates from Reeb flow calibration, spectral invariants of
//! generating functions, and causality checks on product spacetimes.
//!
//! Four standard contact models are built in (the unit cotangent circle
//! bundle of the 2-torus and its universal cover, the 1-jet space of the
//! circle, and the round 3-sphere). On top of them the crate provides
//! Hamiltonian path expressions with certified length functionals, Reeb
//! reparametrization, interval estimates for the induced distance, critical
//! point machinery for generating functions, Legendrian isotopies, and sky
//! constructions for product spacetimes.
//!
//! The `examples/` directory is the guided tour; each file exercises one
//! capability end to end.

pub mod error;
pub mod fields;
pub mod flows;
pub mod formats;
pub mod genfun;
pub mod geom;
pub mod grid;
pub mod legendrian;
pub mod library;
pub mod lorentz;
pub mod manifolds;
pub mod optim;
pub mod scenario;
pub mod spacetime;

pub use error::{Error, Result};
