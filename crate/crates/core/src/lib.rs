//! Kropina–Finsler geometrization of quantum-hydrodynamic particle motion.
//!
//! A [`Scenario`] bundles potentials, Madelung data and constants. From it
//! the crate assembles the associated Riemannian metric `a_IJ` on extended
//! configuration space `(t, x, y, z)`, the Kropina function `F = α²/β`,
//! geodesic sprays, the Newton–Bohm equation of motion, and the Zermelo
//! navigation data `(h, W, κ)`. The [`oracle`] module holds brute-force
//! verifiers for every closed form.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below cover the common double-precision case.

pub mod connection;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod oracle;
pub mod scalar;
pub mod scenario;
pub mod tolerances;
pub mod zermelo;

pub use error::{Error, Result};
pub use expr::Expr;
pub use fields::{Constants, Domain, MadelungState, QuantumSource, ScalarField, VectorField};
pub use geometry::{KropinaGeometry, TangentSample};
pub use scalar::Real;
pub use scenario::{MassMatrix, MetricField, Scenario};
pub use zermelo::NavigationData;
pub use dynamics::Trajectory;

pub type Scenario64 = Scenario<f64>;
pub type Scenario32 = Scenario<f32>;
pub type ScalarField64 = ScalarField<f64>;
pub type VectorField64 = VectorField<f64>;
pub type Constants64 = Constants<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type NavigationData64 = NavigationData<f64>;
pub type TangentSample64 = TangentSample<f64>;
