//! Curvature of graph hypersurfaces in warped products `M ×_ψ I`.
//!
//! The crate is layered bottom-up:
//!
//! * [`manifold`]: chart-based Riemannian geometry (Christoffel symbols,
//!   curvature tensor, covariant gradient, Hessian and divergence).
//! * [`warped`]: warping profiles, slice curvatures, the conformal map `σ`,
//!   and the closed-form curvature of the warped metric.
//! * [`graph`]: pointwise extrinsic geometry of a graph `Γ_f`.
//! * [`models`]: the catalog of named model spaces.
//! * [`verify`]: extremum search, witness search and estimate checkers.
//!
//! Curvature sign convention throughout: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`,
//! so that `⟨R(u,v)v,u⟩ / |u∧v|²` is the sectional curvature.

pub mod error;
pub mod expr;
pub mod fields;
pub mod graph;
pub mod manifold;
pub mod models;
pub mod par;
pub mod quadrature;
pub mod verify;
pub mod warped;

pub use error::{GeomError, Result};
pub use fields::DerivativeMode;
pub use graph::{GraphFunction, GraphPointReport};
pub use manifold::{BoxDomain, ChartMetric, TangentData};
pub use models::ModelSpace;
pub use par::Exec;
pub use verify::{EstimateReport, Region, Verdict};
pub use warped::{WarpedProduct, WarpingFunction};
