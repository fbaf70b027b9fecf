//! First-order proximal methods for geodesically convex optimization on
//! Hadamard manifolds, built around the quasilinearized inner product on
//! geodesic segments that removes curvature-lower-bound assumptions.
//!
//! Crate layout:
//! - [`geometry`]: the manifold abstraction plus point/tangent/segment types.
//! - [`manifolds`]: Euclidean, hyperbolic (Lorentz model), SPD, warped product.
//! - [`quasilinear`]: the four-point inner product and its comparison lemmas.
//! - [`objectives`]: g-convex test objectives with exact oracles.
//! - [`solvers`]: proximal gradient (deterministic and stochastic), inner GD,
//!   explicit RGD baseline.
//! - [`oracles`]: finite differences, certified reference solves, inequality
//!   checkers.
//! - [`verify`]: the randomized property suites behind `hgopt verify`.

pub mod geometry;
pub mod manifolds;
pub mod objectives;
pub mod oracles;
pub mod quasilinear;
pub mod sampling;
pub mod solvers;
pub mod verify;

pub use geometry::{
    geodesic_point, Coords, GeodesicSegment, GeometryError, Manifold, ManifoldId, ManifoldPoint,
    TangentVector,
};
