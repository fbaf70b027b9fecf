//! Concrete Hadamard manifolds: Euclidean space, hyperbolic space in the
//! Lorentz (hyperboloid) model, symmetric positive definite matrices with the
//! affine-invariant metric, and warped products `I ×_φ ℝ` whose curvature can
//! be unbounded below.

mod euclidean;
mod hyperbolic;
mod spd;
mod warped;

pub use euclidean::EuclideanSpace;
pub use hyperbolic::HyperbolicSpace;
pub use spd::{mat_to_coords, sym_coords_to_mat, SpdManifold};
pub use warped::{WarpPhi, WarpedProduct};
