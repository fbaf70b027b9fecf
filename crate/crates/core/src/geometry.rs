//! Manifold abstraction and the value types shared by every other module:
//! points, tangent vectors and ordered geodesic segments.
//!
//! Points and tangents are stored in ambient coordinates (`DVector<f64>`);
//! the owning manifold instance interprets them. Manifold identity is an
//! opaque per-instance id, not structural equality of parameters, so points
//! from two separately constructed manifolds are never comparable.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DVector;
use thiserror::Error;

/// Membership / tangency tolerance for validated constructors.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Norms below this are treated as exactly zero in exp/log guards.
pub const SMALL_NORM: f64 = 1e-12;

/// Tolerance used when deciding whether two tangent vectors share a base point.
pub const BASE_MATCH_TOL: f64 = 1e-9;

pub type Coords = DVector<f64>;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("points belong to different manifolds ({0} vs {1})")]
    ManifoldMismatch(ManifoldId, ManifoldId),
    #[error("mismatched base points for tangent-space operation")]
    BaseMismatch,
    #[error("coordinates violate manifold membership ({detail}, defect {defect:.3e})")]
    NotOnManifold { detail: String, defect: f64 },
    #[error("coordinates are not a tangent vector at the base point (defect {defect:.3e})")]
    NotTangent { defect: f64 },
    #[error("coordinates left the admissible chart: {0}")]
    DomainExit(String),
    #[error("{method} failed to converge (residual {residual:.3e})")]
    NumericalFailure { method: String, residual: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Opaque identifier of a manifold instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ManifoldId(u64);

impl ManifoldId {
    pub(crate) fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        ManifoldId(NEXT.fetch_add(1, Ordering::Relaxed))
    }

    pub(crate) fn raw(&self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for ManifoldId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A Hadamard manifold in a fixed ambient coordinate representation.
///
/// Implementations must keep all operations pure: instances are read-only
/// after construction and shared freely across threads.
pub trait Manifold: Send + Sync {
    fn id(&self) -> ManifoldId;

    /// Human-readable instance description, e.g. `hyperbolic{dim=2,curvature=-1}`.
    fn name(&self) -> String;

    /// Length of the ambient coordinate vector.
    fn ambient_dim(&self) -> usize;

    /// Intrinsic manifold dimension (size of a tangent frame).
    fn intrinsic_dim(&self) -> usize;

    /// Canonical origin used for sampling and default starting points.
    fn origin(&self) -> Coords;

    /// Membership predicate within [`MEMBERSHIP_TOL`].
    fn check_point(&self, coords: &Coords) -> Result<(), GeometryError>;

    /// Tangency defect of `v` at `base` (0 means exactly tangent).
    fn tangency_defect(&self, base: &Coords, v: &Coords) -> f64;

    /// Re-projection onto the manifold (used after exp/transport to stop drift).
    fn project_point(&self, coords: &Coords) -> Coords;

    /// Projection onto the tangent space at `base`.
    fn project_tangent(&self, base: &Coords, v: &Coords) -> Coords;

    /// Riemannian inner product of two tangent vectors at `base`.
    fn inner(&self, base: &Coords, u: &Coords, v: &Coords) -> f64;

    fn exp(&self, base: &Coords, v: &Coords) -> Result<Coords, GeometryError>;

    fn log(&self, x: &Coords, y: &Coords) -> Result<Coords, GeometryError>;

    /// Geodesic distance. Implementations must be bitwise symmetric in their
    /// arguments and return exactly 0.0 for bitwise-equal inputs; callers of
    /// the quasilinearized inner product rely on both.
    fn distance(&self, x: &Coords, y: &Coords) -> Result<f64, GeometryError> {
        if x == y {
            return Ok(0.0);
        }
        let (a, b) = canonical_pair(x, y);
        let v = self.log(a, b)?;
        Ok(self.inner(a, &v, &v).max(0.0).sqrt())
    }

    /// Parallel transport of `v` from `x` to `y` along the minimizing geodesic.
    fn transport(&self, x: &Coords, v: &Coords, y: &Coords) -> Result<Coords, GeometryError>;

    /// An orthonormal basis of the tangent space at `base` (in the base metric).
    fn tangent_basis(&self, base: &Coords) -> Vec<Coords>;
}

/// Orders a pair of coordinate vectors lexicographically so that symmetric
/// quantities (distances) are computed bitwise identically for (x, y) and (y, x).
pub(crate) fn canonical_pair<'a>(x: &'a Coords, y: &'a Coords) -> (&'a Coords, &'a Coords) {
    for (a, b) in x.iter().zip(y.iter()) {
        if a < b {
            return (x, y);
        }
        if a > b {
            return (y, x);
        }
    }
    (x, y)
}

/// A point on a manifold, in ambient coordinates.
#[derive(Clone)]
pub struct ManifoldPoint {
    manifold: Arc<dyn Manifold>,
    coords: Coords,
}

impl std::fmt::Debug for ManifoldPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManifoldPoint")
            .field("manifold", &self.manifold.name())
            .field("coords", &self.coords.as_slice())
            .finish()
    }
}

impl ManifoldPoint {
    /// Validated constructor: `coords` must satisfy the manifold's membership
    /// predicate within [`MEMBERSHIP_TOL`].
    pub fn new(manifold: Arc<dyn Manifold>, coords: Coords) -> Result<Self, GeometryError> {
        manifold.check_point(&coords)?;
        Ok(Self { manifold, coords })
    }

    /// Construct without validation. Reserved for internal paths that have
    /// just projected onto the manifold.
    pub fn new_unchecked(manifold: Arc<dyn Manifold>, coords: Coords) -> Self {
        Self { manifold, coords }
    }

    pub fn coords(&self) -> &Coords {
        &self.coords
    }

    pub fn manifold(&self) -> &Arc<dyn Manifold> {
        &self.manifold
    }

    pub fn manifold_id(&self) -> ManifoldId {
        self.manifold.id()
    }

    pub fn same_manifold(&self, other: &Self) -> Result<(), GeometryError> {
        if self.manifold_id() != other.manifold_id() {
            return Err(GeometryError::ManifoldMismatch(
                self.manifold_id(),
                other.manifold_id(),
            ));
        }
        Ok(())
    }

    /// Geodesic distance to `other`.
    pub fn distance(&self, other: &Self) -> Result<f64, GeometryError> {
        self.same_manifold(other)?;
        self.manifold.distance(&self.coords, &other.coords)
    }

    /// Riemannian logarithm: the tangent vector at `self` that exp-maps to `other`.
    pub fn log_map(&self, other: &Self) -> Result<TangentVector, GeometryError> {
        self.same_manifold(other)?;
        let v = self.manifold.log(&self.coords, &other.coords)?;
        Ok(TangentVector {
            base: self.clone(),
            coords: v,
        })
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.manifold_id() == other.manifold_id() && (&self.coords - &other.coords).amax() <= tol
    }
}

/// A tangent vector: base point plus ambient tangent coordinates.
#[derive(Clone)]
pub struct TangentVector {
    base: ManifoldPoint,
    coords: Coords,
}

impl std::fmt::Debug for TangentVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TangentVector")
            .field("base", &self.base.coords.as_slice())
            .field("coords", &self.coords.as_slice())
            .finish()
    }
}

impl TangentVector {
    /// Validated constructor: `coords` must lie in the tangent subspace at
    /// `base` within [`MEMBERSHIP_TOL`].
    pub fn new(base: ManifoldPoint, coords: Coords) -> Result<Self, GeometryError> {
        let defect = base.manifold.tangency_defect(&base.coords, &coords);
        if defect.is_nan() || defect > MEMBERSHIP_TOL {
            return Err(GeometryError::NotTangent { defect });
        }
        Ok(Self { base, coords })
    }

    pub fn new_unchecked(base: ManifoldPoint, coords: Coords) -> Self {
        Self { base, coords }
    }

    pub fn zero(base: ManifoldPoint) -> Self {
        let dim = base.manifold.ambient_dim();
        Self {
            base,
            coords: Coords::zeros(dim),
        }
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn coords(&self) -> &Coords {
        &self.coords
    }

    fn same_base(&self, other: &Self) -> Result<(), GeometryError> {
        self.base.same_manifold(&other.base)?;
        if (&self.base.coords - &other.base.coords).amax() > BASE_MATCH_TOL {
            return Err(GeometryError::BaseMismatch);
        }
        Ok(())
    }

    /// Riemannian inner product with `other` at the shared base point.
    pub fn inner(&self, other: &Self) -> Result<f64, GeometryError> {
        self.same_base(other)?;
        Ok(self
            .base
            .manifold
            .inner(&self.base.coords, &self.coords, &other.coords))
    }

    /// Metric norm at the base point.
    pub fn norm(&self) -> f64 {
        self.base
            .manifold
            .inner(&self.base.coords, &self.coords, &self.coords)
            .max(0.0)
            .sqrt()
    }

    /// Exponential map at the base point.
    pub fn exp_map(&self) -> Result<ManifoldPoint, GeometryError> {
        let c = self.base.manifold.exp(&self.base.coords, &self.coords)?;
        Ok(ManifoldPoint {
            manifold: Arc::clone(&self.base.manifold),
            coords: c,
        })
    }

    /// Parallel transport to `to` along the minimizing geodesic.
    pub fn transport_to(&self, to: &ManifoldPoint) -> Result<TangentVector, GeometryError> {
        self.base.same_manifold(to)?;
        let c = self
            .base
            .manifold
            .transport(&self.base.coords, &self.coords, &to.coords)?;
        Ok(TangentVector {
            base: to.clone(),
            coords: c,
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            base: self.base.clone(),
            coords: &self.coords * a,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, GeometryError> {
        self.same_base(other)?;
        Ok(Self {
            base: self.base.clone(),
            coords: &self.coords + &other.coords,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GeometryError> {
        self.same_base(other)?;
        Ok(Self {
            base: self.base.clone(),
            coords: &self.coords - &other.coords,
        })
    }
}

/// Ordered shortest geodesic segment from `start` to `end`.
#[derive(Clone, Debug)]
pub struct GeodesicSegment {
    start: ManifoldPoint,
    end: ManifoldPoint,
}

impl GeodesicSegment {
    pub fn new(start: ManifoldPoint, end: ManifoldPoint) -> Result<Self, GeometryError> {
        start.same_manifold(&end)?;
        Ok(Self { start, end })
    }

    pub fn start(&self) -> &ManifoldPoint {
        &self.start
    }

    pub fn end(&self) -> &ManifoldPoint {
        &self.end
    }

    pub fn length(&self) -> Result<f64, GeometryError> {
        self.start.distance(&self.end)
    }

    /// Reversal swaps start and end (and flips the quasilinearized sign).
    pub fn reverse(&self) -> Self {
        Self {
            start: self.end.clone(),
            end: self.start.clone(),
        }
    }
}

/// Point at parameter `t` on the geodesic from `x` to `y`: `Exp_x(t·log_x(y))`.
pub fn geodesic_point(
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    t: f64,
) -> Result<ManifoldPoint, GeometryError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::InvalidParameter(format!(
            "geodesic parameter t={t} outside [0,1]"
        )));
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    if t == 1.0 {
        return Ok(y.clone());
    }
    x.log_map(y)?.scale(t).exp_map()
}
