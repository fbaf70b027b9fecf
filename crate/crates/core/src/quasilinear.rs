//! Quasilinearized inner product on ordered geodesic segments.
//!
//! For segments x→y and z→w the product is computed from the four-point
//! distance expansion
//!
//!   ⟨x→y, z→w⟩ = (d(x,w)² + d(y,z)² − d(x,z)² − d(y,w)²) / 2
//!
//! rather than through the cosq form, which divides by segment lengths and
//! breaks down on degenerate segments. cosq is derived afterwards and is
//! undefined when either length is below 1e-12.
//!
//! Exactness invariants: symmetry in the two segments and sign flip under
//! reversal hold bitwise. That relies on distance implementations being
//! bitwise symmetric (see `Manifold::distance`) and on the fixed grouping
//! ((p + q) − (r + s)) below, which IEEE addition commutativity and exact
//! negation of subtraction turn into bitwise identities.

use crate::geometry::{GeodesicSegment, GeometryError, ManifoldPoint};
use crate::objectives::Objective;

/// Length below which a segment is treated as degenerate for cosq purposes.
pub const DEGENERATE_LEN: f64 = 1e-12;

/// Result of a quasilinearized inner product evaluation.
#[derive(Debug, Clone, Copy)]
pub struct QuasiInnerResult {
    /// The inner product value from the four-point expansion.
    pub value: f64,
    /// value / (len₁·len₂); `None` when either segment is degenerate.
    pub cosq: Option<f64>,
}

/// The inner-product value alone, skipping the two segment-length distance
/// evaluations that only cosq needs. On manifolds with iterative distance
/// solvers this is substantially cheaper than [`quasi_inner`].
pub fn quasi_inner_value(s1: &GeodesicSegment, s2: &GeodesicSegment) -> Result<f64, GeometryError> {
    s1.start().same_manifold(s2.start())?;
    let (x, y) = (s1.start(), s1.end());
    let (z, w) = (s2.start(), s2.end());

    let p = sq(x.distance(w)?);
    let q = sq(y.distance(z)?);
    let r = sq(x.distance(z)?);
    let s = sq(y.distance(w)?);
    Ok(0.5 * ((p + q) - (r + s)))
}

/// Quasilinearized inner product of two ordered segments on one manifold.
pub fn quasi_inner(
    s1: &GeodesicSegment,
    s2: &GeodesicSegment,
) -> Result<QuasiInnerResult, GeometryError> {
    let value = quasi_inner_value(s1, s2)?;
    let l1 = s1.length()?;
    let l2 = s2.length()?;
    let cosq = if l1 < DEGENERATE_LEN || l2 < DEGENERATE_LEN {
        None
    } else {
        Some(value / (l1 * l2))
    };
    Ok(QuasiInnerResult { value, cosq })
}

#[inline]
fn sq(d: f64) -> f64 {
    d * d
}

/// Residual of the segment addition rule on the tuple (x, y, z, u, w):
/// |⟨x→z, u→w⟩ − ⟨x→y, u→w⟩ − ⟨y→z, u→w⟩|. The identity is exact by
/// construction of the four-point expansion, so residuals are rounding noise.
pub fn quasi_add_check(
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    z: &ManifoldPoint,
    u: &ManifoldPoint,
    w: &ManifoldPoint,
) -> Result<f64, GeometryError> {
    let uw = GeodesicSegment::new(u.clone(), w.clone())?;
    let whole = quasi_inner_value(&GeodesicSegment::new(x.clone(), z.clone())?, &uw)?;
    let first = quasi_inner_value(&GeodesicSegment::new(x.clone(), y.clone())?, &uw)?;
    let second = quasi_inner_value(&GeodesicSegment::new(y.clone(), z.clone())?, &uw)?;
    Ok((whole - first - second).abs())
}

/// Both sides of the comparison inequality at the triple (x, y, z):
/// the quasilinearized product ⟨x→y, x→z⟩ and the tangent-space product
/// ⟨log_x(y), log_x(z)⟩_x. On a Hadamard manifold quasi ≤ tangent.
pub fn compare_to_tangent(
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    z: &ManifoldPoint,
) -> Result<(f64, f64), GeometryError> {
    let quasi = quasi_inner_value(
        &GeodesicSegment::new(x.clone(), y.clone())?,
        &GeodesicSegment::new(x.clone(), z.clone())?,
    )?;
    let ly = x.log_map(y)?;
    let lz = x.log_map(z)?;
    let tangent = ly.inner(&lz)?;
    Ok((quasi, tangent))
}

/// Slack of the q-convexity inequality at (x, y) with parameter `mu`:
/// f(x) − f(y) − ⟨y→Exp_y(grad f(y)), y→x⟩ − (μ/2)d(x,y)².
/// Nonnegative (up to tolerance) whenever f is g-convex with parameter μ.
pub fn q_convexity_gap(
    f: &dyn Objective,
    x: &ManifoldPoint,
    y: &ManifoldPoint,
    mu: f64,
) -> Result<f64, GeometryError> {
    let grad = f.gradient(y)?;
    let tip = grad.exp_map()?;
    let qi = quasi_inner_value(
        &GeodesicSegment::new(y.clone(), tip)?,
        &GeodesicSegment::new(y.clone(), x.clone())?,
    )?;
    let d = x.distance(y)?;
    Ok(f.value(x)? - f.value(y)? - qi - 0.5 * mu * d * d)
}
