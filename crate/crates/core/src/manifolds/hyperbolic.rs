//! Hyperbolic space H^n of constant curvature c < 0 in the Lorentz
//! (hyperboloid) model.
//!
//! Points live on the sheet { ⟨x,x⟩_L = 1/c, x₀ > 0 } of the hyperboloid in
//! ℝ^{n+1}, where ⟨x,y⟩_L = −x₀y₀ + Σᵢ xᵢyᵢ is the Lorentz bilinear form with
//! the time coordinate first. Tangent vectors at x satisfy ⟨x,v⟩_L = 0 and the
//! metric is the (positive definite) restriction of ⟨·,·⟩_L. Exp, log,
//! distance and transport are closed-form.

use crate::geometry::{
    canonical_pair, Coords, GeometryError, Manifold, ManifoldId, MEMBERSHIP_TOL, SMALL_NORM,
};

/// sinh(x)/x, series-evaluated near zero.
#[inline]
fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// asinh(x)/x, series-evaluated near zero.
#[inline]
fn asinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.asinh() / x
    }
}

pub struct HyperbolicSpace {
    id: ManifoldId,
    dim: usize,
    curvature: f64,
    /// k = sqrt(-curvature); the hyperboloid "radius" is 1/k.
    k: f64,
}

impl HyperbolicSpace {
    pub fn new(dim: usize, curvature: f64) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::InvalidParameter(
                "hyperbolic dimension must be >= 1".into(),
            ));
        }
        if curvature.is_nan() || curvature >= 0.0 || !curvature.is_finite() {
            return Err(GeometryError::InvalidParameter(format!(
                "hyperbolic curvature must be finite and < 0, got {curvature}"
            )));
        }
        Ok(Self {
            id: ManifoldId::fresh(),
            dim,
            curvature,
            k: (-curvature).sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    /// Lorentz bilinear form with time coordinate first.
    pub fn lorentz_inner(u: &Coords, v: &Coords) -> f64 {
        let mut s = -u[0] * v[0];
        for i in 1..u.len() {
            s += u[i] * v[i];
        }
        s
    }

    fn check_len(&self, c: &Coords) -> Result<(), GeometryError> {
        if c.len() != self.dim + 1 {
            return Err(GeometryError::NotOnManifold {
                detail: format!("expected {} coordinates, got {}", self.dim + 1, c.len()),
                defect: f64::INFINITY,
            });
        }
        Ok(())
    }

    /// Lorentz projection of `v` onto the tangent space at `x`.
    fn tangent_project(&self, x: &Coords, v: &Coords) -> Coords {
        // ⟨x,x⟩_L = −1/k², so the projection is v + k²⟨x,v⟩_L x.
        v + x * (self.k * self.k * Self::lorentz_inner(x, v))
    }
}

impl Manifold for HyperbolicSpace {
    fn id(&self) -> ManifoldId {
        self.id
    }

    fn name(&self) -> String {
        format!(
            "hyperbolic{{dim={},curvature={}}}",
            self.dim, self.curvature
        )
    }

    fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    fn intrinsic_dim(&self) -> usize {
        self.dim
    }

    fn origin(&self) -> Coords {
        let mut c = Coords::zeros(self.dim + 1);
        c[0] = 1.0 / self.k;
        c
    }

    fn check_point(&self, coords: &Coords) -> Result<(), GeometryError> {
        self.check_len(coords)?;
        let norm_defect = (Self::lorentz_inner(coords, coords) - 1.0 / self.curvature).abs();
        // Normalization defect scales with 1/|c|; compare in relative terms.
        let defect = norm_defect * self.curvature.abs();
        if defect.is_nan() || defect > MEMBERSHIP_TOL {
            return Err(GeometryError::NotOnManifold {
                detail: "Lorentz normalization violated".into(),
                defect,
            });
        }
        if coords[0] <= 0.0 {
            return Err(GeometryError::NotOnManifold {
                detail: "point is not on the positive sheet".into(),
                defect: -coords[0],
            });
        }
        Ok(())
    }

    fn tangency_defect(&self, base: &Coords, v: &Coords) -> f64 {
        if v.len() != self.dim + 1 || v.iter().any(|c| !c.is_finite()) {
            return f64::INFINITY;
        }
        Self::lorentz_inner(base, v).abs() * self.k / (1.0 + v.amax())
    }

    fn project_point(&self, coords: &Coords) -> Coords {
        // Renormalize onto the hyperboloid: x ← x / (k·sqrt(−⟨x,x⟩_L)).
        let s = -Self::lorentz_inner(coords, coords);
        if s <= 0.0 {
            return coords.clone();
        }
        coords / (self.k * s.sqrt())
    }

    fn project_tangent(&self, base: &Coords, v: &Coords) -> Coords {
        self.tangent_project(base, v)
    }

    fn inner(&self, _base: &Coords, u: &Coords, v: &Coords) -> f64 {
        Self::lorentz_inner(u, v)
    }

    fn exp(&self, base: &Coords, v: &Coords) -> Result<Coords, GeometryError> {
        let n2 = Self::lorentz_inner(v, v).max(0.0);
        let n = n2.sqrt();
        if n == 0.0 {
            return Ok(base.clone());
        }
        let kn = self.k * n;
        let out = base * kn.cosh() + v * sinhc(kn);
        Ok(self.project_point(&out))
    }

    fn log(&self, x: &Coords, y: &Coords) -> Result<Coords, GeometryError> {
        if x == y {
            return Ok(Coords::zeros(self.dim + 1));
        }
        // w = (y − x) projected to T_x, which avoids the cancellation in
        // y + k²⟨x,y⟩x for nearby points; then ‖w‖ = sinh(k d)/k and the
        // log is w·asinh(k‖w‖)/(k‖w‖), a smooth factor with no 0/0.
        let delta = y - x;
        let w = self.tangent_project(x, &delta);
        let wn = Self::lorentz_inner(&w, &w).max(0.0).sqrt();
        Ok(&w * asinhc(self.k * wn))
    }

    fn distance(&self, x: &Coords, y: &Coords) -> Result<f64, GeometryError> {
        if x == y {
            return Ok(0.0);
        }
        let (a, b) = canonical_pair(x, y);
        let delta = b - a;
        let w = self.tangent_project(a, &delta);
        let wn = Self::lorentz_inner(&w, &w).max(0.0).sqrt();
        Ok((self.k * wn).asinh() / self.k)
    }

    fn transport(&self, x: &Coords, v: &Coords, y: &Coords) -> Result<Coords, GeometryError> {
        if (y - x).amax() < SMALL_NORM {
            return Ok(v.clone());
        }
        let k2 = self.k * self.k;
        let denom = 1.0 - k2 * Self::lorentz_inner(x, y);
        let coef = k2 * Self::lorentz_inner(y, v) / denom;
        let out = v + (x + y) * coef;
        Ok(self.tangent_project(y, &out))
    }

    fn tangent_basis(&self, base: &Coords) -> Vec<Coords> {
        let n = self.dim + 1;
        let mut basis: Vec<Coords> = Vec::with_capacity(self.dim);
        for i in 0..n {
            let mut e = Coords::zeros(n);
            e[i] = 1.0;
            let mut w = self.tangent_project(base, &e);
            for b in &basis {
                let c = Self::lorentz_inner(&w, b);
                w -= b * c;
            }
            let wn = Self::lorentz_inner(&w, &w).max(0.0).sqrt();
            if wn > 1e-8 {
                basis.push(w / wn);
            }
            if basis.len() == self.dim {
                break;
            }
        }
        basis
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::geometry::{ManifoldPoint, TangentVector};

    fn h2() -> Arc<dyn Manifold> {
        Arc::new(HyperbolicSpace::new(2, -1.0).unwrap())
    }

    fn point(m: &Arc<dyn Manifold>, c: &[f64]) -> ManifoldPoint {
        ManifoldPoint::new(Arc::clone(m), Coords::from_column_slice(c)).unwrap()
    }

    #[test]
    fn exp_along_unit_direction_is_closed_form() {
        let m = h2();
        let x = point(&m, &[1.0, 0.0, 0.0]);
        let v = TangentVector::new(x, Coords::from_column_slice(&[0.0, 1.0, 0.0])).unwrap();
        let y = v.exp_map().unwrap();
        let expected = [1.0f64.cosh(), 1.0f64.sinh(), 0.0];
        for (a, b) in y.coords().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn log_inverts_exp_closed_form() {
        let m = h2();
        let x = point(&m, &[1.0, 0.0, 0.0]);
        let y = point(&m, &[1.0f64.cosh(), 1.0f64.sinh(), 0.0]);
        let v = x.log_map(&y).unwrap();
        let expected = [0.0, 1.0, 0.0];
        for (a, b) in v.coords().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn distance_matches_arccosh_oracle() {
        let m = h2();
        let x = point(&m, &[1.0, 0.0, 0.0]);
        let y = point(&m, &[2.0f64.cosh(), 2.0f64.sinh(), 0.0]);
        let d = x.distance(&y).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
        // Independent oracle: arccosh(−⟨x,y⟩_L).
        let oracle = (-HyperbolicSpace::lorentz_inner(x.coords(), y.coords())).acosh();
        assert!((d - oracle).abs() < 1e-10);
    }

    #[test]
    fn transport_orthogonal_to_geodesic_plane_is_invariant() {
        let m = h2();
        let x = point(&m, &[1.0, 0.0, 0.0]);
        let y = point(&m, &[1.0f64.cosh(), 1.0f64.sinh(), 0.0]);
        let v = TangentVector::new(x, Coords::from_column_slice(&[0.0, 0.0, 1.0])).unwrap();
        let w = v.transport_to(&y).unwrap();
        for (a, b) in w.coords().iter().zip([0.0, 0.0, 1.0].iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((w.norm() - v.norm()).abs() < 1e-12);
    }

    #[test]
    fn transport_to_same_point_is_identity() {
        let m = h2();
        let x = point(&m, &[1.0, 0.0, 0.0]);
        let v =
            TangentVector::new(x.clone(), Coords::from_column_slice(&[0.0, 0.3, -0.7])).unwrap();
        let w = v.transport_to(&x).unwrap();
        assert_eq!(w.coords(), v.coords());
    }

    #[test]
    fn geodesic_midpoint_closed_form() {
        let m = h2();
        let x = point(&m, &[1.0, 0.0, 0.0]);
        let y = point(&m, &[2.0f64.cosh(), 2.0f64.sinh(), 0.0]);
        let mid = crate::geometry::geodesic_point(&x, &y, 0.5).unwrap();
        let expected = [1.0f64.cosh(), 1.0f64.sinh(), 0.0];
        for (a, b) in mid.coords().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_parameter_scales_distances() {
        // On curvature −4 the same hyperboloid-angle corresponds to half the distance.
        let m: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(2, -4.0).unwrap());
        let r = 0.5; // hyperboloid radius 1/k
        let x = point(&m, &[r, 0.0, 0.0]);
        let v = TangentVector::new(x.clone(), Coords::from_column_slice(&[0.0, 1.0, 0.0])).unwrap();
        let y = v.exp_map().unwrap();
        assert!((x.distance(&y).unwrap() - 1.0).abs() < 1e-12);
        let back = x.log_map(&y).unwrap();
        assert!((back.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn off_sheet_point_is_rejected() {
        let m = h2();
        assert!(
            ManifoldPoint::new(Arc::clone(&m), Coords::from_column_slice(&[1.1, 0.0, 0.0]))
                .is_err()
        );
    }
}
