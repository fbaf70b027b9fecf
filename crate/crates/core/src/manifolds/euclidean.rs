//! Flat ℝⁿ. All curvature-sensitive identities reduce to vector arithmetic,
//! which makes this the comparison model for everything else.

use crate::geometry::{canonical_pair, Coords, GeometryError, Manifold, ManifoldId};

pub struct EuclideanSpace {
    id: ManifoldId,
    dim: usize,
}

impl EuclideanSpace {
    pub fn new(dim: usize) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::InvalidParameter(
                "euclidean dimension must be >= 1".into(),
            ));
        }
        Ok(Self {
            id: ManifoldId::fresh(),
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_len(&self, c: &Coords) -> Result<(), GeometryError> {
        if c.len() != self.dim {
            return Err(GeometryError::NotOnManifold {
                detail: format!("expected {} coordinates, got {}", self.dim, c.len()),
                defect: f64::INFINITY,
            });
        }
        Ok(())
    }
}

impl Manifold for EuclideanSpace {
    fn id(&self) -> ManifoldId {
        self.id
    }

    fn name(&self) -> String {
        format!("euclidean{{dim={}}}", self.dim)
    }

    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn intrinsic_dim(&self) -> usize {
        self.dim
    }

    fn origin(&self) -> Coords {
        Coords::zeros(self.dim)
    }

    fn check_point(&self, coords: &Coords) -> Result<(), GeometryError> {
        self.check_len(coords)?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NotOnManifold {
                detail: "non-finite coordinate".into(),
                defect: f64::INFINITY,
            });
        }
        Ok(())
    }

    fn tangency_defect(&self, _base: &Coords, v: &Coords) -> f64 {
        if v.len() == self.dim && v.iter().all(|c| c.is_finite()) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn project_point(&self, coords: &Coords) -> Coords {
        coords.clone()
    }

    fn project_tangent(&self, _base: &Coords, v: &Coords) -> Coords {
        v.clone()
    }

    fn inner(&self, _base: &Coords, u: &Coords, v: &Coords) -> f64 {
        u.dot(v)
    }

    fn exp(&self, base: &Coords, v: &Coords) -> Result<Coords, GeometryError> {
        Ok(base + v)
    }

    fn log(&self, x: &Coords, y: &Coords) -> Result<Coords, GeometryError> {
        Ok(y - x)
    }

    fn distance(&self, x: &Coords, y: &Coords) -> Result<f64, GeometryError> {
        if x == y {
            return Ok(0.0);
        }
        let (a, b) = canonical_pair(x, y);
        Ok((b - a).norm())
    }

    fn transport(&self, _x: &Coords, v: &Coords, _y: &Coords) -> Result<Coords, GeometryError> {
        Ok(v.clone())
    }

    fn tangent_basis(&self, _base: &Coords) -> Vec<Coords> {
        (0..self.dim)
            .map(|i| {
                let mut e = Coords::zeros(self.dim);
                e[i] = 1.0;
                e
            })
            .collect()
    }
}
