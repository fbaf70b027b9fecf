//! Symmetric positive definite matrices with the affine-invariant metric
//! ⟨U,V⟩_X = tr(X⁻¹U X⁻¹V).
//!
//! Points and tangents are stored as row-major flattened n×n matrices so the
//! shared value types stay coordinate vectors. Matrix functions (expm, logm,
//! square roots) go through symmetric eigendecompositions with eigenvalues
//! clamped below at 1e-14 before any logarithm.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::geometry::{
    canonical_pair, Coords, GeometryError, Manifold, ManifoldId, MEMBERSHIP_TOL, SMALL_NORM,
};

const EIG_CLAMP: f64 = 1e-14;

pub struct SpdManifold {
    id: ManifoldId,
    n: usize,
}

/// Flatten a matrix into point/tangent coordinates (row-major).
pub fn mat_to_coords(m: &DMatrix<f64>) -> Coords {
    let n = m.nrows();
    let mut c = Coords::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = m[(i, j)];
        }
    }
    c
}

/// Rebuild the symmetric matrix behind a coordinate vector.
pub fn sym_coords_to_mat(c: &Coords, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| c[i * n + j])
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(m))
}

/// Q f(Λ) Qᵀ for a symmetric matrix.
fn sym_map(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = sym_eigen(m);
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    symmetrize(&(&eig.eigenvectors * d * eig.eigenvectors.transpose()))
}

impl SpdManifold {
    pub fn new(n: usize) -> Result<Self, GeometryError> {
        if n == 0 {
            return Err(GeometryError::InvalidParameter(
                "spd matrix dimension must be >= 1".into(),
            ));
        }
        Ok(Self {
            id: ManifoldId::fresh(),
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_len(&self, c: &Coords) -> Result<(), GeometryError> {
        if c.len() != self.n * self.n {
            return Err(GeometryError::NotOnManifold {
                detail: format!("expected {} coordinates, got {}", self.n * self.n, c.len()),
                defect: f64::INFINITY,
            });
        }
        Ok(())
    }

    /// (X^{1/2}, X^{-1/2}) via one eigendecomposition.
    fn sqrt_pair(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let eig = sym_eigen(x);
        let sq = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(EIG_CLAMP).sqrt()));
        let isq = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.max(EIG_CLAMP).sqrt()));
        (
            symmetrize(&(&eig.eigenvectors * sq * eig.eigenvectors.transpose())),
            symmetrize(&(&eig.eigenvectors * isq * eig.eigenvectors.transpose())),
        )
    }
}

impl Manifold for SpdManifold {
    fn id(&self) -> ManifoldId {
        self.id
    }

    fn name(&self) -> String {
        format!("spd{{n={}}}", self.n)
    }

    fn ambient_dim(&self) -> usize {
        self.n * self.n
    }

    fn intrinsic_dim(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn origin(&self) -> Coords {
        mat_to_coords(&DMatrix::identity(self.n, self.n))
    }

    fn check_point(&self, coords: &Coords) -> Result<(), GeometryError> {
        self.check_len(coords)?;
        let m = sym_coords_to_mat(coords, self.n);
        let asym = (&m - m.transpose()).amax();
        if asym.is_nan() || asym > MEMBERSHIP_TOL * (1.0 + m.amax()) {
            return Err(GeometryError::NotOnManifold {
                detail: "matrix is not symmetric".into(),
                defect: asym,
            });
        }
        let min_eig = sym_eigen(&m)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig.is_nan() || min_eig <= 1e-12 {
            return Err(GeometryError::NotOnManifold {
                detail: "matrix is not positive definite".into(),
                defect: 1e-12 - min_eig,
            });
        }
        Ok(())
    }

    fn tangency_defect(&self, _base: &Coords, v: &Coords) -> f64 {
        if v.len() != self.n * self.n || v.iter().any(|c| !c.is_finite()) {
            return f64::INFINITY;
        }
        let m = sym_coords_to_mat(v, self.n);
        (&m - m.transpose()).amax() / (1.0 + m.amax())
    }

    fn project_point(&self, coords: &Coords) -> Coords {
        let m = sym_coords_to_mat(coords, self.n);
        mat_to_coords(&symmetrize(&m))
    }

    fn project_tangent(&self, _base: &Coords, v: &Coords) -> Coords {
        let m = sym_coords_to_mat(v, self.n);
        mat_to_coords(&symmetrize(&m))
    }

    fn inner(&self, base: &Coords, u: &Coords, v: &Coords) -> f64 {
        let x = sym_coords_to_mat(base, self.n);
        let (_, xi) = SpdManifold::sqrt_pair(&x);
        let a = &xi * sym_coords_to_mat(u, self.n) * &xi;
        let b = &xi * sym_coords_to_mat(v, self.n) * &xi;
        (a * b).trace()
    }

    fn exp(&self, base: &Coords, v: &Coords) -> Result<Coords, GeometryError> {
        if v.amax() == 0.0 {
            return Ok(base.clone());
        }
        let x = sym_coords_to_mat(base, self.n);
        let (xs, xi) = SpdManifold::sqrt_pair(&x);
        let w = &xi * sym_coords_to_mat(v, self.n) * &xi;
        let e = sym_map(&w, f64::exp);
        Ok(mat_to_coords(&symmetrize(&(&xs * e * &xs))))
    }

    fn log(&self, x: &Coords, y: &Coords) -> Result<Coords, GeometryError> {
        if x == y {
            return Ok(Coords::zeros(self.n * self.n));
        }
        let xm = sym_coords_to_mat(x, self.n);
        let ym = sym_coords_to_mat(y, self.n);
        let (xs, xi) = SpdManifold::sqrt_pair(&xm);
        let w = &xi * ym * &xi;
        let l = sym_map(&w, |t| t.max(EIG_CLAMP).ln());
        Ok(mat_to_coords(&symmetrize(&(&xs * l * &xs))))
    }

    fn distance(&self, x: &Coords, y: &Coords) -> Result<f64, GeometryError> {
        if x == y {
            return Ok(0.0);
        }
        let (a, b) = canonical_pair(x, y);
        let xm = sym_coords_to_mat(a, self.n);
        let ym = sym_coords_to_mat(b, self.n);
        let (_, xi) = SpdManifold::sqrt_pair(&xm);
        let w = symmetrize(&(&xi * ym * &xi));
        let eig = sym_eigen(&w);
        let mut s = 0.0;
        for l in eig.eigenvalues.iter() {
            let t = l.max(EIG_CLAMP).ln();
            s += t * t;
        }
        Ok(s.sqrt())
    }

    fn transport(&self, x: &Coords, v: &Coords, y: &Coords) -> Result<Coords, GeometryError> {
        if (y - x).amax() < SMALL_NORM {
            return Ok(v.clone());
        }
        // E = (Y X⁻¹)^{1/2} = X^{1/2} (X^{-1/2} Y X^{-1/2})^{1/2} X^{-1/2};
        // transport along the geodesic is U ↦ E U Eᵀ.
        let xm = sym_coords_to_mat(x, self.n);
        let ym = sym_coords_to_mat(y, self.n);
        let (xs, xi) = SpdManifold::sqrt_pair(&xm);
        let w = &xi * ym * &xi;
        let ws = sym_map(&w, |t| t.max(EIG_CLAMP).sqrt());
        let e = &xs * ws * &xi;
        let u = sym_coords_to_mat(v, self.n);
        Ok(mat_to_coords(&symmetrize(&(&e * u * e.transpose()))))
    }

    fn tangent_basis(&self, base: &Coords) -> Vec<Coords> {
        // X^{1/2} S X^{1/2} for a Frobenius-orthonormal symmetric basis S is
        // orthonormal in the affine-invariant metric at X.
        let x = sym_coords_to_mat(base, self.n);
        let (xs, _) = SpdManifold::sqrt_pair(&x);
        let mut out = Vec::with_capacity(self.intrinsic_dim());
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        for i in 0..self.n {
            for j in i..self.n {
                let mut s = DMatrix::zeros(self.n, self.n);
                if i == j {
                    s[(i, i)] = 1.0;
                } else {
                    s[(i, j)] = inv_sqrt2;
                    s[(j, i)] = inv_sqrt2;
                }
                out.push(mat_to_coords(&symmetrize(&(&xs * s * &xs))));
            }
        }
        out
    }
}
