//! Property-based invariants for the geometry kernels and the quasilinearized
//! inner product. Points are generated by exponentiating random tangents at
//! the canonical origin, so every sampled point satisfies membership by
//! construction.

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use hgopt_core::geometry::{Coords, GeodesicSegment, Manifold, ManifoldPoint, TangentVector};
use hgopt_core::manifolds::{EuclideanSpace, HyperbolicSpace, SpdManifold, WarpPhi, WarpedProduct};
use hgopt_core::quasilinear::{quasi_add_check, quasi_inner};

fn h2() -> &'static Arc<dyn Manifold> {
    static M: OnceLock<Arc<dyn Manifold>> = OnceLock::new();
    M.get_or_init(|| Arc::new(HyperbolicSpace::new(2, -1.0).unwrap()))
}

fn spd2() -> &'static Arc<dyn Manifold> {
    static M: OnceLock<Arc<dyn Manifold>> = OnceLock::new();
    M.get_or_init(|| Arc::new(SpdManifold::new(2).unwrap()))
}

fn e3() -> &'static Arc<dyn Manifold> {
    static M: OnceLock<Arc<dyn Manifold>> = OnceLock::new();
    M.get_or_init(|| Arc::new(EuclideanSpace::new(3).unwrap()))
}

fn point_from_tangent(m: &Arc<dyn Manifold>, coeffs: &[f64]) -> ManifoldPoint {
    let origin = ManifoldPoint::new_unchecked(Arc::clone(m), m.origin());
    let basis = m.tangent_basis(origin.coords());
    let mut c = Coords::zeros(m.ambient_dim());
    for (g, b) in coeffs.iter().zip(basis.iter()) {
        c += b * *g;
    }
    TangentVector::new_unchecked(origin, c).exp_map().unwrap()
}

fn tangent_at(x: &ManifoldPoint, coeffs: &[f64]) -> TangentVector {
    let basis = x.manifold().tangent_basis(x.coords());
    let mut c = Coords::zeros(x.manifold().ambient_dim());
    for (g, b) in coeffs.iter().zip(basis.iter()) {
        c += b * *g;
    }
    TangentVector::new_unchecked(x.clone(), c)
}

fn coeff() -> impl Strategy<Value = f64> {
    -1.5..1.5f64
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn h2_roundtrip(px in coeff(), py in coeff(), vx in -5.0..5.0f64, vy in -5.0..5.0f64) {
        let x = point_from_tangent(h2(), &[px, py]);
        let v = tangent_at(&x, &[vx, vy]);
        let y = v.exp_map().unwrap();
        let back = x.log_map(&y).unwrap();
        let err = back.sub(&v).unwrap().norm();
        prop_assert!(err <= 1e-6 * v.norm().max(1.0), "round-trip error {err}");
        // exp is a radial isometry: distance equals the tangent norm.
        prop_assert!((x.distance(&y).unwrap() - v.norm()).abs() <= 1e-8 * v.norm().max(1.0));
    }

    #[test]
    fn h2_transport_isometry(px in coeff(), py in coeff(), qx in coeff(), qy in coeff(),
                             vx in -2.0..2.0f64, vy in -2.0..2.0f64) {
        let x = point_from_tangent(h2(), &[px, py]);
        let y = point_from_tangent(h2(), &[qx, qy]);
        let v = tangent_at(&x, &[vx, vy]);
        let w = v.transport_to(&y).unwrap();
        prop_assert!((w.norm() - v.norm()).abs() <= 1e-8);
    }

    #[test]
    fn h2_triangle_comparison(px in coeff(), py in coeff(),
                              ax in -2.0..2.0f64, ay in -2.0..2.0f64,
                              bx in -2.0..2.0f64, by in -2.0..2.0f64) {
        let x = point_from_tangent(h2(), &[px, py]);
        let v1 = tangent_at(&x, &[ax, ay]);
        let v2 = tangent_at(&x, &[bx, by]);
        let lhs = v1.sub(&v2).unwrap().norm();
        let rhs = v1.exp_map().unwrap().distance(&v2.exp_map().unwrap()).unwrap();
        prop_assert!(lhs <= rhs + 1e-8, "‖v1−v2‖={lhs} > d={rhs}");
    }

    #[test]
    fn spd_roundtrip(a in coeff(), b in coeff(), c in coeff(),
                     va in -1.5..1.5f64, vb in -1.5..1.5f64, vc in -1.5..1.5f64) {
        let x = point_from_tangent(spd2(), &[a, b, c]);
        let v = tangent_at(&x, &[va, vb, vc]);
        let y = v.exp_map().unwrap();
        let back = x.log_map(&y).unwrap();
        let err = back.sub(&v).unwrap().norm();
        prop_assert!(err <= 1e-8 * v.norm().max(1.0), "round-trip error {err}");
    }

    #[test]
    fn spd_triangle_inequality(a in coeff(), b in coeff(), c in coeff(),
                               d in coeff(), e in coeff(), f in coeff(),
                               g in coeff(), h in coeff(), i in coeff()) {
        let x = point_from_tangent(spd2(), &[a, b, c]);
        let y = point_from_tangent(spd2(), &[d, e, f]);
        let z = point_from_tangent(spd2(), &[g, h, i]);
        let dxz = x.distance(&z).unwrap();
        let dxy = x.distance(&y).unwrap();
        let dyz = y.distance(&z).unwrap();
        prop_assert!(dxz <= dxy + dyz + 1e-10);
        prop_assert!((x.distance(&y).unwrap() - y.distance(&x).unwrap()).abs() == 0.0);
    }

    #[test]
    fn quasilinear_axioms_on_h2(coords in prop::collection::vec(coeff(), 10)) {
        let pts: Vec<ManifoldPoint> = coords
            .chunks(2)
            .map(|ch| point_from_tangent(h2(), ch))
            .collect();
        let s1 = GeodesicSegment::new(pts[0].clone(), pts[1].clone()).unwrap();
        let s2 = GeodesicSegment::new(pts[2].clone(), pts[3].clone()).unwrap();

        // Symmetry and sign flip are bitwise.
        let v = quasi_inner(&s1, &s2).unwrap().value;
        prop_assert_eq!(v.to_bits(), quasi_inner(&s2, &s1).unwrap().value.to_bits());
        prop_assert_eq!(
            quasi_inner(&s1.reverse(), &s2).unwrap().value.to_bits(),
            (-v).to_bits()
        );

        // ⟨s,s⟩ = d² and the addition rule, both up to rounding at scale D².
        let d = pts[0].distance(&pts[1]).unwrap();
        prop_assert!((quasi_inner(&s1, &s1).unwrap().value - d * d).abs() <= 1e-10 * d.powi(2).max(1.0));
        let res = quasi_add_check(&pts[0], &pts[1], &pts[2], &pts[3], &pts[4]).unwrap();
        prop_assert!(res <= 1e-9 * 16.0f64.max(1.0), "additivity residual {res}");

        // Cauchy-Schwarz for nondegenerate segments.
        if let Some(cq) = quasi_inner(&s1, &s2).unwrap().cosq {
            if s1.length().unwrap() > 1e-3 && s2.length().unwrap() > 1e-3 {
                prop_assert!(cq.abs() <= 1.0 + 1e-9, "cosq {cq}");
            }
        }
    }

    #[test]
    fn segment_comparison_on_spd(coords in prop::collection::vec(coeff(), 9)) {
        let x = point_from_tangent(spd2(), &coords[0..3]);
        let y = point_from_tangent(spd2(), &coords[3..6]);
        let z = point_from_tangent(spd2(), &coords[6..9]);
        let (quasi, tangent) = hgopt_core::quasilinear::compare_to_tangent(&x, &y, &z).unwrap();
        let dmax = x.distance(&y).unwrap().max(x.distance(&z).unwrap());
        prop_assert!(quasi <= tangent + 1e-8 * dmax.powi(2).max(1.0));
    }

    #[test]
    fn euclidean_quasi_equals_dot(coords in prop::collection::vec(-3.0..3.0f64, 12)) {
        let m = e3();
        let p = |s: &[f64]| ManifoldPoint::new(Arc::clone(m), Coords::from_column_slice(s)).unwrap();
        let (x, y, z, w) = (p(&coords[0..3]), p(&coords[3..6]), p(&coords[6..9]), p(&coords[9..12]));
        let qi = quasi_inner(
            &GeodesicSegment::new(x.clone(), y.clone()).unwrap(),
            &GeodesicSegment::new(z.clone(), w.clone()).unwrap(),
        )
        .unwrap()
        .value;
        let dot: f64 = (0..3)
            .map(|i| (y.coords()[i] - x.coords()[i]) * (w.coords()[i] - z.coords()[i]))
            .sum();
        prop_assert!((qi - dot).abs() <= 1e-10 * dot.abs().max(1.0));
    }
}

#[test]
fn scaled_curvature_hyperbolic_keeps_all_invariants() {
    // Same identities away from curvature −1; the k = sqrt(−c) scaling has to
    // be consistent across exp, log, distance, transport and the comparison.
    let m: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(2, -4.0).unwrap());
    let mut rng = hgopt_core::sampling::stream_rng(31, 0);
    for i in 0..80 {
        let x = hgopt_core::sampling::random_point(&mut rng, &m, 1.5).unwrap();
        let v = hgopt_core::sampling::random_tangent(&mut rng, &x, 3.0);
        let y = v.exp_map().unwrap();
        let back = x.log_map(&y).unwrap();
        let err = back.sub(&v).unwrap().norm();
        assert!(err <= 1e-6 * v.norm().max(1.0), "sample {i}: round-trip {err}");
        assert!((x.distance(&y).unwrap() - v.norm()).abs() <= 1e-8 * v.norm().max(1.0));

        let z = hgopt_core::sampling::random_point(&mut rng, &m, 1.5).unwrap();
        let w = v.transport_to(&z).unwrap();
        assert!((w.norm() - v.norm()).abs() <= 1e-8, "sample {i}: transport");

        let u = hgopt_core::sampling::random_point(&mut rng, &m, 1.5).unwrap();
        let (quasi, tangent) = hgopt_core::quasilinear::compare_to_tangent(&x, &z, &u).unwrap();
        let dmax = x.distance(&z).unwrap().max(x.distance(&u).unwrap());
        assert!(quasi <= tangent + 1e-8 * dmax.powi(2).max(1.0), "sample {i}: comparison");
    }
}

// The warped product is exercised with plain seeded sweeps; its operations are
// three orders of magnitude more expensive than the closed-form manifolds.
#[test]
fn warped_exp_r2_roundtrip_and_triangle() {
    let m: Arc<dyn Manifold> = Arc::new(WarpedProduct::new(WarpPhi::ExpR2).unwrap());
    let mut rng = hgopt_core::sampling::stream_rng(2024, 0);
    for i in 0..24 {
        let x = hgopt_core::sampling::random_point(&mut rng, &m, 1.0).unwrap();
        let v = hgopt_core::sampling::random_tangent(&mut rng, &x, 2.0);
        let y = v.exp_map().unwrap();
        let back = x.log_map(&y).unwrap();
        let err = back.sub(&v).unwrap().norm();
        assert!(
            err <= 1e-4 * v.norm().max(1.0),
            "sample {i}: round-trip {err}"
        );

        let v2 = hgopt_core::sampling::random_tangent(&mut rng, &x, 2.0);
        let lhs = v.sub(&v2).unwrap().norm();
        let rhs = y.distance(&v2.exp_map().unwrap()).unwrap();
        assert!(lhs <= rhs + 1e-6, "sample {i}: triangle {lhs} vs {rhs}");
    }
}

#[test]
fn warped_exp_r2_comparison_stress() {
    // The no-curvature-lower-bound case: the comparison inequality still holds.
    let m: Arc<dyn Manifold> = Arc::new(WarpedProduct::new(WarpPhi::ExpR2).unwrap());
    let slacks = hgopt_core::verify::segment_comparison_slacks(&m, 48, 7, 1e-8).unwrap();
    let worst = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(worst >= 0.0, "worst slack {worst}");
}
