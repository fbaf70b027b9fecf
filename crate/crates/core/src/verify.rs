//! Randomized property suites shared by the CLI `verify` command and the
//! acceptance tests. Each check samples with per-index ChaCha streams, so
//! results are independent of thread scheduling.

use std::sync::Arc;

use rayon::prelude::*;

use crate::geometry::{GeodesicSegment, GeometryError, Manifold, ManifoldPoint};
use crate::manifolds::{EuclideanSpace, HyperbolicSpace, SpdManifold, WarpPhi, WarpedProduct};
use crate::objectives::{
    estimate_local_smoothness, EuclideanQuadratic, FrechetMean, Objective, SquaredDistance,
    StochasticFrechet,
};
use crate::oracles::{
    appendix_inequality_check, finite_diff_gradient, finite_diff_gradient_richardson,
    reference_minimize, ReferenceSolution,
};
use crate::quasilinear::{compare_to_tangent, quasi_add_check, quasi_inner, quasi_inner_value};
use crate::sampling::{random_point, random_tangent, stream_rng};
use crate::solvers::{
    inner_gd, proximal_gradient, stochastic_proximal_gradient, Baseline, InnerConfig,
    ProxSubproblem, SolverConfig, StepRule, StepSchedule,
};

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Worst signed slack observed (negative means violated).
    pub worst_slack: f64,
    pub passed: bool,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} {:<58} samples={:<7} violations={:<3} worst_slack={:+.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.violations,
            self.worst_slack
        )
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Aggregate per-sample slacks into a check outcome. A sample passes when its
/// slack is >= 0 (slacks are defined as tolerance − defect or inequality
/// margin + tolerance, so zero is the boundary).
fn outcome_from_slacks(name: &str, slacks: Vec<f64>) -> CheckOutcome {
    let violations = slacks.iter().filter(|s| **s < 0.0).count();
    let worst = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
    CheckOutcome {
        name: name.into(),
        samples: slacks.len(),
        violations,
        worst_slack: if worst.is_finite() { worst } else { 0.0 },
        passed: violations == 0,
    }
}

fn par_slacks(
    samples: usize,
    f: impl Fn(u64) -> Result<Vec<f64>, GeometryError> + Sync,
) -> Result<Vec<f64>, GeometryError> {
    let chunks: Result<Vec<Vec<f64>>, GeometryError> =
        (0..samples as u64).into_par_iter().map(&f).collect();
    Ok(chunks?.into_iter().flatten().collect())
}

/// Sampling radius per manifold. The warped exp(r²) product uses a smaller
/// ball: its curvature already reaches −6 at r = 1 and the shooting solver
/// stays well-conditioned.
pub fn sample_radius(m: &Arc<dyn Manifold>) -> f64 {
    if m.name().starts_with("warped") {
        1.0
    } else {
        1.5
    }
}

// ---------------------------------------------------------------------------
// Quasilinearization axioms (criterion 1)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AxiomsReport {
    pub symmetry_exact: bool,
    pub sign_flip_exact: bool,
    /// max |⟨s,s⟩ − d²| / max(1, D²)
    pub worst_self_product: f64,
    /// max additivity residual / max(1, D²)
    pub worst_additivity: f64,
    /// max |cosq| − 1 over nondegenerate pairs
    pub worst_cauchy_schwarz: f64,
    pub samples: usize,
}

/// Inner-product axioms (self-product, symmetry, sign flip, additivity)
/// plus Cauchy–Schwarz on `samples` random 5-point tuples.
pub fn quasilinear_axioms(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
) -> Result<AxiomsReport, GeometryError> {
    let radius = sample_radius(m);
    #[derive(Default, Clone, Copy)]
    struct Acc {
        sym_ok: bool,
        flip_ok: bool,
        self_prod: f64,
        add: f64,
        cs: f64,
    }

    // All points live in a ball of radius `radius` around the origin, so 2r
    // bounds the diameter; residuals sit many orders below tol either way.
    let scale = (2.0 * radius).powi(2).max(1.0);
    let rows: Result<Vec<Acc>, GeometryError> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let pts: Vec<ManifoldPoint> = (0..5)
                .map(|_| random_point(&mut rng, m, radius))
                .collect::<Result<_, _>>()?;
            let (x, y, z, u, w) = (&pts[0], &pts[1], &pts[2], &pts[3], &pts[4]);

            let s1 = GeodesicSegment::new(x.clone(), y.clone())?;
            let s2 = GeodesicSegment::new(z.clone(), w.clone())?;
            let a = quasi_inner(&s1, &s2)?;
            let b = quasi_inner_value(&s2, &s1)?;
            let c = quasi_inner_value(&s1.reverse(), &s2)?;

            let d = x.distance(y)?;
            let self_prod = (quasi_inner_value(&s1, &s1)? - d * d).abs() / scale;
            let add = quasi_add_check(x, y, z, u, w)? / scale;
            let cs = match a.cosq {
                Some(cq) => cq.abs() - 1.0,
                None => -1.0,
            };

            Ok(Acc {
                sym_ok: a.value.to_bits() == b.to_bits(),
                flip_ok: c.to_bits() == (-a.value).to_bits(),
                self_prod,
                add,
                cs,
            })
        })
        .collect();
    let rows = rows?;

    Ok(AxiomsReport {
        symmetry_exact: rows.iter().all(|r| r.sym_ok),
        sign_flip_exact: rows.iter().all(|r| r.flip_ok),
        worst_self_product: rows.iter().map(|r| r.self_prod).fold(0.0, f64::max),
        worst_additivity: rows.iter().map(|r| r.add).fold(0.0, f64::max),
        worst_cauchy_schwarz: rows.iter().map(|r| r.cs).fold(f64::NEG_INFINITY, f64::max),
        samples,
    })
}

// ---------------------------------------------------------------------------
// Comparison inequalities (criteria 2 and 3)
// ---------------------------------------------------------------------------

/// Slacks of quasi ≤ tangent + tol·max(1,D²) on random triples.
pub fn segment_comparison_slacks(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let radius = sample_radius(m);
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, m, radius)?;
        let y = random_point(&mut rng, m, radius)?;
        let z = random_point(&mut rng, m, radius)?;
        let (quasi, tangent) = compare_to_tangent(&x, &y, &z)?;
        let dmax = x.distance(&y)?.max(x.distance(&z)?).max(y.distance(&z)?);
        let scale = dmax.powi(2).max(1.0);
        Ok(vec![tangent + tol * scale - quasi])
    })
}

/// Slacks of the tangent-space triangle comparison
/// ‖v₁ − v₂‖ ≤ d(Exp(v₁), Exp(v₂)) + tol on random tangent pairs.
pub fn triangle_comparison_slacks(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let radius = sample_radius(m);
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, m, radius)?;
        let v1 = random_tangent(&mut rng, &x, radius);
        let v2 = random_tangent(&mut rng, &x, radius);
        let lhs = v1.sub(&v2)?.norm();
        let rhs = v1.exp_map()?.distance(&v2.exp_map()?)?;
        Ok(vec![rhs + tol - lhs])
    })
}

// ---------------------------------------------------------------------------
// Geometry round trips
// ---------------------------------------------------------------------------

/// Relative round-trip error slacks: tol − ‖log(x, exp(v)) − v‖/max(1,‖v‖).
pub fn roundtrip_slacks(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
    tol: f64,
    max_norm: f64,
) -> Result<Vec<f64>, GeometryError> {
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, m, sample_radius(m))?;
        let v = random_tangent(&mut rng, &x, max_norm);
        let y = v.exp_map()?;
        let back = x.log_map(&y)?;
        let err = back.sub(&v)?.norm() / v.norm().max(1.0);
        Ok(vec![tol - err])
    })
}

/// Transport isometry slacks: tol − |‖Γv‖ − ‖v‖| (plus inner-product
/// preservation between two co-transported vectors).
pub fn transport_isometry_slacks(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let radius = sample_radius(m);
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, m, radius)?;
        let y = random_point(&mut rng, m, radius)?;
        let u = random_tangent(&mut rng, &x, 2.0);
        let v = random_tangent(&mut rng, &x, 2.0);
        let tu = u.transport_to(&y)?;
        let tv = v.transport_to(&y)?;
        let norm_err = (tu.norm() - u.norm()).abs();
        let inner_err = (tu.inner(&tv)? - u.inner(&v)?).abs();
        Ok(vec![tol - norm_err, tol - inner_err])
    })
}

/// Triangle inequality and distance/log-norm consistency slacks.
pub fn distance_consistency_slacks(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let radius = sample_radius(m);
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, m, radius)?;
        let y = random_point(&mut rng, m, radius)?;
        let z = random_point(&mut rng, m, radius)?;
        let dxy = x.distance(&y)?;
        let dyz = y.distance(&z)?;
        let dxz = x.distance(&z)?;
        let tri = dxy + dyz + tol - dxz;
        let lognorm = (x.log_map(&y)?.norm() - dxy).abs();
        let sym = (y.distance(&x)? - dxy).abs();
        Ok(vec![tri, tol - lognorm, -sym])
    })
}

/// Geodesic interpolation slack: tol − |d(x, γ(t)) − t·d(x,y)|.
pub fn geodesic_point_slacks(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    use rand::Rng;
    let radius = sample_radius(m);
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, m, radius)?;
        let y = random_point(&mut rng, m, radius)?;
        let t: f64 = rng.gen_range(0.0..=1.0);
        let p = crate::geometry::geodesic_point(&x, &y, t)?;
        let err = (x.distance(&p)? - t * x.distance(&y)?).abs();
        Ok(vec![tol - err])
    })
}

pub fn geometry_suite(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
) -> Result<SuiteReport, GeometryError> {
    let warped = m.name().starts_with("warped");
    let (rt_tol, iso_tol, tri_tol, geo_tol) = if warped {
        (1e-4, 1e-6, 1e-6, 1e-6)
    } else {
        (1e-6, 1e-8, 1e-8, 1e-8)
    };
    let name = m.name();
    let mut checks = Vec::new();
    checks.push(outcome_from_slacks(
        &format!("round-trip log(exp(v)) = v [{name}]"),
        roundtrip_slacks(m, samples, seed, rt_tol, if warped { 2.0 } else { 5.0 })?,
    ));
    checks.push(outcome_from_slacks(
        &format!("transport isometry [{name}]"),
        transport_isometry_slacks(m, samples, seed.wrapping_add(1), iso_tol)?,
    ));
    checks.push(outcome_from_slacks(
        &format!("triangle comparison [{name}]"),
        triangle_comparison_slacks(m, samples, seed.wrapping_add(2), tri_tol)?,
    ));
    checks.push(outcome_from_slacks(
        &format!("distance consistency [{name}]"),
        distance_consistency_slacks(m, samples, seed.wrapping_add(3), tri_tol)?,
    ));
    checks.push(outcome_from_slacks(
        &format!("geodesic interpolation [{name}]"),
        geodesic_point_slacks(m, samples, seed.wrapping_add(4), geo_tol)?,
    ));
    Ok(SuiteReport {
        suite: format!("geometry[{name}]"),
        checks,
    })
}

pub fn quasilinear_suite(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
) -> Result<SuiteReport, GeometryError> {
    let name = m.name();
    let ax = quasilinear_axioms(m, samples, seed)?;
    let mut checks = vec![
        CheckOutcome {
            name: format!("symmetry exact [{name}]"),
            samples,
            violations: usize::from(!ax.symmetry_exact),
            worst_slack: 0.0,
            passed: ax.symmetry_exact,
        },
        CheckOutcome {
            name: format!("sign flip exact [{name}]"),
            samples,
            violations: usize::from(!ax.sign_flip_exact),
            worst_slack: 0.0,
            passed: ax.sign_flip_exact,
        },
        CheckOutcome {
            name: format!("self product = d² (scaled 1e-10) [{name}]"),
            samples,
            violations: usize::from(ax.worst_self_product > 1e-10),
            worst_slack: 1e-10 - ax.worst_self_product,
            passed: ax.worst_self_product <= 1e-10,
        },
        CheckOutcome {
            name: format!("additivity (scaled 1e-9) [{name}]"),
            samples,
            violations: usize::from(ax.worst_additivity > 1e-9),
            worst_slack: 1e-9 - ax.worst_additivity,
            passed: ax.worst_additivity <= 1e-9,
        },
        CheckOutcome {
            name: format!("cauchy-schwarz |cosq| <= 1+1e-9 [{name}]"),
            samples,
            violations: usize::from(ax.worst_cauchy_schwarz > 1e-9),
            worst_slack: 1e-9 - ax.worst_cauchy_schwarz,
            passed: ax.worst_cauchy_schwarz <= 1e-9,
        },
    ];
    checks.push(outcome_from_slacks(
        &format!("segment comparison quasi <= tangent (scaled 1e-8) [{name}]"),
        segment_comparison_slacks(m, samples, seed.wrapping_add(10), 1e-8)?,
    ));
    Ok(SuiteReport {
        suite: format!("quasilinear[{name}]"),
        checks,
    })
}

// ---------------------------------------------------------------------------
// Convexity checks (criterion 10 plus the convexity-definition invariants)
// ---------------------------------------------------------------------------

/// Relative gradient/finite-difference agreement slacks for one objective.
/// Uses Richardson extrapolation on the warped product, where exp itself
/// carries integration error.
pub fn gradient_fd_slacks(
    f: &dyn Objective,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let m = f.manifold().clone();
    let warped = m.name().starts_with("warped");
    let radius = sample_radius(&m);
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, &m, radius)?;
        let value = |p: &ManifoldPoint| f.value(p);
        let fd = if warped {
            finite_diff_gradient_richardson(&value, &x, 1e-4)?
        } else {
            finite_diff_gradient(&value, &x, 1e-5)?
        };
        let an = f.gradient(&x)?;
        let rel = fd.sub(&an)?.norm() / an.norm().max(1e-6);
        Ok(vec![tol - rel])
    })
}

/// Strong g-convexity inequality slacks with the declared μ, scaled by max(1,D²).
pub fn g_convexity_slacks(
    f: &dyn Objective,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let m = f.manifold().clone();
    let radius = sample_radius(&m);
    let mu = f.mu();
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, &m, radius)?;
        let y = random_point(&mut rng, &m, radius)?;
        let d = x.distance(&y)?;
        let lin = f.gradient(&y)?.inner(&y.log_map(&x)?)?;
        let slack = f.value(&x)? - f.value(&y)? - lin - 0.5 * mu * d * d;
        Ok(vec![slack + tol * d.powi(2).max(1.0)])
    })
}

/// g-implies-q slacks: q_convexity_gap ≥ −tol·max(1,D²).
pub fn q_convexity_slacks(
    f: &dyn Objective,
    mu: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let m = f.manifold().clone();
    let radius = sample_radius(&m);
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, &m, radius)?;
        let y = random_point(&mut rng, &m, radius)?;
        let gap = crate::quasilinear::q_convexity_gap(f, &x, &y, mu)?;
        let d = x.distance(&y)?;
        Ok(vec![gap + tol * d.powi(2).max(1.0)])
    })
}

/// The standard objective set for one manifold: squared distance to a random
/// anchor and a 4-anchor Fréchet mean (plus an anisotropic quadratic on flat
/// space).
pub fn standard_objectives(
    m: &Arc<dyn Manifold>,
    seed: u64,
) -> Result<Vec<Box<dyn Objective>>, GeometryError> {
    let radius = sample_radius(m);
    let mut rng = stream_rng(seed, 0xF0);
    let mut out: Vec<Box<dyn Objective>> = Vec::new();
    out.push(Box::new(SquaredDistance::new(random_point(
        &mut rng, m, radius,
    )?)));
    let anchors: Vec<ManifoldPoint> = (0..4)
        .map(|_| random_point(&mut rng, m, radius))
        .collect::<Result<_, _>>()?;
    out.push(Box::new(FrechetMean::new(anchors, None)?));
    if m.name().starts_with("euclidean") {
        let dim = m.ambient_dim();
        let diag: Vec<f64> = (0..dim).map(|i| 1.0 + i as f64 * 0.5).collect();
        out.push(Box::new(EuclideanQuadratic::new(
            crate::sampling::base_point(m),
            diag,
        )?));
    }
    Ok(out)
}

pub fn convexity_suite(
    m: &Arc<dyn Manifold>,
    samples: usize,
    seed: u64,
) -> Result<SuiteReport, GeometryError> {
    let name = m.name();
    let warped = name.starts_with("warped");
    let fd_tol = if warped { 1e-3 } else { 1e-4 };
    let mut checks = Vec::new();
    for f in standard_objectives(m, seed)? {
        checks.push(outcome_from_slacks(
            &format!("gradient vs finite differences [{} on {name}]", f.name()),
            gradient_fd_slacks(f.as_ref(), samples.min(100), seed, fd_tol)?,
        ));
        checks.push(outcome_from_slacks(
            &format!("strong g-convexity inequality [{} on {name}]", f.name()),
            g_convexity_slacks(f.as_ref(), samples, seed.wrapping_add(1), 1e-8)?,
        ));
        checks.push(outcome_from_slacks(
            &format!("g implies q convexity [{} on {name}]", f.name()),
            q_convexity_slacks(
                f.as_ref(),
                f.mu(),
                samples.min(500),
                seed.wrapping_add(2),
                1e-8,
            )?,
        ));
    }

    // Stochastic finite-sum invariants.
    let mut rng = stream_rng(seed, 0xFA);
    let radius = sample_radius(m);
    let anchors: Vec<ManifoldPoint> = (0..4)
        .map(|_| random_point(&mut rng, m, radius))
        .collect::<Result<_, _>>()?;
    let sf = StochasticFrechet::new(anchors, seed)?;
    let mut avg_slacks = Vec::new();
    let mut var_slacks = Vec::new();
    for i in 0..samples.min(200) as u64 {
        let mut rng = stream_rng(seed.wrapping_add(3), i);
        let x = random_point(&mut rng, m, radius)?;
        let mut avg = crate::geometry::Coords::zeros(m.ambient_dim());
        for xi in 0..sf.num_components() {
            avg += sf.component(xi).gradient(&x)?.coords();
        }
        avg /= sf.num_components() as f64;
        let err = (&avg - sf.mean_objective().gradient(&x)?.coords()).amax();
        avg_slacks.push(1e-8 - err);
        let excess = sf.grad_second_moment_excess(&x)?;
        var_slacks.push(sf.variance_bound() + 1e-9 - excess);
    }
    checks.push(outcome_from_slacks(
        &format!("component average equals mean gradient [{name}]"),
        avg_slacks,
    ));
    checks.push(outcome_from_slacks(
        &format!("bounded variance on validation grid [{name}]"),
        var_slacks,
    ));

    Ok(SuiteReport {
        suite: format!("convexity[{name}]"),
        checks,
    })
}

// ---------------------------------------------------------------------------
// Rate certificates (criteria 4-9, 12)
// ---------------------------------------------------------------------------

/// Shared construction of a Fréchet experiment: anchors within `radius` of
/// the origin, a starting point, and a certified reference solution.
pub struct FrechetInstance {
    pub label: String,
    pub objective: FrechetMean,
    pub x0: ManifoldPoint,
    pub reference: ReferenceSolution,
}

pub fn frechet_instance(
    m: &Arc<dyn Manifold>,
    n_anchors: usize,
    radius: f64,
    seed: u64,
    label: &str,
) -> Result<FrechetInstance, GeometryError> {
    let mut rng = stream_rng(seed, 0x1);
    let anchors: Vec<ManifoldPoint> = (0..n_anchors)
        .map(|_| random_point(&mut rng, m, radius))
        .collect::<Result<_, _>>()?;
    let objective = FrechetMean::new(anchors, None)?;
    let x0 = random_point(&mut rng, m, radius)?;
    let reference = reference_minimize(&objective, &x0)?;
    Ok(FrechetInstance {
        label: label.to_string(),
        objective,
        x0,
        reference,
    })
}

/// Outcome of one deterministic proximal-gradient certificate run.
#[derive(Debug, Clone)]
pub struct RateCertificate {
    pub label: String,
    pub d0_sq: f64,
    /// max over t of η·t·(f(x_t) − f*).
    pub max_eta_t_gap: f64,
    pub monotone_max_increase: f64,
    /// max over accepted steps of prox_residual / (10·inner_tol).
    pub worst_residual_ratio: f64,
    /// min over steps of tele slack / max(1, d0²); ≥ −1e-7 required.
    pub worst_tele_slack: f64,
    pub inner_flagged: usize,
}

impl RateCertificate {
    pub fn passed(&self) -> bool {
        self.max_eta_t_gap <= self.d0_sq * (1.0 + 1e-3)
            && self.monotone_max_increase <= 1e-9
            && self.worst_residual_ratio <= 1.0
            && self.worst_tele_slack >= -1e-7
            && self.inner_flagged == 0
    }

    pub fn line(&self) -> String {
        format!(
            "{} prox-rate[{}] max_eta_t_gap={:.6e} d0^2={:.6e} max_incr={:+.2e} res_ratio={:.3e} tele={:+.2e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.label,
            self.max_eta_t_gap,
            self.d0_sq,
            self.monotone_max_increase,
            self.worst_residual_ratio,
            self.worst_tele_slack
        )
    }
}

/// Run the deterministic proximal gradient on an instance and evaluate the
/// O(1/t) certificate, monotone descent, the prox fixed-point residual and
/// the per-step telescoping inequality.
pub fn prox_rate_certificate(
    inst: &FrechetInstance,
    eta: f64,
    t_max: usize,
) -> Result<RateCertificate, GeometryError> {
    let mut cfg = SolverConfig::new(StepSchedule::Constant(eta), t_max)?;
    cfg.record_trace = true;
    let baseline = Baseline {
        f_star: Some(inst.reference.value),
        x_star: Some(inst.reference.point.clone()),
    };
    let trace = proximal_gradient(&inst.objective, &inst.x0, &cfg, &baseline)?;
    let d0 = inst.x0.distance(&inst.reference.point)?;
    let d0_sq = d0 * d0;

    let mut max_cert: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_tele = f64::INFINITY;
    for r in &trace.records {
        let gap = r.gap.expect("baseline has f_star");
        max_cert = max_cert.max(eta * r.iter as f64 * gap);
        if let (Some(res), Some(tol)) = (r.prox_residual, r.inner_tol) {
            worst_ratio = worst_ratio.max(res / (10.0 * tol));
        }
        if let Some(ts) = r.tele_slack {
            worst_tele = worst_tele.min(ts / d0_sq.max(1.0));
        }
    }
    Ok(RateCertificate {
        label: inst.label.clone(),
        d0_sq,
        max_eta_t_gap: max_cert,
        monotone_max_increase: trace.max_increase(),
        worst_residual_ratio: worst_ratio,
        worst_tele_slack: if worst_tele.is_finite() {
            worst_tele
        } else {
            0.0
        },
        inner_flagged: trace.warnings.len(),
    })
}

/// The deterministic rate-certificate instances of the acceptance gate.
pub fn prox_rate_instances() -> Result<Vec<(FrechetInstance, f64)>, GeometryError> {
    let h2: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(2, -1.0)?);
    let spd3: Arc<dyn Manifold> = Arc::new(SpdManifold::new(3)?);
    let warped: Arc<dyn Manifold> = Arc::new(WarpedProduct::new(WarpPhi::ExpR2)?);
    Ok(vec![
        (
            frechet_instance(&h2, 8, 2.0, 11, "h2 8 anchors eta=0.1")?,
            0.1,
        ),
        (
            frechet_instance(&h2, 4, 2.0, 12, "h2 4 anchors eta=0.5")?,
            0.5,
        ),
        (
            frechet_instance(&h2, 16, 2.0, 13, "h2 16 anchors eta=2.0")?,
            2.0,
        ),
        (
            frechet_instance(&spd3, 6, 1.5, 14, "spd3 6 anchors eta=0.5")?,
            0.5,
        ),
        (
            frechet_instance(&spd3, 8, 1.5, 15, "spd3 8 anchors eta=2.0")?,
            2.0,
        ),
        (
            frechet_instance(&warped, 4, 1.0, 16, "warped 4 anchors eta=0.1")?,
            0.1,
        ),
        (
            frechet_instance(&warped, 6, 1.0, 17, "warped 6 anchors eta=0.5")?,
            0.5,
        ),
    ])
}

/// Outcome of one strongly convex inner-GD contraction run.
#[derive(Debug, Clone)]
pub struct ContractionOutcome {
    pub label: String,
    pub mu: f64,
    pub l0: f64,
    /// 1 − μ/(4L₀).
    pub bound: f64,
    pub worst_ratio: f64,
    pub steps_checked: usize,
}

impl ContractionOutcome {
    pub fn passed(&self) -> bool {
        self.steps_checked > 0 && self.worst_ratio <= self.bound + 1e-6
    }
}

/// Fixed-step (1/L₀) gradient descent on the prox subproblem
/// h = f + d(x,·)²/(2η), with μ declared and L₀ from the sampled Lipschitz
/// estimator; checks every per-step gap ratio against 1 − μ/(4L₀).
pub fn prox_contraction_check(
    f: &dyn Objective,
    x: &ManifoldPoint,
    eta: f64,
    seed: u64,
    label: &str,
) -> Result<ContractionOutcome, GeometryError> {
    let h = ProxSubproblem::new(f, x.clone(), eta);
    let mu = h.mu();
    let g0 = h.gradient(x)?.norm();
    let radius = (2.0 * g0 / mu + 0.5).min(6.0);
    let l0 = estimate_local_smoothness(&h, x, radius, 48, seed)?;
    let h_star = reference_minimize(&h, x)?;

    let cfg = InnerConfig {
        grad_tol: 1e-11,
        max_inner_iters: 2_000,
        step_rule: StepRule::Fixed { l0 },
    };
    let res = inner_gd(&h, x, &cfg, true)?;
    let values = res.values.expect("value recording on");
    let noise_floor = if f.manifold().name().starts_with("warped") {
        1e-7
    } else {
        1e-12
    } * h_star.value.abs().max(1.0);

    let mut worst: f64 = 0.0;
    let mut steps = 0;
    for w in values.windows(2) {
        let prev = w[0] - h_star.value;
        let next = w[1] - h_star.value;
        if prev > noise_floor {
            worst = worst.max(next / prev);
            steps += 1;
        }
    }
    Ok(ContractionOutcome {
        label: label.to_string(),
        mu,
        l0,
        bound: 1.0 - mu / (4.0 * l0),
        worst_ratio: worst,
        steps_checked: steps,
    })
}

/// The twenty acceptance subproblems spread over four manifolds.
pub fn contraction_acceptance_checks() -> Result<Vec<ContractionOutcome>, GeometryError> {
    let e5: Arc<dyn Manifold> = Arc::new(EuclideanSpace::new(5)?);
    let h2: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(2, -1.0)?);
    let h3: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(3, -1.0)?);
    let spd3: Arc<dyn Manifold> = Arc::new(SpdManifold::new(3)?);
    let warped: Arc<dyn Manifold> = Arc::new(WarpedProduct::new(WarpPhi::ExpR2)?);

    let mut plan: Vec<(Arc<dyn Manifold>, f64)> = Vec::new();
    for eta in [0.25, 0.5, 1.0, 2.0] {
        plan.push((Arc::clone(&e5), eta));
    }
    for eta in [0.2, 0.5, 1.0, 2.0, 4.0, 0.75] {
        plan.push((Arc::clone(&h2), eta));
    }
    for eta in [0.5, 1.0, 2.0] {
        plan.push((Arc::clone(&h3), eta));
    }
    for eta in [0.5, 1.0, 2.0, 4.0] {
        plan.push((Arc::clone(&spd3), eta));
    }
    for eta in [0.5, 1.0, 2.0] {
        plan.push((Arc::clone(&warped), eta));
    }

    plan.into_par_iter()
        .enumerate()
        .map(|(i, (m, eta))| {
            let seed = 800 + i as u64;
            let mut rng = stream_rng(seed, 0);
            let radius = sample_radius(&m);
            let anchors: Vec<ManifoldPoint> = (0..3)
                .map(|_| random_point(&mut rng, &m, radius))
                .collect::<Result<_, _>>()?;
            let f = FrechetMean::new(anchors, None)?;
            let x = random_point(&mut rng, &m, radius)?;
            prox_contraction_check(&f, &x, eta, seed, &format!("{} eta={eta}", m.name()))
        })
        .collect()
}

/// Per-seed outcome of the stochastic weighted-gap certificate.
#[derive(Debug, Clone)]
pub struct StochasticRateOutcome {
    pub seed: u64,
    /// Σ α_t (F(x_t) − F*).
    pub weighted_gap_sum: f64,
    /// d₀²/2 + σ²·ln(T+1).
    pub rhs: f64,
}

impl StochasticRateOutcome {
    pub fn passed(&self) -> bool {
        self.weighted_gap_sum <= self.rhs
    }
}

pub struct StochasticInstance {
    pub objective: StochasticFrechet,
    pub x0: ManifoldPoint,
    pub reference: ReferenceSolution,
    /// Sampled smoothness estimate of the mean objective around x*.
    pub smoothness: f64,
    /// Excess second moment measured at x*.
    pub sigma_sq_at_opt: f64,
}

/// The rate-certificate instance: stochastic Fréchet on H² with `n_anchors`
/// anchors, L from the sampled estimator, σ² measured at x*.
pub fn stochastic_instance(
    n_anchors: usize,
    seed: u64,
) -> Result<StochasticInstance, GeometryError> {
    let h2: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(2, -1.0)?);
    let mut rng = stream_rng(seed, 0x2);
    let anchors: Vec<ManifoldPoint> = (0..n_anchors)
        .map(|_| random_point(&mut rng, &h2, 2.0))
        .collect::<Result<_, _>>()?;
    let objective = StochasticFrechet::new(anchors, seed)?;
    let x0 = random_point(&mut rng, &h2, 2.0)?;
    let reference = reference_minimize(objective.mean_objective(), &x0)?;
    let smoothness =
        estimate_local_smoothness(objective.mean_objective(), &reference.point, 2.5, 64, seed)?;
    let sigma_sq_at_opt = objective.measure_sigma_sq(std::slice::from_ref(&reference.point))?;
    Ok(StochasticInstance {
        objective,
        x0,
        reference,
        smoothness,
        sigma_sq_at_opt,
    })
}

/// One seeded stochastic run checked against the α-weighted rate bound.
pub fn stochastic_rate_certificate(
    inst: &StochasticInstance,
    seed: u64,
    t_max: usize,
) -> Result<StochasticRateOutcome, GeometryError> {
    let l = inst.smoothness;
    let mut cfg = SolverConfig::new(StepSchedule::InvSqrt { l, c: 1.0 }, t_max)?;
    cfg.seed = seed;
    cfg.record_trace = false;
    let baseline = Baseline {
        f_star: Some(inst.reference.value),
        x_star: Some(inst.reference.point.clone()),
    };
    let trace = stochastic_proximal_gradient(&inst.objective, &inst.x0, &cfg, &baseline)?;
    let mut weighted = 0.0;
    for r in &trace.records {
        let alpha = 1.0 / (4.0 * l * (r.iter as f64).sqrt());
        weighted += alpha * r.gap.expect("baseline has f_star");
    }
    let d0 = inst.x0.distance(&inst.reference.point)?;
    let rhs = 0.5 * d0 * d0 + inst.sigma_sq_at_opt * ((t_max as f64) + 1.0).ln();
    Ok(StochasticRateOutcome {
        seed,
        weighted_gap_sum: weighted,
        rhs,
    })
}

/// Per-seed outcome of the summability reflection of the almost-sure rate.
///
/// The coefficient η_s − Lη_s² is negative for the first few steps (η_s > 1/L
/// there), so the partial sums usually start negative; convergence shows up
/// as a bounded, eventually monotone sequence with a plateauing tail.
#[derive(Debug, Clone)]
pub struct SummabilityOutcome {
    pub seed: u64,
    pub final_sum: f64,
    pub final_increment: f64,
    /// Increments are nonnegative from the first index with η_s ≤ 1/L.
    pub tail_monotone: bool,
}

impl SummabilityOutcome {
    pub fn passed(&self) -> bool {
        self.final_sum.is_finite()
            && self.tail_monotone
            && self.final_increment < 0.01 * self.final_sum.abs().max(0.01)
    }
}

/// Partial sums Σ (η_s − Lη_s²)(F(x_s) − F*) under η_t = 1/(√t·ln t); the
/// empirical check is boundedness with a plateauing tail, not a proof.
pub fn summability_check(
    inst: &StochasticInstance,
    seed: u64,
    t_max: usize,
) -> Result<SummabilityOutcome, GeometryError> {
    let l = inst.smoothness;
    let mut cfg = SolverConfig::new(StepSchedule::InvSqrtLog, t_max)?;
    cfg.seed = seed;
    cfg.record_trace = false;
    let baseline = Baseline {
        f_star: Some(inst.reference.value),
        x_star: None,
    };
    let trace = stochastic_proximal_gradient(&inst.objective, &inst.x0, &cfg, &baseline)?;
    let mut sum = 0.0;
    let mut last_increment = 0.0;
    let mut tail_monotone = true;
    for r in &trace.records {
        let eta = r.eta.expect("stochastic records carry eta");
        last_increment = (eta - l * eta * eta) * r.gap.expect("baseline has f_star");
        sum += last_increment;
        // Reference values are accurate to ~1e-12, so gaps can dip that far
        // below zero near the optimum.
        if eta <= 1.0 / l && last_increment < -1e-12 {
            tail_monotone = false;
        }
    }
    Ok(SummabilityOutcome {
        seed,
        final_sum: sum,
        final_increment: last_increment.abs(),
        tail_monotone,
    })
}

// ---------------------------------------------------------------------------
// Appendix inequality suite (criterion 11)
// ---------------------------------------------------------------------------

pub fn appendix_suite(
    m: &Arc<dyn Manifold>,
    points_per_objective: usize,
    seed: u64,
) -> Result<SuiteReport, GeometryError> {
    let name = m.name();
    let radius = sample_radius(m);
    let mut checks = Vec::new();
    for f in standard_objectives(m, seed)? {
        let mut rng = stream_rng(seed, 0xAB);
        let points: Vec<ManifoldPoint> = (0..points_per_objective)
            .map(|_| random_point(&mut rng, m, radius))
            .collect::<Result<_, _>>()?;
        let f_star = match f.minimizer() {
            Some(xs) => f.value(&xs)?,
            None => reference_minimize(f.as_ref(), &points[0])?.value,
        };
        let origin = crate::sampling::base_point(m);
        let l = match f.global_smoothness() {
            Some(l) => l,
            // Descent from a radius-R point stays in the ball of radius ~2R.
            None => estimate_local_smoothness(f.as_ref(), &origin, 2.0 * radius, 64, seed)?,
        };
        let rep = appendix_inequality_check(f.as_ref(), f_star, Some(l), f.mu(), &points)?;
        checks.push(outcome_from_slacks(
            &format!("A1 smooth bound [{} on {name}]", f.name()),
            rep.a1_slack.iter().map(|s| s + 1e-8).collect(),
        ));
        checks.push(outcome_from_slacks(
            &format!("A2 strong-convexity bound [{} on {name}]", f.name()),
            rep.a2_slack.iter().map(|s| s + 1e-8).collect(),
        ));
    }
    Ok(SuiteReport {
        suite: format!("appendix[{name}]"),
        checks,
    })
}

// ---------------------------------------------------------------------------
// Cross-manifold oracle (criterion 12)
// ---------------------------------------------------------------------------

/// Isometry (r, θ) ↦ (cosh r·cosh θ, cosh r·sinh θ, sinh r) identifying the
/// φ = cosh warped product with the Lorentz hyperboloid H².
fn cosh_chart(r: f64, th: f64) -> [f64; 3] {
    [r.cosh() * th.cosh(), r.cosh() * th.sinh(), r.sinh()]
}

/// Pushforward of a warped tangent (a∂r + b∂θ) at (r, θ).
fn cosh_chart_tangent(r: f64, th: f64, a: f64, b: f64) -> [f64; 3] {
    [
        a * r.sinh() * th.cosh() + b * r.cosh() * th.sinh(),
        a * r.sinh() * th.sinh() + b * r.cosh() * th.cosh(),
        a * r.cosh(),
    ]
}

/// Distance and log agreement between the φ = cosh warped product and H²
/// under the isometric chart, on random pairs of distance ≤ 3.
pub fn cross_manifold_cosh_check(
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<f64>, GeometryError> {
    let warped: Arc<dyn Manifold> = Arc::new(WarpedProduct::new(WarpPhi::Cosh)?);
    let h2: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(2, -1.0)?);
    par_slacks(samples, |i| {
        let mut rng = stream_rng(seed, i);
        let x = random_point(&mut rng, &warped, 1.5)?;
        let y = random_point(&mut rng, &warped, 1.5)?;
        let dw = x.distance(&y)?;

        let xe = ManifoldPoint::new(
            Arc::clone(&h2),
            crate::geometry::Coords::from_column_slice(&cosh_chart(x.coords()[0], x.coords()[1])),
        )?;
        let ye = ManifoldPoint::new(
            Arc::clone(&h2),
            crate::geometry::Coords::from_column_slice(&cosh_chart(y.coords()[0], y.coords()[1])),
        )?;
        let dh = xe.distance(&ye)?;

        let vw = x.log_map(&y)?;
        let pushed =
            cosh_chart_tangent(x.coords()[0], x.coords()[1], vw.coords()[0], vw.coords()[1]);
        let vh = xe.log_map(&ye)?;
        let mut log_err: f64 = 0.0;
        for (p, h) in pushed.iter().zip(vh.coords().iter()) {
            log_err = log_err.max((p - h).abs());
        }
        Ok(vec![tol - (dw - dh).abs(), tol - log_err])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{EuclideanSpace, HyperbolicSpace};

    #[test]
    fn small_quasilinear_suite_passes_flat_and_hyperbolic() {
        let ms: Vec<Arc<dyn Manifold>> = vec![
            Arc::new(EuclideanSpace::new(3).unwrap()),
            Arc::new(HyperbolicSpace::new(2, -1.0).unwrap()),
        ];
        for m in &ms {
            let rep = quasilinear_suite(m, 200, 1).unwrap();
            assert!(rep.passed(), "{:#?}", rep);
        }
    }

    #[test]
    fn small_geometry_suite_passes_hyperbolic() {
        let m: Arc<dyn Manifold> = Arc::new(HyperbolicSpace::new(3, -1.0).unwrap());
        let rep = geometry_suite(&m, 200, 2).unwrap();
        assert!(rep.passed(), "{:#?}", rep);
    }
}
