//! First-order solvers: gradient descent for strongly g-convex inner
//! subproblems, the implicit proximal-gradient outer loop, its stochastic
//! variant, and the explicit Riemannian gradient descent baseline with the
//! curvature-dependent ζ factor.
//!
//! The proximal step x⁺ = argmin f(y) + d(x,y)²/(2η) is solved inexactly by
//! warm-started gradient descent on the strongly convex subproblem; the inner
//! tolerance follows the schedule min(1e-8, 0.1/t²) (floored at the configured
//! tolerance) so accumulated inexactness stays summable and the O(1/t)
//! certificate is undisturbed.

use std::time::Instant;

use rand_chacha::ChaCha8Rng;

use crate::geometry::GeodesicSegment;
use crate::geometry::{GeometryError, Manifold, ManifoldPoint};
use crate::objectives::{Objective, StochasticFrechet};
use crate::quasilinear::quasi_inner;
use crate::sampling::stream_rng;
use std::sync::Arc;

/// Step-size schedules for the outer loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// η_t = η.
    Constant(f64),
    /// η_t = c/(2L√t).
    InvSqrt { l: f64, c: f64 },
    /// η_t = 1/(√t·ln t). Undefined at t = 1, where the t = 2 value is used.
    InvSqrtLog,
}

impl StepSchedule {
    pub fn eta(&self, t: usize) -> f64 {
        match self {
            StepSchedule::Constant(e) => *e,
            StepSchedule::InvSqrt { l, c } => c / (2.0 * l * (t as f64).sqrt()),
            StepSchedule::InvSqrtLog => {
                let t = (t.max(2)) as f64;
                1.0 / (t.sqrt() * t.ln())
            }
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            StepSchedule::Constant(e) => {
                if e.is_nan() || *e <= 0.0 || !e.is_finite() {
                    return Err(GeometryError::InvalidParameter(format!(
                        "constant step size must be positive and finite, got {e}"
                    )));
                }
            }
            StepSchedule::InvSqrt { l, c } => {
                if !l.is_finite() || !c.is_finite() || *l <= 0.0 || *c <= 0.0 {
                    return Err(GeometryError::InvalidParameter(
                        "inv_sqrt schedule needs positive L and c".into(),
                    ));
                }
            }
            StepSchedule::InvSqrtLog => {}
        }
        Ok(())
    }
}

/// Step rule for the inner gradient descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Fixed step 1/L₀.
    Fixed { l0: f64 },
    /// Halving line search enforcing h(z⁺) ≤ h(z) − (η/2)‖grad h(z)‖².
    Backtracking { init_step: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct InnerConfig {
    pub grad_tol: f64,
    pub max_inner_iters: usize,
    pub step_rule: StepRule,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-9,
            max_inner_iters: 10_000,
            step_rule: StepRule::Backtracking { init_step: 1.0 },
        }
    }
}

/// Inner tolerance at outer iteration t: min(1e-8, 0.1/t²), floored at the
/// configured tolerance.
pub fn inner_tol_schedule(base_tol: f64, outer_t: usize) -> f64 {
    let t = outer_t as f64;
    (0.1 / (t * t)).min(1e-8).max(base_tol)
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub schedule: StepSchedule,
    pub max_outer_iters: usize,
    pub inner: InnerConfig,
    pub seed: u64,
    pub record_trace: bool,
    pub early_stop_grad: Option<f64>,
}

impl SolverConfig {
    pub fn new(schedule: StepSchedule, max_outer_iters: usize) -> Result<Self, GeometryError> {
        schedule.validate()?;
        if max_outer_iters == 0 {
            return Err(GeometryError::InvalidParameter(
                "max_outer_iters must be >= 1".into(),
            ));
        }
        Ok(Self {
            schedule,
            max_outer_iters,
            inner: InnerConfig::default(),
            seed: 0,
            record_trace: true,
            early_stop_grad: None,
        })
    }
}

/// Known optimum data used to fill gap/distance columns of a trace.
#[derive(Clone, Default)]
pub struct Baseline {
    pub f_star: Option<f64>,
    pub x_star: Option<ManifoldPoint>,
}

/// One row of a solver trace. `wall_ms`, `tele_slack`, `prox_residual` and
/// `zeta` are diagnostics; the stable CSV schema covers the first eight
/// quantities only.
#[derive(Debug, Clone)]
pub struct IterRecord {
    pub iter: usize,
    pub f: f64,
    pub gap: Option<f64>,
    pub grad_norm: Option<f64>,
    pub dist_to_opt: Option<f64>,
    pub inner_iters: Option<usize>,
    pub eta: Option<f64>,
    pub wall_ms: Option<f64>,
    pub tele_slack: Option<f64>,
    pub prox_residual: Option<f64>,
    pub inner_tol: Option<f64>,
    pub zeta: Option<f64>,
}

/// Per-run record: iterate rows for t = 1..T plus initial-point metadata.
#[derive(Clone)]
pub struct RunTrace {
    pub algorithm: String,
    pub objective: String,
    pub manifold: String,
    pub f0: f64,
    pub dist0: Option<f64>,
    pub zeta0: Option<f64>,
    pub records: Vec<IterRecord>,
    pub final_point: ManifoldPoint,
    pub warnings: Vec<String>,
}

impl RunTrace {
    pub fn final_f(&self) -> f64 {
        self.records.last().map(|r| r.f).unwrap_or(self.f0)
    }

    /// Largest upward jump of f along the trace (0 for monotone runs).
    pub fn max_increase(&self) -> f64 {
        let mut prev = self.f0;
        let mut worst: f64 = 0.0;
        for r in &self.records {
            worst = worst.max(r.f - prev);
            prev = r.f;
        }
        worst
    }
}

pub struct InnerResult {
    pub point: ManifoldPoint,
    pub iters: usize,
    pub grad_norm: f64,
    pub hit_max_iters: bool,
    /// h(z_k) along the run (including z₀) when value recording is on.
    pub values: Option<Vec<f64>>,
}

/// Gradient descent z⁺ = Exp_z(−η grad h(z)) for a strongly g-convex h,
/// stopping at ‖grad h(z)‖ ≤ grad_tol or after max_inner_iters.
pub fn inner_gd(
    h: &dyn Objective,
    z0: &ManifoldPoint,
    cfg: &InnerConfig,
    record_values: bool,
) -> Result<InnerResult, GeometryError> {
    let mut z = z0.clone();
    let mut hz = h.value(&z)?;
    if !hz.is_finite() {
        return Err(GeometryError::NumericalFailure {
            method: "inner gradient descent (non-finite value)".into(),
            residual: f64::INFINITY,
        });
    }
    let mut values = record_values.then(|| vec![hz]);
    let mut step = match cfg.step_rule {
        StepRule::Fixed { l0 } => {
            if l0.is_nan() || l0 <= 0.0 {
                return Err(GeometryError::InvalidParameter(
                    "fixed step rule needs L0 > 0".into(),
                ));
            }
            1.0 / l0
        }
        StepRule::Backtracking { init_step } => init_step,
    };

    let mut iters = 0;
    loop {
        let g = h.gradient(&z)?;
        let gn = g.norm();
        if !gn.is_finite() {
            return Err(GeometryError::NumericalFailure {
                method: "inner gradient descent (non-finite gradient)".into(),
                residual: f64::INFINITY,
            });
        }
        if gn <= cfg.grad_tol {
            return Ok(InnerResult {
                point: z,
                iters,
                grad_norm: gn,
                hit_max_iters: false,
                values,
            });
        }
        if iters >= cfg.max_inner_iters {
            return Ok(InnerResult {
                point: z,
                iters,
                grad_norm: gn,
                hit_max_iters: true,
                values,
            });
        }

        match cfg.step_rule {
            StepRule::Fixed { .. } => {
                z = g.scale(-step).exp_map()?;
                hz = h.value(&z)?;
            }
            StepRule::Backtracking { .. } => {
                // Once the sufficient decrease of even the largest candidate
                // step is below the rounding noise of h, value comparisons
                // stop being informative; descend on the gradient field
                // instead.
                let noise = 1e-15 * hz.abs().max(1.0);
                if 0.5 * (step * 2.0) * gn * gn <= 10.0 * noise {
                    return gradient_flow_tail(h, z, step, gn, iters, cfg, values);
                }
                // Warm start from twice the previously accepted step.
                let mut eta = step * 2.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let cand = g.scale(-eta).exp_map();
                    if let Ok(cand) = cand {
                        if let Ok(hc) = h.value(&cand) {
                            if hc.is_finite() && hc <= hz - 0.5 * eta * gn * gn {
                                z = cand;
                                hz = hc;
                                step = eta;
                                accepted = true;
                                break;
                            }
                        }
                    }
                    eta *= 0.5;
                }
                if !accepted {
                    // The required decrease is below the rounding noise of h.
                    // Switch to plain gradient-flow steps at the last accepted
                    // step size, which keeps contracting toward the zero of
                    // the gradient field without comparing h values.
                    return gradient_flow_tail(h, z, step, gn, iters, cfg, values);
                }
            }
        }
        if let Some(v) = values.as_mut() {
            v.push(hz);
        }
        iters += 1;
    }
}

/// Fixed-step descent on the gradient field alone; used once objective-value
/// comparisons stop being informative. Returns the best gradient norm seen.
fn gradient_flow_tail(
    h: &dyn Objective,
    z0: ManifoldPoint,
    step: f64,
    gn0: f64,
    iters_used: usize,
    cfg: &InnerConfig,
    mut values: Option<Vec<f64>>,
) -> Result<InnerResult, GeometryError> {
    let mut step = step;
    let mut z = z0.clone();
    let mut best = (z0, gn0);
    let mut since_improvement = 0usize;
    let mut halvings = 0usize;
    let mut iters = iters_used;
    while iters < cfg.max_inner_iters {
        let g = h.gradient(&z)?;
        let gn = g.norm();
        if !gn.is_finite() {
            return Err(GeometryError::NumericalFailure {
                method: "inner gradient descent (non-finite gradient)".into(),
                residual: f64::INFINITY,
            });
        }
        if gn < best.1 {
            best = (z.clone(), gn);
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if gn <= cfg.grad_tol {
            break;
        }
        if since_improvement >= 8 {
            // A step at or beyond the stability edge of the local curvature
            // oscillates without net progress; restart shorter from the best
            // point. Exhausting the halvings means the gradient field has
            // reached its noise floor.
            halvings += 1;
            if halvings > 24 {
                break;
            }
            step *= 0.5;
            z = best.0.clone();
            since_improvement = 0;
            iters += 1;
            continue;
        }
        z = g.scale(-step).exp_map()?;
        if let Some(v) = values.as_mut() {
            v.push(h.value(&z)?);
        }
        iters += 1;
    }
    let (point, grad_norm) = best;
    Ok(InnerResult {
        point,
        iters,
        grad_norm,
        hit_max_iters: grad_norm > cfg.grad_tol,
        values,
    })
}

/// The prox subproblem h(y) = f(y) + d(x,y)²/(2η); inherits strong convexity
/// μ_h = μ_f + 1/η.
pub struct ProxSubproblem<'a> {
    f: &'a dyn Objective,
    center: ManifoldPoint,
    eta: f64,
}

impl<'a> ProxSubproblem<'a> {
    pub fn new(f: &'a dyn Objective, center: ManifoldPoint, eta: f64) -> Self {
        Self { f, center, eta }
    }
}

impl Objective for ProxSubproblem<'_> {
    fn manifold(&self) -> &Arc<dyn Manifold> {
        self.f.manifold()
    }

    fn value(&self, y: &ManifoldPoint) -> Result<f64, GeometryError> {
        let d = self.center.distance(y)?;
        Ok(self.f.value(y)? + d * d / (2.0 * self.eta))
    }

    fn gradient(&self, y: &ManifoldPoint) -> Result<crate::geometry::TangentVector, GeometryError> {
        let fg = self.f.gradient(y)?;
        let pull = y.log_map(&self.center)?.scale(-1.0 / self.eta);
        fg.add(&pull)
    }

    fn mu(&self) -> f64 {
        self.f.mu() + 1.0 / self.eta
    }

    fn name(&self) -> String {
        format!("prox{{eta={},f={}}}", self.eta, self.f.name())
    }
}

pub struct ProxOutcome {
    pub point: ManifoldPoint,
    pub inner_iters: usize,
    /// ‖log_y(x) − η·grad f(y)‖ at the accepted point.
    pub residual: f64,
    pub hit_max_iters: bool,
}

/// One implicit proximal step: minimize f(y) + d(x,y)²/(2η) by warm-started
/// inner gradient descent from z₀ = x.
pub fn prox_step(
    f: &dyn Objective,
    x: &ManifoldPoint,
    eta: f64,
    cfg: &InnerConfig,
) -> Result<ProxOutcome, GeometryError> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(GeometryError::InvalidParameter(format!(
            "prox step size must be positive, got {eta}"
        )));
    }
    let h = ProxSubproblem::new(f, x.clone(), eta);
    let res = inner_gd(&h, x, cfg, false)?;
    let y = res.point;
    let fixed_point_residual = y.log_map(x)?.sub(&f.gradient(&y)?.scale(eta))?.norm();
    Ok(ProxOutcome {
        point: y,
        inner_iters: res.iters,
        residual: fixed_point_residual,
        hit_max_iters: res.hit_max_iters,
    })
}

fn record_for(
    f_val: f64,
    t: usize,
    grad_norm: Option<f64>,
    baseline: &Baseline,
    x: &ManifoldPoint,
) -> Result<IterRecord, GeometryError> {
    let gap = baseline.f_star.map(|fs| f_val - fs);
    let dist = match &baseline.x_star {
        Some(xs) => Some(x.distance(xs)?),
        None => None,
    };
    Ok(IterRecord {
        iter: t,
        f: f_val,
        gap,
        grad_norm,
        dist_to_opt: dist,
        inner_iters: None,
        eta: None,
        wall_ms: None,
        tele_slack: None,
        prox_residual: None,
        inner_tol: None,
        zeta: None,
    })
}

/// Deterministic proximal gradient: x_t solves x_{t−1} = Exp_{x_t}(η grad f(x_t)).
/// Requires a constant schedule. When trace recording is on and x* is known,
/// the per-step telescoping slack ⟨x_{t−1}x_t, x_t x*⟩ − η(f(x_t) − f*) is
/// stored with each record.
pub fn proximal_gradient(
    f: &dyn Objective,
    x0: &ManifoldPoint,
    cfg: &SolverConfig,
    baseline: &Baseline,
) -> Result<RunTrace, GeometryError> {
    let eta = match cfg.schedule {
        StepSchedule::Constant(e) => e,
        _ => {
            return Err(GeometryError::InvalidParameter(
                "proximal_gradient requires a constant step schedule".into(),
            ))
        }
    };
    cfg.schedule.validate()?;

    let start = Instant::now();
    let mut warnings = Vec::new();
    let mut x = x0.clone();
    let f0 = f.value(&x)?;
    let dist0 = match &baseline.x_star {
        Some(xs) => Some(x.distance(xs)?),
        None => None,
    };
    let mut records = Vec::with_capacity(cfg.max_outer_iters);

    for t in 1..=cfg.max_outer_iters {
        let tol = inner_tol_schedule(cfg.inner.grad_tol, t);
        let inner_cfg = InnerConfig {
            grad_tol: tol,
            ..cfg.inner
        };
        let out = prox_step(f, &x, eta, &inner_cfg)?;
        if out.hit_max_iters {
            warnings.push(format!(
                "outer iter {t}: inner solver stopped before reaching tolerance (residual {:.3e})",
                out.residual
            ));
        }
        let x_new = out.point;
        let f_val = f.value(&x_new)?;
        let gn = f.gradient(&x_new)?.norm();
        let mut rec = record_for(f_val, t, Some(gn), baseline, &x_new)?;
        rec.inner_iters = Some(out.inner_iters);
        rec.eta = Some(eta);
        rec.prox_residual = Some(out.residual);
        rec.inner_tol = Some(tol);
        rec.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        if cfg.record_trace {
            if let (Some(fs), Some(xs)) = (baseline.f_star, baseline.x_star.as_ref()) {
                let qi = quasi_inner(
                    &GeodesicSegment::new(x.clone(), x_new.clone())?,
                    &GeodesicSegment::new(x_new.clone(), xs.clone())?,
                )?
                .value;
                rec.tele_slack = Some(qi - eta * (f_val - fs));
            }
        }
        records.push(rec);
        x = x_new;
        if let Some(stop) = cfg.early_stop_grad {
            if gn <= stop {
                break;
            }
        }
    }

    Ok(RunTrace {
        algorithm: "proximal_gradient".into(),
        objective: f.name(),
        manifold: f.manifold().name(),
        f0,
        dist0,
        zeta0: None,
        records,
        final_point: x,
        warnings,
    })
}

/// Stochastic proximal gradient: at step t sample ξ_t and solve the implicit
/// update x_{t−1} = Exp_{x_t}(η_t grad f(x_t; ξ_t)) via a prox step on the
/// sampled component. Trace rows carry the mean objective F.
pub fn stochastic_proximal_gradient(
    f: &StochasticFrechet,
    x0: &ManifoldPoint,
    cfg: &SolverConfig,
    baseline: &Baseline,
) -> Result<RunTrace, GeometryError> {
    cfg.schedule.validate()?;
    let mean = f.mean_objective();
    let start = Instant::now();
    let mut warnings = Vec::new();
    let mut rng: ChaCha8Rng = stream_rng(cfg.seed, 0);
    let mut x = x0.clone();
    let f0 = mean.value(&x)?;
    let dist0 = match &baseline.x_star {
        Some(xs) => Some(x.distance(xs)?),
        None => None,
    };
    let mut records = Vec::with_capacity(cfg.max_outer_iters);

    for t in 1..=cfg.max_outer_iters {
        let eta = cfg.schedule.eta(t);
        let xi = f.sample_component(&mut rng);
        let comp = f.component(xi);
        let tol = inner_tol_schedule(cfg.inner.grad_tol, t);
        let inner_cfg = InnerConfig {
            grad_tol: tol,
            ..cfg.inner
        };
        let out = prox_step(&comp, &x, eta, &inner_cfg)?;
        if out.hit_max_iters {
            warnings.push(format!(
                "outer iter {t}: inner solver stopped before reaching tolerance (residual {:.3e})",
                out.residual
            ));
        }
        x = out.point;
        let f_val = mean.value(&x)?;
        let gn = mean.gradient(&x)?.norm();
        let mut rec = record_for(f_val, t, Some(gn), baseline, &x)?;
        rec.inner_iters = Some(out.inner_iters);
        rec.eta = Some(eta);
        rec.prox_residual = Some(out.residual);
        rec.inner_tol = Some(tol);
        rec.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        records.push(rec);
    }

    Ok(RunTrace {
        algorithm: "stochastic_proximal_gradient".into(),
        objective: format!("stochastic_{}", mean.name()),
        manifold: mean.manifold().name(),
        f0,
        dist0,
        zeta0: None,
        records,
        final_point: x,
        warnings,
    })
}

/// ζ(κ, c) = √|κ|·c / tanh(√|κ|·c), the comparison-inequality factor of the
/// explicit-RGD analysis; → 1 as κ → 0⁻ or c → 0.
pub fn zeta(kappa: f64, c: f64) -> f64 {
    let x = kappa.abs().sqrt() * c;
    if x < 1e-8 {
        1.0 + x * x / 3.0
    } else {
        x / x.tanh()
    }
}

/// Explicit Riemannian gradient descent baseline
/// x_{t} = Exp_{x_{t−1}}(−η grad f(x_{t−1})). Each record carries
/// ζ(κ_lb, d(x_t, x*)) when x* is known; ζ at the starting point is stored as
/// `zeta0`.
pub fn rgd_baseline(
    f: &dyn Objective,
    x0: &ManifoldPoint,
    eta: f64,
    max_iters: usize,
    kappa_lb: f64,
    baseline: &Baseline,
) -> Result<RunTrace, GeometryError> {
    if eta.is_nan() || eta <= 0.0 {
        return Err(GeometryError::InvalidParameter(format!(
            "rgd step size must be positive, got {eta}"
        )));
    }
    if kappa_lb > 0.0 {
        return Err(GeometryError::InvalidParameter(
            "curvature lower bound must be <= 0 on a Hadamard manifold".into(),
        ));
    }
    let start = Instant::now();
    let mut x = x0.clone();
    let f0 = f.value(&x)?;
    let dist0 = match &baseline.x_star {
        Some(xs) => Some(x.distance(xs)?),
        None => None,
    };
    let zeta0 = dist0.map(|d| zeta(kappa_lb, d));
    let mut records = Vec::with_capacity(max_iters);

    for t in 1..=max_iters {
        let g = f.gradient(&x)?;
        x = g.scale(-eta).exp_map()?;
        let f_val = f.value(&x)?;
        let gn = f.gradient(&x)?.norm();
        let mut rec = record_for(f_val, t, Some(gn), baseline, &x)?;
        rec.eta = Some(eta);
        rec.zeta = rec.dist_to_opt.map(|d| zeta(kappa_lb, d));
        rec.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        records.push(rec);
    }

    Ok(RunTrace {
        algorithm: "rgd".into(),
        objective: f.name(),
        manifold: f.manifold().name(),
        f0,
        dist0,
        zeta0,
        records,
        final_point: x,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Coords;
    use crate::manifolds::EuclideanSpace;
    use crate::objectives::{EuclideanQuadratic, SquaredDistance};

    fn euclid(dim: usize) -> Arc<dyn Manifold> {
        Arc::new(EuclideanSpace::new(dim).unwrap())
    }

    fn pt(m: &Arc<dyn Manifold>, c: &[f64]) -> ManifoldPoint {
        ManifoldPoint::new(Arc::clone(m), Coords::from_column_slice(c)).unwrap()
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(-1.0, 1.0) - 1.0 / 1.0f64.tanh()).abs() < 1e-15);
        assert!((zeta(-1.0, 1.0) - 1.3130352854993312).abs() < 1e-12);
        // κ → 0⁻ limit for fixed c
        assert!((zeta(-1e-18, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(zeta(0.0, 3.0), 1.0);
        assert_eq!(zeta(-2.0, 0.0), 1.0);
    }

    #[test]
    fn inner_gd_exact_quadratic_in_one_step() {
        let m = euclid(2);
        let f = SquaredDistance::new(pt(&m, &[1.0, -2.0]));
        let cfg = InnerConfig {
            grad_tol: 1e-12,
            max_inner_iters: 10,
            step_rule: StepRule::Fixed { l0: 1.0 },
        };
        let res = inner_gd(&f, &pt(&m, &[0.0, 0.0]), &cfg, false).unwrap();
        assert_eq!(res.iters, 1);
        assert!(res.grad_norm <= 1e-12);
        assert!(res.point.approx_eq(&pt(&m, &[1.0, -2.0]), 1e-12));
    }

    #[test]
    fn inner_gd_contraction_bound_mu1_l2() {
        // μ = 1, L₀ = 2: per-step gap ratio must stay below 1 − μ/(4L₀) = 0.875.
        let m = euclid(2);
        let f = EuclideanQuadratic::new(pt(&m, &[0.0, 0.0]), vec![1.0, 2.0]).unwrap();
        assert_eq!(1.0 - f.mu() / (4.0 * f.global_smoothness().unwrap()), 0.875);
        let cfg = InnerConfig {
            grad_tol: 1e-13,
            max_inner_iters: 200,
            step_rule: StepRule::Fixed { l0: 2.0 },
        };
        let res = inner_gd(&f, &pt(&m, &[1.0, 1.0]), &cfg, true).unwrap();
        let values = res.values.unwrap();
        for w in values.windows(2) {
            if w[0] > 1e-13 {
                assert!(w[1] / w[0] <= 0.875 + 1e-6, "ratio {}", w[1] / w[0]);
            }
        }
    }

    #[test]
    fn prox_step_matches_flat_closed_form() {
        let m = euclid(1);
        let f = SquaredDistance::new(pt(&m, &[1.0]));
        let x = pt(&m, &[0.0]);
        let cfg = InnerConfig::default();
        let out = prox_step(&f, &x, 1.0, &cfg).unwrap();
        // (x + η a)/(1 + η) = 0.5
        assert!((out.point.coords()[0] - 0.5).abs() < 1e-8);
        assert!(out.residual <= 10.0 * cfg.grad_tol);
    }

    #[test]
    fn prox_step_at_optimum_stays_put() {
        let m = euclid(2);
        let a = pt(&m, &[0.5, -0.5]);
        let f = SquaredDistance::new(a.clone());
        let out = prox_step(&f, &a, 0.7, &InnerConfig::default()).unwrap();
        assert_eq!(out.inner_iters, 0);
        assert!(out.point.approx_eq(&a, 0.0));
    }

    #[test]
    fn proximal_gradient_stationary_at_optimum() {
        let m = euclid(2);
        let a = pt(&m, &[1.0, 1.0]);
        let f = SquaredDistance::new(a.clone());
        let cfg = SolverConfig::new(StepSchedule::Constant(0.5), 5).unwrap();
        let baseline = Baseline {
            f_star: Some(0.0),
            x_star: Some(a.clone()),
        };
        let trace = proximal_gradient(&f, &a, &cfg, &baseline).unwrap();
        for r in &trace.records {
            assert!(r.f.abs() < 1e-16);
            assert!(r.dist_to_opt.unwrap() < 1e-10);
        }
    }

    #[test]
    fn inv_sqrt_alpha_weight_bookkeeping() {
        // Σ_{t=1}^{4} α_t with α_t = 1/(4L√t), L = 1.
        let alpha = |t: usize| 1.0 / (4.0 * (t as f64).sqrt());
        let sum: f64 = (1..=4).map(alpha).sum();
        let expected = 0.25 * (1.0 + 1.0 / 2.0f64.sqrt() + 1.0 / 3.0f64.sqrt() + 0.5);
        assert!((sum - expected).abs() < 1e-15);
        assert!((sum - 0.6961142625940433).abs() < 1e-12);
    }

    #[test]
    fn schedule_values() {
        let s = StepSchedule::InvSqrt { l: 1.0, c: 1.0 };
        assert!((s.eta(4) - 1.0 / (2.0 * 2.0)).abs() < 1e-15);
        let sl = StepSchedule::InvSqrtLog;
        assert_eq!(sl.eta(1), sl.eta(2));
        assert!((sl.eta(9) - 1.0 / (3.0 * 9.0f64.ln())).abs() < 1e-15);
        assert!(StepSchedule::Constant(-0.1).validate().is_err());
        assert!(StepSchedule::Constant(0.0).validate().is_err());
    }

    #[test]
    fn rgd_flat_quadratic_is_monotone() {
        let m = euclid(2);
        let f = SquaredDistance::new(pt(&m, &[0.0, 0.0]));
        let x0 = pt(&m, &[3.0, 4.0]);
        let baseline = Baseline {
            f_star: Some(0.0),
            x_star: Some(pt(&m, &[0.0, 0.0])),
        };
        let trace = rgd_baseline(&f, &x0, 1.0, 10, 0.0, &baseline).unwrap();
        assert!(trace.max_increase() <= 0.0);
        assert_eq!(trace.zeta0, Some(1.0));
    }

    #[test]
    fn inner_tol_schedule_floors_and_caps() {
        assert_eq!(inner_tol_schedule(1e-9, 1), 1e-8);
        // 0.1/t² only drops below the 1e-8 cap past t ≈ 3163.
        assert_eq!(inner_tol_schedule(1e-9, 1000), 1e-8);
        assert_eq!(inner_tol_schedule(1e-9, 5000), 0.1 / 25e6);
        assert_eq!(inner_tol_schedule(1e-9, 100_000), 1e-9);
    }
}
