//! Experiment configuration: a single TOML file with nested sections.
//! Unknown keys are rejected and every numeric parameter is validated at
//! parse time, so a config that loads is a config that runs.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use hgopt_core::geometry::{Coords, Manifold, ManifoldPoint};
use hgopt_core::manifolds::{EuclideanSpace, HyperbolicSpace, SpdManifold, WarpPhi, WarpedProduct};
use hgopt_core::objectives::{FrechetMean, SquaredDistance, StochasticFrechet};
use hgopt_core::sampling::{random_point, stream_rng};
use hgopt_core::solvers::{InnerConfig, StepRule, StepSchedule};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldSpec,
    pub objective: ObjectiveSpec,
    pub solvers: Vec<SolverSpec>,
    pub run: RunSpec,
    #[serde(default)]
    pub bench: BenchSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub kind: String,
    pub dim: Option<usize>,
    pub curvature: Option<f64>,
    pub n: Option<usize>,
    pub phi: Option<String>,
    pub interval: Option<[f64; 2]>,
    pub ode_step: Option<f64>,
    pub shoot_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub kind: String,
    pub anchor: Option<Vec<f64>>,
    pub anchors: Option<Vec<Vec<f64>>>,
    pub weights: Option<Vec<f64>>,
    pub random: Option<RandomAnchors>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomAnchors {
    pub count: usize,
    pub radius: f64,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub algorithm: String,
    #[serde(default = "default_schedule")]
    pub schedule: String,
    pub eta: Option<f64>,
    pub smoothness: Option<f64>,
    pub c: Option<f64>,
    pub max_outer_iters: usize,
    pub kappa_lb: Option<f64>,
    pub early_stop_grad: Option<f64>,
    #[serde(default)]
    pub inner: InnerSpec,
}

fn default_schedule() -> String {
    "constant".into()
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InnerSpec {
    pub grad_tol: Option<f64>,
    pub max_inner_iters: Option<usize>,
    pub step_rule: Option<String>,
    pub l0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub seeds: Vec<u64>,
    pub out_dir: Option<String>,
    #[serde(default = "default_true")]
    pub reference_solve: bool,
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_x0_radius")]
    pub x0_radius: f64,
}

fn default_true() -> bool {
    true
}

fn default_x0_radius() -> f64 {
    1.0
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub gap_eps: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.run.seeds.is_empty() {
            return Err(CliError::Config("run.seeds must not be empty".into()));
        }
        if self.solvers.is_empty() {
            return Err(CliError::Config(
                "at least one [[solvers]] entry required".into(),
            ));
        }
        if self.run.x0_radius.is_nan() || self.run.x0_radius <= 0.0 {
            return Err(CliError::Config("run.x0_radius must be positive".into()));
        }
        for (i, s) in self.solvers.iter().enumerate() {
            let label = format!("solvers[{i}]");
            match s.algorithm.as_str() {
                "proximal_gradient" | "stochastic_proximal_gradient" | "rgd" => {}
                other => {
                    return Err(CliError::Config(format!(
                        "{label}: unknown algorithm '{other}'"
                    )))
                }
            }
            if s.max_outer_iters == 0 {
                return Err(CliError::Config(format!(
                    "{label}: max_outer_iters must be >= 1"
                )));
            }
            match s.schedule.as_str() {
                "constant" => {
                    let eta = s.eta.ok_or_else(|| {
                        CliError::Config(format!("{label}: constant schedule requires eta"))
                    })?;
                    if eta.is_nan() || eta <= 0.0 || !eta.is_finite() {
                        return Err(CliError::Config(format!(
                            "{label}: eta must be positive and finite, got {eta}"
                        )));
                    }
                }
                "inv_sqrt" | "inv_sqrt_log" => {
                    if s.algorithm != "stochastic_proximal_gradient" {
                        return Err(CliError::Config(format!(
                            "{label}: schedule '{}' is only valid for stochastic_proximal_gradient",
                            s.schedule
                        )));
                    }
                }
                other => {
                    return Err(CliError::Config(format!(
                        "{label}: unknown schedule '{other}'"
                    )))
                }
            }
            if s.algorithm == "stochastic_proximal_gradient"
                && self.objective.kind != "stochastic_frechet"
            {
                return Err(CliError::Config(format!(
                    "{label}: stochastic_proximal_gradient requires objective.kind = \"stochastic_frechet\""
                )));
            }
            if s.algorithm == "rgd" && s.eta.is_none() {
                return Err(CliError::Config(format!("{label}: rgd requires eta")));
            }
            if let Some(k) = s.kappa_lb {
                if k > 0.0 {
                    return Err(CliError::Config(format!(
                        "{label}: kappa_lb must be <= 0 on Hadamard manifolds"
                    )));
                }
            }
            if let Some(rule) = &s.inner.step_rule {
                if rule != "backtracking" && rule != "fixed" {
                    return Err(CliError::Config(format!(
                        "{label}: unknown inner.step_rule '{rule}'"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A constructed manifold with its concrete type retained (for curvature
/// bounds and warped-specific reporting).
pub enum BuiltManifold {
    Euclidean(Arc<EuclideanSpace>),
    Hyperbolic(Arc<HyperbolicSpace>),
    Spd(Arc<SpdManifold>),
    Warped(Arc<WarpedProduct>),
}

impl BuiltManifold {
    pub fn as_dyn(&self) -> Arc<dyn Manifold> {
        match self {
            BuiltManifold::Euclidean(m) => Arc::clone(m) as Arc<dyn Manifold>,
            BuiltManifold::Hyperbolic(m) => Arc::clone(m) as Arc<dyn Manifold>,
            BuiltManifold::Spd(m) => Arc::clone(m) as Arc<dyn Manifold>,
            BuiltManifold::Warped(m) => Arc::clone(m) as Arc<dyn Manifold>,
        }
    }

    /// Curvature lower bound for the RGD baseline: exact on constant-curvature
    /// manifolds, −1/2 for SPD, sampled over [−extent, extent] on the warped
    /// product.
    pub fn curvature_lower_bound(&self, r_extent: f64) -> f64 {
        match self {
            BuiltManifold::Euclidean(_) => 0.0,
            BuiltManifold::Hyperbolic(m) => m.curvature(),
            BuiltManifold::Spd(_) => -0.5,
            BuiltManifold::Warped(m) => m.sectional_curvature_bound((-r_extent, r_extent)),
        }
    }

    pub fn is_warped(&self) -> bool {
        matches!(self, BuiltManifold::Warped(_))
    }
}

pub fn build_manifold(spec: &ManifoldSpec) -> Result<BuiltManifold, CliError> {
    let bad = |msg: String| CliError::Config(msg);
    match spec.kind.as_str() {
        "euclidean" => {
            let dim = spec
                .dim
                .ok_or_else(|| bad("euclidean requires dim".into()))?;
            Ok(BuiltManifold::Euclidean(Arc::new(
                EuclideanSpace::new(dim).map_err(|e| bad(e.to_string()))?,
            )))
        }
        "hyperbolic" => {
            let dim = spec
                .dim
                .ok_or_else(|| bad("hyperbolic requires dim".into()))?;
            let curv = spec.curvature.unwrap_or(-1.0);
            Ok(BuiltManifold::Hyperbolic(Arc::new(
                HyperbolicSpace::new(dim, curv).map_err(|e| bad(e.to_string()))?,
            )))
        }
        "spd" => {
            let n = spec.n.ok_or_else(|| bad("spd requires n".into()))?;
            Ok(BuiltManifold::Spd(Arc::new(
                SpdManifold::new(n).map_err(|e| bad(e.to_string()))?,
            )))
        }
        "warped" => {
            let phi = match spec.phi.as_deref() {
                Some("cosh") => WarpPhi::Cosh,
                Some("exp_r2") => WarpPhi::ExpR2,
                Some("t2") => WarpPhi::TSquared,
                Some(other) => return Err(bad(format!("unknown warp phi '{other}'"))),
                None => return Err(bad("warped requires phi".into())),
            };
            let interval = spec
                .interval
                .map(|iv| (iv[0], iv[1]))
                .unwrap_or_else(|| phi.default_interval());
            let ode_step = spec.ode_step.unwrap_or(WarpedProduct::DEFAULT_ODE_STEP);
            let shoot_tol = spec.shoot_tol.unwrap_or(WarpedProduct::DEFAULT_SHOOT_TOL);
            Ok(BuiltManifold::Warped(Arc::new(
                WarpedProduct::with_params(phi, interval, ode_step, shoot_tol)
                    .map_err(|e| bad(e.to_string()))?,
            )))
        }
        other => Err(bad(format!("unknown manifold kind '{other}'"))),
    }
}

/// A constructed objective; stochastic objectives keep their sampler.
pub enum BuiltObjective {
    SqDist(SquaredDistance),
    Frechet(FrechetMean),
    Stochastic(StochasticFrechet),
}

impl BuiltObjective {
    /// The deterministic objective driving values/gradients (the mean for
    /// stochastic objectives).
    pub fn deterministic(&self) -> &dyn hgopt_core::objectives::Objective {
        match self {
            BuiltObjective::SqDist(f) => f,
            BuiltObjective::Frechet(f) => f,
            BuiltObjective::Stochastic(f) => f.mean_objective(),
        }
    }

    pub fn name(&self) -> String {
        self.deterministic().name()
    }

    /// Maximum radial coordinate extent of the anchors (warped reporting).
    pub fn anchor_extent(&self) -> f64 {
        let anchors: Vec<&ManifoldPoint> = match self {
            BuiltObjective::SqDist(f) => vec![f.anchor()],
            BuiltObjective::Frechet(f) => f.anchors().iter().collect(),
            BuiltObjective::Stochastic(f) => f.mean_objective().anchors().iter().collect(),
        };
        anchors
            .iter()
            .map(|a| a.coords().amax())
            .fold(0.0, f64::max)
    }
}

fn point_from_coords(
    manifold: &Arc<dyn Manifold>,
    coords: &[f64],
    what: &str,
) -> Result<ManifoldPoint, CliError> {
    ManifoldPoint::new(Arc::clone(manifold), Coords::from_column_slice(coords))
        .map_err(|e| CliError::Config(format!("{what}: {e}")))
}

pub fn build_objective(
    spec: &ObjectiveSpec,
    manifold: &Arc<dyn Manifold>,
) -> Result<BuiltObjective, CliError> {
    let anchors_from = |spec: &ObjectiveSpec| -> Result<Vec<ManifoldPoint>, CliError> {
        if let Some(list) = &spec.anchors {
            list.iter()
                .enumerate()
                .map(|(i, c)| point_from_coords(manifold, c, &format!("anchors[{i}]")))
                .collect()
        } else if let Some(r) = &spec.random {
            if r.count == 0 {
                return Err(CliError::Config("random.count must be >= 1".into()));
            }
            let mut rng = stream_rng(r.seed, 0x7C);
            (0..r.count)
                .map(|_| {
                    random_point(&mut rng, manifold, r.radius)
                        .map_err(|e| CliError::Config(format!("random anchors: {e}")))
                })
                .collect()
        } else {
            Err(CliError::Config(
                "objective requires either anchors or [objective.random]".into(),
            ))
        }
    };

    match spec.kind.as_str() {
        "sqdist" => {
            let anchor = match &spec.anchor {
                Some(c) => point_from_coords(manifold, c, "anchor")?,
                None => anchors_from(spec)?
                    .into_iter()
                    .next()
                    .expect("anchors_from returns at least one"),
            };
            Ok(BuiltObjective::SqDist(SquaredDistance::new(anchor)))
        }
        "frechet" => {
            let anchors = anchors_from(spec)?;
            let f = FrechetMean::new(anchors, spec.weights.clone())
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(BuiltObjective::Frechet(f))
        }
        "stochastic_frechet" => {
            let anchors = anchors_from(spec)?;
            let seed = spec.random.as_ref().map(|r| r.seed).unwrap_or(0);
            let f = StochasticFrechet::new(anchors, seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(BuiltObjective::Stochastic(f))
        }
        other => Err(CliError::Config(format!(
            "unknown objective kind '{other}'"
        ))),
    }
}

impl SolverSpec {
    pub fn schedule(&self, smoothness_fallback: f64) -> Result<StepSchedule, CliError> {
        match self.schedule.as_str() {
            "constant" => Ok(StepSchedule::Constant(self.eta.expect("validated"))),
            "inv_sqrt" => Ok(StepSchedule::InvSqrt {
                l: self.smoothness.unwrap_or(smoothness_fallback),
                c: self.c.unwrap_or(1.0),
            }),
            "inv_sqrt_log" => Ok(StepSchedule::InvSqrtLog),
            other => Err(CliError::Config(format!("unknown schedule '{other}'"))),
        }
    }

    pub fn inner_config(&self, l0_fallback: f64) -> Result<InnerConfig, CliError> {
        let mut cfg = InnerConfig::default();
        if let Some(t) = self.inner.grad_tol {
            if t.is_nan() || t <= 0.0 {
                return Err(CliError::Config("inner.grad_tol must be positive".into()));
            }
            cfg.grad_tol = t;
        }
        if let Some(n) = self.inner.max_inner_iters {
            cfg.max_inner_iters = n;
        }
        match self.inner.step_rule.as_deref() {
            Some("fixed") => {
                cfg.step_rule = StepRule::Fixed {
                    l0: self.inner.l0.unwrap_or(l0_fallback),
                };
            }
            Some("backtracking") | None => {
                cfg.step_rule = StepRule::Backtracking { init_step: 1.0 };
            }
            Some(other) => {
                return Err(CliError::Config(format!(
                    "unknown inner.step_rule '{other}'"
                )))
            }
        }
        Ok(cfg)
    }
}
