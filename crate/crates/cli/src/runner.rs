//! Grid execution for `run` and `bench`: one cell per (solver × seed), each
//! cell owning its RNG and trace. Cells run in parallel; all output files are
//! written by the coordinator in a fixed order.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use hgopt_core::geometry::{Coords, Manifold, ManifoldPoint};
use hgopt_core::objectives::estimate_local_smoothness;
use hgopt_core::oracles::{reference_minimize, ReferenceSolution};
use hgopt_core::sampling::{base_point, random_point, stream_rng};
use hgopt_core::solvers::{
    proximal_gradient, rgd_baseline, stochastic_proximal_gradient, Baseline, RunTrace, SolverConfig,
};

use crate::config::{build_manifold, build_objective, BuiltObjective, ExperimentConfig};
use crate::csvio::{self, SummaryRow};
use crate::CliError;

pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub timing: bool,
}

pub fn resolve_out_dir(explicit: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.run.out_dir {
        return PathBuf::from(p);
    }
    if let Ok(p) = std::env::var("HGOPT_OUT") {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from("hgopt_out")
}

/// Everything derived from a config before cells execute.
pub struct Prepared {
    pub manifold: Arc<dyn Manifold>,
    pub is_warped: bool,
    pub objective: BuiltObjective,
    pub reference: Option<ReferenceSolution>,
    /// Sampled smoothness of the (mean) objective, used as the fallback L.
    pub smoothness: f64,
    pub kappa_lb_default: f64,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let built = build_manifold(&cfg.manifold)?;
    let manifold = built.as_dyn();
    let objective = build_objective(&cfg.objective, &manifold)?;

    let reference = if cfg.run.reference_solve {
        let start = match &objective {
            BuiltObjective::SqDist(f) => f.anchor().clone(),
            _ => base_point(&manifold),
        };
        Some(
            reference_minimize(objective.deterministic(), &start)
                .map_err(|e| CliError::Numerical(format!("reference solve: {e}")))?,
        )
    } else {
        None
    };

    // The sampled smoothness is only a fallback for inv_sqrt schedules and
    // fixed inner steps without explicit constants; estimating it can itself
    // leave incomplete charts, so skip it unless some solver needs it.
    let needs_smoothness = cfg.solvers.iter().any(|s| {
        (s.schedule == "inv_sqrt" && s.smoothness.is_none())
            || (s.inner.step_rule.as_deref() == Some("fixed") && s.inner.l0.is_none())
    });
    let smoothness = if needs_smoothness {
        let center = reference
            .as_ref()
            .map(|r| r.point.clone())
            .unwrap_or_else(|| base_point(&manifold));
        let radius = cfg.run.x0_radius + 0.5;
        estimate_local_smoothness(objective.deterministic(), &center, radius, 48, 0xE5)
            .map_err(|e| CliError::Numerical(format!("smoothness estimate: {e}")))?
    } else {
        1.0
    };

    let extent = objective.anchor_extent() + cfg.run.x0_radius + 1.0;
    let kappa_lb_default = built.curvature_lower_bound(extent);

    Ok(Prepared {
        manifold,
        is_warped: built.is_warped(),
        objective,
        reference,
        smoothness,
        kappa_lb_default,
    })
}

pub struct Cell {
    pub solver_idx: usize,
    pub seed: u64,
}

pub struct CellResult {
    pub solver_idx: usize,
    pub seed: u64,
    pub outcome: Result<RunTrace, String>,
    pub wall_ms: f64,
}

fn starting_point(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    seed: u64,
) -> Result<ManifoldPoint, CliError> {
    match &cfg.run.x0 {
        Some(coords) => ManifoldPoint::new(
            Arc::clone(&prepared.manifold),
            Coords::from_column_slice(coords),
        )
        .map_err(|e| CliError::Config(format!("run.x0: {e}"))),
        None => {
            let mut rng = stream_rng(seed, 0x10);
            random_point(&mut rng, &prepared.manifold, cfg.run.x0_radius)
                .map_err(|e| CliError::Numerical(format!("x0 sampling: {e}")))
        }
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    cell: &Cell,
) -> Result<RunTrace, CliError> {
    let spec = &cfg.solvers[cell.solver_idx];
    let x0 = starting_point(cfg, prepared, cell.seed)?;
    let baseline = match &prepared.reference {
        Some(r) => Baseline {
            f_star: Some(r.value),
            x_star: Some(r.point.clone()),
        },
        None => Baseline::default(),
    };
    let schedule = spec.schedule(prepared.smoothness)?;
    let inner = spec.inner_config(prepared.smoothness)?;
    let num = |e: hgopt_core::GeometryError| CliError::Numerical(e.to_string());

    match spec.algorithm.as_str() {
        "proximal_gradient" => {
            let mut sc = SolverConfig::new(schedule, spec.max_outer_iters).map_err(num)?;
            sc.inner = inner;
            sc.seed = cell.seed;
            sc.early_stop_grad = spec.early_stop_grad;
            proximal_gradient(prepared.objective.deterministic(), &x0, &sc, &baseline).map_err(num)
        }
        "stochastic_proximal_gradient" => {
            let f = match &prepared.objective {
                BuiltObjective::Stochastic(f) => f,
                _ => {
                    return Err(CliError::Config(
                        "stochastic solver needs a stochastic objective".into(),
                    ))
                }
            };
            let mut sc = SolverConfig::new(schedule, spec.max_outer_iters).map_err(num)?;
            sc.inner = inner;
            sc.seed = cell.seed;
            stochastic_proximal_gradient(f, &x0, &sc, &baseline).map_err(num)
        }
        "rgd" => {
            let eta = spec.eta.expect("validated");
            let kappa = spec.kappa_lb.unwrap_or(prepared.kappa_lb_default);
            rgd_baseline(
                prepared.objective.deterministic(),
                &x0,
                eta,
                spec.max_outer_iters,
                kappa,
                &baseline,
            )
            .map_err(num)
        }
        other => Err(CliError::Config(format!("unknown algorithm '{other}'"))),
    }
}

pub fn execute_grid(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    seeds: &[u64],
    jobs: Option<usize>,
) -> Result<Vec<CellResult>, CliError> {
    let cells: Vec<Cell> = (0..cfg.solvers.len())
        .flat_map(|solver_idx| {
            seeds.iter().map(move |seed| Cell {
                solver_idx,
                seed: *seed,
            })
        })
        .collect();

    let body = || -> Vec<CellResult> {
        cells
            .par_iter()
            .map(|cell| {
                let t = Instant::now();
                let outcome = run_cell(cfg, prepared, cell).map_err(|e| e.to_string());
                CellResult {
                    solver_idx: cell.solver_idx,
                    seed: cell.seed,
                    outcome,
                    wall_ms: t.elapsed().as_secs_f64() * 1e3,
                }
            })
            .collect()
    };

    let mut results = match jobs {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
            pool.install(body)
        }
        None => body(),
    };
    results.sort_by_key(|r| (r.solver_idx, r.seed));
    Ok(results)
}

pub fn trace_file_name(cfg: &ExperimentConfig, solver_idx: usize, seed: u64) -> String {
    format!(
        "trace_{}_{}_seed{}.csv",
        solver_idx, cfg.solvers[solver_idx].algorithm, seed
    )
}

fn prox_certificate_fields(
    trace: &RunTrace,
    eta0: Option<f64>,
    d0: Option<f64>,
) -> (Option<f64>, Option<bool>) {
    let (Some(eta), Some(d0)) = (eta0, d0) else {
        return (None, None);
    };
    let mut cert: f64 = 0.0;
    let mut have_gap = false;
    for r in &trace.records {
        if let Some(g) = r.gap {
            have_gap = true;
            cert = cert.max(eta * r.iter as f64 * g);
        }
    }
    if !have_gap {
        return (None, None);
    }
    (Some(cert), Some(cert <= d0 * d0 * (1.0 + 1e-3)))
}

pub fn summarize(cfg: &ExperimentConfig, results: &[CellResult]) -> Vec<SummaryRow> {
    results
        .iter()
        .map(|res| {
            let spec = &cfg.solvers[res.solver_idx];
            let run = trace_file_name(cfg, res.solver_idx, res.seed);
            match &res.outcome {
                Ok(trace) => {
                    let eta0 = trace.records.first().and_then(|r| r.eta);
                    let deterministic_prox = spec.algorithm == "proximal_gradient";
                    let (cert, cert_pass) = if deterministic_prox {
                        prox_certificate_fields(trace, eta0, trace.dist0)
                    } else {
                        (None, None)
                    };
                    SummaryRow {
                        run,
                        algorithm: spec.algorithm.clone(),
                        schedule: spec.schedule.clone(),
                        seed: res.seed,
                        manifold: trace.manifold.clone(),
                        objective: trace.objective.clone(),
                        t_max: spec.max_outer_iters,
                        eta0,
                        f0: Some(trace.f0),
                        final_f: Some(trace.final_f()),
                        final_gap: trace.records.last().and_then(|r| r.gap),
                        final_grad_norm: trace.records.last().and_then(|r| r.grad_norm),
                        d0: trace.dist0,
                        zeta0: trace.zeta0,
                        cert_eta_t_gap_max: cert,
                        cert_pass,
                        monotone_max_increase: deterministic_prox.then(|| trace.max_increase()),
                        status: "ok".into(),
                        warnings: trace.warnings.len(),
                    }
                }
                Err(msg) => SummaryRow {
                    run,
                    algorithm: spec.algorithm.clone(),
                    schedule: spec.schedule.clone(),
                    seed: res.seed,
                    manifold: String::new(),
                    objective: String::new(),
                    t_max: spec.max_outer_iters,
                    eta0: None,
                    f0: None,
                    final_f: None,
                    final_gap: None,
                    final_grad_norm: None,
                    d0: None,
                    zeta0: None,
                    cert_eta_t_gap_max: None,
                    cert_pass: None,
                    monotone_max_increase: None,
                    status: format!("failed: {}", msg.replace(',', ";")),
                    warnings: 0,
                },
            }
        })
        .collect()
}

pub fn cmd_run(opts: &RunOptions) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&opts.config)?;
    let out_dir = resolve_out_dir(opts.out.as_deref(), &cfg);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;

    let prepared = prepare(&cfg)?;
    let seeds: Vec<u64> = match opts.seed {
        Some(s) => vec![s],
        None => cfg.run.seeds.clone(),
    };
    let results = execute_grid(&cfg, &prepared, &seeds, opts.jobs)?;

    for res in &results {
        if let Ok(trace) = &res.outcome {
            let path = out_dir.join(trace_file_name(&cfg, res.solver_idx, res.seed));
            csvio::write_trace(&path, trace, opts.timing)?;
        }
    }
    let rows = summarize(&cfg, &results);
    std::fs::write(out_dir.join("summary.csv"), csvio::summary_csv(&rows))
        .map_err(|e| CliError::Config(format!("cannot write summary: {e}")))?;

    let mut failures = 0;
    for (res, row) in results.iter().zip(rows.iter()) {
        match &res.outcome {
            Ok(trace) => println!(
                "run {} finished: final_f={:.6e} warnings={} wall={:.1}ms",
                row.run,
                trace.final_f(),
                trace.warnings.len(),
                res.wall_ms
            ),
            Err(msg) => {
                failures += 1;
                println!("run {} FAILED: {msg}", row.run);
            }
        }
    }
    println!(
        "wrote {} traces + summary.csv to {}",
        results.len() - failures,
        out_dir.display()
    );

    if failures > 0 {
        return Err(CliError::Numerical(format!(
            "{failures} of {} runs failed numerically",
            results.len()
        )));
    }
    Ok(())
}
