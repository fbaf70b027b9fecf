//! The `bench` command: run at least two solvers on one experiment and print
//! a comparison table (final gap, iterations to a gap threshold, inner-solve
//! cost). RGD rows report the curvature lower bound they relied on and the
//! resulting ζ factor; proximal rows need neither.

use hgopt_core::solvers::{zeta, RunTrace};

use crate::config::ExperimentConfig;
use crate::csvio;
use crate::runner::{execute_grid, prepare, resolve_out_dir, trace_file_name, RunOptions};
use crate::CliError;

struct BenchRow {
    method: String,
    schedule: String,
    final_gap: Option<f64>,
    iters_to_eps: Option<usize>,
    total_inner_iters: usize,
    curvature_bound: Option<f64>,
    zeta_max: Option<f64>,
}

fn bench_row(
    spec_algorithm: &str,
    spec_schedule: &str,
    trace: &RunTrace,
    eps: f64,
    kappa_used: Option<f64>,
) -> BenchRow {
    let final_gap = trace.records.last().and_then(|r| r.gap);
    let iters_to_eps = trace
        .records
        .iter()
        .find(|r| r.gap.map(|g| g <= eps).unwrap_or(false))
        .map(|r| r.iter);
    let total_inner_iters = trace
        .records
        .iter()
        .filter_map(|r| r.inner_iters)
        .sum::<usize>();
    let zeta_max = match (spec_algorithm, kappa_used) {
        ("rgd", Some(k)) => {
            let max_d = trace
                .records
                .iter()
                .filter_map(|r| r.dist_to_opt)
                .fold(trace.dist0.unwrap_or(0.0), f64::max);
            Some(zeta(k, max_d))
        }
        _ => None,
    };
    BenchRow {
        method: spec_algorithm.to_string(),
        schedule: spec_schedule.to_string(),
        final_gap,
        iters_to_eps,
        total_inner_iters,
        curvature_bound: kappa_used,
        zeta_max,
    }
}

fn fmt_opt_sci(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into())
}

pub fn cmd_bench(opts: &RunOptions) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&opts.config)?;
    if cfg.solvers.len() < 2 {
        return Err(CliError::Config(
            "bench needs at least two [[solvers]] entries to compare".into(),
        ));
    }
    let out_dir = resolve_out_dir(opts.out.as_deref(), &cfg);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out_dir.display())))?;

    let prepared = prepare(&cfg)?;
    let seed = opts.seed.unwrap_or(cfg.run.seeds[0]);
    let results = execute_grid(&cfg, &prepared, &[seed], opts.jobs)?;
    let eps = cfg.bench.gap_eps.unwrap_or(1e-6);

    let mut rows = Vec::new();
    let mut failures = 0;
    for res in &results {
        let spec = &cfg.solvers[res.solver_idx];
        match &res.outcome {
            Ok(trace) => {
                let path = out_dir.join(trace_file_name(&cfg, res.solver_idx, res.seed));
                csvio::write_trace(&path, trace, opts.timing)?;
                let kappa_used = (spec.algorithm == "rgd")
                    .then(|| spec.kappa_lb.unwrap_or(prepared.kappa_lb_default));
                rows.push(bench_row(
                    &spec.algorithm,
                    &spec.schedule,
                    trace,
                    eps,
                    kappa_used,
                ));
            }
            Err(msg) => {
                failures += 1;
                println!("bench cell {} FAILED: {msg}", spec.algorithm);
            }
        }
    }

    println!(
        "bench on {} / {} (seed {seed}, gap_eps {eps:.1e})",
        prepared.manifold.name(),
        prepared.objective.name()
    );
    println!(
        "{:<32} {:<14} {:>12} {:>14} {:>12} {:>16} {:>12}",
        "method", "schedule", "final_gap", "iters_to_eps", "inner_iters", "curvature_bound", "zeta"
    );
    let mut table = String::new();
    table.push_str("method,schedule,final_gap,iters_to_eps,inner_iters,curvature_bound,zeta\n");
    for r in &rows {
        let curv = match r.curvature_bound {
            Some(k) => format!("{k:.6}"),
            None => "not_required".into(),
        };
        println!(
            "{:<32} {:<14} {:>12} {:>14} {:>12} {:>16} {:>12}",
            r.method,
            r.schedule,
            fmt_opt_sci(r.final_gap),
            r.iters_to_eps
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into()),
            r.total_inner_iters,
            curv,
            fmt_opt_sci(r.zeta_max),
        );
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.schedule,
            r.final_gap.map(csvio::fmt_f64).unwrap_or_default(),
            r.iters_to_eps.map(|v| v.to_string()).unwrap_or_default(),
            r.total_inner_iters,
            curv,
            r.zeta_max.map(csvio::fmt_f64).unwrap_or_default(),
        ));
    }
    std::fs::write(out_dir.join("bench_summary.csv"), table)
        .map_err(|e| CliError::Config(format!("cannot write bench summary: {e}")))?;

    if failures > 0 {
        return Err(CliError::Numerical(format!(
            "{failures} bench cells failed numerically"
        )));
    }
    Ok(())
}
