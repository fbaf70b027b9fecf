//! The `verify` command: runs the randomized property suites at acceptance
//! scale with a fixed default seed and reports per-check worst slacks.

use std::sync::Arc;

use hgopt_core::geometry::Manifold;
use hgopt_core::manifolds::{EuclideanSpace, HyperbolicSpace, SpdManifold, WarpPhi, WarpedProduct};
use hgopt_core::solvers::zeta;
use hgopt_core::verify::{self, CheckOutcome};

use crate::CliError;

pub const SUITES: [&str; 5] = ["quasilinear", "geometry", "convexity", "rates", "appendix"];
pub const DEFAULT_SEED: u64 = 20240917;

pub struct VerifyOptions {
    pub suites: Vec<String>,
    pub seed: u64,
    /// Sample count for the randomized sweeps (acceptance scale when unset).
    pub samples: Option<usize>,
}

pub fn acceptance_manifolds() -> Result<Vec<Arc<dyn Manifold>>, CliError> {
    let num = |e: hgopt_core::GeometryError| CliError::Numerical(e.to_string());
    Ok(vec![
        Arc::new(EuclideanSpace::new(5).map_err(num)?),
        Arc::new(HyperbolicSpace::new(3, -1.0).map_err(num)?),
        Arc::new(SpdManifold::new(3).map_err(num)?),
        Arc::new(WarpedProduct::new(WarpPhi::ExpR2).map_err(num)?),
    ])
}

fn print_and_tally(checks: &[CheckOutcome], all_ok: &mut bool) {
    for c in checks {
        println!("{}", c.line());
        *all_ok &= c.passed;
    }
}

pub fn cmd_verify(opts: &VerifyOptions) -> Result<(), CliError> {
    let mut requested: Vec<String> = opts.suites.iter().map(|s| s.to_ascii_lowercase()).collect();
    if requested.is_empty() {
        requested = SUITES.iter().map(|s| s.to_string()).collect();
    }
    for s in &requested {
        if !SUITES.contains(&s.as_str()) {
            return Err(CliError::Config(format!(
                "unknown suite '{s}' (expected one of {})",
                SUITES.join(", ")
            )));
        }
    }

    let num = |e: hgopt_core::GeometryError| CliError::Numerical(e.to_string());
    let manifolds = acceptance_manifolds()?;
    let seed = opts.seed;
    let mut all_ok = true;

    for suite in &requested {
        println!("== suite: {suite} (seed {seed})");
        match suite.as_str() {
            "quasilinear" => {
                let samples = opts.samples.unwrap_or(10_000);
                for m in &manifolds {
                    let rep = verify::quasilinear_suite(m, samples, seed).map_err(num)?;
                    print_and_tally(&rep.checks, &mut all_ok);
                }
            }
            "geometry" => {
                let samples = opts.samples.unwrap_or(10_000);
                for m in &manifolds {
                    let rep = verify::geometry_suite(m, samples, seed).map_err(num)?;
                    print_and_tally(&rep.checks, &mut all_ok);
                }
                let slacks = verify::cross_manifold_cosh_check(
                    opts.samples.unwrap_or(10_000).min(500),
                    seed,
                    1e-5,
                )
                .map_err(num)?;
                let worst = slacks.iter().cloned().fold(f64::INFINITY, f64::min);
                let ok = worst >= 0.0;
                println!(
                    "{} cross-manifold cosh warp vs lorentz h2 (1e-5)          worst_slack={worst:+.3e}",
                    if ok { "PASS" } else { "FAIL" }
                );
                all_ok &= ok;
            }
            "convexity" => {
                let samples = opts.samples.unwrap_or(1_000);
                for m in &manifolds {
                    let rep = verify::convexity_suite(m, samples, seed).map_err(num)?;
                    print_and_tally(&rep.checks, &mut all_ok);
                }
            }
            "appendix" => {
                let points = opts.samples.unwrap_or(100).min(1_000);
                for m in &manifolds {
                    let rep = verify::appendix_suite(m, points, seed).map_err(num)?;
                    print_and_tally(&rep.checks, &mut all_ok);
                }
            }
            "rates" => {
                run_rates_suite(opts, &mut all_ok)?;
            }
            _ => unreachable!(),
        }
    }

    if all_ok {
        println!("all requested suites passed");
        Ok(())
    } else {
        Err(CliError::Violation(
            "one or more suite checks failed".into(),
        ))
    }
}

/// Deterministic and stochastic rate certificates at acceptance scale.
fn run_rates_suite(opts: &VerifyOptions, all_ok: &mut bool) -> Result<(), CliError> {
    let num = |e: hgopt_core::GeometryError| CliError::Numerical(e.to_string());
    let quick = opts.samples.is_some();
    let (t_det, n_seeds, t_stoch, t_sum) = if quick {
        (100, 3, 300, 1_000)
    } else {
        (500, 20, 2_000, 10_000)
    };

    for (inst, eta) in verify::prox_rate_instances().map_err(num)? {
        let cert = verify::prox_rate_certificate(&inst, eta, t_det).map_err(num)?;
        println!("{}", cert.line());
        *all_ok &= cert.passed();
    }

    let checks = verify::contraction_acceptance_checks().map_err(num)?;
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for c in &checks {
        worst = worst.max(c.worst_ratio - c.bound);
        ok &= c.passed();
    }
    println!(
        "{} inner-gd contraction on {} prox subproblems               worst_excess={worst:+.3e}",
        if ok { "PASS" } else { "FAIL" },
        checks.len()
    );
    *all_ok &= ok;

    let inst = verify::stochastic_instance(8, 99).map_err(num)?;
    println!(
        "     stochastic instance: L={:.4} sigma^2(x*)={:.6e}",
        inst.smoothness, inst.sigma_sq_at_opt
    );
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for seed in 1..=n_seeds {
        let out = verify::stochastic_rate_certificate(&inst, seed as u64, t_stoch).map_err(num)?;
        worst_margin = worst_margin.min(out.rhs - out.weighted_gap_sum);
        ok &= out.passed();
    }
    println!(
        "{} stochastic weighted-gap bound over {n_seeds} seeds          worst_margin={worst_margin:+.3e}",
        if ok { "PASS" } else { "FAIL" }
    );
    *all_ok &= ok;

    let mut ok = true;
    let mut worst_frac: f64 = 0.0;
    for seed in 1..=n_seeds {
        let out = verify::summability_check(&inst, seed as u64, t_sum).map_err(num)?;
        worst_frac = worst_frac.max(out.final_increment / out.final_sum.abs().max(0.01));
        ok &= out.passed();
    }
    println!(
        "{} summability partial sums plateau over {n_seeds} seeds            worst_final_increment_frac={worst_frac:.3e}",
        if ok { "PASS" } else { "FAIL" }
    );
    *all_ok &= ok;

    let z = zeta(-1.0, 1.0);
    let ok = (z - 1.0 / 1.0f64.tanh()).abs() <= 1e-12;
    println!(
        "{} zeta(-1,1) = 1/tanh(1)                                  value={z:.15}",
        if ok { "PASS" } else { "FAIL" }
    );
    *all_ok &= ok;
    Ok(())
}
