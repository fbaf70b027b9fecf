//! Warped product I ×_φ ℝ with metric dr² + φ(r)²dθ².
//!
//! For convex positive φ and a one-dimensional fiber the sectional curvature
//! K(r) = −φ″(r)/φ(r)·‖h‖² − (φ′(r)/φ(r))²·‖v‖² is nonpositive and, for
//! φ(r) = exp(r²), unbounded below. There are no closed forms here: exp
//! integrates the geodesic equations with a fixed-step classical 4th-order
//! scheme, log shoots for the initial velocity with a damped Newton iteration,
//! and parallel transport integrates the transport equations along the same
//! trajectory.
//!
//! Geodesic equations of dr² + φ²dθ²:
//!   r″ = φ(r)φ′(r)θ′²,   θ″ = −2(φ′(r)/φ(r)) r′θ′
//! Transport of w = (w_r, w_θ) along a curve with velocity (r′, θ′):
//!   w_r′ = φ(r)φ′(r) θ′ w_θ,   w_θ′ = −(φ′(r)/φ(r)) (r′ w_θ + θ′ w_r)

use std::cell::RefCell;
use std::collections::HashMap;

use crate::geometry::{canonical_pair, Coords, GeometryError, Manifold, ManifoldId, SMALL_NORM};

// Shooting solves are pure and expensive (hundreds of integrator steps), and
// callers such as the quasilinearized inner product evaluate the same point
// pair several times. The memo is thread-local, so cached results are
// bitwise identical to recomputation and scheduling cannot leak across
// threads.
type ShootKey = (u64, u64, u64, u64, u64);

thread_local! {
    static SHOOT_MEMO: RefCell<HashMap<ShootKey, [f64; 2]>> = RefCell::new(HashMap::new());
}

const SHOOT_MEMO_CAP: usize = 8192;

/// Warp functions available to experiments. `TSquared` reproduces the
/// incomplete metric on (0,1); trajectories that reach the boundary raise
/// domain-exit errors rather than being clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpPhi {
    /// φ(r) = cosh r on ℝ; isometric to the hyperbolic plane.
    Cosh,
    /// φ(r) = exp(r²) on ℝ; complete, curvature unbounded below.
    ExpR2,
    /// φ(t) = t² on (0,1); incomplete.
    TSquared,
}

impl WarpPhi {
    pub fn name(&self) -> &'static str {
        match self {
            WarpPhi::Cosh => "cosh",
            WarpPhi::ExpR2 => "exp_r2",
            WarpPhi::TSquared => "t2",
        }
    }

    pub fn default_interval(&self) -> (f64, f64) {
        match self {
            WarpPhi::Cosh | WarpPhi::ExpR2 => (f64::NEG_INFINITY, f64::INFINITY),
            WarpPhi::TSquared => (0.0, 1.0),
        }
    }

    /// (φ, φ′) sharing the transcendental evaluation.
    #[inline]
    fn eval_d1(&self, r: f64) -> (f64, f64) {
        match self {
            WarpPhi::Cosh => (r.cosh(), r.sinh()),
            WarpPhi::ExpR2 => {
                let e = (r * r).exp();
                (e, 2.0 * r * e)
            }
            WarpPhi::TSquared => (r * r, 2.0 * r),
        }
    }

    #[inline]
    pub fn phi(&self, r: f64) -> f64 {
        self.eval_d1(r).0
    }

    #[inline]
    pub fn dphi(&self, r: f64) -> f64 {
        self.eval_d1(r).1
    }

    #[inline]
    pub fn ddphi(&self, r: f64) -> f64 {
        match self {
            WarpPhi::Cosh => r.cosh(),
            WarpPhi::ExpR2 => (4.0 * r * r + 2.0) * (r * r).exp(),
            WarpPhi::TSquared => 2.0,
        }
    }
}

pub struct WarpedProduct {
    id: ManifoldId,
    phi: WarpPhi,
    interval: (f64, f64),
    ode_step: f64,
    shoot_tol: f64,
}

impl WarpedProduct {
    pub const DEFAULT_ODE_STEP: f64 = 1e-2;
    pub const DEFAULT_SHOOT_TOL: f64 = 1e-9;
    const MIN_STEPS: usize = 200;
    const MAX_NEWTON: usize = 100;

    pub fn new(phi: WarpPhi) -> Result<Self, GeometryError> {
        let interval = phi.default_interval();
        Self::with_params(
            phi,
            interval,
            Self::DEFAULT_ODE_STEP,
            Self::DEFAULT_SHOOT_TOL,
        )
    }

    pub fn with_params(
        phi: WarpPhi,
        interval: (f64, f64),
        ode_step: f64,
        shoot_tol: f64,
    ) -> Result<Self, GeometryError> {
        if interval.0.is_nan() || interval.1.is_nan() || interval.0 >= interval.1 {
            return Err(GeometryError::InvalidParameter(format!(
                "empty warp interval ({}, {})",
                interval.0, interval.1
            )));
        }
        if ode_step.is_nan() || shoot_tol.is_nan() || ode_step <= 0.0 || shoot_tol <= 0.0 {
            return Err(GeometryError::InvalidParameter(
                "ode_step and shoot_tol must be positive".into(),
            ));
        }
        let m = Self {
            id: ManifoldId::fresh(),
            phi,
            interval,
            ode_step,
            shoot_tol,
        };
        // Positivity and convexity of the warp are only sampled, not proven.
        let (lo, hi) = m.sampling_range();
        for i in 0..=1000 {
            let r = lo + (hi - lo) * (i as f64) / 1000.0;
            if phi.phi(r).is_nan() || phi.phi(r) <= 0.0 {
                return Err(GeometryError::InvalidParameter(format!(
                    "warp function {} is not positive at r={r}",
                    phi.name()
                )));
            }
            if phi.ddphi(r) < 0.0 {
                return Err(GeometryError::InvalidParameter(format!(
                    "warp function {} is not convex at r={r}",
                    phi.name()
                )));
            }
        }
        Ok(m)
    }

    pub fn phi_kind(&self) -> WarpPhi {
        self.phi
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn shoot_tol(&self) -> f64 {
        self.shoot_tol
    }

    /// Finite range used for construction-time sampling and curvature scans.
    fn sampling_range(&self) -> (f64, f64) {
        let (lo, hi) = self.interval;
        let lo = if lo.is_finite() { lo + 1e-9 } else { -5.0 };
        let hi = if hi.is_finite() { hi - 1e-9 } else { 5.0 };
        (lo, hi)
    }

    /// Lower bound estimate for the sectional curvature over `region`:
    /// min over sampled r of −φ″/φ and −(φ′/φ)². Used for reporting and the
    /// explicit-RGD baseline's ζ term only.
    pub fn sectional_curvature_bound(&self, region: (f64, f64)) -> f64 {
        let lo = region.0.max(self.sampling_range().0);
        let hi = region.1.min(self.sampling_range().1);
        let n = 2000;
        let mut bound = f64::INFINITY;
        for i in 0..=n {
            let r = lo + (hi - lo) * (i as f64) / (n as f64);
            let p = self.phi.phi(r);
            let radial = -self.phi.ddphi(r) / p;
            let rot = -(self.phi.dphi(r) / p).powi(2);
            bound = bound.min(radial).min(rot);
        }
        bound
    }

    /// Right-hand side of the geodesic system for state (r, θ, r′, θ′).
    #[inline]
    pub fn geodesic_rhs(&self, s: [f64; 4]) -> [f64; 4] {
        let (p, dp) = self.phi.eval_d1(s[0]);
        [
            s[2],
            s[3],
            p * dp * s[3] * s[3],
            -2.0 * (dp / p) * s[2] * s[3],
        ]
    }

    #[inline]
    fn transport_rhs(&self, s: [f64; 6]) -> [f64; 6] {
        let (p, dp) = self.phi.eval_d1(s[0]);
        let ratio = dp / p;
        [
            s[2],
            s[3],
            p * dp * s[3] * s[3],
            -2.0 * ratio * s[2] * s[3],
            p * dp * s[3] * s[5],
            -ratio * (s[2] * s[5] + s[3] * s[4]),
        ]
    }

    fn metric_norm(&self, r: f64, v: [f64; 2]) -> f64 {
        let p = self.phi.phi(r);
        (v[0] * v[0] + p * p * v[1] * v[1]).sqrt()
    }

    fn n_steps(&self, speed: f64) -> usize {
        // At least MIN_STEPS; long geodesics get arc-length steps <= ode_step.
        ((speed / self.ode_step).ceil() as usize).max(Self::MIN_STEPS)
    }

    fn check_state(&self, r: f64, state_ok: bool) -> Result<(), GeometryError> {
        if !state_ok {
            return Err(GeometryError::NumericalFailure {
                method: "warped geodesic integration".into(),
                residual: f64::INFINITY,
            });
        }
        if r <= self.interval.0 || r >= self.interval.1 {
            return Err(GeometryError::DomainExit(format!(
                "geodesic reached r={r}, outside ({}, {})",
                self.interval.0, self.interval.1
            )));
        }
        Ok(())
    }

    /// Integrate the geodesic with initial position `pos` and velocity `vel`
    /// over unit time; returns final position and velocity.
    pub fn flow(
        &self,
        pos: [f64; 2],
        vel: [f64; 2],
    ) -> Result<([f64; 2], [f64; 2]), GeometryError> {
        let speed = self.metric_norm(pos[0], vel);
        if speed == 0.0 {
            return Ok((pos, vel));
        }
        let n = self.n_steps(speed);
        let h = 1.0 / n as f64;
        let mut s = [pos[0], pos[1], vel[0], vel[1]];
        for _ in 0..n {
            s = rk4_step(|x| self.geodesic_rhs(x), s, h);
            self.check_state(s[0], s.iter().all(|x| x.is_finite()))?;
        }
        Ok(([s[0], s[1]], [s[2], s[3]]))
    }

    /// Like [`WarpedProduct::flow`] but records every integration state;
    /// used by conservation checks and diagnostics.
    pub fn geodesic_flow_trace(
        &self,
        pos: [f64; 2],
        vel: [f64; 2],
    ) -> Result<Vec<[f64; 4]>, GeometryError> {
        let speed = self.metric_norm(pos[0], vel);
        let n = if speed == 0.0 { 1 } else { self.n_steps(speed) };
        let h = 1.0 / n as f64;
        let mut s = [pos[0], pos[1], vel[0], vel[1]];
        let mut out = Vec::with_capacity(n + 1);
        out.push(s);
        for _ in 0..n {
            s = rk4_step(|x| self.geodesic_rhs(x), s, h);
            self.check_state(s[0], s.iter().all(|x| x.is_finite()))?;
            out.push(s);
        }
        Ok(out)
    }

    /// Shooting solve for the initial velocity v with exp_x(v) = y.
    ///
    /// Damped Newton on the 2-dimensional velocity, with the Jacobian from
    /// forward differences of the flow and the coordinate difference y − x as
    /// the initial guess. If the direct solve stagnates (strongly warped
    /// targets), the target is reached by continuation along the coordinate
    /// chord, warm-starting each stage from the previous velocity. After the
    /// residual first drops below `shoot_tol`, up to two polishing steps are
    /// taken so downstream certificates are not limited by the threshold.
    fn shoot(&self, x: [f64; 2], y: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        let key: ShootKey = (
            self.id.raw(),
            x[0].to_bits(),
            x[1].to_bits(),
            y[0].to_bits(),
            y[1].to_bits(),
        );
        if let Some(hit) = SHOOT_MEMO.with(|m| m.borrow().get(&key).copied()) {
            return Ok(hit);
        }
        let v = self.shoot_uncached(x, y)?;
        SHOOT_MEMO.with(|m| {
            let mut m = m.borrow_mut();
            if m.len() >= SHOOT_MEMO_CAP {
                m.clear();
            }
            m.insert(key, v);
        });
        Ok(v)
    }

    fn shoot_uncached(&self, x: [f64; 2], y: [f64; 2]) -> Result<[f64; 2], GeometryError> {
        let guess = [y[0] - x[0], y[1] - x[1]];
        let direct = self.newton_shoot(x, y, guess, Self::MAX_NEWTON);
        let first_err = match direct {
            Ok(v) => return Ok(v),
            Err(e) => e,
        };

        // Continuation: pull the target in along the coordinate chord.
        let stages = 8;
        let mut v = [0.0, 0.0];
        let mut prev_s = 0.0f64;
        for i in 1..=stages {
            let s = i as f64 / stages as f64;
            let target = [x[0] + s * (y[0] - x[0]), x[1] + s * (y[1] - x[1])];
            let scale = if prev_s > 0.0 { s / prev_s } else { s };
            let guess = [v[0] * scale, v[1] * scale];
            let guess = if i == 1 {
                [target[0] - x[0], target[1] - x[1]]
            } else {
                guess
            };
            match self.newton_shoot(x, target, guess, Self::MAX_NEWTON / 2) {
                Ok(sol) => v = sol,
                Err(_) => return Err(first_err),
            }
            prev_s = s;
        }
        Ok(v)
    }

    fn newton_shoot(
        &self,
        x: [f64; 2],
        y: [f64; 2],
        guess: [f64; 2],
        max_iters: usize,
    ) -> Result<[f64; 2], GeometryError> {
        let target_scale = 1.0 + self.metric_norm(y[0], [1.0, 0.0]).max(self.phi.phi(y[0]));
        let phi_y = self.phi.phi(y[0]);
        // Metric-weighted coordinate residual at the target.
        let res_of = |end: [f64; 2]| -> f64 {
            let dr = end[0] - y[0];
            let dth = (end[1] - y[1]) * phi_y;
            (dr * dr + dth * dth).sqrt()
        };
        let fd_jacobian = |v: [f64; 2], e0: [f64; 2]| -> Option<[[f64; 2]; 2]> {
            let fd = 1e-7 * (1.0 + (v[0].abs() + v[1].abs()));
            let (e1, _) = self.flow(x, [v[0] + fd, v[1]]).ok()?;
            let (e2, _) = self.flow(x, [v[0], v[1] + fd]).ok()?;
            Some([
                [(e1[0] - e0[0]) / fd, (e2[0] - e0[0]) / fd],
                [(e1[1] - e0[1]) / fd, (e2[1] - e0[1]) / fd],
            ])
        };

        let mut v = guess;
        let mut end = match self.flow(x, v) {
            Ok((e, _)) => e,
            // A guess that exits the domain is replaced by a zero move.
            Err(_) => {
                v = [0.0, 0.0];
                self.flow(x, v)?.0
            }
        };
        let mut res = res_of(end);
        let mut polish_left = 2usize;
        let mut converged = res <= self.shoot_tol;
        // The Jacobian is refreshed by finite differences of the flow when
        // stale; accepted steps update it by Broyden's rule, which costs no
        // extra integrations.
        let mut jac: Option<[[f64; 2]; 2]> = None;
        let mut stale = true;

        for it in 0..max_iters {
            if converged && (polish_left == 0 || res < 1e-15 * target_scale) {
                break;
            }
            if stale || it % 6 == 0 || jac.is_none() {
                jac = fd_jacobian(v, end);
                stale = false;
            }
            let j = match jac {
                Some(j) => j,
                None => break,
            };
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            let rhs = [y[0] - end[0], y[1] - end[1]];
            let step = [
                (rhs[0] * j[1][1] - rhs[1] * j[0][1]) / det,
                (rhs[1] * j[0][0] - rhs[0] * j[1][0]) / det,
            ];

            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = [v[0] + lambda * step[0], v[1] + lambda * step[1]];
                if let Ok((e, _)) = self.flow(x, cand) {
                    let r = res_of(e);
                    if r < res {
                        // Broyden update from the accepted displacement.
                        let dv = [cand[0] - v[0], cand[1] - v[1]];
                        let de = [e[0] - end[0], e[1] - end[1]];
                        let dv2 = dv[0] * dv[0] + dv[1] * dv[1];
                        if dv2 > 0.0 {
                            if let Some(jm) = jac.as_mut() {
                                let jdv = [
                                    jm[0][0] * dv[0] + jm[0][1] * dv[1],
                                    jm[1][0] * dv[0] + jm[1][1] * dv[1],
                                ];
                                for r_i in 0..2 {
                                    for c_i in 0..2 {
                                        jm[r_i][c_i] += (de[r_i] - jdv[r_i]) * dv[c_i] / dv2;
                                    }
                                }
                            }
                        }
                        v = cand;
                        end = e;
                        res = r;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                if stale {
                    break;
                }
                // Quasi-Newton step failed; retry once with a fresh Jacobian.
                stale = true;
                continue;
            }
            if lambda < 0.25 {
                stale = true;
            }
            if converged {
                polish_left -= 1;
            }
            if res <= self.shoot_tol && !converged {
                converged = true;
                // Polish with a fresh Jacobian: full Newton steps converge
                // quadratically and push the residual to the rounding floor,
                // so downstream gradients are not limited by shoot_tol.
                stale = true;
            }
        }

        if !converged {
            return Err(GeometryError::NumericalFailure {
                method: "warped log shooting (Newton stagnation)".into(),
                residual: res,
            });
        }
        Ok(v)
    }
}

#[inline]
fn rk4_step<const N: usize>(f: impl Fn([f64; N]) -> [f64; N], s: [f64; N], h: f64) -> [f64; N] {
    let k1 = f(s);
    let mut t = s;
    for i in 0..N {
        t[i] = s[i] + 0.5 * h * k1[i];
    }
    let k2 = f(t);
    for i in 0..N {
        t[i] = s[i] + 0.5 * h * k2[i];
    }
    let k3 = f(t);
    for i in 0..N {
        t[i] = s[i] + h * k3[i];
    }
    let k4 = f(t);
    let mut out = s;
    for i in 0..N {
        out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

impl Manifold for WarpedProduct {
    fn id(&self) -> ManifoldId {
        self.id
    }

    fn name(&self) -> String {
        format!(
            "warped{{phi={},interval=({},{})}}",
            self.phi.name(),
            self.interval.0,
            self.interval.1
        )
    }

    fn ambient_dim(&self) -> usize {
        2
    }

    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn origin(&self) -> Coords {
        let (lo, hi) = self.interval;
        let r = if lo.is_finite() && hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            0.0
        };
        Coords::from_column_slice(&[r, 0.0])
    }

    fn check_point(&self, coords: &Coords) -> Result<(), GeometryError> {
        if coords.len() != 2 || coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NotOnManifold {
                detail: "expected two finite coordinates (r, theta)".into(),
                defect: f64::INFINITY,
            });
        }
        let r = coords[0];
        if r <= self.interval.0 || r >= self.interval.1 {
            return Err(GeometryError::NotOnManifold {
                detail: format!(
                    "r={r} outside the open interval ({}, {})",
                    self.interval.0, self.interval.1
                ),
                defect: (r - self.interval.0).abs().min((r - self.interval.1).abs()),
            });
        }
        Ok(())
    }

    fn tangency_defect(&self, _base: &Coords, v: &Coords) -> f64 {
        if v.len() == 2 && v.iter().all(|c| c.is_finite()) {
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

    fn inner(&self, base: &Coords, u: &Coords, v: &Coords) -> f64 {
        let p = self.phi.phi(base[0]);
        u[0] * v[0] + p * p * u[1] * v[1]
    }

    fn exp(&self, base: &Coords, v: &Coords) -> Result<Coords, GeometryError> {
        let (end, _) = self.flow([base[0], base[1]], [v[0], v[1]])?;
        Ok(Coords::from_column_slice(&end))
    }

    fn log(&self, x: &Coords, y: &Coords) -> Result<Coords, GeometryError> {
        if x == y {
            return Ok(Coords::zeros(2));
        }
        let v = self.shoot([x[0], x[1]], [y[0], y[1]])?;
        Ok(Coords::from_column_slice(&v))
    }

    fn distance(&self, x: &Coords, y: &Coords) -> Result<f64, GeometryError> {
        if x == y {
            return Ok(0.0);
        }
        let (a, b) = canonical_pair(x, y);
        let v = self.shoot([a[0], a[1]], [b[0], b[1]])?;
        Ok(self.metric_norm(a[0], v))
    }

    fn transport(&self, x: &Coords, v: &Coords, y: &Coords) -> Result<Coords, GeometryError> {
        if (y - x).amax() < SMALL_NORM {
            return Ok(v.clone());
        }
        let u = self.shoot([x[0], x[1]], [y[0], y[1]])?;
        let speed = self.metric_norm(x[0], u);
        if speed < SMALL_NORM {
            return Ok(v.clone());
        }
        let n = self.n_steps(speed);
        let h = 1.0 / n as f64;
        let mut s = [x[0], x[1], u[0], u[1], v[0], v[1]];
        for _ in 0..n {
            s = rk4_step(|t| self.transport_rhs(t), s, h);
            self.check_state(s[0], s.iter().all(|c| c.is_finite()))?;
        }
        Ok(Coords::from_column_slice(&[s[4], s[5]]))
    }

    fn tangent_basis(&self, base: &Coords) -> Vec<Coords> {
        vec![
            Coords::from_column_slice(&[1.0, 0.0]),
            Coords::from_column_slice(&[0.0, 1.0 / self.phi.phi(base[0])]),
        ]
    }
}
