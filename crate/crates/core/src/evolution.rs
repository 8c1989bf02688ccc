//! Weak solutions along a time ladder, pressure recovery and rescaling.
//!
//! Every ladder time is an independent obstacle solve; warm starts from the
//! previous snapshot only speed the solver up. The pressure is recovered as
//! the backward difference of `u` in time, or independently as the harmonic
//! function on the positivity set.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::analytic;
use crate::error::{Error, Result};
use crate::freeboundary;
use crate::grid::{Ball, Grid, NodeMask, Point, ScalarField};
use crate::media::MediaField;
use crate::obstacle::{self, ObstacleProblem, Relaxation, SolverSettings};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub pde_residual: f64,
    pub comp_residual: f64,
    pub tol: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: ScalarField,
    pub positivity: NodeMask,
    /// Smallest and largest radius of the discrete free boundary (zero when
    /// the positivity set is empty).
    pub r_min: f64,
    pub r_max: f64,
    pub diagnostics: SolveDiagnostics,
}

impl Snapshot {
    /// Thresholds `u` at `eps_pos` and measures the free boundary.
    pub fn new(grid: &Grid, t: f64, u: ScalarField, eps_pos: f64, diagnostics: SolveDiagnostics) -> Result<Self> {
        let positivity = NodeMask::from_fn(grid, |p| u[p] > eps_pos);
        let (r_min, r_max) = if positivity.any() {
            let sample = freeboundary::extract_boundary(grid, &positivity, t)?;
            let radii = sample.radii();
            (
                radii.iter().copied().fold(f64::INFINITY, f64::min),
                radii.iter().copied().fold(0.0, f64::max),
            )
        } else {
            (0.0, 0.0)
        };
        Ok(Snapshot {
            t,
            u,
            positivity,
            r_min,
            r_max,
            diagnostics,
        })
    }
}

/// Everything needed to compute `u(·, t_k)` on a ladder.
#[derive(Debug, Clone)]
pub struct TrajectorySetup {
    pub grid: Grid,
    pub core: NodeMask,
    pub initial: NodeMask,
    pub media: MediaField,
    pub times: Vec<f64>,
    pub solver: SolverSettings,
    pub warm_start: bool,
    /// Core value is `amplitude · t` (1 for the unscaled problem).
    pub amplitude: f64,
    /// When the core is this ball, impose the core value on its sphere with
    /// boundary-fitted stencils instead of on the core nodes only.
    pub fitted_core: Option<Ball>,
}

impl TrajectorySetup {
    pub fn new(grid: Grid, core: NodeMask, initial: NodeMask, media: MediaField, times: Vec<f64>) -> Self {
        TrajectorySetup {
            grid,
            core,
            initial,
            media,
            times,
            solver: SolverSettings::default(),
            warm_start: true,
            amplitude: 1.0,
            fitted_core: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub core: NodeMask,
    pub snapshots: Vec<Snapshot>,
    pub eps_pos: f64,
    pub amplitude: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Bound on the solver error of snapshot `k`: the residual tolerance
    /// times `n (N-1)² / 4`, the sup-norm of the inverse discrete Laplacian
    /// on the box in residual units.
    pub fn error_bound(&self, k: usize) -> f64 {
        let n = self.grid.dim() as f64;
        let m = self.grid.nodes_per_axis() as f64 - 1.0;
        n * m * m / 4.0 * self.snapshots[k].diagnostics.tol
    }

    /// Checks nonnegativity, monotonicity and Lipschitz continuity in time,
    /// and nestedness of the positivity sets.
    pub fn check_invariants(&self) -> Result<()> {
        for (k, s) in self.snapshots.iter().enumerate() {
            if let Some(p) = s.u.values().iter().position(|&v| !(v >= 0.0)) {
                return Err(Error::Invariant(format!(
                    "u(·, {}) = {} < 0 at node {p}",
                    s.t, s.u[p]
                )));
            }
            if k == 0 {
                continue;
            }
            let prev = &self.snapshots[k - 1];
            let slack = self.error_bound(k - 1) + self.error_bound(k);
            let lip = self.amplitude * (s.t - prev.t);
            for p in 0..self.grid.len() {
                let d = s.u[p] - prev.u[p];
                if d < -slack {
                    return Err(Error::Invariant(format!(
                        "u decreases between t = {} and t = {} at node {p} by {}",
                        prev.t, s.t, -d
                    )));
                }
                if d > lip + slack {
                    return Err(Error::Invariant(format!(
                        "u grows faster than {} between t = {} and t = {} at node {p}",
                        self.amplitude, prev.t, s.t
                    )));
                }
                if prev.u[p] > self.eps_pos + slack && !s.positivity.get(p) {
                    return Err(Error::Invariant(format!(
                        "positivity sets not nested between t = {} and t = {}",
                        prev.t, s.t
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Solves the obstacle problem at every ladder time.
pub fn run_trajectory(setup: &TrajectorySetup) -> Result<Trajectory> {
    let times = &setup.times;
    if times.is_empty() {
        return Err(Error::InvalidInput("empty time ladder".into()));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "time ladder must be nonnegative and strictly increasing".into(),
        ));
    }
    let grid = &setup.grid;
    if let Some(ball) = &setup.fitted_core {
        if ball.mask(grid)? != setup.core {
            return Err(Error::InvalidInput("fitted ball does not match the core mask".into()));
        }
    }
    let eps_pos = obstacle::positivity_threshold(grid, setup.media.ell_max());

    let solve_one = |t: f64, guess: Option<&ScalarField>| -> Result<Snapshot> {
        let start = Instant::now();
        let mut prob = ObstacleProblem::assemble_rescaled(
            grid,
            &setup.core,
            &setup.initial,
            &setup.media,
            t,
            setup.amplitude,
        )?;
        if let Some(ball) = &setup.fitted_core {
            prob.fit_ball(ball, setup.amplitude * t)?;
        }
        let sol = match guess {
            Some(g) => obstacle::psor_solve_from(&prob, &setup.solver, g)?,
            None => obstacle::psor_solve(&prob, &setup.solver)?,
        }
        .into_converged()?;
        let diagnostics = SolveDiagnostics {
            iterations: sol.iterations,
            pde_residual: sol.pde_residual,
            comp_residual: sol.complementarity_residual,
            tol: sol.tol,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        Snapshot::new(grid, t, sol.w, eps_pos, diagnostics).map_err(|e| match e {
            Error::SupportTouchesBox { .. } => Error::SupportTouchesBox { t },
            other => other,
        })
    };

    let snapshots = if setup.warm_start {
        let mut out: Vec<Snapshot> = Vec::with_capacity(times.len());
        for &t in times {
            let snap = solve_one(t, out.last().map(|s| &s.u))?;
            out.push(snap);
        }
        out
    } else {
        par::map_collect(setup.solver.schedule, times, |&t| solve_one(t, None))
            .into_iter()
            .collect::<Result<Vec<_>>>()?
    };

    let traj = Trajectory {
        grid: grid.clone(),
        core: setup.core.clone(),
        snapshots,
        eps_pos,
        amplitude: setup.amplitude,
    };
    traj.check_invariants()?;
    Ok(traj)
}

/// Pressure at ladder index `k` as the backward difference
/// `(u_k - u_{k-1}) / (t_k - t_{k-1})`.
pub fn pressure_from_u(traj: &Trajectory, k: usize) -> Result<ScalarField> {
    if k == 0 || k >= traj.len() {
        return Err(Error::InvalidInput(format!(
            "pressure needs 1 <= k < {}, got {k}",
            traj.len()
        )));
    }
    let (a, b) = (&traj.snapshots[k - 1], &traj.snapshots[k]);
    let dt = b.t - a.t;
    Ok(ScalarField::from_vec(
        a.u.values()
            .iter()
            .zip(b.u.values())
            .map(|(ua, ub)| (ub - ua) / dt)
            .collect(),
    ))
}

/// Pressure at a snapshot as the solution of `Δv = 0` on the positivity set
/// minus the core, `v = 1` on the core and `v = 0` elsewhere. With
/// `fitted_core`, `v = 1` is imposed on the sphere of that ball.
pub fn harmonic_pressure(
    grid: &Grid,
    positivity: &NodeMask,
    core: &NodeMask,
    fitted_core: Option<&Ball>,
) -> Result<ScalarField> {
    if !positivity.any() {
        return Err(Error::InvalidInput("empty positivity set".into()));
    }
    if !core.is_subset_of(positivity) {
        return Err(Error::InvalidInput("core is not inside the positivity set".into()));
    }
    let mut pinned = NodeMask::empty(grid);
    let mut dirichlet = ScalarField::zeros(grid);
    for p in 0..grid.len() {
        if core.get(p) {
            pinned.set(p, true);
            dirichlet[p] = 1.0;
        } else if grid.is_far_field(p) || !positivity.get(p) {
            pinned.set(p, true);
        }
    }
    let mut prob = ObstacleProblem {
        grid: grid.clone(),
        pinned,
        dirichlet,
        source: ScalarField::zeros(grid),
        projected: false,
        tol_scale: 1.0,
        cut: Vec::new(),
    };
    if let Some(ball) = fitted_core {
        if ball.mask(grid)? != *core {
            return Err(Error::InvalidInput("fitted ball does not match the core mask".into()));
        }
        prob.fit_ball(ball, 1.0)?;
    }
    let settings = SolverSettings {
        omega: Relaxation::Auto,
        tol: Some(1e-11),
        ..SolverSettings::default()
    };
    Ok(obstacle::psor_solve(&prob, &settings)?.into_converged()?.w)
}

/// The parabolic rescaling `u^λ(x, t) = κ(λ) u(s(λ) x, λ t)`.
///
/// For `n >= 3`, `s = λ^{1/n}` and `κ = λ^{-2/n}`; for `n = 2`, `s = ℛ(λ)`
/// and `κ = log ℛ(λ) / λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rescaling {
    pub dim: usize,
    pub lambda: f64,
    space: f64,
}

impl Rescaling {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
        }
        let space = if dim == 2 {
            analytic::rescale_radius_2d(lambda)?
        } else {
            lambda.powf(1.0 / dim as f64)
        };
        Ok(Rescaling { dim, lambda, space })
    }

    /// Spatial dilation `s(λ)`.
    pub fn space_factor(&self) -> f64 {
        self.space
    }

    /// Factor applied to the pressure: `λ^{(n-2)/n}` or `log ℛ(λ)`. It is
    /// also the core value of the rescaled problem per unit time.
    pub fn pressure_amplitude(&self) -> f64 {
        if self.dim == 2 {
            self.space.ln()
        } else {
            let n = self.dim as f64;
            self.lambda.powf((n - 2.0) / n)
        }
    }

    /// Factor applied to `u`: `pressure_amplitude / λ`.
    pub fn u_amplitude(&self) -> f64 {
        self.pressure_amplitude() / self.lambda
    }
}

/// `v^λ(x) = pressure_amplitude · v(s(λ) x)` for a time-independent pressure.
pub fn rescale_pressure<F>(v: F, rescaling: Rescaling) -> impl Fn(&Point) -> f64
where
    F: Fn(&Point) -> f64,
{
    move |x: &Point| {
        let s = rescaling.space_factor();
        v(&[s * x[0], s * x[1], s * x[2]]) * rescaling.pressure_amplitude()
    }
}

/// A scalar function of space and time that can be sampled pointwise.
pub trait SpaceTimeField {
    fn eval(&self, x: &Point, t: f64) -> Result<f64>;
}

impl<T: SpaceTimeField + ?Sized> SpaceTimeField for &T {
    fn eval(&self, x: &Point, t: f64) -> Result<f64> {
        (**self).eval(x, t)
    }
}

impl SpaceTimeField for Trajectory {
    /// Multilinear in space, linear in time between snapshots.
    fn eval(&self, x: &Point, t: f64) -> Result<f64> {
        let times = self.times();
        let (first, last) = (times[0], times[times.len() - 1]);
        if !(t >= first && t <= last) {
            return Err(Error::InvalidInput(format!(
                "time {t} outside the ladder [{first}, {last}]"
            )));
        }
        let k = times.partition_point(|&s| s < t);
        let sample = |i: usize| {
            self.grid
                .interpolate(&self.snapshots[i].u, x)
                .ok_or_else(|| Error::InvalidInput(format!("point {x:?} outside the box")))
        };
        if times[k] == t {
            return sample(k);
        }
        let (t0, t1) = (times[k - 1], times[k]);
        let w = (t - t0) / (t1 - t0);
        Ok((1.0 - w) * sample(k - 1)? + w * sample(k)?)
    }
}

/// A read-only rescaled view of a space-time field.
#[derive(Debug, Clone)]
pub struct RescaledView<F> {
    inner: F,
    rescaling: Rescaling,
}

impl<F: SpaceTimeField> SpaceTimeField for RescaledView<F> {
    fn eval(&self, x: &Point, t: f64) -> Result<f64> {
        let s = self.rescaling.space_factor();
        let y = [s * x[0], s * x[1], s * x[2]];
        Ok(self.rescaling.u_amplitude() * self.inner.eval(&y, self.rescaling.lambda * t)?)
    }
}

/// `u^λ` as a view over `field`.
pub fn rescale_u<F: SpaceTimeField>(field: F, dim: usize, lambda: f64) -> Result<RescaledView<F>> {
    if lambda < 1.0 {
        return Err(Error::InvalidInput(format!("λ must be at least 1, got {lambda}")));
    }
    Ok(RescaledView {
        inner: field,
        rescaling: Rescaling::new(dim, lambda)?,
    })
}
