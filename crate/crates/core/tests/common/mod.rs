//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use std::path::PathBuf;

use hs_core::evolution::{self, Trajectory, TrajectorySetup};
use hs_core::grid::{ball_mask, Ball};
use hs_core::media::{sample_media_with, MediaField, MediaSpec};
use hs_core::obstacle::{Relaxation, SolverSettings};
use hs_core::experiments::ExperimentConfig;
use hs_core::{Grid, Schedule, ScalarField};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

pub fn load_config(name: &str, overrides: &[&str]) -> ExperimentConfig {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::load(&config_path(name), &overrides).expect("config loads")
}

/// A small two-dimensional ball-core problem.
#[derive(Debug, Clone)]
pub struct SmallCase {
    pub nodes: usize,
    pub extent: f64,
    pub core: f64,
    pub initial: f64,
    pub media: MediaSpec,
    pub times: Vec<f64>,
    pub fitted: bool,
    pub schedule: Schedule,
}

impl SmallCase {
    pub fn default_2d() -> Self {
        SmallCase {
            nodes: 33,
            extent: 4.0,
            core: 0.6,
            initial: 1.0,
            media: MediaSpec::checkerboard(1.0, 2.0, 0.5, 7),
            times: vec![0.25, 0.5, 1.0, 2.0],
            fitted: false,
            schedule: Schedule::Parallel,
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::new(2, self.extent, self.nodes).expect("grid")
    }

    pub fn media(&self) -> MediaField {
        sample_media_with(&self.media, &self.grid(), self.schedule).expect("media")
    }

    pub fn setup_with(&self, media: MediaField) -> TrajectorySetup {
        let grid = self.grid();
        let core = ball_mask(&grid, &[0.0; 3], self.core).expect("core");
        let init = ball_mask(&grid, &[0.0; 3], self.initial).expect("initial");
        let mut setup = TrajectorySetup::new(grid, core, init, media, self.times.clone());
        setup.solver = SolverSettings {
            omega: Relaxation::Auto,
            schedule: self.schedule,
            ..SolverSettings::default()
        };
        if self.fitted {
            setup.fitted_core = Some(Ball::centered(self.core));
        }
        setup
    }

    pub fn run(&self) -> Trajectory {
        evolution::run_trajectory(&self.setup_with(self.media())).expect("trajectory")
    }
}

/// Every snapshot solved to its tolerance, complementarity included.
pub fn check_complementarity(traj: &Trajectory) -> Result<(), String> {
    for s in &traj.snapshots {
        let d = &s.diagnostics;
        if !(d.comp_residual <= d.tol && d.pde_residual <= d.tol) {
            return Err(format!(
                "t = {}: residuals {:.3e} / {:.3e} above tol {:.3e}",
                s.t, d.pde_residual, d.comp_residual, d.tol
            ));
        }
    }
    Ok(())
}

/// Nodewise `0 <= u_{k+1} - u_k <= Δt` up to the solver error bound.
pub fn check_monotone_and_lipschitz(traj: &Trajectory) -> Result<(), String> {
    for k in 1..traj.len() {
        let (a, b) = (&traj.snapshots[k - 1], &traj.snapshots[k]);
        let slack = traj.error_bound(k - 1) + traj.error_bound(k);
        let lip = traj.amplitude * (b.t - a.t);
        for p in 0..traj.grid.len() {
            let d = b.u[p] - a.u[p];
            if d < -slack {
                return Err(format!("u drops by {} at node {p} between t = {} and {}", -d, a.t, b.t));
            }
            if d > lip + slack {
                return Err(format!("u grows by {d} > {lip} at node {p} between t = {} and {}", a.t, b.t));
            }
        }
    }
    Ok(())
}

/// `{u_k > ε} ⊂ {u_{k+1} > ε}`.
pub fn check_nested(traj: &Trajectory) -> Result<(), String> {
    for k in 1..traj.len() {
        let (a, b) = (&traj.snapshots[k - 1], &traj.snapshots[k]);
        if !a.positivity.is_subset_of(&b.positivity) {
            return Err(format!("positivity set shrinks between t = {} and {}", a.t, b.t));
        }
    }
    Ok(())
}

/// A faster medium (pointwise larger g) gives a pointwise larger u.
pub fn check_media_monotone(case: &SmallCase, factor: f64) -> Result<(), String> {
    let slow = case.media();
    let mut fast = slow.clone();
    for p in 0..fast.g.len() {
        fast.g[p] *= factor;
        fast.ell[p] = 1.0 / fast.g[p];
    }
    let a = evolution::run_trajectory(&case.setup_with(slow)).map_err(|e| e.to_string())?;
    let b = evolution::run_trajectory(&case.setup_with(fast)).map_err(|e| e.to_string())?;
    for k in 0..a.len() {
        let slack = a.error_bound(k) + b.error_bound(k);
        let (ua, ub) = (&a.snapshots[k].u, &b.snapshots[k].u);
        if let Some(p) = (0..ua.len()).find(|&p| ua[p] > ub[p] + slack) {
            return Err(format!("t = {}: u decreases with g at node {p}", a.snapshots[k].t));
        }
    }
    Ok(())
}

/// Backward-difference and harmonic pressures stay in `[0, 1]` up to the
/// solver error.
pub fn check_pressure_bounds(traj: &Trajectory, fitted: Option<&Ball>) -> Result<(), String> {
    let grid = &traj.grid;
    for k in 1..traj.len() {
        let v = evolution::pressure_from_u(traj, k).map_err(|e| e.to_string())?;
        let dt = traj.snapshots[k].t - traj.snapshots[k - 1].t;
        let slack = (traj.error_bound(k) + traj.error_bound(k - 1)) / dt;
        in_unit_interval(&v, slack).map_err(|e| format!("backward difference at t = {}: {e}", traj.snapshots[k].t))?;
    }
    let m = grid.nodes_per_axis() as f64 - 1.0;
    let slack = grid.dim() as f64 * m * m / 4.0 * 1e-11;
    for s in &traj.snapshots {
        let v = evolution::harmonic_pressure(grid, &s.positivity, &traj.core, fitted).map_err(|e| e.to_string())?;
        in_unit_interval(&v, slack).map_err(|e| format!("harmonic pressure at t = {}: {e}", s.t))?;
    }
    Ok(())
}

fn in_unit_interval(v: &ScalarField, slack: f64) -> Result<(), String> {
    let (lo, hi) = (v.min(), v.max());
    if lo < -slack || hi > 1.0 + slack {
        return Err(format!("range [{lo}, {hi}] exceeds [0, 1] by more than {slack:.2e}"));
    }
    Ok(())
}

/// Media samples are bit-identical across schedules and pool sizes.
pub fn check_media_determinism(spec: &MediaSpec, grid: &Grid) -> Result<(), String> {
    let reference = sample_media_with(spec, grid, Schedule::Sequential).map_err(|e| e.to_string())?;
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        let field = pool
            .install(|| sample_media_with(spec, grid, Schedule::Parallel))
            .map_err(|e| e.to_string())?;
        let same = reference
            .g
            .values()
            .iter()
            .zip(field.g.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            return Err(format!("media differ with {threads} threads"));
        }
    }
    Ok(())
}

/// Drops the trailing `wall_ms` column of every CSV line.
pub fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A run's CSV is byte-identical, wall time aside, across schedules and
/// pool sizes.
pub fn check_csv_determinism(cfg: &ExperimentConfig) -> Result<(), String> {
    let run = |cfg: &ExperimentConfig| -> Result<String, String> {
        hs_core::experiments::run_scenario(cfg)
            .map(|o| strip_wall_time(&o.csv()))
            .map_err(|e| e.to_string())
    };
    let mut seq = cfg.clone();
    seq.schedule = Schedule::Sequential;
    let reference = run(&seq)?;
    let mut par = cfg.clone();
    par.schedule = Schedule::Parallel;
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        let csv = pool.install(|| run(&par))?;
        if csv != reference {
            return Err(format!("CSV differs with {threads} threads:\n{csv}\nvs\n{reference}"));
        }
    }
    Ok(())
}
