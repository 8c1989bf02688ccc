//! Scenario runners tying grid, media, solver and analysis together.

pub mod config;
pub mod output;

pub use config::{ExperimentConfig, Ladder, Scenario};
pub use output::{format_g9, Check, NearFieldRow, ResultRow, RunOutput, CSV_HEADER};

use crate::analytic::{self, LimitProfileParams, RadialParams};
use crate::error::{Error, Result};
use crate::evolution::{self, Rescaling, Snapshot, Trajectory, TrajectorySetup};
use crate::freeboundary::{self, SphericityReport};
use crate::grid::{ball_mask, Ball, Grid, NodeMask};
use crate::media::{sample_media_with, MediaKind, MediaSpec};
use crate::obstacle;
use crate::par;
use std::time::Instant;

/// Runs the scenario named in `cfg`.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.scenario {
        config::Scenario::RadialValidate => radial_validate(cfg),
        config::Scenario::LimitProblem => limit_problem(cfg),
        config::Scenario::NearField => near_field(cfg),
        config::Scenario::GrowthExponent => growth_exponent(cfg),
        config::Scenario::Homogenize => homogenize(cfg),
    }
}

/// Validates the config and builds every input without solving.
pub fn dry_run(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let grid = grid_of(cfg)?;
    if cfg.scenario == Scenario::LimitProblem {
        let params = limit_params(cfg)?;
        let t = *cfg.times.0.last().expect("validated ladder");
        let rho = analytic::rho(&params, t);
        if !(cfg.core_radius < rho && rho < cfg.extent - grid.h()) {
            return Err(Error::Config(format!(
                "free-boundary radius {rho} must lie between core_radius and the box"
            )));
        }
        return Ok(());
    }
    let (core, init) = ball_masks(cfg, &grid)?;
    crate::grid::NodeRoles::new(&grid, &core, &init).map_err(config_error)?;
    sample_media_with(&cfg.media, &grid, cfg.schedule).map_err(config_error)?;
    let t_end = *cfg.times.0.last().expect("validated ladder");
    let bound = analytic::support_radius_bound(cfg.dim, cfg.core_radius, cfg.initial_radius, cfg.media.g_max, t_end)?;
    if bound >= cfg.extent - grid.h() {
        return Err(Error::Config(format!(
            "support may reach radius {bound} by t = {t_end}, past the box"
        )));
    }
    Ok(())
}

fn config_error(e: Error) -> Error {
    match e {
        Error::InvalidGrid(m) | Error::InvalidMask(m) | Error::InvalidMedia(m) | Error::InvalidInput(m) => {
            Error::Config(m)
        }
        other => other,
    }
}

fn grid_of(cfg: &ExperimentConfig) -> Result<Grid> {
    Grid::new(cfg.dim, cfg.extent, cfg.nodes).map_err(config_error)
}

fn ball_masks(cfg: &ExperimentConfig, grid: &Grid) -> Result<(NodeMask, NodeMask)> {
    let core = ball_mask(grid, &[0.0; 3], cfg.core_radius).map_err(config_error)?;
    let init = ball_mask(grid, &[0.0; 3], cfg.initial_radius).map_err(config_error)?;
    if !core.any() {
        return Err(Error::Config("core ball contains no grid node".into()));
    }
    Ok((core, init))
}

fn limit_params(cfg: &ExperimentConfig) -> Result<LimitProfileParams> {
    LimitProfileParams::new(cfg.amplitude, cfg.latent_heat, cfg.dim).map_err(config_error)
}

fn trajectory(cfg: &ExperimentConfig) -> Result<Trajectory> {
    let grid = grid_of(cfg)?;
    let (core, init) = ball_masks(cfg, &grid)?;
    let media = sample_media_with(&cfg.media, &grid, cfg.schedule).map_err(config_error)?;
    let mut setup = TrajectorySetup::new(grid, core, init, media, cfg.times.0.clone());
    setup.solver = cfg.solver();
    setup.warm_start = cfg.warm_start;
    if cfg.fitted_core {
        setup.fitted_core = Some(Ball::centered(cfg.core_radius));
    }
    evolution::run_trajectory(&setup)
}

/// Homogenized latent heat of the configured medium.
fn latent_heat_of(media: &MediaSpec) -> Result<f64> {
    media
        .expected_latent_heat()
        .ok_or_else(|| Error::Config(format!("no closed-form mean of 1/g for {} media", media.kind.name())))
}

fn row_for(cfg: &ExperimentConfig, grid: &Grid, snap: &Snapshot, rho_target: f64) -> Result<(ResultRow, Option<SphericityReport>)> {
    let report = if snap.positivity.any() && rho_target > 0.0 {
        let sample = freeboundary::extract_boundary(grid, &snap.positivity, snap.t)?;
        Some(SphericityReport::new(&sample, rho_target)?)
    } else {
        None
    };
    let nan = f64::NAN;
    let d = &snap.diagnostics;
    Ok((
        ResultRow {
            scenario: cfg.scenario,
            t: snap.t,
            lambda: nan,
            r_min: report.map_or(nan, |r| r.r_min),
            r_max: report.map_or(nan, |r| r.r_max),
            defect: report.map_or(nan, |r| r.defect),
            hausdorff: report.map_or(nan, |r| r.hausdorff),
            rho_target,
            alpha_fit: nan,
            pde_res: d.pde_residual,
            comp_res: d.comp_residual,
            iters: d.iterations,
            wall_ms: d.wall_ms,
        },
        report,
    ))
}

fn radial_params(cfg: &ExperimentConfig) -> Result<RadialParams> {
    if cfg.media.kind != MediaKind::Constant {
        return Err(Error::Config(format!("{} needs constant media", cfg.scenario)));
    }
    Ok(RadialParams {
        amplitude: analytic::capacity_constant_ball(cfg.core_radius, cfg.dim),
        inner_radius: cfg.core_radius,
        initial_radius: cfg.initial_radius,
        latent_heat: 1.0 / cfg.media.g_min,
        dim: cfg.dim,
    })
}

fn radial_validate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let params = radial_params(cfg)?;
    let radii = analytic::radius_evolution(&params, &cfg.times.0)?;
    let traj = trajectory(cfg)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (snap, &r) in traj.snapshots.iter().zip(&radii) {
        let (row, report) = row_for(cfg, &traj.grid, snap, r)?;
        if let Some(rep) = report {
            worst = worst.max((rep.r_mean - r).abs());
        }
        rows.push(row);
    }
    let h = traj.grid.h();
    Ok(RunOutput {
        config: cfg.clone(),
        rows,
        near_field: Vec::new(),
        checks: vec![Check::at_most("radius_error_over_h", worst / h, 2.0)],
    })
}

/// Sup-norm error of the discrete limit-problem solution against `U_{A,L}`
/// relative to `max U` over `|x| >= a`, excluding a `2h` collar around the
/// free boundary.
pub fn limit_problem_error(params: &LimitProfileParams, t: f64, a: f64, grid: &Grid, w: &crate::grid::ScalarField) -> Result<f64> {
    let rho = analytic::rho(params, t);
    let h = grid.h();
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in 0..grid.len() {
        let r = grid.radius(p);
        if r < a || grid.is_far_field(p) {
            continue;
        }
        let exact = analytic::limit_profile_u(params, t, &grid.coord(p))?;
        scale = scale.max(exact);
        if (r - rho).abs() > 2.0 * h {
            err = err.max((w[p] - exact).abs());
        }
    }
    Ok(err / scale)
}

fn limit_problem(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let params = limit_params(cfg)?;
    let grid = grid_of(cfg)?;
    let settings = cfg.solver();
    let eps = obstacle::positivity_threshold(&grid, cfg.latent_heat);
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &t in &cfg.times.0 {
        if t == 0.0 {
            return Err(Error::Config("limit-problem times must be positive".into()));
        }
        let start = Instant::now();
        let sol = obstacle::solve_limit_problem(&params, t, cfg.core_radius, &grid, &settings)
            .map_err(config_error)?
            .into_converged()?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let positivity = NodeMask::from_fn(&grid, |p| sol.w[p] > eps);
        let diagnostics = evolution::SolveDiagnostics {
            iterations: sol.iterations,
            pde_residual: sol.pde_residual,
            comp_residual: sol.complementarity_residual,
            tol: sol.tol,
            wall_ms,
        };
        let err = limit_problem_error(&params, t, cfg.core_radius, &grid, &sol.w)?;
        let snap = Snapshot::new(&grid, t, sol.w, eps, diagnostics)?;
        debug_assert_eq!(snap.positivity, positivity);
        let (row, _) = row_for(cfg, &grid, &snap, analytic::rho(&params, t))?;
        rows.push(row);
        checks.push(Check::at_most(&format!("relative_sup_error@t={}", format_g9(t)), err, 0.03));
    }
    Ok(RunOutput {
        config: cfg.clone(),
        rows,
        near_field: Vec::new(),
        checks,
    })
}

/// Sup over the annulus `a <= |x| <= 2a` of `|v(·, t_k) - P|` for every
/// `k >= 1`, with `v` the backward-difference pressure.
pub fn near_field_check(traj: &Trajectory, a: f64) -> Result<Vec<NearFieldRow>> {
    let grid = &traj.grid;
    if ball_mask(grid, &[0.0; 3], a)? != traj.core {
        return Err(Error::InvalidInput(format!("core is not the ball of radius {a}")));
    }
    let mut p_max: f64 = 0.0;
    let annulus: Vec<usize> = (0..grid.len())
        .filter(|&p| {
            let r = grid.radius(p);
            r >= a && r <= 2.0 * a
        })
        .collect();
    if annulus.is_empty() {
        return Err(Error::InvalidInput("annulus a <= |x| <= 2a holds no node".into()));
    }
    let profile: Vec<f64> = annulus
        .iter()
        .map(|&p| analytic::near_field_profile_ball(a, grid.dim(), &grid.coord(p)))
        .collect::<Result<_>>()?;
    for &v in &profile {
        p_max = p_max.max(v);
    }
    (1..traj.len())
        .map(|k| {
            let v = evolution::pressure_from_u(traj, k)?;
            let sup = annulus
                .iter()
                .zip(&profile)
                .map(|(&p, &pv)| (v[p] - pv).abs())
                .fold(0.0, f64::max);
            Ok(NearFieldRow {
                t: traj.snapshots[k].t,
                sup_error: sup,
                relative_error: sup / p_max,
            })
        })
        .collect()
}

/// Pressure maximum principle at every ladder step, up to the solver error.
fn check_pressure_bounds(traj: &Trajectory) -> Result<()> {
    for k in 1..traj.len() {
        let v = evolution::pressure_from_u(traj, k)?;
        let dt = traj.snapshots[k].t - traj.snapshots[k - 1].t;
        let slack = (traj.error_bound(k) + traj.error_bound(k - 1)) / dt;
        if v.values().iter().any(|&x| x < -slack || x > 1.0 + slack) {
            return Err(Error::Invariant(format!(
                "pressure leaves [0, 1] at t = {}",
                traj.snapshots[k].t
            )));
        }
    }
    Ok(())
}

fn near_field(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let params = radial_params(cfg)?;
    let radii = analytic::radius_evolution(&params, &cfg.times.0)?;
    let traj = trajectory(cfg)?;
    check_pressure_bounds(&traj)?;
    let table = near_field_check(&traj, cfg.core_radius)?;
    let rows = traj
        .snapshots
        .iter()
        .zip(&radii)
        .map(|(s, &r)| row_for(cfg, &traj.grid, s, r).map(|x| x.0))
        .collect::<Result<Vec<_>>>()?;
    let errs: Vec<f64> = table.iter().map(|r| r.relative_error).collect();
    let peak = errs
        .iter()
        .enumerate()
        .fold(0, |best, (i, &e)| if e > errs[best] { i } else { best });
    let settles = errs[peak..].windows(2).all(|w| w[1] <= 1.1 * w[0]);
    let half = errs.len() / 2;
    let decreasing = errs[half..].windows(2).all(|w| w[1] <= w[0]);
    let checks = vec![
        Check::at_most("terminal_relative_error", *errs.last().expect("two ladder times"), 0.05),
        Check::flag("nonincreasing_after_peak", settles),
        Check::flag("decreasing_over_trailing_half", decreasing),
    ];
    Ok(RunOutput {
        config: cfg.clone(),
        rows,
        near_field: table,
        checks,
    })
}

fn growth_exponent(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let latent = latent_heat_of(&cfg.media)?;
    let lp = LimitProfileParams::new(analytic::capacity_constant_ball(cfg.core_radius, cfg.dim), latent, cfg.dim)?;
    let traj = trajectory(cfg)?;
    let mut rows = Vec::new();
    let mut times = Vec::new();
    let mut radii = Vec::new();
    for snap in &traj.snapshots {
        let target = analytic::asymptotic_radius(&lp, snap.t)?;
        let (row, report) = row_for(cfg, &traj.grid, snap, target.max(f64::MIN_POSITIVE))?;
        if let Some(rep) = report {
            times.push(snap.t);
            radii.push(rep.r_mean);
        }
        rows.push(row);
    }
    let (alpha, _) = freeboundary::fit_growth_exponent(&times, &radii)?;
    for row in &mut rows {
        row.alpha_fit = alpha;
    }
    let check = if cfg.dim == 2 {
        Check::open("alpha_fit", alpha, 0.40, 0.50)
    } else {
        let n = cfg.dim as f64;
        Check::within("alpha_fit", alpha, 0.9 / n, 1.1 / n)
    };
    Ok(RunOutput {
        config: cfg.clone(),
        rows,
        near_field: Vec::new(),
        checks: vec![check],
    })
}

fn homogenize(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let latent = latent_heat_of(&cfg.media)?;
    let cap = analytic::capacity_constant_ball(cfg.core_radius, cfg.dim);
    let lp = LimitProfileParams::new(cap, latent, cfg.dim)?;
    let traj = trajectory(cfg)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for snap in &traj.snapshots {
        let target = analytic::asymptotic_radius(&lp, snap.t)?;
        let (row, report) = row_for(cfg, &traj.grid, snap, target.max(f64::MIN_POSITIVE))?;
        if let Some(rep) = report {
            reports.push((snap.t, rep));
        }
        rows.push(row);
    }
    let mut checks = Vec::new();
    if let Some((_, last)) = reports.last() {
        let defects: Vec<f64> = reports.iter().map(|(_, r)| r.defect).collect();
        checks.push(Check::flag(
            "defect_decreasing",
            defects.windows(2).all(|w| w[1] <= 1.05 * w[0]),
        ));
        checks.push(Check::at_most("terminal_hausdorff_over_rho", last.hausdorff / last.rho, 0.10));
        checks.push(Check::within("terminal_rmean_over_rho", last.r_mean / last.rho, 0.9, 1.1));
        if cfg.dim >= 3 {
            // Radial barriers with the slowest and fastest medium.
            let n = cfg.dim as f64;
            let c = |g: f64| (cap * n * (n - 2.0) * g).powf(1.0 / n);
            let (lo, hi) = (c(cfg.media.g_min), c(cfg.media.g_max));
            let tail = &reports[reports.len() / 2..];
            let inside = tail.iter().all(|(t, r)| {
                let s = t.powf(1.0 / n);
                lo * s < r.r_min && r.r_max < hi * s
            });
            checks.push(Check::flag("barrier_sandwich", inside));
        }
    }
    rows.extend(rescaled_solves(cfg, &lp)?);
    Ok(RunOutput {
        config: cfg.clone(),
        rows,
        near_field: Vec::new(),
        checks,
    })
}

/// Direct solves of the rescaled problem at unit time for each `λ`: core and
/// initial ball shrunk by `s(λ)`, medium oscillating `s(λ)` times faster and
/// core datum `pressure_amplitude(λ)`.
fn rescaled_solves(cfg: &ExperimentConfig, lp: &LimitProfileParams) -> Result<Vec<ResultRow>> {
    let grid = grid_of(cfg)?;
    let target = analytic::rho(lp, 1.0);
    let solve = |&lambda: &f64| -> Result<ResultRow> {
        let resc = Rescaling::new(cfg.dim, lambda)?;
        let s = resc.space_factor();
        let a = cfg.core_radius / s;
        if 2.0 * a < 3.0 * grid.h() {
            return Err(Error::Config(format!(
                "rescaled core at λ = {lambda} is {} wide, below 3h",
                2.0 * a
            )));
        }
        let core = ball_mask(&grid, &[0.0; 3], a).map_err(config_error)?;
        let init = ball_mask(&grid, &[0.0; 3], cfg.initial_radius / s).map_err(config_error)?;
        let media = sample_media_with(&cfg.media.rescaled(s), &grid, cfg.schedule)?;
        let mut setup = TrajectorySetup::new(grid.clone(), core, init, media, vec![1.0]);
        setup.solver = cfg.solver();
        setup.amplitude = resc.pressure_amplitude();
        if cfg.fitted_core {
            setup.fitted_core = Some(Ball::centered(a));
        }
        let traj = evolution::run_trajectory(&setup)?;
        let (mut row, _) = row_for(cfg, &grid, &traj.snapshots[0], target)?;
        row.lambda = lambda;
        Ok(row)
    };
    par::map_collect(cfg.schedule, &cfg.lambdas.0, solve)
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ExperimentConfig {
        ExperimentConfig {
            scenario,
            dim: 2,
            extent: 4.0,
            nodes: 33,
            core_radius: 0.5,
            initial_radius: 0.75,
            times: Ladder(vec![0.25, 0.5, 1.0, 1.5]),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn rows_follow_the_ladder() {
        for sc in [Scenario::RadialValidate, Scenario::NearField, Scenario::GrowthExponent, Scenario::Homogenize] {
            let out = run_scenario(&small(sc)).unwrap();
            assert_eq!(out.rows.len(), 4, "{sc}");
            assert!(out.rows.iter().all(|r| r.scenario == sc));
            assert!(out.csv().starts_with(CSV_HEADER));
        }
    }

    #[test]
    fn near_field_table_skips_first_time() {
        let out = run_scenario(&small(Scenario::NearField)).unwrap();
        assert_eq!(out.near_field.len(), 3);
        assert_eq!(out.near_field[0].t, 0.5);
    }

    #[test]
    fn near_field_needs_the_configured_ball() {
        let cfg = small(Scenario::NearField);
        let grid = grid_of(&cfg).unwrap();
        let (core, init) = ball_masks(&cfg, &grid).unwrap();
        let media = sample_media_with(&cfg.media, &grid, cfg.schedule).unwrap();
        let traj = evolution::run_trajectory(&TrajectorySetup::new(grid, core, init, media, vec![0.5, 1.0])).unwrap();
        assert!(near_field_check(&traj, 0.5).is_ok());
        assert!(near_field_check(&traj, 0.7).is_err());
    }

    #[test]
    fn radial_scenarios_need_constant_media() {
        let mut cfg = small(Scenario::RadialValidate);
        cfg.media = MediaSpec::checkerboard(1.0, 2.0, 0.5, 1);
        assert!(matches!(run_scenario(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn limit_problem_rows() {
        let mut cfg = small(Scenario::LimitProblem);
        cfg.times = Ladder(vec![1.0]);
        cfg.extent = 2.0;
        cfg.core_radius = 0.4;
        let out = run_scenario(&cfg).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(out.checks[0].value.is_finite());
        cfg.times = Ladder(vec![100.0]);
        assert!(run_scenario(&cfg).is_err());
    }

    #[test]
    fn rescaled_solves_append_lambda_rows() {
        let mut cfg = small(Scenario::Homogenize);
        cfg.nodes = 65;
        cfg.media = MediaSpec::checkerboard(1.0, 2.0, 0.5, 3);
        cfg.lambdas = Ladder(vec![1.0, 2.0]);
        let out = run_scenario(&cfg).unwrap();
        let lam: Vec<_> = out.rows.iter().filter(|r| !r.lambda.is_nan()).collect();
        assert_eq!(lam.len(), 2);
        assert!(lam.iter().all(|r| r.t == 1.0));
        cfg.lambdas = Ladder(vec![1e6]);
        assert!(matches!(run_scenario(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn dry_run_catches_geometry() {
        let mut cfg = small(Scenario::Homogenize);
        assert!(dry_run(&cfg).is_ok());
        cfg.times = Ladder(vec![1.0, 100.0]);
        assert!(matches!(dry_run(&cfg), Err(Error::Config(_))));
    }
}
