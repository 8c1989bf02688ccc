//! The discrete variational inequality for `u(·, t)` and its projected SOR
//! solver.
//!
//! At every free node the discrete solution satisfies the complementarity
//! system
//!
//! ```text
//! w >= 0,   -Δ_h w - f >= 0,   w · (-Δ_h w - f) = 0,
//! ```
//!
//! with `f = -ℓ(x)` outside the initial set and `f = 0` inside it. Core nodes
//! are pinned to `t` and the far-field layer to `0`.

mod redblack;

use serde::{Deserialize, Serialize};

use crate::analytic::{self, LimitProfileParams};
use crate::error::{Error, Result};
use crate::grid::{Ball, Grid, NodeMask, NodeRole, NodeRoles, ScalarField};
use crate::media::MediaField;
use crate::par::Schedule;
use redblack::RedBlack;

/// Relaxation factor of the SOR sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relaxation {
    Fixed(f64),
    /// `2 / (1 + sin(π / (N - 1)))`, optimal for the Dirichlet Laplacian on
    /// the full box.
    Auto,
}

impl Relaxation {
    pub fn factor(&self, grid: &Grid) -> f64 {
        match *self {
            Relaxation::Fixed(w) => w,
            Relaxation::Auto => {
                let n = grid.nodes_per_axis() as f64 - 1.0;
                2.0 / (1.0 + (std::f64::consts::PI / n).sin())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub omega: Relaxation,
    /// Residual tolerance in units of the unknown. `None` selects
    /// `1e-8 · scale · max(1, ℓ_max)` with `scale` the largest pinned value.
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub schedule: Schedule,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            omega: Relaxation::Fixed(1.8),
            tol: None,
            max_iter: 200_000,
            schedule: Schedule::default(),
        }
    }
}

/// A free node whose stencil reaches across a fitted boundary.
///
/// All coefficients are scaled by `h²`; the uniform stencil has weight 1 per
/// neighbour and diagonal `2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutNode {
    pub node: usize,
    /// Weight per axis neighbour in [`Grid::neighbor_offsets`] order, zero
    /// where the neighbour is replaced by a boundary point.
    pub weights: [f64; 6],
    /// Weighted boundary values.
    pub boundary: f64,
    pub diagonal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleProblem {
    pub grid: Grid,
    /// Nodes carrying Dirichlet data: the core and the far-field layer.
    pub pinned: NodeMask,
    /// Dirichlet values on pinned nodes (zero elsewhere).
    pub dirichlet: ScalarField,
    pub source: ScalarField,
    /// Whether the lower obstacle `w >= 0` is enforced.
    pub projected: bool,
    /// Magnitude used by the default tolerance.
    pub tol_scale: f64,
    /// Boundary-fitted stencils, see [`ObstacleProblem::fit_ball`].
    pub cut: Vec<CutNode>,
}

impl ObstacleProblem {
    /// Assembles the problem for time `t`: value `t` on the core and source
    /// `-ℓ` outside the initial set.
    pub fn assemble(grid: &Grid, core: &NodeMask, initial: &NodeMask, media: &MediaField, t: f64) -> Result<Self> {
        Self::assemble_rescaled(grid, core, initial, media, t, 1.0)
    }

    /// Same as [`ObstacleProblem::assemble`] with core value `amplitude · t`,
    /// as required for rescaled problems.
    pub fn assemble_rescaled(
        grid: &Grid,
        core: &NodeMask,
        initial: &NodeMask,
        media: &MediaField,
        t: f64,
        amplitude: f64,
    ) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("time must be nonnegative, got {t}")));
        }
        if media.ell.len() != grid.len() {
            return Err(Error::InvalidInput("media field does not match grid".into()));
        }
        let roles = NodeRoles::new(grid, core, initial)?;
        let core_value = amplitude * t;
        let mut pinned = NodeMask::empty(grid);
        let mut dirichlet = ScalarField::zeros(grid);
        let mut source = ScalarField::zeros(grid);
        for p in 0..grid.len() {
            match roles.role(p) {
                NodeRole::Core => {
                    pinned.set(p, true);
                    dirichlet[p] = core_value;
                }
                NodeRole::FarField => pinned.set(p, true),
                NodeRole::Initial => {}
                NodeRole::Interior => source[p] = -media.ell[p],
            }
        }
        Ok(ObstacleProblem {
            grid: grid.clone(),
            pinned,
            dirichlet,
            source,
            projected: true,
            tol_scale: core_value * media.ell_max().max(1.0),
            cut: Vec::new(),
        })
    }

    /// Imposes `value` on the sphere `∂ball` instead of on the pinned nodes
    /// inside it: every free node with an axis neighbour inside `ball` gets
    /// the Shortley-Weller stencil, whose arm towards the ball ends on the
    /// sphere. This removes the staircase error of nodal pinning.
    ///
    /// Every node inside `ball` must be pinned.
    pub fn fit_ball(&mut self, ball: &Ball, value: f64) -> Result<()> {
        let grid = &self.grid;
        let h = grid.h();
        let offsets = grid.neighbor_offsets();
        let mut cut = Vec::new();
        for p in 0..grid.len() {
            let x = grid.coord(p);
            if ball.contains(&x) {
                if !self.pinned.get(p) {
                    return Err(Error::InvalidMask(format!("node {p} inside the fitted ball is not pinned")));
                }
                continue;
            }
            if self.pinned.get(p) {
                continue;
            }
            let y = [x[0] - ball.center[0], x[1] - ball.center[1], x[2] - ball.center[2]];
            // Arm lengths in units of h, per neighbour.
            let mut theta = [1.0; 6];
            let mut any = false;
            for (j, &d) in offsets.iter().enumerate() {
                let q = (p as isize + d) as usize;
                if !ball.contains(&grid.coord(q)) {
                    continue;
                }
                let axis = j / 2;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                // Smaller root of |y + s e|² = r² along the arm.
                let b = sign * y[axis];
                let c = crate::grid::norm(&y).powi(2) - ball.radius * ball.radius;
                let s = -b - (b * b - c).max(0.0).sqrt();
                theta[j] = (s / h).clamp(1e-6, 1.0);
                any = true;
            }
            if !any {
                continue;
            }
            let mut weights = [0.0; 6];
            let mut boundary = 0.0;
            let mut diagonal = 0.0;
            for j in 0..offsets.len() {
                let partner = j ^ 1;
                let w = 2.0 / (theta[j] * (theta[j] + theta[partner]));
                diagonal += w;
                if ball.contains(&grid.coord((p as isize + offsets[j]) as usize)) {
                    boundary += w * value;
                } else {
                    weights[j] = w;
                }
            }
            cut.push(CutNode {
                node: p,
                weights,
                boundary,
                diagonal,
            });
        }
        self.cut = cut;
        Ok(())
    }

    pub fn default_tol(&self) -> f64 {
        1e-8 * self.tol_scale.max(f64::MIN_POSITIVE)
    }

    fn start_field(&self, guess: Option<&ScalarField>) -> ScalarField {
        let mut w = match guess {
            Some(g) => g.clone(),
            None => ScalarField::zeros(&self.grid),
        };
        for p in 0..self.grid.len() {
            if self.pinned.get(p) {
                w[p] = self.dirichlet[p];
            } else if self.projected && w[p] < 0.0 {
                w[p] = 0.0;
            }
        }
        w
    }

    /// `(-Δ_h w - f)` at every free node, zero elsewhere. Cut nodes use
    /// their fitted stencils.
    pub fn pde_defect(&self, w: &ScalarField) -> ScalarField {
        let lap = crate::grid::apply_laplacian(&self.grid, w);
        let mut out = ScalarField::zeros(&self.grid);
        for p in 0..self.grid.len() {
            if !self.pinned.get(p) {
                out[p] = -lap[p] - self.source[p];
            }
        }
        let h2 = self.grid.h() * self.grid.h();
        let offsets = self.grid.neighbor_offsets();
        for c in &self.cut {
            let mut s = c.boundary - c.diagonal * w[c.node];
            for (j, &d) in offsets.iter().enumerate() {
                s += c.weights[j] * w[(c.node as isize + d) as usize];
            }
            out[c.node] = -s / h2 - self.source[c.node];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VISolution {
    pub w: ScalarField,
    pub iterations: usize,
    /// Largest violation of `-Δ_h w >= f`, scaled by `h²/2n`.
    pub pde_residual: f64,
    /// Largest `|min(w, (h²/2n)(-Δ_h w - f))|` over free nodes.
    pub complementarity_residual: f64,
    pub tol: f64,
    pub converged: bool,
}

impl VISolution {
    /// Turns a non-converged solve into an error.
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual: self.complementarity_residual,
                tol: self.tol,
            })
        }
    }
}

pub fn psor_solve(prob: &ObstacleProblem, settings: &SolverSettings) -> Result<VISolution> {
    solve(prob, settings, None)
}

/// Projected SOR started from `guess` (pinned values are overwritten).
pub fn psor_solve_from(prob: &ObstacleProblem, settings: &SolverSettings, guess: &ScalarField) -> Result<VISolution> {
    solve(prob, settings, Some(guess))
}

fn solve(prob: &ObstacleProblem, settings: &SolverSettings, guess: Option<&ScalarField>) -> Result<VISolution> {
    let omega = settings.omega.factor(&prob.grid);
    if !(1.0..2.0).contains(&omega) {
        return Err(Error::InvalidInput(format!(
            "relaxation factor must lie in [1, 2), got {omega}"
        )));
    }
    let tol = settings.tol.unwrap_or_else(|| prob.default_tol());
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if guess.is_some_and(|g| g.len() != prob.grid.len()) {
        return Err(Error::InvalidInput("initial guess does not match grid".into()));
    }
    let schedule = settings.schedule;
    let start = prob.start_field(guess);
    let mut rb = RedBlack::new(&prob.grid, &prob.pinned, &prob.source, &prob.cut, &start);

    let (mut pde, mut comp) = rb.residuals(prob.projected, schedule);
    let mut iterations = 0;
    let mut converged = comp <= tol;
    while !converged && iterations < settings.max_iter {
        let r0 = rb.sweep(0, omega, prob.projected, schedule);
        let r1 = rb.sweep(1, omega, prob.projected, schedule);
        iterations += 1;
        if r0.max(r1) <= tol {
            (pde, comp) = rb.residuals(prob.projected, schedule);
            converged = comp <= tol;
        }
    }
    if !converged {
        (pde, comp) = rb.residuals(prob.projected, schedule);
    }
    Ok(VISolution {
        w: rb.into_field(),
        iterations,
        pde_residual: pde,
        complementarity_residual: comp,
        tol,
        converged,
    })
}

/// Values below this are treated as zero when extracting positivity sets:
/// one cell of the quadratic tail, `h² ℓ_max / 8`.
pub fn positivity_threshold(grid: &Grid, ell_max: f64) -> f64 {
    grid.h() * grid.h() * ell_max / 8.0
}

/// Solves the point-source limit problem on the exterior of `B_a`, with the
/// exact profile `U_{A,L}(·, t)` as data on `|x| <= a` and source `-L`.
pub fn solve_limit_problem(
    params: &LimitProfileParams,
    t: f64,
    a: f64,
    grid: &Grid,
    settings: &SolverSettings,
) -> Result<VISolution> {
    if params.dim != grid.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let rho = analytic::rho(params, t);
    if !(a < rho) {
        return Err(Error::InvalidInput(format!(
            "inner radius {a} must be below the free-boundary radius {rho}"
        )));
    }
    if a < 3.0 * grid.h() {
        return Err(Error::InvalidInput(format!(
            "inner radius {a} must be at least 3h = {}",
            3.0 * grid.h()
        )));
    }
    if rho >= grid.extent() - grid.h() {
        return Err(Error::SupportTouchesBox { t });
    }
    let mut pinned = NodeMask::empty(grid);
    let mut dirichlet = ScalarField::zeros(grid);
    let mut source = ScalarField::zeros(grid);
    for p in 0..grid.len() {
        let x = grid.coord(p);
        let r = grid.radius(p);
        if grid.is_far_field(p) {
            pinned.set(p, true);
        } else if r <= a {
            pinned.set(p, true);
            // The origin is surrounded by pinned nodes; any finite value works.
            let y = if r == 0.0 { [grid.h(), 0.0, 0.0] } else { x };
            dirichlet[p] = analytic::limit_profile_u(params, t, &y)?;
        } else {
            source[p] = -params.latent_heat;
        }
    }
    let scale = dirichlet.max();
    let prob = ObstacleProblem {
        grid: grid.clone(),
        pinned,
        dirichlet,
        source,
        projected: true,
        tol_scale: scale * params.latent_heat.max(1.0),
        cut: Vec::new(),
    };
    psor_solve(&prob, settings)
}
