//! Closed-form and ODE reference solutions.
//!
//! Radially symmetric Hele-Shaw solutions around a ball of radius `a`, the
//! point-source profiles `V_{A,L}` and their time integrals `U_{A,L}`, the
//! radius laws, the two-dimensional rescaling radius `ℛ(λ)` and the exterior
//! potential of a ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{norm, Point};

/// Parameters of a radial solution outside `B_a` whose free boundary starts
/// at radius `b` and moves with speed `|Dp| / L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialParams {
    /// Source strength: `p = A a^{2-n}` on `|x| = a` (`p = A` when `n = 2`).
    pub amplitude: f64,
    pub inner_radius: f64,
    pub initial_radius: f64,
    pub latent_heat: f64,
    pub dim: usize,
}

impl RadialParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.amplitude > 0.0
            && self.latent_heat > 0.0
            && self.inner_radius > 0.0
            && self.inner_radius < self.initial_radius
            && (2..=3).contains(&self.dim);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid radial parameters {self:?}")))
        }
    }

    /// Free-boundary speed `R'(t)` at radius `r`.
    pub fn boundary_speed(&self, r: f64) -> f64 {
        let (amp, a, l) = (self.amplitude, self.inner_radius, self.latent_heat);
        if self.dim == 2 {
            amp / (l * r * (r / a).ln())
        } else {
            let e = 2.0 - self.dim as f64;
            amp * a.powf(e) * (self.dim as f64 - 2.0) * r.powf(1.0 - self.dim as f64)
                / (l * (a.powf(e) - r.powf(e)))
        }
    }
}

/// Parameters `(A, L)` of the point-source profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitProfileParams {
    pub amplitude: f64,
    pub latent_heat: f64,
    pub dim: usize,
}

impl LimitProfileParams {
    pub fn new(amplitude: f64, latent_heat: f64, dim: usize) -> Result<Self> {
        if !(amplitude > 0.0 && latent_heat > 0.0 && (2..=3).contains(&dim)) {
            return Err(Error::InvalidInput(format!(
                "invalid limit profile parameters A = {amplitude}, L = {latent_heat}, n = {dim}"
            )));
        }
        Ok(LimitProfileParams {
            amplitude,
            latent_heat,
            dim,
        })
    }
}

/// Pressure of the radial solution with free boundary at radius `r_free`.
pub fn radial_pressure(p: &RadialParams, r_free: f64, x: &Point) -> Result<f64> {
    let a = p.inner_radius;
    if !(r_free > a) {
        return Err(Error::InvalidInput(format!(
            "free-boundary radius {r_free} must exceed inner radius {a}"
        )));
    }
    let r = norm(x);
    if r < a * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!("point at radius {r} is inside B_a")));
    }
    if p.dim == 2 {
        Ok(p.amplitude * (r_free / r).ln().max(0.0) / (r_free / a).ln())
    } else {
        let e = 2.0 - p.dim as f64;
        Ok(p.amplitude * a.powf(e) * (r.powf(e) - r_free.powf(e)).max(0.0)
            / (a.powf(e) - r_free.powf(e)))
    }
}

/// Integrates `R' = |Dp(R)| / L` from `R(0) = b` and returns `R` at each
/// requested time.
///
/// Adaptive RK4 with step doubling and local extrapolation; relative local
/// tolerance `1e-8`.
pub fn radius_evolution(p: &RadialParams, times: &[f64]) -> Result<Vec<f64>> {
    p.validate()?;
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidInput("time ladder must start at t >= 0".into()));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidInput("time ladder must be nondecreasing".into()));
    }
    const RTOL: f64 = 1e-8;
    let f = |r: f64| p.boundary_speed(r);
    let rk4 = |y: f64, dt: f64| {
        let k1 = f(y);
        let k2 = f(y + 0.5 * dt * k1);
        let k3 = f(y + 0.5 * dt * k2);
        let k4 = f(y + dt * k3);
        y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };

    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut y = p.initial_radius;
    // Initial step: move the boundary by a small fraction of its radius.
    let mut dt = 1e-3 * y / f(y);
    for &target in times {
        while t < target {
            let step = dt.min(target - t);
            let full = rk4(y, step);
            let half = rk4(rk4(y, 0.5 * step), 0.5 * step);
            let err = (half - full).abs() / 15.0;
            if err <= RTOL * half.abs() || step < 1e-14 * target.max(1.0) {
                t = if step == target - t { target } else { t + step };
                y = half + (half - full) / 15.0;
                let grow = if err > 0.0 {
                    (0.9 * (RTOL * half.abs() / err).powf(0.2)).min(4.0)
                } else {
                    4.0
                };
                // Keep `dt` independent of the clipping at ladder times.
                if step == dt {
                    dt *= grow;
                }
            } else {
                dt = step * (0.9 * (RTOL * half.abs() / err).powf(0.25)).max(0.1);
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Radius of the point-source free boundary, `(A n (n-2) t / L)^{1/n}` for
/// `n >= 3` and `(2 A t / L)^{1/2}` for `n = 2`.
pub fn rho(params: &LimitProfileParams, t: f64) -> f64 {
    let (amp, l) = (params.amplitude, params.latent_heat);
    let t = t.max(0.0);
    if params.dim == 2 {
        (2.0 * amp * t / l).sqrt()
    } else {
        let n = params.dim as f64;
        (amp * n * (n - 2.0) * t / l).powf(1.0 / n)
    }
}

/// Inverse of [`rho`]: the time at which the free boundary reaches `r`.
pub fn rho_inverse(params: &LimitProfileParams, r: f64) -> f64 {
    let (amp, l) = (params.amplitude, params.latent_heat);
    if params.dim == 2 {
        l * r * r / (2.0 * amp)
    } else {
        let n = params.dim as f64;
        l * r.powf(n) / (amp * n * (n - 2.0))
    }
}

/// Point-source pressure `V_{A,L}(x, t)`.
pub fn limit_profile_v(params: &LimitProfileParams, t: f64, x: &Point) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::InvalidInput("V is singular at the origin".into()));
    }
    let rho = rho(params, t);
    if rho == 0.0 {
        return Ok(0.0);
    }
    let amp = params.amplitude;
    Ok(if params.dim == 2 {
        amp * (rho / r).ln().max(0.0)
    } else {
        let e = 2.0 - params.dim as f64;
        amp * (r.powf(e) - rho.powf(e)).max(0.0)
    })
}

/// Baiocchi transform `U_{A,L}(x, t) = ∫₀ᵗ V_{A,L}(x, s) ds` in closed form.
pub fn limit_profile_u(params: &LimitProfileParams, t: f64, x: &Point) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("negative time {t}")));
    }
    let value = limit_profile_u_extended(params, t, x)?;
    if t == 0.0 || norm(x) >= rho(params, t) {
        return Ok(0.0);
    }
    Ok(value.max(0.0))
}

/// The closed-form expression of `U_{A,L}` without the positive part. It is
/// smooth away from the origin, and it and its radial derivative vanish at
/// `|x| = ρ(t)`.
pub fn limit_profile_u_extended(params: &LimitProfileParams, t: f64, x: &Point) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::InvalidInput("U is singular at the origin".into()));
    }
    let (amp, l) = (params.amplitude, params.latent_heat);
    Ok(if params.dim == 2 {
        if t == 0.0 {
            0.25 * l * r * r
        } else {
            0.5 * amp * t * (2.0 * amp * t / (l * std::f64::consts::E * r * r)).ln() + 0.25 * l * r * r
        }
    } else {
        let n = params.dim as f64;
        amp * t * r.powf(2.0 - n) + l / (2.0 * n) * r * r
            - 0.5 * (amp * n * t).powf(2.0 / n) * ((n - 2.0) / l).powf((2.0 - n) / n)
    })
}

/// `R∞(λ) = (2λ / log λ)^{1/2}`, the leading-order behaviour of `ℛ(λ)`.
pub fn rescale_radius_2d_asymptotic(lambda: f64) -> f64 {
    (2.0 * lambda / lambda.ln()).sqrt()
}

/// The root `ℛ > 1` of `ℛ² log ℛ = λ` (the two-dimensional spatial scale).
///
/// Newton's method, started at `R∞(λ)` for `λ > e` and at `1 + λ` otherwise,
/// falling back to bisection whenever an iterate leaves the bracket.
pub fn rescale_radius_2d(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "rescaling parameter must be positive, got {lambda}"
        )));
    }
    let f = |r: f64| r * r * r.ln() - lambda;
    let df = |r: f64| r * (2.0 * r.ln() + 1.0);
    let mut lo = 1.0 + 1e-9_f64.min(lambda / 4.0);
    while f(lo) > 0.0 {
        lo = 1.0 + (lo - 1.0) / 2.0;
    }
    let mut hi = if lambda > std::f64::consts::E {
        (2.0 * rescale_radius_2d_asymptotic(lambda)).max(2.0)
    } else {
        2.0
    };
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut r = if lambda > std::f64::consts::E {
        rescale_radius_2d_asymptotic(lambda)
    } else {
        1.0 + lambda
    };
    if !(r > lo && r < hi) {
        r = 0.5 * (lo + hi);
    }
    let target = 1e-13 * (1.0 + lambda);
    for _ in 0..200 {
        let fr = f(r);
        if fr.abs() <= target {
            return Ok(r);
        }
        if fr > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let next = r - fr / df(r);
        r = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    // Pick the best floating-point candidate near the root.
    let best = [r, lo, hi]
        .into_iter()
        .min_by(|x, y| f(*x).abs().total_cmp(&f(*y).abs()))
        .unwrap_or(r);
    Ok(best)
}

/// Coefficient of the far-field singularity of the exterior potential of the
/// ball `B_a`: `a^{n-2}` for `n >= 3`.
///
/// In two dimensions the bounded exterior solution is `P ≡ 1`, and the
/// coefficient of the logarithmic point-source profile is the core datum,
/// so `1` is returned.
pub fn capacity_constant_ball(a: f64, dim: usize) -> f64 {
    if dim == 2 {
        1.0
    } else {
        a.powi(dim as i32 - 2)
    }
}

/// Exterior potential of `B_a`: `(a/|x|)^{n-2}`, or `1` for `n = 2`.
pub fn near_field_profile_ball(a: f64, dim: usize, x: &Point) -> Result<f64> {
    let r = norm(x);
    if r < a * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!("point at radius {r} is inside B_a")));
    }
    Ok(if dim == 2 {
        1.0
    } else {
        (a / r).powi(dim as i32 - 2)
    })
}

/// Radius the free boundary of the unscaled problem approaches at time `t`,
/// read off the point-source limit.
///
/// For `n >= 3` this is `ρ(t)`. For `n = 2` the rescaling with `λ = t` maps
/// time `t` to unit time and space by `ℛ(t)`, so the radius is `ℛ(t)·ρ(1)`.
pub fn asymptotic_radius(params: &LimitProfileParams, t: f64) -> Result<f64> {
    if params.dim == 2 {
        if t <= 0.0 {
            return Ok(0.0);
        }
        Ok(rescale_radius_2d(t)? * rho(params, 1.0))
    } else {
        Ok(rho(params, t))
    }
}

/// A-priori bound on the free-boundary radius up to time `t_end` for a ball
/// core of radius `a`, initial ball `b` and velocity coefficient `g <= g_max`:
/// the radius of the radial supersolution with latent heat `1/g_max`.
pub fn support_radius_bound(dim: usize, a: f64, b: f64, g_max: f64, t_end: f64) -> Result<f64> {
    let params = RadialParams {
        amplitude: capacity_constant_ball(a, dim),
        inner_radius: a,
        initial_radius: b,
        latent_heat: 1.0 / g_max,
        dim,
    };
    Ok(radius_evolution(&params, &[t_end.max(0.0)])?[0])
}
