//! Discrete free boundaries: extraction, radii, distance to spheres and
//! power-law fits of the growth.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{norm, Grid, NodeMask, Point};

/// Sphere directions used for the second half of the Hausdorff distance.
pub const DIRECTIONS_2D: usize = 1024;
pub const DIRECTIONS_3D: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub points: Vec<Point>,
    pub t: f64,
    pub dim: usize,
}

impl BoundarySample {
    pub fn radii(&self) -> Vec<f64> {
        self.points.iter().map(norm).collect()
    }
}

/// Positive nodes with at least one non-positive axis neighbour.
///
/// Fails when the positivity set is empty or reaches the node layer next to
/// the far-field boundary.
pub fn extract_boundary(grid: &Grid, positivity: &NodeMask, t: f64) -> Result<BoundarySample> {
    if !positivity.any() {
        return Err(Error::InvalidInput("empty positivity set".into()));
    }
    let offsets = grid.neighbor_offsets();
    let mut points = Vec::new();
    for p in positivity.indices() {
        if grid.is_far_field(p) {
            return Err(Error::SupportTouchesBox { t });
        }
        let mut on_boundary = false;
        for &d in &offsets {
            let q = (p as isize + d) as usize;
            if grid.is_far_field(q) {
                return Err(Error::SupportTouchesBox { t });
            }
            if !positivity.get(q) {
                on_boundary = true;
            }
        }
        if on_boundary {
            points.push(grid.coord(p));
        }
    }
    Ok(BoundarySample {
        points,
        t,
        dim: grid.dim(),
    })
}

/// Unit directions: equally spaced angles in 2D, a Fibonacci lattice in 3D.
pub fn sphere_directions(dim: usize) -> Vec<Point> {
    if dim == 2 {
        (0..DIRECTIONS_2D)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / DIRECTIONS_2D as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..DIRECTIONS_3D)
            .map(|k| {
                let z = 1.0 - (2 * k + 1) as f64 / DIRECTIONS_3D as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * k as f64;
                [r * phi.cos(), r * phi.sin(), z]
            })
            .collect()
    }
}

/// Hausdorff distance between the sample and the sphere `|x| = ρ`:
/// the larger of `max ||x| - ρ|` over the sample and the largest distance
/// from a sphere point (over [`sphere_directions`]) to the sample.
pub fn hausdorff_to_sphere(sample: &BoundarySample, rho: f64) -> f64 {
    if sample.points.is_empty() {
        return f64::INFINITY;
    }
    let to_sphere = sample
        .points
        .iter()
        .map(|x| (norm(x) - rho).abs())
        .fold(0.0, f64::max);
    let to_sample = sphere_directions(sample.dim)
        .iter()
        .map(|d| {
            let y = [rho * d[0], rho * d[1], rho * d[2]];
            sample
                .points
                .iter()
                .map(|x| {
                    let e = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                    e[0] * e[0] + e[1] * e[1] + e[2] * e[2]
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .fold(0.0, f64::max);
    to_sphere.max(to_sample)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericityReport {
    pub r_min: f64,
    pub r_max: f64,
    pub r_mean: f64,
    /// `(r_max - r_min) / r_mean`.
    pub defect: f64,
    /// Hausdorff distance to the sphere of radius `rho`.
    pub hausdorff: f64,
    pub rho: f64,
}

impl SphericityReport {
    pub fn new(sample: &BoundarySample, rho: f64) -> Result<Self> {
        if sample.points.is_empty() {
            return Err(Error::InvalidInput("empty boundary sample".into()));
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidInput(format!("sphere radius must be positive, got {rho}")));
        }
        let radii = sample.radii();
        let r_min = radii.iter().copied().fold(f64::INFINITY, f64::min);
        let r_max = radii.iter().copied().fold(0.0, f64::max);
        let r_mean = radii.iter().sum::<f64>() / radii.len() as f64;
        let defect = if r_max == r_min { 0.0 } else { (r_max - r_min) / r_mean };
        Ok(SphericityReport {
            r_min,
            r_max,
            r_mean,
            defect,
            hausdorff: hausdorff_to_sphere(sample, rho),
            rho,
        })
    }
}

/// Least-squares fit of `log r = α log t + log c` over the trailing half of
/// the data; returns `(α, c)`.
pub fn fit_growth_exponent(times: &[f64], radii: &[f64]) -> Result<(f64, f64)> {
    if times.len() != radii.len() {
        return Err(Error::InvalidInput("times and radii differ in length".into()));
    }
    if times.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 points, got {}",
            times.len()
        )));
    }
    if times.iter().chain(radii).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput("times and radii must be positive".into()));
    }
    let start = times.len() / 2;
    let xs: Vec<f64> = times[start..].iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = radii[start..].iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * mx.abs().max(1.0) {
        return Err(Error::InvalidInput("degenerate time ladder".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    Ok((alpha, (my - alpha * mx).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ball_mask;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle(rho: f64, count: usize, skip: impl Fn(f64) -> bool) -> BoundarySample {
        let points = (0..count)
            .map(|k| 2.0 * PI * k as f64 / count as f64)
            .filter(|a| !skip(*a))
            .map(|a| [rho * a.cos(), rho * a.sin(), 0.0])
            .collect();
        BoundarySample { points, t: 0.0, dim: 2 }
    }

    #[test]
    fn boundary_of_a_ball() {
        for dim in [2, 3] {
            let grid = Grid::new(dim, 2.0, if dim == 2 { 161 } else { 41 }).unwrap();
            let r = 1.3;
            let ball = ball_mask(&grid, &[0.0; 3], r).unwrap();
            let s = extract_boundary(&grid, &ball, 1.0).unwrap();
            assert!(!s.points.is_empty());
            for rad in s.radii() {
                assert!(rad <= r && rad >= r - 2.0 * grid.h(), "{rad}");
            }
        }
    }

    #[test]
    fn boundary_errors_and_single_node() {
        let grid = Grid::new(2, 2.0, 17).unwrap();
        assert!(extract_boundary(&grid, &NodeMask::empty(&grid), 0.0).is_err());
        let all = NodeMask::from_fn(&grid, |_| true);
        assert!(matches!(
            extract_boundary(&grid, &all, 0.0),
            Err(Error::SupportTouchesBox { .. })
        ));
        let mut one = NodeMask::empty(&grid);
        one.set(grid.origin_index(), true);
        let s = extract_boundary(&grid, &one, 0.0).unwrap();
        assert_eq!(s.points, vec![[0.0; 3]]);
    }

    #[test]
    fn hausdorff_on_the_sphere_is_resolution_limited() {
        let s = circle(2.0, 400, |_| false);
        assert!(hausdorff_to_sphere(&s, 2.0) <= 2.0 * PI / 400.0);
    }

    #[test]
    fn hausdorff_detects_radius_offset() {
        let s = circle(2.1, 400, |_| false);
        let d = hausdorff_to_sphere(&s, 2.0);
        assert!((d - 0.1).abs() <= 2.1 * PI / 400.0, "{d}");
    }

    #[test]
    fn hausdorff_detects_missing_cap() {
        let theta = 0.6;
        let s = circle(1.0, 720, |a| a < theta || a > 2.0 * PI - theta);
        let depth = 1.0 - theta.cos();
        let d = hausdorff_to_sphere(&s, 1.0);
        // Every point is on the sphere, so only the second term can see the gap.
        assert!(d > depth / 2.0, "{d} vs {depth}");
    }

    #[test]
    fn hausdorff_in_three_dimensions() {
        let dirs = sphere_directions(3);
        let points = dirs.iter().map(|d| [1.5 * d[0], 1.5 * d[1], 1.5 * d[2]]).collect();
        let s = BoundarySample { points, t: 0.0, dim: 3 };
        assert!(hausdorff_to_sphere(&s, 1.5) < 1e-12);
        assert!((hausdorff_to_sphere(&s, 1.4) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn sphericity_of_a_circle() {
        let s = circle(3.0, 100, |_| false);
        let rep = SphericityReport::new(&s, 3.0).unwrap();
        assert!(rep.defect < 1e-14);
        assert!((rep.r_mean - 3.0).abs() < 1e-14);
        assert!(SphericityReport::new(&s, 0.0).is_err());
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let times: Vec<f64> = (1..=12).map(|k| 2f64.powi(k)).collect();
        let radii: Vec<f64> = times.iter().map(|t| 1.7 * t.powf(1.0 / 3.0)).collect();
        let (alpha, c) = fit_growth_exponent(&times, &radii).unwrap();
        assert!((alpha - 1.0 / 3.0).abs() < 1e-10);
        assert!((c - 1.7).abs() < 1e-10);
    }

    #[test]
    fn log_corrected_law_fits_below_one_half() {
        let times: Vec<f64> = (0..=20).map(|k| 10f64.powf(2.0 + 0.1 * k as f64)).collect();
        let radii: Vec<f64> = times.iter().map(|t| 2.0 * (t / t.ln()).sqrt()).collect();
        let (alpha, _) = fit_growth_exponent(&times, &radii).unwrap();
        assert!(alpha > 0.40 && alpha < 0.50, "{alpha}");
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let times: Vec<f64> = (0..16).map(|k| 10f64.powf(1.0 + 0.2 * k as f64)).collect();
            let radii: Vec<f64> = times
                .iter()
                .map(|t| t.powf(0.25) * (1.0 + rng.random_range(-0.01..0.01)))
                .collect();
            let (alpha, _) = fit_growth_exponent(&times, &radii).unwrap();
            assert!((alpha - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_growth_exponent(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_growth_exponent(&[1.0, 2.0, 3.0, 3.0, 3.0], &[1.0; 5]).is_err());
        assert!(fit_growth_exponent(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn radii_are_ordered_and_hausdorff_obeys_triangle_inequality(
            radii in prop::collection::vec(0.5f64..3.0, 8..40),
            rho in 0.5f64..3.0,
        ) {
            let count = radii.len();
            let points = radii
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let a = 2.0 * PI * k as f64 / count as f64;
                    [r * a.cos(), r * a.sin(), 0.0]
                })
                .collect();
            let s = BoundarySample { points, t: 1.0, dim: 2 };
            let rep = SphericityReport::new(&s, rho).unwrap();
            prop_assert!(rep.r_min <= rep.r_mean + 1e-12 && rep.r_mean <= rep.r_max + 1e-12);
            prop_assert!(rep.defect >= 0.0 && rep.hausdorff >= 0.0);
            let all_equal = radii.iter().all(|&r| r == radii[0]);
            prop_assert_eq!(rep.defect == 0.0, all_equal);
            let at_mean = hausdorff_to_sphere(&s, rep.r_mean);
            prop_assert!(at_mean <= rep.hausdorff + (rep.r_mean - rho).abs() + 1e-12);
        }
    }
}
