//! Stationary random media: the boundary-velocity coefficient `g(x)` with
//! `m <= g <= M`, and the latent heat `ℓ = 1/g` that enters the obstacle
//! problem as a source.
//!
//! Random values are keyed by lattice cell through ChaCha streams, so a
//! field is a pure function of `(spec, grid)` whatever the sampling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeMask, Point, ScalarField};
use crate::par::{self, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MediaKind {
    Constant,
    PeriodicCosine,
    CheckerboardIid,
    SmoothedNoise,
}

impl MediaKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(MediaKind::Constant),
            "periodic-cosine" => Some(MediaKind::PeriodicCosine),
            "checkerboard-iid" | "checkerboard" => Some(MediaKind::CheckerboardIid),
            "smoothed-noise" => Some(MediaKind::SmoothedNoise),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MediaKind::Constant => "constant",
            MediaKind::PeriodicCosine => "periodic-cosine",
            MediaKind::CheckerboardIid => "checkerboard-iid",
            MediaKind::SmoothedNoise => "smoothed-noise",
        }
    }
}

/// Distribution of the per-cell values of a checkerboard medium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CellLaw {
    /// `m` or `M` with probability one half each.
    #[default]
    TwoPoint,
    /// Uniform on `[m, M]`.
    Uniform,
}

impl CellLaw {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "two-point" => Some(CellLaw::TwoPoint),
            "uniform" => Some(CellLaw::Uniform),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellLaw::TwoPoint => "two-point",
            CellLaw::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaSpec {
    pub kind: MediaKind,
    /// Lower bound `m` of `g`.
    pub g_min: f64,
    /// Upper bound `M` of `g`.
    pub g_max: f64,
    /// Period or correlation length.
    pub cell: f64,
    pub seed: u64,
    #[serde(default)]
    pub law: CellLaw,
}

impl MediaSpec {
    pub fn constant(g: f64) -> Self {
        MediaSpec {
            kind: MediaKind::Constant,
            g_min: g,
            g_max: g,
            cell: 1.0,
            seed: 0,
            law: CellLaw::TwoPoint,
        }
    }

    pub fn checkerboard(g_min: f64, g_max: f64, cell: f64, seed: u64) -> Self {
        MediaSpec {
            kind: MediaKind::CheckerboardIid,
            g_min,
            g_max,
            cell,
            seed,
            law: CellLaw::TwoPoint,
        }
    }

    pub fn periodic_cosine(g_min: f64, g_max: f64, cell: f64) -> Self {
        MediaSpec {
            kind: MediaKind::PeriodicCosine,
            g_min,
            g_max,
            cell,
            seed: 0,
            law: CellLaw::TwoPoint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_min.is_finite() && self.g_max.is_finite()) {
            return Err(Error::InvalidMedia("bounds must be finite".into()));
        }
        if !(self.g_min > 0.0 && self.g_min <= self.g_max) {
            return Err(Error::InvalidMedia(format!(
                "need 0 < m <= M, got m = {}, M = {}",
                self.g_min, self.g_max
            )));
        }
        if !(self.cell > 0.0 && self.cell.is_finite()) {
            return Err(Error::InvalidMedia(format!(
                "cell length must be positive, got {}",
                self.cell
            )));
        }
        if self.kind == MediaKind::Constant && self.g_min != self.g_max {
            return Err(Error::InvalidMedia(
                "constant medium needs m == M".into(),
            ));
        }
        Ok(())
    }

    /// The medium `x ↦ g(s·x)`, as seen by a solution rescaled in space by `s`.
    pub fn rescaled(&self, s: f64) -> MediaSpec {
        MediaSpec {
            cell: self.cell / s,
            ..self.clone()
        }
    }

    /// Exact expectation of `1/g` when the law admits a closed form.
    pub fn expected_latent_heat(&self) -> Option<f64> {
        let (m, big_m) = (self.g_min, self.g_max);
        match self.kind {
            MediaKind::Constant => Some(1.0 / m),
            MediaKind::CheckerboardIid => match self.law {
                CellLaw::TwoPoint => Some(0.5 * (1.0 / m + 1.0 / big_m)),
                CellLaw::Uniform if big_m > m => Some((big_m / m).ln() / (big_m - m)),
                CellLaw::Uniform => Some(1.0 / m),
            },
            MediaKind::PeriodicCosine | MediaKind::SmoothedNoise => None,
        }
    }

    /// Evaluates `g` at a point of a `dim`-dimensional space.
    pub fn g_at(&self, dim: usize, x: &Point) -> f64 {
        let (m, big_m) = (self.g_min, self.g_max);
        match self.kind {
            MediaKind::Constant => m,
            MediaKind::PeriodicCosine => {
                let prod: f64 = x[..dim]
                    .iter()
                    .map(|&c| (2.0 * PI * c / self.cell).cos())
                    .product();
                let g = 0.5 * (m + big_m) + 0.5 * (big_m - m) * prod;
                g.clamp(m, big_m)
            }
            MediaKind::CheckerboardIid => {
                let mut cell = [0i64; 3];
                for a in 0..dim {
                    cell[a] = (x[a] / self.cell).floor() as i64;
                }
                self.cell_value(&cell)
            }
            MediaKind::SmoothedNoise => {
                let mut base = [0i64; 3];
                let mut w = [0.0; 3];
                for a in 0..dim {
                    let s = x[a] / self.cell;
                    let f = s.floor();
                    base[a] = f as i64;
                    let t = s - f;
                    w[a] = t * t * (3.0 - 2.0 * t);
                }
                let mut acc = 0.0;
                for corner in 0..(1usize << dim) {
                    let mut cell = base;
                    let mut weight = 1.0;
                    for a in 0..dim {
                        if corner >> a & 1 == 1 {
                            cell[a] += 1;
                            weight *= w[a];
                        } else {
                            weight *= 1.0 - w[a];
                        }
                    }
                    acc += weight * self.lattice_uniform(&cell);
                }
                acc.clamp(m, big_m)
            }
        }
    }

    fn cell_rng(&self, cell: &[i64; 3]) -> ChaCha8Rng {
        const MASK: u64 = (1 << 21) - 1;
        let key = (cell[0] as u64 & MASK)
            | ((cell[1] as u64 & MASK) << 21)
            | ((cell[2] as u64 & MASK) << 42);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(key);
        rng
    }

    fn cell_value(&self, cell: &[i64; 3]) -> f64 {
        let mut rng = self.cell_rng(cell);
        match self.law {
            CellLaw::TwoPoint => {
                if rng.random_bool(0.5) {
                    self.g_max
                } else {
                    self.g_min
                }
            }
            CellLaw::Uniform => self.g_min + (self.g_max - self.g_min) * rng.random::<f64>(),
        }
    }

    fn lattice_uniform(&self, cell: &[i64; 3]) -> f64 {
        let mut rng = self.cell_rng(cell);
        self.g_min + (self.g_max - self.g_min) * rng.random::<f64>()
    }
}

/// Sampled coefficient `g` and latent heat `ℓ = 1/g` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MediaField {
    pub g: ScalarField,
    pub ell: ScalarField,
    pub spec: MediaSpec,
}

impl MediaField {
    pub fn ell_max(&self) -> f64 {
        self.ell.max()
    }
}

/// Samples `spec` at every node of `grid`.
pub fn sample_media(spec: &MediaSpec, grid: &Grid) -> Result<MediaField> {
    sample_media_with(spec, grid, Schedule::default())
}

pub fn sample_media_with(spec: &MediaSpec, grid: &Grid, schedule: Schedule) -> Result<MediaField> {
    spec.validate()?;
    let dim = grid.dim();
    let mut g = vec![0.0; grid.len()];
    par::fill(schedule, &mut g, |p| spec.g_at(dim, &grid.coord(p)));
    if let Some(bad) = g.iter().find(|&&v| !(v >= spec.g_min && v <= spec.g_max)) {
        return Err(Error::Invariant(format!(
            "sampled g = {bad} outside [{}, {}]",
            spec.g_min, spec.g_max
        )));
    }
    let ell: Vec<f64> = g.iter().map(|v| 1.0 / v).collect();
    Ok(MediaField {
        g: ScalarField::from_vec(g),
        ell: ScalarField::from_vec(ell),
        spec: spec.clone(),
    })
}

/// Spatial mean of `ℓ = 1/g` over `region`, the estimate of the homogenized
/// latent heat.
pub fn homogenized_constant(field: &MediaField, region: &NodeMask) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for p in region.indices() {
        sum += field.ell[p];
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("empty averaging region".into()));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ball_mask;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_medium() {
        let g = Grid::new(2, 2.0, 17).unwrap();
        let f = sample_media(&MediaSpec::constant(1.0), &g).unwrap();
        assert!(f.g.values().iter().all(|&v| v == 1.0));
        assert!(f.ell.values().iter().all(|&v| v == 1.0));
        let c = sample_media(&MediaSpec::constant(4.0), &g).unwrap();
        let region = NodeMask::from_fn(&g, |_| true);
        assert_eq!(homogenized_constant(&c, &region).unwrap(), 0.25);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = MediaSpec::checkerboard(2.0, 1.0, 0.5, 0);
        assert!(s.validate().is_err());
        s = MediaSpec::checkerboard(0.0, 1.0, 0.5, 0);
        assert!(s.validate().is_err());
        s = MediaSpec::checkerboard(1.0, 2.0, 0.0, 0);
        assert!(s.validate().is_err());
        s = MediaSpec::constant(1.0);
        s.g_max = 2.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn checkerboard_is_two_valued_and_reproducible() {
        let g = Grid::new(2, 4.0, 65).unwrap();
        let spec = MediaSpec::checkerboard(1.0, 2.0, 0.5, 7);
        let a = sample_media(&spec, &g).unwrap();
        let b = sample_media(&spec, &g).unwrap();
        assert!(a.g.values().iter().all(|&v| v == 1.0 || v == 2.0));
        assert!(a.g.values().contains(&1.0));
        assert!(a.g.values().contains(&2.0));
        assert_eq!(a, b);
        for (g, l) in a.g.values().iter().zip(a.ell.values()) {
            assert_eq!(g * l, 1.0);
        }
        let other = sample_media(&MediaSpec { seed: 8, ..spec }, &g).unwrap();
        assert_ne!(a.g, other.g);
    }

    #[test]
    fn periodic_cosine_extrema() {
        let g = Grid::new(2, 2.0, 33).unwrap();
        let f = sample_media(&MediaSpec::periodic_cosine(1.0, 2.0, 1.0), &g).unwrap();
        assert_abs_diff_eq!(f.g.min(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.g.max(), 2.0, epsilon = 1e-12);
        // Origin: all cosines equal one.
        assert_abs_diff_eq!(f.g[g.origin_index()], 2.0, epsilon = 1e-12);
    }

    /// Composite Simpson on `[0, p]^2`.
    fn simpson_2d(f: impl Fn(f64, f64) -> f64, p: f64, n: usize) -> f64 {
        let h = p / n as f64;
        let w = |i: usize| {
            if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let mut acc = 0.0;
        for j in 0..=n {
            for i in 0..=n {
                acc += w(i) * w(j) * f(i as f64 * h, j as f64 * h);
            }
        }
        acc * h * h / 9.0 / (p * p)
    }

    #[test]
    fn periodic_cosine_mean_matches_quadrature() {
        let period = 1.0;
        let g = Grid::new(2, 2.0, 65).unwrap();
        let spec = MediaSpec::periodic_cosine(1.0, 2.0, period);
        let f = sample_media(&spec, &g).unwrap();
        // Whole periods: nodes in [-2, 2) on both axes.
        let region = NodeMask::from_fn(&g, |p| {
            let x = g.coord(p);
            x[0] < 2.0 - 1e-12 && x[1] < 2.0 - 1e-12
        });
        let est = homogenized_constant(&f, &region).unwrap();
        // Oracle at ten times the grid resolution (16 nodes per period on the grid).
        let oracle = simpson_2d(
            |x, y| {
                let c = (2.0 * PI * x / period).cos() * (2.0 * PI * y / period).cos();
                1.0 / (1.5 + 0.5 * c)
            },
            period,
            160,
        );
        assert_abs_diff_eq!(est, oracle, epsilon = 1e-6);
    }

    #[test]
    fn checkerboard_mean_converges_to_expectation() {
        let g = Grid::new(2, 40.0, 401).unwrap();
        let spec = MediaSpec::checkerboard(1.0, 2.0, 0.5, 11);
        let f = sample_media(&spec, &g).unwrap();
        let region = ball_mask(&g, &[0.0; 3], 39.0).unwrap();
        let est = homogenized_constant(&f, &region).unwrap();
        let exact = spec.expected_latent_heat().unwrap();
        assert_eq!(exact, 0.75);
        // Two-point law on {1, 1/2}: variance 1/16 per cell.
        let cells = PI * 39.0 * 39.0 / (0.5 * 0.5);
        let tol = 3.0 * (0.0625 / cells).sqrt();
        assert!((est - exact).abs() <= tol, "{est} vs {exact} (tol {tol})");
    }

    #[test]
    fn disjoint_regions_have_close_means() {
        let g = Grid::new(2, 20.0, 201).unwrap();
        let spec = MediaSpec::checkerboard(1.0, 2.0, 1.0, 3);
        let f = sample_media(&spec, &g).unwrap();
        let left = ball_mask(&g, &[-10.0, 0.0, 0.0], 8.0).unwrap();
        let right = ball_mask(&g, &[10.0, 0.0, 0.0], 8.0).unwrap();
        let a = homogenized_constant(&f, &left).unwrap();
        let b = homogenized_constant(&f, &right).unwrap();
        let cells = PI * 64.0;
        assert!((a - b).abs() <= 5.0 * 2.0 / cells.sqrt());
    }

    #[test]
    fn smoothed_noise_respects_bounds() {
        let g = Grid::new(3, 2.0, 17).unwrap();
        let spec = MediaSpec {
            kind: MediaKind::SmoothedNoise,
            g_min: 0.5,
            g_max: 3.0,
            cell: 0.7,
            seed: 5,
            law: CellLaw::Uniform,
        };
        let f = sample_media(&spec, &g).unwrap();
        assert!(f.g.min() >= 0.5 && f.g.max() <= 3.0);
        assert!(f.g.max() - f.g.min() > 0.5);
    }

    #[test]
    fn uniform_checkerboard_expectation() {
        let spec = MediaSpec {
            law: CellLaw::Uniform,
            ..MediaSpec::checkerboard(1.0, 2.0, 1.0, 1)
        };
        assert_abs_diff_eq!(spec.expected_latent_heat().unwrap(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn rescaled_medium_samples_dilated_field() {
        let spec = MediaSpec::checkerboard(1.0, 2.0, 1.0, 9);
        let scaled = spec.rescaled(4.0);
        for x in [[0.3, -1.7, 0.0], [2.2, 0.9, 0.0], [-0.05, 0.6, 0.0]] {
            let y = [4.0 * x[0], 4.0 * x[1], 0.0];
            assert_eq!(scaled.g_at(2, &x), spec.g_at(2, &y));
        }
    }

    #[test]
    fn empty_region_is_an_error() {
        let g = Grid::new(2, 1.0, 9).unwrap();
        let f = sample_media(&MediaSpec::constant(1.0), &g).unwrap();
        assert!(homogenized_constant(&f, &NodeMask::empty(&g)).is_err());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn sampling_is_independent_of_thread_count() {
        let g = Grid::new(3, 3.0, 33).unwrap();
        let spec = MediaSpec::checkerboard(1.0, 2.0, 0.4, 21);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| sample_media(&spec, &g).unwrap());
        let b = four.install(|| sample_media(&spec, &g).unwrap());
        let c = sample_media_with(&spec, &g, Schedule::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
