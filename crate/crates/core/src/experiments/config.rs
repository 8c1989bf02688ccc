//! Experiment configuration: a flat `key = value` file with dotted section
//! names, plus command-line overrides.
//!
//! ```text
//! scenario = radial-validate
//! dim = 3
//!
//! [grid]
//! extent = 9
//! nodes = 97
//!
//! time.ladder = geom:1:50:12
//! ```
//!
//! A `[section]` header prefixes the keys that follow it, so `extent` above
//! is read as `grid.extent`. Comments start with `#` or `;`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::media::{CellLaw, MediaKind, MediaSpec};
use crate::obstacle::{Relaxation, SolverSettings};
use crate::par::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    RadialValidate,
    LimitProblem,
    NearField,
    GrowthExponent,
    Homogenize,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::RadialValidate,
        Scenario::LimitProblem,
        Scenario::NearField,
        Scenario::GrowthExponent,
        Scenario::Homogenize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::RadialValidate => "radial-validate",
            Scenario::LimitProblem => "limit-problem",
            Scenario::NearField => "near-field",
            Scenario::GrowthExponent => "growth-exponent",
            Scenario::Homogenize => "homogenize",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{s}'")))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An increasing list of times or rescaling parameters.
///
/// Written either as a comma-separated list or as `geom:a:b:n` / `lin:a:b:n`
/// for `n` geometrically or linearly spaced values from `a` to `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder(pub Vec<f64>);

impl Ladder {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let values = if let Some(rest) = s.strip_prefix("geom:").or_else(|| s.strip_prefix("lin:")) {
            let geometric = s.starts_with("geom:");
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!("ladder '{s}' must read kind:start:end:count")));
            }
            let a: f64 = parse_num(parts[0], "ladder start")?;
            let b: f64 = parse_num(parts[1], "ladder end")?;
            let n: usize = parse_num(parts[2], "ladder count")?;
            if n < 2 {
                return Err(Error::Config("a generated ladder needs at least 2 points".into()));
            }
            if geometric && !(a > 0.0 && b > 0.0) {
                return Err(Error::Config("a geometric ladder needs positive ends".into()));
            }
            (0..n)
                .map(|k| {
                    let s = k as f64 / (n - 1) as f64;
                    if k == n - 1 {
                        b
                    } else if geometric {
                        a * (b / a).powf(s)
                    } else {
                        a + (b - a) * s
                    }
                })
                .collect()
        } else if s.is_empty() {
            Vec::new()
        } else {
            s.split(',')
                .map(|v| parse_num(v.trim(), "ladder value"))
                .collect::<Result<Vec<f64>>>()?
        };
        let ladder = Ladder(values);
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("ladder values must be finite and nonnegative".into()));
        }
        if self.0.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("ladder must be strictly increasing".into()));
        }
        Ok(())
    }
}

impl fmt::Display for Ladder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub dim: usize,
    pub extent: f64,
    pub nodes: usize,
    /// Core radius `a`.
    pub core_radius: f64,
    /// Initial radius `b`.
    pub initial_radius: f64,
    /// Impose the core value on the core sphere with fitted stencils.
    pub fitted_core: bool,
    pub media: MediaSpec,
    pub times: Ladder,
    /// Rescaling parameters of the direct rescaled-solve mode (homogenize).
    pub lambdas: Ladder,
    /// Core datum `A` of the limit problem.
    pub amplitude: f64,
    /// Latent heat `L` of the limit problem.
    pub latent_heat: f64,
    pub omega: Relaxation,
    pub tol: Option<f64>,
    pub max_iter: usize,
    pub warm_start: bool,
    pub schedule: Schedule,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: Scenario::RadialValidate,
            dim: 3,
            extent: 9.0,
            nodes: 97,
            core_radius: 1.0,
            initial_radius: 1.5,
            fitted_core: true,
            media: MediaSpec::constant(1.0),
            times: Ladder(vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0]),
            lambdas: Ladder(Vec::new()),
            amplitude: 1.0,
            latent_heat: 1.0,
            omega: Relaxation::Auto,
            tol: None,
            max_iter: SolverSettings::default().max_iter,
            warm_start: true,
            schedule: Schedule::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

/// Every accepted key with its default, as `(key, default, meaning)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("scenario", "radial-validate", "radial-validate | limit-problem | near-field | growth-exponent | homogenize"),
    ("dim", "3", "space dimension, 2 or 3"),
    ("seed", "0", "seed for random media"),
    ("grid.extent", "9", "half-width of the box [-E, E]^n"),
    ("grid.nodes", "97", "nodes per axis (odd, >= 9)"),
    ("geometry.core_radius", "1", "radius a of the ball core K"),
    ("geometry.initial_radius", "1.5", "radius b of the initial ball"),
    ("geometry.fitted_core", "true", "impose the core value on the core sphere rather than on core nodes"),
    ("media.kind", "constant", "constant | periodic-cosine | checkerboard-iid | smoothed-noise"),
    ("media.g_min", "1", "lower bound m of g"),
    ("media.g_max", "1", "upper bound M of g"),
    ("media.cell", "1", "cell size or period"),
    ("media.law", "two-point", "cell law for random media: two-point | uniform"),
    ("time.ladder", "1,2,5,10,20,50", "times; list or geom:a:b:n / lin:a:b:n"),
    ("lambda.ladder", "", "rescaling parameters for the direct rescaled solves"),
    ("limit.amplitude", "1", "core datum A of the limit problem"),
    ("limit.latent_heat", "1", "latent heat L of the limit problem"),
    ("solver.omega", "auto", "relaxation factor in [1, 2) or auto"),
    ("solver.tol", "default", "residual tolerance; default scales with the data"),
    ("solver.max_iter", "200000", "sweep limit per solve"),
    ("solver.warm_start", "true", "warm-start each ladder solve from the previous one"),
    ("solver.schedule", "parallel", "parallel | sequential"),
    ("output.dir", "out", "directory for results.csv and run.json"),
];

fn parse_num<T: FromStr>(v: &str, what: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid {what} '{v}'")))
}

fn parse_bool(v: &str, key: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean for {key}: '{v}'"))),
    }
}

/// Reads `key = value` lines into a map, applying `[section]` prefixes.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        let key = if section.is_empty() {
            k.to_string()
        } else {
            format!("{section}.{k}")
        };
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Builds a config from defaults, then file pairs, then overrides.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut pairs = parse_pairs(text)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' must read key=value")))?;
            pairs.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_pairs(&pairs)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    /// Sets one key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "scenario" => self.scenario = v.parse()?,
            "dim" => self.dim = parse_num(v, key)?,
            "seed" => {
                self.seed = parse_num(v, key)?;
                self.media.seed = self.seed;
            }
            "grid.extent" => self.extent = parse_num(v, key)?,
            "grid.nodes" => self.nodes = parse_num(v, key)?,
            "geometry.core_radius" => self.core_radius = parse_num(v, key)?,
            "geometry.initial_radius" => self.initial_radius = parse_num(v, key)?,
            "geometry.fitted_core" => self.fitted_core = parse_bool(v, key)?,
            "media.kind" => {
                self.media.kind =
                    MediaKind::parse(v).ok_or_else(|| Error::Config(format!("unknown media kind '{v}'")))?
            }
            "media.g_min" => self.media.g_min = parse_num(v, key)?,
            "media.g_max" => self.media.g_max = parse_num(v, key)?,
            "media.cell" => self.media.cell = parse_num(v, key)?,
            "media.law" => {
                self.media.law =
                    CellLaw::parse(v).ok_or_else(|| Error::Config(format!("unknown cell law '{v}'")))?
            }
            "time.ladder" => self.times = Ladder::parse(v)?,
            "lambda.ladder" => self.lambdas = Ladder::parse(v)?,
            "limit.amplitude" => self.amplitude = parse_num(v, key)?,
            "limit.latent_heat" => self.latent_heat = parse_num(v, key)?,
            "solver.omega" => {
                self.omega = if v.trim() == "auto" {
                    Relaxation::Auto
                } else {
                    Relaxation::Fixed(parse_num(v, key)?)
                }
            }
            "solver.tol" => {
                self.tol = if v.trim() == "default" {
                    None
                } else {
                    Some(parse_num(v, key)?)
                }
            }
            "solver.max_iter" => self.max_iter = parse_num(v, key)?,
            "solver.warm_start" => self.warm_start = parse_bool(v, key)?,
            "solver.schedule" => {
                self.schedule = match v.trim() {
                    "parallel" => Schedule::Parallel,
                    "sequential" => Schedule::Sequential,
                    _ => return Err(Error::Config(format!("unknown schedule '{v}'"))),
                }
            }
            "output.dir" => self.output_dir = PathBuf::from(v.trim()),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.dim, 2 | 3) {
            return Err(Error::Config(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        if self.nodes < 9 || self.nodes.is_multiple_of(2) {
            return Err(Error::Config(format!("grid.nodes must be odd and >= 9, got {}", self.nodes)));
        }
        let (a, b, e) = (self.core_radius, self.initial_radius, self.extent);
        if !(a > 0.0 && a < b && b < e) {
            return Err(Error::Config(format!(
                "need 0 < core_radius < initial_radius < extent, got {a}, {b}, {e}"
            )));
        }
        self.media.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.times.validate()?;
        self.lambdas.validate()?;
        if self.times.0.is_empty() {
            return Err(Error::Config("time.ladder is empty".into()));
        }
        if let Some(l) = self.lambdas.0.first() {
            if *l < 1.0 {
                return Err(Error::Config("lambda.ladder values must be at least 1".into()));
            }
        }
        if !(self.amplitude > 0.0 && self.latent_heat > 0.0) {
            return Err(Error::Config("limit.amplitude and limit.latent_heat must be positive".into()));
        }
        if let Relaxation::Fixed(w) = self.omega {
            if !(1.0..2.0).contains(&w) {
                return Err(Error::Config(format!("solver.omega must lie in [1, 2), got {w}")));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::Config(format!("solver.tol must be positive, got {t}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("solver.max_iter must be positive".into()));
        }
        match self.scenario {
            Scenario::GrowthExponent if self.times.0.len() < 4 => {
                Err(Error::Config("growth-exponent needs at least 4 ladder times".into()))
            }
            Scenario::NearField if self.times.0.len() < 2 => {
                Err(Error::Config("near-field needs at least 2 ladder times".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn solver(&self) -> SolverSettings {
        SolverSettings {
            omega: self.omega,
            tol: self.tol,
            max_iter: self.max_iter,
            schedule: self.schedule,
        }
    }

    /// The resolved configuration as `key = value` pairs, in key order.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("scenario", self.scenario.to_string());
        put("dim", self.dim.to_string());
        put("seed", self.seed.to_string());
        put("grid.extent", self.extent.to_string());
        put("grid.nodes", self.nodes.to_string());
        put("geometry.core_radius", self.core_radius.to_string());
        put("geometry.initial_radius", self.initial_radius.to_string());
        put("geometry.fitted_core", self.fitted_core.to_string());
        put("media.kind", self.media.kind.name().to_string());
        put("media.g_min", self.media.g_min.to_string());
        put("media.g_max", self.media.g_max.to_string());
        put("media.cell", self.media.cell.to_string());
        put("media.law", self.media.law.name().to_string());
        put("time.ladder", self.times.to_string());
        put("lambda.ladder", self.lambdas.to_string());
        put("limit.amplitude", self.amplitude.to_string());
        put("limit.latent_heat", self.latent_heat.to_string());
        put(
            "solver.omega",
            match self.omega {
                Relaxation::Auto => "auto".to_string(),
                Relaxation::Fixed(w) => w.to_string(),
            },
        );
        put("solver.tol", self.tol.map_or("default".to_string(), |t| t.to_string()));
        put("solver.max_iter", self.max_iter.to_string());
        put("solver.warm_start", self.warm_start.to_string());
        put(
            "solver.schedule",
            match self.schedule {
                Schedule::Parallel => "parallel",
                Schedule::Sequential => "sequential",
            }
            .to_string(),
        );
        put("output.dir", self.output_dir.display().to_string());
        m
    }
}
