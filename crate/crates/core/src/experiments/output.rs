//! Result rows, CSV and JSON artifacts.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Scenario};
use crate::error::Result;

pub const CSV_HEADER: &str =
    "scenario,t,lambda,r_min,r_max,defect,hausdorff,rho_target,alpha_fit,pde_res,comp_res,iters,wall_ms";

pub const NEAR_FIELD_HEADER: &str = "t,sup_error,relative_error";

/// Version string in `git describe` form, fixed at build time.
pub const VERSION: &str = env!("HS_VERSION");

/// One `(t, λ)` point of a run. Fields that do not apply are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: Scenario,
    pub t: f64,
    pub lambda: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub defect: f64,
    pub hausdorff: f64,
    pub rho_target: f64,
    pub alpha_fit: f64,
    pub pde_res: f64,
    pub comp_res: f64,
    pub iters: usize,
    pub wall_ms: f64,
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        let f = format_g9;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            f(self.t),
            f(self.lambda),
            f(self.r_min),
            f(self.r_max),
            f(self.defect),
            f(self.hausdorff),
            f(self.rho_target),
            f(self.alpha_fit),
            f(self.pde_res),
            f(self.comp_res),
            self.iters,
            f(self.wall_ms)
        )
    }
}

/// Annulus error of the pressure against the exterior potential at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearFieldRow {
    pub t: f64,
    pub sup_error: f64,
    pub relative_error: f64,
}

/// A scenario target: a measured value and whether it met its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            bound: format!("<= {}", format_g9(limit)),
            passed: value <= limit,
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            bound: format!("in [{}, {}]", format_g9(lo), format_g9(hi)),
            passed: value >= lo && value <= hi,
        }
    }

    pub fn open(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            bound: format!("in ({}, {})", format_g9(lo), format_g9(hi)),
            passed: value > lo && value < hi,
        }
    }

    pub fn flag(name: &str, passed: bool) -> Self {
        Check {
            name: name.to_string(),
            value: if passed { 1.0 } else { 0.0 },
            bound: "holds".to_string(),
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub near_field: Vec<NearFieldRow>,
    pub checks: Vec<Check>,
}

impl RunOutput {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn csv(&self) -> String {
        let mut s = String::with_capacity(128 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }

    pub fn near_field_csv(&self) -> String {
        let mut s = String::from(NEAR_FIELD_HEADER);
        s.push('\n');
        for r in &self.near_field {
            let _ = writeln!(s, "{},{},{}", format_g9(r.t), format_g9(r.sup_error), format_g9(r.relative_error));
        }
        s
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "version": VERSION,
            "seed": self.config.seed,
            "config": self.config.to_pairs(),
            "checks": self.checks,
        })
    }

    /// Writes `results.csv`, `run.json` and, for near-field runs,
    /// `near_field.csv` into `dir`. Returns the written paths.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let csv = dir.join("results.csv");
        fs::write(&csv, self.csv())?;
        written.push(csv);
        if !self.near_field.is_empty() {
            let nf = dir.join("near_field.csv");
            fs::write(&nf, self.near_field_csv())?;
            written.push(nf);
        }
        let json = dir.join("run.json");
        fs::write(&json, serde_json::to_string_pretty(&self.sidecar())? + "\n")?;
        written.push(json);
        Ok(written)
    }
}

/// Formats like C's `%.9g`.
pub fn format_g9(x: f64) -> String {
    format_g(x, 9)
}

pub fn format_g(x: f64, precision: usize) -> String {
    let p = precision.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g9() {
        // Reference strings from C printf("%.9g").
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0, "0.666666667"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (9999999999.0, "1e+10"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (1e-300, "1e-300"),
            (12.34567890123, "12.3456789"),
            (99.9999999999, "100"),
            (1e100, "1e+100"),
            (f64::NAN, "nan"),
            (f64::INFINITY, "inf"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g9(x), want, "{x}");
        }
    }

    #[test]
    fn row_has_thirteen_columns() {
        let row = ResultRow {
            scenario: Scenario::Homogenize,
            t: 5.0,
            lambda: f64::NAN,
            r_min: 1.0,
            r_max: 2.0,
            defect: 0.5,
            hausdorff: 0.1,
            rho_target: 2.0,
            alpha_fit: f64::NAN,
            pde_res: 1e-9,
            comp_res: 0.0,
            iters: 12,
            wall_ms: 3.25,
        };
        let line = row.csv_line();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        assert_eq!(line, "homogenize,5,nan,1,2,0.5,0.1,2,nan,1e-09,0,12,3.25");
    }

    #[test]
    fn checks() {
        assert!(Check::at_most("x", 1.0, 1.0).passed);
        assert!(!Check::open("x", 0.5, 0.4, 0.5).passed);
        assert!(Check::within("x", 0.5, 0.4, 0.5).passed);
    }
}
