use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::growth::ExponentFit;

/// One pass/fail verdict with the numbers that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub passed: bool,
    pub rule: String,
    pub measured: BTreeMap<String, Option<f64>>,
}

impl CriterionResult {
    pub fn new(name: &str, passed: bool, rule: impl Into<String>, measured: &[(&str, f64)]) -> Self {
        CriterionResult {
            name: name.into(),
            passed,
            rule: rule.into(),
            measured: measured.iter().map(|&(k, v)| (k.to_string(), v.is_finite().then_some(v))).collect(),
        }
    }
}

/// A two-column curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveData {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

impl CurveData {
    pub fn new(name: &str, x_label: &str, y_label: &str, points: Vec<(f64, f64)>) -> Self {
        CurveData { name: name.into(), x_label: x_label.into(), y_label: y_label.into(), points }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# {} {}\n", self.x_label, self.y_label);
        for (x, y) in &self.points {
            writeln!(s, "{x:.16e} {y:.16e}").unwrap();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub experiment: String,
    pub tool_version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
    pub values: BTreeMap<String, Option<f64>>,
    pub fits: BTreeMap<String, ExponentFit>,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
    pub curves: Vec<CurveData>,
}

impl VerificationReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        VerificationReport {
            experiment: config.experiment.clone(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            config: config.clone(),
            passed: false,
            criteria: Vec::new(),
            values: BTreeMap::new(),
            fits: BTreeMap::new(),
            flags: Vec::new(),
            notes: Vec::new(),
            curves: Vec::new(),
        }
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.into(), v.is_finite().then_some(v));
    }

    pub fn flag(&mut self, f: &str) {
        if !self.flags.iter().any(|x| x == f) {
            self.flags.push(f.into());
        }
    }

    pub fn criterion(&mut self, c: CriterionResult) {
        self.criteria.push(c);
    }

    /// Overall verdict: every criterion passed and there is at least one.
    pub fn finish(mut self) -> Self {
        self.passed = !self.criteria.is_empty() && self.criteria.iter().all(|c| c.passed);
        self
    }

    pub fn failed_criteria(&self) -> Vec<&str> {
        self.criteria.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn has_flag(&self, f: &str) -> bool {
        self.flags.iter().any(|x| x == f)
    }

    pub fn stem(&self) -> String {
        format!("{}-{}", self.experiment, self.config_hash)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    /// One line per criterion.
    pub fn summary_text(&self) -> String {
        let mut s = format!("{} [{}]\n", self.experiment, self.config_hash);
        for c in &self.criteria {
            let nums: Vec<String> = c
                .measured
                .iter()
                .map(|(k, v)| match v {
                    Some(v) => format!("{k}={v:.6}"),
                    None => format!("{k}=inf"),
                })
                .collect();
            writeln!(s, "  {} {}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.rule, nums.join(", ")).unwrap();
        }
        if !self.flags.is_empty() {
            writeln!(s, "  flags: {}", self.flags.join(", ")).unwrap();
        }
        writeln!(s, "{}", if self.passed { "PASS" } else { "FAIL" }).unwrap();
        s
    }
}

fn fit_text(fit: &ExponentFit) -> String {
    format!(
        "slope {:.16e}\nintercept {:.16e}\nr_squared {:.16e}\nmax_residual {:.16e}\nsamples {}\nexcluded {}\n",
        fit.slope, fit.intercept, fit.r_squared, fit.max_residual, fit.samples, fit.excluded
    )
}

/// Write `<stem>.summary.json`, one `<stem>.<curve>.dat` per curve and a
/// `<stem>.<curve>.fit.txt` per fitted curve. Returns the paths written.
pub fn emit_report(report: &VerificationReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let stem = report.stem();
    let mut written = Vec::new();
    let mut put = |name: String, text: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    put(format!("{stem}.summary.json"), report.to_json())?;
    for c in &report.curves {
        put(format!("{stem}.{}.dat", c.name), c.to_text())?;
    }
    for (name, fit) in &report.fits {
        put(format!("{stem}.{name}.fit.txt"), fit_text(fit))?;
    }
    Ok(written)
}

/// Read a two-column data file written by [`emit_report`].
pub fn read_curve(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace().map(|w| w.parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => Ok((x, y)),
                _ => Err(Error::Format(format!("bad curve line {l:?}"))),
            }
        })
        .collect()
}
