//! Verification experiments: configuration, checks and reports.

mod checks;
mod report;

use std::f64::consts::TAU;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::growth::{DistanceEvaluator, MIN_DECADES};
use crate::kernel::{fit_kernel_on, KernelBasis, KernelModel};
use crate::maps::AnalyticMap;
use crate::metric::MetricDensity;

pub use checks::{
    compute_means, compute_modulus, run_experiment, run_nt_bound_fit, run_qh_comparability, run_theorem1_check, run_theorem23_check,
    run_yamashita_check,
};
pub use report::{emit_report, read_curve, CriterionResult, CurveData, VerificationReport};

/// Experiment names accepted by [`run_experiment`].
pub const EXPERIMENTS: [&str; 5] = ["hl1", "hl2", "yamashita", "qh-compare", "nt-bounds"];

/// One experiment, as read from a TOML file. All keys except `experiment`
/// have defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// `disc`, `ellipse`, `polygon` or `smoothed_polygon`.
    #[serde(default = "default_domain")]
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<[f64; 2]>,
    /// Flat list x0, y0, x1, y1, ...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corner_radius: Option<f64>,
    /// `hyperbolic`, `quasihyperbolic`, `bergman` or `constant`. Defaults to
    /// `hyperbolic` for the growth experiments and `bergman` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Mean exponent; absent means the supremum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Radii 1 − 2^{−k} for k in the closed range.
    #[serde(default = "default_radii_k")]
    pub radii_k: [u32; 2],
    /// Steps 2π·2^{−k} for k in the closed range.
    #[serde(default = "default_steps_k")]
    pub steps_k: [u32; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<f64>>,
    /// Samples per circle for integral means.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Samples of the boundary trace (defaults to `samples`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_samples: Option<usize>,
    /// Geodesic solver resolution.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_kernel_resolution")]
    pub kernel_resolution: f64,
    #[serde(default = "default_kernel_basis")]
    pub kernel_basis: String,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Pairs sampled for the two-sided distance estimate.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Pairs used to compare distances in `qh-compare`.
    #[serde(default = "default_distance_pairs")]
    pub distance_pairs: usize,
    /// Smallest boundary distance of sampled points.
    #[serde(default = "default_min_gap")]
    pub min_gap: f64,
    /// Largest acceptable constant in the two-sided distance estimate.
    #[serde(default = "default_cap")]
    pub cap: f64,
    /// Density ratios must lie in [1/bound, bound].
    #[serde(default = "default_bound")]
    pub bound: f64,
    /// Distance ratios must lie in [1/distance_bound, distance_bound].
    #[serde(default = "default_bound")]
    pub distance_bound: f64,
    /// Boundary distances of the sampling rings, decreasing.
    #[serde(default = "default_rings")]
    pub rings: Vec<f64>,
    #[serde(default = "default_rays")]
    pub rays: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_domain() -> String {
    "disc".into()
}
fn default_radii_k() -> [u32; 2] {
    [2, 9]
}
fn default_steps_k() -> [u32; 2] {
    [6, 11]
}
fn default_samples() -> usize {
    16384
}
fn default_resolution() -> f64 {
    0.02
}
fn default_degree() -> usize {
    120
}
fn default_kernel_resolution() -> f64 {
    0.02
}
fn default_kernel_basis() -> String {
    "arnoldi".into()
}
fn default_tolerance() -> f64 {
    0.1
}
fn default_seed() -> u64 {
    1
}
fn default_pairs() -> usize {
    200
}
fn default_distance_pairs() -> usize {
    8
}
fn default_min_gap() -> f64 {
    0.05
}
fn default_cap() -> f64 {
    10.0
}
fn default_bound() -> f64 {
    3.0
}
fn default_rings() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}
fn default_rays() -> usize {
    16
}

impl ExperimentConfig {
    /// A config with every key at its default.
    pub fn new(experiment: &str) -> Self {
        ExperimentConfig::from_toml(&format!("experiment = {experiment:?}")).expect("default config")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Parse `text` with the `experiment` key set (or replaced) by `experiment`.
    pub fn from_toml_for(text: &str, experiment: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        table.insert("experiment".into(), toml::Value::String(experiment.into()));
        let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 12 hex digits of the SHA-256 of the config without `output`.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let digest = Sha256::digest(serde_json::to_vec(&c).expect("config serializes"));
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return bad(format!("unknown experiment {:?}; expected one of {EXPERIMENTS:?}", self.experiment));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return bad(format!("alpha must be in (0, 1], got {a}"));
            }
        }
        if let Some(p) = self.p {
            if !(p >= 1.0) {
                return bad(format!("p must be in [1, inf], got {p}"));
            }
        }
        let radii = self.radii();
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return bad("radii must increase strictly inside (0, 1)".into());
        }
        let steps = self.steps();
        if steps.windows(2).any(|w| w[1] >= w[0]) || steps.iter().any(|&h| !(h > 0.0 && h <= std::f64::consts::PI)) {
            return bad("steps must decrease strictly inside (0, π]".into());
        }
        for (name, xs) in [("radius", radii.iter().map(|r| 1.0 - r).collect::<Vec<_>>()), ("step", steps)] {
            let (lo, hi) = xs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            if xs.len() < 4 || (hi / lo).log10() < MIN_DECADES - 1e-9 {
                return bad(format!("{name} ladder needs at least 4 points spanning {MIN_DECADES} decades"));
            }
        }
        if self.samples < 64 || self.trace_samples.is_some_and(|n| n < 8) {
            return bad("need samples >= 64 and trace_samples >= 8".into());
        }
        if self.rings.windows(2).any(|w| w[1] >= w[0]) || self.rings.iter().any(|&d| !(d > 0.0)) || self.rings.len() < 2 {
            return bad("rings must be at least two strictly decreasing positive distances".into());
        }
        for (name, v) in [
            ("resolution", self.resolution),
            ("kernel_resolution", self.kernel_resolution),
            ("tolerance", self.tolerance),
            ("min_gap", self.min_gap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.cap >= 1.0 && self.bound >= 1.0 && self.distance_bound >= 1.0) {
            return bad("cap, bound and distance_bound must be at least 1".into());
        }
        if self.rays == 0 {
            return bad("rays must be positive".into());
        }
        self.kernel_basis.parse::<KernelBasis>()?;
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        match &self.radii {
            Some(r) => r.clone(),
            None => (self.radii_k[0]..=self.radii_k[1]).map(|k| 1.0 - 0.5f64.powi(k as i32)).collect(),
        }
    }

    pub fn steps(&self) -> Vec<f64> {
        match &self.steps {
            Some(s) => s.clone(),
            None => (self.steps_k[0]..=self.steps_k[1]).map(|k| TAU * 0.5f64.powi(k as i32)).collect(),
        }
    }

    pub fn trace_samples(&self) -> usize {
        self.trace_samples.unwrap_or(self.samples)
    }

    pub fn density_name(&self) -> &str {
        match &self.density {
            Some(d) => d,
            None if matches!(self.experiment.as_str(), "qh-compare" | "nt-bounds") => "bergman",
            None => "hyperbolic",
        }
    }

    pub fn build_domain(&self) -> Result<DomainSpec> {
        let need = |what: &str| Error::InvalidArgument(format!("domain {:?} needs {what}", self.domain));
        let pairs = |v: &Vec<f64>| -> Result<Vec<Complex64>> {
            if v.len() % 2 != 0 {
                return Err(Error::InvalidArgument("vertices must be a flat list of coordinate pairs".into()));
            }
            Ok(v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
        };
        match self.domain.as_str() {
            "disc" | "unit_disc" => Ok(DomainSpec::unit_disc()),
            "ellipse" => {
                let [a, b] = self.semi_axes.ok_or_else(|| need("semi_axes"))?;
                DomainSpec::ellipse(a, b)
            }
            "polygon" => DomainSpec::polygon(pairs(self.vertices.as_ref().ok_or_else(|| need("vertices"))?)?),
            "smoothed_polygon" => DomainSpec::smoothed_polygon(
                pairs(self.vertices.as_ref().ok_or_else(|| need("vertices"))?)?,
                self.corner_radius.ok_or_else(|| need("corner_radius"))?,
            ),
            other => Err(Error::InvalidArgument(format!("unknown domain kind {other:?}"))),
        }
    }

    pub fn fit_kernel(&self, domain: &DomainSpec) -> Result<KernelModel> {
        fit_kernel_on(domain, self.kernel_resolution, self.degree, self.kernel_basis.parse()?)
    }

    pub fn build_density(&self, domain: &DomainSpec) -> Result<MetricDensity> {
        match self.density_name() {
            "hyperbolic" => {
                if !domain.is_unit_disc() {
                    return Err(Error::InvalidArgument("the hyperbolic density lives on the unit disc".into()));
                }
                Ok(MetricDensity::hyperbolic())
            }
            "quasihyperbolic" => Ok(MetricDensity::quasihyperbolic(domain.clone())),
            "bergman" => Ok(MetricDensity::bergman(Arc::new(self.fit_kernel(domain)?))),
            "constant" => MetricDensity::constant(domain.clone(), 1.0),
            other => Err(Error::InvalidArgument(format!("unknown density {other:?}"))),
        }
    }

    pub fn build_map(&self, domain: &DomainSpec) -> Result<AnalyticMap> {
        let name = self.map.as_deref().ok_or_else(|| Error::InvalidArgument("experiment needs a map".into()))?;
        AnalyticMap::from_catalog(name, domain, self.alpha, self.contraction)
    }
}

/// Closed-form hyperbolic distance on the disc, weighted segment length otherwise.
pub fn trace_evaluator(omega: &MetricDensity) -> DistanceEvaluator {
    if omega.name() == "hyperbolic" && omega.domain().is_unit_disc() {
        DistanceEvaluator::HyperbolicClosed
    } else {
        DistanceEvaluator::Segment(omega.clone())
    }
}

fn is_smooth_jordan(domain: &DomainSpec) -> bool {
    !matches!(domain.kind(), DomainKind::Polygon { .. })
}
