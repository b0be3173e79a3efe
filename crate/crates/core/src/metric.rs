//! Metric densities, weighted path length and the closed-form hyperbolic
//! distance of the unit disc.

use std::sync::Arc;

use num_complex::Complex64;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::kernel::KernelModel;
use crate::quad1d;

/// Relative tolerance of the adaptive quadrature in [`path_length`].
pub const PATH_QUAD_TOL: f64 = 1e-11;

/// Points sampled per segment when validating a polyline.
pub const SEGMENT_CHECKS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    /// (1 − |z|²)⁻¹, unit disc only.
    Hyperbolic,
    /// 1/d(z, ∂Ω).
    Quasihyperbolic,
    /// Bergman metric density of a fitted kernel.
    Bergman(Arc<KernelModel>),
    Constant(f64),
}

/// A positive weight on a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDensity {
    domain: DomainSpec,
    kind: DensityKind,
}

impl MetricDensity {
    pub fn new(domain: DomainSpec, kind: DensityKind) -> Result<Self> {
        match &kind {
            DensityKind::Hyperbolic if !domain.is_unit_disc() => {
                return Err(Error::InvalidDomain("the hyperbolic density is defined on the unit disc only".into()))
            }
            DensityKind::Constant(c) if !(*c > 0.0 && c.is_finite()) => {
                return Err(Error::InvalidArgument(format!("constant density must be positive, got {c}")))
            }
            DensityKind::Bergman(model) if model.domain() != &domain => {
                return Err(Error::InvalidDomain(format!(
                    "kernel was fitted on {} but the density lives on {}",
                    model.domain(),
                    domain
                )))
            }
            _ => {}
        }
        Ok(MetricDensity { domain, kind })
    }

    /// Hyperbolic density of the unit disc.
    pub fn hyperbolic() -> Self {
        MetricDensity { domain: DomainSpec::unit_disc(), kind: DensityKind::Hyperbolic }
    }

    pub fn quasihyperbolic(domain: DomainSpec) -> Self {
        MetricDensity { domain, kind: DensityKind::Quasihyperbolic }
    }

    pub fn bergman(model: Arc<KernelModel>) -> Self {
        MetricDensity { domain: model.domain().clone(), kind: DensityKind::Bergman(model) }
    }

    pub fn constant(domain: DomainSpec, c: f64) -> Result<Self> {
        MetricDensity::new(domain, DensityKind::Constant(c))
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DensityKind::Hyperbolic => "hyperbolic",
            DensityKind::Quasihyperbolic => "quasihyperbolic",
            DensityKind::Bergman(_) => "bergman",
            DensityKind::Constant(_) => "constant",
        }
    }

    /// True when ω → ∞ at the boundary.
    pub fn blows_up(&self) -> bool {
        !matches!(self.kind, DensityKind::Constant(_))
    }

    /// ω(z).
    pub fn eval(&self, z: Complex64) -> Result<f64> {
        if !self.domain.contains(z) {
            return Err(Error::OutsideDomain(z));
        }
        match &self.kind {
            DensityKind::Hyperbolic => Ok(1.0 / (1.0 - z.norm_sqr())),
            DensityKind::Quasihyperbolic => Ok(1.0 / self.domain.boundary_gap(z)),
            DensityKind::Bergman(model) => model.bergman_density(z),
            DensityKind::Constant(c) => Ok(*c),
        }
    }
}

/// ω(z); see [`MetricDensity::eval`].
pub fn density_eval(omega: &MetricDensity, z: Complex64) -> Result<f64> {
    omega.eval(z)
}

/// A polyline whose segments stay inside a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PolylinePath {
    vertices: Vec<Complex64>,
}

impl PolylinePath {
    /// Validate `vertices` against `domain`.
    pub fn new(vertices: Vec<Complex64>, domain: &DomainSpec) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidPath("a path needs at least one vertex".into()));
        }
        for &v in &vertices {
            if !domain.contains(v) {
                return Err(Error::InvalidPath(format!("vertex {v} is outside the domain")));
            }
        }
        for (i, seg) in vertices.windows(2).enumerate() {
            if !segment_inside(domain, seg[0], seg[1]) {
                return Err(Error::InvalidPath(format!("segment {i} leaves the domain")));
            }
        }
        Ok(PolylinePath { vertices })
    }

    pub(crate) fn new_unchecked(vertices: Vec<Complex64>) -> Self {
        PolylinePath { vertices }
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.vertices.last().unwrap()
    }

    pub fn euclidean_length(&self) -> f64 {
        self.vertices.windows(2).map(|s| (s[1] - s[0]).norm()).sum()
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        PolylinePath { vertices: v }
    }

    /// Two-column `x y` text, one vertex per line.
    pub fn to_text(&self) -> String {
        self.vertices.iter().map(|v| format!("{:.17e} {:.17e}\n", v.re, v.im)).collect()
    }
}

/// Check that the segment [a, b] lies inside the domain: midpoint samples
/// plus the exact boundary crossings of the segment.
pub(crate) fn segment_inside(domain: &DomainSpec, a: Complex64, b: Complex64) -> bool {
    (1..=SEGMENT_CHECKS).all(|k| {
        let t = (k as f64 - 0.5) / SEGMENT_CHECKS as f64;
        domain.contains(a + (b - a) * t)
    }) && (a == b || domain.line_crossings(a, b).is_empty())
}

/// ∫_[a,b] ω |dz| by adaptive Gauss–Legendre.
pub fn segment_length(omega: &MetricDensity, a: Complex64, b: Complex64) -> Result<f64> {
    let len = (b - a).norm();
    if len == 0.0 {
        return Ok(0.0);
    }
    let integral = quad1d::adaptive(0.0, 1.0, PATH_QUAD_TOL, |t| omega.eval(a + (b - a) * t))?;
    Ok(integral * len)
}

/// Weighted length ℓ_ω of a polyline.
pub fn path_length(omega: &MetricDensity, path: &PolylinePath) -> Result<f64> {
    let mut total = 0.0;
    for (i, seg) in path.vertices.windows(2).enumerate() {
        if !omega.domain.contains(seg[0]) || !segment_inside(&omega.domain, seg[0], seg[1]) {
            return Err(Error::InvalidPath(format!("segment {i} leaves the domain")));
        }
        total += segment_length(omega, seg[0], seg[1])?;
    }
    if let Some(&last) = path.vertices.last() {
        if !omega.domain.contains(last) {
            return Err(Error::InvalidPath(format!("vertex {last} is outside the domain")));
        }
    }
    Ok(total)
}

/// Hyperbolic distance artanh(|z − w| / |1 − conj(z) w|) of the unit disc
/// (the distance generated by (1 − |z|²)⁻¹). Infinite if either point is
/// not inside the disc.
pub fn hyperbolic_distance_closed(z: Complex64, w: Complex64) -> f64 {
    if z.norm_sqr() >= 1.0 || w.norm_sqr() >= 1.0 {
        return f64::INFINITY;
    }
    let num = (z - w).norm();
    let den = (1.0 - z.conj() * w).norm();
    (num / den).atanh()
}

/// φ(z) = e^{iθ}(a − z)/(1 − conj(a) z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscAutomorphism {
    pub a: Complex64,
    pub theta: f64,
}

impl DiscAutomorphism {
    pub fn new(a: Complex64, theta: f64) -> Result<Self> {
        if !(a.norm() < 1.0) || !theta.is_finite() {
            return Err(Error::InvalidArgument(format!("automorphism needs |a| < 1, got a = {a}")));
        }
        Ok(DiscAutomorphism { a, theta })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, self.theta) * (self.a - z) / (1.0 - self.a.conj() * z)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let d = 1.0 - self.a.conj() * z;
        Complex64::from_polar(1.0, self.theta) * (self.a.norm_sqr() - 1.0) / (d * d)
    }
}

/// Convenience constructor matching [`DiscAutomorphism::new`].
pub fn disc_automorphism(a: Complex64, theta: f64) -> Result<DiscAutomorphism> {
    DiscAutomorphism::new(a, theta)
}
