//! Analytic test maps from the unit disc into a domain.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::geodesic::{weighted_distance, GeodesicResult};
use crate::metric::MetricDensity;
use crate::poly::Polynomial;
use crate::quad1d;

/// Radius used for radial traces of maps without a continuous extension.
pub const DEFAULT_TRACE_RADIUS: f64 = 1.0 - 1e-4;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Polynomial(Polynomial),
    /// Π (z − a_k)/(1 − conj(a_k) z).
    Blaschke { zeros: Vec<Complex64> },
    /// w0 + c(1 − z)^α on the principal branch.
    PowerCusp { w0: Complex64, c: Complex64, alpha: f64 },
    /// centre + s·r·inner(z), where `inner` maps into the closed unit disc and
    /// r is the boundary distance of the target's interior centre.
    AffineInto { inner: Box<AnalyticMap>, s: f64, center: Complex64, radius: f64 },
    /// exp(−σ(1 + z)/(1 − z)); bounded, no continuous extension at z = 1.
    SingularInner { sigma: f64 },
}

/// An analytic map of the unit disc into `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticMap {
    pub name: String,
    pub kind: MapKind,
    pub target: DomainSpec,
}

impl AnalyticMap {
    /// Build and verify image containment and the derivative formula.
    pub fn new(name: impl Into<String>, kind: MapKind, target: DomainSpec) -> Result<Self> {
        let map = AnalyticMap { name: name.into(), kind, target };
        map.validate_parameters()?;
        map.check_image()?;
        map.check_derivative()?;
        Ok(map)
    }

    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        AnalyticMap::new("polynomial", MapKind::Polynomial(Polynomial::from_real(coeffs)), DomainSpec::unit_disc())
    }

    pub fn identity() -> Self {
        AnalyticMap::polynomial(&[0.0, 1.0]).expect("identity map").renamed("identity")
    }

    pub fn blaschke(zeros: Vec<Complex64>) -> Result<Self> {
        AnalyticMap::new("blaschke", MapKind::Blaschke { zeros }, DomainSpec::unit_disc())
    }

    pub fn power_cusp(w0: Complex64, c: Complex64, alpha: f64, target: DomainSpec) -> Result<Self> {
        AnalyticMap::new("power_cusp", MapKind::PowerCusp { w0, c, alpha }, target)
    }

    /// Shrink a map of the disc into a disc about the target's interior centre.
    pub fn affine_into(target: DomainSpec, inner: AnalyticMap, s: f64) -> Result<Self> {
        if !inner.target.is_unit_disc() {
            return Err(Error::InvalidMap("affine_into needs an inner map into the unit disc".into()));
        }
        let center = target.interior_center();
        let radius = target.boundary_gap(center);
        let name = format!("{}_into", inner.name);
        AnalyticMap::new(name, MapKind::AffineInto { inner: Box::new(inner), s, center, radius }, target)
    }

    pub fn singular_inner(sigma: f64) -> Result<Self> {
        AnalyticMap::new("singular_inner", MapKind::SingularInner { sigma }, DomainSpec::unit_disc())
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Catalogue lookup. Maps whose natural target is the disc are wrapped
    /// with [`AnalyticMap::affine_into`] (contraction `s`, default 1/2) when
    /// `target` is another domain. `alpha` parametrizes the generic `cusp`.
    pub fn from_catalog(name: &str, target: &DomainSpec, alpha: Option<f64>, s: Option<f64>) -> Result<Self> {
        let quarter = Complex64::new(0.25, 0.0);
        let base = match name {
            "identity" => AnalyticMap::identity(),
            "constant" => AnalyticMap::polynomial(&[0.0])?.renamed("constant"),
            "square" => AnalyticMap::polynomial(&[0.0, 0.0, 1.0])?.renamed("square"),
            "half" => AnalyticMap::polynomial(&[0.0, 0.5])?.renamed("half"),
            "cusp" => {
                let alpha = alpha.ok_or_else(|| Error::InvalidMap("map \"cusp\" needs alpha".into()))?;
                AnalyticMap::power_cusp(ZERO, quarter, alpha, DomainSpec::unit_disc())?
                    .renamed(format!("cusp_a{}", (alpha * 100.0).round()))
            }
            "cusp_a30" | "cusp_a50" | "cusp_a70" | "cusp_a100" => {
                let alpha = name[6..].parse::<f64>().unwrap() / 100.0;
                AnalyticMap::power_cusp(ZERO, quarter, alpha, DomainSpec::unit_disc())?.renamed(name)
            }
            "blaschke2" => AnalyticMap::blaschke(vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, -0.3)])?
                .renamed("blaschke2"),
            "singular" => AnalyticMap::singular_inner(1.0)?.renamed("singular"),
            _ => return Err(Error::InvalidMap(format!("unknown map {name:?}"))),
        };
        match (target.is_unit_disc(), s) {
            (true, None) => Ok(base),
            (_, s) => AnalyticMap::affine_into(target.clone(), base, s.unwrap_or(0.5)),
        }
    }

    /// Names accepted by [`AnalyticMap::from_catalog`].
    pub fn catalog_names() -> &'static [&'static str] {
        &["identity", "constant", "square", "half", "cusp", "cusp_a30", "cusp_a50", "cusp_a70", "cusp_a100", "blaschke2", "singular"]
    }

    fn validate_parameters(&self) -> Result<()> {
        match &self.kind {
            MapKind::Blaschke { zeros } => {
                if let Some(a) = zeros.iter().find(|a| !(a.norm() < 1.0)) {
                    return Err(Error::InvalidMap(format!("Blaschke zero {a} is not inside the disc")));
                }
            }
            MapKind::PowerCusp { alpha, .. } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return Err(Error::InvalidMap(format!("cusp exponent must be in (0, 1], got {alpha}")));
                }
            }
            MapKind::AffineInto { s, .. } => {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(Error::InvalidMap(format!("contraction must be in (0, 1), got {s}")));
                }
            }
            MapKind::SingularInner { sigma } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidMap(format!("sigma must be positive, got {sigma}")));
                }
            }
            MapKind::Polynomial(_) => {}
        }
        Ok(())
    }

    fn check_image(&self) -> Result<()> {
        let rmax = 1.0 - 1e-4;
        let radii = (0..=16).map(|k| rmax * k as f64 / 16.0).chain([0.99, 0.999, rmax]);
        for r in radii {
            for j in 0..64 {
                let z = Complex64::from_polar(r, TAU * (j as f64 + 0.5) / 64.0);
                let w = self.eval(z)?;
                if !self.target.contains(w) {
                    return Err(Error::InvalidMap(format!("{}: f({z}) = {w} is outside the target", self.name)));
                }
            }
        }
        Ok(())
    }

    fn check_derivative(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let h = 1e-6;
        for _ in 0..16 {
            let z = Complex64::from_polar(0.9 * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
            let fd = (self.eval(z + h)? - self.eval(z)?) / h;
            let d = self.derivative(z)?;
            if (fd - d).norm() > 1e-4 * (1.0 + d.norm()) {
                return Err(Error::InvalidMap(format!(
                    "{}: derivative {d} disagrees with difference quotient {fd} at {z}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// True when the map extends continuously to the closed disc.
    pub fn continuous_on_closure(&self) -> bool {
        match &self.kind {
            MapKind::SingularInner { .. } => false,
            MapKind::AffineInto { inner, .. } => inner.continuous_on_closure(),
            _ => true,
        }
    }

    /// f(z) for |z| < 1, and on |z| = 1 where the map extends continuously.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let r = z.norm();
        if !(r <= 1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("{z} is outside the closed unit disc")));
        }
        match &self.kind {
            MapKind::Polynomial(p) => Ok(p.eval(z)),
            MapKind::Blaschke { zeros } => Ok(zeros.iter().map(|&a| (z - a) / (ONE - a.conj() * z)).product()),
            MapKind::PowerCusp { w0, c, alpha } => Ok(w0 + c * principal_pow(ONE - z, *alpha)),
            MapKind::AffineInto { inner, s, center, radius } => Ok(center + inner.eval(z)? * (s * radius)),
            MapKind::SingularInner { sigma } => {
                if z == ONE {
                    return Err(Error::Divergent(format!("{} has no value at z = 1", self.name)));
                }
                Ok((-(*sigma) * (ONE + z) / (ONE - z)).exp())
            }
        }
    }

    /// f′(z).
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        if !(z.norm() <= 1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("{z} is outside the closed unit disc")));
        }
        match &self.kind {
            MapKind::Polynomial(p) => Ok(p.derivative().eval(z)),
            MapKind::Blaschke { zeros } => Ok(blaschke_derivative(zeros, z)),
            MapKind::PowerCusp { c, alpha, .. } => {
                let base = ONE - z;
                if base == ZERO {
                    if *alpha < 1.0 {
                        return Err(Error::Divergent(format!("{}: derivative is infinite at z = 1", self.name)));
                    }
                    return Ok(-c);
                }
                Ok(-c * *alpha * principal_pow(base, alpha - 1.0))
            }
            MapKind::AffineInto { inner, s, radius, .. } => Ok(inner.derivative(z)? * (s * radius)),
            MapKind::SingularInner { sigma } => {
                if z == ONE {
                    return Err(Error::Divergent(format!("{}: derivative is infinite at z = 1", self.name)));
                }
                let f = self.eval(z)?;
                Ok(f * (-2.0 * sigma) / ((ONE - z) * (ONE - z)))
            }
        }
    }
}

fn principal_pow(w: Complex64, alpha: f64) -> Complex64 {
    if w == ZERO {
        return ZERO;
    }
    Complex64::from_polar(w.norm().powf(alpha), alpha * w.arg())
}

fn blaschke_derivative(zeros: &[Complex64], z: Complex64) -> Complex64 {
    let factors: Vec<Complex64> = zeros.iter().map(|&a| (z - a) / (ONE - a.conj() * z)).collect();
    let near_zero = factors.iter().any(|f| f.norm() < 1e-8);
    if !near_zero {
        // logarithmic derivative
        let b: Complex64 = factors.iter().product();
        let sum: Complex64 = zeros
            .iter()
            .map(|&a| (1.0 - a.norm_sqr()) / ((z - a) * (ONE - a.conj() * z)))
            .sum();
        return b * sum;
    }
    // product rule, safe at the zeros
    let mut total = ZERO;
    for (k, &a) in zeros.iter().enumerate() {
        let d = ONE - a.conj() * z;
        let mut term = (1.0 - a.norm_sqr()) / (d * d);
        for (j, f) in factors.iter().enumerate() {
            if j != k {
                term *= f;
            }
        }
        total += term;
    }
    total
}

/// f*(z) = ω(f(z))·|f′(z)|.
pub fn weighted_derivative(f: &AnalyticMap, omega: &MetricDensity, z: Complex64) -> Result<f64> {
    if !(z.norm() < 1.0) {
        return Err(Error::InvalidArgument(format!("{z} is not inside the unit disc")));
    }
    let w = f.eval(z)?;
    let dens = omega.eval(w)?;
    Ok(dens * f.derivative(z)?.norm())
}

/// The hyperbolic derivative |f′(z)|/(1 − |f(z)|²) of a self-map of the disc.
pub fn hyperbolic_derivative(f: &AnalyticMap, z: Complex64) -> Result<f64> {
    let w = f.eval(z)?;
    if !(w.norm() < 1.0) {
        return Err(Error::OutsideDomain(w));
    }
    Ok(f.derivative(z)?.norm() / (1.0 - w.norm_sqr()))
}

/// Both sides of d_ω(f(z), f(w)) ≤ ∫_[z,w] f* |dx|.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub geodesic: GeodesicResult,
}

impl UpperBoundCheck {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_tol)
    }
}

/// lhs from the geodesic solver at `resolution`, rhs by adaptive quadrature
/// of f* along the straight segment.
pub fn path_upper_bound_check(
    f: &AnalyticMap,
    omega: &MetricDensity,
    z: Complex64,
    w: Complex64,
    resolution: f64,
) -> Result<UpperBoundCheck> {
    let (fz, fw) = (f.eval(z)?, f.eval(w)?);
    let geodesic = weighted_distance(omega, fz, fw, resolution)?;
    let len = (w - z).norm();
    let rhs = if len == 0.0 {
        0.0
    } else {
        len * quad1d::adaptive(0.0, 1.0, 1e-10, |t| weighted_derivative(f, omega, z + (w - z) * t))?
    };
    Ok(UpperBoundCheck { lhs: geodesic.distance, rhs, geodesic })
}

/// Samples of a map on a circle |z| = r_b.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub values: Vec<Complex64>,
    pub radius: f64,
    /// True when the samples are values of the continuous extension on |z| = 1.
    pub exact: bool,
}

impl BoundaryTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.values.len() as f64
    }

    /// Every other sample, i.e. the trace at half the sample count.
    pub fn decimated(&self) -> BoundaryTrace {
        BoundaryTrace { values: self.values.iter().step_by(2).copied().collect(), ..self.clone() }
    }

    /// `t re im` per line.
    pub fn to_text(&self) -> String {
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| format!("{:.17e} {:.17e} {:.17e}\n", self.angle(j), v.re, v.im))
            .collect()
    }
}

/// f(r_b e^{i t_j}) at t_j = 2πj/n.
pub fn boundary_trace(f: &AnalyticMap, n: usize, r_b: f64) -> Result<BoundaryTrace> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("a trace needs at least 2 samples, got {n}")));
    }
    if !(r_b > 0.0 && r_b <= 1.0) {
        return Err(Error::InvalidArgument(format!("trace radius must be in (0, 1], got {r_b}")));
    }
    let exact = r_b == 1.0;
    if exact && !f.continuous_on_closure() {
        return Err(Error::InvalidMap(format!("{} has no continuous extension to the circle", f.name)));
    }
    let values = (0..n)
        .map(|j| f.eval(Complex64::from_polar(r_b, TAU * j as f64 / n as f64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryTrace { values, radius: r_b, exact })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn map_examples() {
        let id = AnalyticMap::identity();
        assert_eq!(id.eval(c(0.3, 0.1)).unwrap(), c(0.3, 0.1));
        assert_eq!(id.derivative(c(0.3, 0.1)).unwrap(), c(1.0, 0.0));
        let b = AnalyticMap::blaschke(vec![c(0.0, 0.0)]).unwrap();
        assert_eq!(b.eval(c(0.3, 0.2)).unwrap(), c(0.3, 0.2));
        assert!((b.derivative(c(0.0, 0.0)).unwrap() - 1.0).norm() < 1e-15);
        let cusp = AnalyticMap::from_catalog("cusp_a50", &DomainSpec::unit_disc(), None, None).unwrap();
        assert!((cusp.eval(c(0.0, 0.0)).unwrap() - 0.25).norm() < 1e-15);
        assert!((cusp.derivative(c(0.0, 0.0)).unwrap() + 0.125).norm() < 1e-15);
        assert!(matches!(cusp.derivative(c(1.0, 0.0)), Err(Error::Divergent(_))));
    }

    #[test]
    fn blaschke_derivative_at_a_zero() {
        let b = AnalyticMap::from_catalog("blaschke2", &DomainSpec::unit_disc(), None, None).unwrap();
        let z = c(0.5, 0.0);
        let h = 1e-7;
        let fd = (b.eval(z + h).unwrap() - b.eval(z - h).unwrap()) / (2.0 * h);
        assert!((b.derivative(z).unwrap() - fd).norm() < 1e-6);
    }

    #[test]
    fn weighted_derivative_examples() {
        let hyp = MetricDensity::hyperbolic();
        assert_eq!(weighted_derivative(&AnalyticMap::identity(), &hyp, c(0.0, 0.0)).unwrap(), 1.0);
        let sq = AnalyticMap::from_catalog("square", &DomainSpec::unit_disc(), None, None).unwrap();
        let got = weighted_derivative(&sq, &hyp, c(0.5, 0.0)).unwrap();
        assert!((got - 1.0 / 0.9375).abs() < 1e-15);
    }

    #[test]
    fn trace_examples() {
        let t = boundary_trace(&AnalyticMap::identity(), 4, 1.0).unwrap();
        let want = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (v, w) in t.values.iter().zip(want) {
            assert!((v - w).norm() < 1e-15);
        }
        assert!(t.exact);
        let cusp = AnalyticMap::from_catalog("cusp_a50", &DomainSpec::unit_disc(), None, None).unwrap();
        let t = boundary_trace(&cusp, 2, 1.0).unwrap();
        assert_eq!(t.values[0], c(0.0, 0.0));
        assert!((t.values[1] - 0.25 * 2f64.sqrt()).norm() < 1e-15);
        let k = AnalyticMap::from_catalog("constant", &DomainSpec::unit_disc(), None, None).unwrap();
        assert!(boundary_trace(&k, 16, 1.0).unwrap().values.iter().all(|v| *v == c(0.0, 0.0)));
        let s = AnalyticMap::from_catalog("singular", &DomainSpec::unit_disc(), None, None).unwrap();
        assert!(boundary_trace(&s, 16, 1.0).is_err());
        assert!(!boundary_trace(&s, 16, DEFAULT_TRACE_RADIUS).unwrap().exact);
    }

    #[test]
    fn construction_rejects_bad_maps() {
        // 2z leaves the disc
        assert!(AnalyticMap::polynomial(&[0.0, 2.0]).is_err());
        assert!(AnalyticMap::blaschke(vec![c(1.0, 0.0)]).is_err());
        assert!(AnalyticMap::power_cusp(ZERO, c(0.25, 0.0), 1.5, DomainSpec::unit_disc()).is_err());
    }

    #[test]
    fn affine_into_ellipse() {
        let e = DomainSpec::ellipse(1.5, 1.0).unwrap();
        let f = AnalyticMap::from_catalog("cusp_a50", &e, None, None).unwrap();
        assert_eq!(f.target, e);
        let t = boundary_trace(&f, 64, 1.0).unwrap();
        assert!(t.values.iter().all(|&v| e.contains(v)));
    }

    #[test]
    fn upper_bound_examples() {
        let hyp = MetricDensity::hyperbolic();
        let r = path_upper_bound_check(&AnalyticMap::identity(), &hyp, c(0.0, 0.0), c(0.5, 0.0), 0.01).unwrap();
        assert!((r.rhs - 0.5f64.atanh()).abs() < 1e-9);
        assert!((r.lhs / r.rhs - 1.0).abs() < 0.01);
        let sq = AnalyticMap::from_catalog("square", &DomainSpec::unit_disc(), None, None).unwrap();
        let r = path_upper_bound_check(&sq, &hyp, c(-0.4, 0.0), c(0.4, 0.0), 0.01).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.rhs > 0.0);
    }
}
