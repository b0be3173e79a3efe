//! Integral means, Lipschitz moduli of boundary traces and power-law fits.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::GeodesicSolver;
use crate::maps::BoundaryTrace;
use crate::metric::{hyperbolic_distance_closed, segment_length, MetricDensity};

/// Exponent of a mean: finite p ≥ 1 or the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p >= 1.0 && p.is_finite() {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidArgument(format!("exponent p must be in [1, ∞], got {p}")))
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    /// (Σ x^p / n)^{1/p}, or the maximum.
    fn mean(&self, xs: impl Iterator<Item = f64>) -> f64 {
        match self {
            Exponent::Infinity => xs.fold(0.0, f64::max),
            Exponent::Finite(p) => {
                let (mut acc, mut n) = (0.0, 0usize);
                for x in xs {
                    acc += x.powf(*p);
                    n += 1;
                }
                if n == 0 {
                    0.0
                } else {
                    (acc / n as f64).powf(1.0 / p)
                }
            }
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// m_p(r, g) = (Σ_j g(r e^{i t_j})^p / n)^{1/p} over n uniform angles.
pub fn integral_means<G>(g: G, r: f64, p: Exponent, n: usize) -> Result<f64>
where
    G: Fn(Complex64) -> Result<f64>,
{
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("radius must be in (0, 1), got {r}")));
    }
    if n < 64 {
        return Err(Error::InvalidArgument(format!("need at least 64 samples, got {n}")));
    }
    let mut vals = Vec::with_capacity(n);
    for j in 0..n {
        let z = Complex64::from_polar(r, TAU * j as f64 / n as f64);
        let v = g(z)?;
        if !v.is_finite() {
            return Err(Error::Divergent(format!("integrand is {v} at {z}")));
        }
        vals.push(v);
    }
    Ok(p.mean(vals.into_iter()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeansCurve {
    pub p: Exponent,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl MeansCurve {
    pub fn compute<G>(g: G, radii: &[f64], p: Exponent, n: usize) -> Result<Self>
    where
        G: Fn(Complex64) -> Result<f64>,
    {
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("radii must be strictly increasing".into()));
        }
        let values = radii.iter().map(|&r| integral_means(&g, r, p, n)).collect::<Result<_>>()?;
        Ok(MeansCurve { p, radii: radii.to_vec(), values })
    }

    /// (1 − r, m) pairs.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.radii.iter().zip(&self.values).map(|(r, v)| (1.0 - r, *v)).collect()
    }

    pub fn fit(&self) -> Result<ExponentFit> {
        fit_exponent(&self.points())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub p: Exponent,
    pub steps: Vec<f64>,
    pub values: Vec<f64>,
}

impl ModulusCurve {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.steps.iter().copied().zip(self.values.iter().copied()).collect()
    }

    pub fn fit(&self) -> Result<ExponentFit> {
        fit_exponent(&self.points())
    }
}

/// Distance used to compare trace values.
#[derive(Debug, Clone)]
pub enum DistanceEvaluator {
    Euclidean,
    /// Closed-form hyperbolic distance of the disc.
    HyperbolicClosed,
    /// Weighted length of the straight segment (an upper bound for d_ω,
    /// sharp for nearby points).
    Segment(MetricDensity),
    /// Geodesic solver distance.
    Geodesic(Arc<GeodesicSolver>),
}

impl DistanceEvaluator {
    pub fn name(&self) -> &'static str {
        match self {
            DistanceEvaluator::Euclidean => "euclidean",
            DistanceEvaluator::HyperbolicClosed => "hyperbolic_closed",
            DistanceEvaluator::Segment(_) => "segment",
            DistanceEvaluator::Geodesic(_) => "geodesic",
        }
    }

    /// Distance, or +∞ when an endpoint is not an admissible interior point.
    pub fn distance(&self, a: Complex64, b: Complex64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        match self {
            DistanceEvaluator::Euclidean => Ok((a - b).norm()),
            DistanceEvaluator::HyperbolicClosed => Ok(hyperbolic_distance_closed(a, b)),
            DistanceEvaluator::Segment(omega) => {
                let d = omega.domain();
                if !d.contains(a) || !d.contains(b) {
                    return Ok(f64::INFINITY);
                }
                segment_length(omega, a, b)
            }
            DistanceEvaluator::Geodesic(solver) => match solver.distance(a, b) {
                Ok(r) => Ok(r.distance),
                Err(Error::Divergent(_)) | Err(Error::OutsideDomain(_)) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            },
        }
    }
}

/// Per-shift statistics of a trace: for each shift k (in samples) the
/// maximum and the p-means of d(v_{j+k}, v_j) over j.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftTable {
    pub n: usize,
    pub max: Vec<f64>,
    /// `means[i][k]` for `exponents[i]`.
    pub means: Vec<Vec<f64>>,
    pub exponents: Vec<f64>,
}

/// Number of whole sample shifts within an angular step h.
pub fn shift_count(n: usize, h: f64) -> usize {
    ((h * n as f64 / TAU) * (1.0 + 1e-12)).floor() as usize
}

impl ShiftTable {
    /// Evaluate all shifts 1..=kmax. A divergent pair is an error.
    pub fn compute(trace: &BoundaryTrace, d: &DistanceEvaluator, exponents: &[f64], kmax: usize) -> Result<Self> {
        let n = trace.len();
        let kmax = kmax.min(n / 2);
        let v = &trace.values;
        let mut max = vec![0.0; kmax + 1];
        let mut sums = vec![vec![0.0; kmax + 1]; exponents.len()];
        for k in 1..=kmax {
            for j in 0..n {
                let dist = d.distance(v[(j + k) % n], v[j])?;
                if !dist.is_finite() {
                    return Err(Error::Divergent(format!(
                        "distance between trace samples {} and {} is infinite (trace leaves the domain)",
                        j,
                        (j + k) % n
                    )));
                }
                if dist > max[k] {
                    max[k] = dist;
                }
                for (s, &p) in sums.iter_mut().zip(exponents) {
                    s[k] += dist.powf(p);
                }
            }
        }
        let means = sums
            .into_iter()
            .zip(exponents)
            .map(|(s, &p)| s.into_iter().map(|x| (x / n as f64).powf(1.0 / p)).collect())
            .collect();
        Ok(ShiftTable { n, max, means, exponents: exponents.to_vec() })
    }

    /// sup over pairs with angular gap ≤ h.
    pub fn sup_modulus(&self, h: f64) -> f64 {
        let k = shift_count(self.n, h).min(self.max.len() - 1);
        self.max[1..=k].iter().copied().fold(0.0, f64::max)
    }

    /// sup over shifts s ≤ h of the p-mean of d(v(t + s), v(t)).
    pub fn mean_modulus(&self, p: f64, h: f64) -> Result<f64> {
        let i = self
            .exponents
            .iter()
            .position(|&q| q == p)
            .ok_or_else(|| Error::InvalidArgument(format!("exponent {p} was not tabulated")))?;
        let k = shift_count(self.n, h).min(self.max.len() - 1);
        Ok(self.means[i][1..=k].iter().copied().fold(0.0, f64::max))
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= std::f64::consts::PI) {
        return Err(Error::InvalidArgument(format!("step must be in (0, π], got {h}")));
    }
    Ok(())
}

/// max over sample pairs at circular angular gap ≤ h of d(trace(t), trace(s)).
pub fn sup_lipschitz_modulus(trace: &BoundaryTrace, d: &DistanceEvaluator, h: f64) -> Result<f64> {
    check_step(h)?;
    let k = shift_count(trace.len(), h);
    Ok(ShiftTable::compute(trace, d, &[], k)?.sup_modulus(h))
}

/// max over shifts 0 < s ≤ h (whole samples) of (Σ_t d(trace(t+s), trace(t))^p / n)^{1/p}.
pub fn mean_lipschitz_modulus(trace: &BoundaryTrace, d: &DistanceEvaluator, p: f64, h: f64) -> Result<f64> {
    check_step(h)?;
    Exponent::new(p)?;
    let k = shift_count(trace.len(), h);
    ShiftTable::compute(trace, d, &[p], k)?.mean_modulus(p, h)
}

/// Sup and p-mean modulus curves over a list of steps, sharing one table.
pub fn modulus_curves(
    trace: &BoundaryTrace,
    d: &DistanceEvaluator,
    exponents: &[f64],
    steps: &[f64],
) -> Result<(ModulusCurve, Vec<ModulusCurve>)> {
    for &h in steps {
        check_step(h)?;
    }
    for &p in exponents {
        Exponent::new(p)?;
    }
    let kmax = steps.iter().map(|&h| shift_count(trace.len(), h)).max().unwrap_or(0);
    let table = ShiftTable::compute(trace, d, exponents, kmax)?;
    let sup = ModulusCurve {
        p: Exponent::Infinity,
        steps: steps.to_vec(),
        values: steps.iter().map(|&h| table.sup_modulus(h)).collect(),
    };
    let means = exponents
        .iter()
        .map(|&p| {
            Ok(ModulusCurve {
                p: Exponent::Finite(p),
                steps: steps.to_vec(),
                values: steps.iter().map(|&h| table.mean_modulus(p, h)).collect::<Result<_>>()?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((sup, means))
}

/// Least-squares line through (log x, log y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_residual: f64,
    pub samples: usize,
    /// Points dropped because their value was zero.
    pub excluded: usize,
}

/// Minimum abscissa span of a fit, in decades.
pub const MIN_DECADES: f64 = 1.5;

pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let usable: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, y)| y != 0.0).collect();
    let excluded = points.len() - usable.len();
    if let Some(&(x, y)) = usable.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidArgument(format!("cannot fit a power law through ({x}, {y})")));
    }
    if usable.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable points ({} zero values excluded); at least 4 are needed",
            usable.len(),
            excluded
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let decades = (hi - lo) / std::f64::consts::LN_10;
    if decades < MIN_DECADES - 1e-9 {
        return Err(Error::InsufficientData(format!(
            "abscissa spans {decades:.3} decades; at least {MIN_DECADES} are needed"
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n * (1.0 + my * my) {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        max_residual: residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
        samples: usable.len(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::maps::{boundary_trace, weighted_derivative, AnalyticMap};

    fn circle_trace(eps: f64, n: usize) -> BoundaryTrace {
        BoundaryTrace {
            values: (0..n).map(|j| Complex64::from_polar(eps, TAU * j as f64 / n as f64)).collect(),
            radius: 1.0,
            exact: true,
        }
    }

    #[test]
    fn means_examples() {
        assert!((integral_means(|_| Ok(5.0), 0.5, Exponent::Finite(3.0), 128).unwrap() - 5.0).abs() < 1e-14);
        let m = integral_means(|z| Ok(z.norm()), 0.7, Exponent::Finite(2.0), 256).unwrap();
        assert!((m - 0.7).abs() < 1e-14);
        assert!(matches!(
            integral_means(|_| Ok(f64::INFINITY), 0.5, Exponent::Infinity, 64),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn cusp_means_slope() {
        let f = AnalyticMap::from_catalog("cusp_a50", &DomainSpec::unit_disc(), None, None).unwrap();
        let hyp = MetricDensity::hyperbolic();
        let radii = [0.9, 0.99, 0.999];
        let m: Vec<f64> = radii
            .iter()
            .map(|&r| integral_means(|z| weighted_derivative(&f, &hyp, z), r, Exponent::Finite(4.0), 1 << 16).unwrap())
            .collect();
        // ∫|1 − r e^{it}|^{-2} dt = 2π/(1 − r²), so m_4 grows like (1 − r)^{-1/4}
        let slope = (m[2].ln() - m[0].ln()) / ((0.001f64).ln() - (0.1f64).ln());
        assert!((slope + 0.25).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn modulus_examples() {
        let n = 1024;
        let constant = BoundaryTrace { values: vec![Complex64::new(0.1, 0.0); n], radius: 1.0, exact: true };
        assert_eq!(sup_lipschitz_modulus(&constant, &DistanceEvaluator::HyperbolicClosed, 0.3).unwrap(), 0.0);
        assert_eq!(mean_lipschitz_modulus(&constant, &DistanceEvaluator::Euclidean, 2.0, 0.3).unwrap(), 0.0);
        let id = boundary_trace(&AnalyticMap::identity(), n, 1.0).unwrap();
        let h = TAU * 16.0 / n as f64;
        let s = sup_lipschitz_modulus(&id, &DistanceEvaluator::Euclidean, h).unwrap();
        assert!((s - 2.0 * (h / 2.0).sin()).abs() < 1e-12);
        let eps = 0.3;
        let tr = circle_trace(eps, n);
        for p in [1.0, 2.0, 3.5] {
            let m = mean_lipschitz_modulus(&tr, &DistanceEvaluator::Euclidean, p, h).unwrap();
            assert!((m - 2.0 * eps * (h / 2.0).sin()).abs() < 1e-12);
        }
        // weighted chord along a small circle
        let small = TAU * 2.0 / n as f64;
        let s = sup_lipschitz_modulus(&tr, &DistanceEvaluator::HyperbolicClosed, small).unwrap();
        let want = eps / (1.0 - eps * eps) * small;
        assert!((s / want - 1.0).abs() < 1e-3);
    }

    #[test]
    fn identity_trace_diverges_under_hyperbolic_distance() {
        let id = boundary_trace(&AnalyticMap::identity(), 256, 1.0).unwrap();
        assert!(matches!(
            sup_lipschitz_modulus(&id, &DistanceEvaluator::HyperbolicClosed, 0.1),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn fit_examples() {
        let pts: Vec<(f64, f64)> = (2..10).map(|k| 0.5f64.powi(k)).map(|x| (x, x.powf(-0.5))).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert_eq!(f.r_squared, 1.0);
        let pts: Vec<(f64, f64)> = (3..9).map(|k| 0.5f64.powi(k)).map(|x| (x, 3.0 * x)).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        let few = [(0.1, 1.0), (0.01, 2.0), (0.001, 0.0), (0.0001, 0.0), (0.00001, 3.0)];
        assert!(matches!(fit_exponent(&few), Err(Error::InsufficientData(_))));
        let narrow: Vec<(f64, f64)> = (3..8).map(|k| 0.5f64.powi(k)).map(|x| (x, x)).collect();
        assert!(matches!(fit_exponent(&narrow), Err(Error::InsufficientData(_))));
    }
}
