//! One-dimensional Gauss–Legendre rules and an adaptive integrator.

use crate::error::Result;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n` points, computed by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    fn try_integrate<F: FnMut(f64) -> Result<f64>>(&self, a: f64, b: f64, f: &mut F) -> Result<f64> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x)?;
        }
        Ok(acc * half)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Gauss–Legendre integration of a fallible integrand on [a, b].
///
/// Each panel is compared against its two halves; panels are split until the
/// difference falls below `rel_tol` relative to the running total, or the
/// depth limit is reached.
pub fn adaptive<F>(a: f64, b: f64, rel_tol: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let rule = GaussLegendre::new(7);
    let whole = rule.try_integrate(a, b, &mut f)?;
    // roundoff in f must not force bisection to the full depth
    let floor = 64.0 * f64::EPSILON * whole.abs();
    adaptive_panel(&rule, a, b, whole, rel_tol, floor, 0, &mut f)
}

fn adaptive_panel<F>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    rel_tol: f64,
    floor: f64,
    depth: usize,
    f: &mut F,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let left = rule.try_integrate(a, m, f)?;
    let right = rule.try_integrate(m, b, f)?;
    let split = left + right;
    let err = (split - whole).abs();
    if err <= rel_tol * split.abs().max(1e-300) || err <= floor || depth >= 30 {
        return Ok(split);
    }
    Ok(adaptive_panel(rule, a, m, left, rel_tol, floor, depth + 1, f)?
        + adaptive_panel(rule, m, b, right, rel_tol, floor, depth + 1, f)?)
}
