use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{CriterionResult, CurveData, VerificationReport};
use super::{is_smooth_jordan, trace_evaluator, ExperimentConfig};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::geodesic::{GeodesicOptions, GeodesicSolver};
use crate::growth::{modulus_curves, Exponent, MeansCurve, ModulusCurve};
use crate::maps::{boundary_trace, hyperbolic_derivative, weighted_derivative, AnalyticMap, DEFAULT_TRACE_RADIUS};
use crate::metric::MetricDensity;

/// Slope above which a means curve counts as bounded.
const BOUNDED_SLOPE: f64 = -0.05;
/// Relative change of the modulus allowed when the trace sampling is halved.
const SAMPLING_TOL: f64 = 0.005;
/// Allowed drift between the two innermost rings.
const RING_DRIFT: f64 = 0.25;
/// Trace values closer than this to the boundary count as boundary points.
const TOUCH_TOL: f64 = 1e-9;

/// Dispatch on `config.experiment`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<VerificationReport> {
    config.validate()?;
    match config.experiment.as_str() {
        "hl1" => run_theorem1_check(config),
        "hl2" => run_theorem23_check(config),
        "yamashita" => run_yamashita_check(config),
        "qh-compare" => run_qh_comparability(config),
        "nt-bounds" => run_nt_bound_fit(config),
        other => Err(Error::InvalidArgument(format!("unknown experiment {other:?}"))),
    }
}

fn config_exponent(cfg: &ExperimentConfig) -> Exponent {
    match cfg.p {
        Some(p) if p.is_finite() => Exponent::Finite(p),
        _ => Exponent::Infinity,
    }
}

/// Integral means of f* over the configured radii.
pub fn compute_means(cfg: &ExperimentConfig) -> Result<MeansCurve> {
    let domain = cfg.build_domain()?;
    let omega = cfg.build_density(&domain)?;
    let f = cfg.build_map(&domain)?;
    MeansCurve::compute(|z| weighted_derivative(&f, &omega, z), &cfg.radii(), config_exponent(cfg), cfg.samples)
}

/// Lipschitz modulus (sup, or p-mean when `p` is set) of the boundary trace.
pub fn compute_modulus(cfg: &ExperimentConfig) -> Result<ModulusCurve> {
    let domain = cfg.build_domain()?;
    let omega = cfg.build_density(&domain)?;
    let f = cfg.build_map(&domain)?;
    let radius = if f.continuous_on_closure() { 1.0 } else { DEFAULT_TRACE_RADIUS };
    let trace = boundary_trace(&f, cfg.trace_samples(), radius)?;
    let evaluator = trace_evaluator(&omega);
    match config_exponent(cfg) {
        Exponent::Infinity => Ok(modulus_curves(&trace, &evaluator, &[], &cfg.steps())?.0),
        Exponent::Finite(p) => Ok(modulus_curves(&trace, &evaluator, &[p], &cfg.steps())?.1.remove(0)),
    }
}

/// Outcome of the means/modulus pipeline.
struct Measured {
    alpha_means: Option<f64>,
    alpha_modulus: Option<f64>,
    means_slope: Option<f64>,
    modulus_slope: Option<f64>,
    means_bounded: bool,
    zero_means: bool,
    zero_modulus: bool,
    divergent: bool,
}

fn all_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

fn measure<G>(
    report: &mut VerificationReport,
    cfg: &ExperimentConfig,
    f: &AnalyticMap,
    omega: &MetricDensity,
    g: G,
    p: Exponent,
) -> Result<Measured>
where
    G: Fn(Complex64) -> Result<f64>,
{
    let mut m = Measured {
        alpha_means: None,
        alpha_modulus: None,
        means_slope: None,
        modulus_slope: None,
        means_bounded: false,
        zero_means: false,
        zero_modulus: false,
        divergent: false,
    };

    match MeansCurve::compute(g, &cfg.radii(), p, cfg.samples) {
        Ok(curve) => {
            report.curves.push(CurveData::new("means", "1-r", "m_p", curve.points()));
            m.zero_means = all_zero(&curve.values);
            if !m.zero_means {
                match curve.fit() {
                    Ok(fit) => {
                        m.means_slope = Some(fit.slope);
                        m.alpha_means = Some(fit.slope + 1.0);
                        let first = curve.values[0];
                        let top = curve.values.iter().copied().fold(0.0, f64::max);
                        m.means_bounded = fit.slope >= BOUNDED_SLOPE && top <= 2.0 * first;
                        report.value("means_slope", fit.slope);
                        report.value("alpha_means", fit.slope + 1.0);
                        report.value("means_growth", top / first);
                        report.fits.insert("means".into(), fit);
                    }
                    Err(Error::InsufficientData(msg)) => {
                        report.flag("means_fit_insufficient");
                        report.notes.push(msg);
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Err(Error::Divergent(msg)) => {
            report.flag("divergent_means");
            report.notes.push(msg);
        }
        Err(e) => return Err(e),
    }

    let radius = if f.continuous_on_closure() { 1.0 } else { DEFAULT_TRACE_RADIUS };
    let trace = boundary_trace(f, cfg.trace_samples(), radius)?;
    if !trace.exact {
        report.flag("approximate_trace");
    }
    let domain = omega.domain();
    let touches = trace.values.iter().any(|&v| !domain.contains(v) || domain.boundary_gap(v) < TOUCH_TOL);
    if touches && omega.blows_up() {
        m.divergent = true;
        report.flag("divergent_modulus");
        report.notes.push("boundary trace reaches the boundary, where the distance diverges".into());
        return Ok(m);
    }

    let evaluator = trace_evaluator(omega);
    report.notes.push(format!("trace distances: {}", evaluator.name()));
    let steps = cfg.steps();
    let exps: Vec<f64> = match p {
        Exponent::Finite(q) => vec![q],
        Exponent::Infinity => vec![],
    };
    let pick = |res: (ModulusCurve, Vec<ModulusCurve>)| match p {
        Exponent::Infinity => res.0,
        Exponent::Finite(_) => res.1.into_iter().next().expect("one mean curve"),
    };
    let curve = match modulus_curves(&trace, &evaluator, &exps, &steps) {
        Ok(res) => pick(res),
        Err(Error::Divergent(msg)) => {
            m.divergent = true;
            report.flag("divergent_modulus");
            report.notes.push(msg);
            return Ok(m);
        }
        Err(e) => return Err(e),
    };
    let half = pick(modulus_curves(&trace.decimated(), &evaluator, &exps, &steps)?);
    let change = curve
        .values
        .iter()
        .zip(&half.values)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| (a - b).abs() / a)
        .fold(0.0, f64::max);
    report.value("modulus_sampling_change", change);
    if change > SAMPLING_TOL {
        report.flag("modulus_sampling_unconverged");
    }
    report.curves.push(CurveData::new("modulus", "h", "M", curve.points()));
    m.zero_modulus = all_zero(&curve.values);
    if !m.zero_modulus {
        match curve.fit() {
            Ok(fit) => {
                m.modulus_slope = Some(fit.slope);
                m.alpha_modulus = Some(fit.slope);
                report.value("modulus_slope", fit.slope);
                report.value("alpha_modulus", fit.slope);
                report.fits.insert("modulus".into(), fit);
            }
            Err(Error::InsufficientData(msg)) => {
                report.flag("modulus_fit_insufficient");
                report.notes.push(msg);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(m)
}

/// Short decimal form for rule strings.
fn num(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn within(v: Option<f64>, target: f64, tol: f64) -> bool {
    v.is_some_and(|v| (v - target).abs() <= tol)
}

/// Criteria shared by the growth experiments. Returns false when the
/// pipeline produced no usable exponents (zero curves or divergence).
fn exponent_criteria(report: &mut VerificationReport, m: &Measured, alpha: Option<f64>, tol: f64) -> bool {
    if m.zero_means && m.zero_modulus {
        report.flag("zero_curves");
        report.criterion(CriterionResult::new("zero_curves", true, "both curves vanish identically", &[]));
        return false;
    }
    report.criterion(CriterionResult::new(
        "modulus_finite",
        !m.divergent,
        "trace distances are finite",
        &[],
    ));
    if m.divergent {
        return false;
    }
    let (am, aq) = (m.alpha_means, m.alpha_modulus);
    report.criterion(CriterionResult::new(
        "agreement",
        am.zip(aq).is_some_and(|(a, b)| (a - b).abs() <= tol),
        format!("|alpha_means - alpha_modulus| <= {tol}"),
        &[("alpha_means", opt(am)), ("alpha_modulus", opt(aq))],
    ));
    if let Some(alpha) = alpha {
        report.value("alpha", alpha);
        report.criterion(CriterionResult::new(
            "means_exponent",
            within(am, alpha, tol),
            format!("|alpha_means - {alpha}| <= {tol}"),
            &[("alpha_means", opt(am))],
        ));
        report.criterion(CriterionResult::new(
            "modulus_exponent",
            within(aq, alpha, tol),
            format!("|alpha_modulus - {alpha}| <= {tol}"),
            &[("alpha_modulus", opt(aq))],
        ));
        if alpha == 1.0 {
            report.criterion(CriterionResult::new(
                "means_bounded",
                m.means_bounded,
                format!("means slope >= {BOUNDED_SLOPE} and max <= 2 * first value"),
                &[("means_slope", opt(m.means_slope))],
            ));
        }
    }
    true
}

fn require_alpha(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.alpha
        .ok_or_else(|| Error::InvalidArgument(format!("experiment {} needs alpha", cfg.experiment)))
}

/// Sup-norm growth of f* against the sup modulus of the boundary trace.
pub fn run_theorem1_check(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let alpha = require_alpha(cfg)?;
    let domain = cfg.build_domain()?;
    let omega = cfg.build_density(&domain)?;
    if !omega.blows_up() {
        return Err(Error::InvalidArgument(format!(
            "hl1 needs a density that blows up at the boundary, got {}",
            omega.name()
        )));
    }
    let f = cfg.build_map(&domain)?;
    let mut report = VerificationReport::new(cfg);
    let m = measure(&mut report, cfg, &f, &omega, |z| weighted_derivative(&f, &omega, z), Exponent::Infinity)?;
    exponent_criteria(&mut report, &m, Some(alpha), cfg.tolerance);
    Ok(report.finish())
}

/// p-means of f* against the p-mean modulus of the boundary trace.
pub fn run_theorem23_check(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let alpha = require_alpha(cfg)?;
    let p = match cfg.p {
        Some(p) if p.is_finite() => p,
        _ => return Err(Error::InvalidArgument("hl2 needs a finite p".into())),
    };
    let tol = cfg.tolerance;
    let domain = cfg.build_domain()?;
    let omega = cfg.build_density(&domain)?;
    let f = cfg.build_map(&domain)?;
    let mut report = VerificationReport::new(cfg);
    let m = measure(&mut report, cfg, &f, &omega, |z| weighted_derivative(&f, &omega, z), Exponent::Finite(p))?;
    if exponent_criteria(&mut report, &m, Some(alpha), tol) {
        let (sm, sq) = (m.means_slope, m.modulus_slope);
        let premise = sm.is_some_and(|s| s <= alpha - 1.0 + tol);
        let forward = !premise || sq.is_some_and(|s| s >= alpha - tol);
        report.criterion(CriterionResult::new(
            "forward",
            forward,
            format!("means slope <= {} implies modulus slope >= {}", num(alpha - 1.0 + tol), num(alpha - tol)),
            &[("means_slope", opt(sm)), ("modulus_slope", opt(sq))],
        ));
        let converse_setting = domain.is_unit_disc() && matches!(omega.name(), "hyperbolic" | "bergman");
        if converse_setting {
            let premise = within(sq, alpha, tol);
            let converse = !premise || within(sm, alpha - 1.0, tol);
            report.criterion(CriterionResult::new(
                "converse",
                converse,
                format!("|modulus slope - {alpha}| <= {tol} implies |means slope - ({})| <= {tol}", num(alpha - 1.0)),
                &[("means_slope", opt(sm)), ("modulus_slope", opt(sq))],
            ));
        } else {
            report.flag("converse_not_applicable");
            report.notes.push("converse direction is checked only on the unit disc with hyperbolic or Bergman density".into());
        }
    }
    Ok(report.finish())
}

/// Growth experiment with the hyperbolic derivative |f′|/(1 − |f|²).
pub fn run_yamashita_check(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let domain = cfg.build_domain()?;
    if !domain.is_unit_disc() || cfg.density_name() != "hyperbolic" {
        return Err(Error::InvalidArgument("yamashita needs the unit disc with the hyperbolic density".into()));
    }
    let omega = MetricDensity::hyperbolic();
    let f = cfg.build_map(&domain)?;
    let mut report = VerificationReport::new(cfg);

    let mut worst = 0.0f64;
    for r in std::iter::once(0.0).chain(cfg.radii()) {
        for j in 0..16 {
            let z = Complex64::from_polar(r, TAU * j as f64 / 16.0);
            let hd = hyperbolic_derivative(&f, z)?;
            let wd = weighted_derivative(&f, &omega, z)?;
            if hd != wd {
                worst = worst.max((hd - wd).abs() / hd.abs().max(wd.abs()));
            }
        }
    }
    report.criterion(CriterionResult::new(
        "formula",
        worst <= 1e-15,
        "weighted derivative equals |f'|/(1-|f|^2) to 1e-15",
        &[("max_relative_difference", worst)],
    ));
    report.value("hyperbolic_derivative_at_0", hyperbolic_derivative(&f, Complex64::new(0.0, 0.0))?);

    let m = measure(&mut report, cfg, &f, &omega, |z| hyperbolic_derivative(&f, z), config_exponent(cfg))?;
    if let Some(am) = m.alpha_means {
        // an exponent within tolerance of 0 is indistinguishable from the edge
        let in_range = am > cfg.tolerance && am <= 1.0 + cfg.tolerance;
        if !in_range {
            report.flag("alpha_out_of_range");
        }
        report.criterion(CriterionResult::new(
            "alpha_in_range",
            in_range,
            format!("{} < alpha_means <= {}", cfg.tolerance, num(1.0 + cfg.tolerance)),
            &[("alpha_means", am)],
        ));
    }
    exponent_criteria(&mut report, &m, cfg.alpha, cfg.tolerance);
    Ok(report.finish())
}

fn sample_point(rng: &mut ChaCha8Rng, domain: &DomainSpec, min_gap: f64) -> Result<Complex64> {
    let bb = domain.bounding_box();
    for _ in 0..1_000_000 {
        let z = Complex64::new(rng.gen_range(bb.xmin..bb.xmax), rng.gen_range(bb.ymin..bb.ymax));
        if domain.contains(z) && domain.boundary_gap(z) >= min_gap {
            return Ok(z);
        }
    }
    Err(Error::InvalidArgument(format!("no points at boundary distance >= {min_gap}")))
}

/// Point on the ray from `center` in direction `dir` at boundary distance `d`.
fn point_at_gap(domain: &DomainSpec, center: Complex64, dir: Complex64, d: f64) -> Result<Option<Complex64>> {
    if domain.boundary_gap(center) < d {
        return Ok(None);
    }
    let exit = domain.ray_exit(center, dir)?;
    let (mut lo, mut hi) = (0.0, (exit - center).norm());
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if domain.boundary_gap(center + dir * mid) > d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(center + dir * (0.5 * (lo + hi))))
}

/// Density against the reciprocal boundary distance along rays, and
/// distances under both densities on random pairs.
pub fn run_qh_comparability(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let domain = cfg.build_domain()?;
    if !is_smooth_jordan(&domain) {
        return Err(Error::InvalidArgument("qh-compare needs a smooth domain (disc, ellipse or smoothed polygon)".into()));
    }
    let omega = cfg.build_density(&domain)?;
    let qh = MetricDensity::quasihyperbolic(domain.clone());
    let mut report = VerificationReport::new(cfg);
    let c = cfg.bound;

    let center = domain.interior_center();
    let nr = cfg.rings.len();
    // ratios[ring][ray]
    let mut ratios: Vec<Vec<Option<f64>>> = vec![vec![None; cfg.rays]; nr];
    let mut untrusted = 0usize;
    let mut last_trusted = f64::INFINITY;
    for j in 0..cfg.rays {
        let dir = Complex64::from_polar(1.0, TAU * j as f64 / cfg.rays as f64);
        for (i, &d) in cfg.rings.iter().enumerate() {
            let Some(z) = point_at_gap(&domain, center, dir, d)? else { continue };
            match omega.eval(z) {
                Ok(v) => ratios[i][j] = Some(v * domain.boundary_gap(z)),
                Err(Error::KernelInstability { .. }) => {
                    untrusted += nr - i;
                    report.flag("kernel_instability");
                    break;
                }
                Err(e) => return Err(e),
            }
            if i + 1 == nr || ratios[i][j].is_some() {
                last_trusted = last_trusted.min(d);
            }
        }
    }
    if untrusted > 0 {
        report.value("last_trusted_ring", last_trusted);
    }
    let ring_stat = |i: usize, pick: fn(f64, f64) -> f64, init: f64| {
        ratios[i].iter().flatten().copied().fold(init, pick)
    };
    let mins: Vec<f64> = (0..nr).map(|i| ring_stat(i, f64::min, f64::INFINITY)).collect();
    let maxs: Vec<f64> = (0..nr).map(|i| ring_stat(i, f64::max, 0.0)).collect();
    report.curves.push(CurveData::new("ratio_min", "d", "rho*d", cfg.rings.iter().copied().zip(mins.iter().copied()).collect()));
    report.curves.push(CurveData::new("ratio_max", "d", "rho*d", cfg.rings.iter().copied().zip(maxs.iter().copied()).collect()));
    let lo = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = maxs.iter().copied().fold(0.0, f64::max);
    report.criterion(CriterionResult::new(
        "density_bounds",
        untrusted == 0 && lo >= 1.0 / c && hi <= c,
        format!("rho*d in [1/{c}, {c}] at every ring point"),
        &[("min_ratio", lo), ("max_ratio", hi), ("untrusted_points", untrusted as f64)],
    ));
    let mut drift = 0.0f64;
    for j in 0..cfg.rays {
        match (ratios[nr - 2][j], ratios[nr - 1][j]) {
            (Some(a), Some(b)) => drift = drift.max(a.max(b) / a.min(b) - 1.0),
            _ => drift = f64::INFINITY,
        }
    }
    report.criterion(CriterionResult::new(
        "no_drift",
        drift <= RING_DRIFT,
        format!("innermost two rings agree within {RING_DRIFT} on every ray"),
        &[("max_drift", drift)],
    ));

    if cfg.distance_pairs > 0 {
        let opts = GeodesicOptions::default();
        let s_omega = GeodesicSolver::new(&omega, cfg.resolution, opts.clone())?;
        let s_qh = GeodesicSolver::new(&qh, cfg.resolution, opts)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut pts = Vec::new();
        for k in 0..cfg.distance_pairs {
            let z = sample_point(&mut rng, &domain, cfg.min_gap)?;
            let w = sample_point(&mut rng, &domain, cfg.min_gap)?;
            let a = s_omega.distance(z, w)?.distance;
            let b = s_qh.distance(z, w)?.distance;
            if b > 0.0 {
                pts.push((k as f64, a / b));
            }
        }
        let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p.1).fold(0.0, f64::max);
        let cp = cfg.distance_bound;
        report.criterion(CriterionResult::new(
            "distance_bounds",
            lo >= 1.0 / cp && hi <= cp,
            format!("distance ratio in [1/{cp}, {cp}] on every pair"),
            &[("min_ratio", lo), ("max_ratio", hi), ("pairs", pts.len() as f64)],
        ));
        report.curves.push(CurveData::new("distance_ratio", "pair", "ratio", pts));
    }
    Ok(report.finish())
}

/// Smallest c ≥ 1 with √2·log(1 + |z−w|/(c√(d_z d_w))) ≤ β ≤ √2·log(1 + c|z−w|/√(d_z d_w))
/// on sampled pairs.
pub fn run_nt_bound_fit(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let domain = cfg.build_domain()?;
    if !is_smooth_jordan(&domain) {
        return Err(Error::InvalidArgument("nt-bounds needs a smooth domain (disc, ellipse or smoothed polygon)".into()));
    }
    if cfg.density_name() != "bergman" {
        return Err(Error::InvalidArgument("nt-bounds needs the bergman density".into()));
    }
    let omega = cfg.build_density(&domain)?;
    let solver = GeodesicSolver::new(&omega, cfg.resolution, GeodesicOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = VerificationReport::new(cfg);

    // (beta, |z-w|/sqrt(dz dw)) per usable pair
    let mut data = Vec::with_capacity(cfg.pairs);
    let (mut excluded, mut vacuous) = (0usize, 0usize);
    for _ in 0..cfg.pairs {
        let z = sample_point(&mut rng, &domain, cfg.min_gap)?;
        let w = sample_point(&mut rng, &domain, cfg.min_gap)?;
        if z == w {
            vacuous += 1;
            continue;
        }
        match solver.distance(z, w) {
            Ok(r) => {
                let q = (z - w).norm() / (domain.boundary_gap(z) * domain.boundary_gap(w)).sqrt();
                data.push((r.distance, q));
            }
            Err(Error::Divergent(_)) | Err(Error::OutsideDomain(_)) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let mut c = 1.0f64;
    for &(beta, q) in &data {
        let e = (beta / SQRT_2).exp_m1();
        c = c.max(q / e).max(e / q);
    }
    let lower = |beta: f64, q: f64| beta - SQRT_2 * (q / c).ln_1p();
    let upper = |beta: f64, q: f64| SQRT_2 * (c * q).ln_1p() - beta;
    let lm: Vec<(f64, f64)> = data.iter().enumerate().map(|(i, &(b, q))| (i as f64, lower(b, q))).collect();
    let um: Vec<(f64, f64)> = data.iter().enumerate().map(|(i, &(b, q))| (i as f64, upper(b, q))).collect();
    let min_l = lm.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let min_u = um.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    report.value("c", c);
    report.value("pairs_used", data.len() as f64);
    report.value("pairs_excluded", excluded as f64);
    report.value("pairs_vacuous", vacuous as f64);
    report.value("min_lower_margin", min_l);
    report.value("min_upper_margin", min_u);
    report.curves.push(CurveData::new("lower_margin", "pair", "beta-lower", lm));
    report.curves.push(CurveData::new("upper_margin", "pair", "upper-beta", um));
    report.criterion(CriterionResult::new(
        "certificate",
        c.is_finite() && c <= cfg.cap,
        format!("smallest admissible c <= {}", cfg.cap),
        &[("c", c), ("pairs_used", data.len() as f64), ("pairs_excluded", excluded as f64)],
    ));
    Ok(report.finish())
}
