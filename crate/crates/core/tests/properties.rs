use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use proptest::prelude::*;

use hlab::domain::DomainSpec;
use hlab::geodesic::{refinement_sequence, weighted_distance};
use hlab::growth::{fit_exponent, integral_means, mean_lipschitz_modulus, sup_lipschitz_modulus, DistanceEvaluator, Exponent};
use hlab::kernel::{fit_kernel_on, KernelBasis, KernelModel};
use hlab::maps::{boundary_trace, hyperbolic_derivative, path_upper_bound_check, weighted_derivative, AnalyticMap, BoundaryTrace};
use hlab::metric::{disc_automorphism, hyperbolic_distance_closed, MetricDensity};
use hlab::quadrature::quadrature_grid;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn disc_model() -> Arc<KernelModel> {
    static M: OnceLock<Arc<KernelModel>> = OnceLock::new();
    M.get_or_init(|| Arc::new(fit_kernel_on(&DomainSpec::unit_disc(), 0.02, 30, KernelBasis::Monomial).unwrap()))
        .clone()
}

fn domains() -> Vec<DomainSpec> {
    vec![
        DomainSpec::unit_disc(),
        DomainSpec::ellipse(1.5, 1.0).unwrap(),
        DomainSpec::polygon(vec![c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0)]).unwrap(),
        DomainSpec::smoothed_polygon(vec![c(-1.0, -1.0), c(1.0, -1.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(-1.0, 1.0)], 0.2)
            .unwrap(),
    ]
}

fn unit_point() -> impl Strategy<Value = Complex64> {
    (0.0f64..0.999, 0.0..TAU).prop_map(|(r, t)| Complex64::from_polar(r.sqrt(), t))
}

fn point_in(r: f64) -> impl Strategy<Value = Complex64> {
    (0.0f64..1.0, 0.0..TAU).prop_map(move |(u, t)| Complex64::from_polar(r * u.sqrt(), t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_distance_is_a_lower_bound(k in 0usize..4, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let d = &domains()[k];
        let bb = d.bounding_box();
        let z = c(bb.xmin + u * bb.width(), bb.ymin + v * bb.height());
        prop_assume!(d.contains(z));
        let dist = d.boundary_distance(z).unwrap();
        prop_assert!(dist > 0.0);
        for j in 0..512 {
            let b = d.boundary_point(TAU * j as f64 / 512.0);
            prop_assert!(dist <= (z - b).norm() + 1e-12);
            prop_assert!(d.boundary_gap(b) < 1e-9);
        }
    }

    #[test]
    fn quadrature_nodes_inside_with_positive_weights(a in 1.0f64..2.0, b in 0.5f64..1.0, h in 0.05f64..0.3) {
        let e = DomainSpec::ellipse(a, b).unwrap();
        let g = quadrature_grid(&e, h).unwrap();
        prop_assert!(g.nodes.iter().all(|&z| e.contains(z)));
        prop_assert!(g.weights.iter().all(|&w| w > 0.0));
        prop_assert!((g.total_weight() - e.area()).abs() < 1e-4 * e.area());
    }

    #[test]
    fn kernel_is_hermitian_and_positive(z in point_in(0.8), w in point_in(0.8)) {
        let m = disc_model();
        let kzw = m.kernel_eval(z, w).unwrap();
        let kwz = m.kernel_eval(w, z).unwrap();
        prop_assert!((kzw - kwz.conj()).norm() <= 1e-12 * kzw.norm().max(1.0));
        prop_assert!(m.kernel_eval(z, z).unwrap().re > 0.0);
        prop_assert!(m.bergman_density(z).unwrap() > 0.0);
    }

    #[test]
    fn disc_automorphism_contracts_exactly(a in point_in(0.95), theta in 0.0..TAU, z in point_in(0.9)) {
        let phi = disc_automorphism(a, theta).unwrap();
        let lhs = phi.derivative(z).norm() * (1.0 - z.norm_sqr());
        prop_assert!((lhs - (1.0 - phi.eval(z).norm_sqr())).abs() < 1e-12);
    }

    #[test]
    fn closed_hyperbolic_distance_is_a_metric(z in point_in(0.9), w in point_in(0.9), u in point_in(0.9),
                                              a in point_in(0.8), theta in 0.0..TAU) {
        let d = hyperbolic_distance_closed;
        prop_assert!((d(z, w) - d(w, z)).abs() < 1e-12);
        prop_assert!(d(z, w) <= d(z, u) + d(u, w) + 1e-12);
        let phi = disc_automorphism(a, theta).unwrap();
        prop_assert!((d(phi.eval(z), phi.eval(w)) - d(z, w)).abs() < 1e-9 * (1.0 + d(z, w)));
    }

    #[test]
    fn catalog_images_stay_in_the_disc(k in 0usize..10, z in unit_point()) {
        let names = ["identity", "constant", "square", "half", "cusp_a30", "cusp_a50", "cusp_a70", "cusp_a100", "blaschke2", "singular"];
        let f = AnalyticMap::from_catalog(names[k], &DomainSpec::unit_disc(), None, None).unwrap();
        prop_assert!(f.eval(z).unwrap().norm() < 1.0);
    }

    #[test]
    fn hyperbolic_derivative_specialization(k in 0usize..9, z in point_in(0.99)) {
        let names = ["identity", "constant", "square", "half", "cusp_a30", "cusp_a50", "cusp_a70", "blaschke2", "singular"];
        let f = AnalyticMap::from_catalog(names[k], &DomainSpec::unit_disc(), None, None).unwrap();
        let hd = hyperbolic_derivative(&f, z).unwrap();
        let wd = weighted_derivative(&f, &MetricDensity::hyperbolic(), z).unwrap();
        prop_assert!((hd - wd).abs() <= 1e-15 * hd.max(wd));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn moduli_orderings(eps in 0.05f64..0.6, wobble in 0.0f64..0.3, k1 in 1usize..20, k2 in 1usize..20, p in 1.0f64..4.0) {
        let n = 512;
        let tr = BoundaryTrace {
            values: (0..n)
                .map(|j| {
                    let t = TAU * j as f64 / n as f64;
                    Complex64::from_polar(eps * (1.0 + wobble * (3.0 * t).sin()) / (1.0 + wobble), t)
                })
                .collect(),
            radius: 1.0,
            exact: true,
        };
        let d = DistanceEvaluator::HyperbolicClosed;
        let (ha, hb) = (TAU * k1.min(k2) as f64 / n as f64, TAU * k1.max(k2) as f64 / n as f64);
        let sa = sup_lipschitz_modulus(&tr, &d, ha).unwrap();
        let sb = sup_lipschitz_modulus(&tr, &d, hb).unwrap();
        prop_assert!(sa <= sb);
        let ma = mean_lipschitz_modulus(&tr, &d, p, ha).unwrap();
        let mb = mean_lipschitz_modulus(&tr, &d, p, hb).unwrap();
        prop_assert!(ma <= mb);
        prop_assert!(mb <= sb * (1.0 + 1e-12));
        let m_hi = mean_lipschitz_modulus(&tr, &d, p + 1.0, hb).unwrap();
        prop_assert!(mb <= m_hi * (1.0 + 1e-12));
    }

    #[test]
    fn means_of_constant_modulus_function(v in 0.0f64..10.0, r in 0.05f64..0.95, p in 1.0f64..6.0) {
        let m = integral_means(|_| Ok(v), r, Exponent::Finite(p), 128).unwrap();
        prop_assert!((m - v).abs() <= 1e-13 * v.max(1.0));
        prop_assert_eq!(integral_means(|_| Ok(v), r, Exponent::Infinity, 128).unwrap(), v);
    }

    #[test]
    fn fit_recovers_power_laws(slope in -2.0f64..2.0, scale in 0.1f64..10.0, k0 in 1i32..4) {
        let pts: Vec<(f64, f64)> = (k0..k0 + 7).map(|k| 0.5f64.powi(k)).map(|x| (x, scale * x.powf(slope))).collect();
        let fit = fit_exponent(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-12);
        prop_assert!(fit.r_squared == 1.0 || (1.0 - fit.r_squared) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn geodesic_triangle_inequality(z in point_in(0.7), w in point_in(0.7), u in point_in(0.7)) {
        let qh = MetricDensity::quasihyperbolic(DomainSpec::unit_disc());
        let d = |a, b| weighted_distance(&qh, a, b, 0.02).unwrap().distance;
        let (zw, zu, uw) = (d(z, w), d(z, u), d(u, w));
        prop_assert!(zw <= zu + uw + 2e-6 * (zu + uw));
    }

    #[test]
    fn refinement_never_increases_the_distance(z in point_in(0.7), w in point_in(0.7)) {
        let hyp = MetricDensity::hyperbolic();
        let seq = refinement_sequence(&hyp, z, w, &[0.08, 0.04, 0.02]).unwrap();
        for pair in seq.windows(2) {
            prop_assert!(pair[1].distance <= pair[0].distance + 1e-6);
        }
    }
}

#[test]
fn path_upper_bound_on_random_triples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let names = ["identity", "square", "half", "cusp_a30", "cusp_a50", "cusp_a70", "cusp_a100", "blaschke2", "singular"];
    let hyp = MetricDensity::hyperbolic();
    for _ in 0..100 {
        let f = AnalyticMap::from_catalog(names[rng.gen_range(0..names.len())], &DomainSpec::unit_disc(), None, None).unwrap();
        let mut pt = || Complex64::from_polar(0.8 * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
        let (z, w) = (pt(), pt());
        let r = path_upper_bound_check(&f, &hyp, z, w, 0.02).unwrap();
        assert!(r.holds(1e-2), "{} z={z} w={w} lhs={} rhs={}", f.name, r.lhs, r.rhs);
    }
}

#[test]
fn area_error_decreases_under_refinement() {
    for d in &domains()[..3] {
        let errs: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&h| (quadrature_grid(d, h).unwrap().total_weight() - d.area()).abs())
            .collect();
        for e in errs.windows(2) {
            // errors at the roundoff level are not expected to shrink further
            assert!(e[1] <= 1.05 * e[0] || e[1] < 1e-10, "{d}: {errs:?}");
        }
    }
}

#[test]
fn bergman_density_blows_up_along_rays() {
    let disc = MetricDensity::bergman(disc_model());
    let e = DomainSpec::ellipse(1.5, 1.0).unwrap();
    let ell = MetricDensity::bergman(Arc::new(fit_kernel_on(&e, 0.02, 80, KernelBasis::Arnoldi).unwrap()));
    for omega in [&disc, &ell] {
        let d = omega.domain();
        for j in 0..8 {
            let dir = Complex64::from_polar(1.0, TAU * j as f64 / 8.0);
            let exit = d.ray_exit(c(0.0, 0.0), dir).unwrap();
            let mut last = 0.0;
            for gap in [0.4, 0.2, 0.1, 0.05] {
                // step back from the exit point along the ray until the gap matches
                let (mut lo, mut hi) = (0.0, exit.norm());
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if d.boundary_gap(dir * mid) > gap {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let rho = omega.eval(dir * lo).unwrap();
                assert!(rho > last, "{}: ray {j} gap {gap}: {rho} <= {last}", d);
                last = rho;
            }
        }
    }
}

#[test]
fn boundary_traces_stay_in_the_closure() {
    for name in ["identity", "square", "cusp_a30", "cusp_a50", "blaschke2"] {
        let f = AnalyticMap::from_catalog(name, &DomainSpec::unit_disc(), None, None).unwrap();
        let t = boundary_trace(&f, 1024, 1.0).unwrap();
        assert!(t.values.iter().all(|v| v.norm() <= 1.0 + 1e-12));
        if name.starts_with("cusp") {
            assert!(t.values.iter().all(|v| v.norm() < 1.0));
        }
    }
}
