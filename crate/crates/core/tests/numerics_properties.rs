use compfade::numerics::{
    integrate_finite, integrate_semi_infinite, integrate_upper_tail, sum_adaptive, QuadOptions,
};
use compfade::specfun::ln_gamma;
use std::f64::consts::PI;

fn gamma_integral(p: f64, s: f64) -> f64 {
    (ln_gamma(p).unwrap() + p * s.ln()).exp()
}

// K_{1/2} and K_{3/2} in closed form.
fn k_half(z: f64) -> f64 {
    (PI / (2.0 * z)).sqrt() * (-z).exp()
}

fn k_three_halves(z: f64) -> f64 {
    k_half(z) * (1.0 + 1.0 / z)
}

type Case = (&'static str, Box<dyn Fn(f64) -> f64>, f64);

fn closed_form_suite() -> Vec<Case> {
    let bessel_k = |p: f64, a: f64, omega: f64, k: fn(f64) -> f64| {
        2.0 * (a * omega).powf(p / 2.0) * k(2.0 * (a / omega).sqrt())
    };
    vec![
        ("exp", Box::new(|y: f64| (-y).exp()), 1.0),
        ("gauss", Box::new(|y: f64| (-y * y).exp()), PI.sqrt() / 2.0),
        (
            "gamma 3.3",
            Box::new(|y: f64| y.powf(2.3) * (-y / 0.7).exp()),
            gamma_integral(3.3, 0.7),
        ),
        (
            "gamma 0.6",
            Box::new(|y: f64| y.powf(-0.4) * (-y * 2.0).exp()),
            gamma_integral(0.6, 0.5),
        ),
        (
            "gamma 12",
            Box::new(|y: f64| y.powi(11) * (-y).exp()),
            gamma_integral(12.0, 1.0),
        ),
        (
            "stretched",
            Box::new(|y: f64| (-y.powf(1.5)).exp()),
            gamma_integral(1.0 / 1.5 + 1.0, 1.0),
        ),
        ("lorentz", Box::new(|y: f64| 1.0 / (1.0 + y * y)), PI / 2.0),
        (
            "bessel-k 1/2",
            Box::new(|u: f64| u.powf(-0.5) * (-0.8 / u - u / 1.3).exp()),
            bessel_k(0.5, 0.8, 1.3, k_half),
        ),
        (
            "bessel-k 3/2",
            Box::new(|u: f64| u.powf(0.5) * (-2.5 / u - u / 0.4).exp()),
            bessel_k(1.5, 2.5, 0.4, k_three_halves),
        ),
        (
            "bessel-k -1/2",
            Box::new(|u: f64| u.powf(-1.5) * (-0.05 / u - u / 3.0).exp()),
            bessel_k(-0.5, 0.05, 3.0, k_half),
        ),
    ]
}

#[test]
fn closed_form_suite_meets_tolerance_and_error_estimates_cover() {
    let mut covered = 0;
    let suite = closed_form_suite();
    for tol in [1e-6, 1e-9, 1e-11] {
        for (name, f, want) in &suite {
            let opts = QuadOptions::default()
                .with_rel_tol(tol)
                .with_abs_tol(1e-300);
            let r = integrate_semi_infinite(f, opts).unwrap();
            let err = (r.value - want).abs();
            assert!(
                err <= tol * want.abs(),
                "{name} @ {tol:e}: {} vs {want} (err {err:e})",
                r.value
            );
            assert!(r.error_estimate.is_finite() && r.error_estimate >= 0.0);
            assert!(r.evaluations <= opts.budget);
            if r.error_estimate >= err {
                covered += 1;
            }
        }
    }
    let total = 3 * suite.len();
    assert!(
        covered as f64 >= 0.95 * total as f64,
        "error estimate covered {covered}/{total}"
    );
}

#[test]
fn splitting_the_domain_is_consistent() {
    for (name, f, _) in closed_form_suite() {
        let whole = integrate_semi_infinite(&f, QuadOptions::default()).unwrap();
        for c in [0.1, 0.9, 3.7] {
            let head = integrate_finite(&f, 0.0, c, QuadOptions::default()).unwrap();
            let tail = integrate_upper_tail(&f, c, 1.0, QuadOptions::default()).unwrap();
            let gap = (head.value + tail.value - whole.value).abs();
            let allowed = 2.0 * (head.error_estimate + tail.error_estimate + whole.error_estimate);
            assert!(
                gap <= allowed.max(4.0 * f64::EPSILON * whole.value.abs()),
                "{name} split at {c}: gap {gap:e} > {allowed:e}"
            );
        }
    }
}

#[test]
fn alternating_series_agree_with_long_direct_sums() {
    let cases: Vec<(Box<dyn Fn(usize) -> f64>, f64)> = vec![
        (Box::new(|i| (-0.7f64).powi(i as i32)), 1e-12),
        (
            Box::new(|i| (-1f64).powi(i as i32) / ((i + 1) as f64).powi(3)),
            1e-10,
        ),
        (
            Box::new(|i| (-1f64).powi(i as i32) * (-0.01 * (i * i) as f64).exp()),
            1e-12,
        ),
    ];
    for (k, (term, tol)) in cases.into_iter().enumerate() {
        let direct: f64 = (0..10_000).map(&term).sum();
        let r = sum_adaptive(&term, tol, 20_000).unwrap();
        assert!(
            (r.value - direct).abs() <= tol * direct.abs(),
            "case {k}: {} vs {direct}",
            r.value
        );
    }
}
