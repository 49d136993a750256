//! Closed forms against independent oracles: erf-based densities, arcsine
//! laws, nested quadrature of moments, and finite differences.

use std::f64::consts::{FRAC_PI_2, PI};

use lastzero_core::*;
use proptest::prelude::*;
use statrs::function::erf::{erf, erfc};

fn q() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn tight() -> QuadratureConfig {
    QuadratureConfig::new(1e-15, 1e-13, 60).unwrap()
}

fn params(mu: f64, t: f64) -> DriftedBMParams {
    DriftedBMParams::new(mu, t).unwrap()
}

/// Density with the inner Gaussian integral written through `erf`.
fn pdf_oracle(mu: f64, t: f64, a: f64) -> f64 {
    let first = (-0.5 * mu * mu * t).exp() / (PI * (a * (t - a)).sqrt());
    let inner = (FRAC_PI_2).sqrt() / mu.abs() * erf(mu.abs() * ((t - a) / 2.0).sqrt());
    first + mu * mu / (2.0 * PI) * 2.0 * (-0.5 * mu * mu * a).exp() / a.sqrt() * inner
}

/// `int_0^t g(a) f(a) da` with `a = t sin^2(phi)`, which cancels both
/// endpoint singularities of the density.
fn pdf_moment(p: &DriftedBMParams, g: impl Fn(f64) -> f64) -> f64 {
    let t = p.t();
    integrate(
        |phi| {
            let (s, c) = phi.sin_cos();
            let a = t * s * s;
            g(a) * last_zero_pdf(p, a, &q()).unwrap() * 2.0 * t * s * c
        },
        0.0,
        FRAC_PI_2,
        &q(),
    )
    .unwrap()
    .value
}

#[test]
fn pdf_matches_erf_oracle() {
    for &(mu, t) in &[(0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (-3.0, 1.5), (10.0, 1.0)] {
        let p = params(mu, t);
        for k in 1..50 {
            let a = t * k as f64 / 50.0;
            let got = last_zero_pdf(&p, a, &q()).unwrap();
            let want = pdf_oracle(mu, t, a);
            assert!(
                (got - want).abs() < 1e-10 * want + 1e-15,
                "mu={mu} t={t} a={a}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn pdf_resolves_large_drift() {
    // The inner integrand is a spike of width 1/mu near its lower limit.
    for &mu in &[1e2, 1e3, 1e4] {
        let p = params(mu, 1.0);
        for &a in &[1e-7, 1e-6, 1e-5] {
            let got = last_zero_pdf(&p, a, &q()).unwrap();
            let want = pdf_oracle(mu, 1.0, a);
            assert!(want > 0.0);
            assert!(
                ((got - want) / want).abs() < 1e-9,
                "mu={mu} a={a}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn pdf_normalizes() {
    for &(mu, t) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.5), (5.0, 1.0)] {
        let mass = pdf_moment(&params(mu, t), |_| 1.0);
        assert!((mass - 1.0).abs() < 1e-8, "mu={mu} t={t}: {mass}");
    }
}

#[test]
fn moments_match_quadrature_of_density() {
    for &(mu, t) in &[(1.0, 1.0), (0.5, 2.0), (3.0, 1.0)] {
        let p = params(mu, t);
        let m1 = pdf_moment(&p, |a| a);
        let m2 = pdf_moment(&p, |a| a * a);
        assert!((last_zero_mean(&p) - m1).abs() < 1e-8, "mean mu={mu} t={t}");
        assert!(
            (last_zero_variance(&p) - (m2 - m1 * m1)).abs() < 1e-8,
            "variance mu={mu} t={t}"
        );
    }
}

#[test]
fn density_is_derivative_of_cdf() {
    for &mu in &[0.5, 1.0, 2.0] {
        for &t in &[0.5, 1.0, 2.0] {
            let p = params(mu, t);
            for k in 1..=100 {
                let a = t * k as f64 / 101.0;
                let h = 1e-4 * a.min(t - a);
                let fd = (last_zero_cdf(&p, a + h, &tight()).unwrap()
                    - last_zero_cdf(&p, a - h, &tight()).unwrap())
                    / (2.0 * h);
                let f = last_zero_pdf(&p, a, &q()).unwrap();
                assert!(
                    ((fd - f) / f).abs() < 1e-4,
                    "mu={mu} t={t} a={a}: {fd} vs {f}"
                );
            }
        }
    }
    let p = params(1.0, 1.0);
    let h = 1e-5;
    let fd = (last_zero_cdf(&p, 0.3 + h, &tight()).unwrap()
        - last_zero_cdf(&p, 0.3 - h, &tight()).unwrap())
        / (2.0 * h);
    let f = last_zero_pdf(&p, 0.3, &q()).unwrap();
    assert!(((fd - f) / f).abs() < 1e-5);
}

#[test]
fn driftless_limits_are_arcsine_laws() {
    let p = params(1e-6, 1.0);
    for k in 1..20 {
        let a = k as f64 / 20.0;
        let arcsine = 2.0 / PI * a.sqrt().asin();
        assert!((last_zero_cdf(&p, a, &q()).unwrap() - arcsine).abs() < 1e-6);
        let density = 1.0 / (PI * (a * (1.0 - a)).sqrt());
        assert!((last_zero_pdf(&p, a, &q()).unwrap() - density).abs() < 1e-5);
    }
    for &(a, b) in &[(0.5, 1.0), (0.1, 3.0), (1.0, 1.5)] {
        let w = CrossingWindow::new(a, b).unwrap();
        let arctan = 2.0 / PI * ((b - a) / a).sqrt().atan();
        assert!((crossing_probability(1e-6, &w, &q()).unwrap() - arctan).abs() < 1e-6);
    }
}

#[test]
fn crossing_is_a_survival_increment() {
    // Psi over [a, t] is P(T >= a) for horizon t.
    for &(mu, a, t) in &[(1.0, 0.5, 1.0), (2.0, 0.2, 3.0), (0.3, 1.0, 4.0)] {
        let w = CrossingWindow::new(a, t).unwrap();
        let psi = crossing_probability(mu, &w, &q()).unwrap();
        let surv = 1.0 - last_zero_cdf(&params(mu, t), a, &q()).unwrap();
        assert!((psi - surv).abs() < 1e-12, "mu={mu} a={a} t={t}");
    }
}

#[test]
fn limit_law_cdf_matches_erf() {
    for &mu in &[0.5, 1.0, 3.0] {
        let law = LimitLaw::new(mu).unwrap();
        for k in 0..60 {
            let a = 0.05 * k as f64 / (mu * mu);
            let want = erf(mu * (a / 2.0).sqrt());
            let got = limit_law_cdf(&law, a, &q()).unwrap();
            assert!((got - want).abs() < 1e-10, "mu={mu} a={a}: {got} vs {want}");
        }
    }
}

#[test]
fn limit_law_moments_match_tail_integrals() {
    for &mu in &[1.0, 2.0, 0.7] {
        let law = LimitLaw::new(mu).unwrap();
        let tail = |a: f64| 1.0 - limit_law_cdf(&law, a, &q()).unwrap();
        let m1 = integrate_semi_infinite(tail, 0.0, &q()).unwrap().value;
        let m2 = integrate_semi_infinite(|a| 2.0 * a * tail(a), 0.0, &q())
            .unwrap()
            .value;
        assert!((limit_law_mean(&law) - m1).abs() < 1e-6, "mean mu={mu}");
        assert!(
            (limit_law_variance(&law) - (m2 - m1 * m1)).abs() < 1e-6,
            "variance mu={mu}"
        );
    }
}

#[test]
fn scaled_cdf_converges_to_limit_law() {
    let law = LimitLaw::new(1.0).unwrap();
    let r = 1e4;
    let p = DriftedBMParams::scaled(1.0, r, 1.0).unwrap();
    for &a in &[0.1, 0.5, 1.0, 3.0] {
        let lhs = last_zero_cdf(&p, a / r, &q()).unwrap();
        let rhs = limit_law_cdf(&law, a, &q()).unwrap();
        assert!((lhs - rhs).abs() < 1e-3, "a={a}: {lhs} vs {rhs}");
    }
    // Independent check of the limit law itself: Y = chi^2_1 / mu^2.
    assert!((limit_law_cdf(&law, 0.5, &q()).unwrap() - (1.0 - erfc(0.5))).abs() < 1e-10);
}

#[test]
fn scaled_mean_tends_to_limit_mean() {
    let r = 1e6;
    let p = DriftedBMParams::scaled(1.0, r, 1.0).unwrap();
    assert!((r * last_zero_mean(&p) - 1.0).abs() < 1e-6);
    let p = DriftedBMParams::scaled(1.0, 1e4, 1.0).unwrap();
    assert!((1e8 * last_zero_variance(&p) - 2.0).abs() < 2e-10);
}

type Integrand = Box<dyn Fn(f64) -> f64>;

#[test]
fn quadrature_is_linear_and_honest() {
    let cases: Vec<(Integrand, f64, f64, f64)> = vec![
        (Box::new(|x: f64| x.sqrt()), 0.0, 1.0, 2.0 / 3.0),
        (Box::new(|x: f64| 1.0 / x.sqrt()), 0.0, 1.0, 2.0),
        (Box::new(|x: f64| x.sin()), 0.0, PI, 2.0),
        (Box::new(|x: f64| 1.0 / (1.0 + x * x)), -1.0, 1.0, FRAC_PI_2),
        (
            Box::new(|x: f64| (-x * x).exp()),
            -3.0,
            3.0,
            PI.sqrt() * erf(3.0),
        ),
        (Box::new(|x: f64| x.ln()), 0.0, 1.0, -1.0),
    ];
    for (f, lo, hi, exact) in &cases {
        // 1/sqrt(x) needs panels narrower than the depth limit allows at this
        // tolerance, so it may come back unconverged; the estimate must still bound the error.
        let res = integrate(f, *lo, *hi, &q()).unwrap();
        let err = (res.value - exact).abs();
        assert!(
            err <= 10.0 * res.err_estimate.max(f64::EPSILON * exact.abs()),
            "[{lo}, {hi}]: error {err} vs estimate {}",
            res.err_estimate
        );
    }
    let (f, g) = (&cases[0].0, &cases[2].0);
    let sum = integrate(|x| 2.5 * f(x) - 0.75 * g(x), 0.0, 1.0, &q())
        .unwrap()
        .value;
    let parts = 2.5 * integrate(f, 0.0, 1.0, &q()).unwrap().value
        - 0.75 * integrate(g, 0.0, 1.0, &q()).unwrap().value;
    assert!((sum - parts).abs() < 1e-12);
}

#[test]
fn evaluations_are_deterministic() {
    let p = params(1.3, 2.0);
    let a = last_zero_cdf(&p, 0.7, &q()).unwrap();
    let b = last_zero_cdf(&p, 0.7, &q()).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let r1 = integrate(|x: f64| x.cos().exp(), 0.0, 4.0, &q()).unwrap();
    let r2 = integrate(|x: f64| x.cos().exp(), 0.0, 4.0, &q()).unwrap();
    assert_eq!(r1, r2);
}

fn mu_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![-5.0..-0.01f64, 0.01..5.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_is_monotone_with_exact_endpoints(
        mu in mu_strategy(),
        t in 0.05..5.0f64,
        u1 in 0.0..1.0f64,
        u2 in 0.0..1.0f64,
    ) {
        let p = params(mu, t);
        let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        let f_lo = last_zero_cdf(&p, lo * t, &q()).unwrap();
        let f_hi = last_zero_cdf(&p, hi * t, &q()).unwrap();
        prop_assert!(f_lo <= f_hi, "{f_lo} > {f_hi}");
        prop_assert!((0.0..=1.0).contains(&f_lo) && (0.0..=1.0).contains(&f_hi));
        prop_assert_eq!(last_zero_cdf(&p, 0.0, &q()).unwrap(), 0.0);
        prop_assert_eq!(last_zero_cdf(&p, t, &q()).unwrap(), 1.0);
    }

    #[test]
    fn survival_paths_agree(
        mu in mu_strategy(),
        t in 0.05..5.0f64,
        u in 0.0..1.0f64,
    ) {
        let p = params(mu, t);
        let z = u * t;
        prop_assume!(0.5 * mu * mu * z < 30.0);
        let direct = 1.0 - last_zero_cdf(&p, z, &q()).unwrap();
        let via_log = last_zero_log_survival(&p, z, &q()).unwrap().exp();
        prop_assert!((direct - via_log).abs() < 1e-12, "{direct} vs {via_log}");
    }

    #[test]
    fn rate_functions_agree_on_the_horizon(
        mu in mu_strategy(),
        t in 0.01..10.0f64,
        u in 0.0..=1.0f64,
    ) {
        let j = RateFunctionJ::new(mu, t).unwrap();
        let jt = RateFunctionJTilde::new(mu).unwrap();
        let b = u * t;
        prop_assert_eq!(rate_j(&j, b).to_bits(), rate_j_tilde(&jt, b).to_bits());
        prop_assert_eq!(rate_j(&j, t * (1.0 + u) + 1e-9), f64::INFINITY);
    }

    #[test]
    fn crossing_decreases_in_drift_and_grows_with_window(
        mu in 0.05..4.0f64,
        a in 0.05..2.0f64,
        len in 0.01..3.0f64,
    ) {
        let w = CrossingWindow::new(a, a + len).unwrap();
        let wider = CrossingWindow::new(a, a + 2.0 * len).unwrap();
        let base = crossing_log_probability(mu, &w, &q()).unwrap();
        prop_assert!(crossing_log_probability(1.1 * mu, &w, &q()).unwrap() < base);
        prop_assert!(crossing_log_probability(mu, &wider, &q()).unwrap() > base);
    }
}
