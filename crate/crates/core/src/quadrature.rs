//! Adaptive one-dimensional quadrature.
//!
//! Globally adaptive Gauss-Kronrod (7/15) integration in the QUADPACK style:
//! the panel with the largest error estimate is bisected until the summed
//! error estimate meets `max(abs_tol, rel_tol * |value|)`. Panels that reach
//! `max_depth` are frozen; when nothing is left to split the result comes back
//! with `converged = false` instead of a silently wrong value.
//!
//! Integrable endpoint singularities are not handled here. Callers remove
//! them by substitution before integrating.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of live panels, independent of `max_depth`.
const MAX_PANELS: usize = 4096;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the odd-indexed Kronrod nodes (XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_depth: 60,
        }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_depth: u32) -> Result<Self> {
        let cfg = QuadratureConfig {
            abs_tol,
            rel_tol,
            max_depth,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::domain("abs_tol", "must be finite and >= 0"));
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::domain("rel_tol", "must be finite and >= 0"));
        }
        if self.abs_tol == 0.0 && self.rel_tol == 0.0 {
            return Err(Error::domain(
                "abs_tol",
                "at least one of abs_tol, rel_tol must be positive",
            ));
        }
        if self.max_depth == 0 {
            return Err(Error::domain("max_depth", "must be >= 1"));
        }
        Ok(())
    }

    /// Copy with a different absolute tolerance.
    pub fn with_abs_tol(&self, abs_tol: f64) -> Self {
        QuadratureConfig { abs_tol, ..*self }
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub err_estimate: f64,
    pub evaluations: u64,
    pub converged: bool,
}

impl IntegralResult {
    /// The value, or a non-convergence error carrying the interval.
    pub fn into_value(self, lo: f64, hi: f64) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::QuadratureNonConvergence {
                lo,
                hi,
                value: self.value,
                err_estimate: self.err_estimate,
            })
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
    depth: u32,
    seq: u64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Largest error first; among equal errors the oldest panel wins.
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}

fn checked<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFiniteIntegrand { x })
    }
}

/// One 15-point Kronrod panel; returns (value, error estimate).
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let f_center = checked(f, center)?;
    let mut res_k = f_center * WGK[7];
    let mut res_g = f_center * WG[3];
    let mut resabs = res_k.abs();

    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut resasc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let scale = half.abs();
    let err = rescale_error((res_k - res_g) * half, resabs * scale, resasc * scale);
    Ok((res_k * half, err))
}

/// Integrates `f` over the finite interval `[lo, hi]`.
///
/// `f` is only evaluated at interior points, so it may be undefined at the
/// endpoints.
pub fn integrate<F>(f: F, lo: f64, hi: f64, cfg: &QuadratureConfig) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain(
            "hi",
            "bounds must be finite; use integrate_semi_infinite for [lo, inf)",
        ));
    }
    if lo > hi {
        return Err(Error::domain("lo", format!("lo = {lo} exceeds hi = {hi}")));
    }
    if lo == hi {
        return Ok(IntegralResult {
            value: 0.0,
            err_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }

    let mut seq = 0u64;
    let (value, err) = gauss_kronrod(&f, lo, hi)?;
    let mut evaluations = 15u64;
    let mut live = BinaryHeap::new();
    live.push(Panel {
        lo,
        hi,
        value,
        err,
        depth: 0,
        seq,
    });
    let mut frozen: Vec<Panel> = Vec::new();

    let mut total = value;
    let mut total_err = err;
    let converged = loop {
        if total_err <= cfg.tolerance(total) {
            break true;
        }
        if live.len() + frozen.len() >= MAX_PANELS {
            break false;
        }
        let Some(worst) = live.pop() else {
            break false;
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        if worst.depth >= cfg.max_depth || mid <= worst.lo || mid >= worst.hi {
            frozen.push(worst);
            continue;
        }

        let (v1, e1) = gauss_kronrod(&f, worst.lo, mid)?;
        let (v2, e2) = gauss_kronrod(&f, mid, worst.hi)?;
        evaluations += 30;
        for (plo, phi, v, e) in [(worst.lo, mid, v1, e1), (mid, worst.hi, v2, e2)] {
            seq += 1;
            live.push(Panel {
                lo: plo,
                hi: phi,
                value: v,
                err: e,
                depth: worst.depth + 1,
                seq,
            });
        }

        // Re-sum left to right so the result does not depend on update history.
        let mut panels: Vec<&Panel> = live.iter().chain(frozen.iter()).collect();
        panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        total = panels.iter().map(|p| p.value).sum();
        total_err = panels.iter().map(|p| p.err).sum();
    };

    Ok(IntegralResult {
        value: total,
        err_estimate: total_err,
        evaluations,
        converged,
    })
}

/// Integrates `f` over `[lo, inf)` through the map `y = lo + u / (1 - u)`.
pub fn integrate_semi_infinite<F>(f: F, lo: f64, cfg: &QuadratureConfig) -> Result<IntegralResult>
where
    F: Fn(f64) -> f64,
{
    if !lo.is_finite() {
        return Err(Error::domain("lo", "lower bound must be finite"));
    }
    integrate(
        |u: f64| {
            let w = 1.0 - u;
            f(lo + u / w) / (w * w)
        },
        0.0,
        1.0,
        cfg,
    )
}

/// Normal density with the given mean and variance.
pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::domain(
            "variance",
            format!("must be > 0, got {variance}"),
        ));
    }
    let d = x - mean;
    Ok((-d * d / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn constant_is_exact() {
        let r = integrate(|_| 1.0, 0.0, 1.0, &cfg()).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-15);
        assert!(r.err_estimate < 1e-13);
    }

    #[test]
    fn empty_interval() {
        let r = integrate(|x| x, 2.0, 2.0, &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);
        assert_eq!(r.evaluations, 0);
    }

    #[test]
    fn reversed_bounds_rejected() {
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, &cfg()),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn infinite_bound_rejected() {
        assert!(integrate(|x| x, 0.0, f64::INFINITY, &cfg()).is_err());
    }

    #[test]
    fn gaussian_mass_on_six_sigma() {
        // erf(6 / sqrt 2) = 1 - 1.973175290075e-9
        let r = integrate(|y| normal_pdf(y, 0.0, 1.0).unwrap(), -6.0, 6.0, &cfg()).unwrap();
        assert!(r.converged);
        assert!((r.value - (1.0 - 1.973_175_290_075e-9)).abs() < 1e-12);
        assert!((r.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn semi_infinite_examples() {
        let c = cfg();
        let r = integrate_semi_infinite(|y| 1.0 / (1.0 + y * y), 0.0, &c).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-10, "{}", r.value);
        let r = integrate_semi_infinite(|y| (-y).exp(), 0.0, &c).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        let r = integrate_semi_infinite(|y| 1.0 / (1.0 + y * y).powi(2), 0.0, &c).unwrap();
        assert!((r.value - PI / 4.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let err = integrate(|x| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &cfg());
        assert!(matches!(err, Err(Error::NonFiniteIntegrand { .. })));
    }

    #[test]
    fn depth_limit_reports_non_convergence() {
        let tight = QuadratureConfig::new(1e-15, 0.0, 1).unwrap();
        // Inverse square root singularity at 0 cannot be resolved with one split.
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &tight).unwrap();
        assert!(!r.converged);
        assert!(r.into_value(0.0, 1.0).unwrap_err().is_non_convergence());
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::new(0.0, 0.0, 10).is_err());
        assert!(QuadratureConfig::new(1e-10, 0.0, 0).is_err());
        assert!(QuadratureConfig::new(-1.0, 1e-3, 10).is_err());
        assert!(QuadratureConfig::new(0.0, 1e-8, 1).is_ok());
    }

    #[test]
    fn normal_pdf_values() {
        assert!((normal_pdf(0.0, 0.0, 1.0).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        let v = 2.5;
        let mode = normal_pdf(3.0, 3.0, v).unwrap();
        assert!((mode - 1.0 / (2.0 * PI * v).sqrt()).abs() < 1e-15);
        assert!(normal_pdf(0.0, 0.0, 0.0).is_err());
        assert!(normal_pdf(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn normal_pdf_normalizes() {
        for v in [0.01, 1.0, 25.0] {
            let sd = f64::sqrt(v);
            let r = integrate(
                |y| normal_pdf(y, 0.0, v).unwrap(),
                -40.0 * sd,
                40.0 * sd,
                &cfg(),
            )
            .unwrap();
            assert!((r.value - 1.0).abs() < 1e-10, "v = {v}: {}", r.value);
        }
    }
}
