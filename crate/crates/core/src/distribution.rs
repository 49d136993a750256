//! Closed-form law of the last zero `T` of `B(s) + mu * s` on `[0, t]`.
//!
//! With `c = mu^2 a / 2` the survival function is
//!
//! ```text
//! P(T > a) = (2/pi) * int_0^{sqrt((t-a)/a)} exp(-c (1 + y^2)) / (1 + y^2) dy
//! ```
//!
//! and every tail quantity here (survival, window crossing, limit law) is an
//! integral of that shape. Substituting `y = tan(theta)` turns the integrand
//! into `exp(-c / cos^2 theta)` on the finite range `[0, atan(upper)]`, which
//! keeps the integrand bounded and smooth even as the upper limit grows
//! without bound (small `a`). The log-domain variants pull `exp(-c)` out
//! analytically and integrate `exp(-c tan^2 theta)` instead.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, QuadratureConfig};

fn require_nonzero_drift(mu: f64) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::domain("mu", format!("must be finite, got {mu}")));
    }
    if mu == 0.0 {
        return Err(Error::domain("mu", "must be nonzero"));
    }
    Ok(())
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

/// Drift and horizon of the process. The drift is per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftedBMParams {
    mu: f64,
    t: f64,
}

impl DriftedBMParams {
    pub fn new(mu: f64, t: f64) -> Result<Self> {
        require_nonzero_drift(mu)?;
        require_positive("t", t)?;
        Ok(DriftedBMParams { mu, t })
    }

    /// Member of the scaled family: drift `mu * sqrt(r)` on the same horizon.
    pub fn scaled(mu: f64, r: f64, t: f64) -> Result<Self> {
        require_positive("r", r)?;
        DriftedBMParams::new(mu * r.sqrt(), t)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    fn half_mu2(&self) -> f64 {
        0.5 * self.mu * self.mu
    }
}

/// Time window `[a, b]` with `0 < a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingWindow {
    a: f64,
    b: f64,
}

impl CrossingWindow {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        require_positive("a", a)?;
        if !(b.is_finite() && b > a) {
            return Err(Error::domain(
                "b",
                format!("window needs 0 < a < b, got a = {a}, b = {b}"),
            ));
        }
        Ok(CrossingWindow { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Rate function of the large deviation principle for `T` with drift `mu sqrt(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFunctionJ {
    mu: f64,
    t: f64,
}

impl RateFunctionJ {
    pub fn new(mu: f64, t: f64) -> Result<Self> {
        require_nonzero_drift(mu)?;
        require_positive("t", t)?;
        Ok(RateFunctionJ { mu, t })
    }

    /// `mu^2 b / 2` on `[0, t]`, infinite elsewhere.
    pub fn eval(&self, b: f64) -> f64 {
        if (0.0..=self.t).contains(&b) {
            0.5 * self.mu * self.mu * b
        } else {
            f64::INFINITY
        }
    }
}

/// Rate function of the moderate-deviation family; `RateFunctionJ` is its
/// restriction to `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFunctionJTilde {
    mu: f64,
}

impl RateFunctionJTilde {
    pub fn new(mu: f64) -> Result<Self> {
        require_nonzero_drift(mu)?;
        Ok(RateFunctionJTilde { mu })
    }

    /// `mu^2 b / 2` for `b >= 0`, infinite for `b < 0`.
    pub fn eval(&self, b: f64) -> f64 {
        if b >= 0.0 {
            0.5 * self.mu * self.mu * b
        } else {
            f64::INFINITY
        }
    }
}

pub fn rate_j(rf: &RateFunctionJ, b: f64) -> f64 {
    rf.eval(b)
}

pub fn rate_j_tilde(rf: &RateFunctionJTilde, b: f64) -> f64 {
    rf.eval(b)
}

/// Weak limit `Y` of `r * T` under drift `mu sqrt(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    mu: f64,
}

impl LimitLaw {
    pub fn new(mu: f64) -> Result<Self> {
        require_nonzero_drift(mu)?;
        Ok(LimitLaw { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `int_0^theta exp(-c / cos^2 s) ds`, i.e. the tail integral with the
/// exponential left inside.
fn tail_integral_raw(c: f64, theta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    integrate(
        |s: f64| {
            let cs = s.cos();
            (-c / (cs * cs)).exp()
        },
        0.0,
        theta,
        cfg,
    )?
    .into_value(0.0, theta)
}

/// `int_0^end f` for an integrand concentrated within `width` of the origin.
///
/// A spike much narrower than `end` can fall between every Kronrod node of
/// the first panel, so the range is split at `width` and `8 width`.
fn integrate_spike<F>(f: F, width: f64, end: f64, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut total = 0.0;
    let mut lo = 0.0;
    for hi in [width, 8.0 * width, end] {
        let hi = hi.min(end);
        if hi > lo {
            total += integrate(&f, lo, hi, cfg)?.into_value(lo, hi)?;
            lo = hi;
        }
    }
    Ok(total)
}

/// `int_0^theta exp(-c tan^2 s) ds`, the tail integral with `exp(-c)` factored out.
///
/// Of order `min(theta, 1/sqrt(c))`; the absolute tolerance is scaled to that
/// size so the relative accuracy of its logarithm holds for large `c`.
fn tail_integral_factored(c: f64, theta: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let width = if c > 0.0 {
        c.sqrt().recip()
    } else {
        f64::INFINITY
    };
    let cfg = cfg.with_abs_tol(cfg.abs_tol * theta.min(width).min(1.0));
    integrate_spike(
        |s: f64| {
            let ts = s.tan();
            (-c * ts * ts).exp()
        },
        width,
        theta,
        &cfg,
    )
}

/// `atan(sqrt((hi - lo) / lo))` without forming the ratio.
fn angle(lo: f64, hi: f64) -> f64 {
    (hi - lo).sqrt().atan2(lo.sqrt())
}

/// `P(T <= a)`. Zero for `a <= 0`, one for `a >= t`.
pub fn last_zero_cdf(p: &DriftedBMParams, a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if a.is_nan() {
        return Err(Error::domain("a", "must not be NaN"));
    }
    if a <= 0.0 {
        return Ok(0.0);
    }
    if a >= p.t {
        return Ok(1.0);
    }
    let c = p.half_mu2() * a;
    let survival = FRAC_2_PI * tail_integral_raw(c, angle(a, p.t), cfg)?;
    Ok((1.0 - survival).clamp(0.0, 1.0))
}

/// `log P(T >= z)` for `z` in `[0, t]`, with `exp(-mu^2 z / 2)` carried
/// analytically. Negative infinity at `z = t`.
pub fn last_zero_log_survival(p: &DriftedBMParams, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(0.0..=p.t).contains(&z) {
        return Err(Error::domain(
            "z",
            format!("must lie in [0, t] = [0, {}], got {z}", p.t),
        ));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == p.t {
        return Ok(f64::NEG_INFINITY);
    }
    let c = p.half_mu2() * z;
    let k = tail_integral_factored(c, angle(z, p.t), cfg)?;
    Ok(-c + (FRAC_2_PI * k).ln())
}

/// Density of `T`. Zero outside `[0, t]` and `+inf` at both endpoints.
///
/// The inner integral over `y in [a, t]` is evaluated through `y = a + u^2`,
/// which removes its `1/sqrt(y - a)` singularity.
pub fn last_zero_pdf(p: &DriftedBMParams, a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if a.is_nan() {
        return Err(Error::domain("a", "must not be NaN"));
    }
    if a < 0.0 || a > p.t {
        return Ok(0.0);
    }
    if a == 0.0 || a == p.t {
        return Ok(f64::INFINITY);
    }
    let h = p.half_mu2();
    let t = p.t;
    let boundary = (-h * t).exp() / (PI * (a * (t - a)).sqrt());
    let upper = (t - a).sqrt();
    let inner = integrate_spike(
        |u: f64| (-h * (a + u * u)).exp(),
        h.sqrt().recip(),
        upper,
        cfg,
    )?;
    let interior = p.mu * p.mu / (PI * a.sqrt()) * inner;
    Ok(boundary + interior)
}

/// `(1 - e^{-x}) / x`, continuous at 0.
fn phi1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(1 - e^{-x}(1 + x)) / x^2`, continuous at 0.
fn phi2(x: f64) -> f64 {
    if x < 0.1 {
        // sum_{n>=2} (-1)^n (n-1) x^(n-2) / n!
        let mut sum = 0.0;
        let mut fact = 2.0;
        let mut pow = 1.0;
        for n in 2..20u32 {
            if n > 2 {
                fact *= n as f64;
                pow *= -x;
            }
            sum += (n - 1) as f64 * pow / fact;
        }
        sum
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// `E[T] = (1 - exp(-mu^2 t / 2)) / mu^2`.
pub fn last_zero_mean(p: &DriftedBMParams) -> f64 {
    let x = p.half_mu2() * p.t;
    0.5 * p.t * phi1(x)
}

/// `Var[T]` from `E[T^2] = (3/4) int_0^t a exp(-mu^2 a / 2) da`.
///
/// Written in terms of `x = mu^2 t / 2` so neither the small-drift nor the
/// large-drift regime cancels catastrophically.
pub fn last_zero_variance(p: &DriftedBMParams) -> f64 {
    let x = p.half_mu2() * p.t;
    let g1 = phi1(x);
    p.t * p.t * (0.75 * phi2(x) - 0.25 * g1 * g1)
}

/// Probability that the path has a zero in the window `[a, b]`.
pub fn crossing_probability(mu: f64, w: &CrossingWindow, cfg: &QuadratureConfig) -> Result<f64> {
    require_nonzero_drift(mu)?;
    let c = 0.5 * mu * mu * w.a;
    let psi = FRAC_2_PI * tail_integral_raw(c, angle(w.a, w.b), cfg)?;
    Ok(psi.clamp(0.0, 1.0))
}

/// Splits `log Psi` into `(-mu^2 a / 2, log((2/pi) K))` where `K` is the
/// factored tail integral.
pub(crate) fn crossing_log_parts(
    mu: f64,
    w: &CrossingWindow,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    require_nonzero_drift(mu)?;
    let c = 0.5 * mu * mu * w.a;
    let k = tail_integral_factored(c, angle(w.a, w.b), cfg)?;
    Ok((-c, (FRAC_2_PI * k).ln()))
}

/// `log Psi` for the window, finite for arbitrarily large `mu^2 a`.
pub fn crossing_log_probability(
    mu: f64,
    w: &CrossingWindow,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let (exponent, log_prefactor) = crossing_log_parts(mu, w, cfg)?;
    Ok(exponent + log_prefactor)
}

/// Distribution function of the limit law.
pub fn limit_law_cdf(law: &LimitLaw, a: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if a.is_nan() {
        return Err(Error::domain("a", "must not be NaN"));
    }
    if a <= 0.0 {
        return Ok(0.0);
    }
    let c = 0.5 * law.mu * law.mu * a;
    let decay = (-c).exp();
    if decay == 0.0 {
        return Ok(1.0);
    }
    let k = integrate_semi_infinite(|y: f64| (-c * y * y).exp() / (1.0 + y * y), 0.0, cfg)?
        .into_value(0.0, f64::INFINITY)?;
    Ok((1.0 - decay * FRAC_2_PI * k).clamp(0.0, 1.0))
}

/// `E[Y] = 1 / mu^2`.
pub fn limit_law_mean(law: &LimitLaw) -> f64 {
    1.0 / (law.mu * law.mu)
}

/// `Var[Y] = 2 / mu^4`.
pub fn limit_law_variance(law: &LimitLaw) -> f64 {
    2.0 / law.mu.powi(4)
}
