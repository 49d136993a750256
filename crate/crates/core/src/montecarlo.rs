//! Monte Carlo oracle for the last zero and for window crossings.
//!
//! Paths are Euler walks `x_{k+1} = x_k + mu h + sqrt(h) N(0, 1)` from `x_0 = 0`
//! on a uniform grid. The step is `h = horizon / round(horizon / dt)`, so the
//! grid always ends exactly at the horizon. Zeros between grid points are
//! detected with the Brownian-bridge hitting probability; a registered
//! interval reports its midpoint.
//!
//! Random stream layout, per path `i`: the generator of `McConfig::seed` is
//! positioned at word `i << 32`; all increment normals are drawn first, in
//! time order, then one uniform per bridge test while scanning backward. A
//! bridge test whose probability is below `exp(-BRIDGE_CUTOFF)` (less than
//! the smallest uniform the generator can emit) fails without a draw.
//! Each path therefore depends only on `(seed, i)`, and counts are summed as
//! integers, so estimates do not depend on the number of worker threads.

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{CrossingWindow, DriftedBMParams};
use crate::error::{Error, Result};
use crate::sampling::{open_unit, RngSeed};

/// Paths per parallel work item.
const PATH_BLOCK: u64 = 256;

/// `exp(-37) < 2^-53`, below every value `open_unit` returns.
const BRIDGE_CUTOFF: f64 = 37.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: u64,
    pub dt: f64,
    pub seed: RngSeed,
    pub bridge_correction: bool,
}

impl McConfig {
    pub fn new(n_paths: u64, dt: f64, seed: RngSeed, bridge_correction: bool) -> Result<Self> {
        let cfg = McConfig {
            n_paths,
            dt,
            seed,
            bridge_correction,
        };
        if n_paths < 100 {
            return Err(Error::domain(
                "n_paths",
                format!("must be >= 100, got {n_paths}"),
            ));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(
                "dt",
                format!("must be finite and > 0, got {dt}"),
            ));
        }
        Ok(cfg)
    }

    fn grid(&self, horizon: f64) -> Result<Grid> {
        if self.n_paths < 100 {
            return Err(Error::domain(
                "n_paths",
                format!("must be >= 100, got {}", self.n_paths),
            ));
        }
        if !(self.dt > 0.0 && self.dt <= horizon / 10.0) {
            return Err(Error::domain(
                "dt",
                format!(
                    "must satisfy 0 < dt <= horizon / 10 = {}, got {}",
                    horizon / 10.0,
                    self.dt
                ),
            ));
        }
        let steps = (horizon / self.dt).round().max(1.0) as usize;
        Ok(Grid {
            steps,
            h: horizon / steps as f64,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    steps: usize,
    h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub n: u64,
}

impl McEstimate {
    pub fn from_count(hits: u64, n: u64) -> Self {
        let p_hat = hits as f64 / n as f64;
        McEstimate {
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
            n,
        }
    }

    /// `(p_hat - reference) / stderr`; infinite when stderr is 0 and they differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = self.p_hat - reference;
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Probability that a unit-variance Brownian bridge over time `dt` from `x0`
/// to `x1` touches zero.
pub fn bridge_cross_prob(x0: f64, x1: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::domain("dt", format!("must be > 0, got {dt}")));
    }
    if x0 * x1 <= 0.0 {
        Ok(1.0)
    } else {
        Ok((-2.0 * x0 * x1 / dt).exp())
    }
}

fn path_rng(seed: &RngSeed, path: u64) -> ChaCha8Rng {
    seed.rng_at((path as u128) << 32)
}

/// Fills `xs[0..=steps]` with one Euler path.
fn walk(mu: f64, grid: Grid, rng: &mut ChaCha8Rng, xs: &mut Vec<f64>) {
    xs.clear();
    xs.reserve(grid.steps + 1);
    let drift = mu * grid.h;
    let sd = grid.h.sqrt();
    let mut x = 0.0;
    xs.push(x);
    for _ in 0..grid.steps {
        let z: f64 = rng.sample(StandardNormal);
        x += drift + sd * z;
        xs.push(x);
    }
}

/// Whether interval `[k h, (k+1) h]` registers a zero.
#[inline]
fn registers(xs: &[f64], k: usize, h: f64, bridge: bool, rng: &mut ChaCha8Rng) -> bool {
    let (x0, x1) = (xs[k], xs[k + 1]);
    let prod = x0 * x1;
    if prod <= 0.0 {
        return true;
    }
    if !bridge {
        return false;
    }
    let exponent = 2.0 * prod / h;
    exponent < BRIDGE_CUTOFF && open_unit(rng.next_u64()) < (-exponent).exp()
}

fn last_zero_of_path(xs: &[f64], grid: Grid, bridge: bool, rng: &mut ChaCha8Rng) -> f64 {
    // Interval 0 starts at the origin and says nothing beyond the zero at 0.
    for k in (1..grid.steps).rev() {
        if registers(xs, k, grid.h, bridge, rng) {
            return (k as f64 + 0.5) * grid.h;
        }
    }
    0.0
}

fn for_paths<T, F>(n_paths: u64, per_block: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>, &mut Vec<f64>) -> T + Sync,
{
    let starts: Vec<u64> = (0..n_paths).step_by(PATH_BLOCK as usize).collect();
    starts
        .par_iter()
        .map_init(Vec::new, |buf, &start| {
            per_block(start..(start + PATH_BLOCK).min(n_paths), buf)
        })
        .collect()
}

/// Last-zero time of each simulated path, in path order.
pub fn simulate_last_zero(p: &DriftedBMParams, cfg: &McConfig) -> Result<Vec<f64>> {
    let grid = cfg.grid(p.t())?;
    let blocks = for_paths(cfg.n_paths, |paths, xs| {
        paths
            .map(|i| {
                let mut rng = path_rng(&cfg.seed, i);
                walk(p.mu(), grid, &mut rng, xs);
                last_zero_of_path(xs, grid, cfg.bridge_correction, &mut rng)
            })
            .collect::<Vec<f64>>()
    });
    Ok(blocks.into_iter().flatten().collect())
}

/// Full trajectory of path `path` on the simulation grid (debugging aid).
pub fn simulate_trajectory(p: &DriftedBMParams, cfg: &McConfig, path: u64) -> Result<Vec<f64>> {
    let grid = cfg.grid(p.t())?;
    let mut xs = Vec::new();
    walk(p.mu(), grid, &mut path_rng(&cfg.seed, path), &mut xs);
    Ok(xs)
}

/// Fraction of paths whose last zero is at most `a`.
pub fn estimate_last_zero_cdf(p: &DriftedBMParams, a: f64, cfg: &McConfig) -> Result<McEstimate> {
    if !(0.0..=p.t()).contains(&a) {
        return Err(Error::domain(
            "a",
            format!("must lie in [0, t] = [0, {}], got {a}", p.t()),
        ));
    }
    let grid = cfg.grid(p.t())?;
    let counts = for_paths(cfg.n_paths, |paths, xs| {
        paths
            .filter(|&i| {
                let mut rng = path_rng(&cfg.seed, i);
                walk(p.mu(), grid, &mut rng, xs);
                last_zero_of_path(xs, grid, cfg.bridge_correction, &mut rng) <= a
            })
            .count() as u64
    });
    Ok(McEstimate::from_count(counts.iter().sum(), cfg.n_paths))
}

/// Both arms of the bridge correction evaluated on the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeComparison {
    pub with_bridge: McEstimate,
    pub without_bridge: McEstimate,
}

/// `estimate_last_zero_cdf` with and without the bridge correction from one
/// set of paths. The uncorrected scan draws no uniforms, so each arm equals
/// the corresponding single-arm estimate for the same seed.
pub fn compare_bridge_last_zero_cdf(
    p: &DriftedBMParams,
    a: f64,
    cfg: &McConfig,
) -> Result<BridgeComparison> {
    if !(0.0..=p.t()).contains(&a) {
        return Err(Error::domain(
            "a",
            format!("must lie in [0, t] = [0, {}], got {a}", p.t()),
        ));
    }
    let grid = cfg.grid(p.t())?;
    let counts = for_paths(cfg.n_paths, |paths, xs| {
        let (mut on, mut off) = (0u64, 0u64);
        for i in paths {
            let mut rng = path_rng(&cfg.seed, i);
            walk(p.mu(), grid, &mut rng, xs);
            off += (last_zero_of_path(xs, grid, false, &mut rng) <= a) as u64;
            on += (last_zero_of_path(xs, grid, true, &mut rng) <= a) as u64;
        }
        (on, off)
    });
    let (on, off) = counts
        .iter()
        .fold((0, 0), |(a0, b0), &(a1, b1)| (a0 + a1, b0 + b1));
    Ok(BridgeComparison {
        with_bridge: McEstimate::from_count(on, cfg.n_paths),
        without_bridge: McEstimate::from_count(off, cfg.n_paths),
    })
}

/// Fraction of paths with at least one registered zero in a grid interval
/// contained in `[a, b]`. Paths are simulated up to the last such interval.
pub fn estimate_crossing(
    mu: f64,
    w: &CrossingWindow,
    horizon: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    if !(horizon >= w.b()) {
        return Err(Error::domain(
            "t",
            format!("horizon {horizon} must be >= window end {}", w.b()),
        ));
    }
    let p = DriftedBMParams::new(mu, horizon)?;
    let grid = cfg.grid(horizon)?;
    let slack = 1e-9;
    let first = (w.a() / grid.h - slack).ceil().max(1.0) as usize;
    let end = ((w.b() / grid.h + slack).floor() as usize).min(grid.steps);
    if end <= first {
        return Ok(McEstimate::from_count(0, cfg.n_paths));
    }
    let window_grid = Grid {
        steps: end,
        h: grid.h,
    };
    let counts = for_paths(cfg.n_paths, |paths, xs| {
        paths
            .filter(|&i| {
                let mut rng = path_rng(&cfg.seed, i);
                walk(p.mu(), window_grid, &mut rng, xs);
                (first..end)
                    .rev()
                    .any(|k| registers(xs, k, grid.h, cfg.bridge_correction, &mut rng))
            })
            .count() as u64
    });
    Ok(McEstimate::from_count(counts.iter().sum(), cfg.n_paths))
}
