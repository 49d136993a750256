//! Inverse-transform sampling of `T` and of the limit law `Y`.
//!
//! Uniform source: ChaCha8 keyed by `seed` (expanded with `seed_from_u64`),
//! with the ChaCha stream selected by `stream_id`. The generator is
//! counter-based, so variate `i` of a sample always consumes 64-bit word `i`
//! of the stream (32-bit words `2i` and `2i+1`) regardless of how the index
//! range is split across workers. Monte Carlo paths use the same key and
//! stream but start at word offset `path << 32`; see `montecarlo`.

use std::ops::Range;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{last_zero_cdf, limit_law_cdf, DriftedBMParams, LimitLaw};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;

/// Variates per parallel work item.
const BLOCK: u64 = 4096;

/// Largest CDF increment allowed between neighbouring table nodes.
const TABLE_STEP: f64 = 1.0 / 256.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngSeed { seed, stream_id }
    }

    /// Generator positioned at 32-bit word `word_pos` of this stream.
    pub fn rng_at(&self, word_pos: u128) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(word_pos);
        rng
    }

    /// Same seed on another stream.
    pub fn substream(&self, stream_id: u64) -> Self {
        RngSeed {
            seed: self.seed,
            stream_id,
        }
    }
}

/// Maps a 64-bit word to the open interval (0, 1).
pub(crate) fn open_unit(word: u64) -> f64 {
    ((word >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootFindConfig {
    pub x_tol: f64,
    pub p_tol: f64,
    pub max_iter: usize,
}

impl RootFindConfig {
    pub fn new(x_tol: f64, p_tol: f64, max_iter: usize) -> Result<Self> {
        let cfg = RootFindConfig {
            x_tol,
            p_tol,
            max_iter,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults with the time tolerance scaled to a horizon (or any length scale).
    pub fn for_scale(scale: f64) -> Self {
        RootFindConfig {
            x_tol: 1e-10 * scale,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_tol > 0.0) {
            return Err(Error::domain("x_tol", "must be > 0"));
        }
        if !(self.p_tol > 0.0) {
            return Err(Error::domain("p_tol", "must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

impl Default for RootFindConfig {
    fn default() -> Self {
        RootFindConfig {
            x_tol: 1e-10,
            p_tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// Solves `cdf(x) = target` inside a bracket with `cdf(lo) <= target <= cdf(hi)`.
///
/// Illinois-modified false position; a bisection step is forced whenever two
/// consecutive steps failed to halve the bracket.
fn solve_bracketed<F>(
    cdf: &F,
    target: f64,
    (mut lo, f_lo): (f64, f64),
    (mut hi, f_hi): (f64, f64),
    cfg: &RootFindConfig,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut g_lo = f_lo - target;
    let mut g_hi = f_hi - target;
    if g_lo.abs() <= cfg.p_tol {
        return Ok(lo);
    }
    if g_hi.abs() <= cfg.p_tol {
        return Ok(hi);
    }
    let mut last_side = 0i8;
    let mut slow_steps = 0;
    for _ in 0..cfg.max_iter {
        let width = hi - lo;
        if width <= cfg.x_tol {
            return Ok(0.5 * (lo + hi));
        }
        let mut x = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if slow_steps >= 2 || !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
            slow_steps = 0;
        }
        let g = cdf(x)? - target;
        if g.abs() <= cfg.p_tol {
            return Ok(x);
        }
        if g < 0.0 {
            lo = x;
            g_lo = g;
            if last_side == -1 {
                g_hi *= 0.5;
            }
            last_side = -1;
        } else {
            hi = x;
            g_hi = g;
            if last_side == 1 {
                g_lo *= 0.5;
            }
            last_side = 1;
        }
        if hi - lo > 0.5 * width {
            slow_steps += 1;
        } else {
            slow_steps = 0;
        }
    }
    if hi - lo <= cfg.x_tol {
        return Ok(0.5 * (lo + hi));
    }
    Err(Error::RootNonConvergence {
        iterations: cfg.max_iter,
        target,
    })
}

fn check_prob(prob: f64) -> Result<()> {
    if (0.0..=1.0).contains(&prob) {
        Ok(())
    } else {
        Err(Error::domain(
            "prob",
            format!("must lie in [0, 1], got {prob}"),
        ))
    }
}

/// The `prob`-quantile of `T`.
pub fn quantile(
    p: &DriftedBMParams,
    prob: f64,
    cfg: &RootFindConfig,
    qcfg: &QuadratureConfig,
) -> Result<f64> {
    check_prob(prob)?;
    cfg.validate()?;
    if prob == 0.0 {
        return Ok(0.0);
    }
    if prob == 1.0 {
        return Ok(p.t());
    }
    let cdf = |a: f64| last_zero_cdf(p, a, qcfg);
    solve_bracketed(&cdf, prob, (0.0, 0.0), (p.t(), 1.0), cfg)
}

/// Cached CDF values on a node set fine enough that neighbouring nodes
/// differ by at most `TABLE_STEP` in probability.
struct CdfTable {
    xs: Vec<f64>,
    fs: Vec<f64>,
}

impl CdfTable {
    fn build<F>(cdf: &F, seeds: Vec<f64>, min_width: f64) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let mut seeds = seeds;
        seeds.sort_by(f64::total_cmp);
        seeds.dedup();
        let mut xs = Vec::with_capacity(seeds.len() * 2);
        let mut fs = Vec::with_capacity(seeds.len() * 2);
        let mut prev: Option<(f64, f64)> = None;
        for x in seeds {
            let f = cdf(x)?;
            if let Some((px, pf)) = prev {
                Self::refine(cdf, (px, pf), (x, f), min_width, &mut xs, &mut fs)?;
            }
            xs.push(x);
            fs.push(f);
            prev = Some((x, f));
        }
        Ok(CdfTable { xs, fs })
    }

    /// Pushes interior nodes of `(left, right)` in increasing order.
    fn refine<F>(
        cdf: &F,
        left: (f64, f64),
        right: (f64, f64),
        min_width: f64,
        xs: &mut Vec<f64>,
        fs: &mut Vec<f64>,
    ) -> Result<()>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if right.1 - left.1 <= TABLE_STEP || right.0 - left.0 <= min_width {
            return Ok(());
        }
        let mid = 0.5 * (left.0 + right.0);
        let fm = cdf(mid)?;
        Self::refine(cdf, left, (mid, fm), min_width, xs, fs)?;
        xs.push(mid);
        fs.push(fm);
        Self::refine(cdf, (mid, fm), right, min_width, xs, fs)
    }

    /// Tightest cached bracket for `target`, if the table covers it.
    fn bracket(&self, target: f64) -> Option<((f64, f64), (f64, f64))> {
        let i = self.fs.partition_point(|&f| f < target);
        if i == 0 || i == self.fs.len() {
            return None;
        }
        let lo = (self.xs[i - 1], self.fs[i - 1]);
        let hi = (self.xs[i], self.fs[i]);
        (lo.1 <= target && target <= hi.1).then_some((lo, hi))
    }
}

/// Draws variates `range` of the inverse-transform sequence of `T`.
///
/// Variate `i` depends only on `(seed, i)`, so splitting `0..n` into
/// consecutive ranges and concatenating reproduces `sample_last_zero`.
pub fn sample_last_zero_range(
    p: &DriftedBMParams,
    range: Range<u64>,
    seed: RngSeed,
    cfg: &RootFindConfig,
    qcfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let t = p.t();
    let cdf = |a: f64| last_zero_cdf(p, a, qcfg);
    // Arcsine-spaced nodes cover both endpoint singularities of the density;
    // the geometric ones resolve the mass near zero under large drift.
    let mut nodes: Vec<f64> = (0..=64)
        .map(|k| t * (0.5 * std::f64::consts::PI * k as f64 / 64.0).sin().powi(2))
        .collect();
    nodes.extend((1..=60).map(|k| t * 0.5f64.powi(k)));
    nodes.push(0.0);
    nodes.push(t);
    let table = CdfTable::build(&cdf, nodes, cfg.x_tol)?;

    let draw = |u: f64| -> Result<f64> {
        match table.bracket(u) {
            Some((lo, hi)) => solve_bracketed(&cdf, u, lo, hi, cfg),
            None => solve_bracketed(&cdf, u, (0.0, 0.0), (t, 1.0), cfg),
        }
    };
    sample_blocks(range, seed, &draw)
}

/// `n` variates of `T` with `last_zero_cdf` as distribution function.
pub fn sample_last_zero(
    p: &DriftedBMParams,
    n: u64,
    seed: RngSeed,
    cfg: &RootFindConfig,
    qcfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("n", "must be >= 1"));
    }
    sample_last_zero_range(p, 0..n, seed, cfg, qcfg)
}

/// `n` variates of the limit law `Y`.
///
/// The upper bracket starts at `1 / mu^2` and doubles until `G` exceeds the
/// largest uniform of the batch.
pub fn sample_limit_law(
    law: &LimitLaw,
    n: u64,
    seed: RngSeed,
    cfg: &RootFindConfig,
    qcfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("n", "must be >= 1"));
    }
    cfg.validate()?;
    let cdf = |a: f64| limit_law_cdf(law, a, qcfg);
    let scale = 1.0 / (law.mu() * law.mu());

    let mut nodes: Vec<f64> = vec![0.0];
    nodes.extend((1..=40).map(|k| scale * 0.5f64.powi(k)));
    let mut hi = scale;
    let mut g_hi = cdf(hi)?;
    nodes.push(hi);
    // Cover everything a 53-bit uniform can reach below 1.
    while g_hi < 1.0 - 1e-15 && hi < scale * 1e6 {
        hi *= 2.0;
        g_hi = cdf(hi)?;
        nodes.push(hi);
    }
    let table = CdfTable::build(&cdf, nodes, cfg.x_tol)?;
    let top = (*table.xs.last().unwrap(), *table.fs.last().unwrap());

    let draw = |u: f64| -> Result<f64> {
        if let Some((lo, hi)) = table.bracket(u) {
            return solve_bracketed(&cdf, u, lo, hi, cfg);
        }
        let (mut lo, mut hi) = (top, top);
        while hi.1 < u {
            lo = hi;
            let x = 2.0 * hi.0;
            hi = (x, cdf(x)?);
            if !x.is_finite() {
                return Err(Error::RootNonConvergence {
                    iterations: 0,
                    target: u,
                });
            }
        }
        solve_bracketed(&cdf, u, lo, hi, cfg)
    };
    sample_blocks(0..n, seed, &draw)
}

fn sample_blocks<D>(range: Range<u64>, seed: RngSeed, draw: &D) -> Result<Vec<f64>>
where
    D: Fn(f64) -> Result<f64> + Sync,
{
    let starts: Vec<u64> = (range.start..range.end).step_by(BLOCK as usize).collect();
    let blocks: Vec<Result<Vec<f64>>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + BLOCK).min(range.end);
            let mut rng = seed.rng_at(2 * start as u128);
            (start..end)
                .map(|_| draw(open_unit(rng.next_u64())))
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity((range.end - range.start) as usize);
    for block in blocks {
        out.extend(block?);
    }
    Ok(out)
}
