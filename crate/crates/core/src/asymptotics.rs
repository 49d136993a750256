//! Numerical scans of the deviation limits along `r`, for drift `mu sqrt(r)`.
//!
//! * `ldp_scan`: `(1/r) log P(T >= z) -> -mu^2 z / 2`.
//! * `md_scan`: `gamma_r log P(r gamma_r T >= z) -> -mu^2 z / 2` for
//!   `gamma_r = r^(-beta)`, `0 < beta < 1`.
//! * `crossing_scan`: `(1/r) log Psi -> -mu^2 a / 2` and
//!   `exp(mu^2 r a / 2) sqrt(r) Psi -> sqrt(2 / (pi mu^2 a))`.
//!
//! Every row is computed from the log-domain tail functions, so the scans stay
//! finite far past the point where the probabilities underflow.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{
    crossing_log_parts, last_zero_log_survival, CrossingWindow, DriftedBMParams,
};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;

/// `ldp_scan` at `z = t` evaluates `P(T >= t (1 - TOP_OFFSET))`, because
/// `P(T >= t)` itself is zero.
pub const TOP_OFFSET: f64 = 1e-9;

/// Magnitude below which a second difference counts as zero.
const DELTA2_FLOOR: f64 = 1e-14;

/// Power-law moderate scale `gamma_r = r^(-beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModerateScale {
    beta: f64,
}

impl ModerateScale {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta < 1.0 {
            Ok(ModerateScale { beta })
        } else {
            Err(Error::domain(
                "beta",
                format!("must lie in (0, 1), got {beta}"),
            ))
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self, r: f64) -> f64 {
        r.powf(-self.beta)
    }

    /// The speed `1 / gamma_r`.
    pub fn speed(&self, r: f64) -> f64 {
        r.powf(self.beta)
    }
}

/// Geometric grid of `points` values from `r_min` to `r_max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RGrid {
    r_min: f64,
    r_max: f64,
    points: usize,
}

impl RGrid {
    pub fn new(r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min.is_finite()) {
            return Err(Error::domain(
                "r_min",
                format!("must be finite and > 0, got {r_min}"),
            ));
        }
        if !(r_max > r_min && r_max.is_finite()) {
            return Err(Error::domain(
                "r_max",
                format!("must be finite and > r_min, got {r_max}"),
            ));
        }
        if points < 2 {
            return Err(Error::domain(
                "r_points",
                format!("must be >= 2, got {points}"),
            ));
        }
        Ok(RGrid {
            r_min,
            r_max,
            points,
        })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        let log_ratio = (self.r_max / self.r_min).ln();
        (0..self.points)
            .map(|k| match k {
                0 => self.r_min,
                k if k == self.points - 1 => self.r_max,
                k => self.r_min * (log_ratio * k as f64 / last).exp(),
            })
            .collect()
    }
}

impl Default for RGrid {
    fn default() -> Self {
        RGrid {
            r_min: 10.0,
            r_max: 1e4,
            points: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanKind {
    Ldp,
    ModerateDeviation,
    Crossing,
}

/// Second limit of the crossing scan, alongside the first in `ScanRow`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondaryColumns {
    pub scaled: f64,
    pub theory: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub r: f64,
    /// Log of the probability being scaled.
    pub raw_log: f64,
    /// `raw_log` divided by the speed.
    pub scaled: f64,
    pub theory: f64,
    pub abs_err: f64,
    pub secondary: Option<SecondaryColumns>,
}

impl ScanRow {
    fn new(r: f64, raw_log: f64, scaled: f64, theory: f64) -> Self {
        ScanRow {
            r,
            raw_log,
            scaled,
            theory,
            abs_err: (scaled - theory).abs(),
            secondary: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub kind: ScanKind,
    /// Ordered by increasing `r`.
    pub rows: Vec<ScanRow>,
    /// Extrapolated limit of the `scaled` column.
    pub extrapolated: f64,
    /// Extrapolated limit of the secondary column, when present.
    pub extrapolated_secondary: Option<f64>,
    /// Grid values that were not admissible for this scan.
    pub skipped: Vec<f64>,
    /// Parameter echo.
    pub meta: BTreeMap<String, f64>,
}

impl ScanTable {
    fn assemble(
        kind: ScanKind,
        rows: Vec<ScanRow>,
        skipped: Vec<f64>,
        meta: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let scaled: Vec<f64> = rows.iter().map(|row| row.scaled).collect();
        let extrapolated = extrapolate_or_last(&scaled);
        let extrapolated_secondary = rows
            .iter()
            .map(|row| row.secondary.map(|s| s.scaled))
            .collect::<Option<Vec<f64>>>()
            .map(|col| extrapolate_or_last(&col));
        Ok(ScanTable {
            kind,
            rows,
            extrapolated,
            extrapolated_secondary,
            skipped,
            meta,
        })
    }

    pub fn last(&self) -> &ScanRow {
        self.rows.last().expect("scan tables are never empty")
    }
}

fn extrapolate_or_last(values: &[f64]) -> f64 {
    accelerate(values).unwrap_or_else(|_| *values.last().expect("non-empty"))
}

fn delta2(x0: f64, x1: f64, x2: f64) -> f64 {
    let d = x2 - 2.0 * x1 + x0;
    if d.abs() < DELTA2_FLOOR {
        return x2;
    }
    // Only a contracting sequence has a limit for the step to estimate.
    let ratio = (x2 - x1) / (x1 - x0);
    if !(ratio.abs() < 1.0) {
        return x2;
    }
    x2 - (x2 - x1) * (x2 - x1) / d
}

/// Iterated Aitken delta-squared over the last (up to five) values of a sequence.
///
/// Three values get one pass. Five values get a pass that yields three
/// accelerated values and a second pass over those, which also removes the
/// logarithmic drift in the correction terms of these scans. Falls back to the
/// last value of a pass whenever a second difference vanishes.
pub fn accelerate(values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::domain(
            "rows",
            format!(
                "extrapolation needs at least 3 values, got {}",
                values.len()
            ),
        ));
    }
    let mut seq: Vec<f64> = values[values.len().saturating_sub(5)..].to_vec();
    while seq.len() >= 3 {
        seq = seq.windows(3).map(|w| delta2(w[0], w[1], w[2])).collect();
    }
    Ok(*seq.last().expect("at least one value remains"))
}

/// Extrapolated limit of the `scaled` column of a table.
pub fn extrapolate_limit(table: &ScanTable) -> Result<f64> {
    let scaled: Vec<f64> = table.rows.iter().map(|row| row.scaled).collect();
    accelerate(&scaled)
}

fn collect_rows<F>(rs: &[f64], row: F) -> Result<Vec<Option<ScanRow>>>
where
    F: Fn(f64) -> Result<Option<ScanRow>> + Sync,
{
    rs.par_iter().map(|&r| row(r)).collect()
}

fn base_meta(mu: f64, grid: &RGrid) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("mu".to_string(), mu),
        ("r_min".to_string(), grid.r_min),
        ("r_max".to_string(), grid.r_max),
        ("r_points".to_string(), grid.points as f64),
    ])
}

/// `(1/r) log P(T >= z)` under drift `mu sqrt(r)`, against `-mu^2 z / 2`.
pub fn ldp_scan(
    mu: f64,
    t: f64,
    z: f64,
    grid: &RGrid,
    cfg: &QuadratureConfig,
) -> Result<ScanTable> {
    DriftedBMParams::new(mu, t)?;
    if !(z > 0.0 && z <= t) {
        return Err(Error::domain(
            "z",
            format!("must lie in (0, t] = (0, {t}], got {z}"),
        ));
    }
    let z_eval = if z == t { t * (1.0 - TOP_OFFSET) } else { z };
    let theory = -0.5 * mu * mu * z;
    let rows = collect_rows(&grid.values(), |r| {
        let p = DriftedBMParams::scaled(mu, r, t)?;
        let raw_log = last_zero_log_survival(&p, z_eval, cfg)?;
        Ok(Some(ScanRow::new(r, raw_log, raw_log / r, theory)))
    })?;
    let mut meta = base_meta(mu, grid);
    meta.insert("t".into(), t);
    meta.insert("z".into(), z);
    ScanTable::assemble(
        ScanKind::Ldp,
        rows.into_iter().flatten().collect(),
        Vec::new(),
        meta,
    )
}

/// `gamma_r log P(r gamma_r T >= z)` under drift `mu sqrt(r)`, against
/// `-mu^2 z / 2`. Grid values with `z / (r gamma_r) >= t` are skipped.
pub fn md_scan(
    mu: f64,
    t: f64,
    z: f64,
    scale: &ModerateScale,
    grid: &RGrid,
    cfg: &QuadratureConfig,
) -> Result<ScanTable> {
    DriftedBMParams::new(mu, t)?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::domain(
            "z",
            format!("must be finite and > 0, got {z}"),
        ));
    }
    let theory = -0.5 * mu * mu * z;
    let rs = grid.values();
    let rows = collect_rows(&rs, |r| {
        let gamma = scale.gamma(r);
        let threshold = z / (r * gamma);
        if threshold >= t {
            return Ok(None);
        }
        let p = DriftedBMParams::scaled(mu, r, t)?;
        let raw_log = last_zero_log_survival(&p, threshold, cfg)?;
        Ok(Some(ScanRow::new(r, raw_log, gamma * raw_log, theory)))
    })?;
    let skipped: Vec<f64> = rs
        .iter()
        .zip(&rows)
        .filter(|(_, row)| row.is_none())
        .map(|(&r, _)| r)
        .collect();
    let rows: Vec<ScanRow> = rows.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(Error::domain(
            "r_max",
            format!("no grid value satisfies z / (r gamma_r) < t (z = {z}, t = {t})"),
        ));
    }
    let mut meta = base_meta(mu, grid);
    meta.insert("t".into(), t);
    meta.insert("z".into(), z);
    meta.insert("beta".into(), scale.beta);
    ScanTable::assemble(ScanKind::ModerateDeviation, rows, skipped, meta)
}

/// Both crossing-probability limits for the window `w` under drift `mu sqrt(r)`.
pub fn crossing_scan(
    mu: f64,
    w: &CrossingWindow,
    grid: &RGrid,
    cfg: &QuadratureConfig,
) -> Result<ScanTable> {
    DriftedBMParams::new(mu, w.b())?;
    let theory = -0.5 * mu * mu * w.a();
    let theory2 = (2.0 / (PI * mu * mu * w.a())).sqrt();
    let rows = collect_rows(&grid.values(), |r| {
        let (exponent, log_prefactor) = crossing_log_parts(mu * r.sqrt(), w, cfg)?;
        let raw_log = exponent + log_prefactor;
        let scaled2 = (log_prefactor + 0.5 * r.ln()).exp();
        let mut row = ScanRow::new(r, raw_log, raw_log / r, theory);
        row.secondary = Some(SecondaryColumns {
            scaled: scaled2,
            theory: theory2,
            abs_err: (scaled2 - theory2).abs(),
        });
        Ok(Some(row))
    })?;
    let mut meta = base_meta(mu, grid);
    meta.insert("a".into(), w.a());
    meta.insert("b".into(), w.b());
    ScanTable::assemble(
        ScanKind::Crossing,
        rows.into_iter().flatten().collect(),
        Vec::new(),
        meta,
    )
}
