//! One function per subcommand: arguments in, table plus manifest extras out.

use lastzero_core::*;
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::output::{Cell, Table};

pub struct Run {
    pub table: Table,
    /// Extra manifest entries (seed, skipped grid values, ...).
    pub extras: Map<String, Value>,
}

impl Run {
    fn plain(table: Table) -> Self {
        Run {
            table,
            extras: Map::new(),
        }
    }

    fn seeded(table: Table, seed: RngSeed) -> Self {
        let mut extras = Map::new();
        extras.insert(
            "seed".into(),
            json!({ "seed": seed.seed, "stream_id": seed.stream_id }),
        );
        Run { table, extras }
    }
}

pub fn execute(cmd: &Command, q: &QuadratureConfig) -> Result<Run> {
    match cmd {
        Command::Cdf(a) => cdf(a, q),
        Command::Pdf(a) => pdf(a, q),
        Command::Moments(a) => moments(a),
        Command::Crossing(a) => crossing(a, q),
        Command::LimitLaw(a) => limit_law(a, q),
        Command::Sample(a) => sample(a, q),
        Command::Mc(a) => mc(a, q),
        Command::Ldp(a) => ldp(a, q),
        Command::Md(a) => md(a, q),
        Command::CrossingScan(a) => crossing_scan_cmd(a, q),
    }
}

fn points(args: &PointArgs) -> Result<Vec<f64>> {
    match (args.a, args.grid) {
        (Some(a), _) => Ok(vec![a]),
        (None, Some(n)) if n >= 2 => Ok((0..n)
            .map(|k| {
                if k == n - 1 {
                    args.t
                } else {
                    args.t * k as f64 / (n - 1) as f64
                }
            })
            .collect()),
        (None, n) => Err(Error::Domain {
            name: "grid",
            message: format!("must be >= 2, got {}", n.unwrap_or(0)),
        }),
    }
}

fn cdf(args: &PointArgs, q: &QuadratureConfig) -> Result<Run> {
    let p = DriftedBMParams::new(args.mu, args.t)?;
    let mut table = Table::new(&["a", "cdf", "survival", "log_survival"]);
    for a in points(args)? {
        let value = last_zero_cdf(&p, a, q)?;
        let log_s = if a < 0.0 {
            0.0
        } else if a > p.t() {
            f64::NEG_INFINITY
        } else {
            last_zero_log_survival(&p, a, q)?
        };
        table.push(vec![
            a.into(),
            value.into(),
            Cell::prob_from_log(log_s),
            log_s.into(),
        ]);
    }
    Ok(Run::plain(table))
}

fn pdf(args: &PointArgs, q: &QuadratureConfig) -> Result<Run> {
    let p = DriftedBMParams::new(args.mu, args.t)?;
    let mut table = Table::new(&["a", "pdf"]);
    for a in points(args)? {
        table.push(vec![a.into(), last_zero_pdf(&p, a, q)?.into()]);
    }
    Ok(Run::plain(table))
}

fn moments(args: &MomentsArgs) -> Result<Run> {
    if !(args.r > 0.0 && args.r.is_finite()) {
        return Err(Error::Domain {
            name: "r",
            message: format!("must be finite and > 0, got {}", args.r),
        });
    }
    let p = DriftedBMParams::scaled(args.mu, args.r, args.t)?;
    let var = last_zero_variance(&p);
    let mut table = Table::new(&["mu", "t", "r", "mean", "variance", "r2_variance"]);
    table.push(vec![
        args.mu.into(),
        args.t.into(),
        args.r.into(),
        last_zero_mean(&p).into(),
        var.into(),
        (args.r * args.r * var).into(),
    ]);
    Ok(Run::plain(table))
}

fn crossing(args: &CrossingArgs, q: &QuadratureConfig) -> Result<Run> {
    let w = CrossingWindow::new(args.a, args.b)?;
    let log_psi = crossing_log_probability(args.mu, &w, q)?;
    let psi = if log_psi < crate::output::LOG_FLOOR {
        Cell::Empty
    } else {
        // The direct form is exact where it does not underflow.
        crossing_probability(args.mu, &w, q)?.into()
    };
    let mut table = Table::new(&["a", "b", "psi", "log_psi"]);
    table.push(vec![args.a.into(), args.b.into(), psi, log_psi.into()]);
    Ok(Run::plain(table))
}

fn limit_law(args: &LimitLawArgs, q: &QuadratureConfig) -> Result<Run> {
    let law = LimitLaw::new(args.mu)?;
    let (a, g) = match args.a {
        Some(a) => (Cell::Real(a), Cell::Real(limit_law_cdf(&law, a, q)?)),
        None => (Cell::Empty, Cell::Empty),
    };
    let mut table = Table::new(&["a", "cdf", "mean", "variance"]);
    table.push(vec![
        a,
        g,
        limit_law_mean(&law).into(),
        limit_law_variance(&law).into(),
    ]);
    Ok(Run::plain(table))
}

fn sample(args: &SampleArgs, q: &QuadratureConfig) -> Result<Run> {
    let seed = RngSeed::new(args.seed, args.stream);
    let values = if args.limit_law {
        let law = LimitLaw::new(args.mu)?;
        sample_limit_law(&law, args.n, seed, &RootFindConfig::default(), q)?
    } else {
        let t = args.t.expect("clap requires --t without --limit-law");
        let p = DriftedBMParams::new(args.mu, t)?;
        sample_last_zero(&p, args.n, seed, &RootFindConfig::for_scale(t), q)?
    };
    let mut table = Table::new(&["index", "value"]);
    for (i, v) in values.into_iter().enumerate() {
        table.push(vec![Cell::Int(i as u64), v.into()]);
    }
    Ok(Run::seeded(table, seed))
}

fn mc(args: &McArgs, q: &QuadratureConfig) -> Result<Run> {
    let seed = RngSeed::new(args.seed, args.stream);
    let cfg = McConfig::new(args.n_paths, args.dt, seed, !args.no_bridge)?;
    let p = DriftedBMParams::new(args.mu, args.t)?;
    let (quantity, a, b, est, exact) = match (&args.crossing, args.cdf_at) {
        (Some(ab), _) => {
            let w = CrossingWindow::new(ab[0], ab[1])?;
            let est = estimate_crossing(args.mu, &w, p.t(), &cfg)?;
            let exact = crossing_probability(args.mu, &w, q)?;
            ("crossing", ab[0], Cell::Real(ab[1]), est, exact)
        }
        (None, Some(a)) => {
            let est = estimate_last_zero_cdf(&p, a, &cfg)?;
            ("cdf", a, Cell::Empty, est, last_zero_cdf(&p, a, q)?)
        }
        (None, None) => unreachable!("clap requires --cdf-at or --crossing"),
    };
    let mut table = Table::new(&[
        "quantity", "a", "b", "p_hat", "stderr", "n_paths", "dt", "bridge", "exact", "z_score",
    ]);
    table.push(vec![
        Cell::Text(quantity.into()),
        a.into(),
        b,
        est.p_hat.into(),
        est.stderr.into(),
        Cell::Int(est.n),
        args.dt.into(),
        Cell::Text((!args.no_bridge).to_string()),
        exact.into(),
        est.z_score(exact).into(),
    ]);
    Ok(Run::seeded(table, seed))
}

fn grid(args: &GridArgs) -> Result<RGrid> {
    RGrid::new(args.r_min, args.r_max, args.r_points)
}

fn scan_table(
    scan: &ScanTable,
    columns: &'static [&'static str],
    gamma: Option<&ModerateScale>,
) -> Table {
    let mut table = Table::new(columns);
    for row in &scan.rows {
        let mut cells: Vec<Cell> = vec![row.r.into()];
        if let Some(scale) = gamma {
            cells.push(scale.gamma(row.r).into());
        }
        cells.extend([
            row.raw_log.into(),
            row.scaled.into(),
            row.theory.into(),
            row.abs_err.into(),
            scan.extrapolated.into(),
        ]);
        if let Some(s) = row.secondary {
            cells.extend([
                s.scaled.into(),
                s.theory.into(),
                s.abs_err.into(),
                scan.extrapolated_secondary.into(),
            ]);
        }
        table.push(cells);
    }
    table
}

fn ldp(args: &LdpArgs, q: &QuadratureConfig) -> Result<Run> {
    let scan = ldp_scan(args.mu, args.t, args.z, &grid(&args.grid)?, q)?;
    Ok(Run::plain(scan_table(
        &scan,
        &[
            "r",
            "raw_log",
            "scaled",
            "theory",
            "abs_err",
            "extrapolated",
        ],
        None,
    )))
}

fn md(args: &MdArgs, q: &QuadratureConfig) -> Result<Run> {
    let scale = ModerateScale::new(args.beta)?;
    let scan = md_scan(args.mu, args.t, args.z, &scale, &grid(&args.grid)?, q)?;
    let mut run = Run::plain(scan_table(
        &scan,
        &[
            "r",
            "gamma",
            "raw_log",
            "scaled",
            "theory",
            "abs_err",
            "extrapolated",
        ],
        Some(&scale),
    ));
    run.extras.insert("skipped_r".into(), json!(scan.skipped));
    Ok(run)
}

fn crossing_scan_cmd(args: &CrossingScanArgs, q: &QuadratureConfig) -> Result<Run> {
    let w = CrossingWindow::new(args.a, args.b)?;
    let scan = crossing_scan(args.mu, &w, &grid(&args.grid)?, q)?;
    Ok(Run::plain(scan_table(
        &scan,
        &[
            "r",
            "raw_log",
            "scaled",
            "theory",
            "abs_err",
            "extrapolated",
            "scaled2",
            "theory2",
            "abs_err2",
            "extrapolated2",
        ],
        None,
    )))
}
