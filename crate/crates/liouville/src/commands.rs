//! The three driver commands. Each returns the number of failed rows or
//! reports; configuration problems come back as [`CliError::Config`].

use std::collections::BTreeMap;
use std::io::Write;

use liouville_core::dynamics::{PhaseFunction, PhasePoint};
use liouville_core::hierarchy::{
    d_from_g, evolved_sequence, g_from_d, scattering_cumulant_apply, solve_g, solve_g_chaos, solve_g_via_d,
    CorrelationSequence, EvaluationContext,
};
use liouville_core::verify::{derive_seed, plan, run_cell, sample_configurations, Comparison, PropertyReport, Suite};
use rayon::prelude::*;

use crate::config::{ConfigError, Route, RunConfig};
use crate::CliError;

/// Direction of the `transform` command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Direction {
    #[value(name = "g_to_D")]
    GToD,
    #[value(name = "D_to_g")]
    DToG,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::GToD => "g_to_D",
            Direction::DToG => "D_to_g",
        }
    }
}

/// All configurations of arity `n`: the random ones first, then the explicit
/// ones of matching length, numbered consecutively.
pub fn grid_points(cfg: &RunConfig, n: usize) -> Result<Vec<Vec<PhasePoint>>, CliError> {
    let mut out = Vec::new();
    if cfg.grid.points > 0 {
        let seed = derive_seed(cfg.grid_seed()?, n as u64);
        out = sample_configurations(&cfg.point_proposal(), n, cfg.grid.points, seed).map_err(|e| ConfigError {
            path: "grid".into(),
            message: e.to_string(),
        })?;
    }
    out.extend(cfg.grid.configurations.iter().filter(|c| c.len() == n).cloned());
    Ok(out)
}

/// Every arity that has at least one configuration.
fn arities(cfg: &RunConfig) -> Vec<usize> {
    let mut ns: Vec<usize> = cfg.grid.arities.clone();
    ns.extend(cfg.grid.configurations.iter().map(Vec::len));
    ns.sort_unstable();
    ns.dedup();
    ns
}

fn value_cell(v: liouville_core::Result<f64>, failures: &mut usize) -> String {
    match v {
        Ok(v) if v.is_finite() => format!("{v:e}"),
        Ok(v) => {
            *failures += 1;
            format!("error: non-finite value {v}")
        }
        Err(e) => {
            *failures += 1;
            format!("error: {e}")
        }
    }
}

fn evaluate_route(
    route: Route,
    t: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    g1_t: Option<&dyn PhaseFunction>,
    pts: &[PhasePoint],
    ctx: &EvaluationContext,
) -> liouville_core::Result<f64> {
    match route {
        Route::Direct => solve_g(t, n, initial, pts, ctx),
        Route::ViaD => solve_g_via_d(t, n, initial, pts, ctx),
        Route::Chaos => {
            let g1 = initial.get(1)?.ok_or(liouville_core::Error::MissingArity(1))?;
            solve_g_chaos(t, n, g1, pts, ctx)
        }
        Route::Scattering => {
            scattering_cumulant_apply(t, n, g1_t.ok_or(liouville_core::Error::MissingArity(1))?, pts, ctx)
        }
    }
}

/// Writes `n,t,point_id,route,value` rows for the evaluation potential.
pub fn evaluate(cfg: &RunConfig, out: &mut dyn Write) -> Result<usize, CliError> {
    let ctx = cfg.context(cfg.evaluation_potential());
    let initial = cfg.correlations();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "t", "point_id", "route", "value"])?;
    let mut failures = 0;
    for n in arities(cfg) {
        let points = grid_points(cfg, n)?;
        for &t in &cfg.grid.times {
            // The scattering route needs the evolved one-particle function.
            let evolved = if cfg.evaluate.routes.contains(&Route::Scattering) {
                Some(evolved_sequence(t, &initial, &ctx)?)
            } else {
                None
            };
            let g1_t = match &evolved {
                Some(seq) => seq.get(1)?,
                None => None,
            };
            for (id, pts) in points.iter().enumerate() {
                for &route in &cfg.evaluate.routes {
                    let v = evaluate_route(route, t, n, &initial, g1_t, pts, &ctx);
                    let cell = value_cell(v, &mut failures);
                    w.write_record([
                        n.to_string(),
                        t.to_string(),
                        id.to_string(),
                        route.name().to_string(),
                        cell,
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(failures)
}

/// Writes `n,point_id,direction,value` rows of one of the two transforms.
pub fn transform(cfg: &RunConfig, direction: Direction, out: &mut dyn Write) -> Result<usize, CliError> {
    let cap = cfg.partition_cap;
    let g = cfg.correlations();
    let d = match direction {
        Direction::DToG => {
            let d = cfg.distributions()?;
            if let Some((i, &n)) = cfg.grid.arities.iter().enumerate().find(|(_, &n)| n > d.max_arity()) {
                return Err(ConfigError {
                    path: format!("grid.arities[{i}]"),
                    message: format!("arity {n} exceeds distribution.max_arity = {}", d.max_arity()),
                }
                .into());
            }
            Some(d)
        }
        Direction::GToD => None,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "point_id", "direction", "value"])?;
    let mut failures = 0;
    for n in arities(cfg) {
        for (id, pts) in grid_points(cfg, n)?.iter().enumerate() {
            let v = match &d {
                Some(d) => g_from_d(d, n, pts, cap),
                None => d_from_g(&g, n, pts, cap),
            };
            let cell = value_cell(v, &mut failures);
            w.write_record([n.to_string(), id.to_string(), direction.name().to_string(), cell])?;
        }
    }
    w.flush()?;
    Ok(failures)
}

/// Outcome of a verification run, in plan order.
#[derive(Debug)]
pub struct Verification {
    pub reports: Vec<PropertyReport>,
}

impl Verification {
    pub fn failures(&self) -> usize {
        self.reports.iter().filter(|r| !r.passed).count()
    }
}

/// Runs the cells of `suite` on `threads` workers (0 picks the rayon default).
/// Reports keep the plan order regardless of the worker count.
pub fn verify(cfg: &RunConfig, suite: Suite, threads: usize) -> Result<Verification, CliError> {
    let inputs = cfg.suite_inputs()?;
    let cells = plan(&inputs, suite);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let reports = pool.install(|| cells.par_iter().map(|c| run_cell(&inputs, c)).collect::<Vec<_>>());
    Ok(Verification {
        reports: reports.into_iter().flatten().collect(),
    })
}

pub fn write_jsonl(reports: &[PropertyReport], out: &mut dyn Write) -> Result<(), CliError> {
    for r in reports {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

struct SummaryRow {
    checks: usize,
    passed: usize,
    worst: f64,
    target: f64,
}

/// A per-property table: check count, passes, and the worst observation.
pub fn write_summary(reports: &[PropertyReport], out: &mut dyn Write) -> std::io::Result<()> {
    let mut rows: BTreeMap<&str, SummaryRow> = BTreeMap::new();
    let mut order = Vec::new();
    for r in reports {
        let row = rows.entry(&r.property).or_insert_with(|| {
            order.push(r.property.as_str());
            SummaryRow {
                checks: 0,
                passed: 0,
                worst: f64::NAN,
                target: r.target,
            }
        });
        row.checks += 1;
        row.passed += usize::from(r.passed);
        // A NaN observation sticks as the worst one.
        let worse = match r.comparison {
            Comparison::AtMost => r.observed > row.worst,
            Comparison::AtLeast => r.observed < row.worst,
        };
        if row.checks == 1 || r.observed.is_nan() || (worse && !row.worst.is_nan()) {
            row.worst = r.observed;
        }
    }
    writeln!(
        out,
        "{:<28} {:>7} {:>7} {:>12} {:>12}",
        "property", "checks", "passed", "worst", "target"
    )?;
    for name in order {
        let r = &rows[name];
        writeln!(
            out,
            "{:<28} {:>7} {:>7} {:>12.3e} {:>12.3e}",
            name, r.checks, r.passed, r.worst, r.target
        )?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    writeln!(out, "{} checks, {} failed", reports.len(), failed)
}
