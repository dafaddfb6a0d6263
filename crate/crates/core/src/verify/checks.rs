//! Individual property measurements. Each returns the worst observation over
//! the given phase configurations; the suites turn them into reports.

use alloc::format;
use alloc::vec::Vec;

use super::quadrature::{derive_seed, mc_l1_norm, mc_l1_norms, McQuadrature};
use super::report::{Comparison, PropertyReport, ReportParameters};
use crate::dynamics::{flow_points, PhaseFunction, PhasePoint};
use crate::error::{contract, Result};
use crate::hierarchy::{
    apply_hierarchy_generator, correlations_of, cumulant_apply, d_from_g, distribution_of, evolved_sequence, g_from_d,
    scattering_cumulant_apply, solve_g, solve_g_chaos, solve_g_via_d_with_magnitude, solve_g_with_magnitude,
    CorrelationSequence, DistributionSequence, EvaluationContext,
};
use crate::partitions::{enumerate_partitions, IndexSet, Partition};

/// `|a − b| / max(1, |reference|)`: absolute near zero, relative for large values.
pub fn mixed_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1.0)
}

fn worst(acc: f64, e: f64) -> f64 {
    if e.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(e)
    }
}

fn function<'s>(seq: &'s CorrelationSequence<'_>, n: usize) -> Result<&'s dyn PhaseFunction> {
    seq.get(n)?
        .map(|f| f as &dyn PhaseFunction)
        .ok_or_else(|| contract(format!("initial data has no arity-{n} function")))
}

/// Worst errors of `g → D → g` and `D → g → D` at arity `n`.
pub fn round_trip_errors(
    g: &CorrelationSequence<'_>,
    d: &DistributionSequence<'_>,
    n: usize,
    points: &[Vec<PhasePoint>],
    cap: usize,
) -> Result<(f64, f64)> {
    let d_of_g = distribution_of(g, cap)?;
    let g_of_d = correlations_of(d, cap)?;
    let (mut gdg, mut dgd) = (0.0, 0.0);
    for x in points {
        let g_ref = g.get(n)?.map_or(Ok(0.0), |f| f.eval(x))?;
        gdg = worst(gdg, mixed_error(g_from_d(&d_of_g, n, x, cap)?, g_ref));
        let d_ref = d.get(n)?.eval(x)?;
        dgd = worst(dgd, mixed_error(d_from_g(&g_of_d, n, x, cap)?, d_ref));
    }
    Ok((gdg, dgd))
}

/// Worst `|solve_g(0) − g_n(0)|` in the mixed sense.
pub fn initial_condition_error(
    initial: &CorrelationSequence<'_>,
    n: usize,
    points: &[Vec<PhasePoint>],
    ctx: &EvaluationContext,
) -> Result<f64> {
    let mut acc = 0.0;
    for x in points {
        let want = initial.get(n)?.map_or(Ok(0.0), |f| f.eval(x))?;
        acc = worst(acc, mixed_error(solve_g(0.0, n, initial, x, ctx)?, want));
    }
    Ok(acc)
}

/// Worst `|cumulant_apply(t, P)|` over partitions with at least two blocks.
pub fn cancellation_error(
    t: f64,
    initial: &CorrelationSequence<'_>,
    n: usize,
    points: &[Vec<PhasePoint>],
    ctx: &EvaluationContext,
    singletons_only: bool,
) -> Result<f64> {
    let ground = IndexSet::range(n)?;
    let partitions: Vec<Partition> = if singletons_only {
        alloc::vec![Partition::singletons(ground)]
    } else {
        enumerate_partitions(ground, ctx.partition_cap)?
            .into_iter()
            .filter(|p| p.len() >= 2)
            .collect()
    };
    let mut acc = 0.0;
    for x in points {
        for p in &partitions {
            if p.blocks().iter().all(|b| matches!(initial.get(b.len()), Ok(Some(_)))) {
                acc = worst(acc, cumulant_apply(t, p, initial, x, ctx)?.abs());
            }
        }
    }
    Ok(acc)
}

/// Worst disagreement of the direct and the distribution routes, relative to
/// the summed magnitude of their terms.
pub fn route_error(
    t: f64,
    initial: &CorrelationSequence<'_>,
    n: usize,
    points: &[Vec<PhasePoint>],
    ctx: &EvaluationContext,
) -> Result<f64> {
    let mut acc = 0.0;
    for x in points {
        let a = solve_g_with_magnitude(t, n, initial, x, ctx)?;
        let b = solve_g_via_d_with_magnitude(t, n, initial, x, ctx)?;
        let scale = a.magnitude.max(b.magnitude).max(f64::MIN_POSITIVE);
        acc = worst(acc, (a.value - b.value).abs() / scale);
    }
    Ok(acc)
}

/// Worst deviation of `solve_g(t)` from the free-streamed initial data
/// `g_n(0, q − p t, p)`; only meaningful without forces.
pub fn free_streaming_error(
    t: f64,
    initial: &CorrelationSequence<'_>,
    n: usize,
    points: &[Vec<PhasePoint>],
    ctx: &EvaluationContext,
) -> Result<f64> {
    if !ctx.pot.is_free() {
        return Err(contract("free streaming needs a force-free potential family"));
    }
    let g = function(initial, n)?;
    let mut acc = 0.0;
    let mut streamed = Vec::with_capacity(n);
    for x in points {
        streamed.clear();
        for pt in x {
            let mut s = *pt;
            for c in 0..pt.dim() {
                s.q_mut()[c] = pt.q()[c] - pt.p()[c] * t;
            }
            streamed.push(s);
        }
        acc = worst(acc, mixed_error(solve_g(t, n, initial, x, ctx)?, g.eval(&streamed)?));
    }
    Ok(acc)
}

/// Central time differences of `solve_g` at `t` for each step of `hs`,
/// together with the generator applied to `g(t)`, at one configuration.
pub fn residual_terms(
    t: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    state: &CorrelationSequence<'_>,
    cfg: &[PhasePoint],
    ctx: &EvaluationContext,
    hs: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let generator = apply_hierarchy_generator(state, n, cfg, ctx)?;
    let mut fds = Vec::with_capacity(hs.len());
    for &h in hs {
        if !(h.is_finite() && h > 0.0) {
            return Err(contract("time-difference step must be positive"));
        }
        let up = solve_g(t + h, n, initial, cfg, ctx)?;
        let down = solve_g(t - h, n, initial, cfg, ctx)?;
        fds.push((up - down) / (2.0 * h));
    }
    Ok((generator, fds))
}

/// Result of a residual study over several configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualStudy {
    /// Worst `|d/dt solve_g − generator|` at the default step.
    pub max_residual: f64,
    /// `log₂` of the summed residual ratio between `order_step` and its half.
    pub observed_order: f64,
    pub coarse_sum: f64,
    pub fine_sum: f64,
}

/// Compares the central-difference time derivative of `solve_g` with the
/// hierarchy generator. At `t = 0` the generator acts on the initial data and
/// uses its gradients; otherwise on the lazily evolved sequence.
pub fn residual_study(
    t: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    points: &[Vec<PhasePoint>],
    ctx: &EvaluationContext,
    fd_step_t: f64,
    order_step: f64,
) -> Result<ResidualStudy> {
    let evolved;
    let state = if t == 0.0 {
        initial
    } else {
        evolved = evolved_sequence(t, initial, ctx)?;
        &evolved
    };
    let hs = [fd_step_t, order_step, 0.5 * order_step];
    let mut study = ResidualStudy {
        max_residual: 0.0,
        observed_order: f64::NAN,
        coarse_sum: 0.0,
        fine_sum: 0.0,
    };
    for x in points {
        let (generator, fds) = residual_terms(t, n, initial, state, x, ctx, &hs)?;
        study.max_residual = worst(study.max_residual, (fds[0] - generator).abs());
        study.coarse_sum += (fds[1] - generator).abs();
        study.fine_sum += (fds[2] - generator).abs();
    }
    study.observed_order = libm::log2(study.coarse_sum / study.fine_sum);
    Ok(study)
}

/// Worst `|𝔄_{t1}(𝔄_{t2} g(0)) − 𝔄_{t1+t2} g(0)|`.
pub fn group_error(
    t1: f64,
    t2: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    points: &[Vec<PhasePoint>],
    ctx: &EvaluationContext,
) -> Result<f64> {
    let mid = evolved_sequence(t2, initial, ctx)?;
    let mut acc = 0.0;
    for x in points {
        let two = solve_g(t1, n, &mid, x, ctx)?;
        let one = solve_g(t1 + t2, n, initial, x, ctx)?;
        acc = worst(acc, (two - one).abs());
    }
    Ok(acc)
}

/// Worst gaps between the general solution with chaos data and the reduced
/// solution, and (for `n ≥ 2`) between the reduced solution and the
/// scattering-cumulant representation.
pub fn chaos_errors(
    t: f64,
    n: usize,
    g1: &CorrelationSequence<'_>,
    points: &[Vec<PhasePoint>],
    ctx: &EvaluationContext,
) -> Result<(f64, Option<f64>)> {
    if !g1.is_chaos() {
        return Err(contract("chaos checks need chaos initial data"));
    }
    let g1_0 = function(g1, 1)?;
    let evolved = evolved_sequence(t, g1, ctx)?;
    let g1_t = function(&evolved, 1)?;
    let mut reduction = 0.0;
    let mut scattering = (n >= 2).then_some(0.0);
    for x in points {
        let reduced = solve_g_chaos(t, n, g1_0, x, ctx)?;
        reduction = worst(reduction, mixed_error(solve_g(t, n, g1, x, ctx)?, reduced));
        if let Some(s) = scattering.as_mut() {
            *s = worst(*s, (scattering_cumulant_apply(t, n, g1_t, x, ctx)? - reduced).abs());
        }
    }
    Ok((reduction, scattering))
}

fn params(n: usize, times: &[f64], samples: usize, seed: u64) -> ReportParameters {
    ReportParameters {
        n,
        times: times.to_vec(),
        potential: alloc::string::String::new(),
        samples,
        seed,
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// The a priori bound `n! e^{n+1} Σ_P ∏ ‖g_{|X|}(0)‖` against a Monte Carlo
/// estimate of `‖g_n(t)‖`. Initial norms are estimated with their own
/// sub-seeds; for chaos data only the one-particle norm enters.
pub fn check_norm_bound(
    t: f64,
    n: usize,
    initial: &CorrelationSequence<'_>,
    ctx: &EvaluationContext,
    quad: &McQuadrature,
) -> Result<PropertyReport> {
    let mut norms = alloc::vec![0.0; n + 1];
    for (k, slot) in norms.iter_mut().enumerate().skip(1) {
        if let Some(f) = initial.get(k)? {
            *slot = mc_l1_norm(|x| f.eval(x), k, &quad.reseeded(derive_seed(quad.seed, k as u64)))?.value;
        }
    }
    let mut lattice_sum = 0.0;
    for p in enumerate_partitions(IndexSet::range(n)?, ctx.partition_cap)? {
        lattice_sum += p.blocks().iter().map(|b| norms[b.len()]).product::<f64>();
    }
    let bound = factorial(n) * libm::exp((n + 1) as f64) * lattice_sum;
    let estimate = mc_l1_norm(|x| solve_g(t, n, initial, x, ctx), n, quad)?;
    let report = PropertyReport::stochastic(
        "norm_bound",
        params(n, &[t], quad.samples, quad.seed),
        estimate.value,
        Some(estimate.stderr),
        bound,
        Comparison::AtMost,
    );
    Ok(if initial.is_chaos() {
        report.with_note(format!("chaos data, bound n! e^(n+1) |g1|^n with |g1| = {}", norms[1]))
    } else {
        report
    })
}

/// Relative drift `|‖S_n(−t) f‖ − ‖f‖| / ‖f‖` against the volume-drift
/// allowance; both norms use one sample stream and the combined standard
/// error of the two estimates sets the noise margin.
pub fn check_isometry(
    f: &dyn PhaseFunction,
    n: usize,
    t: f64,
    ctx: &EvaluationContext,
    quad: &McQuadrature,
    allowance: f64,
) -> Result<PropertyReport> {
    if f.arity() != n {
        return Err(contract(format!("arity-{} function used at n = {n}", f.arity())));
    }
    let [plain, flowed] = mc_l1_norms(
        [
            &mut |x: &[PhasePoint]| f.eval(x) as Result<f64>,
            &mut |x: &[PhasePoint]| f.eval(&flow_points(x, &ctx.pot, -t, &ctx.solver)?),
        ] as [&mut dyn FnMut(&[PhasePoint]) -> Result<f64>; 2],
        n,
        quad,
    )?;
    let drift = (flowed.value - plain.value).abs() / plain.value;
    let combined = libm::sqrt(plain.stderr * plain.stderr + flowed.stderr * flowed.stderr) / plain.value;
    Ok(PropertyReport::stochastic(
        "isometry",
        params(n, &[t], quad.samples, quad.seed),
        drift,
        Some(combined),
        allowance,
        Comparison::AtMost,
    )
    .with_note(format!(
        "|f| = {} ± {}, |S(-t)f| = {} ± {}",
        plain.value, plain.stderr, flowed.value, flowed.stderr
    )))
}
