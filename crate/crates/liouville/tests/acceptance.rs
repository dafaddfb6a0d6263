//! Acceptance gate: every criterion runs at its stated tolerance and prints
//! one PASS/FAIL line. The binary exits nonzero when any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use liouville_core::dynamics::{
    ExternalPotential, FlowSolver, GaussianComponent, GaussianMixture, Integrator, InteractionPotential, PhasePoint,
    PotentialFamily, SharedFunction,
};
use liouville_core::hierarchy::{
    cumulant_apply, hierarchy_generator_terms, solve_g, CorrelationSequence, DistributionSequence, EvaluationContext,
};
use liouville_core::partitions::{enumerate_partitions, enumerate_subset_selections, IndexSet};
use liouville_core::verify::{
    chaos_errors, check_isometry, check_norm_bound, group_error, residual_study, round_trip_errors, route_error,
    sample_configurations, GaussianProposal, McQuadrature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<Vec<String>, String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    check: Check,
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "free-flow exactness",
            budget: secs(1),
            check: free_flow,
        },
        Criterion {
            id: 2,
            name: "partition combinatorics",
            budget: secs(5),
            check: combinatorics,
        },
        Criterion {
            id: 3,
            name: "Möbius round trip",
            budget: secs(10),
            check: round_trip,
        },
        Criterion {
            id: 4,
            name: "initial-condition and cancellation identities",
            budget: secs(10),
            check: identities,
        },
        Criterion {
            id: 5,
            name: "route equivalence",
            budget: secs(120),
            check: routes,
        },
        Criterion {
            id: 6,
            name: "hierarchy residual",
            budget: secs(300),
            check: residual,
        },
        Criterion {
            id: 7,
            name: "group property",
            budget: secs(300),
            check: group,
        },
        Criterion {
            id: 8,
            name: "chaos and scattering representations",
            budget: secs(120),
            check: chaos,
        },
        Criterion {
            id: 9,
            name: "norm bound",
            budget: secs(300),
            check: norm_bound,
        },
        Criterion {
            id: 10,
            name: "L1 isometry of the flow",
            budget: secs(180),
            check: isometry,
        },
        Criterion {
            id: 11,
            name: "pair-potential degeneracy",
            budget: secs(60),
            check: pair_degeneracy,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let (ok, lines) = match outcome {
            Ok(lines) => (in_time, lines),
            Err(why) => (false, vec![why]),
        };
        println!(
            "[{}] criterion {:>2}: {} ({:.2} s, budget {} s{})",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
        for l in lines {
            println!("           {l}");
        }
        failed += usize::from(!ok);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn ensure(ok: bool, line: String) -> Result<String, String> {
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn err(e: liouville_core::Error) -> String {
    e.to_string()
}

fn mixture(arity: usize, dim: usize, rng: &mut ChaCha8Rng, components: usize) -> SharedFunction<'static> {
    let cs = (0..components)
        .map(|_| GaussianComponent {
            weight: rng.random_range(0.3..1.2),
            q_center: (0..dim).map(|_| rng.random_range(-0.6..0.6)).collect(),
            p_center: (0..dim).map(|_| rng.random_range(-0.4..0.4)).collect(),
            q_width: rng.random_range(0.6..1.1),
            p_width: rng.random_range(0.6..1.1),
            q_coupling: if arity > 1 { rng.random_range(0.0..0.4) } else { 0.0 },
            p_coupling: if arity > 1 { rng.random_range(0.0..0.2) } else { 0.0 },
        })
        .collect();
    Arc::new(GaussianMixture::new(arity, cs).unwrap())
}

fn sequence(max: usize, dim: usize, seed: u64) -> CorrelationSequence<'static> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CorrelationSequence::from_functions(max, (1..=max).map(|n| mixture(n, dim, &mut rng, 2))).unwrap()
}

fn proposal(dim: usize, scale: f64) -> GaussianProposal {
    let mut p = GaussianProposal::standard(dim);
    p.q_scale = scale;
    p.p_scale = scale;
    p
}

fn points(n: usize, count: usize, seed: u64) -> Vec<Vec<PhasePoint>> {
    sample_configurations(&proposal(1, 1.0), n, count, seed).unwrap()
}

fn ctx(pot: PotentialFamily) -> EvaluationContext {
    EvaluationContext::new(pot, FlowSolver::default())
}

fn harmonic() -> PotentialFamily {
    PotentialFamily::harmonic_pair(1.0)
}

fn gaussian() -> PotentialFamily {
    PotentialFamily::gaussian_pair(1.0, 0.8).unwrap()
}

fn free_flow() -> Result<Vec<String>, String> {
    let dim = 2;
    let (w, qc, pc, sq, sp) = (0.8, [0.3, -0.2], [0.1, 0.25], 0.7, 1.1);
    let g1: SharedFunction = Arc::new(
        GaussianMixture::new(
            1,
            vec![GaussianComponent {
                weight: w,
                q_center: qc.to_vec(),
                p_center: pc.to_vec(),
                q_width: sq,
                p_width: sp,
                q_coupling: 0.0,
                p_coupling: 0.0,
            }],
        )
        .unwrap(),
    );
    // w ∏_c N(q_c − p_c t; q̄_c, σ_q²) N(p_c; p̄_c, σ_p²) written out independently
    let oracle = |q: &[f64], p: &[f64], t: f64| {
        let mut v = w;
        for c in 0..dim {
            let x = q[c] - p[c] * t - qc[c];
            let y = p[c] - pc[c];
            v *= (-0.5 * x * x / (sq * sq)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sq);
            v *= (-0.5 * y * y / (sp * sp)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sp);
        }
        v
    };
    let seq = CorrelationSequence::chaos(g1, 1).unwrap();
    let c = ctx(PotentialFamily::zero());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts = sample_configurations(&proposal(dim, 1.5), 1, 1000, 2).map_err(err)?;
    let mut worst: f64 = 0.0;
    for x in &pts {
        let t = rng.random_range(0.0..2.0);
        let got = solve_g(t, 1, &seq, x, &c).map_err(err)?;
        worst = worst.max((got - oracle(x[0].q(), x[0].p(), t)).abs());
    }
    Ok(vec![ensure(
        worst <= 1e-10,
        format!("max |solve_g − g1(0, q − pt, p)| = {worst:.3e} over 1000 points (tol 1e-10)"),
    )?])
}

fn combinatorics() -> Result<Vec<String>, String> {
    // Bell triangle
    let mut bell = vec![1u64];
    let mut row = vec![1u64];
    for _ in 1..8 {
        let mut next = vec![*row.last().unwrap()];
        for &r in &row {
            next.push(next.last().unwrap() + r);
        }
        bell.push(next[0]);
        row = next;
    }
    bell.push(*row.last().unwrap());
    let bell = &bell[1..];
    let mut counts = Vec::new();
    for n in 1..=8 {
        counts.push(enumerate_partitions(IndexSet::range(n).unwrap(), 8).map_err(err)?.len() as u64);
    }
    let mut lines = vec![ensure(
        counts == bell,
        format!("partition counts {counts:?}, Bell triangle {bell:?}"),
    )?];
    let mut selections_ok = true;
    let mut checked = 0;
    for n in 1..=6 {
        for p in enumerate_partitions(IndexSet::range(n).unwrap(), 8).map_err(err)? {
            let want: usize = p.blocks().iter().map(|b| (1usize << b.len()) - 1).product();
            selections_ok &= enumerate_subset_selections(&p, 8).map_err(err)?.len() == want;
            checked += 1;
        }
    }
    lines.push(ensure(
        selections_ok,
        format!("subset-selection counts equal ∏(2^|X|−1) for all {checked} partitions with n ≤ 6"),
    )?);
    Ok(lines)
}

fn round_trip() -> Result<Vec<String>, String> {
    let g = sequence(5, 1, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = DistributionSequence::from_functions(5, (1..=5).map(|n| mixture(n, 1, &mut rng, 2))).unwrap();
    let mut lines = Vec::new();
    for n in 1..=5 {
        let (gdg, dgd) = round_trip_errors(&g, &d, n, &points(n, 100, 10 + n as u64), 8).map_err(err)?;
        lines.push(ensure(
            gdg <= 1e-12 && dgd <= 1e-12,
            format!("n = {n}: g→D→g {gdg:.2e}, D→g→D {dgd:.2e} (tol 1e-12, 100 points)"),
        )?);
    }
    Ok(lines)
}

fn identities() -> Result<Vec<String>, String> {
    let g = sequence(5, 1, 5);
    let c = ctx(gaussian());
    let mut lines = Vec::new();
    for n in 1..=5 {
        let pts = points(n, 20, 20 + n as u64);
        let mut init: f64 = 0.0;
        let mut cancel: f64 = 0.0;
        let partitions = enumerate_partitions(IndexSet::range(n).unwrap(), 8).map_err(err)?;
        for x in &pts {
            let want = g.get(n).unwrap().unwrap().eval(x).map_err(err)?;
            let got = solve_g(0.0, n, &g, x, &c).map_err(err)?;
            init = init.max((got - want).abs() / want.abs().max(1.0));
            for p in partitions.iter().filter(|p| p.len() >= 2) {
                cancel = cancel.max(cumulant_apply(0.0, p, &g, x, &c).map_err(err)?.abs());
            }
        }
        lines.push(ensure(
            init <= 1e-12 && cancel <= 1e-12,
            format!("n = {n}: |solve_g(0) − g_n(0)| {init:.2e}, max |cumulant(0, |P| ≥ 2)| {cancel:.2e} (tol 1e-12)"),
        )?);
    }
    Ok(lines)
}

fn routes() -> Result<Vec<String>, String> {
    let mut lines = Vec::new();
    for (name, pot) in [("harmonic", harmonic()), ("gaussian", gaussian())] {
        let c = ctx(pot);
        for n in 1..=4 {
            let g = sequence(n, 1, 30 + n as u64);
            for t in [0.25, 1.0] {
                let e = route_error(t, &g, n, &points(n, 50, 40 + n as u64), &c).map_err(err)?;
                lines.push(ensure(
                    e <= 1e-12,
                    format!("{name}, n = {n}, t = {t}: relative gap {e:.2e} (tol 1e-12, 50 points)"),
                )?);
            }
        }
    }
    Ok(lines)
}

fn residual() -> Result<Vec<String>, String> {
    let mut lines = Vec::new();
    for (name, pot) in [("harmonic", harmonic()), ("gaussian", gaussian())] {
        let c = ctx(pot);
        for n in 1..=3 {
            let g = sequence(3, 1, 50);
            for t in [0.0, 0.37] {
                let s = residual_study(t, n, &g, &points(n, 100, 60 + n as u64), &c, 1e-3, 0.04).map_err(err)?;
                lines.push(ensure(
                    s.max_residual <= 1e-4 && s.observed_order >= 1.9,
                    format!(
                        "{name}, n = {n}, t = {t}: max residual {:.2e} (tol 1e-4), order {:.3} (≥ 1.9), 100 points",
                        s.max_residual, s.observed_order
                    ),
                )?);
            }
        }
    }
    Ok(lines)
}

fn group() -> Result<Vec<String>, String> {
    let c = ctx(harmonic());
    let g = sequence(3, 1, 70);
    let mut lines = Vec::new();
    for n in 1..=3 {
        let pts = points(n, 10, 80 + n as u64);
        let mut worst: f64 = 0.0;
        for t1 in [0.25, 0.5, 1.0] {
            for t2 in [0.25, 0.5, 1.0] {
                worst = worst.max(group_error(t1, t2, n, &g, &pts, &c).map_err(err)?);
            }
        }
        lines.push(ensure(
            worst <= 1e-6,
            format!("n = {n}: max two-step gap {worst:.2e} over the 3×3 grid (tol 1e-6, 10 points)"),
        )?);
    }
    Ok(lines)
}

fn chaos() -> Result<Vec<String>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let g1 = mixture(1, 1, &mut rng, 2);
    let seq = CorrelationSequence::chaos(g1, 3).unwrap();
    let confined = PotentialFamily::new(
        Some(ExternalPotential::Harmonic { stiffness: 0.5 }),
        vec![InteractionPotential::GaussianPair {
            amplitude: 1.0,
            width: 0.8,
        }],
    )
    .unwrap();
    let mut lines = Vec::new();
    for (name, pot) in [("harmonic", harmonic()), ("gaussian + external", confined)] {
        let c = ctx(pot);
        for n in [2, 3] {
            for t in [0.25, 0.5, 1.0] {
                let (red, scat) = chaos_errors(t, n, &seq, &points(n, 30, 100 + n as u64), &c).map_err(err)?;
                let scat = scat.unwrap();
                lines.push(ensure(
                    red <= 1e-12 && scat <= 1e-6,
                    format!("{name}, n = {n}, t = {t}: chaos gap {red:.2e} (tol 1e-12), scattering gap {scat:.2e} (tol 1e-6)"),
                )?);
            }
        }
    }
    Ok(lines)
}

fn norm_bound() -> Result<Vec<String>, String> {
    // The bound does not depend on integrator accuracy; a coarser step keeps
    // 10^5 samples per cell affordable.
    let c = EvaluationContext::new(harmonic(), FlowSolver::new(Integrator::VelocityVerlet, 1e-2).unwrap());
    let quad = McQuadrature::new(100_000, 7, proposal(1, 1.4)).map_err(err)?;
    let full = sequence(3, 1, 110);
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let chaos = CorrelationSequence::chaos(mixture(1, 1, &mut rng, 2), 3).unwrap();
    let mut lines = Vec::new();
    for (name, data) in [("general", &full), ("chaos", &chaos)] {
        for n in 1..=3 {
            for t in [0.5, 1.0] {
                let r = check_norm_bound(t, n, data, &c, &quad.reseeded(1000 + n as u64)).map_err(err)?;
                lines.push(ensure(
                    r.passed,
                    format!(
                        "{name}, n = {n}, t = {t}: ‖g_n(t)‖ ≈ {:.4} ± {:.1e} ≤ bound {:.4} ({} samples)",
                        r.observed,
                        r.stderr.unwrap_or(0.0),
                        r.target,
                        quad.samples
                    ),
                )?);
            }
        }
    }
    Ok(lines)
}

fn isometry() -> Result<Vec<String>, String> {
    let quad = McQuadrature::new(100_000, 8, proposal(1, 1.2)).map_err(err)?;
    let g = sequence(3, 1, 120);
    let mut lines = Vec::new();
    for (name, pot) in [("harmonic", harmonic()), ("gaussian", gaussian())] {
        let c = ctx(pot);
        for n in 1..=3 {
            for t in [0.0, 0.5, 1.0] {
                let f = g.get(n).unwrap().unwrap();
                let r = check_isometry(f, n, t, &c, &quad, 1e-3).map_err(err)?;
                lines.push(ensure(
                    r.passed,
                    format!(
                        "{name}, n = {n}, t = {t}: relative drift {:.2e} ≤ 3·{:.2e} + 1e-3",
                        r.observed,
                        r.stderr.unwrap_or(0.0)
                    ),
                )?);
            }
        }
    }
    Ok(lines)
}

fn pair_degeneracy() -> Result<Vec<String>, String> {
    let g = sequence(3, 1, 130);
    let mut lines = Vec::new();
    for (name, pot) in [("harmonic", harmonic()), ("gaussian", gaussian())] {
        let c = ctx(pot);
        let mut count = 0;
        let mut all_zero = true;
        let mut some_pair = false;
        for x in points(3, 50, 131) {
            for term in hierarchy_generator_terms(&g, 3, &x, &c).map_err(err)? {
                if term.partition.len() > 1 && term.scope.len() == 3 {
                    count += 1;
                    all_zero &= term.value == 0.0;
                } else if term.partition.len() > 1 {
                    some_pair |= term.value != 0.0;
                }
            }
        }
        lines.push(ensure(
            all_zero && count == 4 * 50 && some_pair,
            format!("{name}: {count} three-body interaction terms over 50 points, all exactly zero: {all_zero}"),
        )?);
    }
    Ok(lines)
}
