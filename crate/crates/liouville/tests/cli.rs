use std::path::Path;
use std::process::Command;

use liouville::commands::{self, grid_points, Direction};
use liouville::core::dynamics::{ExternalPotential, FlowSolver, Integrator, PhasePoint};
use liouville::core::verify::Suite;
use liouville::{RunConfig, DEFAULT_CONFIG};

fn default_config() -> RunConfig {
    RunConfig::from_toml(DEFAULT_CONFIG).unwrap()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Parses CSV output into (key columns, value) rows.
fn rows(csv_text: &str) -> Vec<(Vec<String>, String)> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            let fields: Vec<String> = rec.iter().map(str::to_string).collect();
            let (value, keys) = fields.split_last().unwrap();
            (keys.to_vec(), value.clone())
        })
        .collect()
}

#[test]
fn config_round_trips() {
    let cfg = default_config();
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);

    let mut full = cfg.clone();
    full.potentials[1].external = Some(ExternalPotential::Harmonic { stiffness: 0.5 });
    full.evaluate.potential = Some("gaussian".into());
    full.grid.configurations = vec![vec![PhasePoint::new(&[0.5], &[-0.25]).unwrap(); 2]];
    full.solver = FlowSolver::new(Integrator::VelocityVerlet, 5e-3).unwrap();
    full.tolerances.group = 3e-7;
    let text = full.to_toml();
    let back = RunConfig::from_toml(&text).unwrap();
    assert_eq!(back, full);
    assert_eq!(back.to_toml(), text);
}

#[test]
fn unknown_fields_are_rejected() {
    let bad = DEFAULT_CONFIG.replace("partition_cap = 8", "partition_cap = 8\nbogus = 1");
    assert!(RunConfig::from_toml(&bad).unwrap_err().message.contains("bogus"));
}

#[test]
fn random_grids_require_a_seed() {
    let bad = DEFAULT_CONFIG.replace("seed = 20240611", "");
    assert_eq!(RunConfig::from_toml(&bad).unwrap_err().path, "grid.seed");
}

#[test]
fn chaos_routes_require_chaos_data() {
    let bad = DEFAULT_CONFIG.replace(
        r#"routes = ["direct", "via_D"]"#,
        r#"routes = ["direct", "scattering"]"#,
    );
    assert_eq!(RunConfig::from_toml(&bad).unwrap_err().path, "evaluate.routes[1]");
}

#[test]
fn exit_code_zero_for_passing_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.toml", DEFAULT_CONFIG);
    let report = dir.path().join("r.jsonl");
    let (code, stdout, stderr) = run(&[
        "verify",
        "--config",
        &cfg,
        "--suite",
        "identities",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.is_empty());
    assert!(stderr.contains("route_equivalence"));
    let lines = std::fs::read_to_string(report).unwrap();
    assert!(lines.lines().count() > 0);
    for line in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["passed"], true);
    }

    let (code, stdout, _) = run(&["evaluate", "--config", &cfg]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("n,t,point_id,route,value"));
}

#[test]
fn exit_code_one_for_failing_checks() {
    let dir = tempfile::tempdir().unwrap();
    let text = DEFAULT_CONFIG.replace("[residual]", "[tolerances]\nresidual = 0.0\n\n[residual]");
    let cfg = write_config(dir.path(), "strict.toml", &text);
    let (code, stdout, stderr) = run(&["verify", "--config", &cfg, "--suite", "residual"]);
    assert_eq!(code, 1, "{stderr}");
    assert!(stdout.lines().any(|l| l.contains(r#""passed":false"#)));
}

#[test]
fn exit_code_one_for_failed_rows() {
    // A step limit the flows cannot meet makes every t > 0 row fail.
    let dir = tempfile::tempdir().unwrap();
    let text = DEFAULT_CONFIG.replace("step = 1e-2", "step = 1e-2\nmax_steps = 3");
    let cfg = write_config(dir.path(), "limited.toml", &text);
    let (code, stdout, _) = run(&["evaluate", "--config", &cfg]);
    assert_eq!(code, 1);
    assert!(rows(&stdout).iter().any(|(_, v)| v.starts_with("error:")));
}

#[test]
fn exit_code_two_for_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let over_cap = DEFAULT_CONFIG.replace("partition_cap = 8", "partition_cap = 2");
    let cfg = write_config(dir.path(), "cap.toml", &over_cap);
    let (code, _, stderr) = run(&["evaluate", "--config", &cfg]);
    assert_eq!(code, 2);
    assert!(stderr.contains("initial.max_arity"), "{stderr}");

    let big_n = DEFAULT_CONFIG.replace("arities = [1, 2, 3]", "arities = [1, 2, 12]");
    let cfg = write_config(dir.path(), "n.toml", &big_n);
    let (code, _, stderr) = run(&["verify", "--config", &cfg]);
    assert_eq!(code, 2);
    assert!(stderr.contains("grid.arities[2]"), "{stderr}");

    let (code, _, _) = run(&["evaluate", "--config", "/nonexistent/liouville.toml"]);
    assert_eq!(code, 2);
    let ok = write_config(dir.path(), "ok.toml", DEFAULT_CONFIG);
    let (code, _, _) = run(&["verify", "--config", &ok, "--suite", "nonsense"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["transform", "--config", &ok, "--direction", "sideways"]);
    assert_eq!(code, 2);
}

#[test]
fn verification_is_independent_of_thread_count() {
    let mut cfg = default_config();
    cfg.grid.arities = vec![1, 2];
    cfg.grid.points = 3;
    let serial = commands::verify(&cfg, Suite::Identities, 1).unwrap();
    let parallel = commands::verify(&cfg, Suite::Identities, 3).unwrap();
    assert_eq!(serial.reports, parallel.reports);
}

#[test]
fn residual_scales_with_the_square_of_the_solver_step() {
    let residual = |step: f64| {
        let mut cfg = default_config();
        cfg.solver = FlowSolver::new(Integrator::VelocityVerlet, step).unwrap();
        // A multiple of both steps, so no remainder step enters the schedule.
        cfg.grid.times = vec![0.4];
        cfg.grid.arities = vec![2];
        cfg.potentials.truncate(1);
        let run = commands::verify(&cfg, Suite::Residual, 0).unwrap();
        run.reports
            .iter()
            .find(|r| r.property == "hierarchy_residual")
            .unwrap()
            .observed
    };
    let coarse = residual(0.1);
    let fine = residual(0.05);
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio} ({coarse} vs {fine})");
}

#[test]
fn chaos_correlations_transform_to_products() {
    let mut cfg = default_config();
    cfg.initial.independent = true;
    cfg.initial.functions.truncate(1);
    let g1 = &cfg.initial.functions[0].components;
    let density = |pt: &PhasePoint| -> f64 {
        // Mixture of product Gaussians in one dimension.
        g1.iter()
            .map(|c| {
                let gq = (-(pt.q()[0] - c.q_center[0]).powi(2) / (2.0 * c.q_width * c.q_width)).exp()
                    / (c.q_width * (2.0 * std::f64::consts::PI).sqrt());
                let gp = (-(pt.p()[0] - c.p_center[0]).powi(2) / (2.0 * c.p_width * c.p_width)).exp()
                    / (c.p_width * (2.0 * std::f64::consts::PI).sqrt());
                c.weight * gq * gp
            })
            .sum()
    };
    let mut out = Vec::new();
    commands::transform(&cfg, Direction::GToD, &mut out).unwrap();
    let table = rows(std::str::from_utf8(&out).unwrap());
    for n in 1..=3 {
        let pts = grid_points(&cfg, n).unwrap();
        for (id, cfg_pts) in pts.iter().enumerate() {
            let expected: f64 = cfg_pts.iter().map(density).product();
            let (_, v) = table
                .iter()
                .find(|(k, _)| k[0] == n.to_string() && k[1] == id.to_string())
                .unwrap();
            let v: f64 = v.parse().unwrap();
            assert!(
                (v - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "n={n} id={id}: {v} vs {expected}"
            );
        }
    }
}

#[test]
fn factorized_distributions_have_no_correlations() {
    let cfg = default_config();
    assert!(cfg.distribution.as_ref().unwrap().independent);
    let mut out = Vec::new();
    assert_eq!(commands::transform(&cfg, Direction::DToG, &mut out).unwrap(), 0);
    for (keys, v) in rows(std::str::from_utf8(&out).unwrap()) {
        let v: f64 = v.parse().unwrap();
        if keys[0] != "1" {
            assert!(v.abs() < 1e-15, "{keys:?}: {v}");
        } else {
            assert!(v > 0.0);
        }
    }
}

#[test]
fn evaluation_at_time_zero_reproduces_the_initial_data() {
    let mut cfg = default_config();
    cfg.grid.times = vec![0.0];
    cfg.evaluate.routes = vec![liouville::config::Route::Direct, liouville::config::Route::ViaD];
    let initial = cfg.correlations();
    let mut out = Vec::new();
    assert_eq!(commands::evaluate(&cfg, &mut out).unwrap(), 0);
    let table = rows(std::str::from_utf8(&out).unwrap());
    assert_eq!(table.len(), 3 * 10 * 2);
    for (keys, v) in table {
        let n: usize = keys[0].parse().unwrap();
        let id: usize = keys[2].parse().unwrap();
        let pts = &grid_points(&cfg, n).unwrap()[id];
        let expected = initial.get(n).unwrap().unwrap().eval(pts).unwrap();
        let v: f64 = v.parse().unwrap();
        assert!(
            (v - expected).abs() <= 1e-14 * expected.abs().max(1.0),
            "{keys:?}: {v} vs {expected}"
        );
    }
}

#[test]
fn bundled_config_passes_every_suite() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.toml");
    let (code, stdout, stderr) = run(&["verify", "--config", path, "--suite", "all"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stderr.contains(", 0 failed"));
    assert!(stdout.lines().count() > 100);
    for line in stdout.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["passed"], true, "{line}");
    }
}
