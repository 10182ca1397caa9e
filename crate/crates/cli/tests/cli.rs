use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use binorm_gs_cli::verify_manifest;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_binorm-gs"))
}

fn run_config(dir: &Path, name: &str, text: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{name}.cfg"));
    fs::write(&cfg, text).unwrap();
    bin()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join(name))
        .args(extra)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const MINIMAL: &str = "problem.beta = 1e-6\ntasks.0.kind = \"solve\"\n";

#[test]
fn minimal_solve_matches_two_solitons() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), "min", MINIMAL, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let solve = read_json(&tmp.path().join("min/solve.json"));
    let e = solve["energy"].as_f64().unwrap();
    assert!((e / (-2.0 / 96.0) - 1.0).abs() < 5e-3, "energy {e}");
    assert_eq!(solve["report"]["total"].as_f64().unwrap(), e);
    for key in ["kinetic1", "potential2", "self1", "cross", "lambda1", "lambda2"] {
        assert!(solve["report"].get(key).is_some(), "missing {key}");
    }
    let traj = fs::read_to_string(tmp.path().join("min/solve_trajectory.csv")).unwrap();
    assert!(traj.starts_with("iter,energy,residual\n"));
    assert!(traj.lines().count() <= 2001);
}

#[test]
fn supercritical_exponent_is_rejected_with_hypothesis_tag() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), "bad", "problem.p1 = 3\ntasks.0.kind = \"solve\"\n", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(p1)"));
    assert!(!tmp.path().join("bad").exists());
}

#[test]
fn reruns_are_identical_apart_from_timestamp() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_config(tmp.path(), "a", MINIMAL, &["--seed", "7"]);
    let b = run_config(tmp.path(), "b", MINIMAL, &["--seed", "7", "--threads", "2"]);
    assert!(a.status.success() && b.status.success());
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in names {
        let (pa, pb) = (tmp.path().join("a").join(&name), tmp.path().join("b").join(&name));
        if name == "manifest.json" {
            let (mut ma, mut mb) = (read_json(&pa), read_json(&pb));
            ma.as_object_mut().unwrap().remove("timestamp");
            mb.as_object_mut().unwrap().remove("timestamp");
            assert_eq!(ma, mb);
        } else {
            assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap(), "{name:?} differs");
        }
    }
}

#[test]
fn manifest_hashes_match_and_detect_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_config(tmp.path(), "m", MINIMAL, &[]).status.success());
    let dir = tmp.path().join("m");
    assert!(verify_manifest(&dir).unwrap().is_empty());
    fs::write(dir.join("summary.txt"), "edited\n").unwrap();
    assert_eq!(verify_manifest(&dir).unwrap(), vec!["summary.txt".to_string()]);
}

#[test]
fn unconverged_required_task_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "problem.beta = 0.5\nsolver.max_iters = 3\nsolver.multi_start = 1\ntasks.0.kind = \"solve\"\n";
    let out = run_config(tmp.path(), "nc", text, &[]);
    assert_eq!(out.status.code(), Some(2));
    let summary = fs::read_to_string(tmp.path().join("nc/summary.txt")).unwrap();
    assert!(summary.contains("NOT CONVERGED"));

    let optional = text.replace("tasks.0.kind = \"solve\"", "tasks.0.kind = \"solve\"\ntasks.0.required = false");
    let out = run_config(tmp.path(), "opt", &optional, &[]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn empty_task_list_is_invalid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_config(tmp.path(), "empty", "problem.beta = 0.5\n", &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn plot_bundles_have_tidy_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "\
problem.beta = 0.5
problem.alpha1 = 2.0
problem.alpha2 = 2.0
problem.v1.kind = \"gaussian_well\"
problem.v1.depth = 0.5
problem.v1.width = 1.0
grid.n = 1024
grid.length = 32.0
tasks.0.kind = \"scan_subadd\"
tasks.0.theta = [0.0, 0.5, 1.0]
tasks.1.kind = \"decay\"
tasks.2.kind = \"glue\"
tasks.2.split = [0.5, 0.5]
tasks.2.separations = [256, 288, 320]
";
    let out = run_config(tmp.path(), "p", text, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("p");
    let decay_csv = fs::read_to_string(dir.join("decay.csv")).unwrap();
    assert!(decay_csv.starts_with("component,r1,r2,rate,poly,expected,r2\n"));
    let glue = read_json(&dir.join("glue.json"));
    let rec = &glue["records"][0];
    let mut keys: Vec<&str> = rec.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["gap", "kappa1", "kappa2", "n", "tau1", "tau2"]);

    let status = bin().arg("emit-plots").arg("--out").arg(&dir).status().unwrap();
    assert!(status.success());
    let plots = dir.join("plots");
    let header = |name: &str| {
        fs::read_to_string(plots.join(name))
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(header("subadd_surface.csv"), "theta1,theta2,e_inner,e_outer,gap");
    assert_eq!(header("decay_profile_u1_0.csv"), "r,log_value,fit_value");
    assert_eq!(header("glue_gap.csv"), "n,separation,kappa1,kappa2,gap");
    let surface = fs::read_to_string(plots.join("subadd_surface.csv")).unwrap();
    assert_eq!(surface.lines().count(), 1 + 8);
}

#[test]
fn emit_plots_on_empty_results_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin().arg("emit-plots").arg("--out").arg(tmp.path()).status().unwrap();
    assert!(status.success());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn emit_plots_reports_missing_inputs_per_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("emit-plots")
        .arg("--out")
        .arg(tmp.path())
        .arg(tmp.path().join("gone.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gone.json"));
}

#[test]
fn subcommands_run_their_default_task() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("conv-limit")
        .arg("--out")
        .arg(tmp.path().join("c"))
        .env("BINORM_GS_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let conv = read_json(&tmp.path().join("c/convolution.json"));
    for row in conv["rows"].as_array().unwrap() {
        let scaled = row["scaled"].as_f64().unwrap();
        assert!((scaled / (4.0 / 3.0) - 1.0).abs() < 1e-2, "{scaled}");
    }

    let cfg = tmp.path().join("i.cfg");
    fs::write(&cfg, "tasks.0.kind = \"inequalities\"\ntasks.0.p = 1.0\ntasks.0.samples = 200\n").unwrap();
    let out = bin()
        .arg("check-inequalities")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("i"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let ineq = read_json(&tmp.path().join("i/inequalities.json"));
    assert!((ineq["min_constant_34i"].as_f64().unwrap() + 6.0).abs() < 1e-2);
    assert_eq!(ineq["report_34ii"]["violation_count"], 0);
    let csv = fs::read_to_string(tmp.path().join("i/inequalities_violations.csv")).unwrap();
    assert!(csv.starts_with("x,y,defect"));
}
