//! Executes an experiment: one JSON result per task plus CSV side files, a
//! hashed manifest and a plain-text summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use binorm_gs::analysis::{
    classify_decay_regime, convolution_limit_check, decay_fit, default_window, glue_energy_gap,
    overlap_series, pohozaev_residual, VanishingPattern,
};
use binorm_gs::grid::{radial_profile, Field, Grid};
use binorm_gs::inequalities::{
    check_elementary_p3, check_lemma34ii, min_constant_34i, min_constant_34ii, proof_constants_34ii,
    Scan,
};
use binorm_gs::model::{validate_on_grid, PotentialSpec, Violation};
use binorm_gs::solver::{
    minimize, minimize_scalar, minimize_with_masses, scan_subadditivity, theta_grid, SolveResult,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Task};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("problem violates {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    #[error("grid: {0}")]
    Grid(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl RunError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

/// What one task produced.
#[derive(Debug, Clone)]
pub struct TaskOutcome {
    pub stem: String,
    pub required: bool,
    pub converged: bool,
    /// Set when the task aborted; its JSON then holds only the error.
    pub error: Option<String>,
    pub summary: String,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub tasks: Vec<TaskOutcome>,
}

impl RunSummary {
    /// Required tasks whose solves did not converge.
    pub fn unconverged_required(&self) -> Vec<&str> {
        self.tasks
            .iter()
            .filter(|t| t.required && t.error.is_none() && !t.converged)
            .map(|t| t.stem.as_str())
            .collect()
    }

    pub fn failed(&self) -> Vec<&TaskOutcome> {
        self.tasks.iter().filter(|t| t.error.is_some()).collect()
    }

    /// 0 on success, 2 if a required solve did not converge, 3 if a task aborted.
    pub fn exit_code(&self) -> i32 {
        if !self.unconverged_required().is_empty() {
            2
        } else if !self.failed().is_empty() {
            3
        } else {
            0
        }
    }
}

struct Produced {
    json: Value,
    side_files: Vec<(String, String)>,
    converged: bool,
    summary: String,
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialize");
    s.push('\n');
    s
}

fn field_csv(field: &Field) -> String {
    let mut buf = Vec::new();
    field.write_csv(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Stems `solve`, `solve_2`, ... in task order.
fn stems(tasks: &[Task]) -> Vec<String> {
    let mut seen = std::collections::HashMap::new();
    tasks
        .iter()
        .map(|t| {
            let k = seen.entry(t.name()).or_insert(0usize);
            *k += 1;
            if *k == 1 {
                t.name().to_string()
            } else {
                format!("{}_{}", t.name(), k)
            }
        })
        .collect()
}

pub fn run(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    config.check()?;
    let grid = Grid::new(config.problem.dim, config.grid.n, config.grid.length)
        .map_err(|e| RunError::Grid(e.to_string()))?;
    if config.tasks.iter().any(Task::uses_problem) {
        validate_on_grid(&config.problem, &grid).map_err(RunError::Validation)?;
    }
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| RunError::io(out, e))?;

    let stems = stems(&config.tasks);
    let produced: Vec<Result<Produced, String>> = config
        .tasks
        .par_iter()
        .zip(stems.par_iter())
        .map(|(task, stem)| execute(task, stem, config, &grid))
        .collect();

    let mut files: Vec<(String, String)> = Vec::new();
    let mut tasks = Vec::new();
    for ((task, stem), result) in config.tasks.iter().zip(&stems).zip(produced) {
        let name = format!("{stem}.json");
        let outcome = match result {
            Ok(p) => {
                let mut json = p.json;
                json["task"] = json!(task.name());
                json["converged"] = json!(p.converged);
                files.push((name, pretty(&json)));
                files.extend(p.side_files);
                TaskOutcome {
                    stem: stem.clone(),
                    required: task.required(),
                    converged: p.converged,
                    error: None,
                    summary: p.summary,
                }
            }
            Err(message) => {
                files.push((name, pretty(&json!({"task": task.name(), "error": message}))));
                TaskOutcome {
                    stem: stem.clone(),
                    required: task.required(),
                    converged: false,
                    error: Some(message.clone()),
                    summary: format!("error: {message}"),
                }
            }
        };
        tasks.push(outcome);
    }
    // Stored without the output path so reruns elsewhere hash identically.
    let mut echo = serde_json::to_value(config).expect("config serializes");
    echo.as_object_mut().map(|m| m.remove("output_dir"));
    files.push(("config.txt".into(), crate::config::to_flat(&echo)));
    files.push(("config.json".into(), pretty(&echo)));
    files.push(("summary.txt".into(), summary_text(config, &tasks)));
    files.sort();

    for (name, content) in &files {
        let path = out.join(name);
        fs::write(&path, content).map_err(|e| RunError::io(&path, e))?;
    }
    let manifest = manifest(&files, config.solver.rng_seed);
    let path = out.join("manifest.json");
    fs::write(&path, pretty(&manifest)).map_err(|e| RunError::io(&path, e))?;

    let mut names: Vec<String> = files.into_iter().map(|(n, _)| n).collect();
    names.push("manifest.json".into());
    Ok(RunSummary {
        output_dir: out.clone(),
        files: names,
        tasks,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest(files: &[(String, String)], seed: u64) -> Value {
    let entries: Vec<Value> = files
        .iter()
        .map(|(name, content)| json!({"path": name, "sha256": sha256_hex(content.as_bytes())}))
        .collect();
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({"rng_seed": seed, "files": entries, "timestamp": stamp})
}

fn summary_text(config: &ExperimentConfig, tasks: &[TaskOutcome]) -> String {
    let p = &config.problem;
    let mut s = format!(
        "problem: N={} p=({}, {}, {}) mu=({}, {}) beta={} alpha=({}, {}) regime={:?}\n",
        p.dim, p.p1, p.p2, p.p3, p.mu1, p.mu2, p.beta, p.alpha1, p.alpha2, p.regime
    );
    s.push_str(&format!(
        "grid: n={} L={}   seed: {}\n",
        config.grid.n, config.grid.length, config.solver.rng_seed
    ));
    for t in tasks {
        let status = match (&t.error, t.converged) {
            (Some(_), _) => "FAILED",
            (None, true) => "ok",
            (None, false) if t.required => "NOT CONVERGED",
            (None, false) => "not converged",
        };
        s.push_str(&format!("[{status}] {}: {}\n", t.stem, t.summary));
    }
    s
}

fn execute(task: &Task, stem: &str, config: &ExperimentConfig, grid: &Grid) -> Result<Produced, String> {
    let spec = &config.problem;
    let solver = &config.solver;
    let err = |e: &dyn std::fmt::Display| e.to_string();
    match task {
        Task::Solve { .. } => {
            let r = minimize(spec, grid, solver, None).map_err(|e| err(&e))?;
            Ok(solve_output(&r, stem))
        }
        Task::ScanSubadd { theta, .. } => {
            let thetas = theta_grid(theta);
            let rep = scan_subadditivity(spec, grid, &thetas, solver).map_err(|e| err(&e))?;
            let trusted: Vec<f64> = rep
                .gap
                .iter()
                .zip(&rep.untrusted)
                .filter(|(_, u)| !**u)
                .map(|(g, _)| *g)
                .collect();
            let largest = trusted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let summary = format!(
                "e(α) = {:.8e}, {}/{} splittings trusted, largest trusted gap {largest:.4e}",
                rep.e_alpha,
                trusted.len(),
                thetas.len()
            );
            Ok(Produced {
                converged: rep.untrusted.iter().all(|u| !u),
                json: json!({"report": rep, "largest_trusted_gap": largest}),
                side_files: Vec::new(),
                summary,
            })
        }
        Task::Decay { windows, .. } => {
            let r = minimize(spec, grid, solver, None).map_err(|e| err(&e))?;
            let windows = if windows.is_empty() {
                vec![default_window(grid)]
            } else {
                windows.clone()
            };
            let (l1, l2) = (r.multipliers.lambda1, r.multipliers.lambda2);
            let mut fits = Vec::new();
            let mut csv = String::from("component,r1,r2,rate,poly,expected,r2\n");
            let mut profiles = Vec::new();
            let mut parts = Vec::new();
            for c in 1..=2 {
                let field = r.state.component(c - 1);
                let profile: Vec<[f64; 2]> = radial_profile(field)
                    .into_iter()
                    .filter(|(_, v)| *v > 0.0)
                    .map(|(rad, v)| [rad, v.ln()])
                    .collect();
                profiles.push(json!({"component": c, "points": profile}));
                let regime = classify_decay_regime(spec.p3, l1, l2, c, VanishingPattern::BothNonzero).ok();
                let expected = regime.map(|g| g.expected_rate);
                for w in &windows {
                    let fit = decay_fit(field, *w, c).map_err(|e| err(&e))?;
                    csv.push_str(&format!(
                        "{c},{:?},{:?},{:?},{:?},{},{:?}\n",
                        w[0],
                        w[1],
                        fit.rate,
                        fit.poly_exponent,
                        expected.map(|e| format!("{e:?}")).unwrap_or_default(),
                        fit.r_squared
                    ));
                    parts.push(format!(
                        "u{c} rate {:.5} (expected {})",
                        fit.rate,
                        expected.map(|e| format!("{e:.5}")).unwrap_or_else(|| "n/a".into())
                    ));
                    fits.push(json!({"fit": fit, "regime": regime}));
                }
            }
            Ok(Produced {
                converged: r.converged,
                json: json!({
                    "lambda1": l1,
                    "lambda2": l2,
                    "p3": spec.p3,
                    "fits": fits,
                    "profiles": profiles,
                }),
                side_files: vec![(format!("{stem}.csv"), csv)],
                summary: format!("λ = ({l1:.6}, {l2:.6}); {}", parts.join(", ")),
            })
        }
        Task::Glue { separations, split, .. } => {
            let alpha = spec.masses();
            let outer = [alpha[0] - split[0], alpha[1] - split[1]];
            let (u0, w0) = rayon::join(
                || minimize_with_masses(spec, grid, *split, solver),
                || minimize_with_masses(&spec.at_infinity(), grid, outer, solver),
            );
            let u0 = u0.map_err(|e| err(&e))?;
            let w0 = w0.map_err(|e| err(&e))?;
            let ledger = glue_energy_gap(&u0.state, &w0.state, spec, separations).map_err(|e| err(&e))?;
            let overlap = overlap_series(u0.state.first(), w0.state.first(), separations).map_err(|e| err(&e))?;
            let records: Vec<_> = ledger.iter().map(|l| l.record()).collect();
            let expected = u0.multipliers.lambda1.max(0.0).sqrt();
            let negative = ledger.iter().all(|l| l.gap < 0.0);
            let shrinking = ledger.windows(2).all(|w| w[1].gap.abs() < w[0].gap.abs());
            let summary = format!(
                "κ₁ rate {} vs {expected:.5}; gaps all negative: {negative}; |gap| decreasing: {shrinking}",
                overlap
                    .fitted_rate
                    .map(|r| format!("{r:.5}"))
                    .unwrap_or_else(|| "n/a".into()),
            );
            Ok(Produced {
                converged: u0.converged && w0.converged,
                json: json!({
                    "split": split,
                    "inner_multipliers": u0.multipliers,
                    "outer_multipliers": w0.multipliers,
                    "expected_rate": expected,
                    "overlap": overlap,
                    "records": records,
                    "ledger": ledger,
                }),
                side_files: Vec::new(),
                summary,
            })
        }
        Task::Pohozaev { .. } => {
            let rows: Vec<(SolveResult, f64, f64, f64)> = (0..2)
                .into_par_iter()
                .map(|i| {
                    let (mu, p, mass) = (spec.coupling(i), spec.exponent(i), spec.masses()[i]);
                    minimize_scalar(grid, mu, p, &PotentialSpec::Zero, mass, solver)
                        .map(|r| (r, mu, p, mass))
                        .map_err(|e| err(&e))
                })
                .collect::<Result<_, _>>()?;
            let mut entries = Vec::new();
            let mut parts = Vec::new();
            for (i, (r, mu, p, mass)) in rows.iter().enumerate() {
                let rep = pohozaev_residual(r.state.first(), r.multipliers.lambda1, *mu, *p, spec.dim);
                parts.push(format!("component {}: {:.3e}", i + 1, rep.residual));
                entries.push(json!({
                    "component": i + 1,
                    "mu": mu,
                    "p": p,
                    "mass": mass,
                    "energy": r.energy(),
                    "lambda": r.multipliers.lambda1,
                    "converged": r.converged,
                    "pohozaev": rep,
                }));
            }
            Ok(Produced {
                converged: rows.iter().all(|r| r.0.converged),
                json: json!({"dim": spec.dim, "components": entries}),
                side_files: Vec::new(),
                summary: format!("residuals {}", parts.join(", ")),
            })
        }
        Task::Inequalities {
            p,
            eta,
            constant,
            x_max,
            samples,
            resolution,
        } => {
            let eta = eta.unwrap_or(p / 2.0);
            let scan = Scan {
                x_max: *x_max,
                samples: *samples,
            };
            let proof = proof_constants_34ii(*p, eta).map_err(|e| err(&e))?;
            let c = constant.unwrap_or(proof.constant);
            let c34i = min_constant_34i(*p, *resolution, 1e3, 2000).map_err(|e| err(&e))?;
            let report = check_lemma34ii(*p, eta, c, &scan).map_err(|e| err(&e))?;
            let minimal = min_constant_34ii(*p, eta, *resolution, &scan).map_err(|e| err(&e))?;
            let elementary = check_elementary_p3(*p, &scan).map_err(|e| err(&e))?;
            let summary = format!(
                "p={p} η={eta}: min C(i) ≈ {c34i:.4}, min C(ii) ≈ {:.4}, C={c:.4e} gives {} violations over {} points, elementary bounds {}",
                minimal.estimate,
                report.violation_count,
                report.points_checked,
                if elementary.holds() { "hold" } else { "fail" }
            );
            Ok(Produced {
                converged: true,
                json: json!({
                    "p": p,
                    "eta": eta,
                    "min_constant_34i": c34i,
                    "min_constant_34ii": minimal,
                    "proof_constants": proof,
                    "report_34ii": report,
                    "elementary": elementary,
                }),
                side_files: vec![(format!("{stem}_violations.csv"), report.violations_csv())],
                summary,
            })
        }
        Task::Convolution {
            f,
            g,
            alpha,
            beta,
            gamma,
            r,
            omegas,
        } => {
            let rows = convolution_limit_check(grid, f, g, *alpha, *beta, *gamma, r, omegas).map_err(|e| err(&e))?;
            let worst = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);
            Ok(Produced {
                converged: true,
                json: json!({"rows": rows, "worst_deviation": worst}),
                side_files: Vec::new(),
                summary: format!("{} rows, worst relative deviation {worst:.3e}", rows.len()),
            })
        }
    }
}

fn solve_output(r: &SolveResult, stem: &str) -> Produced {
    let record = r.report.record(&r.multipliers);
    let summary = format!(
        "E = {:.10e}, λ = ({:.6}, {:.6}), {} iterations",
        r.energy(),
        r.multipliers.lambda1,
        r.multipliers.lambda2,
        r.iterations
    );
    Produced {
        json: json!({
            "energy": r.energy(),
            "report": record,
            "iterations": r.iterations,
            "final_residual": r.final_residual,
            "el_residual": r.el_residual,
            "start_energies": r.start_energies,
            "best_start": r.best_start,
            "max_energy_increase": r.max_energy_increase,
            "max_mass_defect": r.max_mass_defect,
        }),
        side_files: vec![
            (format!("{stem}_trajectory.csv"), r.trajectory_csv()),
            (format!("{stem}_u1.csv"), field_csv(r.state.first())),
            (format!("{stem}_u2.csv"), field_csv(r.state.second())),
        ],
        converged: r.converged,
        summary,
    }
}

/// Recomputes every manifest hash; returns the files that do not match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, RunError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| RunError::io(&path, e))?;
    let manifest: Value = serde_json::from_str(&text).map_err(|e| RunError::Io {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let mut bad = Vec::new();
    for entry in manifest["files"].as_array().into_iter().flatten() {
        let name = entry["path"].as_str().unwrap_or_default();
        let ok = fs::read(dir.join(name))
            .map(|b| entry["sha256"].as_str() == Some(sha256_hex(&b).as_str()))
            .unwrap_or(false);
        if !ok {
            bad.push(name.to_string());
        }
    }
    Ok(bad)
}
