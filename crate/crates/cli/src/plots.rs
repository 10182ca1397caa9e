//! Tidy CSV bundles built from task result files. Nothing is rendered.

use std::fs;
use std::path::{Path, PathBuf};

use binorm_gs::analysis::DecayFit;
use serde_json::Value;

#[derive(Debug, Default)]
pub struct PlotReport {
    pub written: Vec<PathBuf>,
    /// Inputs that could not be used, with the reason.
    pub problems: Vec<(PathBuf, String)>,
}

/// Task result files (`*.json` carrying a `task` key) in `dir`, sorted.
pub fn result_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let is_task = fs::read_to_string(&path)
                .ok()
                .and_then(|t| serde_json::from_str::<Value>(&t).ok())
                .is_some_and(|v| v.get("task").is_some());
            if is_task {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn num(v: &Value) -> String {
    v.as_f64().map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Writes CSVs for every usable input into `out_dir`.
pub fn emit_plot_data(inputs: &[PathBuf], out_dir: &Path) -> PlotReport {
    let mut report = PlotReport::default();
    for input in inputs {
        let parsed = fs::read_to_string(input)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<Value>(&t).map_err(|e| e.to_string()));
        let value = match parsed {
            Ok(v) => v,
            Err(e) => {
                report.problems.push((input.clone(), e));
                continue;
            }
        };
        let stem = input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let bundles = match value["task"].as_str() {
            Some("subadd") => subadd(&value, &stem),
            Some("decay") => decay(&value, &stem),
            Some("glue") => glue(&value, &stem),
            Some(_) => Ok(Vec::new()),
            None => Err("not a task result".to_string()),
        };
        match bundles {
            Ok(files) => {
                if !files.is_empty() {
                    if let Err(e) = fs::create_dir_all(out_dir) {
                        report.problems.push((out_dir.to_path_buf(), e.to_string()));
                        return report;
                    }
                }
                for (name, content) in files {
                    let path = out_dir.join(name);
                    match fs::write(&path, content) {
                        Ok(()) => report.written.push(path),
                        Err(e) => report.problems.push((path, e.to_string())),
                    }
                }
            }
            Err(e) => report.problems.push((input.clone(), e)),
        }
    }
    report
}

fn subadd(v: &Value, stem: &str) -> Result<Vec<(String, String)>, String> {
    let rep = &v["report"];
    let col = |k: &str| rep[k].as_array().ok_or_else(|| format!("missing report.{k}"));
    let (theta, inner, outer, gap) = (col("theta")?, col("e_inner")?, col("e_outer")?, col("gap")?);
    let mut s = String::from("theta1,theta2,e_inner,e_outer,gap\n");
    for i in 0..theta.len() {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            num(&theta[i][0]),
            num(&theta[i][1]),
            num(&inner[i]),
            num(&outer[i]),
            num(&gap[i])
        ));
    }
    Ok(vec![(format!("{stem}_surface.csv"), s)])
}

fn decay(v: &Value, stem: &str) -> Result<Vec<(String, String)>, String> {
    let fits = v["fits"].as_array().ok_or("missing fits")?;
    let profiles = v["profiles"].as_array().ok_or("missing profiles")?;
    let mut out = Vec::new();
    for (k, entry) in fits.iter().enumerate() {
        let fit: DecayFit = serde_json::from_value(entry["fit"].clone()).map_err(|e| e.to_string())?;
        let points = profiles
            .iter()
            .find(|p| p["component"].as_u64() == Some(fit.component as u64))
            .and_then(|p| p["points"].as_array())
            .ok_or_else(|| format!("missing profile for component {}", fit.component))?;
        let mut s = String::from("r,log_value,fit_value\n");
        for pt in points {
            let r = pt[0].as_f64().ok_or("bad profile point")?;
            let fit_value = if r >= fit.window[0] && r <= fit.window[1] {
                format!("{:?}", fit.log_model(r))
            } else {
                String::new()
            };
            s.push_str(&format!("{r:?},{},{fit_value}\n", num(&pt[1])));
        }
        out.push((format!("{stem}_profile_u{}_{}.csv", fit.component, k), s));
    }
    Ok(out)
}

fn glue(v: &Value, stem: &str) -> Result<Vec<(String, String)>, String> {
    let ledger = v["ledger"].as_array().ok_or("missing ledger")?;
    let mut s = String::from("n,separation,kappa1,kappa2,gap\n");
    for row in ledger {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            row["n"],
            num(&row["separation"]),
            num(&row["kappa1"]),
            num(&row["kappa2"]),
            num(&row["gap"])
        ));
    }
    Ok(vec![(format!("{stem}_gap.csv"), s)])
}
