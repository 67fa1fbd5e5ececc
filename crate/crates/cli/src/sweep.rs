//! Parameter sweeps: one run per value, in parallel, outputs identical for
//! any worker count.

use std::path::Path;

use rayon::prelude::*;
use serde_json::json;

use crate::config::{Config, ConfigError};
use crate::experiments::{self, RunError, RunOutput};
use crate::output::{write_json, Cell, Table};
use crate::write_run;

pub struct PointResult {
    pub value: f64,
    pub outcome: Result<RunOutput, RunError>,
}

/// Runs every point of the sweep and returns them in input order.
pub fn run_points(cfg: &Config, jobs: usize, seed: u64) -> Result<(String, String, Vec<PointResult>), RunError> {
    let name = cfg.experiment()?.to_string();
    let axis = Config::need(&cfg.sweep_axis, "sweep_axis")?;
    let values = Config::need(&cfg.sweep_values, "sweep_values")?;
    if values.is_empty() {
        return Err(ConfigError::key("sweep_values", "empty").into());
    }
    // reject a bad axis before spawning anything
    let points: Vec<Config> = values.iter().map(|&v| cfg.with_axis(&axis, v)).collect::<Result<_, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RunError::Io(std::io::Error::other(e.to_string())))?;
    let results = pool.install(|| {
        points
            .par_iter()
            .zip(values.par_iter())
            .map(|(p, &value)| {
                let s = p.seed.unwrap_or(seed);
                PointResult { value, outcome: experiments::run(&name, p, s) }
            })
            .collect()
    });
    Ok((name, axis, results))
}

/// Writes `point_XXX/` per point and `aggregate.csv` sorted by the axis value.
/// Returns the exit code of the most severe failure.
pub fn write_sweep(dir: &Path, cfg: &Config, axis: &str, results: &[PointResult], wall_time: f64) -> Result<i32, RunError> {
    std::fs::create_dir_all(dir)?;
    let keys: Vec<String> = results
        .iter()
        .find_map(|r| r.outcome.as_ref().ok())
        .map(|o| o.summary.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut header = vec![axis.to_string(), "point".into(), "status".into()];
    header.extend(keys.iter().cloned());
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut agg = Table::new("aggregate", &hdr);

    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| results[a].value.total_cmp(&results[b].value).then(a.cmp(&b)));

    let mut code = 0;
    let mut points = Vec::new();
    for &i in &order {
        let r = &results[i];
        let label = format!("point_{i:03}");
        let point_cfg = cfg.with_axis(axis, r.value)?;
        let mut row: Vec<Cell> = vec![r.value.into(), label.clone().into()];
        match &r.outcome {
            Ok(out) => {
                write_run(&dir.join(&label), &point_cfg, out, None)?;
                let status = if out.violations.is_empty() { "ok" } else { "violation" };
                if !out.violations.is_empty() {
                    code = code.max(2);
                }
                row.push(status.into());
                for k in &keys {
                    let v = out.summary.iter().find(|(n, _)| n == k).map(|(_, v)| *v);
                    row.push(v.map_or(Cell::Text(String::new()), Cell::Float));
                }
                points.push(json!({ "point": label, "value": r.value, "status": status }));
            }
            Err(e) => {
                let c = crate::exit_code(e);
                code = code.max(c);
                row.push("error".into());
                row.extend(keys.iter().map(|_| Cell::Text(String::new())));
                points.push(json!({ "point": label, "value": r.value, "status": "error", "error": e.to_string() }));
            }
        }
        agg.push(row);
    }
    agg.write(dir)?;
    write_json(
        &dir.join("manifest.json"),
        &json!({
            "experiment": cfg.experiment.clone(),
            "sweep_axis": axis,
            "config": crate::config_json(cfg),
            "points": points,
            "wall_time_seconds": wall_time,
        }),
    )?;
    Ok(code)
}
