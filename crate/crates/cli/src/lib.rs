//! Command-line experiment runner for the lattice Perona-Malik library.

pub mod config;
pub mod experiments;
pub mod expr;
pub mod output;
pub mod sweep;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Config, ConfigError};
use experiments::{RunError, RunOutput};
use output::write_json;

#[derive(Debug, Parser)]
#[command(name = "pmlab", version, about = "Scaled Perona-Malik lattice experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary branches under Dirichlet pulling.
    Statics(Common),
    /// Lattice energy of a sampled function against its Mumford-Shah limit.
    GammaProbe(Common),
    /// Density conditions and the equivalent energy.
    GammaEquiv(Common),
    /// Rate-independent loading with irreversibility.
    Quasistatic(Common),
    /// Minimizing-movement evolution.
    Dynamics(Common),
    /// Plateau motion on the slow time scale.
    Longtime(Common),
    /// Repeats one experiment over a list of values of one key.
    Sweep(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Seed for randomized inputs (overrides `seed` in the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run the evolution even when 4τ/ε² ≥ 1; results are marked tainted.
    #[arg(long)]
    pub allow_unstable: bool,
}

impl Command {
    fn parts(&self) -> (Option<&'static str>, &Common) {
        match self {
            Command::Statics(c) => (Some("statics"), c),
            Command::GammaProbe(c) => (Some("gamma-probe"), c),
            Command::GammaEquiv(c) => (Some("gamma-equiv"), c),
            Command::Quasistatic(c) => (Some("quasistatic"), c),
            Command::Dynamics(c) => (Some("dynamics"), c),
            Command::Longtime(c) => (Some("longtime"), c),
            Command::Sweep(c) => (None, c),
        }
    }
}

pub fn exit_code(e: &RunError) -> i32 {
    match e {
        RunError::Invariant { .. } => 2,
        RunError::Config(_) | RunError::Io(_) => 1,
    }
}

/// The config as JSON, without the keys that were left unset.
pub fn config_json(cfg: &Config) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(map) = v.as_object_mut() {
        map.retain(|_, x| !x.is_null());
    }
    v
}

/// Writes the tables, binary artifacts and manifest of one run into `dir`.
pub fn write_run(dir: &Path, cfg: &Config, out: &RunOutput, wall_time: Option<f64>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &out.tables {
        t.write(dir)?;
        files.push(format!("{}.csv", t.name));
    }
    for (rel, bytes) in &out.blobs {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
        files.push(rel.clone());
    }
    let summary: serde_json::Map<String, serde_json::Value> =
        out.summary.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let violations: Vec<_> = out.violations.iter().map(|(n, d)| json!({ "invariant": n, "detail": d })).collect();
    let mut manifest = json!({
        "experiment": cfg.experiment.clone(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config_json(cfg),
        "derived": out.details.clone(),
        "summary": summary,
        "violations": violations,
        "files": files,
    });
    if let Some(w) = wall_time {
        manifest["wall_time_seconds"] = json!(w);
    }
    write_json(&dir.join("manifest.json"), &manifest)
}

fn materialize(cmd: &Command) -> Result<(Config, PathBuf, u64), RunError> {
    let (name, common) = cmd.parts();
    let mut cfg = Config::load(&common.config)?;
    match (name, cfg.experiment.as_deref()) {
        (Some(n), None) => cfg.experiment = Some(n.to_string()),
        (Some(n), Some(m)) if n != m => {
            return Err(ConfigError::key("experiment", format!("config is for '{m}' but the subcommand is '{n}'")).into())
        }
        _ => {}
    }
    cfg.experiment()?;
    if common.allow_unstable {
        cfg.allow_unstable = Some(true);
    }
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    cfg.seed = Some(seed);
    let dir = common.out.clone().or_else(|| cfg.output.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, dir, seed))
}

/// Parses `args`, runs, writes outputs and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let start = Instant::now();
    let result = (|| -> Result<i32, RunError> {
        let (cfg, dir, seed) = materialize(&cli.command)?;
        let jobs = cli.command.parts().1.jobs;
        if let Command::Sweep(_) = cli.command {
            let (_, axis, results) = sweep::run_points(&cfg, jobs, seed)?;
            let code = sweep::write_sweep(&dir, &cfg, &axis, &results, start.elapsed().as_secs_f64())?;
            for r in &results {
                match &r.outcome {
                    Err(e) => eprintln!("{axis} = {}: {e}", r.value),
                    Ok(o) => o.violations.iter().for_each(|(n, d)| eprintln!("{axis} = {}: invariant violated: {n}: {d}", r.value)),
                }
            }
            return Ok(code);
        }
        let name = cfg.experiment()?.to_string();
        let out = experiments::run(&name, &cfg, seed)?;
        write_run(&dir, &cfg, &out, Some(start.elapsed().as_secs_f64()))?;
        for (n, d) in &out.violations {
            eprintln!("invariant violated: {n}: {d}");
        }
        Ok(if out.violations.is_empty() { 0 } else { 2 })
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            exit_code(&e)
        }
    }
}
