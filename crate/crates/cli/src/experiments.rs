//! One function per experiment: read the keys it needs, run the library,
//! return tables, a summary row and the derived parameters for the manifest.

use serde_json::{json, Value};

use pmlab::dynamics::{
    holder_estimate, jump_persistence_check, jump_set_trace, minimizing_movement_with, random_field, write_state_dump,
    FluxReport, MMConfig,
};
use pmlab::energy::{gamma_probe, g_eps_energy_unchecked, ms_energy, JumpDensity};
use pmlab::interpolation::InterpolationThresholds;
use pmlab::longtime::{gprime_longtime_check, longtime_comparison, PlateauConfig, MATCH_TOL, ODE_GUARD};
use pmlab::quasistatic::{ms_quasistatic_oracle, quasistatic_convergence_table, quasistatic_run, LoadProgram, QuasistaticModel};
use pmlab::statics::{
    all_branches, critical_lambda, global_minimum_comparison, perturbation_check, stationarity_tolerance, Classification, DirichletBC,
    DEGENERACY_BAND, STATIONARITY_TOL,
};
use pmlab::{Error, Field, Function};

use crate::config::{Config, ConfigError};
use crate::expr::Expr;
use crate::output::{Cell, Table};

/// Failure of a run, mapped onto the exit code by the caller.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Invariant { name: String, detail: String },
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Invariant { name, detail } => write!(f, "invariant violated: {name}: {detail}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Library errors that come from the numerics rather than from bad input.
fn lib(key: &str) -> impl Fn(Error) -> RunError + '_ {
    move |e| match e {
        Error::Unstable { ratio } => RunError::Invariant {
            name: "stability condition 4τ/ε² < 1".into(),
            detail: format!("4τ/ε² = {ratio}; pass --allow-unstable to run anyway"),
        },
        Error::NoConvergence { .. } => RunError::Invariant { name: "solver convergence".into(), detail: e.to_string() },
        Error::NotStationary { .. } => RunError::Invariant { name: "stationarity".into(), detail: e.to_string() },
        other => RunError::Config(ConfigError::key(key, other.to_string())),
    }
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    /// Binary artifacts as `(relative path, bytes)`.
    pub blobs: Vec<(String, Vec<u8>)>,
    /// Scalar results, in a fixed order, used for sweep aggregation.
    pub summary: Vec<(String, f64)>,
    /// Derived parameters and reports for the manifest.
    pub details: Value,
    /// Violated invariants; outputs are still written.
    pub violations: Vec<(String, String)>,
}

pub fn run(name: &str, cfg: &Config, seed: u64) -> Result<RunOutput, RunError> {
    match name {
        "statics" => statics(cfg, seed),
        "gamma-probe" => probe(cfg),
        "gamma-equiv" => equiv(cfg),
        "quasistatic" => quasistatic(cfg),
        "dynamics" => dynamics(cfg, seed),
        "longtime" => longtime(cfg),
        other => Err(ConfigError::key("experiment", format!("unknown experiment '{other}'")).into()),
    }
}

fn function(cfg: &Config) -> Result<Function, RunError> {
    let src = Config::need(&cfg.initial, "initial")?;
    let e = Expr::parse(&src, 'x').map_err(|e| ConfigError::key("initial", e.to_string()))?;
    Ok(e.to_function().map_err(|m| ConfigError::key("initial", m))?)
}

fn load(cfg: &Config) -> Result<LoadProgram<f64>, RunError> {
    match (&cfg.load, cfg.t0) {
        (Some(_), Some(_)) => Err(ConfigError::key("t0", "give either `load` or `t0` (hat load), not both").into()),
        (None, Some(t0)) => Ok(LoadProgram::hat(t0)),
        (Some(src), None) => {
            let e = Expr::parse(src, 't').map_err(|e| ConfigError::key("load", e.to_string()))?;
            Ok(e.to_load().map_err(|m| ConfigError::key("load", m))?)
        }
        (None, None) => Err(ConfigError::key("load", "missing (or give `t0` for a hat load)").into()),
    }
}

fn density(cfg: &Config) -> Result<JumpDensity<f64>, RunError> {
    match cfg.density.as_deref().unwrap_or("log_half") {
        "log_half" => Ok(JumpDensity::log_half()),
        "saturating" => Ok(JumpDensity::saturating()),
        other => Err(ConfigError::key("density", format!("unknown density '{other}' (expected log_half or saturating)")).into()),
    }
}

fn eps_list(cfg: &Config) -> Result<Vec<f64>, RunError> {
    let list = match (&cfg.eps_list, cfg.eps) {
        (Some(l), _) => l.clone(),
        (None, Some(e)) => vec![e],
        (None, None) => return Err(ConfigError::key("eps_list", "missing").into()),
    };
    if list.is_empty() {
        return Err(ConfigError::key("eps_list", "empty").into());
    }
    if list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError::key("eps_list", "must be strictly decreasing").into());
    }
    Ok(list)
}

fn scaling_json(eps: f64) -> Value {
    let l = eps.ln().abs();
    let mut v = json!({ "eps": eps, "log_abs_eps": l, "threshold_elongation": (eps / l).sqrt() });
    if let Ok(t) = InterpolationThresholds::<f64>::new(eps) {
        v["p"] = json!(t.p);
        v["b"] = json!(t.b);
        v["c"] = json!(t.c);
        v["jump_threshold"] = json!(t.jump_threshold);
    }
    v
}

fn lambdas(cfg: &Config) -> Result<Vec<f64>, RunError> {
    if let Some(l) = cfg.lambda {
        return Ok(vec![l]);
    }
    let lo = Config::need(&cfg.lambda_min, "lambda_min")?;
    let hi = Config::need(&cfg.lambda_max, "lambda_max")?;
    let step = Config::positive(cfg.lambda_step, "lambda_step")?;
    if hi < lo {
        return Err(ConfigError::key("lambda_max", "must not be below lambda_min").into());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| lo + k as f64 * step).collect())
}

fn statics(cfg: &Config, seed: u64) -> Result<RunOutput, RunError> {
    let n = cfg.springs()?;
    let eps = 1.0 / n as f64;
    let trials = cfg.trials.unwrap_or(0);
    let magnitude = cfg.magnitude.unwrap_or(1e-4);
    let mut branches = Table::new(
        "branches",
        &["lambda", "kind", "classification", "multiplier", "energy", "hessian_min_eigenvalue", "residual", "overstretch", "perturbation_min_change", "perturbation_decreases"],
    );
    let mut global = Table::new("global_min", &["lambda", "branch_min", "jump_candidate", "lattice_min", "continuum_min", "gap"]);
    let mut out = RunOutput::default();
    let (mut count, mut minima, mut worst_residual, mut worst_gap) = (0usize, 0usize, 0.0f64, 0.0f64);
    for lambda in lambdas(cfg)? {
        let bc = DirichletBC::pulled(lambda).map_err(lib("lambda"))?;
        for p in all_branches(eps, &bc, n).map_err(lib("eps"))? {
            count += 1;
            worst_residual = worst_residual.max(p.residual);
            if p.residual > stationarity_tolerance(&p.field) {
                out.violations.push(("stationarity".into(), format!("λ = {lambda}: residual {}", p.residual)));
            }
            let (pmin, pdec) = if p.classification == Classification::LocalMin {
                minima += 1;
                if trials > 0 {
                    let r = perturbation_check(&p.field, trials, magnitude, seed);
                    if !r.confirms_local_min() {
                        out.violations.push(("local minimum perturbation check".into(), format!("λ = {lambda}: {} decreases", r.decreases)));
                    }
                    (Cell::Float(r.min_change), Cell::Int(r.decreases as u64))
                } else {
                    (Cell::Text(String::new()), Cell::Text(String::new()))
                }
            } else {
                (Cell::Text(String::new()), Cell::Text(String::new()))
            };
            branches.push(vec![
                lambda.into(),
                p.kind.label().into(),
                p.classification.label().into(),
                p.multiplier.into(),
                p.energy.into(),
                p.hessian_min_eigenvalue.into(),
                p.residual.into(),
                p.overstretch.map_or(Cell::Text(String::new()), Cell::Float),
                pmin,
                pdec,
            ]);
        }
        let g = global_minimum_comparison(eps, lambda, n).map_err(lib("eps"))?;
        worst_gap = worst_gap.max(g.gap);
        global.push(vec![
            lambda.into(),
            g.branch_min.map_or(Cell::Text(String::new()), Cell::Float),
            g.jump_candidate.into(),
            g.lattice_min.into(),
            g.continuum_min.into(),
            g.gap.into(),
        ]);
    }
    out.tables = vec![branches, global];
    out.summary = vec![
        ("branches".into(), count as f64),
        ("local_minima".into(), minima as f64),
        ("max_residual".into(), worst_residual),
        ("max_global_gap".into(), worst_gap),
    ];
    out.details = json!({
        "springs": n,
        "scaling": scaling_json(eps),
        "critical_lambda": critical_lambda(eps).map_err(lib("eps"))?,
        "stationarity_tol": STATIONARITY_TOL,
        "degeneracy_band": DEGENERACY_BAND,
        "perturbation": { "trials": trials, "magnitude": magnitude, "seed": seed },
    });
    Ok(out)
}

fn probe(cfg: &Config) -> Result<RunOutput, RunError> {
    let u = function(cfg)?;
    let list = eps_list(cfg)?;
    let rows = gamma_probe(&u, &list).map_err(lib("eps_list"))?;
    let mut t = Table::new("probe", &["eps", "springs", "lattice_energy", "ms_energy", "gap"]);
    for r in &rows {
        t.push(vec![r.eps.into(), r.springs.into(), r.lattice_energy.into(), r.ms_energy.into(), r.gap.into()]);
    }
    let last = rows.last().expect("non-empty list");
    Ok(RunOutput {
        summary: vec![
            ("lattice_energy".into(), last.lattice_energy),
            ("ms_energy".into(), last.ms_energy),
            ("gap".into(), last.gap),
        ],
        details: json!({ "jumps": u.jumps(), "scalings": list.iter().map(|&e| scaling_json(e)).collect::<Vec<_>>() }),
        tables: vec![t],
        ..Default::default()
    })
}

fn equiv(cfg: &Config) -> Result<RunOutput, RunError> {
    let u = function(cfg)?;
    let g = density(cfg)?;
    let list = eps_list(cfg)?;
    let report = g.report();
    let limit = ms_energy(&u).map_err(lib("initial"))?;
    let mut t = Table::new("g_energy", &["eps", "g_energy", "ms_energy", "gap"]);
    let mut last = (0.0, 0.0);
    for &eps in &list {
        let e = g_eps_energy_unchecked(&u, eps, &g).map_err(lib("eps_list"))?;
        last = (e, (e - limit).abs());
        t.push(vec![eps.into(), e.into(), limit.into(), last.1.into()]);
    }
    Ok(RunOutput {
        summary: vec![("g_energy".into(), last.0), ("gap".into(), last.1)],
        details: json!({
            "density": g.name(),
            "value_at_zero": report.value_at_zero,
            "slope_at_zero": report.slope_at_zero,
            "concave": report.concave,
            "asymptote_deviation": report.asymptote_deviation,
            "asymptote_ok": report.asymptote_ok,
            "all_conditions": report.all_ok(),
        }),
        tables: vec![t],
        ..Default::default()
    })
}

fn quasistatic(cfg: &Config) -> Result<RunOutput, RunError> {
    let tau = Config::positive(cfg.tau, "tau")?;
    let horizon = Config::positive(cfg.horizon, "horizon")?;
    let h = load(cfg)?;
    h.check_continuity(horizon).map_err(lib("load"))?;
    let mut out = RunOutput::default();
    if let Some(list) = &cfg.eps_list {
        if list.is_empty() {
            return Err(ConfigError::key("eps_list", "empty").into());
        }
        let (rows, monotone) = quasistatic_convergence_table(&h, list, tau, horizon).map_err(lib("eps_list"))?;
        let mut t = Table::new("convergence", &["eps", "h_tilde", "sup_gap"]);
        for r in &rows {
            t.push(vec![r.eps.into(), r.h_tilde.into(), r.sup_gap.into()]);
        }
        out.tables.push(t);
        out.details = json!({ "monotone_within_5_percent": monotone, "load": h.description() });
        let last = rows.last().expect("non-empty list");
        out.summary = vec![("h_tilde".into(), last.h_tilde), ("sup_gap".into(), last.sup_gap)];
        return Ok(out);
    }
    let eps = cfg.eps()?;
    let mut model = QuasistaticModel::new(eps).map_err(lib("eps"))?;
    if cfg.dissipation == Some(false) {
        model = model.without_dissipation();
    }
    let trace = quasistatic_run(&model, tau, &h, horizon).map_err(lib("tau"))?;
    let oracle = ms_quasistatic_oracle(&h, horizon, tau);
    let mut t = Table::new("trace", &["k", "t", "load", "energy", "w_last", "memory", "elastic", "limit_energy"]);
    let mut sup = 0.0f64;
    for (r, (_, e)) in trace.rows.iter().zip(&oracle) {
        sup = sup.max((r.energy - e).abs());
        t.push(vec![r.k.into(), r.t.into(), r.load.into(), r.energy.into(), r.w_last.into(), r.memory.into(), r.elastic.into(), (*e).into()]);
    }
    out.tables.push(t);
    out.summary = vec![
        ("h_tilde".into(), trace.h_tilde),
        ("sup_gap".into(), sup),
        ("final_energy".into(), trace.rows.last().map_or(0.0, |r| r.energy)),
    ];
    out.details = json!({
        "springs": model.springs,
        "scaling": scaling_json(eps),
        "h_tilde": trace.h_tilde,
        "dissipation": model.dissipation,
        "load": h.description(),
    });
    Ok(out)
}

fn dynamics(cfg: &Config, seed: u64) -> Result<RunOutput, RunError> {
    let n = cfg.springs()?;
    let mut mm = MMConfig::new(Config::positive(cfg.tau, "tau")?, Config::positive(cfg.horizon, "horizon")?);
    mm.solver_tol = cfg.solver_tol.unwrap_or(mm.solver_tol);
    mm.max_newton_iters = cfg.max_newton_iters.unwrap_or(mm.max_newton_iters);
    mm.jump_floor = cfg.gamma.unwrap_or(mm.jump_floor);
    mm.allow_unstable = cfg.allow_unstable.unwrap_or(false);
    mm.record_stride = cfg.record_stride.unwrap_or(0);
    mm.flux_stride = cfg.flux_stride.unwrap_or(mm.flux_stride);
    let dump_stride = cfg.dump_stride.unwrap_or(0);

    let u0: Field = match cfg.initial.as_deref() {
        Some("random") => random_field(n, seed).map_err(lib("springs"))?,
        _ => function(cfg)?.sample_lattice(n).map_err(lib("initial"))?,
    };
    let mut flux = Table::new("flux", &["k", "t", "max_flux", "max_jump_flux", "jump_flux_bound", "jump_springs", "small_slope_rel_error", "small_slope_bound"]);
    let mut blobs = Vec::new();
    let flux_row = |t: &mut Table, k: usize, f: &Field| {
        let r = FluxReport::of(f, mm.jump_floor);
        t.push(vec![
            k.into(),
            (k as f64 * mm.tau).into(),
            r.max_flux.into(),
            r.max_jump_flux.into(),
            r.jump_flux_bound.into(),
            r.jump_springs.into(),
            r.small_slope_rel_error.into(),
            r.small_slope_bound.into(),
        ]);
    };
    let dump = |k: usize, f: &Field, blobs: &mut Vec<(String, Vec<u8>)>| {
        let mut buf = Vec::new();
        write_state_dump(&mut buf, f, mm.tau, k as u64).expect("writing to memory");
        blobs.push((format!("dumps/state_{k:08}.bin"), buf));
    };
    if mm.flux_stride > 0 {
        flux_row(&mut flux, 0, &u0);
    }
    if dump_stride > 0 {
        dump(0, &u0, &mut blobs);
    }
    let trace = minimizing_movement_with(&u0, &mm, |k, f| {
        if mm.flux_stride > 0 && k % mm.flux_stride == 0 {
            flux_row(&mut flux, k, f);
        }
        if dump_stride > 0 && k % dump_stride == 0 {
            dump(k, f, &mut blobs);
        }
    })
    .map_err(lib("tau"))?;

    let holder = holder_estimate(&trace).map_err(lib("horizon"))?;
    let inclusion = jump_set_trace(&trace);
    let persistence = jump_persistence_check(&trace, mm.jump_floor);
    let mut t = Table::new("trace", &["k", "t", "energy", "sup_norm", "jumps", "holder_c_running"]);
    for ((k, _), (_, c)) in trace.recorded.iter().zip(&holder.running) {
        t.push(vec![
            (*k).into(),
            trace.time(*k).into(),
            trace.energies[*k].into(),
            trace.sup_norms[*k].into(),
            trace.jump_sets[*k].len().into(),
            (*c).into(),
        ]);
    }
    let last = trace.final_state();
    let mut state = Table::new("final_state", &["i", "x", "u"]);
    for (i, v) in last.values().iter().enumerate() {
        state.push(vec![i.into(), (i as f64 / n as f64).into(), (*v).into()]);
    }

    let mut out = RunOutput { blobs, ..Default::default() };
    let mut found: Vec<(String, String)> =
        trace.violations.iter().map(|v| (v.invariant.to_string(), format!("step {}: excess {}", v.step, v.excess))).collect();
    if !inclusion.holds() {
        found.push(("jump-set inclusion".into(), format!("first failure at step {:?}", inclusion.first_violation)));
    }
    if !holder.holds() {
        found.push(("holder bound".into(), format!("{} > {}", holder.constant, holder.bound)));
    }
    let recorded: Vec<Value> = found.iter().map(|(n, d)| json!({ "invariant": n, "detail": d })).collect();
    // an unstable run was asked for explicitly: report, do not fail
    if !trace.tainted {
        out.violations = found;
    }
    out.summary = vec![
        ("final_energy".into(), *trace.energies.last().expect("initial energy")),
        ("final_sup_norm".into(), *trace.sup_norms.last().expect("initial norm")),
        ("final_jumps".into(), trace.jump_sets.last().map_or(0, Vec::len) as f64),
        ("holder_constant".into(), holder.constant),
        ("violations".into(), trace.violations.len() as f64),
    ];
    out.details = json!({
        "springs": n,
        "scaling": scaling_json(1.0 / n as f64),
        "solver": mm,
        "steps": trace.steps(),
        "stability_ratio": trace.stability_ratio,
        "tainted": trace.tainted,
        "tainted_violations": if trace.tainted { recorded } else { Vec::new() },
        "newton_iterations": trace.newton_iterations,
        "fallbacks": trace.fallbacks,
        "min_dissipation_margin": trace.min_dissipation_margin,
        "mass": { "initial": u0.mass(), "final": last.mass() },
        "holder": { "constant": holder.constant, "bound": holder.bound, "pairs": holder.pairs },
        "inclusion": inclusion,
        "persistence": persistence,
        "dump_stride": dump_stride,
        "initial_seed": seed,
    });
    out.tables = vec![t, flux, state];
    Ok(out)
}

fn plateau(cfg: &Config) -> Result<PlateauConfig, RunError> {
    let mut p = PlateauConfig::new(
        Config::need(&cfg.x0, "x0")?,
        Config::need(&cfg.x1, "x1")?,
        Config::need(&cfg.z0, "z0")?,
        cfg.eps()?,
        Config::positive(cfg.tau, "tau")?,
        Config::positive(cfg.horizon, "horizon")?,
    )
    .map_err(lib("x0"))?;
    if let Some(l) = cfg.time_scale {
        p.lambda = Some(Config::positive(Some(l), "time_scale")?);
    }
    Ok(p)
}

fn longtime(cfg: &Config) -> Result<RunOutput, RunError> {
    let p = plateau(cfg)?;
    let dt = cfg.ode_dt.unwrap_or(p.tau / 10.0);
    let (cmp, scheme, ode) = longtime_comparison(&p, dt).map_err(lib("z0"))?;
    let mut t = Table::new("longtime", &["k", "t", "z_scheme", "z_ode", "abs_error"]);
    for (k, z) in scheme.z.iter().enumerate() {
        let (zo, err) = match ode.z.get(k) {
            Some(o) => (Cell::Float(*o), Cell::Float((z - o).abs())),
            None => (Cell::Text(String::new()), Cell::Text(String::new())),
        };
        t.push(vec![k.into(), (k as f64 * p.tau).into(), (*z).into(), zo, err]);
    }
    let mut out = RunOutput::default();
    out.summary = vec![("sup_error".into(), cmp.sup_error), ("final_z".into(), *scheme.z.last().expect("z0"))];
    out.details = json!({
        "plateau": p,
        "lambda": p.lambda(),
        "eta": p.eta(),
        "ode_dt": dt,
        "ode_guard": ODE_GUARD,
        "comparison": cmp,
    });
    out.tables.push(t);
    if cfg.density.is_some() {
        let g = density(cfg)?;
        let (report, trace) = gprime_longtime_check(&g, &p, dt).map_err(lib("density"))?;
        let mut gt = Table::new("gprime", &["k", "t", "z_density", "z_ode", "abs_error"]);
        for (k, z) in trace.z.iter().enumerate() {
            let (zo, err) = match ode.z.get(k) {
                Some(o) => (Cell::Float(*o), Cell::Float((z - o).abs())),
                None => (Cell::Text(String::new()), Cell::Text(String::new())),
            };
            gt.push(vec![k.into(), (k as f64 * p.tau).into(), (*z).into(), zo, err]);
        }
        out.tables.push(gt);
        out.summary.push(("gprime_sup_error".into(), report.comparison.sup_error));
        out.details["gprime"] = json!({ "report": report, "match_tol": MATCH_TOL });
    }
    Ok(out)
}
