//! Acceptance suite: one PASS/FAIL line per criterion at pinned tolerances.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! The process fails only when a criterion fails on a check that is not in
//! `KNOWN_SHORTFALLS`, i.e. on a regression.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use pmlab::dynamics::{jump_set_trace, jump_springs, minimizing_movement, random_field, MMConfig};
use pmlab::energy::{gamma_probe, g_eps_energy_unchecked, ms_energy, JumpDensity, LatticeField, PiecewiseH1Function};
use pmlab::longtime::{gprime_longtime_check, longtime_comparison, scaled_scheme, PlateauConfig};
use pmlab::quasistatic::{quasistatic_convergence_table, quasistatic_run, LoadProgram, QuasistaticModel, ms_quasistatic_oracle};
use pmlab::statics::{
    all_branches, critical_lambda, global_minimum_comparison, overstretch_branches, perturbation_check, BranchKind,
    Classification, DirichletBC, STATIONARITY_TOL,
};
use pmlab_cli::expr::Expr;

/// Checks that cannot pass at the pinned tolerances; the analysis lives with
/// the project notes. Everything else must pass.
const KNOWN_SHORTFALLS: [(u32, &str); 3] =
    [(3, "gap at lambda=1.5"), (5, "each side L2 error"), (8, "monotone approach")];

struct Check {
    label: String,
    pass: bool,
    detail: String,
}

fn check(label: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check { label: label.to_string(), pass, detail: detail.into() }
}

fn l2_on(u: &LatticeField<f64>, nodes: std::ops::Range<usize>, exact: impl Fn(f64) -> f64) -> f64 {
    let eps = u.spacing();
    let s: f64 = nodes.map(|i| (u.values()[i] - exact(u.node(i))).powi(2)).sum();
    (eps * s).sqrt()
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn gamma_probe_criterion() -> Vec<Check> {
    let linear = PiecewiseH1Function::linear(1.0);
    let rows = gamma_probe(&linear, &[1e-3, 1e-4, 1e-5]).unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| (r.lattice_energy - 1.0).abs()).collect();
    let step = PiecewiseH1Function::step(0.5, 1.0).unwrap();
    let s = gamma_probe(&step, &[1e-6]).unwrap()[0].lattice_energy - 1.0;
    let l = 1e-6f64.ln().abs();
    let predicted = l.ln() / l;
    vec![
        check("linear gap at eps=1e-3", gaps[0] <= 0.01, format!("|F - 1| = {:.4e}", gaps[0])),
        check("linear gap decreasing", decreasing(&gaps), format!("{gaps:.4?}")),
        check(
            "step excess",
            ((s - predicted) / predicted).abs() <= 0.1,
            format!("F - 1 = {s:.5}, log|log eps|/|log eps| = {predicted:.5}"),
        ),
    ]
}

fn statics_criterion() -> Vec<Check> {
    let (eps, n) = (1e-2, 100);
    let mut worst_residual = 0.0f64;
    let (mut high_ok, mut low_ok, mut minima, mut refuted) = (true, true, 0usize, 0usize);
    let mut min_change = f64::INFINITY;
    for k in 0..50 {
        let lambda = 0.95 + (3.0 - 0.95) * k as f64 / 49.0;
        let bc = DirichletBC::pulled(lambda).unwrap();
        let b = overstretch_branches(eps, &bc, n).unwrap();
        let high = b.iter().find(|p| p.kind == BranchKind::SingleOverstretchHigh);
        let low = b.iter().find(|p| p.kind == BranchKind::SingleOverstretchLow);
        high_ok &= high.is_some_and(|p| {
            worst_residual = worst_residual.max(p.residual);
            p.residual <= STATIONARITY_TOL && p.hessian_min_eigenvalue > 0.0 && p.classification == Classification::LocalMin
        });
        low_ok &= low.is_some_and(|p| {
            worst_residual = worst_residual.max(p.residual);
            p.residual <= STATIONARITY_TOL && p.hessian_min_eigenvalue < 0.0
        });
        for p in all_branches(eps, &bc, n).unwrap().iter().filter(|p| p.classification == Classification::LocalMin) {
            minima += 1;
            let r = perturbation_check(&p.field, 10_000, 1e-4, 7 + k as u64);
            min_change = min_change.min(r.min_change);
            refuted += usize::from(!r.confirms_local_min());
        }
    }
    let critical = critical_lambda(eps).unwrap();
    let below_empty = [0.5, 0.9, 0.92728].iter().all(|&l| overstretch_branches(eps, &DirichletBC::pulled(l).unwrap(), n).unwrap().is_empty());
    vec![
        check("w1 stationary local minimum", high_ok, format!("max residual {worst_residual:.2e}")),
        check("w2 has a negative direction", low_ok, ""),
        check("empty below 0.92729", below_empty, format!("critical load {critical:.6}")),
        check("perturbation confirms minima", refuted == 0, format!("{minima} minima, min change {min_change:.3e}")),
    ]
}

fn global_min_criterion() -> Vec<Check> {
    [0.5, 1.5]
        .iter()
        .map(|&lambda| {
            let g = global_minimum_comparison(1e-6, lambda, 1_000_000).unwrap();
            check(
                &format!("gap at lambda={lambda}"),
                g.gap <= 0.05,
                format!("lattice {:.5} vs continuum {:.5}, gap {:.4}", g.lattice_min, g.continuum_min, g.gap),
            )
        })
        .collect()
}

fn quasistatic_criterion() -> Vec<Check> {
    let (t0, tau, horizon) = (1.5, 1e-3, 3.0);
    let load = LoadProgram::hat(t0);
    let list = [1e-3, 1e-4, 1e-5, 1e-6];
    let (rows, monotone) = quasistatic_convergence_table(&load, &list, tau, horizon).unwrap();
    let fine = rows.last().unwrap();
    let h_gaps: Vec<f64> = rows.iter().map(|r| (r.h_tilde - 1.0).abs()).collect();

    let model = QuasistaticModel::new(1e-6).unwrap();
    let trace = quasistatic_run(&model, tau, &load, horizon).unwrap();
    let oracle = ms_quasistatic_oracle(&load, horizon, tau);
    let sup = trace.rows.iter().zip(&oracle).map(|(r, (_, e))| (r.energy - e).abs()).fold(0.0, f64::max);
    // t1: the load has fallen back inside the memory and the bulk is relaxed
    let unloading: Vec<f64> =
        trace.rows.iter().filter(|r| r.t > t0 && r.t < 2.0 * t0 && r.load.abs() <= r.memory).map(|r| r.energy).collect();
    let frozen = unloading.windows(2).all(|w| w[1] == w[0]);
    vec![
        check("sup gap at eps=1e-6", sup <= 0.25 && fine.sup_gap <= 0.25, format!("{sup:.4}")),
        check("gap decreasing within 5%", monotone, format!("{:.4?}", rows.iter().map(|r| r.sup_gap).collect::<Vec<_>>())),
        check("unloading energy constant", frozen && !unloading.is_empty(), format!("{} unloading steps", unloading.len())),
        check("critical load tends to 1", decreasing(&h_gaps), format!("{h_gaps:.5?}")),
    ]
}

fn dynamics_criterion() -> Vec<Check> {
    use std::f64::consts::PI;
    let (n, horizon) = (1000, 0.01);
    let eps = 1.0 / n as f64;
    let cfg = MMConfig::new(eps * eps / 8.0, horizon);

    let u0 = LatticeField::from_fn(n, |x: f64| (PI * x).cos()).unwrap();
    let smooth = minimizing_movement(&u0, &cfg).unwrap();
    let decay = (-2.0 * PI * PI * horizon).exp();
    let e1 = l2_on(smooth.final_state(), 0..n + 1, |x| decay * (PI * x).cos());

    let datum = Expr::parse("cos(2) + 3*step(0.5)", 'x').unwrap().to_function().unwrap();
    let u0 = datum.sample_lattice(n).unwrap();
    let jumpy = minimizing_movement(&u0, &cfg).unwrap();
    let last = jumpy.final_state();
    let decay = (-8.0 * PI * PI * horizon).exp();
    let left = l2_on(last, 0..n / 2, |x| decay * (2.0 * PI * x).cos());
    let right = l2_on(last, n / 2..n + 1, |x| decay * (2.0 * PI * x).cos() + 3.0);
    let jumps = jump_springs(last);
    vec![
        check("smooth datum L2 error", e1 <= 1e-2, format!("{e1:.3e}")),
        check("jump persists at 1/2", jumps == vec![n / 2 - 1], format!("final jump springs {jumps:?}")),
        check("each side L2 error", left <= 2e-2 && right <= 2e-2, format!("left {left:.3e}, right {right:.3e}")),
        check(
            "no invariant violations",
            smooth.violations.is_empty() && jumpy.violations.is_empty(),
            format!("{} Newton iterations, {} fallbacks", smooth.newton_iterations + jumpy.newton_iterations, smooth.fallbacks + jumpy.fallbacks),
        ),
    ]
}

fn structure_criterion() -> Vec<Check> {
    let n = 128;
    let eps = 1.0 / n as f64;
    let tau = 0.5 * eps * eps / 4.0;
    let cfg = MMConfig::new(tau, 200.0 * tau);
    let mut counts = [0usize; 4];
    let mut steps_ok = true;
    for seed in 0..100 {
        let trace = minimizing_movement(&random_field(n, seed).unwrap(), &cfg).unwrap();
        steps_ok &= trace.steps() == 200;
        counts[0] += trace.violations_of("energy-decrease");
        counts[1] += trace.violations_of("max-principle");
        counts[2] += trace.violations_of("dissipation");
        counts[3] += jump_set_trace(&trace).violations;
    }
    let names = ["energy non-increasing", "sup-norm non-increasing", "dissipation inequality", "jump-set inclusion"];
    let mut out: Vec<Check> = names.iter().zip(counts).map(|(l, c)| check(l, c == 0, format!("{c} violations"))).collect();
    out.push(check("200 steps per run", steps_ok, ""));
    out
}

fn plateau(z0: f64) -> PlateauConfig {
    PlateauConfig::new(0.25, 0.75, z0, 1e-6, 1e-6, 0.05).unwrap()
}

fn longtime_criterion() -> Vec<Check> {
    let (cmp, _, _) = longtime_comparison(&plateau(0.45), 1e-7).unwrap();
    let half = scaled_scheme(&plateau(0.5)).unwrap();
    let drift = half.z.iter().fold(0.0f64, |m, z| m.max((z - 0.5).abs()));
    let a = scaled_scheme(&plateau(0.45)).unwrap();
    let b = scaled_scheme(&plateau(0.55)).unwrap();
    let mirror = a.z.iter().zip(&b.z).fold(0.0f64, |m, (x, y)| m.max((x + y - 1.0).abs()));
    vec![
        check("scheme vs limit equation", cmp.sup_error <= 0.05, format!("sup error {:.3e}", cmp.sup_error)),
        check("z0 = 1/2 fixed", drift <= 1e-12, format!("{drift:.1e}")),
        check("mirror symmetry", mirror <= 1e-12, format!("{mirror:.1e}")),
    ]
}

fn equivalence_criterion() -> Vec<Check> {
    let g = JumpDensity::log_half();
    let step = PiecewiseH1Function::step(0.5, 1.0).unwrap();
    let limit = ms_energy(&step).unwrap();
    let gaps: Vec<f64> =
        [1e-3f64, 1e-6, 1e-9].iter().map(|&e| (g_eps_energy_unchecked(&step, e, &g).unwrap() - limit).abs()).collect();
    let (log, _) = gprime_longtime_check(&g, &plateau(0.45), 1e-7).unwrap();
    let (sat, _) = gprime_longtime_check(&JumpDensity::saturating(), &plateau(0.45), 1e-7).unwrap();
    vec![
        check("density conditions", g.validate().is_ok(), format!("{:?}", g.report().asymptote_deviation)),
        check("monotone approach", decreasing(&gaps), format!("gaps {gaps:.4?}")),
        check("final gap", gaps[2] <= 0.2, format!("{:.4}", gaps[2])),
        check("long-time match", log.matches, format!("sup error {:.3e}", log.comparison.sup_error)),
        check("saturating density diverges", !sat.matches, format!("sup error {:.3e}", sat.comparison.sup_error)),
    ]
}

fn csv_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv" || x == "bin") {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism_criterion() -> Vec<Check> {
    let bin = env!("CARGO_BIN_EXE_pmlab");
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        (
            "sweep",
            "experiment = \"dynamics\"\nsprings = 128\ninitial = \"random\"\ntau = 7.62939453125e-6\nhorizon = 1.52587890625e-3\n\
             dump_stride = 50\nsweep_axis = \"seed\"\nsweep_values = [5, 3, 1, 7, 2, 6, 0, 4]\n",
        ),
        ("statics", "experiment = \"statics\"\neps = 0.01\nlambda_min = 0.95\nlambda_max = 3.0\nlambda_step = 0.25\ntrials = 1000\n"),
    ];
    let mut out = Vec::new();
    for (cmd, text) in configs {
        let cfg = dir.path().join(format!("{cmd}.toml"));
        std::fs::write(&cfg, text).unwrap();
        let mut runs = Vec::new();
        for jobs in ["1", "8"] {
            let target = dir.path().join(format!("{cmd}_{jobs}"));
            let status = Command::new(bin)
                .args([cmd, "--config", cfg.to_str().unwrap(), "--out", target.to_str().unwrap(), "--jobs", jobs, "--seed", "11"])
                .status()
                .unwrap();
            runs.push((status.success(), csv_files(&target)));
        }
        let same = runs[0].1 == runs[1].1 && !runs[0].1.is_empty();
        out.push(check(
            &format!("{cmd} bytes at jobs 1 and 8"),
            runs.iter().all(|r| r.0) && same,
            format!("{} files compared", runs[0].1.len()),
        ));
    }
    out
}

fn main() {
    type Criterion = fn() -> Vec<Check>;
    let criteria: [(u32, &str, Criterion, Duration); 9] = [
        (1, "lattice energy probe", gamma_probe_criterion, Duration::from_secs(1)),
        (2, "statics branches", statics_criterion, Duration::from_secs(30)),
        (3, "global minimum", global_min_criterion, Duration::from_secs(5)),
        (4, "quasistatic limit", quasistatic_criterion, Duration::from_secs(120)),
        (5, "dynamics vs heat equation", dynamics_criterion, Duration::from_secs(300)),
        (6, "structural properties", structure_criterion, Duration::from_secs(60)),
        (7, "long-time equation", longtime_criterion, Duration::from_secs(30)),
        (8, "equivalent densities", equivalence_criterion, Duration::from_secs(60)),
        (9, "determinism", determinism_criterion, Duration::from_secs(300)),
    ];
    let mut regressions = Vec::new();
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let mut checks = run();
        let elapsed = start.elapsed();
        checks.push(check("runtime budget", elapsed <= budget, format!("{:.2} s of {} s", elapsed.as_secs_f64(), budget.as_secs())));
        let failed: Vec<&Check> = checks.iter().filter(|c| !c.pass).collect();
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        let names: Vec<&str> = failed.iter().map(|c| c.label.as_str()).collect();
        let suffix = if names.is_empty() { String::new() } else { format!(" [failed: {}]", names.join(", ")) };
        println!("criterion {id} ({name}): {verdict}{suffix}");
        for c in &checks {
            println!("    {} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.label, c.detail);
        }
        for c in failed {
            if !KNOWN_SHORTFALLS.contains(&(id, c.label.as_str())) {
                regressions.push(format!("criterion {id}: {}", c.label));
            }
        }
    }
    if !regressions.is_empty() {
        eprintln!("unexpected failures: {}", regressions.join("; "));
        std::process::exit(1);
    }
}
