//! `stepbunch`: build the periodic interaction kernel, evaluate and minimize
//! the nonlocal step-bunching energy, and run discrete/continuum dynamics.
//!
//! Every subcommand takes a JSON config (`--config`) and an output directory
//! (`--out`); numeric parameters live in the config only. Exit codes:
//! 0 success, 2 validation error, 3 numerical failure, 64 usage error.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use stepbunch_core::asymptotics::{
    consistency_experiment, euler_maclaurin_singular, ExpIntegrand, ProfileFamily, TestSurface,
};
use stepbunch_core::discrete::{step_dynamics, DynamicsOptions, StepConfiguration};
use stepbunch_core::energy::total_energy;
use stepbunch_core::experiments::{bunching_evidence, scaling_sweep};
use stepbunch_core::kernel::{build_kernel_table, kernel_derivative};
use stepbunch_core::minimize::{ansatz_profile, ContinuumEvolution};
use stepbunch_core::profile::{profile_to_csv, read_profile_csv, GridProfile};
use stepbunch_core::special::gamma;

use config::{InitBlock, RunConfig};
use output::{emit_report, fmt17, write_atomic};

#[derive(Parser)]
#[command(
    name = "stepbunch",
    about = "Elastic step bunching on vicinal surfaces: kernels, energies, minimizers, dynamics",
    version
)]
struct Cli {
    /// Worker-thread cap for sweeps (fallback: STEPBUNCH_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump kernel samples and derivatives as CSV.
    Kernel(CommonArgs),
    /// Evaluate the energy breakdown of a profile CSV.
    Energy(CommonArgs),
    /// Minimize the total energy over feasible profiles.
    Minimize(CommonArgs),
    /// Integrate the continuum gradient flow h_t = mu_xx.
    Evolve(CommonArgs),
    /// Integrate the discrete step dynamics.
    EvolveSteps(CommonArgs),
    /// Discrete-vs-continuum chemical-potential consistency table.
    Consistency(CommonArgs),
    /// Euler-Maclaurin singular-quadrature validation runs.
    Quadrature(CommonArgs),
    /// Minimum-energy scaling sweep over epsilon.
    Scaling(CommonArgs),
    /// Symmetry/unimodality evidence from random starts.
    Evidence(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap already renders usage text; keep the spec exit code
            let _ = e.print();
            return ExitCode::from(64);
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("STEPBUNCH_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(t) = threads {
        if t > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = classify(&err);
            ExitCode::from(code)
        }
    }
}

/// 2 for validation problems (bad config, bad inputs), 3 for numerical
/// failures during a run.
fn classify(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<stepbunch_core::Error>() {
        if core.is_validation() {
            2
        } else {
            3
        }
    } else {
        2
    }
}

fn dispatch(cmd: &Command) -> anyhow::Result<()> {
    match cmd {
        Command::Kernel(args) => cmd_kernel(args),
        Command::Energy(args) => cmd_energy(args),
        Command::Minimize(args) => cmd_minimize(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::EvolveSteps(args) => cmd_evolve_steps(args),
        Command::Consistency(args) => cmd_consistency(args),
        Command::Quadrature(args) => cmd_quadrature(args),
        Command::Scaling(args) => cmd_scaling(args),
        Command::Evidence(args) => cmd_evidence(args),
    }
}

fn load(args: &CommonArgs) -> anyhow::Result<RunConfig> {
    RunConfig::load(&args.config)
}

fn build_init(
    cfg: &RunConfig,
    n: usize,
    params: &stepbunch_core::special::ModelParams<f64>,
) -> anyhow::Result<GridProfile<f64>> {
    let a = params.mean_slope;
    match cfg.init.as_ref().unwrap_or(&InitBlock::UniformPerturbed { amplitude: 0.01 }) {
        InitBlock::UniformPerturbed { amplitude } => {
            let tau = 2.0 * std::f64::consts::PI;
            let rho: Vec<f64> = (0..n)
                .map(|j| {
                    let x = -0.5 + j as f64 / n as f64;
                    a * (1.0 + amplitude * (tau * x).cos())
                })
                .collect();
            Ok(GridProfile::new(a, rho)?)
        }
        InitBlock::Ansatz => Ok(ansatz_profile(params, n)?),
        InitBlock::File { path } => Ok(read_profile_csv(Path::new(path))?),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_kernel(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let params = cfg.model_params()?;
    let n = cfg.grid_n()?;
    let table = build_kernel_table(params.m, n)?;
    let mut csv = String::from("z,K,Kprime\n");
    for j in 0..n {
        let z = -0.5 + j as f64 / n as f64;
        // K column: cell averages (finite across the singular cell);
        // Kprime: odd principal-value convention gives 0 at z = 0 and -1/2.
        let kp = if z == 0.0 { 0.0 } else { kernel_derivative(params.m, z)? };
        csv.push_str(&format!("{},{},{}\n", fmt17(z), fmt17(table.real_samples[j]), fmt17(kp)));
    }
    let path = args.out.join("kernel.csv");
    write_atomic(&path, csv.as_bytes())?;
    emit_report(
        &args.out,
        "kernel",
        &cfg,
        &[path],
        json!({"m": params.m, "N": n, "l1_norm": table.l1_norm, "s_m": table.s_m}),
    )
}

fn cmd_energy(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let params = cfg.model_params()?;
    let profile_path = cfg
        .profile
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config is missing the `profile` path"))?;
    let profile: GridProfile<f64> = read_profile_csv(Path::new(profile_path))?;
    let table = build_kernel_table(params.m, profile.len())?;
    let breakdown = total_energy(&profile, &table, &params)?;
    emit_report(
        &args.out,
        "energy",
        &cfg,
        &[],
        json!({
            "nonlocal_tilde": breakdown.nonlocal_tilde,
            "null_lagrangian": breakdown.null_lagrangian,
            "local": breakdown.local,
            "total": breakdown.total,
        }),
    )
}

#[derive(Serialize)]
struct MinimizeSummary {
    energy: stepbunch_core::energy::EnergyBreakdown<f64>,
    iterations: usize,
    converged: bool,
    el_residual: f64,
    #[serde(rename = "R0")]
    support_radius: f64,
}

fn cmd_minimize(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let params = cfg.model_params()?;
    let n = cfg.grid_n()?;
    let table = build_kernel_table(params.m, n)?;
    let init = build_init(&cfg, n, &params)?;
    let opts = cfg.solver_options();
    let res = stepbunch_core::minimize::minimize_energy(&init, &table, &params, &opts)?;
    let profile_path = args.out.join("profile.csv");
    write_atomic(&profile_path, profile_to_csv(&res.profile).as_bytes())?;
    emit_report(
        &args.out,
        "minimize",
        &cfg,
        &[profile_path],
        MinimizeSummary {
            energy: res.energy,
            iterations: res.iterations,
            converged: res.converged,
            el_residual: res.el_residual,
            support_radius: res.support_radius,
        },
    )
}

fn cmd_evolve(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let params = cfg.model_params()?;
    let n = cfg.grid_n()?;
    let ev_cfg = cfg
        .evolve
        .ok_or_else(|| anyhow::anyhow!("config is missing the `evolve` block"))?;
    let table = build_kernel_table(params.m, n)?;
    let init = build_init(&cfg, n, &params)?;
    let mut ev = ContinuumEvolution::new(&init, &table, &params, ev_cfg.dt_init)?;
    let mut outputs = Vec::new();
    let mut snapshot_index = 0usize;
    let mut next_snapshot = if ev_cfg.snapshot_every > 0.0 {
        ev_cfg.snapshot_every
    } else {
        f64::INFINITY
    };
    while ev.time < ev_cfg.t_end {
        let target = next_snapshot.min(ev_cfg.t_end);
        ev.run_until(target)?;
        if ev.time + 1e-15 >= next_snapshot {
            let snap = ev.profile()?;
            let path = args.out.join(format!("profile_{snapshot_index:04}.csv"));
            write_atomic(&path, profile_to_csv(&snap).as_bytes())?;
            outputs.push(path);
            snapshot_index += 1;
            next_snapshot += ev_cfg.snapshot_every;
        }
    }
    let final_profile = ev.profile()?;
    let breakdown = total_energy(&final_profile, &table, &params)?;
    let profile_path = args.out.join("profile.csv");
    write_atomic(&profile_path, profile_to_csv(&final_profile).as_bytes())?;
    outputs.push(profile_path);
    emit_report(
        &args.out,
        "evolve",
        &cfg,
        &outputs,
        json!({
            "t_end": ev.time,
            "energy": breakdown,
            "snapshots": snapshot_index,
        }),
    )
}

fn cmd_evolve_steps(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let phys = cfg.physical_params()?;
    let steps = cfg
        .steps
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config is missing the `steps` block"))?;
    let dyn_cfg = cfg
        .dynamics
        .ok_or_else(|| anyhow::anyhow!("config is missing the `dynamics` block"))?;
    let config = if let Some(positions) = &steps.positions {
        StepConfiguration::new(steps.period, positions.clone(), phys.lattice_a)?
    } else {
        let base = StepConfiguration::uniform_train(steps.ns, steps.period, phys.lattice_a)?;
        if steps.perturb != 0.0 {
            // deterministic perturbation, scaled to the uniform spacing
            let spacing = steps.period / steps.ns as f64;
            let positions: Vec<f64> = base
                .positions()
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let jitter = ((i as u64).wrapping_mul(2654435761) % 1000) as f64 / 1000.0 - 0.5;
                    x + steps.perturb * spacing * jitter
                })
                .collect();
            StepConfiguration::new(steps.period, positions, phys.lattice_a)?
        } else {
            base
        }
    };
    let opts = DynamicsOptions {
        t_end: dyn_cfg.t_end,
        dt_init: dyn_cfg.dt_init,
        rel_tol: dyn_cfg.rel_tol,
        min_spacing_stop: dyn_cfg.min_spacing_stop,
    };
    let traj = step_dynamics(&config, &phys, &opts, dyn_cfg.snapshot_stride)?;
    let mut csv = String::from("t");
    for i in 0..config.len() {
        csv.push_str(&format!(",x_{i}"));
    }
    csv.push('\n');
    for (t, pos) in traj.times.iter().zip(&traj.positions) {
        csv.push_str(&fmt17(*t));
        for x in pos {
            csv.push(',');
            csv.push_str(&fmt17(*x));
        }
        csv.push('\n');
    }
    let path = args.out.join("trajectory.csv");
    write_atomic(&path, csv.as_bytes())?;
    emit_report(
        &args.out,
        "evolve-steps",
        &cfg,
        &[path],
        json!({
            "t_final": traj.final_time(),
            "snapshots": traj.times.len(),
            "stopped_at_min_spacing": traj.stopped_at_min_spacing,
        }),
    )
}

fn cmd_consistency(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let phys = cfg.physical_params()?;
    let surface = cfg
        .surface
        .ok_or_else(|| anyhow::anyhow!("config is missing the `surface` block"))?;
    let a_list = cfg
        .a_list
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config is missing `a_list`"))?;
    let ts = TestSurface::new(surface.mean_slope, surface.delta, ProfileFamily::Sine)?;
    let table = consistency_experiment(&ts, &phys, a_list)?;
    let mut csv = String::from("a,mu_atomistic,mu_continuum,ratio\n");
    for row in &table.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(row.a),
            fmt17(row.mu_atomistic),
            fmt17(row.mu_continuum),
            fmt17(row.ratio)
        ));
    }
    let path = args.out.join("consistency.csv");
    write_atomic(&path, csv.as_bytes())?;
    emit_report(
        &args.out,
        "consistency",
        &cfg,
        &[path],
        json!({
            "rows": table.rows,
            "ratios_strictly_decreasing": table.ratios_strictly_decreasing(),
        }),
    )
}

fn cmd_quadrature(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let q = cfg
        .quadrature
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config is missing the `quadrature` block"))?;
    let f = ExpIntegrand;
    let mut csv = String::from("m,p,a,value,error,observed_order\n");
    let mut summary = Vec::new();
    for &m in &q.m_list {
        let exact = gamma(1.0 - m)?;
        for &p in &q.p_list {
            let mut prev_err: Option<f64> = None;
            for &a in &q.a_list {
                let value = euler_maclaurin_singular(&f, m, a, p)?;
                let error = (value - exact).abs();
                let order = prev_err
                    .map(|e| (e / error.max(1e-300)).log2())
                    .unwrap_or(f64::NAN);
                csv.push_str(&format!(
                    "{},{p},{},{},{},{}\n",
                    fmt17(m),
                    fmt17(a),
                    fmt17(value),
                    fmt17(error),
                    if order.is_nan() { String::from("nan") } else { fmt17(order) }
                ));
                prev_err = Some(error);
            }
            summary.push(json!({"m": m, "p": p, "reference": exact}));
        }
    }
    let path = args.out.join("quadrature.csv");
    write_atomic(&path, csv.as_bytes())?;
    emit_report(&args.out, "quadrature", &cfg, &[path], json!({ "cases": summary }))
}

fn cmd_scaling(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let params = cfg.model_params()?;
    let n = cfg.grid_n()?;
    let eps_list = cfg
        .eps_list
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("config is missing `eps_list`"))?;
    let opts = cfg.solver_options();
    let report = scaling_sweep(&params, eps_list, n, &opts)?;
    let mut csv = String::from("epsilon,e_min,R0,iterations\n");
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(row.epsilon),
            fmt17(row.e_min),
            fmt17(row.support_radius),
            row.iterations
        ));
    }
    let path = args.out.join("scaling.csv");
    write_atomic(&path, csv.as_bytes())?;
    emit_report(
        &args.out,
        "scaling",
        &cfg,
        &[path],
        json!({
            "rows": report.rows,
            "fitted_slope": report.fitted_slope,
            "fitted_intercept": report.fitted_intercept,
            "residual": report.residual,
        }),
    )
}

fn cmd_evidence(args: &CommonArgs) -> anyhow::Result<()> {
    let cfg = load(args)?;
    let params = cfg.model_params()?;
    let n = cfg.grid_n()?;
    let inits = cfg.evidence.map(|e| e.inits).unwrap_or(5);
    let opts = cfg.solver_options();
    let report = bunching_evidence(&params, n, &opts, inits)?;
    emit_report(
        &args.out,
        "evidence",
        &cfg,
        &[],
        json!({
            "runs": report.runs,
            "energy_spread": report.energy_spread,
        }),
    )
}
