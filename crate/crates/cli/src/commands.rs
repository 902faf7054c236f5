use std::path::{Path, PathBuf};
use std::time::Instant;

use modeswitch::validation::{run_validation, ValidationOptions, ValidationReport};
use modeswitch::{
    eta_level_set, evaluate_cost, gradient_profile, integrate_costate, optimize, simulate_state,
    CellSet, RunStatus, Schedule, SwitchedSystem,
};
use serde::Serialize;

use crate::config::{Prepared, RunConfig};
use crate::error::{exit, CliError, Result};
use crate::output::{
    artifact, read_schedule_modes, write_json, write_profile, write_schedule, write_trace,
    write_trajectory,
};

pub const PERTURB_ENV: &str = "MODESWITCH_PERTURB_JACOBIAN";

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: RunStatus,
    #[serde(rename = "final_J")]
    pub final_j: f64,
    #[serde(rename = "final_D_sigma")]
    pub final_d_sigma: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub fallback_steps: usize,
    pub model: String,
    pub n_cells: usize,
    pub dt: f64,
}

/// Writes the state/costate trajectory and the gradient profile of
/// `schedule`. Returns `(J, D_sigma)`.
fn write_final_iterate(
    system: &dyn SwitchedSystem,
    schedule: &Schedule,
    x0: &[f64],
    eta: Option<f64>,
    dir: &Path,
) -> Result<(f64, f64)> {
    let traj = simulate_state(system, schedule, x0)?;
    let cost = evaluate_cost(system, &traj);
    let costate = integrate_costate(system, schedule, &traj)?;
    let profile = gradient_profile(system, schedule, &traj, &costate);
    write_trajectory(&artifact(dir, "trajectory.csv"), schedule, &traj, &costate)?;
    if let Some(eta) = eta {
        let set = eta_level_set(&profile, eta).unwrap_or_else(|_| CellSet::empty());
        write_profile(&artifact(dir, "profile.csv"), schedule, &profile, &set)?;
    }
    Ok((cost, profile.d_sigma()))
}

/// `run <cfg>`: optimize and write every artifact. Returns the exit code.
pub fn cmd_run(config: &Path) -> Result<u8> {
    let p = RunConfig::from_path(config)?.prepare()?;
    run_prepared(&p)
}

pub fn run_prepared(p: &Prepared) -> Result<u8> {
    let start = Instant::now();
    log::info!(
        "optimizing {} on {} cells (dt = {}) for at most {} iterations",
        p.model_name,
        p.grid.n_cells(),
        p.grid.dt(),
        p.params.max_iters
    );
    let out = optimize(p.system.as_ref(), &p.initial, &p.params, &p.x0)?;
    let wall = start.elapsed().as_secs_f64();
    let last = out.trace.last().copied();

    let dir = &p.out_dir;
    write_trace(&artifact(dir, "trace.csv"), &out.trace)?;
    write_schedule(&artifact(dir, "final_schedule.csv"), &out.schedule)?;
    write_final_iterate(
        p.system.as_ref(),
        &out.schedule,
        &p.x0,
        Some(p.params.eta),
        dir,
    )?;

    let summary = RunSummary {
        status: out.trace.status,
        final_j: last.map_or(f64::NAN, |r| r.cost),
        final_d_sigma: last.map_or(f64::NAN, |r| r.d_sigma),
        iterations: out.trace.records.len(),
        wall_time_s: wall,
        fallback_steps: out.trace.fallback_steps,
        model: p.model_name.clone(),
        n_cells: p.grid.n_cells(),
        dt: p.grid.dt(),
    };
    write_json(&artifact(dir, "summary.json"), &summary)?;
    log::info!(
        "{} after {} iterations: J = {}, D_sigma = {}",
        summary.status.as_str(),
        summary.iterations,
        summary.final_j,
        summary.final_d_sigma
    );
    println!(
        "status={} J={} D_sigma={} iterations={} out={}",
        summary.status.as_str(),
        summary.final_j,
        summary.final_d_sigma,
        summary.iterations,
        dir.display()
    );
    Ok(match out.trace.status {
        RunStatus::Converged | RunStatus::MaxIters => exit::SUCCESS,
        RunStatus::StepSizeUnderflow => exit::UNDERFLOW,
    })
}

/// `replay <schedule.csv> <cfg>`: re-simulate a saved schedule.
pub fn cmd_replay(schedule_path: &Path, config: &Path) -> Result<(u8, f64, f64)> {
    let p = RunConfig::from_path(config)?.prepare()?;
    let modes = read_schedule_modes(schedule_path)?;
    if modes.len() != p.grid.n_cells() {
        return Err(modeswitch::Error::LengthMismatch {
            expected: p.grid.n_cells(),
            found: modes.len(),
        }
        .into());
    }
    let schedule = Schedule::new(modes, p.system.mode_count(), p.grid)?;
    let (cost, d) = write_final_iterate(p.system.as_ref(), &schedule, &p.x0, None, &p.out_dir)?;
    println!("J={cost} D_sigma={d}");
    Ok((exit::SUCCESS, cost, d))
}

/// `validate`: run every oracle and write `validation_report.json`.
pub fn cmd_validate(seed: u64, out_dir: &Path) -> Result<(u8, ValidationReport)> {
    let perturb = std::env::var(PERTURB_ENV).is_ok_and(|v| v == "1");
    if perturb {
        log::warn!("{PERTURB_ENV}=1: double-tank Jacobian is scaled by 1.5");
    }
    let report = run_validation(&ValidationOptions {
        seed,
        perturb_jacobian: perturb,
    })?;
    write_json(&artifact(out_dir, "validation_report.json"), &report)?;
    for c in &report.checks {
        println!(
            "{} {} measured={:.6e} threshold={:.6e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.threshold
        );
    }
    let code = if report.passed {
        exit::SUCCESS
    } else {
        exit::FAILURE
    };
    Ok((code, report))
}

/// Output directory for commands without a config: `MODESWITCH_OUT`, then
/// the `--out` flag, then the working directory.
pub fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    std::env::var_os(crate::config::OUT_ENV)
        .map(PathBuf::from)
        .or(flag)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn report_error(e: &CliError) -> u8 {
    eprintln!("error: {e}");
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        eprintln!("  caused by: {s}");
        source = s.source();
    }
    e.exit_code()
}
