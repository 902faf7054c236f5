//! Artifact writers. Every file is written to a temporary sibling and then
//! renamed into place.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use modeswitch::{CellSet, CostatePath, GradientProfile, RunTrace, Schedule, Trajectory};
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, Result};

pub const TRACE_HEADER: [&str; 8] = [
    "k",
    "J",
    "D_sigma",
    "mu_eta",
    "lambda",
    "j_backtracks",
    "switch_count",
    "alt_opt",
];
pub const SCHEDULE_HEADER: [&str; 3] = ["cell_index", "t_start", "mode"];
pub const PROFILE_HEADER: [&str; 5] = ["cell", "t", "D_sigma_s", "w_star", "in_eta_set"];

pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn csv_file<F>(path: &Path, rows: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<&mut dyn Write>) -> Result<()>,
{
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        rows(&mut out)?;
        out.flush().map_err(|e| CliError::io(path, e))?;
        Ok(())
    })
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    csv_file(path, |w| {
        w.write_record(TRACE_HEADER)?;
        for r in &trace.records {
            w.write_record([
                r.k.to_string(),
                r.cost.to_string(),
                r.d_sigma.to_string(),
                r.mu_eta.to_string(),
                r.lambda.to_string(),
                r.j_backtracks.to_string(),
                r.switch_count.to_string(),
                r.alt_optimality.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn write_schedule(path: &Path, schedule: &Schedule) -> Result<()> {
    let grid = *schedule.grid();
    csv_file(path, |w| {
        w.write_record(SCHEDULE_HEADER)?;
        for (i, m) in schedule.modes().iter().enumerate() {
            w.write_record([i.to_string(), grid.time(i).to_string(), m.to_string()])?;
        }
        Ok(())
    })
}

/// Header `t, x1..xn, p1..pn, mode`. The mode column holds the mode of the
/// cell starting at `t`; the final sample repeats the last cell's mode.
pub fn write_trajectory(
    path: &Path,
    schedule: &Schedule,
    traj: &Trajectory,
    costate: &CostatePath,
) -> Result<()> {
    let n = traj.dim();
    let grid = *schedule.grid();
    csv_file(path, |w| {
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("p{i}")));
        header.push("mode".into());
        w.write_record(&header)?;
        for i in 0..traj.len() {
            let mode = schedule
                .modes()
                .get(i.min(schedule.n_cells().saturating_sub(1)));
            let mut row = vec![grid.time(i).to_string()];
            row.extend(traj.state(i).iter().map(f64::to_string));
            row.extend(costate.costate(i).iter().map(f64::to_string));
            row.push(mode.map_or(String::new(), usize::to_string));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn write_profile(
    path: &Path,
    schedule: &Schedule,
    profile: &GradientProfile,
    eta_set: &CellSet,
) -> Result<()> {
    let grid = *schedule.grid();
    csv_file(path, |w| {
        w.write_record(PROFILE_HEADER)?;
        for (i, (d, w_star)) in profile.values().iter().zip(profile.w_star()).enumerate() {
            w.write_record([
                i.to_string(),
                grid.time(i).to_string(),
                d.to_string(),
                w_star.to_string(),
                u8::from(eta_set.contains(i)).to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w).map_err(|e| CliError::io(path, e))
    })
}

/// Reads a schedule written by [`write_schedule`]. Only the `mode` column
/// is used; `cell_index` must count up from zero.
pub fn read_schedule_modes(path: &Path) -> Result<Vec<usize>> {
    let bad = |reason: String| CliError::ScheduleFile {
        path: path.to_path_buf(),
        reason,
    };
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (idx_col, mode_col) = (col("cell_index")?, col("mode")?);
    let mut modes = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let idx: usize = rec[idx_col]
            .trim()
            .parse()
            .map_err(|e| bad(format!("row {row}: cell_index: {e}")))?;
        if idx != row {
            return Err(bad(format!("row {row}: cell_index is {idx}")));
        }
        let mode = rec[mode_col]
            .trim()
            .parse()
            .map_err(|e| bad(format!("row {row}: mode: {e}")))?;
        modes.push(mode);
    }
    Ok(modes)
}

pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
