use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_modeswitch");

fn bundled_cfg() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/double_tank_paper.cfg")
}

fn modeswitch(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .env("MODESWITCH_OUT", out)
        .env_remove("MODESWITCH_PERTURB_JACOBIAN")
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn parse_j(stdout: &[u8]) -> f64 {
    let s = String::from_utf8_lossy(stdout);
    let j = s
        .split_whitespace()
        .find_map(|t| t.strip_prefix("J="))
        .unwrap_or_else(|| panic!("no J in {s}"));
    j.parse().unwrap()
}

#[test]
fn bundled_config_writes_all_artifacts() {
    let out = TempDir::new().unwrap();
    let o = modeswitch(&["run", bundled_cfg().to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let (header, rows) = read_csv(&out.path().join("trace.csv"));
    assert_eq!(
        header,
        [
            "k",
            "J",
            "D_sigma",
            "mu_eta",
            "lambda",
            "j_backtracks",
            "switch_count",
            "alt_opt"
        ]
    );
    assert_eq!(rows.len(), 100);
    assert_eq!(rows[0][0], "1");
    assert_eq!(rows[99][0], "100");

    let (header, rows) = read_csv(&out.path().join("trajectory.csv"));
    assert_eq!(header, ["t", "x1", "x2", "p1", "p2", "mode"]);
    assert_eq!(rows.len(), 2001);
    assert_eq!(&rows[0][..3], ["0", "2", "2"]);
    assert_eq!(&rows[2000][3..5], ["0", "0"]);

    let (header, rows) = read_csv(&out.path().join("final_schedule.csv"));
    assert_eq!(header, ["cell_index", "t_start", "mode"]);
    assert_eq!(rows.len(), 2000);

    let (header, rows) = read_csv(&out.path().join("profile.csv"));
    assert_eq!(header, ["cell", "t", "D_sigma_s", "w_star", "in_eta_set"]);
    assert_eq!(rows.len(), 2000);
    assert!(rows.iter().any(|r| r[4] == "1"));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "max_iters");
    assert_eq!(summary["iterations"], 100);
    for key in ["final_J", "final_D_sigma", "wall_time_s", "fallback_steps"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert!(summary["final_J"].as_f64().unwrap() <= 5.5);
}

#[test]
fn replay_of_final_schedule_matches_trace_bitwise() {
    let out = TempDir::new().unwrap();
    let cfg = bundled_cfg();
    let o = modeswitch(&["run", cfg.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = read_csv(&out.path().join("trace.csv"));
    let traced: f64 = rows.last().unwrap()[1].parse().unwrap();

    let replay_dir = TempDir::new().unwrap();
    let sched = out.path().join("final_schedule.csv");
    let o = modeswitch(
        &["replay", sched.to_str().unwrap(), cfg.to_str().unwrap()],
        replay_dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(parse_j(&o.stdout).to_bits(), traced.to_bits());
    assert!(replay_dir.path().join("trajectory.csv").exists());
}

#[test]
fn replay_of_initial_blocks_reproduces_reference_cost() {
    let dir = TempDir::new().unwrap();
    let sched = dir.path().join("initial.csv");
    let mut text = String::from("cell_index,t_start,mode\n");
    for i in 0..2000 {
        text.push_str(&format!(
            "{i},{},{}\n",
            i as f64 * 0.01,
            usize::from(i >= 1000)
        ));
    }
    std::fs::write(&sched, text).unwrap();
    let o = modeswitch(
        &[
            "replay",
            sched.to_str().unwrap(),
            bundled_cfg().to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = parse_j(&o.stdout);
    assert!((j - 70.90).abs() <= 0.005 * 70.90, "J = {j}");
}

#[test]
fn empty_schedule_file_is_a_length_mismatch() {
    let dir = TempDir::new().unwrap();
    let sched = dir.path().join("empty.csv");
    std::fs::write(&sched, "").unwrap();
    let o = modeswitch(
        &[
            "replay",
            sched.to_str().unwrap(),
            bundled_cfg().to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(
        stderr(&o).contains("schedule has 0 cells, grid has 2000"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn alpha_outside_unit_interval_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        &dir,
        "[model]\nname = \"double_tank\"\n\n[optimizer]\nalpha = 1.5\n",
    );
    let o = modeswitch(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("optimizer.alpha"), "{}", stderr(&o));
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn block_durations_not_summing_to_horizon_name_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        &dir,
        "[model]\nname = \"double_tank\"\n\n[schedule]\nblocks = [{ mode = 0, duration = 10.0 }, { mode = 1, duration = 5.0 }]\n",
    );
    let o = modeswitch(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schedule.blocks"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        &dir,
        "[model]\nname = \"double_tank\"\n\n[grid]\nhorizon = 20.0\ndt = 0.01\nsubsteps = 4\n",
    );
    let o = modeswitch(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("substeps"), "{}", stderr(&o));
}

#[test]
fn step_size_underflow_exits_nonzero_with_artifacts() {
    // unit cells: the Euler map resets the state to the inflow, so no
    // flip changes the cost
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        &dir,
        "[model]\nname = \"linear\"\nx0 = [0.0]\nmatrices = [[[-1.0]], [[-1.0]]]\noffsets = [[0.0], [2.0]]\nq = [[1.0]]\nreference = [1.0]\n\n[grid]\nhorizon = 8.0\ndt = 1.0\n",
    );
    let o = modeswitch(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("step_size_underflow"));
}

#[test]
fn trimodal_run_converges() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "[model]\nname = \"trimodal\"\n");
    let o = modeswitch(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, rows) = read_csv(&dir.path().join("final_schedule.csv"));
    assert_eq!(rows.len(), 10);
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"converged\""), "{summary}");
}

#[test]
fn output_env_overrides_config_dir() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        &dir,
        &format!(
            "[model]\nname = \"trimodal\"\n\n[output]\ndir = \"{}\"\n",
            dir.path().join("from_config").display()
        ),
    );
    let env_dir = dir.path().join("from_env");
    let o = modeswitch(&["run", cfg.to_str().unwrap()], &env_dir);
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("trace.csv").exists());
    assert!(!dir.path().join("from_config").exists());
}

fn validation_report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("validation_report.json")).unwrap())
        .unwrap()
}

#[test]
fn validation_report_lists_name_measured_threshold() {
    let dir = TempDir::new().unwrap();
    let o = modeswitch(&["validate"], dir.path());
    assert!(o.status.code().is_some());
    let report = validation_report(dir.path());
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 6);
    for c in checks {
        assert!(c["name"].is_string());
        assert!(c["measured"].is_number());
        assert!(c["threshold"].is_number());
        assert!(c["passed"].is_boolean());
    }
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    for expected in [
        "fd_insertion_gradient_double_tank",
        "classic_armijo_quadratics",
        "optimizer_vs_brute_force_eight_cells",
        "smoothness_gradient_lipschitz",
    ] {
        assert!(names.contains(&expected), "{names:?}");
    }
    let all = checks.iter().all(|c| c["passed"] == true);
    assert_eq!(report["passed"], all);
    assert_eq!(o.status.code(), Some(if all { 0 } else { 1 }));
}

#[test]
fn validate_passes_on_a_clean_build() {
    let dir = TempDir::new().unwrap();
    let o = modeswitch(&["validate"], dir.path());
    let report = validation_report(dir.path());
    let failed: Vec<_> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| {
            format!(
                "{} measured {} threshold {}",
                c["name"], c["measured"], c["threshold"]
            )
        })
        .collect();
    assert_eq!(o.status.code(), Some(0), "failed checks: {failed:?}");
}

#[test]
fn perturbed_jacobian_fails_validation() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(BIN)
        .args(["validate"])
        .env("MODESWITCH_OUT", dir.path())
        .env("MODESWITCH_PERTURB_JACOBIAN", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let report = validation_report(dir.path());
    let check = |name: &str| {
        report["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == name)
            .cloned()
            .unwrap()
    };
    assert_eq!(check("fd_insertion_gradient_double_tank")["passed"], false);
    assert_eq!(check("jacobians_builtin")["passed"], false);
    assert!(
        check("fd_insertion_gradient_double_tank")["measured"]
            .as_f64()
            .unwrap()
            > 0.5
    );
}
