//! Run configuration, read from a TOML file.
//!
//! ```toml
//! [model]
//! name = "double_tank"
//!
//! [grid]
//! horizon = 20.0
//! dt = 0.01
//!
//! [schedule]
//! blocks = [{ mode = 0, duration = 10.0 }, { mode = 1, duration = 10.0 }]
//!
//! [optimizer]
//! alpha = 0.5
//! max_iters = 100
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use modeswitch::{
    make_double_tank, make_trimodal_example, ModelSpec, OptimizerParams, Schedule, SwitchedLinear,
    SwitchedSystem, TimeGrid,
};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const OUT_ENV: &str = "MODESWITCH_OUT";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub schedule: Option<ScheduleSection>,
    #[serde(default)]
    pub optimizer: OptimizerParams,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub validation: ValidationSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `double_tank`, `trimodal` or `linear`.
    pub name: String,
    pub x0: Option<Vec<f64>>,
    /// Linear family: one row-major `n x n` matrix per mode.
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
    pub offsets: Option<Vec<Vec<f64>>>,
    pub q: Option<Vec<Vec<f64>>>,
    pub reference: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub mode: usize,
    pub duration: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    pub seed: u64,
}

/// A parsed and checked configuration, ready to run.
pub struct Prepared {
    pub model_name: String,
    pub system: Arc<dyn SwitchedSystem>,
    pub x0: Vec<f64>,
    pub grid: TimeGrid,
    pub initial: Schedule,
    pub params: OptimizerParams,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source: Box::new(source),
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Builds the model and re-checks every numeric constraint.
    pub fn prepare(&self) -> Result<Prepared> {
        self.optimizer
            .validate()
            .map_err(|e| CliError::config(format!("optimizer.{}", param_name(&e)), e))?;

        let (system, default_x0, default_grid, default_schedule) = self.build_model()?;

        let grid = match self.grid {
            Some(g) => TimeGrid::new(g.horizon, g.dt).map_err(|e| CliError::config("grid", e))?,
            None => {
                default_grid.ok_or_else(|| CliError::config("grid", "required for this model"))?
            }
        };

        let x0 = match (&self.model.x0, default_x0) {
            (Some(x), _) => x.clone(),
            (None, Some(x)) => x,
            (None, None) => return Err(CliError::config("model.x0", "required for this model")),
        };
        if x0.len() != system.state_dim() {
            return Err(CliError::config(
                "model.x0",
                format!(
                    "has {} entries, state dimension is {}",
                    x0.len(),
                    system.state_dim()
                ),
            ));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("model.x0", "entries must be finite"));
        }

        let initial = match &self.schedule {
            Some(s) => {
                let blocks: Vec<(usize, f64)> =
                    s.blocks.iter().map(|b| (b.mode, b.duration)).collect();
                Schedule::from_blocks(&blocks, system.mode_count(), grid)
                    .map_err(|e| CliError::config("schedule.blocks", e))?
            }
            None => match default_schedule {
                Some(s) if *s.grid() == grid => s,
                _ => Schedule::constant(0, system.mode_count(), grid)?,
            },
        };

        let out_dir = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| self.output.dir.clone());

        Ok(Prepared {
            model_name: self.model.name.clone(),
            system,
            x0,
            grid,
            initial,
            params: self.optimizer.clone(),
            out_dir,
            seed: self.validation.seed,
        })
    }

    #[allow(clippy::type_complexity)]
    fn build_model(
        &self,
    ) -> Result<(
        Arc<dyn SwitchedSystem>,
        Option<Vec<f64>>,
        Option<TimeGrid>,
        Option<Schedule>,
    )> {
        let m = &self.model;
        let builtin = |spec: ModelSpec| -> Result<_> {
            for (field, set) in [
                ("model.matrices", m.matrices.is_some()),
                ("model.offsets", m.offsets.is_some()),
                ("model.q", m.q.is_some()),
                ("model.reference", m.reference.is_some()),
            ] {
                if set {
                    return Err(CliError::config(
                        field,
                        format!("only valid for model \"linear\", not \"{}\"", m.name),
                    ));
                }
            }
            Ok((
                spec.system,
                Some(spec.x0),
                Some(spec.grid),
                Some(spec.initial_schedule),
            ))
        };
        match m.name.as_str() {
            "double_tank" => builtin(make_double_tank()),
            "trimodal" => builtin(make_trimodal_example()),
            "linear" => {
                let sys = SwitchedLinear::new(
                    take("model.matrices", &m.matrices)?,
                    take("model.offsets", &m.offsets)?,
                    take("model.q", &m.q)?,
                    m.reference.clone(),
                )
                .map_err(|e| CliError::config("model", e))?;
                Ok((Arc::new(sys), None, None, None))
            }
            other => Err(CliError::config(
                "model.name",
                format!("unknown model \"{other}\"; expected double_tank, trimodal or linear"),
            )),
        }
    }
}

fn take<T: Clone>(field: &str, value: &Option<T>) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| CliError::config(field, "required"))
}

fn param_name(e: &modeswitch::Error) -> &'static str {
    match e {
        modeswitch::Error::BadParameter { name, .. } => name,
        _ => "?",
    }
}
