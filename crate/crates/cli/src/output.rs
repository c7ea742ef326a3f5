//! Output files. Floats are written with 17 significant digits so every
//! value reads back bit-exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qhd_core::dynamics::{Flavor, Trajectory, TrajectorySample, TrajectoryStatus};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const TRAJECTORY_HEADER: &str = "param,x0,x1,x2,x3,y0,y1,y2,y3";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    Csv,
    Json,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_csv(traj: &Trajectory<f64>) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let row: Vec<String> = std::iter::once(s.param).chain(s.x).chain(s.y).map(num).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

#[derive(Serialize)]
struct JsonSample {
    param: f64,
    x: [f64; 4],
    y: [f64; 4],
}

#[derive(Serialize)]
struct JsonTrajectory {
    flavor: Flavor,
    status: TrajectoryStatus,
    samples: Vec<JsonSample>,
}

pub fn trajectory_json(traj: &Trajectory<f64>) -> String {
    let doc = JsonTrajectory {
        flavor: traj.flavor,
        status: traj.status,
        samples: traj.samples.iter().map(|s| JsonSample { param: s.param, x: s.x, y: s.y }).collect(),
    };
    to_json(&doc)
}

pub fn write_trajectory(traj: &Trajectory<f64>, path: &Path, format: TrajectoryFormat) -> Result<()> {
    let text = match format {
        TrajectoryFormat::Csv => trajectory_csv(traj),
        TrajectoryFormat::Json => trajectory_json(traj),
    };
    write_file(path, &text)
}

/// Reads samples written by [`write_trajectory`] in CSV form.
pub fn read_trajectory_csv(text: &str) -> Result<Vec<TrajectorySample<f64>>> {
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err(CliError::schema("header", format!("expected `{TRAJECTORY_HEADER}`")));
    }
    lines
        .enumerate()
        .map(|(row, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| CliError::schema(format!("row {}", row + 1), e.to_string()))?;
            if v.len() != 9 {
                return Err(CliError::schema(format!("row {}", row + 1), "expected 9 columns"));
            }
            Ok(TrajectorySample {
                param: v[0],
                x: [v[1], v[2], v[3], v[4]],
                y: [v[5], v[6], v[7], v[8]],
                dy: None,
            })
        })
        .collect()
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
}

/// Record of one command run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub command: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub checks: Vec<CheckOutcome>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Collects output files under one directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, text: &str) -> Result<()> {
        write_file(&self.path(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}
