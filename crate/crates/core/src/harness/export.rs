//! Run files: a per-step curve CSV, a trajectory JSON and a config echo.
//!
//! `curve.csv` starts with a version comment, then the header
//! `step,sim_time_s,branch,visibility,e_f,state,c_s_eff,c_c_eff,leader_index`.
//! Missing values are empty fields. `trajectory.json` holds
//! `{"version", "variant", "steps": [{"step", "sim_time", "leader",
//! "positions": [[x, y], …], "fractions": [social, cognitive]}]}`.
//! Floats are written in shortest round-trip form, so importing reproduces
//! the record exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, RecordRow, RunRecord};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::stepper::{Branch, Variant};

pub const CURVE_FILE: &str = "curve.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const CURVE_VERSION_LINE: &str = "# aos-swarm curve v1";
pub const CURVE_HEADER: [&str; 9] = [
    "step",
    "sim_time_s",
    "branch",
    "visibility",
    "e_f",
    "state",
    "c_s_eff",
    "c_c_eff",
    "leader_index",
];
const TRAJECTORY_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Trajectory {
    version: u32,
    variant: Variant,
    steps: Vec<TrajectoryStep>,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryStep {
    step: u64,
    sim_time: f64,
    leader: Option<usize>,
    positions: Vec<Vec2>,
    fractions: (f64, f64),
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn curve_csv(record: &RunRecord) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER).expect("in-memory write");
    for r in &record.rows {
        w.write_record([
            r.step.to_string(),
            r.sim_time.to_string(),
            r.branch.as_str().to_string(),
            r.visibility.to_string(),
            opt(r.e_f),
            opt(r.state.map(|s| s.as_str())),
            r.c_s.to_string(),
            r.c_c.to_string(),
            opt(r.leader),
        ])
        .expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    format!("{CURVE_VERSION_LINE}\n{body}")
}

pub fn trajectory_json(record: &RunRecord) -> String {
    let t = Trajectory {
        version: TRAJECTORY_VERSION,
        variant: record.variant,
        steps: record
            .rows
            .iter()
            .map(|r| TrajectoryStep {
                step: r.step,
                sim_time: r.sim_time,
                leader: r.leader,
                positions: r.positions.clone(),
                fractions: (r.frac_social, r.frac_cognitive),
            })
            .collect(),
    };
    serde_json::to_string(&t).expect("trajectory serializes")
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Write the run files into `dir`, creating it if needed. The config echo is
/// written when a config is given.
pub fn export_run(record: &RunRecord, config: Option<&ExperimentConfig>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join(CURVE_FILE), &curve_csv(record))?;
    write(&dir.join(TRAJECTORY_FILE), &trajectory_json(record))?;
    if let Some(config) = config {
        write(&dir.join(CONFIG_FILE), &config.to_toml())?;
    }
    Ok(())
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, text: &str) -> Result<T> {
    text.parse()
        .map_err(|_| Error::format(path, format!("row {line}: bad {name} `{text}`")))
}

fn opt_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    name: &str,
    text: &str,
) -> Result<Option<T>> {
    if text.is_empty() {
        Ok(None)
    } else {
        field(path, line, name, text).map(Some)
    }
}

/// Read back a record written by [`export_run`].
pub fn import_run(dir: &Path) -> Result<RunRecord> {
    let curve_path = dir.join(CURVE_FILE);
    let text = read(&curve_path)?;
    if text.lines().next() != Some(CURVE_VERSION_LINE) {
        return Err(Error::format(
            &curve_path,
            "missing or unsupported version line",
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::format(&curve_path, e))?
        .clone();
    if header.iter().ne(CURVE_HEADER) {
        return Err(Error::format(&curve_path, "unexpected header"));
    }

    let traj_path = dir.join(TRAJECTORY_FILE);
    let traj: Trajectory =
        serde_json::from_str(&read(&traj_path)?).map_err(|e| Error::format(&traj_path, e))?;
    if traj.version != TRAJECTORY_VERSION {
        return Err(Error::format(&traj_path, "unsupported version"));
    }

    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(&curve_path, e))?;
        let p = &curve_path;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let t = traj
            .steps
            .get(i)
            .ok_or_else(|| Error::format(&traj_path, format!("missing step {i}")))?;
        let row = RecordRow {
            step: field(p, i, "step", f(0))?,
            sim_time: field(p, i, "sim_time_s", f(1))?,
            branch: field::<Branch>(p, i, "branch", f(2))?,
            visibility: field(p, i, "visibility", f(3))?,
            e_f: opt_field(p, i, "e_f", f(4))?,
            state: opt_field(p, i, "state", f(5))?,
            c_s: field(p, i, "c_s_eff", f(6))?,
            c_c: field(p, i, "c_c_eff", f(7))?,
            frac_social: t.fractions.0,
            frac_cognitive: t.fractions.1,
            leader: opt_field(p, i, "leader_index", f(8))?,
            positions: t.positions.clone(),
        };
        if row.step != t.step || row.sim_time != t.sim_time || row.leader != t.leader {
            return Err(Error::format(
                &traj_path,
                format!("step {i} disagrees with the curve"),
            ));
        }
        rows.push(row);
    }
    if rows.len() != traj.steps.len() {
        return Err(Error::format(
            &traj_path,
            "step count disagrees with the curve",
        ));
    }
    Ok(RunRecord {
        variant: traj.variant,
        rows,
    })
}
