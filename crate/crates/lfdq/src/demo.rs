//! Demonstration files, demonstration-set directories and CSV exports.
//!
//! A demonstration file holds the joint recording and its metadata; the
//! Cartesian states are derived again on load, so a file is tied to the
//! chain it was recorded on.
//!
//! ```json
//! {
//!   "meta": {"demonstrator": "p01", "session": 1, "trial": 2, "face": "low", "target_id": 4},
//!   "samples": [{"t": 0.0, "q": [-0.8, 0.0, -0.3, -2.0, 0.0, -1.3, 0.0]}, ...]
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use lfdq_core::clik::JointTrajectory;
use lfdq_core::demonstrations::{DemoMeta, DemoSet, Demonstration, FaceId, JointSample};
use lfdq_core::kinematics::{JointConfig, KinematicChain};
use lfdq_core::DOF;
use serde::{Deserialize, Serialize};

use crate::json::{create_dir, read_json, write_json_compact};
use crate::{fixed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaFile {
    pub demonstrator: String,
    pub session: u8,
    pub trial: u8,
    pub face: String,
    pub target_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleFile {
    pub t: f64,
    pub q: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoFile {
    pub meta: MetaFile,
    pub samples: Vec<SampleFile>,
}

impl DemoFile {
    pub fn from_demo(demo: &Demonstration) -> Self {
        let m = &demo.meta;
        Self {
            meta: MetaFile {
                demonstrator: m.demonstrator.clone(),
                session: m.session,
                trial: m.trial,
                face: m.face.as_str().into(),
                target_id: m.target_id,
            },
            samples: demo
                .joint_traj
                .iter()
                .map(|s| SampleFile {
                    t: s.t,
                    q: s.q.0.to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_demo(&self, chain: &KinematicChain, path: &Path) -> Result<Demonstration> {
        let m = &self.meta;
        if m.session == 0 || m.trial == 0 {
            return Err(Error::schema(path, "session and trial count from 1"));
        }
        let meta = DemoMeta {
            target_id: m.target_id,
            face: FaceId::parse(&m.face).map_err(|e| Error::invalid(path, e))?,
            session: m.session,
            trial: m.trial,
            demonstrator: m.demonstrator.clone(),
        };
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let q = fixed::<DOF>(&s.q, &format!("sample {i}: q"), path)?;
                Ok(JointSample { t: s.t, q: JointConfig(q) })
            })
            .collect::<Result<Vec<_>>>()?;
        Demonstration::from_joints(chain, samples, meta).map_err(|e| Error::invalid(path, e))
    }
}

pub fn load_demo(path: &Path, chain: &KinematicChain) -> Result<Demonstration> {
    read_json::<DemoFile>(path)?.to_demo(chain, path)
}

pub fn save_demo(demo: &Demonstration, path: &Path) -> Result<()> {
    write_json_compact(path, &DemoFile::from_demo(demo))
}

/// File name of a demonstration inside a trial directory.
pub fn demo_file_name(target_id: usize) -> String {
    format!("target_{target_id}.json")
}

/// Writes one `target_<k>.json` per demonstration into `dir`.
pub fn save_demoset(set: &DemoSet, dir: &Path) -> Result<()> {
    let mut ids: Vec<usize> = set.demos.iter().map(|d| d.meta.target_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Failed(format!("{}: duplicate target ids in set", dir.display())));
    }
    create_dir(dir)?;
    for demo in &set.demos {
        save_demo(demo, &dir.join(demo_file_name(demo.meta.target_id)))?;
    }
    Ok(())
}

/// Reads every `target_<k>.json` in `dir`, ordered by `k`.
pub fn load_demoset(dir: &Path, chain: &KinematicChain) -> Result<DemoSet> {
    let files = demo_files(dir)?;
    if files.is_empty() {
        return Err(Error::schema(dir, "no target_<k>.json files"));
    }
    let demos = files
        .iter()
        .map(|(_, path)| load_demo(path, chain))
        .collect::<Result<Vec<_>>>()?;
    Ok(DemoSet::new(demos))
}

fn demo_files(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(k) = name.strip_prefix("target_").and_then(|s| s.strip_suffix(".json")) {
            let k = k
                .parse()
                .map_err(|_| Error::schema(&path, "file name must be target_<k>.json"))?;
            files.push((k, path));
        }
    }
    files.sort();
    Ok(files)
}

fn joint_header() -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=DOF).map(|i| format!("q{i}")))
        .collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `target_<k>.csv` (columns `t,q1..q7`) per demonstration and an
/// `index.csv` listing file names and metadata.
pub fn export_demoset_csv(set: &DemoSet, dir: &Path) -> Result<()> {
    let index_path = dir.join("index.csv");
    let mut index = csv_writer(&index_path)?;
    let err = csv_error(&index_path);
    index
        .write_record(["file", "demonstrator", "session", "trial", "face", "target_id", "samples"])
        .map_err(&err)?;
    for demo in &set.demos {
        let m = &demo.meta;
        let name = format!("target_{}.csv", m.target_id);
        let path = dir.join(&name);
        let mut w = csv_writer(&path)?;
        w.write_record(joint_header()).map_err(csv_error(&path))?;
        for s in &demo.joint_traj {
            let row: Vec<String> = std::iter::once(s.t).chain(s.q.0).map(|v| v.to_string()).collect();
            w.write_record(&row).map_err(csv_error(&path))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        index
            .write_record([
                name,
                m.demonstrator.clone(),
                m.session.to_string(),
                m.trial.to_string(),
                m.face.to_string(),
                m.target_id.to_string(),
                demo.len().to_string(),
            ])
            .map_err(&err)?;
    }
    index.flush().map_err(|e| Error::io(&index_path, e))
}

/// Writes a tracked trajectory with the demonstration columns (the time
/// column holds the phase) plus `feasible` and `reason`.
pub fn write_trajectory_csv(traj: &JointTrajectory, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = csv_error(path);
    let mut header = joint_header();
    header.extend(["feasible".to_string(), "reason".to_string()]);
    w.write_record(&header).map_err(&err)?;
    let reason = traj.failure_reason.map_or("", |r| r.as_str());
    for s in &traj.samples {
        let mut row: Vec<String> = std::iter::once(s.phase).chain(s.q.0).map(|v| v.to_string()).collect();
        row.push(traj.feasible.to_string());
        row.push(reason.to_string());
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
