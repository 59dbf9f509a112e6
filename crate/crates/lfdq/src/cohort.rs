//! Cohort directories.
//!
//! ```text
//! cohort/
//!   cohort.json          roster, generating spec and infeasible demonstrations
//!   chain.json           the chain the joints were recorded on
//!   world.json
//!   <demonstrator>/<session>/<trial>/<face>/target_<k>.json
//! ```
//!
//! Only the demonstration files are required for reading; a missing
//! `chain.json` means the bundled reference chain.

use std::fs;
use std::path::{Path, PathBuf};

use lfdq_core::demonstrations::FaceId;
use lfdq_core::kinematics::KinematicChain;
use lfdq_core::synthcohort::{Cohort, CohortSpec, Demonstrator, Group, TrialKey};
use lfdq_core::taskworld::TaskWorld;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{load_chain, save_chain};
use crate::config::ProfileFile;
use crate::demo::{load_demoset, save_demoset};
use crate::json::{read_json, write_json};
use crate::world::save_world;
use crate::{Error, Result};

pub const MANIFEST: &str = "cohort.json";
pub const CHAIN_FILE: &str = "chain.json";
pub const WORLD_FILE: &str = "world.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemonstratorFile {
    pub name: String,
    pub group: String,
    pub profile: ProfileFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfeasibleFile {
    pub demonstrator: String,
    pub session: u8,
    pub trial: u8,
    pub face: String,
    pub target_id: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub n_fast: usize,
    pub n_slow: usize,
    pub seed: u64,
    pub profile_spread: f64,
    pub demonstrators: Vec<DemonstratorFile>,
    pub infeasible: Vec<InfeasibleFile>,
}

/// Directory of one trial inside a cohort directory.
pub fn trial_dir(root: &Path, key: &TrialKey) -> PathBuf {
    root.join(&key.demonstrator)
        .join(key.session.to_string())
        .join(key.trial.to_string())
        .join(key.face.as_str())
}

pub fn save_cohort(cohort: &Cohort, spec: &CohortSpec, chain: &KinematicChain, world: &TaskWorld, root: &Path) -> Result<()> {
    let manifest = ManifestFile {
        n_fast: spec.n_fast,
        n_slow: spec.n_slow,
        seed: spec.seed,
        profile_spread: spec.profile_spread,
        demonstrators: cohort
            .demonstrators
            .iter()
            .map(|d| DemonstratorFile {
                name: d.name.clone(),
                group: d.group.as_str().into(),
                profile: ProfileFile::from_profile(&d.profile),
            })
            .collect(),
        infeasible: cohort
            .infeasible
            .iter()
            .map(|(k, target_id)| InfeasibleFile {
                demonstrator: k.demonstrator.clone(),
                session: k.session,
                trial: k.trial,
                face: k.face.as_str().into(),
                target_id: *target_id,
            })
            .collect(),
    };
    write_json(&root.join(MANIFEST), &manifest)?;
    save_chain(chain, &root.join(CHAIN_FILE))?;
    save_world(world, &root.join(WORLD_FILE))?;
    let trials: Vec<_> = cohort.trials.iter().collect();
    trials
        .par_iter()
        .try_for_each(|(key, set)| save_demoset(set, &trial_dir(root, key)))
}

/// The chain stored with the cohort, or the reference chain.
pub fn cohort_chain(root: &Path) -> Result<KinematicChain> {
    let path = root.join(CHAIN_FILE);
    if path.exists() {
        load_chain(&path)
    } else {
        Ok(KinematicChain::reference())
    }
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            out.push((name, path));
        }
    }
    out.sort();
    Ok(out)
}

fn index_dir(name: &str, path: &Path) -> Result<u8> {
    match name.parse::<u8>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(Error::schema(path, "expected a directory named by a positive number")),
    }
}

/// Reads the demonstrations of a cohort directory. Each file's metadata
/// must agree with its place in the layout.
pub fn load_cohort(root: &Path, chain: &KinematicChain) -> Result<Cohort> {
    if !root.is_dir() {
        return Err(Error::FileMissing(root.to_path_buf()));
    }
    let mut keys = Vec::new();
    for (who, who_dir) in sorted_subdirs(root)? {
        for (session, session_dir) in sorted_subdirs(&who_dir)? {
            let session = index_dir(&session, &session_dir)?;
            for (trial, trial_dir) in sorted_subdirs(&session_dir)? {
                let trial = index_dir(&trial, &trial_dir)?;
                for (face, face_dir) in sorted_subdirs(&trial_dir)? {
                    let face = FaceId::parse(&face).map_err(|e| Error::invalid(&face_dir, e))?;
                    let key = TrialKey {
                        demonstrator: who.clone(),
                        session,
                        trial,
                        face,
                    };
                    keys.push((key, face_dir));
                }
            }
        }
    }
    if keys.is_empty() {
        return Err(Error::schema(root, "no trial directories"));
    }
    let sets = keys
        .par_iter()
        .map(|(key, dir)| {
            let set = load_demoset(dir, chain)?;
            for demo in &set.demos {
                let m = &demo.meta;
                if m.demonstrator != key.demonstrator || m.session != key.session || m.trial != key.trial || m.face != key.face {
                    return Err(Error::schema(dir, "demonstration metadata disagrees with its directory"));
                }
            }
            Ok(set)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cohort = Cohort {
        trials: keys.into_iter().map(|(k, _)| k).zip(sets).collect(),
        ..Cohort::default()
    };
    let manifest_path = root.join(MANIFEST);
    if manifest_path.exists() {
        let manifest: ManifestFile = read_json(&manifest_path)?;
        for d in &manifest.demonstrators {
            let group = match d.group.as_str() {
                "fast" => Group::Fast,
                "slow" => Group::Slow,
                other => return Err(Error::schema(&manifest_path, format!("unknown group `{other}`"))),
            };
            cohort.demonstrators.push(Demonstrator {
                name: d.name.clone(),
                group,
                profile: d.profile.to_profile(),
            });
        }
        for i in &manifest.infeasible {
            let face = FaceId::parse(&i.face).map_err(|e| Error::invalid(&manifest_path, e))?;
            let key = TrialKey {
                demonstrator: i.demonstrator.clone(),
                session: i.session,
                trial: i.trial,
                face,
            };
            cohort.infeasible.push((key, i.target_id));
        }
        cohort.infeasible.sort();
    }
    Ok(cohort)
}
