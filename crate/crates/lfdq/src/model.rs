//! TP-GMM model files.
//!
//! `mu[k][j]` is the 8-vector of component `k` in frame `j` and
//! `sigma[k][j]` its 8×8 covariance as nested rows.

use std::path::Path;

use lfdq_core::tpgmm::{StateMatrix, TpgmmModel};
use lfdq_core::demonstrations::{StateVector, STATE_DIM};
use serde::{Deserialize, Serialize};

use crate::json::{read_json, write_json};
use crate::{Error, Result};

pub const MODEL_VERSION: &str = "tpgmm-v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub priors: Vec<f64>,
    pub frames: Vec<String>,
    pub mu: Vec<Vec<Vec<f64>>>,
    pub sigma: Vec<Vec<Vec<Vec<f64>>>>,
    pub reg: f64,
    #[serde(default)]
    pub log_likelihood: Vec<f64>,
}

impl ModelFile {
    pub fn from_model(model: &TpgmmModel) -> Self {
        let rows = |m: &StateMatrix| (0..STATE_DIM).map(|r| m.row(r).iter().copied().collect()).collect();
        Self {
            version: MODEL_VERSION.into(),
            k: model.components(),
            j: model.frame_count(),
            priors: model.priors.clone(),
            frames: model.frames.clone(),
            mu: model.mu.iter().map(|c| c.iter().map(|m| m.iter().copied().collect()).collect()).collect(),
            sigma: model.sigma.iter().map(|c| c.iter().map(rows).collect()).collect(),
            reg: model.reg,
            log_likelihood: model.log_likelihood.clone(),
        }
    }

    pub fn to_model(&self, path: &Path) -> Result<TpgmmModel> {
        if self.version != MODEL_VERSION {
            return Err(Error::schema(path, format!("version `{}`, expected `{MODEL_VERSION}`", self.version)));
        }
        let (k, j) = (self.k, self.j);
        let shape_ok = self.priors.len() == k
            && self.frames.len() == j
            && self.mu.len() == k
            && self.sigma.len() == k
            && self.mu.iter().all(|c| c.len() == j && c.iter().all(|m| m.len() == STATE_DIM))
            && self
                .sigma
                .iter()
                .all(|c| c.len() == j && c.iter().all(|s| s.len() == STATE_DIM && s.iter().all(|r| r.len() == STATE_DIM)));
        if !shape_ok {
            return Err(Error::schema(path, format!("arrays do not match K = {k}, J = {j}, dimension {STATE_DIM}")));
        }
        let model = TpgmmModel {
            priors: self.priors.clone(),
            mu: self.mu.iter().map(|c| c.iter().map(|m| StateVector::from_column_slice(m)).collect()).collect(),
            sigma: self
                .sigma
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|s| StateMatrix::from_row_iterator(s.iter().flatten().copied()))
                        .collect()
                })
                .collect(),
            frames: self.frames.clone(),
            reg: self.reg,
            log_likelihood: self.log_likelihood.clone(),
        };
        model.validate().map_err(|e| Error::invalid(path, e))?;
        Ok(model)
    }
}

pub fn load_model(path: &Path) -> Result<TpgmmModel> {
    read_json::<ModelFile>(path)?.to_model(path)
}

pub fn save_model(model: &TpgmmModel, path: &Path) -> Result<()> {
    write_json(path, &ModelFile::from_model(model))
}
