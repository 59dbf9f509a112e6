//! Configuration files: evaluation parameters and cohort specifications.
//! Every field is optional and falls back to the library default.

use std::path::{Path, PathBuf};

use lfdq_core::assessment::EvalParams;
use lfdq_core::clik::ClikParams;
use lfdq_core::synthcohort::{CohortSpec, DemonstratorProfile};
use lfdq_core::tpgmm::EmOptions;
use lfdq_core::nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::json::read_json;
use crate::{Error, Result};

/// Feedback gain: one number for `k·I`, six for a diagonal, or 6×6 rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainFile {
    Scalar(f64),
    Diagonal([f64; 6]),
    Full(Box<[[f64; 6]; 6]>),
}

impl GainFile {
    pub fn from_matrix(m: &Matrix6<f64>) -> Self {
        let d = m.diagonal();
        if *m == Matrix6::from_diagonal(&d) {
            if d.iter().all(|v| *v == d[0]) {
                GainFile::Scalar(d[0])
            } else {
                GainFile::Diagonal(d.into())
            }
        } else {
            GainFile::Full(Box::new(std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))))
        }
    }

    pub fn to_matrix(&self) -> Matrix6<f64> {
        match self {
            GainFile::Scalar(k) => Matrix6::from_diagonal_element(*k),
            GainFile::Diagonal(d) => Matrix6::from_diagonal(&Vector6::from(*d)),
            GainFile::Full(rows) => Matrix6::from_fn(|r, c| rows[r][c]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClikFile {
    pub damping: f64,
    pub kp: GainFile,
    pub dt: f64,
    pub null_gain: f64,
    pub limit_margin_min: f64,
    pub max_retries: u32,
    pub final_tolerance: f64,
    pub divergence_threshold: f64,
}

impl ClikFile {
    pub fn from_params(p: &ClikParams) -> Self {
        Self {
            damping: p.damping,
            kp: GainFile::from_matrix(&p.kp),
            dt: p.dt,
            null_gain: p.null_gain,
            limit_margin_min: p.limit_margin_min,
            max_retries: p.max_retries,
            final_tolerance: p.final_tolerance,
            divergence_threshold: p.divergence_threshold,
        }
    }

    pub fn to_params(&self) -> ClikParams {
        ClikParams {
            damping: self.damping,
            kp: self.kp.to_matrix(),
            dt: self.dt,
            null_gain: self.null_gain,
            limit_margin_min: self.limit_margin_min,
            max_retries: self.max_retries,
            final_tolerance: self.final_tolerance,
            divergence_threshold: self.divergence_threshold,
        }
    }
}

impl Default for ClikFile {
    fn default() -> Self {
        Self::from_params(&ClikParams::default())
    }
}

/// `params.json` of the `eval` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsFile {
    pub delta: f64,
    pub components: usize,
    pub reg: f64,
    pub max_iter: usize,
    pub tolerance: f64,
    pub samples: usize,
    pub clik: ClikFile,
}

impl ParamsFile {
    pub fn from_params(p: &EvalParams) -> Self {
        Self {
            delta: p.delta,
            components: p.em.components,
            reg: p.em.reg,
            max_iter: p.em.max_iter,
            tolerance: p.em.tolerance,
            samples: p.samples,
            clik: ClikFile::from_params(&p.clik),
        }
    }

    pub fn to_params(&self, path: &Path) -> Result<EvalParams> {
        let params = EvalParams {
            delta: self.delta,
            em: EmOptions {
                components: self.components,
                reg: self.reg,
                max_iter: self.max_iter,
                tolerance: self.tolerance,
            },
            clik: self.clik.to_params(),
            samples: self.samples,
        };
        params.validate().map_err(|e| Error::invalid(path, e))?;
        params.clik.validate().map_err(|e| Error::invalid(path, e))?;
        Ok(params)
    }
}

impl Default for ParamsFile {
    fn default() -> Self {
        Self::from_params(&EvalParams::default())
    }
}

pub fn load_params(path: &Path) -> Result<EvalParams> {
    read_json::<ParamsFile>(path)?.to_params(path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub base_noise: f64,
    pub detour_amp: f64,
    pub approach_consistency: f64,
    pub improvement_rate: f64,
    pub collision_proneness: f64,
}

impl ProfileFile {
    pub fn from_profile(p: &DemonstratorProfile) -> Self {
        Self {
            base_noise: p.base_noise,
            detour_amp: p.detour_amp,
            approach_consistency: p.approach_consistency,
            improvement_rate: p.improvement_rate,
            collision_proneness: p.collision_proneness,
        }
    }

    pub fn to_profile(&self) -> DemonstratorProfile {
        DemonstratorProfile {
            base_noise: self.base_noise,
            detour_amp: self.detour_amp,
            approach_consistency: self.approach_consistency,
            improvement_rate: self.improvement_rate,
            collision_proneness: self.collision_proneness,
        }
    }
}

/// `spec.json` of the `synth` command. `chain` and `world` are paths
/// relative to the spec file; the bundled reference setup is used when they
/// are absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpecFile {
    pub n_fast: usize,
    pub n_slow: usize,
    pub seed: u64,
    pub profile_spread: f64,
    pub fast_profile: ProfileFile,
    pub slow_profile: ProfileFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub world: Option<PathBuf>,
}

impl Default for SynthSpecFile {
    fn default() -> Self {
        let spec = CohortSpec::default();
        Self {
            n_fast: spec.n_fast,
            n_slow: spec.n_slow,
            seed: spec.seed,
            profile_spread: spec.profile_spread,
            fast_profile: ProfileFile::from_profile(&DemonstratorProfile::fast_default()),
            slow_profile: ProfileFile::from_profile(&DemonstratorProfile::slow_default()),
            chain: None,
            world: None,
        }
    }
}

/// A validated synth specification.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub cohort: CohortSpec,
    pub fast: DemonstratorProfile,
    pub slow: DemonstratorProfile,
    pub chain: Option<PathBuf>,
    pub world: Option<PathBuf>,
}

impl SynthSpecFile {
    pub fn to_spec(&self, path: &Path) -> Result<SynthSpec> {
        let fast = self.fast_profile.to_profile();
        let slow = self.slow_profile.to_profile();
        for p in [&fast, &slow] {
            p.validate().map_err(|e| Error::invalid(path, e))?;
        }
        if !(self.profile_spread >= 0.0 && self.profile_spread.is_finite()) {
            return Err(Error::schema(path, "profile_spread must be a finite number >= 0"));
        }
        let base = path.parent().unwrap_or(Path::new(""));
        Ok(SynthSpec {
            cohort: CohortSpec {
                n_fast: self.n_fast,
                n_slow: self.n_slow,
                seed: self.seed,
                profile_spread: self.profile_spread,
            },
            fast,
            slow,
            chain: self.chain.as_ref().map(|p| base.join(p)),
            world: self.world.as_ref().map(|p| base.join(p)),
        })
    }
}

pub fn load_synth_spec(path: &Path) -> Result<SynthSpec> {
    read_json::<SynthSpecFile>(path)?.to_spec(path)
}
