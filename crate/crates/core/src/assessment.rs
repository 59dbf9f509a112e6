//! Scoring demonstrations by what a model learned from them can do.
//!
//! One TP-GMM is fit per trial (nine demonstrations on one face). The model
//! then generates a reach for each demonstrated target and each target of
//! the 7×7 grid; CLIK turns the reach into joint motion and the task world
//! judges it. The success rate on the demonstrated targets labels the
//! trial's quality, and session-1 rates sort demonstrators into fast and
//! slow adapters.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

// Unused whenever std is linked somewhere in the build, which makes f64 math inherent.
#[allow(unused_imports)]
use num_traits::Float;

use crate::clik::{closest_demonstration, track_trajectory, ClikParams};
use crate::demonstrations::{dtw_align, DemoSet, FaceId, DEFAULT_ALIGNED_LENGTH};
use crate::kinematics::{JointConfig, KinematicChain, Pose};
use crate::synthcohort::{Cohort, TrialKey};
use crate::taskworld::{check_collisions, TaskWorld, Target};
use crate::tpgmm::{fit_em, generate_trajectory, EmOptions, FrameData, TaskFrame, TpgmmModel};
use crate::{Error, Result};

/// Default quality threshold δ.
pub const DEFAULT_DELTA: f64 = 0.8;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalParams {
    /// Quality threshold δ in (0, 1).
    pub delta: f64,
    pub em: EmOptions,
    pub clik: ClikParams,
    /// Samples per aligned demonstration and per generated reach; a reach
    /// that has not touched the goal by its last sample is unreached.
    pub samples: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            em: EmOptions::default(),
            clik: ClikParams::default(),
            samples: DEFAULT_ALIGNED_LENGTH,
        }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
        }
        if self.samples < 2 {
            return Err(Error::InvalidParameter("samples must be >= 2".into()));
        }
        if self.em.components == 0 || !(self.em.reg > 0.0) {
            return Err(Error::InvalidParameter("need K >= 1 and reg > 0".into()));
        }
        self.clik.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Success,
    BoxCollision,
    SelfCollision,
    Unreached,
    InfeasibleIk,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::Success,
        Outcome::BoxCollision,
        Outcome::SelfCollision,
        Outcome::Unreached,
        Outcome::InfeasibleIk,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::BoxCollision => "box_collision",
            Outcome::SelfCollision => "self_collision",
            Outcome::Unreached => "unreached",
            Outcome::InfeasibleIk => "infeasible_ik",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Outcome::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown outcome `{s}`")))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    /// One outcome per demonstrated target, in target order.
    pub task: Vec<Outcome>,
    /// One outcome per grid target, in grid order.
    pub generalization: Vec<Outcome>,
    pub task_rate: f64,
    pub gen_rate: f64,
}

impl TrialResult {
    pub fn new(task: Vec<Outcome>, generalization: Vec<Outcome>) -> Result<Self> {
        let task_rate = success_rate(&task)?;
        let gen_rate = success_rate(&generalization)?;
        Ok(Self {
            task,
            generalization,
            task_rate,
            gen_rate,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QualityLabel {
    High,
    Low,
}

impl QualityLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            QualityLabel::High => "high",
            QualityLabel::Low => "low",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AdapterLabel {
    Fast,
    Slow,
}

impl AdapterLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            AdapterLabel::Fast => "fast",
            AdapterLabel::Slow => "slow",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(AdapterLabel::Fast),
            "slow" => Ok(AdapterLabel::Slow),
            _ => Err(Error::InvalidParameter(alloc::format!("unknown adapter label `{s}`"))),
        }
    }
}

pub fn success_rate(outcomes: &[Outcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::EmptyOutcomes);
    }
    let ok = outcomes.iter().filter(|o| **o == Outcome::Success).count();
    Ok(ok as f64 / outcomes.len() as f64)
}

/// High iff `task_rate > delta`; a rate equal to the threshold is low.
pub fn classify_quality(task_rate: f64, delta: f64) -> QualityLabel {
    if task_rate > delta {
        QualityLabel::High
    } else {
        QualityLabel::Low
    }
}

/// Names of the two task frames, in order.
pub const FRAME_NAMES: [&str; 2] = ["start", "target"];

/// Start frame and target frame of one reach.
pub fn task_frames(start: &Pose, world: &TaskWorld, target: &Target) -> [TaskFrame; 2] {
    [TaskFrame::from_pose(start), TaskFrame::from_pose(&world.target_frame(target))]
}

/// Fits the trial model on an aligned set. Each demonstration's start
/// frame sits at its first pose and its target frame at the button it
/// pressed.
pub fn fit_trial_model(world: &TaskWorld, aligned: &DemoSet, face: FaceId, params: &EvalParams) -> Result<TpgmmModel> {
    let targets = world.demonstrated_targets(face);
    let mut frames = Vec::with_capacity(aligned.len());
    for (i, demo) in aligned.demos.iter().enumerate() {
        if demo.meta.face != face {
            return Err(Error::InvalidParameter(alloc::format!(
                "demonstration {i} is on face {} but the trial is on {face}",
                demo.meta.face
            )));
        }
        let target = targets.get(demo.meta.target_id).ok_or_else(|| {
            Error::InvalidParameter(alloc::format!("demonstration {i} has unknown target {}", demo.meta.target_id))
        })?;
        let first = demo.cart_traj.first().ok_or(Error::EmptyDemonstration { index: i })?;
        let start = Pose::new(first.position, first.orientation);
        frames.push(task_frames(&start, world, target).to_vec());
    }
    let data = FrameData::from_demos(aligned, &frames)?;
    let names: Vec<String> = FRAME_NAMES.iter().map(|s| s.to_string()).collect();
    fit_em(&data, &names, &params.em)
}

/// Generates, solves and judges one reach.
pub fn evaluate_target(
    chain: &KinematicChain,
    world: &TaskWorld,
    model: &TpgmmModel,
    aligned: &DemoSet,
    target: &Target,
    params: &EvalParams,
) -> Result<Outcome> {
    let q0 = chain.start_config();
    let start = chain.forward_kinematics(&q0);
    let frames = task_frames(&start, world, target);
    let cart = generate_trajectory(model, &frames, params.samples)?;
    let policy_demo = closest_demonstration(aligned, &world.target_frame(target))?;
    let policy: Vec<JointConfig> = policy_demo.joint_traj.iter().map(|s| s.q).collect();
    let joints = track_trajectory(chain, &q0, &cart, &policy, &params.clik)?;
    if !joints.feasible {
        return Ok(Outcome::InfeasibleIk);
    }
    let report = check_collisions(chain, &joints, world, target);
    Ok(if report.box_hit.is_some() {
        Outcome::BoxCollision
    } else if report.self_hit.is_some() {
        Outcome::SelfCollision
    } else if report.goal_contact.is_some() {
        Outcome::Success
    } else {
        Outcome::Unreached
    })
}

/// Fits one model on the trial and scores it on the nine demonstrated
/// targets and the 49 grid targets of `face`.
pub fn evaluate_trial(
    chain: &KinematicChain,
    world: &TaskWorld,
    set: &DemoSet,
    face: FaceId,
    params: &EvalParams,
) -> Result<TrialResult> {
    params.validate()?;
    let aligned = dtw_align(set, params.samples)?;
    let model = fit_trial_model(world, &aligned, face, params)?;
    let run = |targets: Vec<Target>| -> Result<Vec<Outcome>> {
        targets
            .iter()
            .map(|t| evaluate_target(chain, world, &model, &aligned, t, params))
            .collect()
    };
    TrialResult::new(run(world.demonstrated_targets(face))?, run(world.generalization_grid(face))?)
}

/// A scored trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub key: TrialKey,
    pub result: TrialResult,
}

/// Fast iff the mean session-1 task rate exceeds `delta` on both faces.
pub fn cluster_adapters(records: &[TrialRecord], delta: f64) -> Result<BTreeMap<String, AdapterLabel>> {
    let mut sums: BTreeMap<&str, [(f64, usize); 2]> = BTreeMap::new();
    for r in records {
        let entry = sums.entry(r.key.demonstrator.as_str()).or_insert([(0.0, 0); 2]);
        if r.key.session == 1 {
            let slot = &mut entry[face_slot(r.key.face)];
            slot.0 += r.result.task_rate;
            slot.1 += 1;
        }
    }
    let mut out = BTreeMap::new();
    for (who, faces) in sums {
        let mut fast = true;
        for face in FaceId::ALL {
            let (sum, n) = faces[face_slot(face)];
            if n == 0 {
                return Err(Error::MissingSession {
                    demonstrator: who.to_string(),
                    face: face.to_string(),
                });
            }
            fast &= sum / n as f64 > delta;
        }
        out.insert(who.to_string(), if fast { AdapterLabel::Fast } else { AdapterLabel::Slow });
    }
    Ok(out)
}

fn face_slot(face: FaceId) -> usize {
    match face {
        FaceId::Low => 0,
        FaceId::High => 1,
    }
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InvalidParameter("pearson needs at least 3 pairs".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Rates of one (session, face, adapter) cell, pooled over trials.
#[derive(Clone, Debug, PartialEq)]
pub struct CellStats {
    pub session: u8,
    pub face: FaceId,
    pub adapter: AdapterLabel,
    pub trials: usize,
    pub task_mean: f64,
    pub task_std: f64,
    pub gen_mean: f64,
    pub gen_std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    /// Sorted by trial key.
    pub records: Vec<TrialRecord>,
    pub adapters: BTreeMap<String, AdapterLabel>,
    /// Pearson correlation of per-trial task and generalization rates.
    pub rho: f64,
    /// Every (session, face, adapter) combination that has trials.
    pub cells: Vec<CellStats>,
    pub delta: f64,
}

impl StudyReport {
    pub fn count(&self, label: AdapterLabel) -> usize {
        self.adapters.values().filter(|l| **l == label).count()
    }

    pub fn label(&self, record: &TrialRecord) -> QualityLabel {
        classify_quality(record.result.task_rate, self.delta)
    }

    pub fn cell(&self, session: u8, face: FaceId, adapter: AdapterLabel) -> Option<&CellStats> {
        self.cells
            .iter()
            .find(|c| c.session == session && c.face == face && c.adapter == adapter)
    }

    /// Mean task rate of all trials of one adapter group in one session.
    pub fn session_mean(&self, session: u8, adapter: AdapterLabel) -> Option<f64> {
        let rates: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.key.session == session && self.adapters.get(&r.key.demonstrator) == Some(&adapter))
            .map(|r| r.result.task_rate)
            .collect();
        if rates.is_empty() {
            None
        } else {
            Some(rates.iter().sum::<f64>() / rates.len() as f64)
        }
    }
}

/// Aggregates scored trials: adapter labels, pooled correlation and the
/// per-cell tables.
pub fn summarize(mut records: Vec<TrialRecord>, delta: f64) -> Result<StudyReport> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    records.sort_by(|a, b| a.key.cmp(&b.key));
    let adapters = cluster_adapters(&records, delta)?;
    let task: Vec<f64> = records.iter().map(|r| r.result.task_rate).collect();
    let gen: Vec<f64> = records.iter().map(|r| r.result.gen_rate).collect();
    let rho = pearson(&task, &gen)?;
    let mut groups: BTreeMap<(u8, FaceId, AdapterLabel), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &records {
        let adapter = adapters[&r.key.demonstrator];
        let g = groups.entry((r.key.session, r.key.face, adapter)).or_default();
        g.0.push(r.result.task_rate);
        g.1.push(r.result.gen_rate);
    }
    let cells = groups
        .into_iter()
        .map(|((session, face, adapter), (t, g))| {
            let (task_mean, task_std) = mean_std(&t);
            let (gen_mean, gen_std) = mean_std(&g);
            CellStats {
                session,
                face,
                adapter,
                trials: t.len(),
                task_mean,
                task_std,
                gen_mean,
                gen_std,
            }
        })
        .collect();
    Ok(StudyReport {
        records,
        adapters,
        rho,
        cells,
        delta,
    })
}

/// Evaluates every trial of the cohort serially and summarizes.
pub fn run_study(chain: &KinematicChain, world: &TaskWorld, cohort: &Cohort, params: &EvalParams) -> Result<StudyReport> {
    params.validate()?;
    if cohort.trials.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let records = cohort
        .trials
        .iter()
        .map(|(key, set)| {
            Ok(TrialRecord {
                key: key.clone(),
                result: evaluate_trial(chain, world, set, key.face, params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(records, params.delta)
}
