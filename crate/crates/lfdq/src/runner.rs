//! Parallel cohort generation and study evaluation.
//!
//! Work is split by demonstrator (generation) and by trial (evaluation);
//! results are gathered in key order, so the output equals that of the
//! serial functions in [`lfdq_core`] whatever the thread count.

use lfdq_core::assessment::{evaluate_trial, summarize, EvalParams, StudyReport, TrialRecord};
use lfdq_core::kinematics::KinematicChain;
use lfdq_core::synthcohort::{
    demonstrator_seed, generate_demonstrator, plan_all_references, roster, Cohort, CohortSpec,
    DemonstratorProfile, PlannerConfig,
};
use lfdq_core::taskworld::TaskWorld;
use lfdq_core::{Error, Result};
use rayon::prelude::*;

pub fn generate_cohort(
    chain: &KinematicChain,
    world: &TaskWorld,
    spec: &CohortSpec,
    fast: &DemonstratorProfile,
    slow: &DemonstratorProfile,
    cfg: &PlannerConfig,
) -> Result<Cohort> {
    let demonstrators = roster(spec, fast, slow)?;
    let mut cohort = Cohort::default();
    if demonstrators.is_empty() {
        return Ok(cohort);
    }
    let references = plan_all_references(chain, world, cfg)?;
    let generated = demonstrators
        .par_iter()
        .enumerate()
        .map(|(i, who)| generate_demonstrator(chain, world, &references, who, demonstrator_seed(spec, i), cfg))
        .collect::<Result<Vec<_>>>()?;
    for trials in generated {
        cohort.extend(trials);
    }
    cohort.demonstrators = demonstrators;
    Ok(cohort)
}

/// Scores every trial, in trial-key order.
pub fn evaluate_cohort(
    chain: &KinematicChain,
    world: &TaskWorld,
    cohort: &Cohort,
    params: &EvalParams,
) -> Result<Vec<TrialRecord>> {
    params.validate()?;
    let trials: Vec<_> = cohort.trials.iter().collect();
    trials
        .par_iter()
        .map(|(key, set)| {
            Ok(TrialRecord {
                key: (*key).clone(),
                result: evaluate_trial(chain, world, set, key.face, params)?,
            })
        })
        .collect()
}

pub fn run_study(chain: &KinematicChain, world: &TaskWorld, cohort: &Cohort, params: &EvalParams) -> Result<StudyReport> {
    if cohort.trials.is_empty() {
        return Err(Error::EmptyDataset);
    }
    summarize(evaluate_cohort(chain, world, cohort, params)?, params.delta)
}
