//! Study results on disk.
//!
//! `eval` writes `results.json` (every per-target outcome) and `rates.csv`;
//! `classify` adds `classification.json`; `report` writes `rates.csv` and
//! `summary.json` to its own directory.

use std::collections::BTreeMap;
use std::path::Path;

use lfdq_core::assessment::{
    classify_quality, AdapterLabel, CellStats, Outcome, StudyReport, TrialRecord, TrialResult,
};
use lfdq_core::demonstrations::FaceId;
use lfdq_core::synthcohort::TrialKey;
use serde::{Deserialize, Serialize};

use crate::json::{read_json, write_json};
use crate::{Error, Result};

pub const RESULTS_FILE: &str = "results.json";
pub const RATES_FILE: &str = "rates.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CLASSIFICATION_FILE: &str = "classification.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordFile {
    pub demonstrator: String,
    pub session: u8,
    pub trial: u8,
    pub face: String,
    pub task_rate: f64,
    pub gen_rate: f64,
    pub task: Vec<String>,
    pub generalization: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsFile {
    pub delta: f64,
    pub records: Vec<RecordFile>,
}

fn names(outcomes: &[Outcome]) -> Vec<String> {
    outcomes.iter().map(|o| o.as_str().to_string()).collect()
}

impl ResultsFile {
    pub fn new(records: &[TrialRecord], delta: f64) -> Self {
        let mut records: Vec<&TrialRecord> = records.iter().collect();
        records.sort_by(|a, b| a.key.cmp(&b.key));
        Self {
            delta,
            records: records
                .into_iter()
                .map(|r| RecordFile {
                    demonstrator: r.key.demonstrator.clone(),
                    session: r.key.session,
                    trial: r.key.trial,
                    face: r.key.face.as_str().into(),
                    task_rate: r.result.task_rate,
                    gen_rate: r.result.gen_rate,
                    task: names(&r.result.task),
                    generalization: names(&r.result.generalization),
                })
                .collect(),
        }
    }

    /// Rates are recomputed from the outcomes and must match the stored ones.
    pub fn to_records(&self, path: &Path) -> Result<Vec<TrialRecord>> {
        self.records
            .iter()
            .map(|r| {
                let parse = |list: &[String]| {
                    list.iter()
                        .map(|s| Outcome::parse(s).map_err(|e| Error::invalid(path, e)))
                        .collect::<Result<Vec<_>>>()
                };
                let result = TrialResult::new(parse(&r.task)?, parse(&r.generalization)?)
                    .map_err(|e| Error::invalid(path, e))?;
                if result.task_rate != r.task_rate || result.gen_rate != r.gen_rate {
                    return Err(Error::schema(path, format!("rates of {} disagree with its outcomes", r.demonstrator)));
                }
                Ok(TrialRecord {
                    key: TrialKey {
                        demonstrator: r.demonstrator.clone(),
                        session: r.session,
                        trial: r.trial,
                        face: FaceId::parse(&r.face).map_err(|e| Error::invalid(path, e))?,
                    },
                    result,
                })
            })
            .collect()
    }
}

pub fn save_results(records: &[TrialRecord], delta: f64, dir: &Path) -> Result<()> {
    write_json(&dir.join(RESULTS_FILE), &ResultsFile::new(records, delta))
}

/// Records and the δ they were evaluated with.
pub fn load_results(dir: &Path) -> Result<(Vec<TrialRecord>, f64)> {
    let path = dir.join(RESULTS_FILE);
    let file: ResultsFile = read_json(&path)?;
    let records = file.to_records(&path)?;
    if records.is_empty() {
        return Err(Error::schema(&path, "no records"));
    }
    Ok((records, file.delta))
}

#[derive(Serialize)]
struct RateRow<'a> {
    demonstrator: &'a str,
    session: u8,
    trial: u8,
    face: &'a str,
    task_rate: f64,
    gen_rate: f64,
    label: &'a str,
}

/// One row per trial in key order, labeled against `delta`.
pub fn write_rates_csv(records: &[TrialRecord], delta: f64, path: &Path) -> Result<()> {
    let err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        crate::json::create_dir(parent)?;
    }
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in sorted {
        w.serialize(RateRow {
            demonstrator: &r.key.demonstrator,
            session: r.key.session,
            trial: r.key.trial,
            face: r.key.face.as_str(),
            task_rate: r.result.task_rate,
            gen_rate: r.result.gen_rate,
            label: classify_quality(r.result.task_rate, delta).as_str(),
        })
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFile {
    pub session: u8,
    pub face: String,
    pub adapter: String,
    pub trials: usize,
    pub task_mean: f64,
    pub task_std: f64,
    pub gen_mean: f64,
    pub gen_std: f64,
}

impl CellFile {
    fn new(c: &CellStats) -> Self {
        Self {
            session: c.session,
            face: c.face.as_str().into(),
            adapter: c.adapter.as_str().into(),
            trials: c.trials,
            task_mean: c.task_mean,
            task_std: c.task_std,
            gen_mean: c.gen_mean,
            gen_std: c.gen_std,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdapterCounts {
    pub fast: usize,
    pub slow: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub rho: f64,
    pub delta: f64,
    pub trials: usize,
    pub adapters: AdapterCounts,
    pub demonstrators: BTreeMap<String, String>,
    pub cells: Vec<CellFile>,
}

impl SummaryFile {
    pub fn new(report: &StudyReport) -> Self {
        Self {
            rho: report.rho,
            delta: report.delta,
            trials: report.records.len(),
            adapters: AdapterCounts {
                fast: report.count(AdapterLabel::Fast),
                slow: report.count(AdapterLabel::Slow),
            },
            demonstrators: report
                .adapters
                .iter()
                .map(|(k, v)| (k.clone(), v.as_str().to_string()))
                .collect(),
            cells: report.cells.iter().map(CellFile::new).collect(),
        }
    }
}

/// Writes `rates.csv` and `summary.json` into `dir`.
pub fn write_report(report: &StudyReport, dir: &Path) -> Result<()> {
    write_rates_csv(&report.records, report.delta, &dir.join(RATES_FILE))?;
    write_json(&dir.join(SUMMARY_FILE), &SummaryFile::new(report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelFile {
    pub demonstrator: String,
    pub session: u8,
    pub trial: u8,
    pub face: String,
    pub task_rate: f64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationFile {
    pub delta: f64,
    pub adapters: BTreeMap<String, String>,
    pub counts: AdapterCounts,
    pub trials: Vec<LabelFile>,
}

impl ClassificationFile {
    pub fn new(records: &[TrialRecord], adapters: &BTreeMap<String, AdapterLabel>, delta: f64) -> Self {
        let count = |l| adapters.values().filter(|a| **a == l).count();
        Self {
            delta,
            adapters: adapters.iter().map(|(k, v)| (k.clone(), v.as_str().to_string())).collect(),
            counts: AdapterCounts {
                fast: count(AdapterLabel::Fast),
                slow: count(AdapterLabel::Slow),
            },
            trials: records
                .iter()
                .map(|r| LabelFile {
                    demonstrator: r.key.demonstrator.clone(),
                    session: r.key.session,
                    trial: r.key.trial,
                    face: r.key.face.as_str().into(),
                    task_rate: r.result.task_rate,
                    label: classify_quality(r.result.task_rate, delta).as_str().into(),
                })
                .collect(),
        }
    }
}

pub fn save_classification(file: &ClassificationFile, dir: &Path) -> Result<()> {
    write_json(&dir.join(CLASSIFICATION_FILE), file)
}

/// δ chosen by the last `classify`, if any.
pub fn classification_delta(dir: &Path) -> Result<Option<f64>> {
    let path = dir.join(CLASSIFICATION_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let file: ClassificationFile = read_json(&path)?;
    Ok(Some(file.delta))
}
