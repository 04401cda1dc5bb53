//! Batch evaluation of predictions against a dataset.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{GroundTruth, Level, Sample};
use crate::metrics::Distances;
use crate::parse::{answer_text, parse_agent_set, parse_plan, parse_trajectories};
use crate::rewards::format_reward;
use crate::sim::run_plan;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("jobs must be at least 1")]
    NoJobs,
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Result for one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleEval {
    pub task_id: String,
    pub level: u8,
    pub missing: bool,
    /// L1: exact set match. L2: feasible, goals met and (with the penalty)
    /// `N ≤ N_gt`. L3: parsed with one trajectory per agent.
    pub correct: bool,
    pub format: f64,
    pub feasible: Option<bool>,
    pub n_pred: Option<usize>,
    pub n_gt: Option<usize>,
    pub delta_steps: Option<f64>,
    pub rmse: Option<f64>,
    pub hausdorff: Option<f64>,
    pub frechet: Option<f64>,
    pub error: Option<String>,
}

impl SampleEval {
    fn blank(sample: &Sample) -> Self {
        SampleEval {
            task_id: sample.task_id.clone(),
            level: sample.level().number(),
            missing: false,
            correct: false,
            format: 0.0,
            feasible: None,
            n_pred: None,
            n_gt: sample.n_gt(),
            delta_steps: None,
            rmse: None,
            hausdorff: None,
            frechet: None,
            error: None,
        }
    }
}

/// Aggregates for one level. `acc` is a percentage; trajectory distances
/// are raw pixels averaged over correctly shaped predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub count: usize,
    pub correct: usize,
    pub acc: f64,
    pub delta_steps: Option<f64>,
    pub rmse: Option<f64>,
    pub hausdorff: Option<f64>,
    pub frechet: Option<f64>,
    pub average: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub step_penalty: bool,
    pub l1: Option<LevelSummary>,
    pub l2: Option<LevelSummary>,
    pub l3: Option<LevelSummary>,
    pub missing: Vec<String>,
    pub samples: Vec<SampleEval>,
}

impl EvalReport {
    /// True when every evaluated sample is present and correct.
    pub fn all_correct(&self) -> bool {
        self.samples.iter().all(|s| s.correct)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        let mut out =
            String::from("task_id,level,missing,correct,format,feasible,n_pred,n_gt,delta_steps,rmse,hausdorff,frechet\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.task_id,
                s.level,
                s.missing,
                s.correct,
                s.format,
                opt(&s.feasible),
                opt(&s.n_pred),
                opt(&s.n_gt),
                opt(&s.delta_steps),
                opt(&s.rmse),
                opt(&s.hausdorff),
                opt(&s.frechet)
            );
        }
        out
    }
}

fn evaluate_one(sample: &Sample, response: Option<&String>, step_penalty: bool) -> SampleEval {
    let mut out = SampleEval::blank(sample);
    let Some(response) = response else {
        out.missing = true;
        out.error = Some("missing prediction".into());
        return out;
    };
    out.format = format_reward(response);
    let answer = answer_text(response);
    match &sample.truth {
        GroundTruth::Agents(gt) => match parse_agent_set(answer) {
            Ok(pred) => out.correct = &pred == gt,
            Err(e) => out.error = Some(e.to_string()),
        },
        GroundTruth::Plan { n_gt, .. } => match parse_plan(answer) {
            Ok(plan) => {
                let report = run_plan(&sample.scene, &sample.goals, &plan);
                out.feasible = Some(report.feasible);
                out.n_pred = Some(plan.len());
                if report.success() {
                    out.delta_steps = Some(plan.len() as f64 - *n_gt as f64);
                }
                out.correct = report.success() && (!step_penalty || plan.len() <= *n_gt);
            }
            Err(e) => out.error = Some(e.to_string()),
        },
        GroundTruth::Trajectories(gt) => match parse_trajectories(answer) {
            Ok(pred) if pred.len() == gt.trajectories.len() => {
                let d: Vec<Distances> = pred.iter().zip(&gt.trajectories).map(|(p, g)| Distances::between(p, g)).collect();
                out.rmse = mean(d.iter().map(|x| x.rmse));
                out.hausdorff = mean(d.iter().map(|x| x.hausdorff));
                out.frechet = mean(d.iter().map(|x| x.frechet));
                out.correct = true;
            }
            Ok(pred) => {
                out.error = Some(format!("expected {} trajectories, got {}", gt.trajectories.len(), pred.len()))
            }
            Err(e) => out.error = Some(e.to_string()),
        },
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarize(samples: &[&SampleEval], level: Level) -> LevelSummary {
    let count = samples.len();
    let correct = samples.iter().filter(|s| s.correct).count();
    let acc = if count == 0 { 0.0 } else { 100.0 * correct as f64 / count as f64 };
    let mut summary = LevelSummary {
        count,
        correct,
        acc,
        delta_steps: None,
        rmse: None,
        hausdorff: None,
        frechet: None,
        average: None,
    };
    match level {
        Level::Activation => {}
        Level::Planning => summary.delta_steps = mean(samples.iter().filter_map(|s| s.delta_steps)),
        Level::Perception => {
            summary.rmse = mean(samples.iter().filter_map(|s| s.rmse));
            summary.hausdorff = mean(samples.iter().filter_map(|s| s.hausdorff));
            summary.frechet = mean(samples.iter().filter_map(|s| s.frechet));
            if let (Some(r), Some(h), Some(f)) = (summary.rmse, summary.hausdorff, summary.frechet) {
                summary.average = Some((r + h + f) / 3.0);
            }
        }
    }
    summary
}

/// Scores every sample (optionally only one level) against the predictions
/// keyed by task id. At most `jobs` samples are scored concurrently; the
/// report does not depend on `jobs`.
pub fn evaluate(
    dataset: &[Sample],
    predictions: &BTreeMap<String, String>,
    level: Option<Level>,
    step_penalty: bool,
    jobs: usize,
) -> Result<EvalReport, EvalError> {
    if jobs == 0 {
        return Err(EvalError::NoJobs);
    }
    let selected: Vec<&Sample> = dataset.iter().filter(|s| level.is_none_or(|l| s.level() == l)).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| EvalError::Pool(e.to_string()))?;
    let samples: Vec<SampleEval> = pool.install(|| {
        selected.par_iter().map(|s| evaluate_one(s, predictions.get(&s.task_id), step_penalty)).collect()
    });
    let by_level = |l: Level| {
        let group: Vec<&SampleEval> = samples.iter().filter(|s| s.level == l.number()).collect();
        (!group.is_empty()).then(|| summarize(&group, l))
    };
    Ok(EvalReport {
        step_penalty,
        l1: by_level(Level::Activation),
        l2: by_level(Level::Planning),
        l3: by_level(Level::Perception),
        missing: samples.iter().filter(|s| s.missing).map(|s| s.task_id.clone()).collect(),
        samples,
    })
}
