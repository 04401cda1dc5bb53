//! Generate, check and refine: plans are requested from a
//! [`GeneratorClient`], executed by the simulator, and on failure the
//! feedback text is appended to the instruction for the next attempt.

mod client;
mod prompt;
mod suite;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Level, Plan, Sample};
use crate::parse::{answer_text, parse_plan};
use crate::sim::{make_feedback, run_plan, ExecReport};

pub use client::{GeneratorClient, GeneratorError, HttpConfig, HttpGenerator, MockRule, ScriptedMock, API_KEY_ENV};
pub use prompt::{default_template, render_prompt, ACTIVATION_TEMPLATE, PERCEPTION_TEMPLATE, PLANNING_TEMPLATE};
pub use suite::feedback_suite;

/// Separator placed before each appended feedback message.
pub const FEEDBACK_PREFIX: &str = "\nPrevious attempt failed: ";

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("task `{0}` is not a planning sample")]
    NotPlanning(String),
    #[error("invalid refine config: {0}")]
    BadConfig(String),
    #[error("task `{task_id}`: {source}")]
    Generator {
        task_id: String,
        source: GeneratorError,
        logs: Vec<AttemptLog>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub max_attempts: usize,
    pub feedback_enabled: bool,
    pub prompt_template: String,
    /// Attempt `i` (1-based) uses seed `seed + i - 1`.
    pub seed: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { max_attempts: 3, feedback_enabled: true, prompt_template: PLANNING_TEMPLATE.to_string(), seed: 0 }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<(), RefineError> {
        if self.max_attempts == 0 {
            return Err(RefineError::BadConfig("max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttemptLog {
    pub attempt_index: usize,
    pub seed: u64,
    pub prompt: String,
    pub response: String,
    pub plan: Option<Plan>,
    pub parse_error: Option<String>,
    pub report: Option<ExecReport>,
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineOutcome {
    pub task_id: String,
    pub success: bool,
    /// The successful plan, if any.
    pub plan: Option<Plan>,
    pub logs: Vec<AttemptLog>,
}

/// Runs up to `cfg.max_attempts` generator calls, stopping at the first
/// plan that is feasible and achieves every goal.
pub fn iterative_refine(
    sample: &Sample,
    gen: &dyn GeneratorClient,
    cfg: &RefineConfig,
) -> Result<RefineOutcome, RefineError> {
    cfg.validate()?;
    if sample.level() != Level::Planning {
        return Err(RefineError::NotPlanning(sample.task_id.clone()));
    }
    let mut instruction = sample.scene.instruction.clone();
    let mut logs = Vec::new();
    for attempt_index in 1..=cfg.max_attempts {
        let seed = cfg.seed.wrapping_add(attempt_index as u64 - 1);
        let prompt = render_prompt(&cfg.prompt_template, sample, &instruction);
        let response = match gen.generate(&prompt, seed) {
            Ok(r) => r,
            Err(source) => return Err(RefineError::Generator { task_id: sample.task_id.clone(), source, logs }),
        };
        let (plan, parse_error, report, feedback) = match parse_plan(answer_text(&response)) {
            Ok(plan) => {
                let report = run_plan(&sample.scene, &sample.goals, &plan);
                let feedback = make_feedback(&report);
                (Some(plan), None, Some(report), feedback)
            }
            Err(e) => {
                let feedback = format!("The answer could not be parsed: {e}.");
                (None, Some(e.to_string()), None, feedback)
            }
        };
        let success = report.as_ref().is_some_and(ExecReport::success);
        let final_plan = if success { plan.clone() } else { None };
        logs.push(AttemptLog { attempt_index, seed, prompt, response, plan, parse_error, report, feedback });
        if success {
            return Ok(RefineOutcome { task_id: sample.task_id.clone(), success: true, plan: final_plan, logs });
        }
        if cfg.feedback_enabled {
            instruction.push_str(FEEDBACK_PREFIX);
            instruction.push_str(&logs.last().expect("just pushed").feedback);
        }
    }
    Ok(RefineOutcome { task_id: sample.task_id.clone(), success: false, plan: None, logs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleResult {
    pub task_id: String,
    pub success: bool,
    pub attempts: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassAtK {
    pub k: usize,
    pub feedback: bool,
    pub rate: f64,
    pub results: Vec<SampleResult>,
}

/// Fraction of samples solved within `k` attempts. Without feedback the
/// attempts see the same prompt with seeds `seed..seed + k`; with feedback
/// they are chained through [`iterative_refine`]. Generator errors count as
/// failures. At most `jobs` samples run concurrently.
pub fn pass_at_k(
    samples: &[Sample],
    gen: &dyn GeneratorClient,
    k: usize,
    feedback: bool,
    template: &str,
    seed: u64,
    jobs: usize,
) -> Result<PassAtK, RefineError> {
    if k == 0 {
        return Err(RefineError::BadConfig("k must be at least 1".into()));
    }
    if jobs == 0 {
        return Err(RefineError::BadConfig("jobs must be at least 1".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.level() != Level::Planning) {
        return Err(RefineError::NotPlanning(s.task_id.clone()));
    }
    let cfg = RefineConfig { max_attempts: k, feedback_enabled: feedback, prompt_template: template.to_string(), seed };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| RefineError::BadConfig(e.to_string()))?;
    let results: Vec<SampleResult> = pool.install(|| {
        samples
            .par_iter()
            .map(|s| match iterative_refine(s, gen, &cfg) {
                Ok(out) => SampleResult {
                    task_id: out.task_id,
                    success: out.success,
                    attempts: out.logs.len(),
                    error: None,
                },
                Err(RefineError::Generator { task_id, source, logs }) => SampleResult {
                    task_id,
                    success: false,
                    attempts: logs.len() + 1,
                    error: Some(source.to_string()),
                },
                Err(e) => SampleResult { task_id: s.task_id.clone(), success: false, attempts: 0, error: Some(e.to_string()) },
            })
            .collect()
    });
    let solved = results.iter().filter(|r| r.success).count();
    let rate = if results.is_empty() { 0.0 } else { solved as f64 / results.len() as f64 };
    Ok(PassAtK { k, feedback, rate, results })
}
