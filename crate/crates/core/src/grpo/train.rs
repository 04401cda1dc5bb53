use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{grpo_step, sample_group, sft_warmup, GrpoError, ToyPolicy, ToyTask, TrainConfig};
use crate::domain::Sample;
use crate::parse::{answer_text, parse_plan};
use crate::rewards::{score_response, RewardBreakdown, RewardWeights};
use crate::sim::run_plan;

/// Statistics of one training iteration. `expected_reward` is the exact
/// mean over tasks of `Σ_j p_j r_j` before the iteration's updates; the other
/// fields describe the sampled groups and the policy after the updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub mean_reward: f64,
    pub mean_format_reward: f64,
    pub kl: f64,
    pub expected_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub policy: ToyPolicy,
    pub curve: Vec<CurvePoint>,
}

/// Runs `cfg.iterations` rounds of one group per task. The reference policy
/// is the input policy.
pub fn train<F>(policy: &ToyPolicy, tasks: &[ToyTask], reward: F, cfg: &TrainConfig) -> Result<TrainOutcome, GrpoError>
where
    F: Fn(&Sample, &str) -> RewardBreakdown,
{
    cfg.validate()?;
    let reference = policy.clone();
    let mut current = policy.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let table: Vec<Vec<RewardBreakdown>> =
        tasks.iter().map(|t| t.candidates.iter().map(|c| reward(&t.sample, &c.response)).collect()).collect();
    for (task, row) in tasks.iter().zip(&table) {
        if current.logits(&task.sample.task_id)?.len() != row.len() {
            return Err(GrpoError::DimensionMismatch(task.sample.task_id.clone()));
        }
    }
    let mut curve = Vec::with_capacity(cfg.iterations);
    let n_tasks = tasks.len().max(1) as f64;
    for iteration in 0..cfg.iterations {
        let mut expected = 0.0;
        let mut total = 0.0;
        let mut format = 0.0;
        for (task, row) in tasks.iter().zip(&table) {
            let id = &task.sample.task_id;
            let p = current.probs(id)?;
            expected += p.iter().zip(row).map(|(pj, r)| pj * r.total).sum::<f64>();
            let mut group = sample_group(&current, &reference, id, cfg.group_size, &mut rng)?;
            for (slot, &i) in group.rewards.iter_mut().zip(&group.indices) {
                *slot = row[i].total;
                total += row[i].total;
                format += row[i].format;
            }
            grpo_step(&mut current, &reference, &group, cfg.kl_coefficient, cfg.learning_rate, cfg.epsilon)?;
        }
        let mut kl = 0.0;
        for task in tasks {
            kl += current.kl(&reference, &task.sample.task_id)?;
        }
        let samples = n_tasks * cfg.group_size as f64;
        curve.push(CurvePoint {
            iteration,
            mean_reward: total / samples,
            mean_format_reward: format / samples,
            kl: kl / n_tasks,
            expected_reward: expected / n_tasks,
        });
    }
    Ok(TrainOutcome { policy: current, curve })
}

/// First iteration whose expected reward exceeds `threshold`.
pub fn first_crossing(curve: &[CurvePoint], threshold: f64) -> Option<usize> {
    curve.iter().find(|p| p.expected_reward > threshold).map(|p| p.iteration)
}

/// Mean `N − N_gt` of the argmax candidates that succeed, or `None` when
/// none does.
pub fn greedy_delta_steps(policy: &ToyPolicy, tasks: &[ToyTask]) -> Result<Option<f64>, GrpoError> {
    let mut deltas = Vec::new();
    for task in tasks {
        let best = policy.argmax(&task.sample.task_id)?;
        let response = &task.candidates[best].response;
        let (Some(n_gt), Ok(plan)) = (task.sample.n_gt(), parse_plan(answer_text(response))) else { continue };
        if run_plan(&task.sample.scene, &task.sample.goals, &plan).success() {
            deltas.push(plan.len() as f64 - n_gt as f64);
        }
    }
    Ok((!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / deltas.len() as f64))
}

pub fn curve_to_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("iteration,mean_reward,mean_format_reward,kl,expected_reward\n");
    for p in curve {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6}",
            p.iteration, p.mean_reward, p.mean_format_reward, p.kl, p.expected_reward
        );
    }
    out
}

/// Settings for the cold versus warm-start comparison and the step-penalty
/// ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoConfig {
    pub n_tasks: usize,
    pub temperature: f64,
    pub sft_steps: usize,
    pub sft_learning_rate: f64,
    pub threshold: f64,
    pub train: TrainConfig,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            n_tasks: 10,
            temperature: 1.0,
            sft_steps: 3,
            sft_learning_rate: 0.5,
            threshold: 0.9,
            train: TrainConfig::default(),
        }
    }
}

impl DemoConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        self.train.validate()?;
        if self.n_tasks == 0 {
            return Err(GrpoError::BadConfig("n_tasks must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(GrpoError::BadConfig("temperature must be positive".into()));
        }
        if !(self.sft_learning_rate >= 0.0 && self.sft_learning_rate.is_finite()) {
            return Err(GrpoError::BadConfig("sft_learning_rate must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub cold_curve: Vec<CurvePoint>,
    pub warm_curve: Vec<CurvePoint>,
    pub cold_crossing: Option<usize>,
    pub warm_crossing: Option<usize>,
    pub delta_steps_penalty_on: Option<f64>,
    pub delta_steps_penalty_off: Option<f64>,
}

/// Trains from uniform logits and from an SFT warm start on the same toy
/// suite, then repeats the cold run without the step penalty.
pub fn run_demo(cfg: &DemoConfig, weights: RewardWeights) -> Result<DemoReport, GrpoError> {
    cfg.validate()?;
    let tasks = super::toy_suite(cfg.n_tasks, cfg.train.seed).map_err(|e| GrpoError::BadConfig(e.to_string()))?;
    let cold = ToyPolicy::uniform(tasks.iter().map(|t| (t.sample.task_id.as_str(), t.candidates.len())), cfg.temperature);
    let demos: BTreeMap<String, usize> = tasks.iter().map(|t| (t.sample.task_id.clone(), t.gold)).collect();
    let warm = sft_warmup(&cold, &demos, cfg.sft_steps, cfg.sft_learning_rate)?;
    let with_penalty = |s: &Sample, r: &str| score_response(s, r, weights, true);
    let without_penalty = |s: &Sample, r: &str| score_response(s, r, weights, false);
    let cold_run = train(&cold, &tasks, with_penalty, &cfg.train)?;
    let warm_run = train(&warm, &tasks, with_penalty, &cfg.train)?;
    let ablation = train(&cold, &tasks, without_penalty, &cfg.train)?;
    Ok(DemoReport {
        cold_crossing: first_crossing(&cold_run.curve, cfg.threshold),
        warm_crossing: first_crossing(&warm_run.curve, cfg.threshold),
        delta_steps_penalty_on: greedy_delta_steps(&cold_run.policy, &tasks)?,
        delta_steps_penalty_off: greedy_delta_steps(&ablation.policy, &tasks)?,
        cold_curve: cold_run.curve,
        warm_curve: warm_run.curve,
    })
}
