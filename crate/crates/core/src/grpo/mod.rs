//! Supervised warmup and group-relative policy optimisation on a toy
//! policy: one categorical distribution per task over an enumerated set of
//! candidate answers.
//!
//! With `p = softmax(z / T)` over a task's logits `z`, the GRPO objective for
//! a group of sampled candidates `a_1..a_G` is
//!
//! ```text
//! J(z) = Σ_i A_i log p(a_i) − λ KL(p ‖ q)
//! ```
//!
//! where `A_i` are the group-standardised rewards and `q` is the frozen
//! reference policy. Its gradient is
//!
//! ```text
//! ∂J/∂z_j = (1/T) [ Σ_i A_i (δ(j, a_i) − p_j) − λ p_j (log p_j − log q_j − KL) ]
//! ```

mod toy;
mod train;

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use toy::{toy_suite, ToyCandidate, ToyTask};
pub use train::{
    curve_to_csv, first_crossing, greedy_delta_steps, run_demo, train, CurvePoint, DemoConfig, DemoReport, TrainOutcome,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrpoError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task `{task}` has no candidate {index}")]
    UnknownCandidate { task: String, index: usize },
    #[error("dimension mismatch for task `{0}`")]
    DimensionMismatch(String),
    #[error("invalid training config: {0}")]
    BadConfig(String),
}

/// Per-task logits over candidate answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    logits: BTreeMap<String, Vec<f64>>,
    pub temperature: f64,
}

pub(crate) fn log_softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().map(|z| z / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scaled.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scaled.iter().map(|s| s - lse).collect()
}

/// Closed-form `KL(p ‖ q)` from log-probabilities.
pub fn categorical_kl(logp: &[f64], logq: &[f64]) -> f64 {
    logp.iter().zip(logq).map(|(lp, lq)| if *lp == f64::NEG_INFINITY { 0.0 } else { lp.exp() * (lp - lq) }).sum()
}

impl ToyPolicy {
    /// All-zero logits (uniform distributions).
    pub fn uniform<'a>(tasks: impl IntoIterator<Item = (&'a str, usize)>, temperature: f64) -> Self {
        ToyPolicy {
            logits: tasks.into_iter().map(|(t, n)| (t.to_string(), vec![0.0; n])).collect(),
            temperature,
        }
    }

    pub fn from_logits(logits: BTreeMap<String, Vec<f64>>, temperature: f64) -> Self {
        ToyPolicy { logits, temperature }
    }

    pub fn tasks(&self) -> impl Iterator<Item = &str> {
        self.logits.keys().map(String::as_str)
    }

    pub fn logits(&self, task: &str) -> Result<&[f64], GrpoError> {
        self.logits.get(task).map(Vec::as_slice).ok_or_else(|| GrpoError::UnknownTask(task.to_string()))
    }

    fn logits_mut(&mut self, task: &str) -> Result<&mut Vec<f64>, GrpoError> {
        self.logits.get_mut(task).ok_or_else(|| GrpoError::UnknownTask(task.to_string()))
    }

    pub fn log_probs(&self, task: &str) -> Result<Vec<f64>, GrpoError> {
        Ok(log_softmax(self.logits(task)?, self.temperature))
    }

    pub fn probs(&self, task: &str) -> Result<Vec<f64>, GrpoError> {
        Ok(self.log_probs(task)?.into_iter().map(f64::exp).collect())
    }

    pub fn argmax(&self, task: &str) -> Result<usize, GrpoError> {
        let z = self.logits(task)?;
        Ok(z.iter().enumerate().fold(0, |best, (i, v)| if *v > z[best] { i } else { best }))
    }

    /// `KL(self ‖ reference)` for one task.
    pub fn kl(&self, reference: &ToyPolicy, task: &str) -> Result<f64, GrpoError> {
        let lp = self.log_probs(task)?;
        let lq = reference.log_probs(task)?;
        if lp.len() != lq.len() {
            return Err(GrpoError::DimensionMismatch(task.to_string()));
        }
        Ok(categorical_kl(&lp, &lq))
    }
}

/// Negative log-likelihood of the gold candidates.
pub fn sft_nll(policy: &ToyPolicy, demos: &BTreeMap<String, usize>) -> Result<f64, GrpoError> {
    let mut nll = 0.0;
    for (task, &gold) in demos {
        let lp = policy.log_probs(task)?;
        nll -= lp.get(gold).ok_or_else(|| GrpoError::UnknownCandidate { task: task.clone(), index: gold })?;
    }
    Ok(nll)
}

/// Gradient ascent on `Σ log p(gold)` over the demonstrations.
pub fn sft_warmup(
    policy: &ToyPolicy,
    demos: &BTreeMap<String, usize>,
    steps: usize,
    lr: f64,
) -> Result<ToyPolicy, GrpoError> {
    for (task, &gold) in demos {
        let n = policy.logits(task)?.len();
        if gold >= n {
            return Err(GrpoError::UnknownCandidate { task: task.clone(), index: gold });
        }
    }
    let mut out = policy.clone();
    let t = out.temperature;
    for _ in 0..steps {
        for (task, &gold) in demos {
            let p = out.probs(task)?;
            let z = out.logits_mut(task)?;
            for (j, zj) in z.iter_mut().enumerate() {
                let indicator = if j == gold { 1.0 } else { 0.0 };
                *zj += lr * (indicator - p[j]) / t;
            }
        }
    }
    Ok(out)
}

/// Sampled candidates for one task, with their rewards and log-probabilities
/// under the current and reference policies.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub task_id: String,
    pub indices: Vec<usize>,
    pub rewards: Vec<f64>,
    pub logp: Vec<f64>,
    pub ref_logp: Vec<f64>,
}

/// Draws `g` i.i.d. candidates. Rewards start at zero; fill them in before
/// the update.
pub fn sample_group(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    task: &str,
    g: usize,
    rng: &mut impl Rng,
) -> Result<Group, GrpoError> {
    let lp = policy.log_probs(task)?;
    let lq = reference.log_probs(task)?;
    if lp.len() != lq.len() {
        return Err(GrpoError::DimensionMismatch(task.to_string()));
    }
    let dist = WeightedIndex::new(lp.iter().map(|l| l.exp())).map_err(|_| GrpoError::DimensionMismatch(task.to_string()))?;
    let indices: Vec<usize> = (0..g).map(|_| dist.sample(rng)).collect();
    Ok(Group {
        task_id: task.to_string(),
        logp: indices.iter().map(|&i| lp[i]).collect(),
        ref_logp: indices.iter().map(|&i| lq[i]).collect(),
        rewards: vec![0.0; g],
        indices,
    })
}

/// `A_i = (r_i − mean) / max(σ, ε)` with the population standard deviation.
pub fn compute_advantages(rewards: &[f64], epsilon: f64) -> Vec<f64> {
    if rewards.is_empty() {
        return Vec::new();
    }
    if rewards.iter().all(|r| *r == rewards[0]) {
        return vec![0.0; rewards.len()];
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let scale = var.sqrt().max(epsilon);
    rewards.iter().map(|r| (r - mean) / scale).collect()
}

fn checked_group(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    group: &Group,
) -> Result<(Vec<f64>, Vec<f64>), GrpoError> {
    let lp = policy.log_probs(&group.task_id)?;
    let lq = reference.log_probs(&group.task_id)?;
    if lp.len() != lq.len() || group.rewards.len() != group.indices.len() || group.indices.iter().any(|&i| i >= lp.len()) {
        return Err(GrpoError::DimensionMismatch(group.task_id.clone()));
    }
    Ok((lp, lq))
}

/// Value of the objective for one group at the policy's current logits.
pub fn grpo_objective(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    group: &Group,
    kl_coef: f64,
    epsilon: f64,
) -> Result<f64, GrpoError> {
    let (lp, lq) = checked_group(policy, reference, group)?;
    let adv = compute_advantages(&group.rewards, epsilon);
    let pg: f64 = adv.iter().zip(&group.indices).map(|(a, &i)| a * lp[i]).sum();
    Ok(pg - kl_coef * categorical_kl(&lp, &lq))
}

/// Analytic gradient of [`grpo_objective`] with respect to the task's logits.
pub fn grpo_gradient(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    group: &Group,
    kl_coef: f64,
    epsilon: f64,
) -> Result<Vec<f64>, GrpoError> {
    let (lp, lq) = checked_group(policy, reference, group)?;
    let t = policy.temperature;
    let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    let adv = compute_advantages(&group.rewards, epsilon);
    let adv_sum: f64 = adv.iter().sum();
    let kl = categorical_kl(&lp, &lq);
    let mut grad: Vec<f64> = p.iter().map(|pj| -adv_sum * pj).collect();
    for (a, &i) in adv.iter().zip(&group.indices) {
        grad[i] += a;
    }
    for j in 0..grad.len() {
        let kl_grad = if p[j] > 0.0 { p[j] * (lp[j] - lq[j] - kl) } else { 0.0 };
        grad[j] = (grad[j] - kl_coef * kl_grad) / t;
    }
    Ok(grad)
}

/// One gradient-ascent step on the group objective. Returns the objective
/// before the update.
pub fn grpo_step(
    policy: &mut ToyPolicy,
    reference: &ToyPolicy,
    group: &Group,
    kl_coef: f64,
    lr: f64,
    epsilon: f64,
) -> Result<f64, GrpoError> {
    let j = grpo_objective(policy, reference, group, kl_coef, epsilon)?;
    let grad = grpo_gradient(policy, reference, group, kl_coef, epsilon)?;
    for (z, g) in policy.logits_mut(&group.task_id)?.iter_mut().zip(grad) {
        *z += lr * g;
    }
    Ok(j)
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub group_size: usize,
    pub kl_coefficient: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { group_size: 5, kl_coefficient: 0.01, learning_rate: 0.1, iterations: 500, epsilon: 1e-8, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.group_size < 2 {
            return Err(GrpoError::BadConfig("group_size must be at least 2".into()));
        }
        if !(self.kl_coefficient >= 0.0) {
            return Err(GrpoError::BadConfig("kl_coefficient must be non-negative".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(GrpoError::BadConfig("epsilon must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(GrpoError::BadConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
