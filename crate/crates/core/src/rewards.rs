//! Format reward, the three level-specific accuracy rewards and their
//! weighted combination `R = λ1·R_format + λ2·R_acc`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::domain::{GroundTruth, Goal, Plan, RobotKind, Sample, Scene};
use crate::metrics::{self, MetricError, Trajectory, TrajectorySet};
use crate::parse::{self, extract_tags};
use crate::sim::run_plan;

/// Weights of the format and accuracy terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { lambda1: 0.1, lambda2: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub format: f64,
    pub accuracy: f64,
    pub total: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl RewardBreakdown {
    pub fn new(format: f64, accuracy: f64, weights: RewardWeights) -> Self {
        RewardBreakdown {
            format,
            accuracy,
            total: total_reward(format, accuracy, weights.lambda1, weights.lambda2),
            lambda1: weights.lambda1,
            lambda2: weights.lambda2,
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// 1 iff the response is exactly a think block followed by an answer block.
pub fn format_reward(text: &str) -> f64 {
    indicator(extract_tags(text).well_formed)
}

/// Exact set match.
pub fn activation_reward(pred: &BTreeSet<RobotKind>, gt: &BTreeSet<RobotKind>) -> f64 {
    indicator(pred == gt)
}

/// 1 iff the plan executes, achieves every goal and, with the step penalty
/// on, is no longer than `n_gt`.
pub fn planning_reward(scene: &Scene, goals: &[Goal], plan: &Plan, n_gt: usize, step_penalty: bool) -> f64 {
    let ok = run_plan(scene, goals, plan).success();
    indicator(ok && (!step_penalty || plan.len() <= n_gt))
}

/// Mean of `1 - d̂` over RMSE, Hausdorff and Fréchet for every agent, with
/// distances normalised by the ground-truth image diagonal. Agents are
/// matched by index.
pub fn perception_reward(pred: &[Trajectory], gt: &TrajectorySet) -> Result<f64, MetricError> {
    if pred.len() != gt.trajectories.len() {
        return Err(MetricError::AgentCountMismatch { expected: gt.trajectories.len(), actual: pred.len() });
    }
    let (w, h) = (gt.image_width, gt.image_height);
    let mut sum = 0.0;
    for (p, g) in pred.iter().zip(&gt.trajectories) {
        let d = metrics::Distances::between(p, g);
        for dist in [d.rmse, d.hausdorff, d.frechet] {
            sum += 1.0 - metrics::normalize_distance(dist, w, h)?;
        }
    }
    Ok(sum / (3 * pred.len()) as f64)
}

pub fn total_reward(format: f64, accuracy: f64, lambda1: f64, lambda2: f64) -> f64 {
    lambda1 * format + lambda2 * accuracy
}

/// Accuracy reward of a raw response against a sample's ground truth.
/// Unparseable answers score 0.
pub fn accuracy_reward(sample: &Sample, response: &str, step_penalty: bool) -> f64 {
    let answer = parse::answer_text(response);
    match &sample.truth {
        GroundTruth::Agents(gt) => parse::parse_agent_set(answer).map_or(0.0, |pred| activation_reward(&pred, gt)),
        GroundTruth::Plan { n_gt, .. } => parse::parse_plan(answer)
            .map_or(0.0, |plan| planning_reward(&sample.scene, &sample.goals, &plan, *n_gt, step_penalty)),
        GroundTruth::Trajectories(gt) => parse::parse_trajectories(answer)
            .ok()
            .and_then(|pred| perception_reward(&pred, gt).ok())
            .unwrap_or(0.0),
    }
}

/// Full reward of one response.
pub fn score_response(sample: &Sample, response: &str, weights: RewardWeights, step_penalty: bool) -> RewardBreakdown {
    RewardBreakdown::new(format_reward(response), accuracy_reward(sample, response, step_penalty), weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Action, Primitive, RobotSpec, SceneObject};

    fn t(pairs: &[(f64, f64)]) -> Trajectory {
        Trajectory::from_pairs(pairs).unwrap()
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_reward("<think>x</think><answer>y</answer>"), 1.0);
        assert_eq!(format_reward("y"), 0.0);
        assert_eq!(format_reward("<think>x</think><answer>y</answer> trailing prose"), 0.0);
    }

    #[test]
    fn activation_examples() {
        use RobotKind::*;
        let set = |ks: &[RobotKind]| ks.iter().copied().collect::<BTreeSet<_>>();
        assert_eq!(activation_reward(&set(&[Fetch, UnitreeH1]), &set(&[UnitreeH1, Fetch])), 1.0);
        assert_eq!(activation_reward(&set(&[Fetch]), &set(&[Fetch, UnitreeH1])), 0.0);
        assert_eq!(activation_reward(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn total_examples() {
        assert!((total_reward(1.0, 0.5, 0.1, 0.9) - 0.55).abs() < 1e-12);
        assert!((total_reward(0.0, 1.0, 0.1, 0.9) - 0.9).abs() < 1e-12);
        assert!((total_reward(1.0, 1.0, 0.1, 0.9) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perception_worked_example() {
        let gt = TrajectorySet::new(vec![t(&[(0.0, 0.0), (0.0, 0.0)])], 640, 480).unwrap();
        let r = perception_reward(&[t(&[(0.0, 0.0), (3.0, 4.0)])], &gt).unwrap();
        // (1 - sqrt(12.5)/800 + 2 * (1 - 5/800)) / 3
        let expected = (1.0 - 12.5f64.sqrt() / 800.0 + 2.0 * (1.0 - 5.0 / 800.0)) / 3.0;
        assert!((r - expected).abs() < 1e-15);
        assert!((r - 0.9943600).abs() < 1e-6);
        assert_eq!(perception_reward(&gt.trajectories, &gt).unwrap(), 1.0);
    }

    #[test]
    fn perception_clamps_and_checks_counts() {
        let gt = TrajectorySet::new(vec![t(&[(0.0, 0.0)])], 640, 480).unwrap();
        assert_eq!(perception_reward(&[t(&[(5000.0, 5000.0)])], &gt).unwrap(), 0.0);
        assert_eq!(
            perception_reward(&[], &gt),
            Err(MetricError::AgentCountMismatch { expected: 1, actual: 0 })
        );
    }

    fn delivery() -> (Scene, Vec<Goal>, Plan) {
        let scene = Scene {
            locations: ["counter", "plate", "start"].iter().map(|s| s.to_string()).collect(),
            robots: vec![RobotSpec::new("R1", RobotKind::Fetch, "start")],
            objects: vec![SceneObject::new("apple", "counter")],
            instruction: String::new(),
        };
        let goals = vec![Goal::ObjectAt { object: "apple".into(), location: "plate".into() }];
        let a = |p, t: &str| Action::new("R1", 0, p, t);
        let plan = Plan::from_steps(vec![
            vec![a(Primitive::Move, "counter")],
            vec![a(Primitive::Reach, "apple")],
            vec![a(Primitive::Grasp, "apple")],
            vec![a(Primitive::Move, "plate")],
            vec![a(Primitive::Place, "plate")],
        ]);
        (scene, goals, plan)
    }

    #[test]
    fn step_penalty_truth_table() {
        let (scene, goals, plan) = delivery();
        assert_eq!(planning_reward(&scene, &goals, &plan, 5, true), 1.0);
        assert_eq!(planning_reward(&scene, &goals, &plan, 4, true), 0.0);
        assert_eq!(planning_reward(&scene, &goals, &plan, 4, false), 1.0);
        let mut broken = plan.clone();
        broken.steps.remove(1);
        for (i, s) in broken.steps.iter_mut().enumerate() {
            s.step = i as u32 + 1;
        }
        for penalty in [true, false] {
            for n_gt in [3, 4, 10] {
                assert_eq!(planning_reward(&scene, &goals, &broken, n_gt, penalty), 0.0);
            }
        }
    }
}
