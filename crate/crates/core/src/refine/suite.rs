use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ScriptedMock;
use crate::dataset::plan_to_string;
use crate::domain::{Action, GroundTruth, Plan, Primitive, Sample};
use crate::sim::{make_feedback, run_plan, ErrorCode};
use crate::synth::{random_episode, SynthError};

fn respond(plan: &Plan) -> String {
    format!("<think>Work through the steps.</think><answer>{}</answer>", plan_to_string(plan))
}

/// The plan with the Reach that precedes the first Grasp removed.
fn skip_reach(plan: &Plan) -> Option<Plan> {
    let mut steps: Vec<Vec<Action>> = plan.steps.iter().map(|s| s.actions.values().cloned().collect()).collect();
    let (gi, grasp) = steps
        .iter()
        .enumerate()
        .find_map(|(i, s)| s.iter().find(|a| a.primitive == Primitive::Grasp).map(|a| (i, a.clone())))?;
    let ri = (0..gi).rev().find(|&i| {
        steps[i].iter().any(|a| a.primitive == Primitive::Reach && a.robot == grasp.robot && a.target == grasp.target)
    })?;
    steps[ri].retain(|a| !(a.primitive == Primitive::Reach && a.robot == grasp.robot));
    steps.retain(|s| !s.is_empty());
    Some(Plan::from_steps(steps))
}

/// `n` planning samples and a mock that answers each with a plan that
/// grasps before reaching, unless the prompt already carries the matching
/// feedback, in which case it answers with the reference plan.
pub fn feedback_suite(n: usize, seed: u64) -> Result<(Vec<Sample>, ScriptedMock), SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    let mut mock = ScriptedMock::new("<think></think><answer>[]</answer>");
    let mut attempts = 0;
    while samples.len() < n {
        attempts += 1;
        if attempts > 200 * n.max(1) {
            return Err(SynthError::RetriesExhausted(attempts - 1));
        }
        let mut ep = random_episode(&mut rng)?;
        let Some(bad) = skip_reach(&ep.plan) else { continue };
        let report = run_plan(&ep.scene, &ep.goals, &bad);
        if report.failed_at.as_ref().map(|f| f.code) != Some(ErrorCode::PreconditionReach) {
            continue;
        }
        let task_id = format!("fb{:03}", samples.len());
        let marker = format!("[{task_id}]");
        ep.scene.instruction = format!("{marker} {}", ep.scene.instruction);
        mock = mock
            .rule_all([marker.clone(), make_feedback(&report)], respond(&ep.plan))
            .rule(marker, respond(&bad));
        let n_gt = ep.plan.len();
        samples.push(Sample {
            task_id,
            scene: ep.scene,
            goals: ep.goals,
            truth: GroundTruth::Plan { plan: ep.plan, n_gt },
        });
    }
    Ok((samples, mock))
}
