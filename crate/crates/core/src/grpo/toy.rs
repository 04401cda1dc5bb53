use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::plan_to_string;
use crate::domain::{Action, GroundTruth, Plan, Primitive, Sample};
use crate::rewards::planning_reward;
use crate::synth::{lengthen_plan, random_episode, SynthError};

/// One enumerated answer of a toy task.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyCandidate {
    pub label: &'static str,
    pub response: String,
}

/// A planning sample with a fixed candidate set. Candidate 0 is the
/// shortest correct plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyTask {
    pub sample: Sample,
    pub candidates: Vec<ToyCandidate>,
    pub gold: usize,
}

fn well_formed(plan: &Plan) -> String {
    format!("<think>Plan the steps in order.</think><answer>{}</answer>", plan_to_string(plan))
}

fn with_prefix(plan: &Plan, first: Action) -> Plan {
    let mut steps: Vec<Vec<Action>> = vec![vec![first]];
    steps.extend(plan.steps.iter().map(|s| s.actions.values().cloned().collect()));
    Plan::from_steps(steps)
}

/// `n_tasks` planning tasks drawn from synthetic episodes. Each has four
/// candidates: the reference plan, a feasible plan one step longer, and two
/// infeasible plans with malformed tags.
pub fn toy_suite(n_tasks: usize, seed: u64) -> Result<Vec<ToyTask>, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_tasks);
    let mut attempts = 0;
    while out.len() < n_tasks {
        attempts += 1;
        if attempts > 50 * n_tasks.max(1) {
            return Err(SynthError::RetriesExhausted(attempts - 1));
        }
        let ep = random_episode(&mut rng)?;
        let Some(longer) = lengthen_plan(&ep.scene, &ep.goals, &ep.plan) else { continue };
        let robot = &ep.scene.robots[0];
        let object = &ep.scene.objects[0].id;
        let grasp_first = with_prefix(&ep.plan, Action::new(robot.id.clone(), 0, Primitive::Grasp, object.clone()));
        let place_first =
            with_prefix(&ep.plan, Action::new(robot.id.clone(), 0, Primitive::Place, robot.start_location.clone()));
        let n_gt = ep.plan.len();
        let infeasible = |p: &Plan| planning_reward(&ep.scene, &ep.goals, p, n_gt, false) == 0.0;
        if !infeasible(&grasp_first) || !infeasible(&place_first) {
            continue;
        }
        let candidates = vec![
            ToyCandidate { label: "short", response: well_formed(&ep.plan) },
            ToyCandidate { label: "long", response: well_formed(&longer) },
            ToyCandidate { label: "infeasible_untagged", response: plan_to_string(&grasp_first) },
            ToyCandidate {
                label: "infeasible_trailing",
                response: format!("<answer>{}</answer> done", plan_to_string(&place_first)),
            },
        ];
        let sample = Sample {
            task_id: format!("toy{:03}", out.len()),
            scene: ep.scene,
            goals: ep.goals,
            truth: GroundTruth::Plan { plan: ep.plan, n_gt },
        };
        out.push(ToyTask { sample, candidates, gold: 0 });
    }
    Ok(out)
}
