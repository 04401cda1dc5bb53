//! Breadth-first search over joint actions. Used as the ground-truth oracle
//! for plan length and plans of synthetic samples.

use std::collections::HashSet;

use thiserror::Error;

use super::{apply_step, goal_satisfied, run_plan, StateKey, UnknownId, WorldState};
use crate::domain::{Action, Goal, Plan, Primitive, Scene};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("search space too large: {0}")]
    TooLarge(String),
    #[error("search budget of {0} states exceeded")]
    SearchBudgetExceeded(usize),
    #[error(transparent)]
    UnknownId(#[from] UnknownId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverLimits {
    pub max_robots: usize,
    pub max_objects: usize,
    pub max_steps: usize,
    pub max_states: usize,
}

impl Default for SolverLimits {
    fn default() -> Self {
        SolverLimits { max_robots: 3, max_objects: 5, max_steps: 8, max_states: 200_000 }
    }
}

/// Actions a robot might successfully take this step. Covers everything
/// that could pass the checker once earlier robots in the same step have
/// acted, up to actions with identical effects (moving to an object equals
/// moving to its zone).
pub(crate) fn robot_options(scene: &Scene, state: &WorldState, robot: &str) -> Vec<Action> {
    let kind = scene.robot(robot).expect("robot in scene").kind;
    let here = &state.robot_location[robot];
    let reached = state.reached[robot].as_deref();
    let holding = !state.held[robot].is_empty();
    let mut out = Vec::new();
    for primitive in Primitive::ALL {
        if !kind.supports(primitive) {
            continue;
        }
        let mut add = |target: &str| out.push(Action::new(robot, 0, primitive, target));
        match primitive {
            Primitive::Move => scene.locations.iter().filter(|l| *l != here).for_each(|l| add(l)),
            Primitive::Reach | Primitive::Interact => scene.objects.iter().for_each(|o| add(&o.id)),
            Primitive::Grasp => reached.into_iter().for_each(add),
            Primitive::Open | Primitive::Close => {
                reached.filter(|o| state.open_state.contains_key(*o)).into_iter().for_each(add)
            }
            Primitive::Place => {
                if holding {
                    add(here)
                }
            }
            Primitive::Push => {
                for o in &scene.objects {
                    for other in scene.robot_ids().into_iter().filter(|r| *r != robot) {
                        out.push(Action::push(robot, 0, o.id.clone(), other));
                    }
                }
            }
        }
    }
    out
}

fn all_met(state: &WorldState, goals: &[Goal]) -> Result<bool, UnknownId> {
    for g in goals {
        if !goal_satisfied(state, g)? {
            return Ok(false);
        }
    }
    Ok(true)
}

struct Node {
    state: WorldState,
    parent: usize,
    step: Vec<Action>,
    depth: usize,
}

/// Shortest goal-achieving plan within `max_steps`, or `None` if there is
/// none. Successors are expanded in a fixed order, so the result is
/// deterministic.
pub fn reference_solve(
    scene: &Scene,
    goals: &[Goal],
    max_steps: usize,
    limits: SolverLimits,
) -> Result<Option<Plan>, SolveError> {
    if scene.robots.len() > limits.max_robots {
        return Err(SolveError::TooLarge(format!("{} robots", scene.robots.len())));
    }
    if scene.objects.len() > limits.max_objects {
        return Err(SolveError::TooLarge(format!("{} objects", scene.objects.len())));
    }
    if max_steps > limits.max_steps {
        return Err(SolveError::TooLarge(format!("{max_steps} steps")));
    }
    let initial = WorldState::initial(scene);
    if all_met(&initial, goals)? {
        return Ok(Some(Plan::default()));
    }
    let robots = scene.robot_ids();
    let mut seen: HashSet<StateKey> = HashSet::new();
    seen.insert(initial.key());
    let mut nodes = vec![Node { state: initial, parent: usize::MAX, step: Vec::new(), depth: 0 }];
    let mut cursor = 0;
    while cursor < nodes.len() {
        if nodes[cursor].depth >= max_steps {
            break;
        }
        let state = nodes[cursor].state.clone();
        let depth = nodes[cursor].depth;
        // Each robot either idles (None) or takes one of its options.
        let options: Vec<Vec<Option<Action>>> = robots
            .iter()
            .map(|r| robot_options(scene, &state, r).into_iter().map(Some).chain([None]).collect())
            .collect();
        let mut choice = vec![0usize; robots.len()];
        loop {
            let joint: Vec<Action> = choice.iter().zip(&options).filter_map(|(&i, opts)| opts[i].clone()).collect();
            if !joint.is_empty() {
                if let Ok(next) = apply_step(&state, &joint, scene) {
                    if seen.insert(next.key()) {
                        if seen.len() > limits.max_states {
                            return Err(SolveError::SearchBudgetExceeded(limits.max_states));
                        }
                        let done = all_met(&next, goals)?;
                        nodes.push(Node { state: next, parent: cursor, step: joint, depth: depth + 1 });
                        if done {
                            let plan = trace_back(&nodes, nodes.len() - 1);
                            return Ok(Some(drop_redundant(scene, goals, plan)));
                        }
                    }
                }
            }
            if !advance(&mut choice, &options) {
                break;
            }
        }
        cursor += 1;
    }
    Ok(None)
}

/// Steps the per-robot choice vector like an odometer, last robot fastest.
fn advance(choice: &mut [usize], options: &[Vec<Option<Action>>]) -> bool {
    for k in (0..choice.len()).rev() {
        choice[k] += 1;
        if choice[k] < options[k].len() {
            return true;
        }
        choice[k] = 0;
    }
    false
}

/// Removes actions from multi-action steps while the plan still succeeds,
/// so that deleting any remaining action breaks it.
fn drop_redundant(scene: &Scene, goals: &[Goal], plan: Plan) -> Plan {
    let mut steps: Vec<Vec<Action>> = plan.steps.iter().map(|s| s.actions.values().cloned().collect()).collect();
    'outer: loop {
        for i in 0..steps.len() {
            if steps[i].len() < 2 {
                continue;
            }
            for j in 0..steps[i].len() {
                let mut trial = steps.clone();
                trial[i].remove(j);
                if run_plan(scene, goals, &Plan::from_steps(trial.clone())).success() {
                    steps = trial;
                    continue 'outer;
                }
            }
        }
        return Plan::from_steps(steps);
    }
}

fn trace_back(nodes: &[Node], mut idx: usize) -> Plan {
    let mut steps = Vec::new();
    while nodes[idx].parent != usize::MAX {
        steps.push(nodes[idx].step.clone());
        idx = nodes[idx].parent;
    }
    steps.reverse();
    Plan::from_steps(steps)
}
