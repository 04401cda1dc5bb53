//! Seeded synthetic benchmark: small scenes whose goals come from a random
//! walk of feasible actions and whose ground truth comes from the
//! breadth-first solver.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{Action, GroundTruth, Goal, Plan, RobotKind, RobotSpec, Sample, Scene, SceneObject};
use crate::metrics::{Point, Trajectory, TrajectorySet};
use crate::sim::{apply_step, reference_solve, robot_options, run_plan, Place, SolverLimits, WorldState};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("n_scenes must be at least 1")]
    NoScenes,
    #[error("no solvable scene after {0} attempts")]
    RetriesExhausted(usize),
}

const LOCATIONS: [&str; 8] = ["counter", "table", "sink", "shelf", "stove", "desk", "doorway", "pantry"];
const ITEMS: [&str; 8] = ["apple", "banana", "cup", "bowl", "sponge", "box", "book", "mug"];
const CONTAINERS: [&str; 3] = ["drawer", "fridge", "microwave"];

pub const IMAGE_WIDTH: u32 = 640;
pub const IMAGE_HEIGHT: u32 = 480;

/// Search settings used for every generated scene.
pub const MAX_PLAN_STEPS: usize = 6;
const MAX_ATTEMPTS: usize = 200;

fn limits() -> SolverLimits {
    SolverLimits { max_states: 50_000, ..SolverLimits::default() }
}

/// A solved planning instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub scene: Scene,
    pub goals: Vec<Goal>,
    pub plan: Plan,
}

fn random_scene(rng: &mut impl Rng) -> Scene {
    let n_loc = rng.gen_range(2..=3);
    let locations: Vec<&str> = LOCATIONS.choose_multiple(rng, n_loc).copied().collect();
    let n_robots = rng.gen_range(1..=2);
    let robots = (0..n_robots)
        .map(|i| {
            let kind = *RobotKind::ALL.choose(rng).expect("non-empty");
            RobotSpec::new(format!("R{}", i + 1), kind, *locations.choose(rng).expect("non-empty"))
        })
        .collect();
    let n_items = rng.gen_range(1..=2);
    let mut objects: Vec<SceneObject> = ITEMS
        .choose_multiple(rng, n_items)
        .map(|id| SceneObject::new(*id, *locations.choose(rng).expect("non-empty")))
        .collect();
    if rng.gen_bool(0.3) {
        let id = *CONTAINERS.choose(rng).expect("non-empty");
        objects.push(SceneObject::openable(id, *locations.choose(rng).expect("non-empty"), false));
    }
    Scene {
        locations: locations.iter().map(|s| s.to_string()).collect(),
        robots,
        objects,
        instruction: String::new(),
    }
}

/// Goals that hold in `end` but not in `start`.
fn changed_predicates(start: &WorldState, end: &WorldState) -> Vec<Goal> {
    let mut out = Vec::new();
    for (obj, place) in &end.object_location {
        if start.object_location.get(obj) == Some(place) {
            continue;
        }
        match place {
            Place::At(loc) => out.push(Goal::ObjectAt { object: obj.clone(), location: loc.clone() }),
            Place::CarriedBy(r) => out.push(Goal::Holding { robot: r.clone(), object: obj.clone() }),
        }
    }
    for (obj, open) in &end.open_state {
        if start.open_state.get(obj) != Some(open) {
            out.push(Goal::IsOpen { object: obj.clone(), open: *open });
        }
    }
    for (_, obj) in &end.interactions {
        let g = Goal::Interacted { object: obj.clone() };
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

fn random_goals(scene: &Scene, rng: &mut impl Rng) -> Vec<Goal> {
    let start = WorldState::initial(scene);
    let mut state = start.clone();
    let walk = rng.gen_range(3..=6);
    for _ in 0..walk {
        let robot = &scene.robots.choose(rng).expect("non-empty").id;
        let options = robot_options(scene, &state, robot);
        let feasible: Vec<_> = options.iter().filter_map(|a| apply_step(&state, [a], scene).ok()).collect();
        if let Some(next) = feasible.choose(rng) {
            state = next.clone();
        }
    }
    let mut goals = changed_predicates(&start, &state);
    goals.shuffle(rng);
    goals.truncate(rng.gen_range(1..=2));
    goals.sort();
    goals
}

fn describe(goals: &[Goal]) -> String {
    let parts: Vec<String> = goals.iter().map(ToString::to_string).collect();
    format!("Complete the task: {}.", parts.join("; "))
}

/// Draws scenes until one has a goal set the solver can reach.
pub fn random_episode(rng: &mut impl Rng) -> Result<Episode, SynthError> {
    for _ in 0..MAX_ATTEMPTS {
        let mut scene = random_scene(rng);
        let goals = random_goals(&scene, rng);
        if goals.is_empty() {
            continue;
        }
        scene.instruction = describe(&goals);
        if let Ok(Some(plan)) = reference_solve(&scene, &goals, MAX_PLAN_STEPS, limits()) {
            if !plan.is_empty() {
                return Ok(Episode { scene, goals, plan });
            }
        }
    }
    Err(SynthError::RetriesExhausted(MAX_ATTEMPTS))
}

/// The plan with one extra single-action step appended that keeps it
/// successful, if such an action exists.
pub fn lengthen_plan(scene: &Scene, goals: &[Goal], plan: &Plan) -> Option<Plan> {
    let report = run_plan(scene, goals, plan);
    if !report.success() {
        return None;
    }
    let end = report.final_state;
    let mut steps: Vec<Vec<Action>> = plan.steps.iter().map(|s| s.actions.values().cloned().collect()).collect();
    for robot in scene.robot_ids() {
        for action in robot_options(scene, &end, robot) {
            steps.push(vec![action]);
            let longer = Plan::from_steps(steps.clone());
            if run_plan(scene, goals, &longer).success() {
                return Some(longer);
            }
            steps.pop();
        }
    }
    None
}

fn keypoint_path(rng: &mut impl Rng, n: usize) -> Trajectory {
    let w = f64::from(IMAGE_WIDTH);
    let h = f64::from(IMAGE_HEIGHT);
    let a = Point::new(rng.gen_range(0.0..w), rng.gen_range(0.0..h));
    let b = Point::new(rng.gen_range(0.0..w), rng.gen_range(0.0..h));
    let mid = Point::new(
        ((a.x + b.x) / 2.0 + rng.gen_range(-60.0..60.0)).clamp(0.0, w),
        ((a.y + b.y) / 2.0 + rng.gen_range(-60.0..60.0)).clamp(0.0, h),
    );
    let points = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let (p, q, s) = if t <= 0.5 { (a, mid, t * 2.0) } else { (mid, b, t * 2.0 - 1.0) };
            Point::new((p.x + (q.x - p.x) * s).round(), (p.y + (q.y - p.y) * s).round())
        })
        .collect();
    Trajectory::new(points).expect("finite points")
}

/// `n_scenes` scenes, each yielding one sample per level.
pub fn gen_synthetic(n_scenes: usize, seed: u64) -> Result<Vec<Sample>, SynthError> {
    if n_scenes == 0 {
        return Err(SynthError::NoScenes);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_scenes * 3);
    for i in 0..n_scenes {
        let Episode { scene, goals, plan } = random_episode(&mut rng)?;
        let used: std::collections::BTreeSet<RobotKind> = plan
            .robots_used()
            .into_iter()
            .filter_map(|id| scene.robot(id).map(|r| r.kind))
            .collect();
        let trajectories = vec![keypoint_path(&mut rng, 5), keypoint_path(&mut rng, 5)];
        let set = TrajectorySet::new(trajectories, IMAGE_WIDTH, IMAGE_HEIGHT).expect("valid image");
        let n_gt = plan.len();
        out.push(Sample {
            task_id: format!("s{i:04}-l1"),
            scene: scene.clone(),
            goals: goals.clone(),
            truth: GroundTruth::Agents(used),
        });
        out.push(Sample {
            task_id: format!("s{i:04}-l2"),
            scene: scene.clone(),
            goals: goals.clone(),
            truth: GroundTruth::Plan { plan, n_gt },
        });
        out.push(Sample { task_id: format!("s{i:04}-l3"), scene, goals, truth: GroundTruth::Trajectories(set) });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewards::planning_reward;

    #[test]
    fn deterministic() {
        assert_eq!(gen_synthetic(5, 42).unwrap(), gen_synthetic(5, 42).unwrap());
        assert_ne!(gen_synthetic(2, 1).unwrap(), gen_synthetic(2, 2).unwrap());
    }

    #[test]
    fn zero_scenes_is_an_error() {
        assert_eq!(gen_synthetic(0, 1), Err(SynthError::NoScenes));
    }

    #[test]
    fn l2_ground_truth_earns_full_planning_reward() {
        for s in gen_synthetic(20, 7).unwrap() {
            if let GroundTruth::Plan { plan, n_gt } = &s.truth {
                assert_eq!(planning_reward(&s.scene, &s.goals, plan, *n_gt, true), 1.0, "{}", s.task_id);
            }
        }
    }

    #[test]
    fn lengthened_plans_succeed_with_one_more_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let ep = random_episode(&mut rng).unwrap();
            if let Some(longer) = lengthen_plan(&ep.scene, &ep.goals, &ep.plan) {
                assert_eq!(longer.len(), ep.plan.len() + 1);
                assert!(run_plan(&ep.scene, &ep.goals, &longer).success());
            }
        }
    }

    #[test]
    fn scenes_validate() {
        for s in gen_synthetic(20, 3).unwrap() {
            assert!(crate::domain::validate_scene(&s.scene).is_empty());
            assert!(crate::domain::validate_goals(&s.scene, &s.goals).is_empty());
        }
    }
}
