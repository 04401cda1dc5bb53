#![allow(dead_code)]

use coplan::domain::{Action, Goal, Primitive, Scene};
use coplan::metrics::{Point, Trajectory};
use coplan::sim::{apply_step, goals_satisfied, WorldState};
use rand::Rng;

/// Every syntactically possible action in the scene, feasible or not.
pub fn action_universe(scene: &Scene) -> Vec<Action> {
    let mut targets: Vec<String> = scene.locations.iter().cloned().collect();
    targets.extend(scene.objects.iter().map(|o| o.id.clone()));
    let mut out = Vec::new();
    for r in &scene.robots {
        for p in Primitive::ALL {
            if p == Primitive::Push {
                for o in &scene.objects {
                    for to in &scene.robots {
                        out.push(Action::push(r.id.clone(), 0, o.id.clone(), to.id.clone()));
                    }
                }
            } else {
                for t in &targets {
                    out.push(Action::new(r.id.clone(), 0, p, t.clone()));
                }
            }
        }
    }
    out
}

fn goals_hold(state: &WorldState, goals: &[Goal]) -> bool {
    goals_satisfied(state, goals).map(|v| v.iter().all(|(_, ok)| *ok)).unwrap_or(false)
}

/// Joint steps reachable from `state`: each robot in id order idles or
/// takes any universe action, applied in sequence within the step.
fn successors(scene: &Scene, universe: &[Action], state: &WorldState) -> Vec<WorldState> {
    let robots = scene.robot_ids();
    let mut out = Vec::new();
    fn rec(
        scene: &Scene,
        universe: &[Action],
        robots: &[&str],
        k: usize,
        joint: &mut Vec<Action>,
        start: &WorldState,
        out: &mut Vec<WorldState>,
    ) {
        if k == robots.len() {
            if !joint.is_empty() {
                if let Ok(next) = apply_step(start, joint.iter(), scene) {
                    out.push(next);
                }
            }
            return;
        }
        rec(scene, universe, robots, k + 1, joint, start, out);
        for a in universe.iter().filter(|a| a.robot == robots[k]) {
            joint.push(a.clone());
            // Prefix must already be executable.
            if apply_step(start, joint.iter(), scene).is_ok() {
                rec(scene, universe, robots, k + 1, joint, start, out);
            }
            joint.pop();
        }
    }
    rec(scene, universe, &robots, 0, &mut Vec::new(), state, &mut out);
    out
}

/// True iff some plan of at most `depth` steps reaches the goals, by
/// exhaustive depth-first enumeration without state merging.
pub fn exists_plan_within(scene: &Scene, goals: &[Goal], depth: usize) -> bool {
    let universe = action_universe(scene);
    fn dfs(scene: &Scene, goals: &[Goal], universe: &[Action], state: &WorldState, left: usize) -> bool {
        if goals_hold(state, goals) {
            return true;
        }
        left > 0 && successors(scene, universe, state).iter().any(|s| dfs(scene, goals, universe, s, left - 1))
    }
    dfs(scene, goals, &universe, &WorldState::initial(scene), depth)
}

/// Minimum over every monotone coupling of the maximum matched distance.
pub fn brute_force_frechet(a: &[Point], b: &[Point]) -> f64 {
    fn walk(a: &[Point], b: &[Point], i: usize, j: usize, worst: f64, best: &mut f64) {
        let worst = worst.max(a[i].dist(b[j]));
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(worst);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, worst, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, worst, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, worst, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

pub fn random_trajectory(rng: &mut impl Rng, max_len: usize, max_coord: f64) -> Trajectory {
    let n = rng.gen_range(1..=max_len);
    let pairs: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..=max_coord), rng.gen_range(0.0..=max_coord))).collect();
    Trajectory::from_pairs(&pairs).expect("finite")
}
