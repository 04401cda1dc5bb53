//! Action checker, world simulator and goal checker.
//!
//! Rules, per primitive (the robot must exist and its kind must list the
//! primitive):
//!
//! * `Move(dest)`: mobile kinds only. `dest` is a location or an object (its
//!   current zone). Clears the reach register.
//! * `Reach(obj)`: `obj` lies in the robot's zone or is held by it.
//! * `Grasp(obj)`: `obj` lies in the robot's zone, was reached, and an end
//!   effector is free. Pushed onto the held stack.
//! * `Place(loc)`: releases the most recently grasped object into `loc`,
//!   which must be the robot's zone (an object names its zone).
//! * `Open`/`Close(obj)`: `obj` in zone, openable and reached.
//! * `Push(obj, R)`: `obj` in zone; it moves to robot `R`'s zone.
//! * `Interact(obj)`: `obj` in zone or held; logged.
//!
//! Within one step, robots act in ascending id order.

mod feedback;
mod solver;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::domain::{Action, Goal, LocationId, ObjectId, Plan, Primitive, RobotId, Scene};

pub use feedback::make_feedback;
pub use solver::{reference_solve, SolveError, SolverLimits};
pub(crate) use solver::robot_options;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    UnknownRobot,
    UnknownObject,
    PrimitiveUnsupported,
    NotColocated,
    NoFreeEffector,
    NotHolding,
    PreconditionReach,
    NotOpenable,
    BadTargetRobot,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnknownRobot => "UNKNOWN_ROBOT",
            ErrorCode::UnknownObject => "UNKNOWN_OBJECT",
            ErrorCode::PrimitiveUnsupported => "PRIMITIVE_UNSUPPORTED",
            ErrorCode::NotColocated => "NOT_COLOCATED",
            ErrorCode::NoFreeEffector => "NO_FREE_EFFECTOR",
            ErrorCode::NotHolding => "NOT_HOLDING",
            ErrorCode::PreconditionReach => "PRECONDITION_REACH",
            ErrorCode::NotOpenable => "NOT_OPENABLE",
            ErrorCode::BadTargetRobot => "BAD_TARGET_ROBOT",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {}: {code} for {action}", action.timestep)]
pub struct ActionError {
    pub code: ErrorCode,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Place {
    At(LocationId),
    CarriedBy(RobotId),
}

/// Simulator state. Maps are ordered so states compare and hash
/// canonically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorldState {
    pub robot_location: BTreeMap<RobotId, LocationId>,
    /// Held objects per robot, most recent grasp last.
    pub held: BTreeMap<RobotId, Vec<ObjectId>>,
    pub reached: BTreeMap<RobotId, Option<ObjectId>>,
    pub object_location: BTreeMap<ObjectId, Place>,
    pub open_state: BTreeMap<ObjectId, bool>,
    pub interactions: Vec<(RobotId, ObjectId)>,
    pub clock: u32,
}

/// The parts of a [`WorldState`] that matter for future feasibility and
/// goals; the interaction log collapses to the set of touched objects.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct StateKey {
    robot_location: BTreeMap<RobotId, LocationId>,
    held: BTreeMap<RobotId, Vec<ObjectId>>,
    reached: BTreeMap<RobotId, Option<ObjectId>>,
    object_location: BTreeMap<ObjectId, Place>,
    open_state: BTreeMap<ObjectId, bool>,
    interacted: BTreeSet<ObjectId>,
}

impl WorldState {
    pub fn initial(scene: &Scene) -> Self {
        WorldState {
            robot_location: scene.robots.iter().map(|r| (r.id.clone(), r.start_location.clone())).collect(),
            held: scene.robots.iter().map(|r| (r.id.clone(), Vec::new())).collect(),
            reached: scene.robots.iter().map(|r| (r.id.clone(), None)).collect(),
            object_location: scene.objects.iter().map(|o| (o.id.clone(), Place::At(o.location.clone()))).collect(),
            open_state: scene.objects.iter().filter(|o| o.openable).map(|o| (o.id.clone(), o.open)).collect(),
            interactions: Vec::new(),
            clock: 0,
        }
    }

    pub(crate) fn key(&self) -> StateKey {
        StateKey {
            robot_location: self.robot_location.clone(),
            held: self.held.clone(),
            reached: self.reached.clone(),
            object_location: self.object_location.clone(),
            open_state: self.open_state.clone(),
            interacted: self.interactions.iter().map(|(_, o)| o.clone()).collect(),
        }
    }

    /// Zone an object currently occupies; carried objects travel with their
    /// carrier.
    pub fn object_zone(&self, object: &str) -> Option<&str> {
        match self.object_location.get(object)? {
            Place::At(loc) => Some(loc),
            Place::CarriedBy(r) => self.robot_location.get(r).map(String::as_str),
        }
    }

    pub fn is_interacted(&self, object: &str) -> bool {
        self.interactions.iter().any(|(_, o)| o == object)
    }

    /// Drops reach registers that no longer point at something in the
    /// robot's zone or hand.
    fn refresh_reach(&mut self) {
        let stale: Vec<RobotId> = self
            .reached
            .iter()
            .filter_map(|(r, obj)| {
                let obj = obj.as_ref()?;
                let ok = match self.object_location.get(obj) {
                    Some(Place::At(loc)) => self.robot_location.get(r) == Some(loc),
                    Some(Place::CarriedBy(c)) => c == r,
                    None => false,
                };
                (!ok).then(|| r.clone())
            })
            .collect();
        for r in stale {
            self.reached.insert(r, None);
        }
    }
}

/// Checks one action against `state` and returns the successor state.
/// `state` is left untouched when the action is infeasible.
pub fn check_and_apply(state: &WorldState, action: &Action, scene: &Scene) -> Result<WorldState, ActionError> {
    let fail = |code| Err(ActionError { code, action: action.clone() });
    let robot = &action.robot;
    let Some(spec) = scene.robot(robot) else {
        return fail(ErrorCode::UnknownRobot);
    };
    if !spec.kind.supports(action.primitive) {
        return fail(ErrorCode::PrimitiveUnsupported);
    }
    let here = state.robot_location[robot.as_str()].clone();
    let target = action.target.as_str();
    let object_place = state.object_location.get(target);
    let at_here = matches!(object_place, Some(Place::At(loc)) if *loc == here);
    let held_by_me = matches!(object_place, Some(Place::CarriedBy(r)) if r == robot);
    let reached_target = state.reached[robot.as_str()].as_deref() == Some(target);

    let mut next = state.clone();
    match action.primitive {
        Primitive::Move => {
            let dest = if scene.has_location(target) {
                target.to_string()
            } else if let Some(zone) = state.object_zone(target) {
                zone.to_string()
            } else {
                return fail(ErrorCode::UnknownObject);
            };
            next.robot_location.insert(robot.clone(), dest);
            next.reached.insert(robot.clone(), None);
        }
        Primitive::Reach => {
            if object_place.is_none() {
                return fail(ErrorCode::UnknownObject);
            }
            if !at_here && !held_by_me {
                return fail(ErrorCode::NotColocated);
            }
            next.reached.insert(robot.clone(), Some(target.to_string()));
        }
        Primitive::Grasp => {
            if object_place.is_none() {
                return fail(ErrorCode::UnknownObject);
            }
            if !at_here {
                return fail(ErrorCode::NotColocated);
            }
            if !reached_target {
                return fail(ErrorCode::PreconditionReach);
            }
            let hand = next.held.get_mut(robot.as_str()).expect("robot has a held stack");
            if hand.len() >= spec.kind.end_effectors() {
                return fail(ErrorCode::NoFreeEffector);
            }
            hand.push(target.to_string());
            next.object_location.insert(target.to_string(), Place::CarriedBy(robot.clone()));
        }
        Primitive::Place => {
            let dest = if scene.has_location(target) {
                target
            } else if let Some(Place::At(loc)) = object_place {
                loc.as_str()
            } else if object_place.is_some() {
                // a carried object is not a release point
                return fail(ErrorCode::NotColocated);
            } else {
                return fail(ErrorCode::UnknownObject);
            };
            if dest != here {
                return fail(ErrorCode::NotColocated);
            }
            let Some(obj) = next.held.get_mut(robot.as_str()).and_then(Vec::pop) else {
                return fail(ErrorCode::NotHolding);
            };
            next.object_location.insert(obj, Place::At(dest.to_string()));
        }
        Primitive::Open | Primitive::Close => {
            if object_place.is_none() {
                return fail(ErrorCode::UnknownObject);
            }
            if !at_here {
                return fail(ErrorCode::NotColocated);
            }
            if !state.open_state.contains_key(target) {
                return fail(ErrorCode::NotOpenable);
            }
            if !reached_target {
                return fail(ErrorCode::PreconditionReach);
            }
            next.open_state.insert(target.to_string(), action.primitive == Primitive::Open);
        }
        Primitive::Push => {
            let Some(dest) = action.extra.as_deref().and_then(|r| state.robot_location.get(r)) else {
                return fail(ErrorCode::BadTargetRobot);
            };
            if object_place.is_none() {
                return fail(ErrorCode::UnknownObject);
            }
            if !at_here {
                return fail(ErrorCode::NotColocated);
            }
            next.object_location.insert(target.to_string(), Place::At(dest.clone()));
        }
        Primitive::Interact => {
            if object_place.is_none() {
                return fail(ErrorCode::UnknownObject);
            }
            if !at_here && !held_by_me {
                return fail(ErrorCode::NotColocated);
            }
            next.interactions.push((robot.clone(), target.to_string()));
        }
    }
    next.refresh_reach();
    Ok(next)
}

/// Applies one plan step, robots in ascending id order.
pub fn apply_step<'a>(
    state: &WorldState,
    actions: impl IntoIterator<Item = &'a Action>,
    scene: &Scene,
) -> Result<WorldState, ActionError> {
    let mut next = state.clone();
    for action in actions {
        next = check_and_apply(&next, action, scene)?;
    }
    next.clock += 1;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("goal references unknown id `{0}`")]
pub struct UnknownId(pub String);

pub fn goal_satisfied(state: &WorldState, goal: &Goal) -> Result<bool, UnknownId> {
    let known = |id: &str| {
        if state.object_location.contains_key(id) {
            Ok(())
        } else {
            Err(UnknownId(id.to_string()))
        }
    };
    match goal {
        Goal::ObjectAt { object, location } => {
            known(object)?;
            Ok(state.object_location[object.as_str()] == Place::At(location.clone()))
        }
        Goal::IsOpen { object, open } => {
            known(object)?;
            Ok(state.open_state.get(object.as_str()).copied().unwrap_or(false) == *open)
        }
        Goal::Interacted { object } => {
            known(object)?;
            Ok(state.is_interacted(object))
        }
        Goal::Holding { robot, object } => {
            known(object)?;
            let held = state.held.get(robot.as_str()).ok_or_else(|| UnknownId(robot.clone()))?;
            Ok(held.contains(object))
        }
    }
}

pub fn goals_satisfied(state: &WorldState, goals: &[Goal]) -> Result<Vec<(Goal, bool)>, UnknownId> {
    goals.iter().map(|g| Ok((g.clone(), goal_satisfied(state, g)?))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub step: u32,
    pub robot: RobotId,
    pub code: ErrorCode,
    pub action: Action,
}

/// Outcome of executing a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecReport {
    pub feasible: bool,
    pub failed_at: Option<Failure>,
    pub final_state: WorldState,
    /// Present iff the plan was feasible. Goals that reference unknown ids
    /// count as unmet.
    pub goal_results: Option<Vec<(Goal, bool)>>,
    pub plan_len: usize,
}

impl ExecReport {
    pub fn goals_met(&self) -> bool {
        self.goal_results.as_ref().is_some_and(|g| g.iter().all(|(_, ok)| *ok))
    }

    /// Feasible and every goal satisfied.
    pub fn success(&self) -> bool {
        self.feasible && self.goals_met()
    }
}

pub fn run_plan(scene: &Scene, goals: &[Goal], plan: &Plan) -> ExecReport {
    let mut state = WorldState::initial(scene);
    for step in &plan.steps {
        match apply_step(&state, step.actions.values(), scene) {
            Ok(next) => state = next,
            Err(err) => {
                return ExecReport {
                    feasible: false,
                    failed_at: Some(Failure {
                        step: step.step,
                        robot: err.action.robot.clone(),
                        code: err.code,
                        action: err.action,
                    }),
                    final_state: state,
                    goal_results: None,
                    plan_len: plan.len(),
                };
            }
        }
    }
    let goal_results = goals.iter().map(|g| (g.clone(), goal_satisfied(&state, g).unwrap_or(false))).collect();
    ExecReport { feasible: true, failed_at: None, final_state: state, goal_results: Some(goal_results), plan_len: plan.len() }
}
