//! Static vocabulary: robot kinds, primitives, capability tables, scenes,
//! goals and benchmark samples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::TrajectorySet;

pub type RobotId = String;
pub type ObjectId = String;
pub type LocationId = String;

/// The six robot embodiments of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotKind {
    Stompy,
    Fetch,
    UnitreeH1,
    Panda,
    AnymalC,
    UnitreeGo2,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown robot kind `{0}`")]
pub struct UnknownRobotKind(pub String);

impl RobotKind {
    pub const ALL: [RobotKind; 6] = [
        RobotKind::Stompy,
        RobotKind::Fetch,
        RobotKind::UnitreeH1,
        RobotKind::Panda,
        RobotKind::AnymalC,
        RobotKind::UnitreeGo2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RobotKind::Stompy => "stompy",
            RobotKind::Fetch => "fetch",
            RobotKind::UnitreeH1 => "unitree_h1",
            RobotKind::Panda => "panda",
            RobotKind::AnymalC => "anymal_c",
            RobotKind::UnitreeGo2 => "unitree_go2",
        }
    }

    /// Primitives this kind may execute, in the order of the published
    /// capability table.
    pub fn capabilities(self) -> &'static [Primitive] {
        use Primitive::*;
        match self {
            RobotKind::Panda => &[Reach, Grasp, Place, Open, Close, Interact],
            RobotKind::Fetch | RobotKind::UnitreeH1 | RobotKind::Stompy => {
                &[Move, Reach, Grasp, Place, Open, Close, Interact]
            }
            RobotKind::UnitreeGo2 | RobotKind::AnymalC => &[Move, Push, Interact],
        }
    }

    pub fn supports(self, primitive: Primitive) -> bool {
        self.capabilities().contains(&primitive)
    }

    pub fn end_effectors(self) -> usize {
        match self {
            RobotKind::Panda | RobotKind::Fetch => 1,
            RobotKind::UnitreeH1 | RobotKind::Stompy => 2,
            RobotKind::UnitreeGo2 | RobotKind::AnymalC => 0,
        }
    }

    /// Only kinds that can `Move` change location; panda is bolted down.
    pub fn is_mobile(self) -> bool {
        self.supports(Primitive::Move)
    }

    pub fn description(self) -> &'static str {
        match self {
            RobotKind::Stompy => {
                "A bipedal robot designed for dynamic walking and stomping tasks, featuring articulated arms."
            }
            RobotKind::Fetch => {
                "A wheeled robot with a flexible arm for object manipulation, designed for mobility and dexterity."
            }
            RobotKind::UnitreeH1 => {
                "A humanoid robot with arms and legs designed for human-like movements and tasks."
            }
            RobotKind::Panda => {
                "A fixed robotic arm designed for precise and delicate manipulation tasks."
            }
            RobotKind::AnymalC => {
                "A quadrupedal robot built for navigating rough terrains and performing complex tasks with four articulated legs."
            }
            RobotKind::UnitreeGo2 => {
                "A compact quadrupedal robot optimized for agile movement and stability with four legs for efficient locomotion."
            }
        }
    }
}

impl fmt::Display for RobotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RobotKind {
    type Err = UnknownRobotKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RobotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownRobotKind(s.to_string()))
    }
}

pub fn supports_primitive(kind: RobotKind, primitive: Primitive) -> bool {
    kind.supports(primitive)
}

pub fn end_effector_count(kind: RobotKind) -> usize {
    kind.end_effectors()
}

/// Atomic robot operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Primitive {
    Move,
    Open,
    Close,
    Reach,
    Grasp,
    Place,
    Push,
    Interact,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown primitive `{0}`")]
pub struct UnknownPrimitive(pub String);

impl Primitive {
    pub const ALL: [Primitive; 8] = [
        Primitive::Move,
        Primitive::Open,
        Primitive::Close,
        Primitive::Reach,
        Primitive::Grasp,
        Primitive::Place,
        Primitive::Push,
        Primitive::Interact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Move => "Move",
            Primitive::Open => "Open",
            Primitive::Close => "Close",
            Primitive::Reach => "Reach",
            Primitive::Grasp => "Grasp",
            Primitive::Place => "Place",
            Primitive::Push => "Push",
            Primitive::Interact => "Interact",
        }
    }

    /// Number of arguments after the primitive name.
    pub fn arity(self) -> usize {
        match self {
            Primitive::Push => 2,
            _ => 1,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Primitive::Move => "Command ['Move', 'object']: Robot R moves to the specified object.",
            Primitive::Open => {
                "Command ['Open', 'object']: Open the object held by the Robot R's end effector."
            }
            Primitive::Close => {
                "Command ['Close', 'object']: Close the object held by the Robot R's end effector."
            }
            Primitive::Reach => "Command ['Reach', 'object']: Robot R reaches the specified object.",
            Primitive::Grasp => {
                "Command ['Grasp', 'object']: Robot R's end effector performs a grasping operation on a specified object."
            }
            Primitive::Place => {
                "Command ['Place', 'object']: Place the object held by the Robot R's end effector at a specified location (the release point, not the object itself)."
            }
            Primitive::Push => "Command ['Push', 'object', 'R1']: Robot R pushes the object to robot R1.",
            Primitive::Interact => {
                "Command ['Interact', 'object']: A general interaction operation, flexible for representing interactions with any asset."
            }
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Primitive {
    type Err = UnknownPrimitive;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Primitive::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPrimitive(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub id: RobotId,
    pub kind: RobotKind,
    pub start_location: LocationId,
}

impl RobotSpec {
    pub fn new(id: impl Into<String>, kind: RobotKind, start: impl Into<String>) -> Self {
        RobotSpec { id: id.into(), kind, start_location: start.into() }
    }

    pub fn mobile(&self) -> bool {
        self.kind.is_mobile()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: ObjectId,
    pub location: LocationId,
    #[serde(default)]
    pub openable: bool,
    #[serde(default)]
    pub open: bool,
}

impl SceneObject {
    pub fn new(id: impl Into<String>, location: impl Into<String>) -> Self {
        SceneObject { id: id.into(), location: location.into(), openable: false, open: false }
    }

    pub fn openable(id: impl Into<String>, location: impl Into<String>, open: bool) -> Self {
        SceneObject { id: id.into(), location: location.into(), openable: true, open }
    }
}

/// One task instance: named zones, the robots in them and the objects they
/// can act on.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub locations: BTreeSet<LocationId>,
    pub robots: Vec<RobotSpec>,
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub instruction: String,
}

impl Scene {
    pub fn robot(&self, id: &str) -> Option<&RobotSpec> {
        self.robots.iter().find(|r| r.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn has_location(&self, id: &str) -> bool {
        self.locations.contains(id)
    }

    /// Robot ids in ascending order, the within-step execution order.
    pub fn robot_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.robots.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        ids
    }

    pub fn kinds(&self) -> BTreeSet<RobotKind> {
        self.robots.iter().map(|r| r.kind).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SceneViolation {
    EmptyRobots,
    EmptyLocations,
    DuplicateRobotId(RobotId),
    DuplicateObjectId(ObjectId),
    /// An object id that is also a location or robot id; `Move` targets
    /// would be ambiguous.
    AmbiguousName(String),
    UnknownLocation(LocationId),
    OpenStateOnNonOpenable(ObjectId),
    UnknownRobot(RobotId),
    UnknownObject(ObjectId),
}

impl fmt::Display for SceneViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneViolation::EmptyRobots => write!(f, "robots: scene has no robots"),
            SceneViolation::EmptyLocations => write!(f, "locations: scene has no locations"),
            SceneViolation::DuplicateRobotId(id) => write!(f, "robots: duplicate robot id `{id}`"),
            SceneViolation::DuplicateObjectId(id) => {
                write!(f, "objects: duplicate object id `{id}`")
            }
            SceneViolation::AmbiguousName(id) => {
                write!(f, "objects: `{id}` is also a location or robot id")
            }
            SceneViolation::UnknownLocation(id) => write!(f, "location: undeclared location `{id}`"),
            SceneViolation::OpenStateOnNonOpenable(id) => {
                write!(f, "objects: `{id}` is open but not openable")
            }
            SceneViolation::UnknownRobot(id) => write!(f, "goals: unknown robot `{id}`"),
            SceneViolation::UnknownObject(id) => write!(f, "goals: unknown object `{id}`"),
        }
    }
}

/// Checks the structural invariants of a scene. The result is sorted and
/// deduplicated, so it does not depend on the order of the input collections.
pub fn validate_scene(scene: &Scene) -> Vec<SceneViolation> {
    let mut out = BTreeSet::new();
    if scene.robots.is_empty() {
        out.insert(SceneViolation::EmptyRobots);
    }
    if scene.locations.is_empty() {
        out.insert(SceneViolation::EmptyLocations);
    }
    let mut robot_ids = BTreeSet::new();
    for robot in &scene.robots {
        if !robot_ids.insert(robot.id.as_str()) {
            out.insert(SceneViolation::DuplicateRobotId(robot.id.clone()));
        }
        if !scene.has_location(&robot.start_location) {
            out.insert(SceneViolation::UnknownLocation(robot.start_location.clone()));
        }
    }
    let mut object_ids = BTreeSet::new();
    for object in &scene.objects {
        if !object_ids.insert(object.id.as_str()) {
            out.insert(SceneViolation::DuplicateObjectId(object.id.clone()));
        }
        if scene.has_location(&object.id) || robot_ids.contains(object.id.as_str()) {
            out.insert(SceneViolation::AmbiguousName(object.id.clone()));
        }
        if !scene.has_location(&object.location) {
            out.insert(SceneViolation::UnknownLocation(object.location.clone()));
        }
        if object.open && !object.openable {
            out.insert(SceneViolation::OpenStateOnNonOpenable(object.id.clone()));
        }
    }
    out.into_iter().collect()
}

/// Checks that every id a goal mentions exists in the scene.
pub fn validate_goals(scene: &Scene, goals: &[Goal]) -> Vec<SceneViolation> {
    let mut out = BTreeSet::new();
    let object = |id: &String, out: &mut BTreeSet<SceneViolation>| {
        if scene.object(id).is_none() {
            out.insert(SceneViolation::UnknownObject(id.clone()));
        }
    };
    for goal in goals {
        match goal {
            Goal::ObjectAt { object: o, location } => {
                object(o, &mut out);
                if !scene.has_location(location) {
                    out.insert(SceneViolation::UnknownLocation(location.clone()));
                }
            }
            Goal::IsOpen { object: o, .. } | Goal::Interacted { object: o } => object(o, &mut out),
            Goal::Holding { robot, object: o } => {
                if scene.robot(robot).is_none() {
                    out.insert(SceneViolation::UnknownRobot(robot.clone()));
                }
                object(o, &mut out);
            }
        }
    }
    out.into_iter().collect()
}

/// Goal predicates evaluated on the final simulator state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Goal {
    ObjectAt { object: ObjectId, location: LocationId },
    IsOpen { object: ObjectId, open: bool },
    Interacted { object: ObjectId },
    Holding { robot: RobotId, object: ObjectId },
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::ObjectAt { object, location } => write!(f, "{object} must end at {location}"),
            Goal::IsOpen { object, open: true } => write!(f, "{object} must be open"),
            Goal::IsOpen { object, open: false } => write!(f, "{object} must be closed"),
            Goal::Interacted { object } => write!(f, "{object} must be interacted with"),
            Goal::Holding { robot, object } => write!(f, "{robot} must be holding {object}"),
        }
    }
}

/// One robot's primitive call at one timestep: `(robot, timestep, primitive,
/// destination)`, plus the target robot for `Push`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Action {
    pub robot: RobotId,
    pub timestep: u32,
    pub primitive: Primitive,
    pub target: String,
    pub extra: Option<String>,
}

impl Action {
    pub fn new(robot: impl Into<String>, timestep: u32, primitive: Primitive, target: impl Into<String>) -> Self {
        Action {
            robot: robot.into(),
            timestep,
            primitive,
            target: target.into(),
            extra: None,
        }
    }

    pub fn push(robot: impl Into<String>, timestep: u32, object: impl Into<String>, to: impl Into<String>) -> Self {
        Action {
            robot: robot.into(),
            timestep,
            primitive: Primitive::Push,
            target: object.into(),
            extra: Some(to.into()),
        }
    }

    pub fn arity_ok(&self) -> bool {
        self.extra.is_some() == (self.primitive.arity() == 2)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} '{}'", self.robot, self.primitive, self.target)?;
        if let Some(extra) = &self.extra {
            write!(f, " -> '{extra}'")?;
        }
        Ok(())
    }
}

/// One timestep of a plan; at most one action per robot, keyed by robot id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlanStep {
    pub step: u32,
    pub actions: BTreeMap<RobotId, Action>,
}

/// An ordered, step-indexed multi-robot plan. Its length is the number of
/// timesteps.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    /// Builds a plan from per-step action lists, numbering steps from 1 and
    /// stamping each action with its timestep.
    pub fn from_steps(steps: Vec<Vec<Action>>) -> Self {
        let steps = steps
            .into_iter()
            .enumerate()
            .map(|(i, actions)| {
                let step = i as u32 + 1;
                let actions = actions
                    .into_iter()
                    .map(|mut a| {
                        a.timestep = step;
                        (a.robot.clone(), a)
                    })
                    .collect();
                PlanStep { step, actions }
            })
            .collect();
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = &Action> {
        self.steps.iter().flat_map(|s| s.actions.values())
    }

    pub fn robots_used(&self) -> BTreeSet<&str> {
        self.actions().map(|a| a.robot.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Activation = 1,
    Planning = 2,
    Perception = 3,
}

impl Level {
    pub fn from_number(n: u8) -> Option<Level> {
        match n {
            1 => Some(Level::Activation),
            2 => Some(Level::Planning),
            3 => Some(Level::Perception),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.number())
    }
}

/// Level-specific ground truth; exactly one is attached to each sample.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Agents(BTreeSet<RobotKind>),
    Plan { plan: Plan, n_gt: usize },
    Trajectories(TrajectorySet),
}

impl GroundTruth {
    pub fn level(&self) -> Level {
        match self {
            GroundTruth::Agents(_) => Level::Activation,
            GroundTruth::Plan { .. } => Level::Planning,
            GroundTruth::Trajectories(_) => Level::Perception,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub task_id: String,
    pub scene: Scene,
    pub goals: Vec<Goal>,
    pub truth: GroundTruth,
}

impl Sample {
    pub fn level(&self) -> Level {
        self.truth.level()
    }

    pub fn n_gt(&self) -> Option<usize> {
        match &self.truth {
            GroundTruth::Plan { n_gt, .. } => Some(*n_gt),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kitchen() -> Scene {
        Scene {
            locations: ["counter", "start", "plate"].iter().map(|s| s.to_string()).collect(),
            robots: vec![
                RobotSpec::new("R1", RobotKind::Fetch, "start"),
                RobotSpec::new("R2", RobotKind::Panda, "counter"),
            ],
            objects: vec![SceneObject::new("apple", "counter")],
            instruction: "Put the apple on the plate.".into(),
        }
    }

    #[test]
    fn capability_examples() {
        assert!(supports_primitive(RobotKind::AnymalC, Primitive::Push));
        assert!(!supports_primitive(RobotKind::Panda, Primitive::Move));
        assert!(!supports_primitive(RobotKind::UnitreeGo2, Primitive::Grasp));
        assert_eq!(end_effector_count(RobotKind::UnitreeH1), 2);
        assert_eq!(end_effector_count(RobotKind::UnitreeGo2), 0);
        assert_eq!(end_effector_count(RobotKind::Panda), 1);
    }

    #[test]
    fn only_panda_is_immobile() {
        for kind in RobotKind::ALL {
            assert_eq!(kind.is_mobile(), kind != RobotKind::Panda, "{kind}");
        }
    }

    #[test]
    fn names_round_trip() {
        for kind in RobotKind::ALL {
            assert_eq!(kind.name().parse::<RobotKind>().unwrap(), kind);
        }
        for p in Primitive::ALL {
            assert_eq!(p.name().parse::<Primitive>().unwrap(), p);
        }
        assert!("robocop".parse::<RobotKind>().is_err());
        assert!("move".parse::<Primitive>().is_err());
    }

    #[test]
    fn well_formed_scene_has_no_violations() {
        assert!(validate_scene(&kitchen()).is_empty());
    }

    #[test]
    fn duplicate_robot_id() {
        let mut scene = kitchen();
        scene.robots[1].id = "R1".into();
        assert_eq!(validate_scene(&scene), vec![SceneViolation::DuplicateRobotId("R1".into())]);
    }

    #[test]
    fn undeclared_object_location() {
        let mut scene = kitchen();
        scene.objects[0].location = "void".into();
        assert_eq!(validate_scene(&scene), vec![SceneViolation::UnknownLocation("void".into())]);
    }

    #[test]
    fn validation_ignores_collection_order() {
        let mut scene = kitchen();
        scene.objects.push(SceneObject::new("apple", "void"));
        scene.robots.push(RobotSpec::new("R1", RobotKind::Stompy, "nowhere"));
        let first = validate_scene(&scene);
        scene.objects.reverse();
        scene.robots.reverse();
        assert_eq!(validate_scene(&scene), first);
        assert_eq!(first.len(), 4);
    }

    #[test]
    fn goal_references_are_checked() {
        let scene = kitchen();
        let goals = vec![
            Goal::ObjectAt { object: "apple".into(), location: "plate".into() },
            Goal::Holding { robot: "R9".into(), object: "pear".into() },
        ];
        assert_eq!(
            validate_goals(&scene, &goals),
            vec![
                SceneViolation::UnknownRobot("R9".into()),
                SceneViolation::UnknownObject("pear".into()),
            ]
        );
    }

    #[test]
    fn push_has_arity_two() {
        assert_eq!(Primitive::Push.arity(), 2);
        assert!(Primitive::ALL.iter().filter(|p| **p != Primitive::Push).all(|p| p.arity() == 1));
        assert!(Action::push("R1", 1, "box", "R2").arity_ok());
        assert!(!Action::new("R1", 1, Primitive::Push, "box").arity_ok());
    }
}
