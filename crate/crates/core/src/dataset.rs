//! JSONL datasets and predictions, and the canonical plan text format.
//!
//! One sample per line:
//!
//! ```text
//! {"task_id": "s0-l2", "level": 2, "scene": {...}, "goals": [...],
//!  "gt_plan": [{"step": 1, "actions": {"R1": ["Move", "counter"]}}], "n_gt": 1}
//! ```
//!
//! Level 1 carries `gt_agents` (list of kind names), level 3 carries
//! `gt_trajectories` (nested point lists) and `image_size` (`[w, h]`).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::domain::{validate_goals, validate_scene, GroundTruth, Goal, Level, Plan, RobotKind, Sample, Scene};
use crate::metrics::{Trajectory, TrajectorySet};
use crate::parse::parse_plan;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: field `{field}`: {detail}")]
    Schema { line: usize, field: String, detail: String },
    #[error("line {line}: duplicate task_id `{task_id}` (first seen on line {first_line})")]
    DuplicateTaskId { task_id: String, first_line: usize, line: usize },
}

impl DatasetError {
    fn schema(line: usize, field: &str, detail: impl Into<String>) -> Self {
        DatasetError::Schema { line, field: field.to_string(), detail: detail.into() }
    }
}

/// Canonical plan JSON: `[{"step": n, "actions": {robot: [prim, target(, extra)]}}]`
/// with robots in ascending id order.
pub fn plan_to_value(plan: &Plan) -> Value {
    Value::Array(
        plan.steps
            .iter()
            .map(|s| {
                let actions: Map<String, Value> = s
                    .actions
                    .iter()
                    .map(|(robot, a)| {
                        let mut parts = vec![json!(a.primitive.name()), json!(a.target)];
                        parts.extend(a.extra.iter().map(|e| json!(e)));
                        (robot.clone(), Value::Array(parts))
                    })
                    .collect();
                json!({"step": s.step, "actions": actions})
            })
            .collect(),
    )
}

pub fn plan_to_string(plan: &Plan) -> String {
    plan_to_value(plan).to_string()
}

impl serde::Serialize for Plan {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        plan_to_value(self).serialize(serializer)
    }
}

fn read_to_string(path: &Path) -> Result<String, DatasetError> {
    std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })
}

fn field<T: DeserializeOwned>(obj: &Map<String, Value>, line: usize, name: &str) -> Result<T, DatasetError> {
    let v = obj.get(name).ok_or_else(|| DatasetError::schema(line, name, "missing"))?;
    serde_json::from_value(v.clone()).map_err(|e| DatasetError::schema(line, name, e.to_string()))
}

const TRUTH_FIELDS: [(&str, Level); 4] = [
    ("gt_agents", Level::Activation),
    ("gt_plan", Level::Planning),
    ("n_gt", Level::Planning),
    ("gt_trajectories", Level::Perception),
];

fn sample_from_value(v: &Value, line: usize) -> Result<Sample, DatasetError> {
    let obj = v.as_object().ok_or_else(|| DatasetError::schema(line, "<root>", "expected a JSON object"))?;
    let task_id: String = field(obj, line, "task_id")?;
    let level_num: u8 = field(obj, line, "level")?;
    let level = Level::from_number(level_num)
        .ok_or_else(|| DatasetError::schema(line, "level", format!("must be 1, 2 or 3, got {level_num}")))?;
    let scene: Scene = field(obj, line, "scene")?;
    if let Some(v) = validate_scene(&scene).first() {
        return Err(DatasetError::schema(line, "scene", v.to_string()));
    }
    let goals: Vec<Goal> = field(obj, line, "goals")?;
    if let Some(v) = validate_goals(&scene, &goals).first() {
        return Err(DatasetError::schema(line, "goals", v.to_string()));
    }
    for (name, owner) in TRUTH_FIELDS {
        if owner != level && obj.contains_key(name) {
            return Err(DatasetError::schema(line, name, format!("not allowed on a level {level_num} sample")));
        }
    }
    let truth = match level {
        Level::Activation => {
            let names: Vec<String> = field(obj, line, "gt_agents")?;
            let kinds = names
                .iter()
                .map(|n| n.parse::<RobotKind>())
                .collect::<Result<BTreeSet<_>, _>>()
                .map_err(|e| DatasetError::schema(line, "gt_agents", e.to_string()))?;
            GroundTruth::Agents(kinds)
        }
        Level::Planning => {
            let raw = obj.get("gt_plan").ok_or_else(|| DatasetError::schema(line, "gt_plan", "missing"))?;
            let plan = parse_plan(&raw.to_string()).map_err(|e| DatasetError::schema(line, "gt_plan", e.to_string()))?;
            let n_gt: usize = field(obj, line, "n_gt")?;
            GroundTruth::Plan { plan, n_gt }
        }
        Level::Perception => {
            let trajectories: Vec<Trajectory> = field(obj, line, "gt_trajectories")?;
            let [w, h]: [u32; 2] = field(obj, line, "image_size")?;
            let set = TrajectorySet::new(trajectories, w, h)
                .map_err(|e| DatasetError::schema(line, "gt_trajectories", e.to_string()))?;
            GroundTruth::Trajectories(set)
        }
    };
    Ok(Sample { task_id, scene, goals, truth })
}

pub fn sample_to_value(sample: &Sample) -> Value {
    let mut obj = Map::new();
    obj.insert("task_id".into(), json!(sample.task_id));
    obj.insert("level".into(), json!(sample.level().number()));
    obj.insert("scene".into(), serde_json::to_value(&sample.scene).expect("scene serializes"));
    obj.insert("goals".into(), serde_json::to_value(&sample.goals).expect("goals serialize"));
    match &sample.truth {
        GroundTruth::Agents(kinds) => {
            obj.insert("gt_agents".into(), json!(kinds.iter().map(|k| k.name()).collect::<Vec<_>>()));
        }
        GroundTruth::Plan { plan, n_gt } => {
            obj.insert("gt_plan".into(), plan_to_value(plan));
            obj.insert("n_gt".into(), json!(n_gt));
        }
        GroundTruth::Trajectories(set) => {
            obj.insert("gt_trajectories".into(), serde_json::to_value(&set.trajectories).expect("points serialize"));
            obj.insert("image_size".into(), json!([set.image_width, set.image_height]));
        }
    }
    Value::Object(obj)
}

/// Parses a whole JSONL dataset. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_dataset(text: &str) -> Result<Vec<Sample>, DatasetError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(raw).map_err(|e| DatasetError::schema(line, "<json>", e.to_string()))?;
        let sample = sample_from_value(&v, line)?;
        if let Some(&first_line) = seen.get(&sample.task_id) {
            return Err(DatasetError::DuplicateTaskId { task_id: sample.task_id, first_line, line });
        }
        seen.insert(sample.task_id.clone(), line);
        out.push(sample);
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Sample>, DatasetError> {
    parse_dataset(&read_to_string(path.as_ref())?)
}

pub fn dataset_to_jsonl(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&sample_to_value(s).to_string());
        out.push('\n');
    }
    out
}

/// Predictions file: one `{"task_id": ..., "response": ...}` per line.
pub fn parse_predictions(text: &str) -> Result<BTreeMap<String, String>, DatasetError> {
    let mut out = BTreeMap::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(raw).map_err(|e| DatasetError::schema(line, "<json>", e.to_string()))?;
        let obj = v.as_object().ok_or_else(|| DatasetError::schema(line, "<root>", "expected a JSON object"))?;
        let task_id: String = field(obj, line, "task_id")?;
        let response: String = field(obj, line, "response")?;
        if let Some(&first_line) = seen.get(&task_id) {
            return Err(DatasetError::DuplicateTaskId { task_id, first_line, line });
        }
        seen.insert(task_id.clone(), line);
        out.insert(task_id, response);
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>, DatasetError> {
    parse_predictions(&read_to_string(path.as_ref())?)
}

pub fn predictions_to_jsonl<'a>(preds: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = String::new();
    for (task_id, response) in preds {
        out.push_str(&json!({"task_id": task_id, "response": response}).to_string());
        out.push('\n');
    }
    out
}

/// The answer text a perfect model would give for a sample: the agent list,
/// the canonical plan or the trajectory list.
pub fn ground_truth_answer(sample: &Sample) -> String {
    match &sample.truth {
        GroundTruth::Agents(kinds) => json!(kinds.iter().map(|k| k.name()).collect::<Vec<_>>()).to_string(),
        GroundTruth::Plan { plan, .. } => plan_to_string(plan),
        GroundTruth::Trajectories(set) => serde_json::to_string(&set.trajectories).expect("points serialize"),
    }
}
