//! Prompt templates. Placeholders: `{robots}`, `{primitives}`, `{scene}`,
//! `{goals}`, `{instruction}`.

use crate::domain::{Level, Primitive, Sample};

pub const ACTIVATION_TEMPLATE: &str = "\
You are selecting robots for a household task.
Available robots:
{robots}
Scene: {scene}
Task: {instruction}
Think inside <think></think>, then give the chosen robot types inside <answer></answer> as a list, for example [\"fetch\", \"unitree_go2\"].";

pub const PLANNING_TEMPLATE: &str = "\
You are coordinating robots to complete a household task.
Robots:
{robots}
Primitives:
{primitives}
Scene: {scene}
Goals:
{goals}
Task: {instruction}
Think inside <think></think>, then give the plan inside <answer></answer> as a JSON list of {\"step\": n, \"actions\": {\"R1\": [\"Primitive\", \"target\"]}} entries. Number steps from 1, give at most one action per robot per step, and write Push as [\"Push\", \"object\", \"robot\"].";

pub const PERCEPTION_TEMPLATE: &str = "\
You are predicting robot motion in an image.
Robots:
{robots}
Scene: {scene}
Task: {instruction}
Think inside <think></think>, then give pixel keypoints inside <answer></answer> as a list of point lists, your own path first and each visible partner after it, for example [[[10, 20], [30, 40]], [[50, 60], [70, 80]]].";

pub fn default_template(level: Level) -> &'static str {
    match level {
        Level::Activation => ACTIVATION_TEMPLATE,
        Level::Planning => PLANNING_TEMPLATE,
        Level::Perception => PERCEPTION_TEMPLATE,
    }
}

fn robots_block(sample: &Sample) -> String {
    sample
        .scene
        .robots
        .iter()
        .map(|r| {
            let caps: Vec<&str> = r.kind.capabilities().iter().map(|p| p.name()).collect();
            format!("- {} ({}) at {}: {} Primitives: {}.", r.id, r.kind.name(), r.start_location, r.kind.description(), caps.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn primitives_block() -> String {
    Primitive::ALL.iter().map(|p| format!("- {}: {}", p.name(), p.description())).collect::<Vec<_>>().join("\n")
}

/// Fills the template for `sample`, using `instruction` in place of the
/// scene's own instruction.
pub fn render_prompt(template: &str, sample: &Sample, instruction: &str) -> String {
    let scene = serde_json::to_string(&sample.scene).expect("scene serializes");
    let goals = sample.goals.iter().map(|g| format!("- {g}")).collect::<Vec<_>>().join("\n");
    template
        .replace("{robots}", &robots_block(sample))
        .replace("{primitives}", &primitives_block())
        .replace("{scene}", &scene)
        .replace("{goals}", &goals)
        .replace("{instruction}", instruction)
}
