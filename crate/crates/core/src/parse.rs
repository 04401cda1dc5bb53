//! Turns raw model responses into typed answers for each level.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::domain::{Action, Plan, PlanStep, Primitive, RobotKind};
use crate::literal::{self, SyntaxError, Value};
use crate::metrics::{Point, Trajectory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("malformed answer: {0}")]
    Shape(String),
    #[error("unknown robot `{0}`")]
    UnknownRobot(String),
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("step numbering broken: expected step {expected}, found {found}")]
    BadStepNumbering { expected: u32, found: String },
    #[error("`{primitive}` takes {expected} argument(s), got {actual}")]
    BadArity { primitive: Primitive, expected: usize, actual: usize },
    #[error("robot `{robot}` has more than one action in step {step}")]
    DuplicateRobot { step: u32, robot: String },
    #[error("non-numeric point coordinate `{0}`")]
    NonNumericPoint(String),
    #[error("empty trajectory")]
    EmptyTrajectory,
}

fn shape(msg: impl Into<String>) -> ParseError {
    ParseError::Shape(msg.into())
}

/// Think and answer blocks of a response.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaggedResponse {
    pub think: String,
    pub answer: String,
    pub well_formed: bool,
}

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const ANSWER_OPEN: &str = "<answer>";
const ANSWER_CLOSE: &str = "</answer>";
const TAGS: [&str; 4] = [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE];

fn is_ws(s: &str) -> bool {
    s.chars().all(char::is_whitespace)
}

fn has_tag(s: &str) -> bool {
    TAGS.iter().any(|t| s.contains(t))
}

/// Splits `<think>..</think><answer>..</answer>`. Only whitespace may appear
/// outside the two blocks, and neither block may contain another tag; any
/// other shape is reported as malformed with empty fields.
pub fn extract_tags(text: &str) -> TaggedResponse {
    strict_tags(text).unwrap_or_default()
}

fn strict_tags(text: &str) -> Option<TaggedResponse> {
    let t_open = text.find(THINK_OPEN)?;
    if !is_ws(&text[..t_open]) {
        return None;
    }
    let after_open = &text[t_open + THINK_OPEN.len()..];
    let t_close = after_open.find(THINK_CLOSE)?;
    let think = &after_open[..t_close];
    let rest = &after_open[t_close + THINK_CLOSE.len()..];
    let a_open = rest.find(ANSWER_OPEN)?;
    if !is_ws(&rest[..a_open]) {
        return None;
    }
    let after_answer = &rest[a_open + ANSWER_OPEN.len()..];
    let a_close = after_answer.find(ANSWER_CLOSE)?;
    let answer = &after_answer[..a_close];
    let tail = &after_answer[a_close + ANSWER_CLOSE.len()..];
    if !is_ws(tail) || has_tag(think) || has_tag(answer) {
        return None;
    }
    Some(TaggedResponse { think: think.to_string(), answer: answer.to_string(), well_formed: true })
}

/// The text to grade for accuracy: the answer block of a well-formed
/// response, otherwise the first `<answer>..</answer>` span, otherwise the
/// whole response.
pub fn answer_text(response: &str) -> &str {
    if let Some(start) = response.find(ANSWER_OPEN) {
        let body = &response[start + ANSWER_OPEN.len()..];
        if let Some(end) = body.find(ANSWER_CLOSE) {
            return &body[..end];
        }
    }
    response
}

fn expect_str<'a>(v: &'a Value, what: &str) -> Result<&'a str, ParseError> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(shape(format!("{what} must be a string, got {}", other.kind()))),
    }
}

/// Parses a list of robot kind names such as `['fetch', "unitree_h1"]`.
pub fn parse_agent_set(answer: &str) -> Result<BTreeSet<RobotKind>, ParseError> {
    let Value::List(items) = literal::parse(answer.trim())? else {
        return Err(shape("agent selection must be a list"));
    };
    items
        .iter()
        .map(|item| {
            let name = expect_str(item, "robot name")?;
            name.parse().map_err(|_| ParseError::UnknownRobot(name.to_string()))
        })
        .collect()
}

fn dict_get<'a>(entries: &'a [(String, Value)], key: &str) -> Option<&'a Value> {
    entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
}

fn step_number(v: &Value) -> Option<u32> {
    match v {
        Value::Number(n) if n.fract() == 0.0 && *n >= 0.0 && *n <= u32::MAX as f64 => Some(*n as u32),
        _ => None,
    }
}

fn parse_action(robot: &str, step: u32, v: &Value) -> Result<Action, ParseError> {
    let Value::List(parts) = v else {
        return Err(shape(format!("action for `{robot}` must be a list")));
    };
    let Some((head, args)) = parts.split_first() else {
        return Err(shape(format!("action for `{robot}` is empty")));
    };
    let name = expect_str(head, "action type")?;
    let primitive: Primitive = name.parse().map_err(|_| ParseError::UnknownPrimitive(name.to_string()))?;
    if args.len() != primitive.arity() {
        return Err(ParseError::BadArity { primitive, expected: primitive.arity(), actual: args.len() });
    }
    let target = expect_str(&args[0], "action target")?.to_string();
    let extra = args.get(1).map(|v| expect_str(v, "push target robot")).transpose()?.map(str::to_string);
    Ok(Action { robot: robot.to_string(), timestep: step, primitive, target, extra })
}

/// Parses the step-indexed plan format:
/// `[{"step": 1, "actions": {'R1': ['Move', 'banana']}}, ...]`.
pub fn parse_plan(answer: &str) -> Result<Plan, ParseError> {
    let Value::List(items) = literal::parse(answer.trim())? else {
        return Err(shape("plan must be a list of steps"));
    };
    let mut steps = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let expected = i as u32 + 1;
        let Value::Dict(entries) = item else {
            return Err(shape(format!("step {expected} must be a dict")));
        };
        let raw_step = dict_get(entries, "step").ok_or_else(|| shape(format!("step {expected} lacks a `step` field")))?;
        match step_number(raw_step) {
            Some(n) if n == expected => {}
            _ => return Err(ParseError::BadStepNumbering { expected, found: raw_step.to_string() }),
        }
        let Some(Value::Dict(actions)) = dict_get(entries, "actions") else {
            return Err(shape(format!("step {expected} lacks an `actions` dict")));
        };
        let mut map = BTreeMap::new();
        for (robot, v) in actions {
            let action = parse_action(robot, expected, v)?;
            if map.insert(robot.clone(), action).is_some() {
                return Err(ParseError::DuplicateRobot { step: expected, robot: robot.clone() });
            }
        }
        steps.push(PlanStep { step: expected, actions: map });
    }
    Ok(Plan { steps })
}

fn coordinate(v: &Value) -> Result<f64, ParseError> {
    match v {
        Value::Number(n) if n.is_finite() => Ok(*n),
        other => Err(ParseError::NonNumericPoint(other.to_string())),
    }
}

/// Parses `[[[x, y], ...], [[x, y], ...]]`; the first group is the ego agent.
pub fn parse_trajectories(answer: &str) -> Result<Vec<Trajectory>, ParseError> {
    let Value::List(groups) = literal::parse(answer.trim())? else {
        return Err(shape("trajectories must be a nested list"));
    };
    if groups.is_empty() {
        return Err(ParseError::EmptyTrajectory);
    }
    groups
        .iter()
        .map(|group| {
            let Value::List(points) = group else {
                return Err(shape("each trajectory must be a list of points"));
            };
            if points.is_empty() {
                return Err(ParseError::EmptyTrajectory);
            }
            let points = points
                .iter()
                .map(|p| match p {
                    Value::List(xy) if xy.len() == 2 => Ok(Point::new(coordinate(&xy[0])?, coordinate(&xy[1])?)),
                    other => Err(shape(format!("point must be [x, y], got {other}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Trajectory::new(points).map_err(|_| ParseError::EmptyTrajectory)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_well_formed() {
        let t = extract_tags("<think>a</think><answer>b</answer>");
        assert_eq!(t, TaggedResponse { think: "a".into(), answer: "b".into(), well_formed: true });
        let t = extract_tags("  <think>\n x \n</think>\n<answer> [1] </answer>\n");
        assert!(t.well_formed);
        assert_eq!(t.think, "\n x \n");
        assert_eq!(t.answer, " [1] ");
    }

    #[test]
    fn tags_malformed() {
        for text in [
            "<answer>b</answer>",
            "<think>a</think><answer>b",
            "<think>a</think><answer>y</answer> trailing prose",
            "prefix <think>a</think><answer>b</answer>",
            "<answer>b</answer><think>a</think>",
            "<think>a</think>junk<answer>b</answer>",
            "<think>a<think>b</think><answer>c</answer>",
            "<think>a</think><answer>b</answer><answer>c</answer>",
            "<THINK>a</THINK><ANSWER>b</ANSWER>",
            "",
        ] {
            let t = extract_tags(text);
            assert!(!t.well_formed, "{text:?}");
            assert!(t.think.is_empty() && t.answer.is_empty());
        }
    }

    #[test]
    fn answer_text_fallbacks() {
        assert_eq!(answer_text("<think>a</think><answer>b</answer>"), "b");
        assert_eq!(answer_text("junk <answer>b</answer> more"), "b");
        assert_eq!(answer_text("[1, 2]"), "[1, 2]");
    }

    #[test]
    fn agent_sets() {
        let set = parse_agent_set("['fetch', 'unitree_h1']").unwrap();
        assert_eq!(set, [RobotKind::Fetch, RobotKind::UnitreeH1].into_iter().collect());
        assert!(parse_agent_set("[]").unwrap().is_empty());
        assert_eq!(parse_agent_set("['robocop']"), Err(ParseError::UnknownRobot("robocop".into())));
        assert!(matches!(parse_agent_set("fetch, panda"), Err(ParseError::Syntax(_))));
        assert!(matches!(parse_agent_set("{'a': 1}"), Err(ParseError::Shape(_))));
        assert_eq!(parse_agent_set("['panda', \"panda\"]").unwrap().len(), 1);
    }

    const SAMPLE_PLAN: &str = r#"
  [
    {
      "step": 1,
      "actions": {'R1': ['Move', 'banana'], 'R2': ['Move', 'apple']}
    },
    {
      "step": 2,
      "actions": {'R1': ['Reach', 'banana'], 'R2': ['Reach', 'apple']}
    }
    # trailing comment
  ]
"#;

    #[test]
    fn sample_plan_parses() {
        let plan = parse_plan(SAMPLE_PLAN).unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(plan.steps[0].actions.len(), 2);
        let r2 = &plan.steps[1].actions["R2"];
        assert_eq!((r2.primitive, r2.target.as_str(), r2.timestep), (Primitive::Reach, "apple", 2));
    }

    #[test]
    fn plan_numbering_errors() {
        let gap = r#"[{"step": 1, "actions": {}}, {"step": 3, "actions": {}}]"#;
        assert!(matches!(parse_plan(gap), Err(ParseError::BadStepNumbering { expected: 2, .. })));
        let zero = r#"[{"step": 0, "actions": {}}]"#;
        assert!(matches!(parse_plan(zero), Err(ParseError::BadStepNumbering { expected: 1, .. })));
        let dup = r#"[{"step": 1, "actions": {}}, {"step": 1, "actions": {}}]"#;
        assert!(matches!(parse_plan(dup), Err(ParseError::BadStepNumbering { expected: 2, .. })));
        let frac = r#"[{"step": 1.5, "actions": {}}]"#;
        assert!(matches!(parse_plan(frac), Err(ParseError::BadStepNumbering { .. })));
    }

    #[test]
    fn plan_arity_errors() {
        let push = r#"[{"step": 1, "actions": {'R1': ['Push', 'box']}}]"#;
        assert_eq!(
            parse_plan(push),
            Err(ParseError::BadArity { primitive: Primitive::Push, expected: 2, actual: 1 })
        );
        let extra = r#"[{"step": 1, "actions": {'R1': ['Move', 'a', 'b']}}]"#;
        assert!(matches!(parse_plan(extra), Err(ParseError::BadArity { primitive: Primitive::Move, .. })));
        let ok = parse_plan(r#"[{"step": 1, "actions": {'R1': ['Push', 'box', 'R2']}}]"#).unwrap();
        assert_eq!(ok.steps[0].actions["R1"].extra.as_deref(), Some("R2"));
    }

    #[test]
    fn plan_duplicate_robot_and_unknown_primitive() {
        let dup = r#"[{"step": 1, "actions": {'R1': ['Move', 'a'], "R1": ['Move', 'b']}}]"#;
        assert_eq!(parse_plan(dup), Err(ParseError::DuplicateRobot { step: 1, robot: "R1".into() }));
        let bad = r#"[{"step": 1, "actions": {'R1': ['Teleport', 'a']}}]"#;
        assert_eq!(parse_plan(bad), Err(ParseError::UnknownPrimitive("Teleport".into())));
        assert!(parse_plan("").is_err());
        assert_eq!(parse_plan("[]").unwrap().len(), 0);
    }

    #[test]
    fn trajectories() {
        let set = parse_trajectories("[[[0,0],[1,1],[2,2],[3,3],[4,4]],[[5,5],[6,6],[7,7],[8,8],[9,9]]]").unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.iter().all(|t| t.len() == 5));
        assert_eq!(set[1].points()[0], Point::new(5.0, 5.0));
        let one = parse_trajectories("[[[0,0]]]").unwrap();
        assert_eq!((one.len(), one[0].len()), (1, 1));
        assert!(matches!(parse_trajectories("[[[0,'a']]]"), Err(ParseError::NonNumericPoint(_))));
        assert_eq!(parse_trajectories("[[]]"), Err(ParseError::EmptyTrajectory));
        assert_eq!(parse_trajectories("[]"), Err(ParseError::EmptyTrajectory));
        assert!(matches!(parse_trajectories("[[[1,2,3]]]"), Err(ParseError::Shape(_))));
        assert!(matches!(parse_trajectories("[[[1e999, 0]]]"), Err(ParseError::NonNumericPoint(_))));
    }
}
