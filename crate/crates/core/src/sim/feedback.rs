use super::{ErrorCode, ExecReport};

/// Feedback text for the refinement loop; empty iff the plan succeeded.
///
/// Templates:
/// * failed action: `Step {s}: {robot} cannot {Primitive} '{target}' ...`
///   with a code-specific reason (e.g. `before Reach.` for
///   `PRECONDITION_REACH`).
/// * unmet goal: `Goal not met: {goal}.`, one sentence per goal, space
///   separated.
pub fn make_feedback(report: &ExecReport) -> String {
    if let Some(f) = &report.failed_at {
        let (s, r, p, t) = (f.step, &f.robot, f.action.primitive, &f.action.target);
        return match f.code {
            ErrorCode::UnknownRobot => format!("Step {s}: robot {r} does not exist in the scene."),
            ErrorCode::UnknownObject => format!("Step {s}: {r} cannot {p} '{t}': no such object or location."),
            ErrorCode::PrimitiveUnsupported => format!("Step {s}: {r} does not support {p}."),
            ErrorCode::NotColocated => format!("Step {s}: {r} cannot {p} '{t}': not at the same location."),
            ErrorCode::NoFreeEffector => format!("Step {s}: {r} cannot {p} '{t}': no free end effector."),
            ErrorCode::NotHolding => format!("Step {s}: {r} cannot {p} at '{t}': not holding any object."),
            ErrorCode::PreconditionReach => format!("Step {s}: {r} cannot {p} '{t}' before Reach."),
            ErrorCode::NotOpenable => format!("Step {s}: {r} cannot {p} '{t}': it is not openable."),
            ErrorCode::BadTargetRobot => {
                let to = f.action.extra.as_deref().unwrap_or("");
                format!("Step {s}: {r} cannot Push '{t}' to '{to}': no such robot.")
            }
        };
    }
    report
        .goal_results
        .iter()
        .flatten()
        .filter(|(_, ok)| !ok)
        .map(|(g, _)| format!("Goal not met: {g}."))
        .collect::<Vec<_>>()
        .join(" ")
}
