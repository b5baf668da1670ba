use crate::exercise::ControlVariables;

/// The exercise-generation prompt. Placeholders: `{profession}`, `{topic}`,
/// `{skill_level}`, `{user_interaction}`, `{error_handling}`.
pub const EXERCISE_PROMPT_TEMPLATE: &str = include_str!("exercise_prompt.txt");

/// Substitutes the control variables into [`EXERCISE_PROMPT_TEMPLATE`].
///
/// Substitution is a single left-to-right pass over the template, so braces
/// inside a topic or profession are copied verbatim and never re-expanded.
pub fn render_prompt(cv: &ControlVariables) -> String {
    let mut out = String::with_capacity(EXERCISE_PROMPT_TEMPLATE.len() + 64);
    let mut rest = EXERCISE_PROMPT_TEMPLATE;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open..];
        let close = after.find('}').map(|c| c + 1);
        let slot = close.map(|c| &after[..c]);
        let value = match slot {
            Some("{profession}") => Some(cv.profession.as_str()),
            Some("{topic}") => Some(cv.topic.as_str()),
            Some("{skill_level}") => Some(cv.skill_level.as_str()),
            Some("{user_interaction}") => Some(cv.user_interaction.as_str()),
            Some("{error_handling}") => Some(cv.error_handling.as_str()),
            _ => None,
        };
        match (value, close) {
            (Some(v), Some(c)) => {
                out.push_str(v);
                rest = &after[c..];
            }
            _ => {
                out.push('{');
                rest = &after[1..];
            }
        }
    }
    out.push_str(rest);
    out
}
