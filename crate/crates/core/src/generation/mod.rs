//! Exercise generation: prompt rendering, topic expansion, control-variable
//! sampling, teacher calls and response parsing.

mod cost;
mod parse;
mod sampler;
mod teacher;
mod template;
mod topics;

pub use cost::{record_cost, CostEvent, CostSummary, RequestLogEntry};
pub use parse::{parse_response, ParsedResponse};
pub use sampler::{sample_control_vars, ControlSampler, SamplerError};
pub use teacher::{
    generate_batch, generate_sample, BatchOutcome, GenerationError, TeacherEndpointConfig,
};
pub use template::{render_prompt, EXERCISE_PROMPT_TEMPLATE};
pub use topics::{expand_topics, topic_expansion_prompt, ExpandError, Provenance, TopicCatalog, TopicEntry};
