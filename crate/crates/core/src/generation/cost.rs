use serde::{Deserialize, Serialize};

use crate::exercise::{ExerciseSample, SampleId};

/// One line of the generation request log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestLogEntry {
    pub sample_id: SampleId,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub wall_seconds: f64,
    /// Whether the counts came from the endpoint (`false`: approximate).
    pub reported_usage: bool,
}

/// Anything that contributes to request cost accounting.
pub trait CostEvent {
    fn input_tokens(&self) -> u64;
    fn output_tokens(&self) -> u64;
    fn wall_seconds(&self) -> f64 {
        0.0
    }
}

impl CostEvent for RequestLogEntry {
    fn input_tokens(&self) -> u64 {
        self.input_tokens
    }
    fn output_tokens(&self) -> u64 {
        self.output_tokens
    }
    fn wall_seconds(&self) -> f64 {
        self.wall_seconds
    }
}

/// Samples carry token counts but no timing.
impl CostEvent for ExerciseSample {
    fn input_tokens(&self) -> u64 {
        self.token_counts.input
    }
    fn output_tokens(&self) -> u64 {
        self.token_counts.output
    }
}

impl<T: CostEvent + ?Sized> CostEvent for &T {
    fn input_tokens(&self) -> u64 {
        (**self).input_tokens()
    }
    fn output_tokens(&self) -> u64 {
        (**self).output_tokens()
    }
    fn wall_seconds(&self) -> f64 {
        (**self).wall_seconds()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub requests: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub wall_seconds: f64,
}

impl CostSummary {
    pub fn add(&mut self, event: &impl CostEvent) {
        self.requests += 1;
        self.input_tokens += event.input_tokens();
        self.output_tokens += event.output_tokens();
        self.wall_seconds += event.wall_seconds();
    }

    pub fn merge(mut self, other: CostSummary) -> CostSummary {
        self.requests += other.requests;
        self.input_tokens += other.input_tokens;
        self.output_tokens += other.output_tokens;
        self.wall_seconds += other.wall_seconds;
        self
    }

    pub fn mean_seconds_per_request(&self) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            self.wall_seconds / self.requests as f64
        }
    }
}

pub fn record_cost<E: CostEvent>(events: impl IntoIterator<Item = E>) -> CostSummary {
    let mut summary = CostSummary::default();
    for e in events {
        summary.add(&e);
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exercise::{ControlVariables, Domain, Inclusion, SkillLevel, TokenCounts};

    fn sample(input: u64, output: u64) -> ExerciseSample {
        let cv = ControlVariables::new("t", "p", SkillLevel::Beginner, Inclusion::Excluded, Inclusion::Excluded)
            .unwrap();
        ExerciseSample::new(
            Domain::python_general(),
            cv,
            "p",
            "c",
            "",
            TokenCounts { input, output },
        )
    }

    #[test]
    fn empty_stream_is_zero() {
        assert_eq!(record_cost(Vec::<RequestLogEntry>::new()), CostSummary::default());
    }

    #[test]
    fn sums_are_additive() {
        let s = [sample(150, 500), sample(150, 500)];
        let c = record_cost(s.iter());
        assert_eq!((c.requests, c.input_tokens, c.output_tokens), (2, 300, 1000));
        assert_eq!(c.wall_seconds, 0.0);
    }

    #[test]
    fn merge_matches_single_pass() {
        let log: Vec<RequestLogEntry> = (0..10)
            .map(|i| RequestLogEntry {
                sample_id: SampleId::new(format!("{i}")),
                input_tokens: i,
                output_tokens: 2 * i,
                wall_seconds: 0.5,
                reported_usage: true,
            })
            .collect();
        let whole = record_cost(log.iter());
        let halves = record_cost(log[..4].iter()).merge(record_cost(log[4..].iter()));
        assert_eq!(whole, halves);
        assert_eq!(whole.mean_seconds_per_request(), 0.5);
    }
}
