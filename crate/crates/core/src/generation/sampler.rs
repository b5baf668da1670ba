use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::topics::TopicCatalog;
use crate::exercise::{ControlVariables, Inclusion, SkillLevel};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SamplerError {
    #[error("topic catalog is empty")]
    NoTopics,
    #[error("profession list is empty")]
    NoProfessions,
    #[error("sampled control variables are invalid: {0}")]
    Invalid(#[from] crate::exercise::ExerciseError),
}

/// Draws every field uniformly from its pool. The same seed always yields the
/// same control variables.
pub fn sample_control_vars<S: AsRef<str>>(
    catalog: &TopicCatalog,
    professions: &[S],
    rng_seed: u64,
) -> Result<ControlVariables, SamplerError> {
    ControlSampler::new(catalog, professions)?.draw(&mut ChaCha8Rng::seed_from_u64(rng_seed))
}

/// Reusable sampler over fixed pools.
pub struct ControlSampler<'a> {
    topics: Vec<&'a str>,
    professions: Vec<&'a str>,
}

impl<'a> ControlSampler<'a> {
    pub fn new<S: AsRef<str>>(
        catalog: &'a TopicCatalog,
        professions: &'a [S],
    ) -> Result<Self, SamplerError> {
        if catalog.is_empty() {
            return Err(SamplerError::NoTopics);
        }
        if professions.is_empty() {
            return Err(SamplerError::NoProfessions);
        }
        Ok(ControlSampler {
            topics: catalog.topics().collect(),
            professions: professions.iter().map(AsRef::as_ref).collect(),
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ControlVariables, SamplerError> {
        let topic = *self.topics.choose(rng).expect("non-empty");
        let profession = *self.professions.choose(rng).expect("non-empty");
        let skill = *SkillLevel::ALL.choose(rng).expect("non-empty");
        let interaction = Inclusion::from(rng.random_bool(0.5));
        let handling = Inclusion::from(rng.random_bool(0.5));
        Ok(ControlVariables::new(
            topic,
            profession,
            skill,
            interaction,
            handling,
        )?)
    }

    /// `count` draws from one stream seeded with `seed`.
    pub fn draw_many(&self, seed: u64, count: usize) -> Result<Vec<ControlVariables>, SamplerError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.draw(&mut rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exercise::Domain;

    fn catalog(topics: &[&str]) -> TopicCatalog {
        TopicCatalog::seeded(Domain::python_general(), topics)
    }

    #[test]
    fn same_seed_same_draw() {
        let c = catalog(&["a", "b", "c"]);
        let p = ["x", "y"];
        assert_eq!(
            sample_control_vars(&c, &p, 42).unwrap(),
            sample_control_vars(&c, &p, 42).unwrap()
        );
    }

    #[test]
    fn topic_frequencies_are_balanced_over_two_topics() {
        let c = catalog(&["first", "second"]);
        let p = ["p"];
        let n = 10_000;
        let first = (0..n)
            .filter(|&seed| sample_control_vars(&c, &p, seed).unwrap().topic == "first")
            .count();
        let freq = first as f64 / n as f64;
        assert!((0.45..=0.55).contains(&freq), "{freq}");
    }

    #[test]
    fn single_element_pools_are_always_chosen() {
        let c = catalog(&["only"]);
        for seed in 0..50 {
            let cv = sample_control_vars(&c, &["solo"], seed).unwrap();
            assert_eq!((cv.topic.as_str(), cv.profession.as_str()), ("only", "solo"));
        }
    }

    #[test]
    fn empty_pools_are_errors() {
        let empty: [&str; 0] = [];
        assert_eq!(
            sample_control_vars(&catalog(&[]), &["p"], 1).unwrap_err(),
            SamplerError::NoTopics
        );
        assert_eq!(
            sample_control_vars(&catalog(&["t"]), &empty, 1).unwrap_err(),
            SamplerError::NoProfessions
        );
    }

    #[test]
    fn every_enumerated_value_shows_up() {
        let c = catalog(&["t"]);
        let draws = ControlSampler::new(&c, &["p"]).unwrap().draw_many(3, 500).unwrap();
        for level in SkillLevel::ALL {
            assert!(draws.iter().any(|d| d.skill_level == level));
        }
        for inc in Inclusion::ALL {
            assert!(draws.iter().any(|d| d.user_interaction == inc));
            assert!(draws.iter().any(|d| d.error_handling == inc));
        }
    }
}
