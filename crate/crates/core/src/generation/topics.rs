use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::teacher::TeacherEndpointConfig;
use crate::endpoint::{ChatEndpoint, ChatRequest, EndpointError};
use crate::exercise::Domain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Seeded,
    Expanded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicEntry {
    pub topic: String,
    pub provenance: Provenance,
}

/// Topics of one domain, unique after trimming and case-folding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicCatalog {
    pub domain: Domain,
    topics: Vec<TopicEntry>,
}

impl TopicCatalog {
    pub fn new(domain: Domain) -> Self {
        TopicCatalog {
            domain,
            topics: Vec::new(),
        }
    }

    /// Catalog of seed topics only.
    pub fn seeded<S: AsRef<str>>(domain: Domain, seeds: &[S]) -> Self {
        let mut c = Self::new(domain);
        for s in seeds {
            c.insert(s.as_ref(), Provenance::Seeded);
        }
        c
    }

    /// Adds a topic unless an equivalent one is present. Returns whether it
    /// was added.
    pub fn insert(&mut self, topic: &str, provenance: Provenance) -> bool {
        let topic = topic.trim();
        if topic.is_empty() {
            return false;
        }
        let key = fold(topic);
        if self.topics.iter().any(|t| fold(&t.topic) == key) {
            return false;
        }
        self.topics.push(TopicEntry {
            topic: topic.to_string(),
            provenance,
        });
        true
    }

    pub fn entries(&self) -> &[TopicEntry] {
        &self.topics
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.topics.iter().map(|t| t.topic.as_str())
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Re-checks uniqueness, e.g. after loading a hand-edited file.
    pub fn is_deduplicated(&self) -> bool {
        let mut seen = HashSet::new();
        self.topics.iter().all(|t| seen.insert(fold(&t.topic)))
    }
}

fn fold(s: &str) -> String {
    s.trim().to_lowercase()
}

#[derive(Debug, thiserror::Error)]
pub enum ExpandError {
    #[error("at least one seed topic is required")]
    NoSeeds,
    #[error("topic expansion of `{seed}` failed: {source}")]
    Endpoint {
        seed: String,
        /// Everything collected before the failure, seeds included.
        partial: TopicCatalog,
        #[source]
        source: EndpointError,
    },
}

/// Our own wording; asks for one subtopic per line.
pub fn topic_expansion_prompt(domain: &Domain, seed: &str, per_topic: usize) -> String {
    format!(
        "List {per_topic} distinct subtopics of the programming topic \"{seed}\" \
         for Python exercises in the {domain} domain. \
         Answer with one subtopic per line and nothing else."
    )
}

/// Strips list markers (`-`, `*`, `1.`, `2)`) from a response line.
fn clean_line(line: &str) -> &str {
    let line = line.trim();
    let line = line
        .strip_prefix("- ")
        .or_else(|| line.strip_prefix("* "))
        .unwrap_or(line);
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return r.trim();
        }
    }
    line.trim()
}

/// Seeds plus up to `per_topic` teacher-suggested subtopics per seed.
pub fn expand_topics<S: AsRef<str>>(
    domain: Domain,
    seed_topics: &[S],
    teacher: &dyn ChatEndpoint,
    config: &TeacherEndpointConfig,
    per_topic: usize,
) -> Result<TopicCatalog, ExpandError> {
    if seed_topics.is_empty() {
        return Err(ExpandError::NoSeeds);
    }
    let mut catalog = TopicCatalog::seeded(domain.clone(), seed_topics);
    for seed in seed_topics {
        let seed = seed.as_ref();
        let request = ChatRequest {
            system: config.system_prompt.clone(),
            user: topic_expansion_prompt(&domain, seed, per_topic),
            temperature: config.temperature,
            max_tokens: config.max_output_tokens,
        };
        let response = match teacher.chat(&request) {
            Ok(r) => r,
            Err(source) => {
                return Err(ExpandError::Endpoint {
                    seed: seed.to_string(),
                    partial: catalog,
                    source,
                })
            }
        };
        response
            .content
            .lines()
            .map(clean_line)
            .filter(|l| !l.is_empty())
            .take(per_topic)
            .for_each(|t| {
                catalog.insert(t, Provenance::Expanded);
            });
    }
    Ok(catalog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endpoint::ChatResponse;

    fn cfg() -> TeacherEndpointConfig {
        TeacherEndpointConfig::new("mock:unused", "teacher")
    }

    #[test]
    fn expands_seed_with_teacher_lines() {
        let teacher = |_: &ChatRequest| Ok(ChatResponse::text("inheritance\npolymorphism"));
        let c = expand_topics(Domain::python_general(), &["classes"], &teacher, &cfg(), 5).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.entries()[0].provenance, Provenance::Seeded);
        assert_eq!(
            c.topics().collect::<Vec<_>>(),
            vec!["classes", "inheritance", "polymorphism"]
        );
        assert!(c.entries()[1..].iter().all(|e| e.provenance == Provenance::Expanded));
    }

    #[test]
    fn duplicates_of_seed_are_dropped() {
        let teacher = |_: &ChatRequest| Ok(ChatResponse::text("x"));
        let c = expand_topics(Domain::python_general(), &["x"], &teacher, &cfg(), 5).unwrap();
        assert_eq!(c.len(), 1);
        let teacher = |_: &ChatRequest| Ok(ChatResponse::text("  X \n- x\n1. Loops\nloops"));
        let c = expand_topics(Domain::python_general(), &["x"], &teacher, &cfg(), 5).unwrap();
        assert_eq!(c.topics().collect::<Vec<_>>(), vec!["x", "Loops"]);
        assert!(c.is_deduplicated());
    }

    #[test]
    fn empty_seeds_are_rejected() {
        let teacher = |_: &ChatRequest| Ok(ChatResponse::text(""));
        let seeds: [&str; 0] = [];
        assert!(matches!(
            expand_topics(Domain::python_general(), &seeds, &teacher, &cfg(), 5),
            Err(ExpandError::NoSeeds)
        ));
    }

    #[test]
    fn per_topic_caps_the_subtopics() {
        let teacher = |_: &ChatRequest| Ok(ChatResponse::text("a\nb\nc\nd"));
        let c = expand_topics(Domain::python_general(), &["s"], &teacher, &cfg(), 2).unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn failure_carries_partial_catalog() {
        let teacher = |r: &ChatRequest| {
            if r.user.contains("\"second\"") {
                Err(EndpointError::Transport("down".into()))
            } else {
                Ok(ChatResponse::text("sub"))
            }
        };
        match expand_topics(Domain::python_general(), &["first", "second"], &teacher, &cfg(), 3) {
            Err(ExpandError::Endpoint { seed, partial, .. }) => {
                assert_eq!(seed, "second");
                assert_eq!(partial.topics().collect::<Vec<_>>(), vec!["first", "second", "sub"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
