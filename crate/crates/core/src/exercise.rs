//! Exercise samples and the types every pipeline stage shares.
//!
//! Values here are immutable once built: stages that change a sample (for
//! example validation setting its status) produce a new value.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ExerciseError {
    #[error("control variable `{0}` must not be empty")]
    EmptyControlVariable(&'static str),
    #[error("invalid domain name `{0}`: use lowercase letters, digits and underscores")]
    InvalidDomain(String),
    #[error("sample {id} is not valid (status: {status})")]
    NotValid { id: SampleId, status: ValidationStatus },
    #[error("sample {0} has an empty problem statement or empty code")]
    EmptyContent(SampleId),
    #[error("problem statement of sample {0} contains both \"\"\" and ''' and cannot be wrapped in a docstring")]
    UnquotableProblem(SampleId),
    #[error("unknown skill level `{0}`")]
    UnknownSkillLevel(String),
}

/// Content hash of a sample, 16 lowercase hex characters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleId(String);

impl SampleId {
    pub fn from_content(problem_statement: &str, code: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(problem_statement.as_bytes());
        hasher.update([0u8]);
        hasher.update(code.as_bytes());
        Self::from_digest(&hasher.finalize())
    }

    /// Id for a response that never parsed into problem + code.
    pub fn from_raw_response(raw: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"raw\0");
        hasher.update(raw.as_bytes());
        Self::from_digest(&hasher.finalize())
    }

    fn from_digest(digest: &[u8]) -> Self {
        let mut hex = hex::encode(digest);
        hex.truncate(16);
        SampleId(hex)
    }

    pub fn new(id: impl Into<String>) -> Self {
        SampleId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A target domain, stored by name. The built-in names come with their
/// expected library set; other names are registered through
/// [`DomainRegistry`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Domain(String);

impl Domain {
    pub const PYTHON_GENERAL: &'static str = "python_general";
    pub const SCIKIT_LEARN: &'static str = "scikit_learn";
    pub const OPENCV: &'static str = "opencv";

    pub fn new(name: impl Into<String>) -> Result<Self, ExerciseError> {
        let name = name.into();
        let ok = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if ok {
            Ok(Domain(name))
        } else {
            Err(ExerciseError::InvalidDomain(name))
        }
    }

    pub fn python_general() -> Self {
        Domain(Self::PYTHON_GENERAL.to_string())
    }

    pub fn scikit_learn() -> Self {
        Domain(Self::SCIKIT_LEARN.to_string())
    }

    pub fn opencv() -> Self {
        Domain(Self::OPENCV.to_string())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Expected libraries of the built-in domains.
    pub fn builtin_libraries(&self) -> Option<&'static [&'static str]> {
        match self.0.as_str() {
            Self::PYTHON_GENERAL => Some(&[]),
            Self::SCIKIT_LEARN => Some(&["sklearn"]),
            Self::OPENCV => Some(&["cv2"]),
            _ => None,
        }
    }
}

impl TryFrom<String> for Domain {
    type Error = ExerciseError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Domain::new(value)
    }
}

impl From<Domain> for String {
    fn from(d: Domain) -> String {
        d.0
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Domain name to expected-library set.
#[derive(Clone, Debug)]
pub struct DomainRegistry {
    libraries: BTreeMap<Domain, Vec<String>>,
}

impl Default for DomainRegistry {
    fn default() -> Self {
        let mut libraries = BTreeMap::new();
        for d in [Domain::python_general(), Domain::scikit_learn(), Domain::opencv()] {
            let libs = d
                .builtin_libraries()
                .unwrap_or_default()
                .iter()
                .map(|s| s.to_string())
                .collect();
            libraries.insert(d, libs);
        }
        DomainRegistry { libraries }
    }
}

impl DomainRegistry {
    /// Adds or replaces a domain.
    pub fn register(&mut self, domain: Domain, libraries: Vec<String>) {
        self.libraries.insert(domain, libraries);
    }

    pub fn libraries(&self, domain: &Domain) -> Option<&[String]> {
        self.libraries.get(domain).map(Vec::as_slice)
    }

    pub fn domains(&self) -> impl Iterator<Item = &Domain> {
        self.libraries.keys()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillLevel {
    Beginner,
    Intermediate,
    Advanced,
}

impl SkillLevel {
    pub const ALL: [SkillLevel; 3] = [
        SkillLevel::Beginner,
        SkillLevel::Intermediate,
        SkillLevel::Advanced,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SkillLevel::Beginner => "beginner",
            SkillLevel::Intermediate => "intermediate",
            SkillLevel::Advanced => "advanced",
        }
    }
}

impl std::str::FromStr for SkillLevel {
    type Err = ExerciseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SkillLevel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| ExerciseError::UnknownSkillLevel(s.to_string()))
    }
}

/// Whether the exercise should include a feature; rendered literally as
/// `included` / `excluded` in the prompt.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inclusion {
    Included,
    Excluded,
}

impl Inclusion {
    pub const ALL: [Inclusion; 2] = [Inclusion::Included, Inclusion::Excluded];

    pub fn as_str(self) -> &'static str {
        match self {
            Inclusion::Included => "included",
            Inclusion::Excluded => "excluded",
        }
    }
}

impl From<bool> for Inclusion {
    fn from(b: bool) -> Self {
        if b {
            Inclusion::Included
        } else {
            Inclusion::Excluded
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawControlVariables")]
pub struct ControlVariables {
    pub topic: String,
    pub profession: String,
    pub skill_level: SkillLevel,
    pub user_interaction: Inclusion,
    pub error_handling: Inclusion,
}

#[derive(Deserialize)]
struct RawControlVariables {
    topic: String,
    profession: String,
    skill_level: SkillLevel,
    user_interaction: Inclusion,
    error_handling: Inclusion,
}

impl TryFrom<RawControlVariables> for ControlVariables {
    type Error = ExerciseError;

    fn try_from(r: RawControlVariables) -> Result<Self, Self::Error> {
        ControlVariables::new(
            r.topic,
            r.profession,
            r.skill_level,
            r.user_interaction,
            r.error_handling,
        )
    }
}

impl ControlVariables {
    pub fn new(
        topic: impl Into<String>,
        profession: impl Into<String>,
        skill_level: SkillLevel,
        user_interaction: Inclusion,
        error_handling: Inclusion,
    ) -> Result<Self, ExerciseError> {
        let topic = topic.into();
        let profession = profession.into();
        if topic.trim().is_empty() {
            return Err(ExerciseError::EmptyControlVariable("topic"));
        }
        if profession.trim().is_empty() {
            return Err(ExerciseError::EmptyControlVariable("profession"));
        }
        Ok(ControlVariables {
            topic,
            profession,
            skill_level,
            user_interaction,
            error_handling,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub input: u64,
    pub output: u64,
}

/// Closed set of reasons a sample is dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    SyntaxError,
    UnknownModule,
    UnknownAttribute,
    MissingDocstring,
    MissingCodeFence,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::SyntaxError => "syntax_error",
            RejectReason::UnknownModule => "unknown_module",
            RejectReason::UnknownAttribute => "unknown_attribute",
            RejectReason::MissingDocstring => "missing_docstring",
            RejectReason::MissingCodeFence => "missing_code_fence",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Serialized as `"unvalidated"`, `"valid"` or `{"rejected": "<reason>"}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationStatus {
    Unvalidated,
    Valid,
    Rejected(RejectReason),
}

impl fmt::Display for ValidationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationStatus::Unvalidated => f.write_str("unvalidated"),
            ValidationStatus::Valid => f.write_str("valid"),
            ValidationStatus::Rejected(r) => write!(f, "rejected({r})"),
        }
    }
}

/// One generated exercise. The JSONL schema is `schemas/exercise_sample.schema.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExerciseSample {
    pub id: SampleId,
    pub domain: Domain,
    pub control_vars: ControlVariables,
    pub problem_statement: String,
    pub code: String,
    pub raw_response: String,
    pub token_counts: TokenCounts,
    pub validation_status: ValidationStatus,
}

impl ExerciseSample {
    /// Builds an unvalidated sample. The problem statement is trimmed and the
    /// code loses leading blank lines and trailing whitespace, which is the
    /// form [`serialize_training_text`] and the response parser agree on.
    pub fn new(
        domain: Domain,
        control_vars: ControlVariables,
        problem_statement: &str,
        code: &str,
        raw_response: impl Into<String>,
        token_counts: TokenCounts,
    ) -> Self {
        let problem_statement = problem_statement.trim().to_string();
        let code = normalize_code(code);
        ExerciseSample {
            id: SampleId::from_content(&problem_statement, &code),
            domain,
            control_vars,
            problem_statement,
            code,
            raw_response: raw_response.into(),
            token_counts,
            validation_status: ValidationStatus::Unvalidated,
        }
    }

    /// A sample whose response could not be split into problem + code.
    pub fn unparsed(
        domain: Domain,
        control_vars: ControlVariables,
        raw_response: impl Into<String>,
        token_counts: TokenCounts,
        reason: RejectReason,
    ) -> Self {
        let raw_response = raw_response.into();
        ExerciseSample {
            id: SampleId::from_raw_response(&raw_response),
            domain,
            control_vars,
            problem_statement: String::new(),
            code: String::new(),
            raw_response,
            token_counts,
            validation_status: ValidationStatus::Rejected(reason),
        }
    }

    pub fn with_status(&self, status: ValidationStatus) -> Self {
        ExerciseSample {
            validation_status: status,
            ..self.clone()
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validation_status == ValidationStatus::Valid
    }
}

pub(crate) fn normalize_code(code: &str) -> String {
    let mut rest = code;
    // drop whole blank lines only, so indentation of the first real line survives
    while let Some(pos) = rest.find('\n') {
        if rest[..pos].trim().is_empty() {
            rest = &rest[pos + 1..];
        } else {
            break;
        }
    }
    rest.trim_end().to_string()
}

/// Renders a valid sample in the teacher's response shape: the problem
/// statement as a triple-quoted docstring, one blank line, then the code.
pub fn serialize_training_text(sample: &ExerciseSample) -> Result<String, ExerciseError> {
    if !sample.is_valid() {
        return Err(ExerciseError::NotValid {
            id: sample.id.clone(),
            status: sample.validation_status,
        });
    }
    if sample.problem_statement.is_empty() || sample.code.trim().is_empty() {
        return Err(ExerciseError::EmptyContent(sample.id.clone()));
    }
    let doc = docstring_block(&sample.problem_statement)
        .ok_or_else(|| ExerciseError::UnquotableProblem(sample.id.clone()))?;
    Ok(format!("{doc}\n{}\n", sample.code))
}

/// The problem statement as a module docstring plus its closing newline, or
/// `None` when it contains both kinds of triple quote.
pub fn docstring_block(problem_statement: &str) -> Option<String> {
    let quote = if !problem_statement.contains("\"\"\"") {
        "\"\"\""
    } else if !problem_statement.contains("'''") {
        "'''"
    } else {
        return None;
    };
    // a raw prefix keeps backslashes in the prose from being read as escapes
    let prefix = if problem_statement.contains('\\') { "r" } else { "" };
    Some(format!("{prefix}{quote}\n{problem_statement}\n{quote}\n"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.97,
            validation: 0.01,
            test: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<SampleId>,
    pub validation: Vec<SampleId>,
    pub test: Vec<SampleId>,
    pub seed: u64,
    pub fractions: SplitFractions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Validation,
    Test,
}

impl DatasetSplit {
    pub fn ids(&self, partition: Partition) -> &[SampleId] {
        match partition {
            Partition::Train => &self.train,
            Partition::Validation => &self.validation,
            Partition::Test => &self.test,
        }
    }

    /// Samples of one partition, in split order. Ids missing from `corpus`
    /// are skipped.
    pub fn select<'a>(
        &self,
        partition: Partition,
        corpus: &'a [ExerciseSample],
    ) -> Vec<&'a ExerciseSample> {
        let by_id: std::collections::HashMap<&SampleId, &ExerciseSample> =
            corpus.iter().map(|s| (&s.id, s)).collect();
        self.ids(partition)
            .iter()
            .filter_map(|id| by_id.get(id).copied())
            .collect()
    }
}
