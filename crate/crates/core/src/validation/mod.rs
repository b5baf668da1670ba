//! Two-stage static validation of generated code.
//!
//! Stage one parses the code as a Python 3 module. Stage two extracts every
//! import and every attribute chain rooted at an import binding and resolves
//! them against an [`ApiIndex`], a JSON map of module paths to public
//! attribute names produced by introspecting the target environment.
//!
//! Resolution is conservative: when the index does not describe a name (a
//! module below the introspection depth, or one whose members were not
//! recorded) the reference is accepted.

mod api_index;
mod corpus;
mod extract;
mod semantic;
mod syntax;

pub use api_index::{ApiIndex, ApiIndexError, Resolution, API_INDEX_SCHEMA_VERSION};
pub use corpus::{validate_corpus, validate_sample, CorpusValidation, Rejection, ValidationReport};
pub use extract::{extract_attribute_chains, extract_imports, AttributeChain, ImportKind, ImportRecord};
pub use semantic::{validate_semantics, Violation};
pub use syntax::{validate_syntax, ParseTree, SyntaxError};
