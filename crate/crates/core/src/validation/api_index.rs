use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::{self, IoError};

pub const API_INDEX_SCHEMA_VERSION: u32 = 1;

/// Module paths mapped to their public attribute names, as written by the
/// Python introspector (`index-build`).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiIndex {
    pub schema_version: u32,
    /// Introspection recursion depth: keys have at most this many segments.
    pub depth: usize,
    pub entries: BTreeMap<String, Vec<String>>,
    /// Packages that failed to import during introspection.
    #[serde(default)]
    pub failed: Vec<String>,
    /// Package versions of the introspected environment.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub versions: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiIndexError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("unsupported api index schema_version {found} (expected {API_INDEX_SCHEMA_VERSION})")]
    Schema { found: u32 },
    #[error("api index depth must be at least 1")]
    Depth,
    #[error("api index key {0:?} is not a dotted identifier path")]
    BadKey(String),
}

/// Outcome of resolving one dotted name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resolution {
    /// Resolves to a module key in the index.
    Module,
    /// Resolves to a recorded attribute or to something the index does not
    /// describe; nothing below it can be checked.
    Opaque,
    /// Missing at the first segment (`.0` is the index of that segment).
    Missing(usize),
}

impl ApiIndex {
    pub fn new(depth: usize) -> Self {
        ApiIndex {
            schema_version: API_INDEX_SCHEMA_VERSION,
            depth,
            ..ApiIndex::default()
        }
    }

    /// Adds `module` with `attrs`, keeping the list sorted and deduplicated.
    pub fn insert<S: Into<String>>(&mut self, module: &str, attrs: impl IntoIterator<Item = S>) {
        let list = self.entries.entry(module.to_string()).or_default();
        list.extend(attrs.into_iter().map(Into::into));
        list.sort();
        list.dedup();
    }

    pub fn load(path: &Path) -> Result<Self, ApiIndexError> {
        let mut index: ApiIndex = io::read_json(path)?;
        index.check()?;
        for list in index.entries.values_mut() {
            list.sort();
            list.dedup();
        }
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<(), ApiIndexError> {
        Ok(io::write_json(path, self)?)
    }

    pub fn check(&self) -> Result<(), ApiIndexError> {
        if self.schema_version != API_INDEX_SCHEMA_VERSION {
            return Err(ApiIndexError::Schema {
                found: self.schema_version,
            });
        }
        if self.depth == 0 {
            return Err(ApiIndexError::Depth);
        }
        for key in self.entries.keys() {
            if !key.split('.').all(is_identifier) {
                return Err(ApiIndexError::BadKey(key.clone()));
            }
        }
        Ok(())
    }

    pub fn contains_module(&self, path: &str) -> bool {
        self.entries.contains_key(path)
    }

    pub fn attributes(&self, module: &str) -> Option<&[String]> {
        self.entries.get(module).map(Vec::as_slice)
    }

    fn has_attr(&self, module: &str, name: &str) -> bool {
        self.entries
            .get(module)
            .is_some_and(|l| l.binary_search_by(|a| a.as_str().cmp(name)).is_ok())
    }

    /// Resolves an import path (`import a.b.c`, or the module of a
    /// from-import). The root must be a key. Below it, a segment that is
    /// neither a key nor a recorded attribute is accepted only when the parent
    /// has no recorded members or sits at the introspection depth, where
    /// submodules were not enumerated.
    pub fn resolve_module(&self, segments: &[&str]) -> Resolution {
        let Some(root) = segments.first() else {
            return Resolution::Missing(0);
        };
        if !self.contains_module(root) {
            return Resolution::Missing(0);
        }
        let mut current = root.to_string();
        for (i, seg) in segments.iter().enumerate().skip(1) {
            let next = format!("{current}.{seg}");
            if self.contains_module(&next) {
                current = next;
                continue;
            }
            if self.has_attr(&current, seg) || self.unenumerated_below(&current, i) {
                return Resolution::Opaque;
            }
            return Resolution::Missing(i);
        }
        Resolution::Module
    }

    /// Resolves attribute access `module.a.b...` from the module key `module`.
    /// Unlike import paths, a missing name is only accepted when the module
    /// has no recorded members: attribute access needs the name to be bound
    /// on the module object, and the recorded list says it is not.
    pub fn resolve_attributes(&self, module: &str, chain: &[&str]) -> Resolution {
        let mut current = module.to_string();
        for (i, attr) in chain.iter().enumerate() {
            let next = format!("{current}.{attr}");
            if self.contains_module(&next) {
                current = next;
                continue;
            }
            if self.has_attr(&current, attr) || self.attributes(&current).is_none_or(|l| l.is_empty()) {
                return Resolution::Opaque;
            }
            return Resolution::Missing(i);
        }
        Resolution::Module
    }

    fn unenumerated_below(&self, module: &str, segments: usize) -> bool {
        segments >= self.depth || self.attributes(module).is_none_or(|l| l.is_empty())
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c == '_' || c.is_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c == '_' || c.is_alphanumeric())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index() -> ApiIndex {
        let mut ix = ApiIndex::new(2);
        ix.insert("numpy", ["array", "linalg", "zeros"]);
        ix.insert("numpy.linalg", ["inv", "norm"]);
        ix.insert("os", Vec::<String>::new());
        ix
    }

    #[test]
    fn module_resolution() {
        let ix = index();
        assert_eq!(ix.resolve_module(&["numpy"]), Resolution::Module);
        assert_eq!(ix.resolve_module(&["numpy", "linalg"]), Resolution::Module);
        assert_eq!(ix.resolve_module(&["numpi"]), Resolution::Missing(0));
        assert_eq!(ix.resolve_module(&["numpy", "nolinalg"]), Resolution::Missing(1));
        // below the introspection depth
        assert_eq!(ix.resolve_module(&["numpy", "linalg", "lapack"]), Resolution::Opaque);
        // module without recorded members
        assert_eq!(ix.resolve_module(&["os", "path"]), Resolution::Opaque);
    }

    #[test]
    fn attribute_resolution() {
        let ix = index();
        assert_eq!(ix.resolve_attributes("numpy", &["linalg", "norm"]), Resolution::Opaque);
        assert_eq!(ix.resolve_attributes("numpy", &["linalg", "nrm"]), Resolution::Missing(1));
        assert_eq!(ix.resolve_attributes("numpy", &["zeros", "anything"]), Resolution::Opaque);
        assert_eq!(ix.resolve_attributes("os", &["path", "join"]), Resolution::Opaque);
        assert_eq!(ix.resolve_attributes("numpy", &["linalg"]), Resolution::Module);
    }

    #[test]
    fn json_round_trip_and_checks() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ix.json");
        index().save(&p).unwrap();
        assert_eq!(ApiIndex::load(&p).unwrap(), index());

        let mut bad = index();
        bad.depth = 0;
        bad.save(&p).unwrap();
        assert!(matches!(ApiIndex::load(&p), Err(ApiIndexError::Depth)));
        let mut bad = index();
        bad.schema_version = 9;
        bad.save(&p).unwrap();
        assert!(matches!(ApiIndex::load(&p), Err(ApiIndexError::Schema { found: 9 })));
    }

    #[test]
    fn load_sorts_attribute_lists() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ix.json");
        std::fs::write(
            &p,
            r#"{"schema_version":1,"depth":1,"entries":{"json":["loads","dumps","loads"]},"failed":["no_such_pkg"]}"#,
        )
        .unwrap();
        let ix = ApiIndex::load(&p).unwrap();
        assert_eq!(ix.attributes("json").unwrap(), ["dumps", "loads"]);
        assert_eq!(ix.failed, ["no_such_pkg"]);
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("cv2") && is_identifier("_x") && is_identifier("é"));
        assert!(!is_identifier("2cv") && !is_identifier("") && !is_identifier("a-b"));
    }
}
