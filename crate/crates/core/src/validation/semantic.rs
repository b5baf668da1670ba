use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::api_index::{ApiIndex, Resolution};
use super::extract::{AttributeChain, ImportKind, ImportRecord};
use crate::exercise::RejectReason;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "path")]
pub enum Violation {
    UnknownModule(String),
    UnknownAttribute(String),
}

impl Violation {
    pub fn reason(&self) -> RejectReason {
        match self {
            Violation::UnknownModule(_) => RejectReason::UnknownModule,
            Violation::UnknownAttribute(_) => RejectReason::UnknownAttribute,
        }
    }

    pub fn path(&self) -> &str {
        match self {
            Violation::UnknownModule(p) | Violation::UnknownAttribute(p) => p,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.reason(), self.path())
    }
}

/// Checks imports and attribute chains against `index`. Violations are
/// reported once each, in source order.
pub fn validate_semantics(
    imports: &[ImportRecord],
    chains: &[AttributeChain],
    index: &ApiIndex,
) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let mut push = |v: Violation| {
        if !violations.contains(&v) {
            violations.push(v);
        }
    };

    // binding -> module key it resolves to; `None` means unresolvable (opaque
    // or already reported), so chains through it are not checked
    let mut bindings: BTreeMap<&str, Option<String>> = BTreeMap::new();

    for rec in imports {
        if rec.is_relative() {
            push(Violation::UnknownModule(format!(
                "{}{}",
                ".".repeat(rec.level as usize),
                rec.module_path
            )));
            bindings.insert(&rec.bound_name, None);
            continue;
        }
        let segments: Vec<&str> = rec.module_path.split('.').collect();
        let module = index.resolve_module(&segments);
        if let Resolution::Missing(_) = module {
            push(Violation::UnknownModule(rec.module_path.clone()));
            bindings.insert(&rec.bound_name, None);
            continue;
        }
        let target = match (rec.kind, rec.imported_symbol.as_deref()) {
            (ImportKind::FromImport, Some("*")) => continue,
            (ImportKind::FromImport, Some(sym)) => {
                if module == Resolution::Opaque {
                    None
                } else {
                    // checked like attribute access: a recorded member list
                    // is taken as the module's complete public surface
                    let full = format!("{}.{sym}", rec.module_path);
                    match index.resolve_attributes(&rec.module_path, &[sym]) {
                        Resolution::Module => Some(full),
                        Resolution::Opaque => None,
                        Resolution::Missing(_) => {
                            push(Violation::UnknownAttribute(full));
                            None
                        }
                    }
                }
            }
            _ => {
                let bound = rec.bound_path().unwrap_or_default();
                (index.resolve_module(&bound.split('.').collect::<Vec<_>>()) == Resolution::Module)
                    .then_some(bound)
            }
        };
        bindings.insert(&rec.bound_name, target);
    }

    for chain in chains {
        let Some(Some(module)) = bindings.get(chain.root_binding.as_str()) else {
            continue;
        };
        let attrs: Vec<&str> = chain.chain.iter().map(String::as_str).collect();
        if let Resolution::Missing(i) = index.resolve_attributes(module, &attrs) {
            push(Violation::UnknownAttribute(format!("{module}.{}", attrs[..=i].join("."))));
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
