use std::collections::BTreeSet;

use rustpython_parser::ast::{self, Expr, Visitor};
use serde::{Deserialize, Serialize};

use super::syntax::ParseTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportKind {
    ModuleImport,
    FromImport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportRecord {
    /// Dotted module path. Empty for `from . import x`.
    pub module_path: String,
    /// Name introduced into the namespace (`*` for star imports).
    pub bound_name: String,
    pub kind: ImportKind,
    pub imported_symbol: Option<String>,
    /// Leading dots of a relative import; 0 for absolute imports.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub level: u32,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

impl ImportRecord {
    pub fn module(path: &str, alias: Option<&str>) -> Self {
        let bound = alias.unwrap_or_else(|| path.split('.').next().unwrap_or(path));
        ImportRecord {
            module_path: path.to_string(),
            bound_name: bound.to_string(),
            kind: ImportKind::ModuleImport,
            imported_symbol: None,
            level: 0,
        }
    }

    pub fn from(path: &str, symbol: &str, alias: Option<&str>) -> Self {
        ImportRecord {
            module_path: path.to_string(),
            bound_name: alias.unwrap_or(symbol).to_string(),
            kind: ImportKind::FromImport,
            imported_symbol: Some(symbol.to_string()),
            level: 0,
        }
    }

    pub fn is_star(&self) -> bool {
        self.imported_symbol.as_deref() == Some("*")
    }

    pub fn is_relative(&self) -> bool {
        self.level > 0
    }

    /// The dotted path that `bound_name` refers to: the first segment for a
    /// plain `import a.b`, the full path for `import a.b as x`, and `m.s` for
    /// `from m import s`.
    pub fn bound_path(&self) -> Option<String> {
        if self.is_relative() || self.is_star() {
            return None;
        }
        Some(match (&self.kind, &self.imported_symbol) {
            (ImportKind::FromImport, Some(sym)) => format!("{}.{sym}", self.module_path),
            _ if self.bound_name == self.module_path.split('.').next().unwrap_or_default() => {
                self.bound_name.clone()
            }
            _ => self.module_path.clone(),
        })
    }
}

/// A dotted attribute access whose root name is an import binding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeChain {
    pub root_binding: String,
    pub chain: Vec<String>,
}

impl AttributeChain {
    pub fn new(root: &str, chain: &[&str]) -> Self {
        AttributeChain {
            root_binding: root.to_string(),
            chain: chain.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// The generated `Visitor` leaves these node kinds as no-ops; without them
/// imports and chains inside comprehensions, default values, keyword
/// arguments, `with` items and `match` arms would be missed.
macro_rules! complete_traversal {
    () => {
        fn visit_comprehension(&mut self, node: ast::Comprehension) {
            self.visit_expr(node.target);
            self.visit_expr(node.iter);
            for e in node.ifs {
                self.visit_expr(e);
            }
        }

        fn visit_arguments(&mut self, node: ast::Arguments) {
            let with_defaults = node
                .posonlyargs
                .into_iter()
                .chain(node.args)
                .chain(node.kwonlyargs);
            for a in with_defaults {
                self.visit_arg(a.def);
                if let Some(d) = a.default {
                    self.visit_expr(*d);
                }
            }
            for a in node.vararg.into_iter().chain(node.kwarg) {
                self.visit_arg(*a);
            }
        }

        fn visit_arg(&mut self, node: ast::Arg) {
            if let Some(ann) = node.annotation {
                self.visit_expr(*ann);
            }
        }

        fn visit_keyword(&mut self, node: ast::Keyword) {
            self.visit_expr(node.value);
        }

        fn visit_withitem(&mut self, node: ast::WithItem) {
            self.visit_expr(node.context_expr);
            if let Some(v) = node.optional_vars {
                self.visit_expr(*v);
            }
        }

        fn visit_match_case(&mut self, node: ast::MatchCase) {
            self.visit_pattern(node.pattern);
            if let Some(g) = node.guard {
                self.visit_expr(*g);
            }
            for s in node.body {
                self.visit_stmt(s);
            }
        }
    };
}

/// Every import statement in source order, nested ones included.
pub fn extract_imports(tree: &ParseTree) -> Vec<ImportRecord> {
    let mut v = ImportCollector::default();
    for stmt in tree.body().iter().cloned() {
        v.visit_stmt(stmt);
    }
    v.records
}

#[derive(Default)]
struct ImportCollector {
    records: Vec<ImportRecord>,
}

impl Visitor for ImportCollector {
    complete_traversal!();

    fn visit_stmt_import(&mut self, node: ast::StmtImport) {
        for alias in &node.names {
            self.records
                .push(ImportRecord::module(alias.name.as_str(), alias.asname.as_deref()));
        }
    }

    fn visit_stmt_import_from(&mut self, node: ast::StmtImportFrom) {
        let path = node.module.as_deref().unwrap_or("");
        let level = node.level.map_or(0, |l| l.to_u32());
        for alias in &node.names {
            let mut r = ImportRecord::from(path, alias.name.as_str(), alias.asname.as_deref());
            r.level = level;
            self.records.push(r);
        }
    }
}

/// Dotted chains rooted at an import binding. A chain stops at the first call
/// or subscript: `np.zeros(3).sum` yields only `np.zeros`.
pub fn extract_attribute_chains(tree: &ParseTree, imports: &[ImportRecord]) -> Vec<AttributeChain> {
    let mut v = ChainCollector {
        bindings: imports
            .iter()
            .filter(|r| r.bound_path().is_some())
            .map(|r| r.bound_name.as_str())
            .collect(),
        chains: Vec::new(),
    };
    for stmt in tree.body().iter().cloned() {
        v.visit_stmt(stmt);
    }
    v.chains
}

struct ChainCollector<'a> {
    bindings: BTreeSet<&'a str>,
    chains: Vec<AttributeChain>,
}

impl Visitor for ChainCollector<'_> {
    complete_traversal!();

    fn visit_expr_attribute(&mut self, node: ast::ExprAttribute) {
        let mut attrs = vec![node.attr.to_string()];
        let mut base = *node.value;
        while let Expr::Attribute(inner) = base {
            attrs.push(inner.attr.to_string());
            base = *inner.value;
        }
        match base {
            Expr::Name(name) if self.bindings.contains(name.id.as_str()) => {
                attrs.reverse();
                self.chains.push(AttributeChain {
                    root_binding: name.id.to_string(),
                    chain: attrs,
                });
            }
            other => self.visit_expr(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validation::validate_syntax;

    fn imports(src: &str) -> Vec<ImportRecord> {
        extract_imports(&validate_syntax(src).unwrap())
    }

    fn chains(src: &str) -> Vec<AttributeChain> {
        let tree = validate_syntax(src).unwrap();
        extract_attribute_chains(&tree, &extract_imports(&tree))
    }

    #[test]
    fn canonical_alias() {
        assert_eq!(imports("import numpy as np"), vec![ImportRecord::module("numpy", Some("np"))]);
        let r = &imports("import numpy as np")[0];
        assert_eq!((r.bound_name.as_str(), r.kind), ("np", ImportKind::ModuleImport));
    }

    #[test]
    fn from_import_records_symbol() {
        assert_eq!(
            imports("from sklearn.linear_model import LinearRegression"),
            vec![ImportRecord {
                module_path: "sklearn.linear_model".into(),
                bound_name: "LinearRegression".into(),
                kind: ImportKind::FromImport,
                imported_symbol: Some("LinearRegression".into()),
                level: 0,
            }]
        );
    }

    #[test]
    fn every_grammar_form_against_hand_list() {
        let src = "\
import os
import a.b.c as x, sys
import p.q
from m import s
from m import s as t
from m.n import (u, v as w)
from k import *
from . import sib
from ..pkg import thing as th
def f():
    import json
";
        let expected = vec![
            ImportRecord::module("os", None),
            ImportRecord::module("a.b.c", Some("x")),
            ImportRecord::module("sys", None),
            ImportRecord::module("p.q", None),
            ImportRecord::from("m", "s", None),
            ImportRecord::from("m", "s", Some("t")),
            ImportRecord::from("m.n", "u", None),
            ImportRecord::from("m.n", "v", Some("w")),
            ImportRecord::from("k", "*", None),
            ImportRecord { level: 1, ..ImportRecord::from("", "sib", None) },
            ImportRecord { level: 2, ..ImportRecord::from("pkg", "thing", Some("th")) },
            ImportRecord::module("json", None),
        ];
        assert_eq!(imports(src), expected);
        assert_eq!(imports("import a.b.c as x, os").len(), 2);
    }

    #[test]
    fn bound_paths() {
        assert_eq!(ImportRecord::module("a.b.c", None).bound_path().as_deref(), Some("a"));
        assert_eq!(ImportRecord::module("a.b.c", Some("x")).bound_path().as_deref(), Some("a.b.c"));
        assert_eq!(ImportRecord::module("numpy", Some("numpy")).bound_path().as_deref(), Some("numpy"));
        assert_eq!(ImportRecord::from("m", "s", Some("t")).bound_path().as_deref(), Some("m.s"));
        assert_eq!(ImportRecord::from("k", "*", None).bound_path(), None);
    }

    #[test]
    fn direct_chain() {
        assert_eq!(
            chains("import numpy as np\nnp.linalg.norm(x)"),
            vec![AttributeChain::new("np", &["linalg", "norm"])]
        );
    }

    #[test]
    fn local_roots_are_ignored() {
        assert!(chains("model.fit(X).predict(X)").is_empty());
        assert!(chains("import numpy as np\nmodel.fit(X).predict(X)").is_empty());
    }

    #[test]
    fn two_chains_rooted_at_cv2() {
        assert_eq!(
            chains("import cv2\ncv2.cvtColor(img, cv2.COLOR_BGR2GRAY)"),
            vec![
                AttributeChain::new("cv2", &["cvtColor"]),
                AttributeChain::new("cv2", &["COLOR_BGR2GRAY"]),
            ]
        );
    }

    #[test]
    fn calls_truncate_chains() {
        assert_eq!(
            chains("import numpy as np\nnp.zeros(3).reshape(1, 3).sum"),
            vec![AttributeChain::new("np", &["zeros"])]
        );
        assert_eq!(
            chains("import os\nos.environ['X'].lower()"),
            vec![AttributeChain::new("os", &["environ"])]
        );
    }

    #[test]
    fn chains_inside_nested_scopes_and_from_bindings() {
        let src = "\
from sklearn import linear_model
import os.path
class A:
    def m(self):
        return [linear_model.LinearRegression() for _ in os.path.sep]
";
        assert_eq!(
            chains(src),
            vec![
                AttributeChain::new("linear_model", &["LinearRegression"]),
                AttributeChain::new("os", &["path", "sep"]),
            ]
        );
    }

    #[test]
    fn traversal_reaches_every_expression_position() {
        let src = "\
import m
def f(a: m.A = m.B, *args: m.C, k=m.D, **kw: m.E) -> m.F:
    with m.G() as g:
        pass
    match a:
        case 1 if m.H:
            import inner
            m.I
    return g(key=m.J), [x for x in m.K if m.L]
";
        let tree = validate_syntax(src).unwrap();
        let imports = extract_imports(&tree);
        assert_eq!(imports.len(), 2);
        let mut names: Vec<String> = extract_attribute_chains(&tree, &imports)
            .into_iter()
            .map(|c| c.chain.join("."))
            .collect();
        names.sort();
        assert_eq!(names, ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L"]);
    }

    #[test]
    fn fig3_style_code_has_no_chains() {
        let src = "def f(s):\n    d = {'A': 0}\n    for c in s:\n        d[c] += 1\n    return d\nprint(f('A'))\n";
        let tree = validate_syntax(src).unwrap();
        assert!(extract_imports(&tree).is_empty());
        assert!(extract_attribute_chains(&tree, &[]).is_empty());
    }
}
