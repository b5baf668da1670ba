use std::fmt;

use rustpython_parser::ast::{self, Stmt};
use rustpython_parser::source_code::LinearLocator;
use rustpython_parser::{parse, Mode};

/// A successfully parsed Python module.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseTree {
    body: ast::Suite,
}

impl ParseTree {
    pub fn body(&self) -> &[Stmt] {
        &self.body
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

/// Parses `code` as a Python 3 module (3.10+ syntax, `match` included).
pub fn validate_syntax(code: &str) -> Result<ParseTree, SyntaxError> {
    match parse(code, Mode::Module, "<exercise>") {
        Ok(ast::Mod::Module(m)) => Ok(ParseTree { body: m.body }),
        Ok(_) => unreachable!("Mode::Module always yields a module"),
        Err(e) => {
            let loc = LinearLocator::new(code).locate(e.offset);
            Err(SyntaxError {
                line: loc.row.get() as usize,
                column: loc.column.get() as usize,
                message: e.error.to_string(),
            })
        }
    }
}
