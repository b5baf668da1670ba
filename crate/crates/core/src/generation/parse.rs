use crate::exercise::{normalize_code, RejectReason};
use crate::validation::validate_syntax;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedResponse {
    pub problem_statement: String,
    pub code: String,
}

/// Splits a teacher reply into its docstring problem statement and code.
///
/// The first ```` ```python ```` block is used and anything around it is
/// ignored. Without a fence, the whole reply is accepted when it is itself a
/// Python module that opens with a docstring (the shape of serialized
/// training text).
///
/// Fails with `missing_code_fence` when there is no usable code block
/// (including an unterminated one, or a block with nothing after the
/// docstring) and with `missing_docstring` when the block does not open with
/// a non-empty triple-quoted string.
pub fn parse_response(raw: &str) -> Result<ParsedResponse, RejectReason> {
    let body = match python_fence(raw) {
        Some(body) => body,
        None if opens_with_docstring(raw) && validate_syntax(raw).is_ok() => raw,
        None => return Err(RejectReason::MissingCodeFence),
    };
    let (problem, rest) = split_docstring(body).ok_or(RejectReason::MissingDocstring)?;
    let code = normalize_code(rest);
    if code.is_empty() {
        return Err(RejectReason::MissingCodeFence);
    }
    Ok(ParsedResponse {
        problem_statement: problem.trim().to_string(),
        code,
    })
}

/// Contents of the first closed ```` ```python ```` block.
fn python_fence(raw: &str) -> Option<&str> {
    let mut offset = 0;
    let mut start = None;
    for line in raw.split_inclusive('\n') {
        let trimmed = line.trim();
        match start {
            None => {
                if let Some(info) = trimmed.strip_prefix("```") {
                    let info = info.trim().to_ascii_lowercase();
                    if matches!(info.as_str(), "python" | "python3" | "py") {
                        start = Some(offset + line.len());
                    }
                }
            }
            Some(s) => {
                if trimmed.starts_with("```") {
                    return Some(&raw[s..offset]);
                }
            }
        }
        offset += line.len();
    }
    None
}

fn docstring_open(s: &str) -> Option<(usize, &'static str)> {
    let prefix = match s.as_bytes().first() {
        Some(b'r' | b'R' | b'u' | b'U') => 1,
        _ => 0,
    };
    let after = &s[prefix..];
    if after.starts_with("\"\"\"") {
        Some((prefix + 3, "\"\"\""))
    } else if after.starts_with("'''") {
        Some((prefix + 3, "'''"))
    } else {
        None
    }
}

fn opens_with_docstring(s: &str) -> bool {
    docstring_open(s.trim_start()).is_some()
}

/// `(docstring contents, text after the closing quotes)`, or `None` when the
/// text does not open with a closed, non-empty triple-quoted string.
fn split_docstring(body: &str) -> Option<(&str, &str)> {
    let s = body.trim_start();
    let (open_len, quote) = docstring_open(s)?;
    let inner_start = open_len;
    let bytes = s.as_bytes();
    let mut i = inner_start;
    while i < bytes.len() {
        if bytes[i] == b'\\' {
            // skip the escaped character, which may be multi-byte
            i += 1 + s[i + 1..].chars().next().map_or(0, char::len_utf8);
            continue;
        }
        if bytes[i..].starts_with(quote.as_bytes()) {
            let inner = &s[inner_start..i];
            if inner.trim().is_empty() {
                return None;
            }
            return Some((inner, &s[i + 3..]));
        }
        i += 1;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const NUCLEOTIDE: &str = include_str!("../../fixtures/teacher/nucleotide_response.txt");

    #[test]
    fn escaped_multibyte_character() {
        let p = parse_response("\"\"\"Ratio \\\u{3b1} of \u{3b2} \\\"\"\" ok\n\"\"\"\nx = 1\n").unwrap();
        assert_eq!(p.problem_statement, "Ratio \\\u{3b1} of \u{3b2} \\\"\"\" ok");
        assert!(parse_response("\"\"\"a \\").is_err());
    }

    #[test]
    fn minimal_block() {
        let p = parse_response("```python\n\"\"\"X\"\"\"\npass\n```").unwrap();
        assert_eq!(p.problem_statement, "X");
        assert_eq!(p.code, "pass");
    }

    #[test]
    fn nucleotide_listing() {
        let p = parse_response(NUCLEOTIDE).unwrap();
        assert!(p.problem_statement.starts_with("Problem Statement:\nIn the field of bioinformatics"));
        assert!(p.problem_statement.ends_with("Output: {'A': 3, 'T': 2, 'C': 2, 'G': 2}"));
        assert!(p.code.starts_with("# Define the function to count nucleotides\ndef count_nucleotides(dna_strand):"));
        assert!(p.code.ends_with("print(count_nucleotides(dna_sequence))  # Output: {'A': 3, 'T': 2, 'C': 2, 'G': 2}"));
    }

    #[test]
    fn prose_around_the_fence_is_discarded() {
        let raw = format!(
            "Here is your exercise:\n\n{NUCLEOTIDE}\n\nThis solution iterates over the strand once.\nIt runs in linear time.\n"
        );
        assert_eq!(parse_response(&raw).unwrap(), parse_response(NUCLEOTIDE).unwrap());
    }

    #[test]
    fn first_python_block_wins() {
        let raw = "```python\n\"\"\"A\"\"\"\na = 1\n```\n```python\n\"\"\"B\"\"\"\nb = 2\n```";
        assert_eq!(parse_response(raw).unwrap().problem_statement, "A");
    }

    #[test]
    fn prose_without_fence() {
        assert_eq!(
            parse_response("Sorry, I cannot help with that request."),
            Err(RejectReason::MissingCodeFence)
        );
        assert_eq!(parse_response("Hello"), Err(RejectReason::MissingCodeFence));
        assert_eq!(parse_response(""), Err(RejectReason::MissingCodeFence));
    }

    #[test]
    fn fence_without_docstring() {
        assert_eq!(
            parse_response("```python\nimport os\nprint(os.getcwd())\n```"),
            Err(RejectReason::MissingDocstring)
        );
        assert_eq!(
            parse_response("```python\n\"\"\"   \"\"\"\nx = 1\n```"),
            Err(RejectReason::MissingDocstring)
        );
        assert_eq!(
            parse_response("```python\n\"\"\"never closed\nx = 1\n```"),
            Err(RejectReason::MissingDocstring)
        );
    }

    #[test]
    fn unterminated_fence_is_missing() {
        assert_eq!(
            parse_response("```python\n\"\"\"X\"\"\"\nx = 1\n"),
            Err(RejectReason::MissingCodeFence)
        );
    }

    #[test]
    fn docstring_only_block_has_no_code() {
        assert_eq!(
            parse_response("```python\n\"\"\"X\"\"\"\n```"),
            Err(RejectReason::MissingCodeFence)
        );
    }

    #[test]
    fn bare_module_fallback() {
        let p = parse_response("\"\"\"\nTask.\n\"\"\"\n\nx = 1\n").unwrap();
        assert_eq!((p.problem_statement.as_str(), p.code.as_str()), ("Task.", "x = 1"));
        // opens with a docstring but is not valid Python
        assert_eq!(
            parse_response("\"\"\"Task.\"\"\"\ndef (:\n"),
            Err(RejectReason::MissingCodeFence)
        );
    }

    #[test]
    fn escaped_quotes_do_not_close_the_docstring() {
        let p = parse_response("```python\n\"\"\"say \\\"\"\" ok\"\"\"\nx = 1\n```").unwrap();
        assert_eq!(p.problem_statement, "say \\\"\"\" ok");
    }

    #[test]
    fn raw_and_single_quoted_docstrings() {
        let p = parse_response("```py\nr'''a\\b'''\nx = 1\n```").unwrap();
        assert_eq!(p.problem_statement, "a\\b");
    }
}
