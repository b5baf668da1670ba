//! Token counting.
//!
//! Token statistics only need a consistent count, not the teacher's actual
//! vocabulary, so the default is an approximate splitter. Anything that
//! reports counts also reports [`Tokenizer::name`] so readers can tell the
//! numbers are approximate.

pub trait Tokenizer: Send + Sync {
    fn name(&self) -> &str;

    fn count(&self, text: &str) -> usize;
}

/// Splits on whitespace and punctuation boundaries: every run of word
/// characters is one token and every other non-space character is a token of
/// its own.
#[derive(Debug, Default, Clone, Copy)]
pub struct ApproxTokenizer;

impl ApproxTokenizer {
    pub const NAME: &'static str = "approximate (whitespace/punctuation split)";
}

impl Tokenizer for ApproxTokenizer {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn count(&self, text: &str) -> usize {
        let mut count = 0;
        let mut in_word = false;
        for c in text.chars() {
            if c.is_alphanumeric() || c == '_' {
                if !in_word {
                    count += 1;
                    in_word = true;
                }
            } else {
                in_word = false;
                if !c.is_whitespace() {
                    count += 1;
                }
            }
        }
        count
    }
}
