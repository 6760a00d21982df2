use serde::{Deserialize, Serialize};

/// Characters that end an utterance inside a message.
pub const DELIMITERS: [char; 4] = ['!', '.', ',', ';'];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    pub source_message_id: usize,
    pub split_index: usize,
}

impl Utterance {
    /// A stand-alone utterance (message 0, split 0).
    pub fn new(text: impl Into<String>) -> Self {
        Utterance {
            text: text.into(),
            source_message_id: 0,
            split_index: 0,
        }
    }
}

/// Splits a message on `!.,;`, trimming and dropping empty pieces.
pub fn segment(message: &str, source_message_id: usize) -> Vec<Utterance> {
    message
        .split(DELIMITERS)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(split_index, text)| Utterance {
            text: text.to_string(),
            source_message_id,
            split_index,
        })
        .collect()
}

/// Segments every message of an episode, numbering messages in order.
pub fn segment_all<S: AsRef<str>>(messages: &[S]) -> Vec<Utterance> {
    messages
        .iter()
        .enumerate()
        .flat_map(|(i, m)| segment(m.as_ref(), i))
        .collect()
}

/// Lowercased word tokens. Splits on anything that is not alphanumeric or an
/// apostrophe, then drops apostrophes (`don't` -> `dont`).
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '\u{2019}'))
        .map(|t| {
            t.chars()
                .filter(|&c| c != '\'' && c != '\u{2019}')
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}
