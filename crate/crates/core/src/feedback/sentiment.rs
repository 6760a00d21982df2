//! Lexicon-and-rules sentiment scoring.
//!
//! Each token with a valence contributes its lexicon value, boosted by a
//! directly preceding intensifier and sign-flipped (with damping) by a
//! negator in the three preceding tokens. The mean contribution `x` is
//! squashed to `x / sqrt(x² + α)` and multiplied by the output scale.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::segment::word_tokens;
use crate::error::{Error, Result};

const BUILTIN_VALENCE: &str = include_str!("../../data/valence.tsv");

pub const NEGATORS: &[&str] = &[
    "not", "never", "dont", "doesnt", "didnt", "isnt", "arent", "wasnt", "werent", "cant", "cannot",
    "couldnt", "wont", "wouldnt", "shouldnt", "hasnt", "havent", "hadnt", "aint", "nothing", "nobody",
    "none", "neither", "nor", "nowhere", "without", "hardly", "barely",
];

pub const INTENSIFIERS: &[&str] = &[
    "very", "really", "so", "extremely", "totally", "incredibly", "absolutely", "truly",
    "quite", "too", "most", "much", "way", "especially",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SentimentConfig {
    /// Multiplier applied to the squashed score in [-1, 1].
    pub scale: f64,
    pub alpha: f64,
    pub negation_window: usize,
    /// Factor applied to a negated valence. Negative, so negation flips sign.
    pub negation_factor: f64,
    pub intensifier_factor: f64,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig {
            scale: 30.0,
            alpha: 15.0,
            negation_window: 3,
            negation_factor: -0.74,
            intensifier_factor: 1.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SentimentAnalyzer {
    valence: HashMap<String, f64>,
    config: SentimentConfig,
}

impl Default for SentimentAnalyzer {
    fn default() -> Self {
        Self::builtin(SentimentConfig::default())
    }
}

impl SentimentAnalyzer {
    pub fn builtin(config: SentimentConfig) -> Self {
        let valence = parse_valence(BUILTIN_VALENCE, Path::new("<builtin valence>"))
            .expect("builtin valence table parses");
        SentimentAnalyzer { valence, config }
    }

    pub fn from_file(path: &Path, config: SentimentConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(SentimentAnalyzer {
            valence: parse_valence(&text, path)?,
            config,
        })
    }

    pub fn config(&self) -> &SentimentConfig {
        &self.config
    }

    pub fn lexicon_len(&self) -> usize {
        self.valence.len()
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.valence.get(token).copied()
    }

    /// Raw score in [-1, 1]; 0 when no token carries valence.
    pub fn raw_score(&self, text: &str) -> f64 {
        let tokens = word_tokens(text);
        let cfg = &self.config;
        let mut total = 0.0;
        let mut n = 0usize;
        for (i, tok) in tokens.iter().enumerate() {
            if is_negator(tok) || is_intensifier(tok) {
                continue;
            }
            let Some(mut v) = self.valence(tok) else {
                continue;
            };
            if i > 0 && is_intensifier(&tokens[i - 1]) {
                v *= cfg.intensifier_factor;
            }
            let start = i.saturating_sub(cfg.negation_window);
            if tokens[start..i].iter().any(|t| is_negator(t)) {
                v *= cfg.negation_factor;
            }
            total += v;
            n += 1;
        }
        if n == 0 {
            return 0.0;
        }
        let x = total / n as f64;
        x / (x * x + cfg.alpha).sqrt()
    }

    /// Scaled sentiment in `[-scale, scale]`.
    pub fn score(&self, text: &str) -> f64 {
        self.raw_score(text) * self.config.scale
    }
}

fn is_negator(tok: &str) -> bool {
    NEGATORS.contains(&tok)
}

fn is_intensifier(tok: &str) -> bool {
    INTENSIFIERS.contains(&tok)
}

fn parse_valence(text: &str, path: &Path) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(word), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, i + 1, "expected `token<TAB>valence`"));
        };
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad valence {v:?}")))?;
        if !v.is_finite() || v.abs() > 4.0 {
            return Err(Error::parse(path, i + 1, "valence outside [-4, 4]"));
        }
        if out.insert(word.trim().to_lowercase(), v).is_some() {
            return Err(Error::parse(path, i + 1, format!("duplicate token {word:?}")));
        }
    }
    Ok(out)
}
