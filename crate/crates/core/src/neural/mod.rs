//! Bag-of-words inference network that maps an utterance and the counts of
//! the trajectory it comments on straight to reward weights.

mod belief;
mod net;
mod train;

pub use belief::NetBelief;
pub use net::{Gradients, InferenceNet, NetConfig, CHECKPOINT_VERSION};
pub use train::{sgd_step, train_fold, NetExample, TrainConfig, TrainReport};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::world::{trajectory_counts, Level, ObjectClass, RewardFunction, Trajectory};

const STRIP: &[char] = &['!', '.', ',', ';', '?', '\'', '"', '(', ')'];

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .chars()
        .filter(|c| !STRIP.contains(c))
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

pub const UNK: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Index 0 is UNK; the rest are tokens seen at least `min_count` times,
    /// sorted.
    pub fn build<'a, I: IntoIterator<Item = &'a [String]>>(docs: I, min_count: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            for t in doc {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut tokens = vec![UNK.to_string()];
        tokens.extend(counts.into_iter().filter(|(t, c)| *c >= min_count && *t != UNK).map(|(t, _)| t.to_string()));
        Self::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn ids<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }
}

/// Network output on one (utterance, trajectory) pair, labeled by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub text: String,
    pub counts: FeatureVector,
    pub w_hat: FeatureVector,
    pub labels: Vec<String>,
}

pub fn probe(net: &InferenceNet, text: &str, tau: &Trajectory, level: &Level, rf: &RewardFunction) -> Probe {
    let counts = trajectory_counts(tau, level, rf);
    Probe {
        text: text.to_string(),
        counts,
        w_hat: net.forward(&tokenize(text), &counts),
        labels: ObjectClass::all().map(|c| c.label()).collect(),
    }
}
