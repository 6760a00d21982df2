use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EpisodeRecord;
use crate::error::Result;
use crate::feedback::{segment_all, FeedbackForm, FormClassifier};

/// Share of episodes with at least one utterance of each form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FormFractions {
    pub episodes: usize,
    pub evaluative: f64,
    pub imperative: f64,
    pub descriptive: f64,
    pub other: f64,
}

impl FormFractions {
    pub fn get(&self, form: FeedbackForm) -> f64 {
        match form {
            FeedbackForm::Evaluative => self.evaluative,
            FeedbackForm::Imperative => self.imperative,
            FeedbackForm::Descriptive => self.descriptive,
            FeedbackForm::Other => self.other,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FormStatistics {
    pub overall: FormFractions,
    pub by_episode: BTreeMap<u32, FormFractions>,
}

#[derive(Default)]
struct Tally {
    episodes: usize,
    hits: [usize; 4],
}

impl Tally {
    fn fractions(&self) -> FormFractions {
        let f = |i: usize| if self.episodes == 0 { 0.0 } else { self.hits[i] as f64 / self.episodes as f64 };
        FormFractions { episodes: self.episodes, evaluative: f(0), imperative: f(1), descriptive: f(2), other: f(3) }
    }
}

pub fn form_statistics(records: &[EpisodeRecord], classifier: &FormClassifier) -> Result<FormStatistics> {
    let mut overall = Tally::default();
    let mut by_episode: BTreeMap<u32, Tally> = BTreeMap::new();
    for r in records {
        let mut present = [false; 4];
        for u in segment_all(&r.messages) {
            let form = classifier.classify(&u)?;
            present[FeedbackForm::ALL.iter().position(|f| *f == form).expect("listed form")] = true;
        }
        for tally in [&mut overall, by_episode.entry(r.episode_index).or_default()] {
            tally.episodes += 1;
            for (h, p) in tally.hits.iter_mut().zip(present) {
                *h += usize::from(p);
            }
        }
    }
    Ok(FormStatistics {
        overall: overall.fractions(),
        by_episode: by_episode.into_iter().map(|(k, t)| (k, t.fractions())).collect(),
    })
}
