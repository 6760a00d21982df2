use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::belief::{ActionPolicy, PragmaticConfig, OBS_NOISE, PRIOR_VARIANCE};
use crate::error::{Error, Result};
use crate::feedback::{
    templates, ClassifierConfig, Decomposer, FormClassifier, GroundingLexicon, SentimentAnalyzer, SentimentConfig,
    DEFAULT_TEMPLATES_PER_FORM, DEFAULT_TEMPLATE_SEED,
};
use crate::neural::TrainConfig;
use crate::world::LevelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeliefConfig {
    pub prior_variance: f64,
    pub obs_noise: f64,
    pub policy: ActionPolicy,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        Self { prior_variance: PRIOR_VARIANCE, obs_noise: OBS_NOISE, policy: ActionPolicy::Thompson }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub episodes: u32,
    /// Levels `0..experiment_levels` are played in games; the next
    /// `test_levels` ids are the held-out panel for interaction sampling.
    pub experiment_levels: u32,
    pub test_levels: u32,
    pub draws: usize,
    pub repeats: usize,
    pub folds: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { episodes: 10, experiment_levels: 10, test_levels: 100, draws: 10, repeats: 5, folds: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LexiconPaths {
    /// `token<TAB>valence` table replacing the built-in one.
    pub valence: Option<PathBuf>,
    /// `kind<TAB>surface<TAB>referent` table replacing the built-in one.
    pub grounding: Option<PathBuf>,
    /// `{text, form}` lines to train the form classifier on instead of the
    /// templated set.
    pub labeled_utterances: Option<PathBuf>,
}

/// Every tunable constant, loadable from one TOML file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub sentiment: SentimentConfig,
    pub belief: BeliefConfig,
    pub pragmatic: PragmaticConfig,
    pub classifier: ClassifierConfig,
    pub net: TrainConfig,
    pub levels: LevelConfig,
    pub protocol: ProtocolConfig,
    pub lexicons: LexiconPaths,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Config = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map(Self::load).unwrap_or_else(|| Ok(Self::default()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.pragmatic.validate()?;
        self.levels.table.validate()?;
        if !(self.belief.obs_noise > 0.0 && self.belief.prior_variance > 0.0) {
            return Err(Error::Config("prior_variance and obs_noise must be positive".into()));
        }
        if self.protocol.episodes == 0 || self.protocol.folds == 0 {
            return Err(Error::Config("episodes and folds must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the config.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// The decomposer this config describes. With no overrides this is the
    /// process-wide shared instance.
    pub fn decomposer(&self) -> Result<Arc<Decomposer>> {
        let l = &self.lexicons;
        if self.sentiment == SentimentConfig::default()
            && self.classifier == ClassifierConfig::default()
            && l.valence.is_none()
            && l.grounding.is_none()
            && l.labeled_utterances.is_none()
        {
            return Ok(Decomposer::shared());
        }
        let sentiment = match &l.valence {
            Some(p) => SentimentAnalyzer::from_file(p, self.sentiment.clone())?,
            None => SentimentAnalyzer::builtin(self.sentiment.clone()),
        };
        let lexicon = match &l.grounding {
            Some(p) => GroundingLexicon::from_file(p)?,
            None => GroundingLexicon::default(),
        };
        let labeled = match &l.labeled_utterances {
            Some(p) => crate::feedback::read_labeled(p)?,
            None => templates::synthetic_labeled(DEFAULT_TEMPLATE_SEED, DEFAULT_TEMPLATES_PER_FORM),
        };
        let classifier = FormClassifier::train(&labeled, &self.classifier)?;
        Ok(Arc::new(Decomposer::new(sentiment, classifier, lexicon)))
    }
}
