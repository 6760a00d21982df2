use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::Config;
use crate::belief::{self, ActionPolicy, AppliedUpdate, BeliefSnapshot, BeliefState, PragmaticConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};
use crate::feedback::{Decomposer, UtteranceParse};
use crate::neural::{tokenize, InferenceNet, NetBelief};
use crate::rng;
use crate::world::{best_trajectory, trajectory_counts, Level, RewardFunction, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Literal,
    Pragmatic,
    Neural,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::Literal, LearnerKind::Pragmatic, LearnerKind::Neural];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Literal => "literal",
            LearnerKind::Pragmatic => "pragmatic",
            LearnerKind::Neural => "neural",
        }
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "literal" => Ok(LearnerKind::Literal),
            "pragmatic" => Ok(LearnerKind::Pragmatic),
            "neural" | "inference" => Ok(LearnerKind::Neural),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum LearnerBelief {
    Gaussian(BeliefSnapshot),
    Net(NetBelief),
}

/// What one round of feedback did to the learner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObserveTrace {
    /// Per-utterance parses. Empty for the neural learner.
    pub parses: Vec<UtteranceParse>,
    pub applied: Vec<AppliedUpdate>,
    /// Neural learner only: the network's weight estimate.
    pub net_output: Option<FeatureVector>,
    pub mean_before: FeatureVector,
    pub mean_after: FeatureVector,
}

#[derive(Debug, Clone)]
enum State {
    Gaussian(BeliefState),
    Net(NetBelief),
}

/// One learner with its own belief chain.
#[derive(Debug, Clone)]
pub struct LearnerHandle {
    kind: LearnerKind,
    state: State,
    pragmatic: PragmaticConfig,
    policy: ActionPolicy,
    decomposer: Arc<Decomposer>,
    net: Option<Arc<InferenceNet>>,
    seed: u64,
}

const ACT_TAG: u64 = 0xAC7;

impl LearnerHandle {
    /// `net` is required for the neural learner and ignored otherwise.
    pub fn new(kind: LearnerKind, config: &Config, decomposer: Arc<Decomposer>, net: Option<Arc<InferenceNet>>, seed: u64) -> Result<Self> {
        let (pv, noise) = (config.belief.prior_variance, config.belief.obs_noise);
        let state = match kind {
            LearnerKind::Neural => {
                if net.is_none() {
                    return Err(Error::NotReady { what: "neural learner", why: "no inference-net checkpoint".into() });
                }
                State::Net(NetBelief::prior(pv, noise))
            }
            _ => State::Gaussian(BeliefState::prior(pv, noise)),
        };
        Ok(Self {
            kind,
            state,
            pragmatic: config.pragmatic,
            policy: config.belief.policy,
            decomposer,
            net: if kind == LearnerKind::Neural { net } else { None },
            seed,
        })
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean(&self) -> FeatureVector {
        match &self.state {
            State::Gaussian(b) => b.mean(),
            State::Net(b) => b.mean,
        }
    }

    pub fn std_devs(&self) -> FeatureVector {
        let v = match &self.state {
            State::Gaussian(b) => b.variances(),
            State::Net(b) => b.var,
        };
        FeatureVector(v.0.map(f64::sqrt))
    }

    pub fn belief(&self) -> LearnerBelief {
        match &self.state {
            State::Gaussian(b) => LearnerBelief::Gaussian(b.snapshot()),
            State::Net(b) => LearnerBelief::Net(*b),
        }
    }

    pub fn gaussian(&self) -> Option<&BeliefState> {
        match &self.state {
            State::Gaussian(b) => Some(b),
            State::Net(_) => None,
        }
    }

    /// Thompson (or greedy) action. `tag` keys the draw, so the same tag
    /// reproduces the same action from the same belief.
    pub fn act(&self, level: &Level, rf: &RewardFunction, tag: &[u64]) -> Result<Trajectory> {
        let mut path = vec![ACT_TAG];
        path.extend_from_slice(tag);
        let mut r = rng::stream(self.seed, &path);
        let w = match (&self.state, self.policy) {
            (State::Gaussian(b), ActionPolicy::Greedy) => b.mean(),
            (State::Gaussian(b), ActionPolicy::Thompson) => belief::sample_weights_with(b, &mut r)?,
            (State::Net(b), ActionPolicy::Greedy) => b.mean,
            (State::Net(b), ActionPolicy::Thompson) => {
                let mut w = b.mean;
                for k in 0..NUM_FEATURES {
                    w[k] += b.var[k].sqrt() * r.sample::<f64, _>(StandardNormal);
                }
                w
            }
        };
        Ok(best_trajectory(&w, level, rf))
    }

    /// Updates on feedback about `tau` in `level`. An empty message list is a
    /// no-op.
    pub fn observe<S: AsRef<str>>(&mut self, messages: &[S], tau: &Trajectory, level: &Level, rf: &RewardFunction) -> Result<ObserveTrace> {
        let mean_before = self.mean();
        let mut trace = ObserveTrace {
            parses: Vec::new(),
            applied: Vec::new(),
            net_output: None,
            mean_before,
            mean_after: mean_before,
        };
        match &mut self.state {
            State::Gaussian(b) => {
                let parses = self.decomposer.parse_messages(messages, tau, level, rf)?;
                let obs: Vec<_> = parses.iter().filter_map(UtteranceParse::observation).collect();
                let prag = (self.kind == LearnerKind::Pragmatic).then_some(&self.pragmatic);
                let (next, applied) = belief::apply_observations(b, &obs, prag)?;
                *b = next;
                b.episode_index += 1;
                trace.parses = parses;
                trace.applied = applied;
            }
            State::Net(b) => {
                let text = messages.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
                let tokens = tokenize(&text);
                if !tokens.is_empty() {
                    let net = self.net.as_ref().expect("neural learner holds a net");
                    let w_hat = net.forward(&tokens, &trajectory_counts(tau, level, rf));
                    *b = b.update(&w_hat);
                    trace.net_output = Some(w_hat);
                }
            }
        }
        trace.mean_after = self.mean();
        Ok(trace)
    }
}
