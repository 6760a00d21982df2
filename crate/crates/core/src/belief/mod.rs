//! Gaussian belief over reward weights and the literal and pragmatic
//! learners built on it.

use nalgebra::{Cholesky, SMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, Vector9, NUM_FEATURES};
use crate::feedback::{Decomposer, FeedbackForm, FeedbackObservation, UtteranceParse};
use crate::rng;
use crate::world::{best_trajectory, Level, RewardFunction, Trajectory};

pub type Matrix9 = SMatrix<f64, NUM_FEATURES, NUM_FEATURES>;

pub const PRIOR_VARIANCE: f64 = 25.0;
pub const OBS_NOISE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub mu: Vector9,
    pub sigma: Matrix9,
    pub obs_noise: f64,
    pub episode_index: u32,
}

impl Default for BeliefState {
    fn default() -> Self {
        Self::prior(PRIOR_VARIANCE, OBS_NOISE)
    }
}

impl BeliefState {
    pub fn prior(variance: f64, obs_noise: f64) -> Self {
        Self {
            mu: Vector9::zeros(),
            sigma: Matrix9::identity() * variance,
            obs_noise,
            episode_index: 0,
        }
    }

    pub fn mean(&self) -> FeatureVector {
        FeatureVector::from_vector(&self.mu)
    }

    pub fn variances(&self) -> FeatureVector {
        FeatureVector::from_vector(&self.sigma.diagonal())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.obs_noise > 0.0) {
            return Err(Error::NumericalDegeneracy(format!("obs_noise {} is not positive", self.obs_noise)));
        }
        if self.mu.iter().chain(self.sigma.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NumericalDegeneracy("non-finite belief entry".into()));
        }
        if self.sigma != self.sigma.transpose() {
            return Err(Error::NumericalDegeneracy("covariance is not symmetric".into()));
        }
        if Cholesky::new(self.sigma).is_none() {
            return Err(Error::NumericalDegeneracy("covariance is not positive definite".into()));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.sigma.symmetric_eigenvalues().min()
    }

    pub fn snapshot(&self) -> BeliefSnapshot {
        BeliefSnapshot {
            episode_index: self.episode_index,
            mu: self.mu.iter().copied().collect(),
            sigma: (0..NUM_FEATURES)
                .flat_map(|r| (0..NUM_FEATURES).map(move |c| (r, c)))
                .map(|(r, c)| self.sigma[(r, c)])
                .collect(),
            obs_noise: self.obs_noise,
        }
    }

    pub fn from_snapshot(s: &BeliefSnapshot) -> Result<Self> {
        if s.mu.len() != NUM_FEATURES || s.sigma.len() != NUM_FEATURES * NUM_FEATURES {
            return Err(Error::NumericalDegeneracy(format!(
                "snapshot has {} means and {} covariance entries",
                s.mu.len(),
                s.sigma.len()
            )));
        }
        let b = Self {
            mu: Vector9::from_column_slice(&s.mu),
            sigma: Matrix9::from_row_slice(&s.sigma),
            obs_noise: s.obs_noise,
            episode_index: s.episode_index,
        };
        b.validate()?;
        Ok(b)
    }
}

/// Serialized belief. `sigma` is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSnapshot {
    pub episode_index: u32,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub obs_noise: f64,
}

/// Conjugate update for one observation `zeta ~ N(f·w, obs_noise)`.
///
/// Uses the rank-one gain form with the Joseph covariance update and then
/// symmetrizes, so long chains keep a positive definite covariance.
pub fn bayes_update(b: &BeliefState, f: &FeatureVector, zeta: f64) -> Result<BeliefState> {
    let f = f.to_vector();
    let sf = b.sigma * f;
    let s = f.dot(&sf) + b.obs_noise;
    let k = sf / s;
    let innovation = zeta - f.dot(&b.mu);
    let mu = b.mu + k * innovation;
    let a = Matrix9::identity() - k * f.transpose();
    let mut sigma = a * b.sigma * a.transpose() + k * k.transpose() * b.obs_noise;
    sigma = (sigma + sigma.transpose()) * 0.5;
    let next = BeliefState { mu, sigma, obs_noise: b.obs_noise, episode_index: b.episode_index };
    next.validate()?;
    Ok(next)
}

pub fn observe(b: &BeliefState, obs: &FeedbackObservation) -> Result<BeliefState> {
    bayes_update(b, &obs.f, obs.zeta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PragmaticConfig {
    /// Sentiment assumed for grounded utterances that score exactly zero.
    pub default_zeta: f64,
    /// Sentiment of the follow-up update on features the utterance left out.
    pub decay_zeta: f64,
    pub neutral_default: bool,
    pub decay: bool,
    pub decay_after_evaluative: bool,
}

impl Default for PragmaticConfig {
    fn default() -> Self {
        Self {
            default_zeta: 15.0,
            decay_zeta: -30.0,
            neutral_default: true,
            decay: true,
            decay_after_evaluative: true,
        }
    }
}

impl PragmaticConfig {
    pub fn disabled() -> Self {
        Self { neutral_default: false, decay: false, decay_after_evaluative: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.decay_zeta > 0.0 {
            return Err(Error::Config(format!("decay_zeta {} must not be positive", self.decay_zeta)));
        }
        Ok(())
    }
}

/// One Bayesian update as actually applied, for transcripts and the UI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedUpdate {
    pub f: FeatureVector,
    pub zeta: f64,
    pub form: FeedbackForm,
    pub kind: UpdateKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    Observation,
    NeutralDefault,
    Decay,
}

/// L1-normalized indicator of the features `f` leaves at zero.
pub fn complement(f: &FeatureVector) -> Option<FeatureVector> {
    let mut c = FeatureVector::zeros();
    for i in 0..NUM_FEATURES {
        if f[i] == 0.0 {
            c[i] = 1.0;
        }
    }
    c.l1_normalized()
}

/// Applies observations in order. `None` is the literal learner.
pub fn apply_observations(
    b: &BeliefState,
    observations: &[FeedbackObservation],
    pragmatic: Option<&PragmaticConfig>,
) -> Result<(BeliefState, Vec<AppliedUpdate>)> {
    let mut state = b.clone();
    let mut log = Vec::new();
    for obs in observations {
        let Some(cfg) = pragmatic else {
            state = observe(&state, obs)?;
            log.push(AppliedUpdate { f: obs.f, zeta: obs.zeta, form: obs.form, kind: UpdateKind::Observation });
            continue;
        };
        let (zeta, kind) = if cfg.neutral_default && obs.zeta == 0.0 {
            (cfg.default_zeta, UpdateKind::NeutralDefault)
        } else {
            (obs.zeta, UpdateKind::Observation)
        };
        state = bayes_update(&state, &obs.f, zeta)?;
        log.push(AppliedUpdate { f: obs.f, zeta, form: obs.form, kind });
        let decays = cfg.decay && (obs.form != FeedbackForm::Evaluative || cfg.decay_after_evaluative);
        if decays {
            if let Some(rest) = complement(&obs.f) {
                state = bayes_update(&state, &rest, cfg.decay_zeta)?;
                log.push(AppliedUpdate { f: rest, zeta: cfg.decay_zeta, form: obs.form, kind: UpdateKind::Decay });
            }
        }
    }
    Ok((state, log))
}

fn observations_of(parses: &[UtteranceParse]) -> Vec<FeedbackObservation> {
    parses.iter().filter_map(UtteranceParse::observation).collect()
}

pub fn literal_update(
    b: &BeliefState,
    message: &str,
    tau_prev: &Trajectory,
    level: &Level,
    rf: &RewardFunction,
    decomposer: &Decomposer,
) -> Result<BeliefState> {
    let parses = decomposer.parse_messages(&[message], tau_prev, level, rf)?;
    Ok(apply_observations(b, &observations_of(&parses), None)?.0)
}

pub fn pragmatic_update(
    b: &BeliefState,
    message: &str,
    tau_prev: &Trajectory,
    level: &Level,
    rf: &RewardFunction,
    decomposer: &Decomposer,
    cfg: &PragmaticConfig,
) -> Result<BeliefState> {
    let parses = decomposer.parse_messages(&[message], tau_prev, level, rf)?;
    Ok(apply_observations(b, &observations_of(&parses), Some(cfg))?.0)
}

/// One draw from N(mu, sigma).
pub fn sample_weights_with<R: Rng>(b: &BeliefState, rng: &mut R) -> Result<FeatureVector> {
    let chol = Cholesky::new(b.sigma)
        .ok_or_else(|| Error::NumericalDegeneracy("covariance is not positive definite".into()))?;
    let z = Vector9::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(FeatureVector::from_vector(&(b.mu + chol.l() * z)))
}

pub fn sample_weights(b: &BeliefState, seed: u64) -> Result<FeatureVector> {
    sample_weights_with(b, &mut rng::stream(seed, &[0xBE11EF]))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionPolicy {
    #[default]
    Thompson,
    /// Acts on the posterior mean.
    Greedy,
}

pub fn act(b: &BeliefState, level: &Level, rf: &RewardFunction, seed: u64, policy: ActionPolicy) -> Result<Trajectory> {
    let w = match policy {
        ActionPolicy::Thompson => sample_weights(b, seed)?,
        ActionPolicy::Greedy => b.mean(),
    };
    Ok(best_trajectory(&w, level, rf))
}
