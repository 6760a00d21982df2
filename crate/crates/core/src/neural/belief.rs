use serde::{Deserialize, Serialize};

use crate::belief::{OBS_NOISE, PRIOR_VARIANCE};
use crate::features::{FeatureVector, NUM_FEATURES};

/// Independent Gaussian per feature, updated with network outputs as
/// observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetBelief {
    pub mean: FeatureVector,
    pub var: FeatureVector,
    pub obs_noise: f64,
}

impl Default for NetBelief {
    fn default() -> Self {
        Self::prior(PRIOR_VARIANCE, OBS_NOISE)
    }
}

impl NetBelief {
    pub fn prior(variance: f64, obs_noise: f64) -> Self {
        Self {
            mean: FeatureVector::zeros(),
            var: FeatureVector([variance; NUM_FEATURES]),
            obs_noise,
        }
    }

    pub fn update(&self, w_hat: &FeatureVector) -> NetBelief {
        let mut next = *self;
        for k in 0..NUM_FEATURES {
            let gain = self.var[k] / (self.var[k] + self.obs_noise);
            next.mean[k] = self.mean[k] + gain * (w_hat[k] - self.mean[k]);
            next.var[k] = self.var[k] * self.obs_noise / (self.var[k] + self.obs_noise);
        }
        next
    }
}
