use serde::{Deserialize, Serialize};

use super::class::Corner;
use super::level::{Level, WorldObject, OBJECTS_PER_CORNER};
use super::reward::RewardFunction;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};

pub const TRAJECTORIES_PER_CORNER: usize = (1 << OBJECTS_PER_CORNER) - 1;
pub const TRAJECTORIES_PER_LEVEL: usize = 4 * TRAJECTORIES_PER_CORNER;

/// One corner plus a non-empty subset of its objects, ids ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trajectory {
    pub corner: Corner,
    pub object_ids: Vec<u32>,
}

impl Trajectory {
    pub fn new(corner: Corner, mut object_ids: Vec<u32>) -> Self {
        object_ids.sort_unstable();
        Trajectory { corner, object_ids }
    }

    pub fn objects<'a>(&'a self, level: &'a Level) -> impl Iterator<Item = &'a WorldObject> + 'a {
        self.object_ids.iter().filter_map(move |id| level.object(*id))
    }

    pub fn validate(&self, level: &Level) -> Result<()> {
        let n = self.object_ids.len();
        if n == 0 || n > OBJECTS_PER_CORNER {
            return Err(Error::InvalidTrajectory(format!("{n} objects")));
        }
        if self.object_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTrajectory("object ids not strictly ascending".into()));
        }
        for id in &self.object_ids {
            match level.object(*id) {
                Some(o) if o.corner == self.corner => {}
                Some(o) => {
                    return Err(Error::InvalidTrajectory(format!(
                        "object {id} is in {} not {}",
                        o.corner, self.corner
                    )))
                }
                None => {
                    return Err(Error::InvalidTrajectory(format!(
                        "object {id} not in level {}",
                        level.level_id
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Per-class tally of a set of objects under `rf`.
pub fn feature_counts<'a, I>(objects: I, rf: &RewardFunction) -> FeatureVector
where
    I: IntoIterator<Item = &'a WorldObject>,
{
    let mut n = FeatureVector::zeros();
    for o in objects {
        n[o.class(rf).index()] += 1.0;
    }
    n
}

pub fn trajectory_counts(tau: &Trajectory, level: &Level, rf: &RewardFunction) -> FeatureVector {
    feature_counts(tau.objects(level), rf)
}

/// `w · n(τ)`.
pub fn trajectory_value(w: &FeatureVector, tau: &Trajectory, level: &Level, rf: &RewardFunction) -> f64 {
    w.dot(&trajectory_counts(tau, level, rf))
}

/// Sum of the latent object values collected by `tau`.
pub fn true_value(tau: &Trajectory, level: &Level) -> i64 {
    tau.objects(level).map(|o| o.value as i64).sum()
}

/// All 124 trajectories in canonical order: corners TL, TR, BL, BR; within a
/// corner, subsets by ascending bitmask over the id-sorted objects.
pub fn enumerate_trajectories(level: &Level) -> Vec<Trajectory> {
    let mut out = Vec::with_capacity(TRAJECTORIES_PER_LEVEL);
    for corner in Corner::ALL {
        let objs = level.corner_objects(corner);
        for mask in 1..(1u32 << objs.len()) {
            let ids = objs
                .iter()
                .enumerate()
                .filter(|(j, _)| mask >> j & 1 == 1)
                .map(|(_, o)| o.object_id)
                .collect();
            out.push(Trajectory { corner, object_ids: ids });
        }
    }
    out
}

/// Feature counts of every canonical trajectory, in canonical order.
fn all_counts(level: &Level, rf: &RewardFunction) -> Vec<(Corner, u32, [f64; NUM_FEATURES])> {
    let mut out = Vec::with_capacity(TRAJECTORIES_PER_LEVEL);
    for corner in Corner::ALL {
        let classes: Vec<usize> = level
            .corner_objects(corner)
            .iter()
            .map(|o| o.class(rf).index())
            .collect();
        for mask in 1..(1u32 << classes.len()) {
            let mut n = [0.0; NUM_FEATURES];
            for (j, &k) in classes.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    n[k] += 1.0;
                }
            }
            out.push((corner, mask, n));
        }
    }
    out
}

/// Argmax of `w · n(τ)` over all trajectories; ties go to the first
/// maximizer in canonical order.
pub fn best_trajectory(w: &FeatureVector, level: &Level, rf: &RewardFunction) -> Trajectory {
    let mut best: Option<(f64, Corner, u32)> = None;
    for (corner, mask, n) in all_counts(level, rf) {
        let v = w.dot(&FeatureVector(n));
        if best.is_none_or(|(b, _, _)| v > b) {
            best = Some((v, corner, mask));
        }
    }
    let (_, corner, mask) = best.expect("a level has at least one trajectory");
    let ids = level
        .corner_objects(corner)
        .iter()
        .enumerate()
        .filter(|(j, _)| mask >> j & 1 == 1)
        .map(|(_, o)| o.object_id)
        .collect();
    Trajectory { corner, object_ids: ids }
}

/// `100 · true_value(τ) / best_value(level)`. Can be negative.
pub fn normalized_score(tau: &Trajectory, level: &Level) -> Result<f64> {
    let best = level.best_value();
    if best <= 0 {
        return Err(Error::UndefinedNormalization {
            level_id: level.level_id,
            best,
        });
    }
    Ok(100.0 * true_value(tau, level) as f64 / best as f64)
}
