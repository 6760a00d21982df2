use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EpisodeRecord;
use crate::error::{Error, Result};
use crate::rng;
use crate::world::NUM_REWARD_FUNCTIONS;

pub const NUM_FOLDS: usize = 10;
/// Reward functions held out per fold. 36 split 8-1-1 rounds to 29/3/4.
pub const VALIDATE_RFS: usize = 3;
pub const TEST_RFS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Validate,
    Test,
}

/// One fold's partition of teachers and of reward functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub fold_id: u32,
    pub train_teachers: BTreeSet<String>,
    pub validate_teachers: BTreeSet<String>,
    pub test_teachers: BTreeSet<String>,
    pub train_rfs: BTreeSet<u32>,
    pub validate_rfs: BTreeSet<u32>,
    pub test_rfs: BTreeSet<u32>,
}

impl SplitPlan {
    /// An episode belongs to a partition only when both its teacher and its
    /// reward function do; mixed episodes are left out of the fold.
    pub fn assign(&self, r: &EpisodeRecord) -> Option<Partition> {
        let t = &r.teacher_id;
        let f = &r.reward_fn_id;
        if self.train_teachers.contains(t) && self.train_rfs.contains(f) {
            Some(Partition::Train)
        } else if self.validate_teachers.contains(t) && self.validate_rfs.contains(f) {
            Some(Partition::Validate)
        } else if self.test_teachers.contains(t) && self.test_rfs.contains(f) {
            Some(Partition::Test)
        } else {
            None
        }
    }

    pub fn select<'a>(&self, records: &'a [EpisodeRecord], part: Partition) -> Vec<&'a EpisodeRecord> {
        records.iter().filter(|r| self.assign(r) == Some(part)).collect()
    }
}

/// Ten folds. Teachers are shuffled into ten groups; fold k tests group k,
/// validates on group k+1 and trains on the rest. Reward functions are
/// shuffled once and fold k takes a sliding window of 4 test and 3
/// validation functions, so every function is tested at least once.
pub fn make_splits(records: &[EpisodeRecord], seed: u64) -> Result<Vec<SplitPlan>> {
    let teachers: BTreeSet<String> = records.iter().map(|r| r.teacher_id.clone()).collect();
    if teachers.len() < NUM_FOLDS {
        return Err(Error::Split(format!("need at least {NUM_FOLDS} teachers, found {}", teachers.len())));
    }
    let rfs: BTreeSet<u32> = records.iter().map(|r| r.reward_fn_id).collect();
    if rfs.len() != NUM_REWARD_FUNCTIONS as usize {
        return Err(Error::Split(format!(
            "need all {NUM_REWARD_FUNCTIONS} reward functions, found {}; augment first",
            rfs.len()
        )));
    }
    let mut teachers: Vec<String> = teachers.into_iter().collect();
    teachers.shuffle(&mut rng::stream(seed, &[0x5B1, 0]));
    let groups: Vec<BTreeSet<String>> = (0..NUM_FOLDS)
        .map(|g| teachers.iter().skip(g).step_by(NUM_FOLDS).cloned().collect())
        .collect();
    let mut rf_order: Vec<u32> = rfs.into_iter().collect();
    rf_order.shuffle(&mut rng::stream(seed, &[0x5B1, 1]));
    let n = rf_order.len();

    Ok((0..NUM_FOLDS)
        .map(|k| {
            let test_teachers = groups[k].clone();
            let validate_teachers = groups[(k + 1) % NUM_FOLDS].clone();
            let train_teachers = (0..NUM_FOLDS)
                .filter(|g| *g != k && *g != (k + 1) % NUM_FOLDS)
                .flat_map(|g| groups[g].iter().cloned())
                .collect();
            let at = |i: usize| rf_order[(k * TEST_RFS + i) % n];
            let test_rfs: BTreeSet<u32> = (0..TEST_RFS).map(at).collect();
            let validate_rfs: BTreeSet<u32> = (TEST_RFS..TEST_RFS + VALIDATE_RFS).map(at).collect();
            let train_rfs = rf_order
                .iter()
                .copied()
                .filter(|f| !test_rfs.contains(f) && !validate_rfs.contains(f))
                .collect();
            SplitPlan {
                fold_id: k as u32,
                train_teachers,
                validate_teachers,
                test_teachers,
                train_rfs,
                validate_rfs,
                test_rfs,
            }
        })
        .collect())
}
