//! Teaching episodes on disk: validation, score balancing, reward-function
//! augmentation, cross-validation plans and feedback-form statistics.
//!
//! The episode file is JSON lines. The first line is a header
//! `{"format": "langreward-episodes", "version": 1}`; every further line is
//! one [`EpisodeRecord`].

mod augment;
mod convert;
mod splits;
mod stats;

pub use augment::{augment, augment_all, rewrite_text};
pub use convert::{convert_csv, CSV_COLUMNS};
pub use splits::{make_splits, Partition, SplitPlan, NUM_FOLDS};
pub use stats::{form_statistics, FormFractions, FormStatistics};

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::world::{true_value, Level, RewardFunction, Trajectory, NUM_REWARD_FUNCTIONS};

pub const FORMAT_NAME: &str = "langreward-episodes";
pub const FORMAT_VERSION: u32 = 1;
pub const EPISODES_PER_GAME: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub teacher_id: String,
    pub pair_id: String,
    /// 1-based.
    pub episode_index: u32,
    pub level_id: u32,
    pub reward_fn_id: u32,
    pub trajectory: Trajectory,
    pub messages: Vec<String>,
    pub score: i64,
    #[serde(default)]
    pub bonus_visible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

/// Levels by id.
pub type LevelTable = HashMap<u32, Level>;

pub fn level_table(levels: impl IntoIterator<Item = Level>) -> LevelTable {
    levels.into_iter().map(|l| (l.level_id, l)).collect()
}

impl EpisodeRecord {
    pub fn reward_function(&self) -> Result<RewardFunction> {
        RewardFunction::from_id(self.reward_fn_id)
    }

    pub fn validate(&self, levels: &LevelTable) -> Result<()> {
        if !(1..=EPISODES_PER_GAME).contains(&self.episode_index) {
            return Err(Error::InvalidLevel(format!("episode index {} outside 1..=10", self.episode_index)));
        }
        if self.reward_fn_id >= NUM_REWARD_FUNCTIONS {
            return Err(Error::InvalidRewardFunction(self.reward_fn_id));
        }
        let level = levels
            .get(&self.level_id)
            .ok_or_else(|| Error::InvalidLevel(format!("unknown level_id {}", self.level_id)))?;
        self.trajectory.validate(level)?;
        let recomputed = true_value(&self.trajectory, level);
        if recomputed != self.score {
            return Err(Error::InvalidTrajectory(format!(
                "stored score {} but trajectory is worth {recomputed}",
                self.score
            )));
        }
        Ok(())
    }
}

/// Reads and validates an episode file. Diagnostics carry 1-based line
/// numbers.
pub fn ingest(path: &Path, levels: &LevelTable) -> Result<Vec<EpisodeRecord>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    let mut saw_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            let h: Header = serde_json::from_str(&line).map_err(|e| Error::parse(path, n, format!("bad header: {e}")))?;
            if h.format != FORMAT_NAME || h.version != FORMAT_VERSION {
                return Err(Error::parse(path, n, format!("unsupported format {} v{}", h.format, h.version)));
            }
            saw_header = true;
            continue;
        }
        let rec: EpisodeRecord = serde_json::from_str(&line).map_err(|e| Error::parse(path, n, e.to_string()))?;
        rec.validate(levels).map_err(|e| Error::parse(path, n, e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn export(path: &Path, records: &[EpisodeRecord]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_records(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn write_records<W: Write>(w: &mut W, records: &[EpisodeRecord]) -> Result<()> {
    let header = Header { format: FORMAT_NAME.into(), version: FORMAT_VERSION };
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Keeps every non-positive episode and a uniform sample of the positive
/// ones, as many as there are negative ones. Input order is preserved.
pub fn downsample_balance(records: &[EpisodeRecord], seed: u64) -> Vec<EpisodeRecord> {
    let positive: Vec<usize> = (0..records.len()).filter(|i| records[*i].score > 0).collect();
    let negatives = records.iter().filter(|r| r.score < 0).count();
    let mut keep = vec![true; records.len()];
    if positive.len() > negatives {
        positive.iter().for_each(|i| keep[*i] = false);
        let mut rng = rng::stream(seed, &[0xD0_5A]);
        for j in sample(&mut rng, positive.len(), negatives) {
            keep[positive[j]] = true;
        }
    }
    records.iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r.clone()).collect()
}
