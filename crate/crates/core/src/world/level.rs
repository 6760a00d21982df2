use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::class::{Color, Corner, LatentCell, Magnitude, ObjectClass, Shape, Sign};
use super::reward::{CellTable, RewardFunction};
use crate::error::{Error, Result};
use crate::rng;

pub const OBJECTS_PER_LEVEL: usize = 20;
pub const OBJECTS_PER_CORNER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "ObjectRecord", into = "ObjectRecord")]
pub struct WorldObject {
    pub object_id: u32,
    pub corner: Corner,
    pub value: i32,
    pub cell: LatentCell,
}

impl WorldObject {
    pub fn class(&self, rf: &RewardFunction) -> ObjectClass {
        rf.class_of(self.cell)
    }
}

/// On-disk object shape. `sign`/`magnitude` are optional on input and are
/// recovered from the value with the default cell table when absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ObjectRecord {
    object_id: u32,
    corner: Corner,
    value: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sign: Option<Sign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    magnitude: Option<Magnitude>,
}

impl From<ObjectRecord> for WorldObject {
    fn from(r: ObjectRecord) -> Self {
        let derived = CellTable::default().cell_of_value(r.value).unwrap_or(LatentCell {
            sign: Sign::of_value(r.value),
            magnitude: Magnitude::Low,
        });
        WorldObject {
            object_id: r.object_id,
            corner: r.corner,
            value: r.value,
            cell: LatentCell {
                sign: r.sign.unwrap_or(derived.sign),
                magnitude: r.magnitude.unwrap_or(derived.magnitude),
            },
        }
    }
}

impl From<WorldObject> for ObjectRecord {
    fn from(o: WorldObject) -> Self {
        ObjectRecord {
            object_id: o.object_id,
            corner: o.corner,
            value: o.value,
            sign: Some(o.cell.sign),
            magnitude: Some(o.cell.magnitude),
        }
    }
}

/// A level: 20 objects with latent values, five per corner. Levels are
/// independent of the reward function; the function only decides how each
/// object is displayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub level_id: u32,
    pub objects: Vec<WorldObject>,
}

impl Level {
    /// The corner's objects sorted by id.
    pub fn corner_objects(&self, corner: Corner) -> Vec<&WorldObject> {
        let mut objs: Vec<_> = self.objects.iter().filter(|o| o.corner == corner).collect();
        objs.sort_by_key(|o| o.object_id);
        objs
    }

    pub fn object(&self, object_id: u32) -> Option<&WorldObject> {
        self.objects.iter().find(|o| o.object_id == object_id)
    }

    /// Best achievable true value over all trajectories.
    pub fn best_value(&self) -> i64 {
        Corner::ALL
            .iter()
            .map(|&c| {
                let values: Vec<i64> = self
                    .corner_objects(c)
                    .iter()
                    .map(|o| o.value as i64)
                    .collect();
                let positive: i64 = values.iter().filter(|&&v| v > 0).sum();
                if positive > 0 {
                    positive
                } else {
                    values.iter().copied().max().unwrap_or(i64::MIN)
                }
            })
            .max()
            .unwrap_or(i64::MIN)
    }

    pub fn validate(&self, table: &CellTable) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLevel(format!("level {}: {msg}", self.level_id)));
        if self.objects.len() != OBJECTS_PER_LEVEL {
            return bad(format!("{} objects, expected {OBJECTS_PER_LEVEL}", self.objects.len()));
        }
        let ids: HashSet<_> = self.objects.iter().map(|o| o.object_id).collect();
        if ids.len() != self.objects.len() {
            return bad("duplicate object ids".into());
        }
        for c in Corner::ALL {
            let n = self.objects.iter().filter(|o| o.corner == c).count();
            if n != OBJECTS_PER_CORNER {
                return bad(format!("corner {c} has {n} objects"));
            }
        }
        for o in &self.objects {
            let iv = table.interval(o.cell);
            if !iv.contains(o.value) {
                return bad(format!(
                    "object {} value {} outside its cell [{}, {}]",
                    o.object_id, o.value, iv.lo, iv.hi
                ));
            }
        }
        Ok(())
    }

    pub fn learner_view(&self, rf: &RewardFunction) -> LearnerView {
        LearnerView {
            level_id: self.level_id,
            objects: self
                .objects
                .iter()
                .map(|o| {
                    let class = o.class(rf);
                    MaskedObject {
                        object_id: o.object_id,
                        corner: o.corner,
                        color: class.color,
                        shape: class.shape,
                    }
                })
                .collect(),
        }
    }

    pub fn teacher_view(&self, rf: &RewardFunction) -> TeacherView {
        TeacherView {
            level_id: self.level_id,
            objects: self
                .objects
                .iter()
                .map(|o| {
                    let class = o.class(rf);
                    TeacherObject {
                        object_id: o.object_id,
                        corner: o.corner,
                        color: class.color,
                        shape: class.shape,
                        value: o.value,
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedObject {
    pub object_id: u32,
    pub corner: Corner,
    pub color: Color,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherObject {
    pub object_id: u32,
    pub corner: Corner,
    pub color: Color,
    pub shape: Shape,
    pub value: i32,
}

/// What the learner sees: appearances only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerView {
    pub level_id: u32,
    pub objects: Vec<MaskedObject>,
}

/// What the teacher sees: appearances and values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherView {
    pub level_id: u32,
    pub objects: Vec<TeacherObject>,
}

/// Masks a level under `rf`, returning the learner's view.
pub fn mask(level: &Level, rf: &RewardFunction) -> LearnerView {
    level.learner_view(rf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelConfig {
    /// Sampling weight of each latent cell, `[sign][magnitude]`.
    pub cell_weights: [[f64; 3]; 3],
    pub table: CellTable,
    pub max_attempts: u32,
}

impl Default for LevelConfig {
    fn default() -> Self {
        LevelConfig {
            cell_weights: [[1.0; 3]; 3],
            table: CellTable::default(),
            max_attempts: 10_000,
        }
    }
}

/// Generates a level deterministically from `seed`, resampling until the
/// best trajectory value is strictly positive.
pub fn generate_level(level_id: u32, seed: u64, config: &LevelConfig) -> Result<Level> {
    config.table.validate()?;
    let cells: Vec<LatentCell> = Sign::ALL
        .into_iter()
        .flat_map(|sign| Magnitude::ALL.into_iter().map(move |magnitude| LatentCell { sign, magnitude }))
        .collect();
    let weights: Vec<f64> = cells
        .iter()
        .map(|c| config.cell_weights[c.sign.ordinal()][c.magnitude.ordinal()])
        .collect();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Config("cell weights must be finite and non-negative".into()));
    }
    let can_be_positive = cells
        .iter()
        .zip(&weights)
        .any(|(c, &w)| w > 0.0 && config.table.interval(*c).hi > 0);
    if !can_be_positive {
        return Err(Error::GenerationImpossible(
            "no sampleable cell has a positive value".into(),
        ));
    }
    let dist = WeightedIndex::new(&weights)
        .map_err(|e| Error::Config(format!("cell weights: {e}")))?;

    let mut rng = rng::stream(seed, &[level_id as u64]);
    for _ in 0..config.max_attempts {
        let objects = (0..OBJECTS_PER_LEVEL)
            .map(|j| {
                let cell = cells[dist.sample(&mut rng)];
                let iv = config.table.interval(cell);
                WorldObject {
                    object_id: j as u32,
                    corner: Corner::ALL[j / OBJECTS_PER_CORNER],
                    value: rng.random_range(iv.lo..=iv.hi),
                    cell,
                }
            })
            .collect();
        let level = Level { level_id, objects };
        if level.best_value() > 0 {
            return Ok(level);
        }
    }
    Err(Error::GenerationImpossible(format!(
        "no level with positive best value after {} attempts",
        config.max_attempts
    )))
}

/// Generates `count` levels with ids `first_id..first_id + count`.
pub fn generate_levels(first_id: u32, count: u32, seed: u64, config: &LevelConfig) -> Result<Vec<Level>> {
    (first_id..first_id + count)
        .map(|id| generate_level(id, seed, config))
        .collect()
}

pub fn read_levels(path: &Path) -> Result<Vec<Level>> {
    let reader = BufReader::new(File::open(path)?);
    let mut levels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let level: Level =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        level
            .validate(&CellTable::default())
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        levels.push(level);
    }
    Ok(levels)
}

pub fn write_levels(path: &Path, levels: &[Level]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for level in levels {
        serde_json::to_writer(&mut w, level)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
