//! Adapter from a flat CSV export of a teaching study into episode records.
//!
//! Expected header (column order free, extra columns ignored):
//!
//! | column | content |
//! |---|---|
//! | `pair_id` | game identifier |
//! | `teacher_id` | teacher identifier |
//! | `episode` | 1-based episode index |
//! | `level_id` | level identifier for the level file |
//! | `reward_fn_id` | 0-35 |
//! | `corner` | `TL`, `TR`, `BL` or `BR` |
//! | `collected` | space-separated object ids |
//! | `score` | integer score |
//! | `bonus_visible` | `true`/`false`/`1`/`0`, optional |
//! | `chat` | the teacher's messages, one per line |
//!
//! Rows describing practice rounds (`episode` = 0) are dropped.

use std::collections::HashMap;
use std::path::Path;

use super::{EpisodeRecord, LevelTable};
use crate::error::{Error, Result};
use crate::world::{Corner, Trajectory};

pub const CSV_COLUMNS: [&str; 10] = [
    "pair_id",
    "teacher_id",
    "episode",
    "level_id",
    "reward_fn_id",
    "corner",
    "collected",
    "score",
    "bonus_visible",
    "chat",
];

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "false" | "0" | "no" => Some(false),
        "true" | "1" | "yes" => Some(true),
        _ => None,
    }
}

/// Converts and validates. Line numbers in errors count the header as 1.
pub fn convert_csv(path: &Path, levels: &LevelTable) -> Result<Vec<EpisodeRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    let col: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    for required in CSV_COLUMNS.iter().filter(|c| **c != "bonus_visible") {
        if !col.contains_key(required) {
            return Err(Error::parse(path, 1, format!("missing column {required}")));
        }
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(path, line, e.to_string()))?;
        let get = |name: &str| col.get(name).and_then(|c| row.get(*c)).unwrap_or("").trim();
        let bad = |msg: String| Error::parse(path, line, msg);
        let num = |name: &str| -> Result<i64> {
            get(name).parse::<i64>().map_err(|e| bad(format!("{name}: {e}")))
        };
        let episode = num("episode")?;
        if episode == 0 {
            continue;
        }
        let corner: Corner = get("corner").parse().map_err(|_| bad(format!("bad corner {:?}", get("corner"))))?;
        let ids = get("collected")
            .split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|e| bad(format!("collected: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let rec = EpisodeRecord {
            teacher_id: get("teacher_id").to_string(),
            pair_id: get("pair_id").to_string(),
            episode_index: u32::try_from(episode).map_err(|e| bad(format!("episode: {e}")))?,
            level_id: u32::try_from(num("level_id")?).map_err(|e| bad(format!("level_id: {e}")))?,
            reward_fn_id: u32::try_from(num("reward_fn_id")?).map_err(|e| bad(format!("reward_fn_id: {e}")))?,
            trajectory: Trajectory::new(corner, ids),
            messages: get("chat").lines().map(str::trim).filter(|m| !m.is_empty()).map(String::from).collect(),
            score: num("score")?,
            bonus_visible: parse_bool(get("bonus_visible")).ok_or_else(|| bad("bad bonus_visible".into()))?,
        };
        rec.validate(levels).map_err(|e| bad(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}
