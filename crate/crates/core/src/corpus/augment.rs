use super::EpisodeRecord;
use crate::error::Result;
use crate::feedback::GroundingLexicon;
use crate::world::{Color, RewardFunction, Shape};

fn shape_surface(shape: Shape, plural: bool) -> &'static str {
    if plural {
        shape.plural()
    } else {
        shape.name()
    }
}

fn match_case(original: &str, replacement: &str) -> String {
    if original.chars().all(|c| !c.is_alphabetic() || c.is_uppercase()) && original.chars().count() > 1 {
        replacement.to_uppercase()
    } else if original.chars().next().is_some_and(char::is_uppercase) {
        let mut c = replacement.chars();
        c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
    } else {
        replacement.to_string()
    }
}

enum Feature {
    Color(Color),
    Shape(Shape, bool),
}

fn lookup(word: &str, lex: &GroundingLexicon) -> Option<Feature> {
    let key: String = word.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
    if key.is_empty() {
        return None;
    }
    if let Some(c) = lex.color(&key) {
        return Some(Feature::Color(c));
    }
    lex.shape(&key).map(|s| Feature::Shape(s, key.ends_with('s')))
}

fn rewrite_word(word: &str, source: &RewardFunction, target: &RewardFunction, lex: &GroundingLexicon) -> String {
    match lookup(word, lex) {
        Some(Feature::Color(c)) => match_case(word, source.map_color(target, c).name()),
        Some(Feature::Shape(s, plural)) => match_case(word, shape_surface(source.map_shape(target, s), plural)),
        None if word.contains('-') => word
            .split('-')
            .map(|part| rewrite_word(part, source, target, lex))
            .collect::<Vec<_>>()
            .join("-"),
        None => word.to_string(),
    }
}

/// Rewrites color and shape words so they name, under `target`, the same
/// latent cells they named under `source`. Replacements use the canonical
/// word; shape plurals are kept. Everything else is untouched.
pub fn rewrite_text(text: &str, source: &RewardFunction, target: &RewardFunction, lex: &GroundingLexicon) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if !word.is_empty() {
            out.push_str(&rewrite_word(word, source, target, lex));
            word.clear();
        }
    };
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '-' || ch == '\'' {
            word.push(ch);
        } else {
            flush(&mut word, &mut out);
            out.push(ch);
        }
    }
    flush(&mut word, &mut out);
    out
}

/// The same episode shown under another reward function. Levels store
/// latent values, so the trajectory and score carry over unchanged.
pub fn augment(record: &EpisodeRecord, target_rf_id: u32, lex: &GroundingLexicon) -> Result<EpisodeRecord> {
    let source = record.reward_function()?;
    let target = RewardFunction::from_id(target_rf_id)?;
    let mut out = record.clone();
    out.reward_fn_id = target_rf_id;
    out.messages = record.messages.iter().map(|m| rewrite_text(m, &source, &target, lex)).collect();
    Ok(out)
}

/// Every record under all 36 reward functions.
pub fn augment_all(records: &[EpisodeRecord], lex: &GroundingLexicon) -> Result<Vec<EpisodeRecord>> {
    let mut out = Vec::with_capacity(records.len() * 36);
    for r in records {
        for rf in RewardFunction::all() {
            out.push(augment(r, rf.id, lex)?);
        }
    }
    Ok(out)
}
