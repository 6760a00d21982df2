use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::world::{Color, Corner, Shape};

const BUILTIN_GROUNDING: &str = include_str!("../../data/grounding.tsv");

/// Surface words for colors, shapes and corners.
#[derive(Debug, Clone)]
pub struct GroundingLexicon {
    colors: HashMap<String, Color>,
    shapes: HashMap<String, Shape>,
    /// Corner phrases as token sequences, longest first.
    corners: Vec<(Vec<String>, Corner)>,
}

impl Default for GroundingLexicon {
    fn default() -> Self {
        Self::parse(BUILTIN_GROUNDING, Path::new("<builtin grounding>")).expect("builtin grounding table parses")
    }
}

impl GroundingLexicon {
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lex = GroundingLexicon {
            colors: HashMap::new(),
            shapes: HashMap::new(),
            corners: Vec::new(),
        };
        let mut corner_keys: HashMap<Vec<String>, Corner> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::parse(path, i + 1, msg);
            let parts: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [kind, surface, referent] = parts[..] else {
                return Err(err("expected `kind<TAB>surface<TAB>referent`".into()));
            };
            let surface = surface.to_lowercase();
            match kind {
                "color" => {
                    let c = parse_color(referent).ok_or_else(|| err(format!("unknown color {referent:?}")))?;
                    if lex.colors.insert(surface.clone(), c).is_some_and(|old| old != c) {
                        return Err(err(format!("{surface:?} maps to two colors")));
                    }
                }
                "shape" => {
                    let s = parse_shape(referent).ok_or_else(|| err(format!("unknown shape {referent:?}")))?;
                    if lex.shapes.insert(surface.clone(), s).is_some_and(|old| old != s) {
                        return Err(err(format!("{surface:?} maps to two shapes")));
                    }
                }
                "corner" => {
                    let c: Corner = referent.parse().map_err(err)?;
                    let key: Vec<String> = surface.split_whitespace().map(str::to_string).collect();
                    if key.is_empty() {
                        return Err(err("empty corner phrase".into()));
                    }
                    if corner_keys.insert(key, c).is_some_and(|old| old != c) {
                        return Err(err(format!("{surface:?} maps to two corners")));
                    }
                }
                other => return Err(err(format!("unknown kind {other:?}"))),
            }
        }
        for surface in lex.colors.keys() {
            if lex.shapes.contains_key(surface) {
                return Err(Error::parse(path, 0, format!("{surface:?} is both a color and a shape")));
            }
        }
        lex.corners = corner_keys.into_iter().collect();
        lex.corners
            .sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(lex)
    }

    pub fn color(&self, token: &str) -> Option<Color> {
        lookup(&self.colors, token)
    }

    pub fn shape(&self, token: &str) -> Option<Shape> {
        lookup(&self.shapes, token)
    }

    pub fn is_feature_word(&self, token: &str) -> bool {
        self.color(token).is_some() || self.shape(token).is_some()
    }

    /// Corners referenced by a token sequence.
    pub fn corners_in(&self, tokens: &[String]) -> BTreeSet<Corner> {
        let mut found = BTreeSet::new();
        let mut used = vec![false; tokens.len()];
        for (phrase, corner) in &self.corners {
            let n = phrase.len();
            if n > tokens.len() {
                continue;
            }
            for start in 0..=tokens.len() - n {
                if used[start..start + n].iter().any(|&u| u) {
                    continue;
                }
                if tokens[start..start + n] == phrase[..] {
                    found.insert(*corner);
                    used[start..start + n].iter_mut().for_each(|u| *u = true);
                }
            }
        }
        found
    }
}

fn lookup<T: Copy>(map: &HashMap<String, T>, token: &str) -> Option<T> {
    let t = token.to_lowercase();
    if let Some(v) = map.get(&t) {
        return Some(*v);
    }
    for suffix in ["es", "s"] {
        if let Some(stem) = t.strip_suffix(suffix) {
            if let Some(v) = map.get(stem) {
                return Some(*v);
            }
        }
    }
    None
}

fn parse_color(s: &str) -> Option<Color> {
    Color::ALL.into_iter().find(|c| c.name() == s.to_lowercase())
}

fn parse_shape(s: &str) -> Option<Shape> {
    Shape::ALL.into_iter().find(|c| c.name() == s.to_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::segment::word_tokens;

    #[test]
    fn synonyms() {
        let lex = GroundingLexicon::default();
        for w in ["pink", "Magenta", "PURPLE", "violet"] {
            assert_eq!(lex.color(w), Some(Color::Pink));
        }
        assert_eq!(lex.shape("Squares"), Some(Shape::Square));
        assert_eq!(lex.shape("boxes"), Some(Shape::Square));
        assert_eq!(lex.shape("pyramids"), Some(Shape::Triangle));
        assert_eq!(lex.color("good"), None);
    }

    #[test]
    fn corner_phrases() {
        let lex = GroundingLexicon::default();
        let c = |s: &str| lex.corners_in(&word_tokens(s));
        assert_eq!(c("Top left would have been better"), BTreeSet::from([Corner::TL]));
        assert_eq!(c("bottom right"), c("lower right"));
        assert_eq!(c("go to the top-left"), BTreeSet::from([Corner::TL]));
        assert_eq!(c("northwest"), BTreeSet::from([Corner::TL]));
        assert_eq!(c("top left or bottom right").len(), 2);
        assert!(c("go go go").is_empty());
        assert!(c("left").is_empty());
    }

    #[test]
    fn conflicting_entries_rejected() {
        let bad = "color\tpink\tpink\ncolor\tpink\tblue\n";
        assert!(GroundingLexicon::parse(bad, Path::new("x")).is_err());
        let bad = "corner\ttop left\tTL\ncorner\ttop  left\tBR\n";
        assert!(GroundingLexicon::parse(bad, Path::new("x")).is_err());
        let bad = "color\tsquare\tpink\nshape\tsquare\tsquare\n";
        assert!(GroundingLexicon::parse(bad, Path::new("x")).is_err());
        assert!(GroundingLexicon::parse("shape\tblob\thexagon\n", Path::new("x")).is_err());
    }
}
