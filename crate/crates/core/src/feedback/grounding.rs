use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::lexicon::GroundingLexicon;
use super::segment::{word_tokens, Utterance};
use crate::features::FeatureVector;
use crate::world::{feature_counts, Color, Corner, Level, ObjectClass, RewardFunction, Shape};

/// Why an utterance produced no grounding target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum NoGround {
    NoCornerPhrase,
    AmbiguousCorner { corners: Vec<Corner> },
    NoFeatureWords,
    EmptyTrajectory,
}

impl std::fmt::Display for NoGround {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoGround::NoCornerPhrase => f.write_str("no corner phrase"),
            NoGround::AmbiguousCorner { corners } => write!(f, "ambiguous corners {corners:?}"),
            NoGround::NoFeatureWords => f.write_str("no feature words"),
            NoGround::EmptyTrajectory => f.write_str("empty trajectory"),
        }
    }
}

/// Grounds an imperative to the corner it names: the normalized feature
/// counts of all objects in that corner.
pub fn ground_imperative(
    u: &Utterance,
    level: &Level,
    rf: &RewardFunction,
    lex: &GroundingLexicon,
) -> Result<FeatureVector, NoGround> {
    let corners = lex.corners_in(&word_tokens(&u.text));
    let corner = match corners.len() {
        0 => return Err(NoGround::NoCornerPhrase),
        1 => *corners.first().expect("one corner"),
        _ => {
            return Err(NoGround::AmbiguousCorner {
                corners: corners.into_iter().collect(),
            })
        }
    };
    feature_counts(level.corner_objects(corner), rf)
        .l1_normalized()
        .ok_or(NoGround::NoCornerPhrase)
}

/// Indicator over the classes an utterance names, L1-normalized. A color
/// alone covers its three shapes, a shape alone its three colors, and
/// colors with shapes cover their cross product.
pub fn ground_descriptive(u: &Utterance, lex: &GroundingLexicon) -> Result<FeatureVector, NoGround> {
    let tokens = word_tokens(&u.text);
    let colors: BTreeSet<Color> = tokens.iter().filter_map(|t| lex.color(t)).collect();
    let shapes: BTreeSet<Shape> = tokens.iter().filter_map(|t| lex.shape(t)).collect();
    let colors: Vec<Color> = if colors.is_empty() { Color::ALL.to_vec() } else { colors.into_iter().collect() };
    let shapes: Vec<Shape> = if shapes.is_empty() { Shape::ALL.to_vec() } else { shapes.into_iter().collect() };
    if colors.len() == 3 && shapes.len() == 3 && !tokens.iter().any(|t| lex.is_feature_word(t)) {
        return Err(NoGround::NoFeatureWords);
    }
    let mut f = FeatureVector::zeros();
    for &c in &colors {
        for &s in &shapes {
            f[ObjectClass::new(c, s).index()] = 1.0;
        }
    }
    f.l1_normalized().ok_or(NoGround::NoFeatureWords)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::world::{LatentCell, Sign, WorldObject};

    fn lex() -> GroundingLexicon {
        GroundingLexicon::default()
    }

    #[test]
    fn descriptive_single_class() {
        let f = ground_descriptive(&Utterance::new("The light-blue squares are high valued"), &lex()).unwrap();
        assert_eq!(f, FeatureVector::one_hot(ObjectClass::new(Color::Blue, Shape::Square).index()));
    }

    #[test]
    fn descriptive_color_only() {
        let f = ground_descriptive(&Utterance::new("I think Yellow is bad"), &lex()).unwrap();
        for s in Shape::ALL {
            assert!((f[ObjectClass::new(Color::Yellow, s).index()] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((f.l1_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn descriptive_shape_only_and_union() {
        let f = ground_descriptive(&Utterance::new("triangles!"), &lex()).unwrap();
        assert_eq!(f.iter().filter(|&&x| x > 0.0).count(), 3);
        let f = ground_descriptive(&Utterance::new("pink and blue circles"), &lex()).unwrap();
        assert_eq!(f[ObjectClass::new(Color::Pink, Shape::Circle).index()], 0.5);
        assert_eq!(f[ObjectClass::new(Color::Blue, Shape::Circle).index()], 0.5);
    }

    #[test]
    fn descriptive_no_ground() {
        assert_eq!(ground_descriptive(&Utterance::new("nice weather"), &lex()), Err(NoGround::NoFeatureWords));
    }

    fn constructed_level(rf: &RewardFunction) -> Level {
        // TL: 2 blue squares + 3 pink circles; other corners yellow triangles
        let bs = rf.cell_of(ObjectClass::new(Color::Blue, Shape::Square));
        let pc = rf.cell_of(ObjectClass::new(Color::Pink, Shape::Circle));
        let yt = rf.cell_of(ObjectClass::new(Color::Yellow, Shape::Triangle));
        let value_of = |c: LatentCell| match c.sign {
            Sign::Positive => 2,
            Sign::Negative => -2,
            Sign::Neutral => 0,
        };
        let objects = (0..20)
            .map(|j| {
                let cell = match j {
                    0 | 1 => bs,
                    2..=4 => pc,
                    _ => yt,
                };
                WorldObject {
                    object_id: j,
                    corner: Corner::ALL[j as usize / 5],
                    value: value_of(cell),
                    cell,
                }
            })
            .collect();
        Level { level_id: 0, objects }
    }

    #[test]
    fn imperative_counts_corner() {
        let rf = RewardFunction::from_id(0).unwrap();
        let level = constructed_level(&rf);
        let f = ground_imperative(&Utterance::new("Top left would have been better"), &level, &rf, &lex()).unwrap();
        assert!((f[ObjectClass::new(Color::Blue, Shape::Square).index()] - 0.4).abs() < 1e-12);
        assert!((f[ObjectClass::new(Color::Pink, Shape::Circle).index()] - 0.6).abs() < 1e-12);
        let a = ground_imperative(&Utterance::new("bottom right"), &level, &rf, &lex());
        let b = ground_imperative(&Utterance::new("lower right"), &level, &rf, &lex());
        assert_eq!(a, b);
        assert_eq!(
            ground_imperative(&Utterance::new("go go go"), &level, &rf, &lex()),
            Err(NoGround::NoCornerPhrase)
        );
        assert!(matches!(
            ground_imperative(&Utterance::new("top left or bottom right"), &level, &rf, &lex()),
            Err(NoGround::AmbiguousCorner { .. })
        ));
    }

    proptest! {
        #[test]
        fn descriptive_ignores_order_and_case(perm in Just(vec!["Pink", "squares", "are", "GOOD", "blue"]).prop_shuffle()) {
            let text = perm.join(" ");
            let a = ground_descriptive(&Utterance::new(text.clone()), &lex());
            let b = ground_descriptive(&Utterance::new(text.to_uppercase()), &lex());
            let c = ground_descriptive(&Utterance::new("pink squares are good blue"), &lex());
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(&a, &c);
        }
    }
}
