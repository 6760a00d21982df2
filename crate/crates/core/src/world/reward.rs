use serde::{Deserialize, Serialize};

use super::class::{Color, LatentCell, Magnitude, ObjectClass, Shape, Sign};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};

pub const NUM_REWARD_FUNCTIONS: u32 = 36;

/// The six permutations of `[0, 1, 2]` in lexicographic order.
pub const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Closed integer interval of reward values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i32,
    pub hi: i32,
}

impl Interval {
    pub const fn new(lo: i32, hi: i32) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, v: i32) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        (self.lo as f64 + self.hi as f64) / 2.0
    }
}

/// Value intervals for each latent (sign, magnitude) cell, indexed
/// `[sign][magnitude]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTable {
    pub cells: [[Interval; 3]; 3],
}

impl Default for CellTable {
    fn default() -> Self {
        let pos = [Interval::new(1, 3), Interval::new(4, 7), Interval::new(8, 10)];
        let neg = pos.map(|i| Interval::new(-i.hi, -i.lo));
        let neu = [Interval::new(0, 0); 3];
        CellTable {
            cells: [pos, neg, neu],
        }
    }
}

impl CellTable {
    pub fn interval(&self, cell: LatentCell) -> Interval {
        self.cells[cell.sign.ordinal()][cell.magnitude.ordinal()]
    }

    /// Checks every interval is inside [-10, 10] and agrees with its sign class.
    pub fn validate(&self) -> Result<()> {
        for sign in Sign::ALL {
            for mag in Magnitude::ALL {
                let iv = self.interval(LatentCell {
                    sign,
                    magnitude: mag,
                });
                if iv.lo > iv.hi || iv.lo < -10 || iv.hi > 10 {
                    return Err(Error::Config(format!(
                        "cell {sign:?}/{mag:?} interval [{}, {}] outside [-10, 10]",
                        iv.lo, iv.hi
                    )));
                }
                let ok = match sign {
                    Sign::Positive => iv.lo > 0,
                    Sign::Negative => iv.hi < 0,
                    Sign::Neutral => iv.lo == 0 && iv.hi == 0,
                };
                if !ok {
                    return Err(Error::Config(format!(
                        "cell {sign:?}/{mag:?} interval [{}, {}] disagrees with its sign",
                        iv.lo, iv.hi
                    )));
                }
            }
        }
        Ok(())
    }

    /// Recovers the latent cell of a value when the magnitude is unambiguous.
    /// Zero values are neutral and report `Magnitude::Low`.
    pub fn cell_of_value(&self, v: i32) -> Option<LatentCell> {
        let sign = Sign::of_value(v);
        if sign == Sign::Neutral {
            return Some(LatentCell {
                sign,
                magnitude: Magnitude::Low,
            });
        }
        Magnitude::ALL
            .into_iter()
            .map(|magnitude| LatentCell { sign, magnitude })
            .find(|c| self.interval(*c).contains(v))
    }
}

/// A masking reward function: colors carry sign, shapes carry magnitude.
///
/// `id = 6 * color_rank + shape_rank`, where the ranks index
/// [`PERMUTATIONS`]. `color_perm[sign]` is the color ordinal displaying that
/// sign class and `shape_perm[magnitude]` the shape ordinal displaying that
/// magnitude bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RewardFunction {
    pub id: u32,
    pub color_perm: [usize; 3],
    pub shape_perm: [usize; 3],
}

impl RewardFunction {
    pub fn from_id(id: u32) -> Result<Self> {
        if id >= NUM_REWARD_FUNCTIONS {
            return Err(Error::InvalidRewardFunction(id));
        }
        Ok(RewardFunction {
            id,
            color_perm: PERMUTATIONS[(id / 6) as usize],
            shape_perm: PERMUTATIONS[(id % 6) as usize],
        })
    }

    pub fn all() -> impl Iterator<Item = RewardFunction> {
        (0..NUM_REWARD_FUNCTIONS).map(|id| RewardFunction::from_id(id).expect("id in range"))
    }

    pub fn class_of(&self, cell: LatentCell) -> ObjectClass {
        ObjectClass::new(
            Color::from_ordinal(self.color_perm[cell.sign.ordinal()]),
            Shape::from_ordinal(self.shape_perm[cell.magnitude.ordinal()]),
        )
    }

    pub fn sign_of_color(&self, color: Color) -> Sign {
        let pos = self.color_perm.iter().position(|&c| c == color.ordinal());
        Sign::ALL[pos.expect("permutation covers every color")]
    }

    pub fn magnitude_of_shape(&self, shape: Shape) -> Magnitude {
        let pos = self.shape_perm.iter().position(|&s| s == shape.ordinal());
        Magnitude::ALL[pos.expect("permutation covers every shape")]
    }

    pub fn cell_of(&self, class: ObjectClass) -> LatentCell {
        LatentCell {
            sign: self.sign_of_color(class.color),
            magnitude: self.magnitude_of_shape(class.shape),
        }
    }

    /// Per-class value intervals under this function.
    pub fn cell_table(&self, table: &CellTable) -> [Interval; NUM_FEATURES] {
        std::array::from_fn(|k| table.interval(self.cell_of(ObjectClass::from_index(k))))
    }

    /// Reward weights implied by this function: each class gets the midpoint
    /// of its cell interval.
    pub fn true_weights(&self, table: &CellTable) -> FeatureVector {
        FeatureVector(self.cell_table(table).map(|iv| iv.midpoint()))
    }

    /// Color displayed for `color` once the sign it encodes under `self` is
    /// re-rendered under `target`.
    pub fn map_color(&self, target: &RewardFunction, color: Color) -> Color {
        let sign = self.sign_of_color(color);
        Color::from_ordinal(target.color_perm[sign.ordinal()])
    }

    pub fn map_shape(&self, target: &RewardFunction, shape: Shape) -> Shape {
        let mag = self.magnitude_of_shape(shape);
        Shape::from_ordinal(target.shape_perm[mag.ordinal()])
    }
}
