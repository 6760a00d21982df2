use std::ops::{Add, Index, IndexMut, Mul};

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

/// Number of object classes (3 colors × 3 shapes).
pub const NUM_FEATURES: usize = 9;

pub type Vector9 = SVector<f64, NUM_FEATURES>;

/// A length-9 vector over object classes. Used for feature counts, grounding
/// targets and reward weights alike.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub const fn zeros() -> Self {
        FeatureVector([0.0; NUM_FEATURES])
    }

    pub fn one_hot(k: usize) -> Self {
        let mut v = Self::zeros();
        v.0[k] = 1.0;
        v
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    /// L1-normalized copy, or `None` for the zero vector.
    pub fn l1_normalized(&self) -> Option<FeatureVector> {
        let n = self.l1_norm();
        if n == 0.0 {
            return None;
        }
        Some(FeatureVector(self.0.map(|x| x / n)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }

    pub fn to_vector(&self) -> Vector9 {
        Vector9::from_column_slice(&self.0)
    }

    pub fn from_vector(v: &Vector9) -> Self {
        let mut out = [0.0; NUM_FEATURES];
        out.copy_from_slice(v.as_slice());
        FeatureVector(out)
    }
}

impl From<[f64; NUM_FEATURES]> for FeatureVector {
    fn from(v: [f64; NUM_FEATURES]) -> Self {
        FeatureVector(v)
    }
}

impl Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for FeatureVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for FeatureVector {
    type Output = FeatureVector;
    fn add(self, rhs: FeatureVector) -> FeatureVector {
        let mut out = self;
        for (o, r) in out.0.iter_mut().zip(rhs.0) {
            *o += r;
        }
        out
    }
}

impl Mul<f64> for FeatureVector {
    type Output = FeatureVector;
    fn mul(self, c: f64) -> FeatureVector {
        FeatureVector(self.0.map(|x| x * c))
    }
}
