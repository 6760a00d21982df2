use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::features::NUM_FEATURES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Pink,
    Blue,
    Yellow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Square,
    Triangle,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Pink, Color::Blue, Color::Yellow];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Color {
        Color::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Pink => "pink",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
        }
    }
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Circle, Shape::Square, Shape::Triangle];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Shape {
        Shape::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Circle => "circle",
            Shape::Square => "square",
            Shape::Triangle => "triangle",
        }
    }

    pub fn plural(self) -> &'static str {
        match self {
            Shape::Circle => "circles",
            Shape::Square => "squares",
            Shape::Triangle => "triangles",
        }
    }
}

/// One of the nine appearance classes. `index = 3 * color + shape`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectClass {
    pub color: Color,
    pub shape: Shape,
}

impl ObjectClass {
    pub fn new(color: Color, shape: Shape) -> Self {
        ObjectClass { color, shape }
    }

    pub fn index(self) -> usize {
        3 * self.color.ordinal() + self.shape.ordinal()
    }

    pub fn from_index(i: usize) -> ObjectClass {
        assert!(i < NUM_FEATURES, "class index {i} out of range");
        ObjectClass::new(Color::from_ordinal(i / 3), Shape::from_ordinal(i % 3))
    }

    pub fn all() -> impl Iterator<Item = ObjectClass> {
        (0..NUM_FEATURES).map(ObjectClass::from_index)
    }

    /// Compact label, e.g. `BlueSquare`.
    pub fn label(self) -> String {
        let cap = |s: &str| {
            let mut c = s.chars();
            c.next()
                .map(|f| f.to_ascii_uppercase().to_string() + c.as_str())
                .unwrap_or_default()
        };
        format!("{}{}", cap(self.color.name()), cap(self.shape.name()))
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Latent sign class carried by colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
    Neutral,
}

/// Latent magnitude bucket carried by shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Low,
    Mid,
    High,
}

impl Sign {
    pub const ALL: [Sign; 3] = [Sign::Positive, Sign::Negative, Sign::Neutral];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn of_value(v: i32) -> Sign {
        match v.signum() {
            1 => Sign::Positive,
            -1 => Sign::Negative,
            _ => Sign::Neutral,
        }
    }
}

impl Magnitude {
    pub const ALL: [Magnitude; 3] = [Magnitude::Low, Magnitude::Mid, Magnitude::High];

    pub fn ordinal(self) -> usize {
        self as usize
    }
}

/// The latent (sign, magnitude) cell an object's value was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatentCell {
    pub sign: Sign,
    pub magnitude: Magnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corner {
    TL,
    TR,
    BL,
    BR,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::TL, Corner::TR, Corner::BL, Corner::BR];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn describe(self) -> &'static str {
        match self {
            Corner::TL => "top left",
            Corner::TR => "top right",
            Corner::BL => "bottom left",
            Corner::BR => "bottom right",
        }
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Corner {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TL" => Ok(Corner::TL),
            "TR" => Ok(Corner::TR),
            "BL" => Ok(Corner::BL),
            "BR" => Ok(Corner::BR),
            other => Err(format!("unknown corner {other:?}")),
        }
    }
}
