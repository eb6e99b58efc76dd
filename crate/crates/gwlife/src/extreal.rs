//! Extended nonnegative reals: a finite `f64` or `+∞`.
//!
//! Several classification criteria branch on whether a series converges, so
//! divergence is carried as an explicit variant instead of a sentinel float.

use std::fmt;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

/// A finite real number or positive infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Inf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_inf(self) -> bool {
        matches!(self, ExtReal::Inf)
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Inf => None,
        }
    }

    /// Collapse to `f64`, mapping `Inf` to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::Inf => f64::INFINITY,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x.is_infinite() && x > 0.0 {
            ExtReal::Inf
        } else {
            ExtReal::Finite(x)
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Inf => write!(f, "inf"),
        }
    }
}

// Wire format: {"finite": x} or the string "inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("finite", x)?;
                map.end()
            }
            ExtReal::Inf => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtRealVisitor;

        impl<'de> Visitor<'de> for ExtRealVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("{\"finite\": number} or \"inf\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                if v == "inf" {
                    Ok(ExtReal::Inf)
                } else {
                    Err(E::custom(format!("unknown extended-real tag {v:?}")))
                }
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<ExtReal, A::Error> {
                let mut value = None;
                while let Some(key) = map.next_key::<String>()? {
                    if key == "finite" {
                        value = Some(map.next_value::<f64>()?);
                    } else {
                        return Err(de::Error::custom(format!("unknown key {key:?}")));
                    }
                }
                value
                    .map(ExtReal::Finite)
                    .ok_or_else(|| de::Error::custom("missing \"finite\""))
            }
        }

        deserializer.deserialize_any(ExtRealVisitor)
    }
}
