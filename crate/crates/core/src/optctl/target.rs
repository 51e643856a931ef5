use std::f64::consts::PI;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Desired states on the unit cube, numbered 1 to 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    /// `prod sin(pi x_i)`.
    Smooth,
    /// `max(0, 1 - 2 max |x_i - 1/2|)`: one at the midpoint, zero on the boundary.
    Pyramid,
    /// Indicator of the open cube `(1/4, 3/4)^d`.
    CubeIndicator,
    /// `1 + prod sin(pi x_i)`; does not vanish on the boundary.
    ShiftedSine,
}

impl Target {
    pub const ALL: [Target; 4] = [Self::Smooth, Self::Pyramid, Self::CubeIndicator, Self::ShiftedSine];

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("target must be 1..=4, got {i}")))
    }

    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn evaluate(self, x: &[f64]) -> f64 {
        match self {
            Self::Smooth => sine_product(x),
            Self::Pyramid => {
                let m = x.iter().map(|&c| (c - 0.5).abs()).fold(0.0, f64::max);
                (1.0 - 2.0 * m).max(0.0)
            }
            Self::CubeIndicator => f64::from(u8::from(x.iter().all(|&c| c > 0.25 && c < 0.75))),
            Self::ShiftedSine => 1.0 + sine_product(x),
        }
    }
}

fn sine_product(x: &[f64]) -> f64 {
    x.iter().map(|&c| (PI * c).sin()).product()
}

pub fn evaluate_target(t: Target, x: &[f64]) -> f64 {
    t.evaluate(x)
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let i = s
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("target must be 1..=4, got `{s}`")))?;
        Self::from_index(i)
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u64(self.index() as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_values() {
        let mid = [0.5, 0.5, 0.5];
        assert!((Target::Smooth.evaluate(&mid) - 1.0).abs() < 1e-15);
        assert_eq!(Target::Pyramid.evaluate(&mid), 1.0);
        assert_eq!(Target::CubeIndicator.evaluate(&mid), 1.0);
        assert_eq!(Target::CubeIndicator.evaluate(&[0.1, 0.1, 0.1]), 0.0);
        assert_eq!(Target::CubeIndicator.evaluate(&[0.25, 0.5, 0.5]), 0.0);
        assert!((Target::ShiftedSine.evaluate(&[0.0, 0.3, 0.7]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_behaviour() {
        for p in [[0.0, 0.4, 0.2], [1.0, 0.5, 0.5], [0.3, 1.0, 0.9]] {
            assert!(Target::Smooth.evaluate(&p).abs() < 1e-15);
            assert_eq!(Target::Pyramid.evaluate(&p), 0.0);
            assert!(Target::ShiftedSine.evaluate(&p) >= 1.0 - 1e-15);
        }
    }

    #[test]
    fn index_round_trip() {
        for t in Target::ALL {
            assert_eq!(Target::from_index(t.index()).unwrap(), t);
            assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
        }
        assert!(Target::from_index(0).is_err());
        assert!(Target::from_index(5).is_err());
    }
}
