use serde::{Deserialize, Serialize};

/// Smooth step between two hopping angles:
/// `θ(x) = (θ₋ + θ₊)/2 + (θ₊ − θ₋)/2 · tanh(x / w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleProfile {
    pub minus: f64,
    pub plus: f64,
    /// Transition width in units of the intra-cell spacing.
    pub width: f64,
}

impl AngleProfile {
    pub fn new(minus: f64, plus: f64, width: f64) -> Self {
        AngleProfile { minus, plus, width }
    }

    /// `x` in units of the intra-cell spacing, relative to the wall.
    pub fn angle_at(&self, x: f64) -> f64 {
        let mid = 0.5 * (self.minus + self.plus);
        let half = 0.5 * (self.plus - self.minus);
        if self.width.is_infinite() {
            return mid;
        }
        mid + half * (x / self.width).tanh()
    }

    pub fn is_valid(&self) -> bool {
        self.width > 0.0 && self.minus.is_finite() && self.plus.is_finite()
    }
}

pub fn angle_at(profile: &AngleProfile, x: f64) -> f64 {
    profile.angle_at(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits() {
        let p = AngleProfile::new(0.3, 1.1, 0.1);
        assert!((p.angle_at(0.0) - 0.7).abs() < 1e-15);
        assert!((p.angle_at(1e6) - 1.1).abs() < 1e-15);
        assert!((p.angle_at(-1e6) - 0.3).abs() < 1e-15);
        // tanh(10) = 1 - 4.1e-9
        assert!((p.angle_at(1.0) - 1.1).abs() < 1e-8);
        let flat = AngleProfile::new(0.5, 0.5, f64::INFINITY);
        assert_eq!(flat.angle_at(3.0), 0.5);
    }
}
