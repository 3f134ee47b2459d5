use serde::{Deserialize, Serialize};

use super::{identity, rotation, sigma_x, Mat2};
use crate::error::{Error, Result};
use crate::walk::{AngleField, ShiftDir, StepOp, StepProgram};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "arg", rename_all = "snake_case")]
pub enum ProtocolStep {
    /// Coin rotation by the angle with this index.
    Coin(usize),
    Shift(ShiftDir),
}

/// A coined walk on a dimer lattice, one description for both the
/// real-space and the momentum-space backend. Steps are in application
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinedProtocol {
    pub dimension: usize,
    pub steps: Vec<ProtocolStep>,
}

impl CoinedProtocol {
    /// `T_y R(θ1) T_x R(θ0)`
    pub fn simple_2d() -> Self {
        use ProtocolStep::*;
        CoinedProtocol { dimension: 2, steps: vec![Coin(0), Shift(ShiftDir::X), Coin(1), Shift(ShiftDir::Y)] }
    }

    /// `T_x R(θ0) T_y R(θ1) T_xy R(θ0)`
    pub fn chern_2d() -> Self {
        use ProtocolStep::*;
        CoinedProtocol {
            dimension: 2,
            steps: vec![Coin(0), Shift(ShiftDir::Xy), Coin(1), Shift(ShiftDir::Y), Coin(0), Shift(ShiftDir::X)],
        }
    }

    /// `T_x R(θ0) T_y R(θ1) T_z R(θ0)`
    pub fn coined_3d() -> Self {
        use ProtocolStep::*;
        CoinedProtocol {
            dimension: 3,
            steps: vec![Coin(0), Shift(ShiftDir::Z), Coin(1), Shift(ShiftDir::Y), Coin(0), Shift(ShiftDir::X)],
        }
    }

    pub fn angle_count(&self) -> usize {
        self.steps
            .iter()
            .filter_map(|s| match s {
                ProtocolStep::Coin(i) => Some(i + 1),
                ProtocolStep::Shift(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dimension) {
            return Err(Error::InvalidParameter(format!("protocol dimension {}", self.dimension)));
        }
        for s in &self.steps {
            if let ProtocolStep::Shift(d) = s {
                let disp = d.displacement();
                if disp.iter().skip(self.dimension).any(|&x| x != 0) {
                    return Err(Error::Incompatible {
                        what: format!("shift {d:?}"),
                        why: format!("{}D protocol", self.dimension),
                    });
                }
            }
        }
        Ok(())
    }

    /// Momentum-space one-period operator. A shift maps to
    /// `−diag(e^{−ik·d}, e^{ik·d})`, the bulk action of the real-space
    /// coin swap followed by the bond swap.
    pub fn floquet(&self, k: [f64; 3], angles: &[f64]) -> Mat2 {
        let x = sigma_x();
        let mut w = identity();
        for s in &self.steps {
            let f = match s {
                ProtocolStep::Coin(i) => rotation(angles[*i], &x),
                ProtocolStep::Shift(d) => {
                    let disp = d.displacement();
                    let phase: f64 = (0..3).map(|a| k[a] * disp[a] as f64).sum();
                    let z = C64::from_polar(1.0, -phase);
                    Mat2::new(-z, C64::new(0.0, 0.0), C64::new(0.0, 0.0), -z.conj())
                }
            };
            w = f * w;
        }
        w
    }

    /// Real-space program with one angle field per coin index.
    pub fn program(&self, angles: &[AngleField]) -> Result<StepProgram> {
        self.validate()?;
        if angles.len() < self.angle_count() {
            return Err(Error::DimensionMismatch { expected: self.angle_count(), got: angles.len() });
        }
        let ops = self
            .steps
            .iter()
            .map(|s| match s {
                ProtocolStep::Coin(i) => StepOp::Coin { angle: angles[*i].clone() },
                ProtocolStep::Shift(d) => StepOp::Shift { dir: *d },
            })
            .collect();
        Ok(StepProgram::new(ops))
    }
}
