//! Walker states and the unitary building blocks of a step.
//!
//! Every operation is a rotation `exp(iθH)` over a matching `H`, evaluated
//! per pair as
//!
//! ```text
//! (ψ_u, ψ_v) -> (cos θ ψ_u + i sin θ ψ_v, i sin θ ψ_u + cos θ ψ_v)
//! ```
//!
//! A coined walk on dimers uses the same site vector: the parity within a
//! dimer is the coin.

mod program;

pub use program::{
    compile, run_program, AngleField, CompiledProgram, ShiftDir, SpatialAngle, StepOp, StepProgram, Trajectory,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{tessellation_pairs, BoundaryTopology, PairSet, SiteTable, TessKind};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkerState {
    amps: Vec<C64>,
}

impl WalkerState {
    pub fn basis(n: usize, site: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); n];
        amps[site] = C64::new(1.0, 0.0);
        WalkerState { amps }
    }

    /// Normalized copy of `amps`.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("walker state has zero or non-finite norm".into()));
        }
        Ok(WalkerState { amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    /// Normalized superposition of basis states.
    pub fn superposition(n: usize, terms: &[(usize, C64)]) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); n];
        for &(i, a) in terms {
            if i >= n {
                return Err(Error::SiteOutOfRange { index: i, len: n });
            }
            amps[i] += a;
        }
        Self::from_amplitudes(amps)
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &WalkerState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply(&mut self, t: &Tessellation) {
        apply_tessellation(self, t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Angles {
    Uniform(f64),
    PerPair(Vec<f64>),
}

/// A matching together with its hopping angle(s).
#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation {
    pairs: PairSet,
    angles: Angles,
}

impl Tessellation {
    pub fn uniform(pairs: PairSet, theta: f64) -> Self {
        Tessellation { pairs, angles: Angles::Uniform(theta) }
    }

    pub fn per_pair(pairs: PairSet, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != pairs.len() {
            return Err(Error::DimensionMismatch { expected: pairs.len(), got: angles.len() });
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidParameter("non-finite hopping angle".into()));
        }
        Ok(Tessellation { pairs, angles: Angles::PerPair(angles) })
    }

    pub fn pairs(&self) -> &PairSet {
        &self.pairs
    }

    pub fn angle(&self, k: usize) -> f64 {
        match &self.angles {
            Angles::Uniform(t) => *t,
            Angles::PerPair(v) => v[k],
        }
    }

    /// The inverse rotation.
    pub fn adjoint(&self) -> Self {
        let angles = match &self.angles {
            Angles::Uniform(t) => Angles::Uniform(-t),
            Angles::PerPair(v) => Angles::PerPair(v.iter().map(|t| -t).collect()),
        };
        Tessellation { pairs: self.pairs.clone(), angles }
    }

    /// `(u, v, cos θ, sin θ)` per pair.
    pub(crate) fn rotations(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.pairs.pairs().iter().enumerate().map(|(k, p)| {
            let (s, c) = self.angle(k).sin_cos();
            (p.a, p.b, c, s)
        })
    }
}

pub fn apply_tessellation(state: &mut WalkerState, t: &Tessellation) {
    let amps = &mut state.amps;
    for (u, v, c, s) in t.rotations() {
        let (a, b) = (amps[u], amps[v]);
        let is = C64::new(0.0, s);
        amps[u] = a * c + is * b;
        amps[v] = is * a + b * c;
    }
}

/// Rotation across seam pairs only.
pub fn boundary_step(state: &mut WalkerState, seam: &PairSet, theta: f64) {
    apply_tessellation(state, &Tessellation::uniform(seam.clone(), theta));
}

/// `exp(iθH₀)` over the intra-cell bonds along x.
pub fn coin_rotation(state: &mut WalkerState, table: &SiteTable, theta: f64) -> Result<()> {
    let pairs = tessellation_pairs(table, TessKind::X0, &BoundaryTopology::open(table.dimension()))?;
    apply_tessellation(state, &Tessellation::uniform(pairs, theta));
    Ok(())
}

/// Coined shift `T_dir`: a full coin swap followed by a full swap along the
/// bond family of `dir`. Moves odd sites by `+dir` and even sites by `-dir`,
/// each with a phase of `-1` in the bulk.
pub fn transition_operator(
    state: &mut WalkerState,
    table: &SiteTable,
    boundary: &BoundaryTopology,
    dir: ShiftDir,
) -> Result<()> {
    for t in program::shift_tessellations(table, boundary, dir)? {
        apply_tessellation(state, &t);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeSpec};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn zero_angle_is_identity() {
        let pairs = PairSet::from_indices(&[(0, 1), (2, 3)], 4).unwrap();
        let mut s = WalkerState::from_amplitudes(vec![
            C64::new(0.1, 0.2),
            C64::new(0.3, -0.4),
            C64::new(0.5, 0.0),
            C64::new(0.0, 0.6),
        ])
        .unwrap();
        let before = s.clone();
        s.apply(&Tessellation::uniform(pairs, 0.0));
        assert_eq!(s, before);
    }

    #[test]
    fn full_swap_and_hadamard() {
        let pairs = PairSet::from_indices(&[(0, 1)], 3).unwrap();
        let mut s = WalkerState::basis(3, 0);
        s.apply(&Tessellation::uniform(pairs.clone(), FRAC_PI_2));
        assert!(close(s.amplitudes()[1], C64::new(0.0, 1.0)));
        assert!(s.amplitudes()[0].norm() < 1e-15);

        let mut s = WalkerState::basis(3, 0);
        s.apply(&Tessellation::uniform(pairs, FRAC_PI_4));
        assert!(close(s.amplitudes()[0], C64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.amplitudes()[1], C64::new(0.0, FRAC_1_SQRT_2)));
        assert_eq!(s.amplitudes()[2], C64::new(0.0, 0.0));
    }

    #[test]
    fn coin_examples() {
        let table = build_lattice(&LatticeSpec::chain(1, 1.0, 1.0)).unwrap();
        let mut s = WalkerState::from_amplitudes(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        coin_rotation(&mut s, &table, FRAC_PI_2).unwrap();
        assert!(close(s.amplitudes()[0], C64::new(0.0, 1.0) * C64::new(0.0, 0.8)));
        assert!(close(s.amplitudes()[1], C64::new(0.0, 1.0) * C64::new(0.6, 0.0)));

        let mut a = WalkerState::from_amplitudes(vec![C64::new(0.6, 0.1), C64::new(0.2, 0.8)]).unwrap();
        let mut b = a.clone();
        coin_rotation(&mut a, &table, FRAC_PI_4).unwrap();
        coin_rotation(&mut a, &table, FRAC_PI_4).unwrap();
        coin_rotation(&mut b, &table, FRAC_PI_2).unwrap();
        assert!(a.amplitudes().iter().zip(b.amplitudes()).all(|(x, y)| close(*x, *y)));

        let theta = 0.37;
        let plus = C64::new(FRAC_1_SQRT_2, 0.0);
        let mut e = WalkerState::from_amplitudes(vec![plus, plus]).unwrap();
        coin_rotation(&mut e, &table, theta).unwrap();
        let phase = C64::from_polar(1.0, theta);
        assert!(e.amplitudes().iter().all(|a| close(*a, phase * plus)));
    }

    #[test]
    fn adjoint_undoes() {
        let pairs = PairSet::from_indices(&[(0, 2), (1, 3)], 4).unwrap();
        let t = Tessellation::per_pair(pairs, vec![0.3, -1.2]).unwrap();
        let mut s = WalkerState::from_amplitudes(vec![
            C64::new(0.1, 0.2),
            C64::new(0.3, -0.4),
            C64::new(0.5, 0.0),
            C64::new(0.0, 0.6),
        ])
        .unwrap();
        let before = s.clone();
        s.apply(&t);
        s.apply(&t.adjoint());
        assert!(s.amplitudes().iter().zip(before.amplitudes()).all(|(x, y)| close(*x, *y)));
    }

    #[test]
    fn per_pair_length_checked() {
        let pairs = PairSet::from_indices(&[(0, 1)], 2).unwrap();
        assert!(Tessellation::per_pair(pairs.clone(), vec![0.1, 0.2]).is_err());
        assert!(Tessellation::per_pair(pairs, vec![f64::NAN]).is_err());
    }

    #[test]
    fn empty_seam_is_identity() {
        let mut s = WalkerState::basis(4, 2);
        boundary_step(&mut s, &PairSet::empty(), 1.0);
        assert_eq!(s, WalkerState::basis(4, 2));
    }
}
