use serde::{Deserialize, Serialize};

use super::{apply_tessellation, Tessellation, WalkerState};
use crate::error::{Error, Result};
use crate::experiments::AngleProfile;
use crate::lattice::{
    seam_pairs, tessellation_pairs, AxisRule, BoundaryTopology, Pair, PairSet, SiteTable, TessKind, UnitKind,
};

/// Hopping angle as a function of position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleField {
    Uniform(f64),
    Spatial(SpatialAngle),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialAngle {
    /// tanh wall along `axis` at position `center` (μm).
    Profile { axis: usize, minus: f64, plus: f64, width: f64, center: f64 },
    /// `inside` for bonds whose midpoint cell coordinate along `axis` lies in
    /// `[lo, hi]`, `outside` elsewhere.
    Stripe { axis: usize, lo: f64, hi: f64, inside: f64, outside: f64 },
}

impl AngleField {
    pub fn scaled(&self, f: f64) -> AngleField {
        match self {
            AngleField::Uniform(t) => AngleField::Uniform(t * f),
            AngleField::Spatial(SpatialAngle::Profile { axis, minus, plus, width, center }) => {
                AngleField::Spatial(SpatialAngle::Profile {
                    axis: *axis,
                    minus: minus * f,
                    plus: plus * f,
                    width: *width,
                    center: *center,
                })
            }
            AngleField::Spatial(SpatialAngle::Stripe { axis, lo, hi, inside, outside }) => {
                AngleField::Spatial(SpatialAngle::Stripe {
                    axis: *axis,
                    lo: *lo,
                    hi: *hi,
                    inside: inside * f,
                    outside: outside * f,
                })
            }
        }
    }

    fn validate(&self, table: &SiteTable) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        match self {
            AngleField::Uniform(t) if !t.is_finite() => bad("non-finite angle"),
            AngleField::Uniform(_) => Ok(()),
            AngleField::Spatial(SpatialAngle::Profile { axis, minus, plus, width, .. }) => {
                if *axis >= table.dimension() {
                    return bad("profile axis outside the lattice");
                }
                if !AngleProfile::new(*minus, *plus, *width).is_valid() {
                    return bad("profile needs finite angles and a positive width");
                }
                Ok(())
            }
            AngleField::Spatial(SpatialAngle::Stripe { axis, inside, outside, .. }) => {
                if *axis >= table.dimension() {
                    return bad("stripe axis outside the lattice");
                }
                if !(inside.is_finite() && outside.is_finite()) {
                    return bad("non-finite stripe angle");
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, pair: &Pair, table: &SiteTable) -> f64 {
        match self {
            AngleField::Uniform(t) => *t,
            AngleField::Spatial(SpatialAngle::Profile { axis, minus, plus, width, center }) => {
                let x = (pair.mid_pos[*axis] - center) / table.spec().intra[*axis];
                AngleProfile::new(*minus, *plus, *width).angle_at(x)
            }
            AngleField::Spatial(SpatialAngle::Stripe { axis, lo, hi, inside, outside }) => {
                let c = pair.mid_cell[*axis];
                if c >= *lo && c <= *hi {
                    *inside
                } else {
                    *outside
                }
            }
        }
    }

    fn tessellation(&self, pairs: PairSet, table: &SiteTable) -> Result<Tessellation> {
        self.validate(table)?;
        match self {
            AngleField::Uniform(t) => Ok(Tessellation::uniform(pairs, *t)),
            AngleField::Spatial(_) => {
                let angles = pairs.pairs().iter().map(|p| self.at(p, table)).collect();
                Tessellation::per_pair(pairs, angles)
            }
        }
    }
}

impl From<f64> for AngleField {
    fn from(t: f64) -> Self {
        AngleField::Uniform(t)
    }
}

/// Direction of a coined shift on a dimer lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftDir {
    X,
    Y,
    Z,
    Xy,
    Xz,
    Xyz,
}

impl ShiftDir {
    /// Bond family carrying the shift after the coin swap.
    pub fn bond(self) -> TessKind {
        match self {
            ShiftDir::X => TessKind::X1,
            ShiftDir::Y => TessKind::Xy0,
            ShiftDir::Z => TessKind::Xz0,
            ShiftDir::Xy => TessKind::Xy1,
            ShiftDir::Xz => TessKind::Xz1,
            ShiftDir::Xyz => TessKind::Xyz1,
        }
    }

    /// Cell displacement of an odd site.
    pub fn displacement(self) -> [i64; 3] {
        match self {
            ShiftDir::X => [1, 0, 0],
            ShiftDir::Y => [0, 1, 0],
            ShiftDir::Z => [0, 0, 1],
            ShiftDir::Xy => [1, -1, 0],
            ShiftDir::Xz => [1, 0, -1],
            ShiftDir::Xyz => [1, -1, -1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum StepOp {
    Tessellation {
        kind: TessKind,
        angle: AngleField,
    },
    /// Rotation over the intra-dimer bonds.
    Coin {
        angle: AngleField,
    },
    Shift {
        dir: ShiftDir,
    },
    /// Rotation across the seam or wrap pairs of `axis`.
    Boundary {
        axis: usize,
        angle: f64,
    },
}

/// Operations of one period, listed in the order they act on the state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepProgram {
    pub ops: Vec<StepOp>,
}

impl StepProgram {
    pub fn new(ops: Vec<StepOp>) -> Self {
        StepProgram { ops }
    }

    /// Build from an operator product written left to right; the rightmost
    /// factor acts first.
    pub fn from_product(mut ops: Vec<StepOp>) -> Self {
        ops.reverse();
        StepProgram { ops }
    }

    pub fn tess(kind: TessKind, angle: impl Into<AngleField>) -> StepOp {
        StepOp::Tessellation { kind, angle: angle.into() }
    }

    /// `e^{iθ₀/2 H₀} e^{iθ₁ H₁} e^{iθ₀/2 H₀}` on a chain.
    pub fn coinless_symmetric(theta0: impl Into<AngleField>, theta1: impl Into<AngleField>) -> Self {
        let half = theta0.into().scaled(0.5);
        StepProgram::new(vec![
            Self::tess(TessKind::X0, half.clone()),
            Self::tess(TessKind::X1, theta1),
            Self::tess(TessKind::X0, half),
        ])
    }

    /// `W₁ W₀`: intra bonds first.
    pub fn coinless_plain(theta0: impl Into<AngleField>, theta1: impl Into<AngleField>) -> Self {
        StepProgram::new(vec![Self::tess(TessKind::X0, theta0), Self::tess(TessKind::X1, theta1)])
    }

    pub fn has_boundary_ops(&self) -> bool {
        self.ops.iter().any(|op| matches!(op, StepOp::Boundary { .. }))
    }
}

pub(crate) fn shift_tessellations(
    table: &SiteTable,
    boundary: &BoundaryTopology,
    dir: ShiftDir,
) -> Result<[Tessellation; 2]> {
    if table.spec().unit != UnitKind::Dimer {
        return Err(Error::Incompatible {
            what: format!("shift {dir:?}"),
            why: "coined shifts need a dimer lattice".into(),
        });
    }
    let half = std::f64::consts::FRAC_PI_2;
    let coin = tessellation_pairs(table, TessKind::X0, boundary)?;
    let hop = tessellation_pairs(table, dir.bond(), boundary)?;
    Ok([Tessellation::uniform(coin, half), Tessellation::uniform(hop, half)])
}

/// A program resolved against a lattice: one tessellation per elementary
/// rotation, in application order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledProgram {
    n_sites: usize,
    tessellations: Vec<Tessellation>,
}

/// Resolve `program` on `table`.
///
/// When the program contains explicit boundary steps, tessellations are
/// built with open axes and all boundary coupling comes from those steps.
pub fn compile(program: &StepProgram, table: &SiteTable, boundary: &BoundaryTopology) -> Result<CompiledProgram> {
    let bulk = if program.has_boundary_ops() {
        BoundaryTopology { axes: vec![AxisRule::Open; table.dimension()], seam: None }
    } else {
        boundary.clone()
    };
    let seams = if program.has_boundary_ops() { Some(seam_pairs(table, boundary)?) } else { None };
    let mut tessellations = Vec::new();
    for op in &program.ops {
        match op {
            StepOp::Tessellation { kind, angle } => {
                let pairs = tessellation_pairs(table, *kind, &bulk)?;
                tessellations.push(angle.tessellation(pairs, table)?);
            }
            StepOp::Coin { angle } => {
                let pairs = tessellation_pairs(table, TessKind::X0, &bulk)?;
                tessellations.push(angle.tessellation(pairs, table)?);
            }
            StepOp::Shift { dir } => tessellations.extend(shift_tessellations(table, &bulk, *dir)?),
            StepOp::Boundary { axis, angle } => {
                if *axis >= table.dimension() {
                    return Err(Error::InvalidParameter(format!("boundary axis {axis} outside the lattice")));
                }
                let pairs = seams.as_ref().map(|s| s.axis(*axis).clone()).unwrap_or_default();
                tessellations.push(Tessellation::uniform(pairs, *angle));
            }
        }
    }
    Ok(CompiledProgram { n_sites: table.len(), tessellations })
}

impl CompiledProgram {
    pub fn from_tessellations(n_sites: usize, tessellations: Vec<Tessellation>) -> Self {
        CompiledProgram { n_sites, tessellations }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn tessellations(&self) -> &[Tessellation] {
        &self.tessellations
    }

    pub fn apply_period(&self, state: &mut WalkerState) {
        for t in &self.tessellations {
            apply_tessellation(state, t);
        }
    }

    /// Inverse of one period.
    pub fn adjoint(&self) -> CompiledProgram {
        CompiledProgram {
            n_sites: self.n_sites,
            tessellations: self.tessellations.iter().rev().map(Tessellation::adjoint).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `|ψ_x|²` after each period, starting with the initial state.
    pub probabilities: Vec<Vec<f64>>,
    /// Full states per period when requested.
    pub states: Vec<WalkerState>,
    pub final_state: WalkerState,
    /// Largest `|‖ψ‖² − 1|` seen along the run.
    pub max_norm_error: f64,
}

pub fn run_program(
    state0: &WalkerState,
    program: &CompiledProgram,
    steps: usize,
    keep_states: bool,
) -> Result<Trajectory> {
    if state0.len() != program.n_sites {
        return Err(Error::DimensionMismatch { expected: program.n_sites, got: state0.len() });
    }
    let mut state = state0.clone();
    let mut probabilities = Vec::with_capacity(steps + 1);
    let mut states = Vec::new();
    let mut max_norm_error = (state.norm_sqr() - 1.0).abs();
    probabilities.push(state.probabilities());
    if keep_states {
        states.push(state.clone());
    }
    for _ in 0..steps {
        program.apply_period(&mut state);
        max_norm_error = max_norm_error.max((state.norm_sqr() - 1.0).abs());
        probabilities.push(state.probabilities());
        if keep_states {
            states.push(state.clone());
        }
    }
    Ok(Trajectory { probabilities, states, final_state: state, max_norm_error })
}
