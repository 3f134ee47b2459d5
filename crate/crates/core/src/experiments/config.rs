use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::decoherence::ChannelSchedule;
use crate::error::{Error, Result};
use crate::lattice::{BoundaryTopology, LatticeSpec, SiteTable, TessKind};
use crate::topology::CoinedProtocol;
use crate::walk::{AngleField, ShiftDir, StepOp, StepProgram};
use crate::C64;

/// What a run computes on top of the plain trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Pure-state evolution only.
    Walk,
    /// Domain wall on a chain: trapped probability near the start.
    Edge1d,
    /// Stripe on a 2D lattice: probability on the stripe borders.
    Edge2d,
    /// Stripe on a 3D lattice: probability on the stripe planes.
    Edge3d,
    /// Walk on a closed surface built from boundary steps.
    Surface,
    /// Full-swap protocols: which basis states return after one period.
    Insulator,
    /// Density-matrix evolution swept over dephasing probabilities.
    Dephasing,
}

/// A complete run description, the root of a TOML config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub kind: ExperimentKind,
    /// Program periods, or channel steps for dephasing runs.
    pub steps: usize,
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub boundary: BoundaryTopology,
    pub program: ProgramConfig,
    /// Named angle fields referenced by the program: `x0`, `x1`, `y0`, ...
    /// for tessellations, `coin0`, `coin1` for coins, `xb`, `yb`, `zb` for
    /// boundary steps.
    #[serde(default)]
    pub angles: BTreeMap<String, AngleField>,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpOrder {
    /// Ops listed in the order they act.
    #[default]
    Application,
    /// Ops listed as an operator product, rightmost first.
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProgramConfig {
    /// `x0/2, x1, x0/2` on a chain.
    CoinlessSymmetric,
    /// `x0, x1` on a chain.
    CoinlessPlain,
    Coined {
        protocol: CoinedPreset,
    },
    Ops {
        #[serde(default)]
        order: OpOrder,
        ops: Vec<OpConfig>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoinedPreset {
    Simple2d,
    Chern2d,
    Coined3d,
}

impl CoinedPreset {
    pub fn protocol(self) -> CoinedProtocol {
        match self {
            CoinedPreset::Simple2d => CoinedProtocol::simple_2d(),
            CoinedPreset::Chern2d => CoinedProtocol::chern_2d(),
            CoinedPreset::Coined3d => CoinedProtocol::coined_3d(),
        }
    }
}

/// One program op; a missing angle is looked up in `[angles]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpConfig {
    Tessellation {
        kind: TessKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle: Option<AngleField>,
    },
    Coin {
        #[serde(default)]
        index: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle: Option<AngleField>,
    },
    Shift {
        dir: ShiftDir,
    },
    Boundary {
        axis: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle: Option<f64>,
    },
}

/// Initial walker state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    /// The site closest to the lattice center, lowest index on ties.
    #[default]
    Center,
    Site {
        site: usize,
    },
    /// Normalized superposition.
    Terms {
        terms: Vec<InitTerm>,
    },
}

/// A basis state given by index or by cell and parity bits, with a complex
/// amplitude `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitTerm {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<Vec<usize>>,
    /// Parity labels per split axis, `o` or `e`, e.g. `"oe"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<String>,
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

impl InitTerm {
    pub fn cell(cell: &[usize], parity: &str) -> Self {
        InitTerm { site: None, cell: Some(cell.to_vec()), parity: Some(parity.into()), amplitude: unit_amplitude() }
    }

    fn resolve(&self, table: &SiteTable) -> Result<usize> {
        match (&self.site, &self.cell) {
            (Some(s), None) if *s < table.len() => Ok(*s),
            (Some(s), None) => Err(Error::SiteOutOfRange { index: *s, len: table.len() }),
            (None, Some(cell)) => {
                if cell.len() != table.dimension() {
                    return Err(Error::DimensionMismatch { expected: table.dimension(), got: cell.len() });
                }
                let labels = self.parity.as_deref().unwrap_or("");
                if labels.chars().count() != table.split_axes() {
                    return Err(Error::InvalidParameter(format!(
                        "parity {labels:?} needs {} labels",
                        table.split_axes()
                    )));
                }
                let mut bits = 0u8;
                for (a, ch) in labels.chars().enumerate() {
                    match ch {
                        'e' => bits |= 1 << a,
                        'o' => {}
                        other => return Err(Error::InvalidParameter(format!("parity label {other:?}"))),
                    }
                }
                let mut c = [0usize; 3];
                c[..cell.len()].copy_from_slice(cell);
                table
                    .index(c, bits)
                    .ok_or_else(|| Error::InvalidParameter(format!("no site at cell {cell:?} parity {labels}")))
            }
            _ => Err(Error::InvalidParameter("an initial term needs exactly one of `site` or `cell`".into())),
        }
    }
}

impl InitConfig {
    /// Basis indices and amplitudes, unnormalized.
    pub fn resolve(&self, table: &SiteTable) -> Result<Vec<(usize, C64)>> {
        match self {
            InitConfig::Center => Ok(vec![(center_site(table), C64::new(1.0, 0.0))]),
            InitConfig::Site { site } => {
                InitTerm { site: Some(*site), cell: None, parity: None, amplitude: unit_amplitude() }
                    .resolve(table)
                    .map(|s| vec![(s, C64::new(1.0, 0.0))])
            }
            InitConfig::Terms { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidParameter("empty initial state".into()));
                }
                terms.iter().map(|t| Ok((t.resolve(table)?, C64::new(t.amplitude[0], t.amplitude[1])))).collect()
            }
        }
    }
}

/// Site closest to the geometric center, lowest index on ties.
pub fn center_site(table: &SiteTable) -> usize {
    let c = table.center();
    let d2 = |i: usize| {
        let p = table.site(i).position;
        (0..3).map(|a| (p[a] - c[a]).powi(2)).sum::<f64>()
    };
    (0..table.len()).fold(0, |best, i| if d2(i) < d2(best) - 1e-12 { i } else { best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Dephasing probabilities swept by dephasing runs.
    #[serde(default = "default_p_s")]
    pub p_s: Vec<f64>,
    #[serde(default)]
    pub schedule: ChannelSchedule,
}

fn default_p_s() -> Vec<f64> {
    vec![0.0]
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { p_s: default_p_s(), schedule: ChannelSchedule::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Keep per-step probabilities.
    #[serde(default)]
    pub trajectory: bool,
    /// Keep every `stride`-th step of the trajectory.
    #[serde(default = "one")]
    pub stride: usize,
    /// Also report probabilities summed over the sites of each cell.
    #[serde(default)]
    pub cell_sums: bool,
    /// Keep `|ρ(x, x′)|` of the final density matrices.
    #[serde(default)]
    pub density_maps: bool,
}

fn one() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { trajectory: false, stride: 1, cell_sums: false, density_maps: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Half-width in sites of the window around the start counted as trapped.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Axis and cell coordinates whose sites count as the edge region.
    #[serde(default)]
    pub plane_axis: usize,
    #[serde(default)]
    pub planes: Vec<usize>,
    /// Refuse stripe and wall parameters that share one gapped phase.
    #[serde(default = "yes")]
    pub consistency_gate: bool,
    /// Momentum grid per axis for the gate and the side invariants.
    #[serde(default = "default_k_grid")]
    pub k_grid: usize,
    /// Momentum grid per axis for coined protocols, whose cost grows with
    /// the dimension.
    #[serde(default = "default_coined_k_grid")]
    pub coined_k_grid: usize,
    /// Dephasing runs: `γt` limits of the ballistic and diffusive fits and
    /// of the quadratic coefficient.
    #[serde(default = "default_ballistic")]
    pub ballistic_below: f64,
    #[serde(default = "default_diffusive")]
    pub diffusive_above: f64,
    #[serde(default = "one_f")]
    pub quadratic_below: f64,
}

fn default_window() -> usize {
    5
}
fn yes() -> bool {
    true
}
fn default_k_grid() -> usize {
    64
}
fn default_coined_k_grid() -> usize {
    16
}
fn default_ballistic() -> f64 {
    0.5
}
fn default_diffusive() -> f64 {
    3.0
}
fn one_f() -> f64 {
    1.0
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window: default_window(),
            plane_axis: 0,
            planes: Vec::new(),
            consistency_gate: true,
            k_grid: default_k_grid(),
            coined_k_grid: default_coined_k_grid(),
            ballistic_below: default_ballistic(),
            diffusive_above: default_diffusive(),
            quadratic_below: one_f(),
        }
    }
}

impl ExperimentConfig {
    fn angle(&self, name: &str) -> Result<AngleField> {
        self.angles.get(name).cloned().ok_or_else(|| Error::InvalidParameter(format!("no angle given for `{name}`")))
    }

    /// Basic consistency of the config on its own.
    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        if self.output.stride == 0 {
            return Err(Error::InvalidParameter("output stride must be positive".into()));
        }
        if self.noise.p_s.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("dephasing probabilities must lie in [0, 1]".into()));
        }
        if self.kind == ExperimentKind::Dephasing && self.noise.p_s.is_empty() {
            return Err(Error::InvalidParameter("dephasing run without probabilities".into()));
        }
        if self.analysis.k_grid < 4 || self.analysis.coined_k_grid < 4 {
            return Err(Error::InvalidParameter("k grid needs at least 4 points".into()));
        }
        if self.analysis.plane_axis >= self.lattice.dimension {
            return Err(Error::InvalidParameter(format!(
                "plane axis {} outside the lattice",
                self.analysis.plane_axis
            )));
        }
        Ok(())
    }

    /// The program in application order with every angle resolved.
    pub fn step_program(&self) -> Result<StepProgram> {
        match &self.program {
            ProgramConfig::CoinlessSymmetric => {
                Ok(StepProgram::coinless_symmetric(self.angle("x0")?, self.angle("x1")?))
            }
            ProgramConfig::CoinlessPlain => Ok(StepProgram::coinless_plain(self.angle("x0")?, self.angle("x1")?)),
            ProgramConfig::Coined { protocol } => {
                let p = protocol.protocol();
                let fields =
                    (0..p.angle_count()).map(|i| self.angle(&format!("coin{i}"))).collect::<Result<Vec<_>>>()?;
                p.program(&fields)
            }
            ProgramConfig::Ops { order, ops } => {
                let mut resolved = Vec::with_capacity(ops.len());
                for op in ops {
                    resolved.push(match op {
                        OpConfig::Tessellation { kind, angle } => StepOp::Tessellation {
                            kind: *kind,
                            angle: match angle {
                                Some(a) => a.clone(),
                                None => self.angle(kind.name())?,
                            },
                        },
                        OpConfig::Coin { index, angle } => StepOp::Coin {
                            angle: match angle {
                                Some(a) => a.clone(),
                                None => self.angle(&format!("coin{index}"))?,
                            },
                        },
                        OpConfig::Shift { dir } => StepOp::Shift { dir: *dir },
                        OpConfig::Boundary { axis, angle } => StepOp::Boundary {
                            axis: *axis,
                            angle: match angle {
                                Some(a) => *a,
                                None => {
                                    let name = format!("{}b", ["x", "y", "z"].get(*axis).copied().unwrap_or("?"));
                                    match self.angle(&name)? {
                                        AngleField::Uniform(t) => t,
                                        AngleField::Spatial(_) => {
                                            return Err(Error::InvalidParameter(format!(
                                                "boundary angle `{name}` must be uniform"
                                            )))
                                        }
                                    }
                                }
                            },
                        },
                    });
                }
                Ok(match order {
                    OpOrder::Application => StepProgram::new(resolved),
                    OpOrder::Product => StepProgram::from_product(resolved),
                })
            }
        }
    }
}
