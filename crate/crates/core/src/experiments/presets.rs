//! Ready-made configs for the standard runs.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

use super::config::*;
use crate::decoherence::ChannelSchedule;
use crate::lattice::{AxisRule, BoundaryTopology, LatticeSpec, Seam, TessKind, UnitKind};
use crate::walk::{AngleField, SpatialAngle};

pub const PRESET_NAMES: [&str; 13] = [
    "density_maps",
    "transport",
    "edge_1d_wall",
    "edge_1d_smooth",
    "edge_2d_chern",
    "edge_2d_simple",
    "edge_2d_tetramer",
    "edge_3d",
    "edge_3d_homogeneous",
    "anomalous_2d",
    "insulator_3d",
    "surface_torus",
    "surface_moebius",
];

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let mut c = match name {
        "density_maps" => dephasing(vec![0.0, 0.05, 1.0], true),
        "transport" => dephasing(vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0], false),
        "edge_1d_wall" => edge_1d((PI / 10.0, 4.0 * PI / 10.0), (4.0 * PI / 10.0, PI / 10.0)),
        "edge_1d_smooth" => edge_1d((PI / 10.0, 4.0 * PI / 10.0), (3.0 * PI / 20.0, 9.0 * PI / 20.0)),
        "edge_2d_chern" => edge_2d(CoinedPreset::Chern2d),
        "edge_2d_simple" => edge_2d(CoinedPreset::Simple2d),
        "edge_2d_tetramer" => edge_2d_tetramer(),
        "edge_3d" => edge_3d(true),
        "edge_3d_homogeneous" => edge_3d(false),
        "anomalous_2d" => anomalous_2d(),
        "insulator_3d" => insulator_3d(),
        "surface_torus" => surface(BoundaryTopology::torus()),
        "surface_moebius" => surface(BoundaryTopology::with_seam(Seam::MoebiusX)),
        _ => return None,
    };
    c.name = name.into();
    Some(c)
}

fn base(kind: ExperimentKind, steps: usize, lattice: LatticeSpec, program: ProgramConfig) -> ExperimentConfig {
    let d = lattice.dimension;
    ExperimentConfig {
        name: String::new(),
        kind,
        steps,
        lattice,
        boundary: BoundaryTopology::open(d),
        program,
        angles: BTreeMap::new(),
        init: InitConfig::Center,
        noise: NoiseConfig::default(),
        output: OutputConfig::default(),
        analysis: AnalysisConfig::default(),
    }
}

fn angles(pairs: &[(&str, AngleField)]) -> BTreeMap<String, AngleField> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn stripe(axis: usize, lo: f64, hi: f64, inside: f64, outside: f64) -> AngleField {
    AngleField::Spatial(SpatialAngle::Stripe { axis, lo, hi, inside, outside })
}

fn ops(list: &[TessKind]) -> ProgramConfig {
    ProgramConfig::Ops {
        order: OpOrder::Application,
        ops: list.iter().map(|&kind| OpConfig::Tessellation { kind, angle: None }).collect(),
    }
}

/// 101-site chain, `θ = π/4`, 50 tessellation steps with dephasing after
/// each tessellation.
fn dephasing(p_s: Vec<f64>, maps: bool) -> ExperimentConfig {
    let mut c =
        base(ExperimentKind::Dephasing, 50, LatticeSpec::chain_sites(101, 1.0, 1.0), ProgramConfig::CoinlessPlain);
    c.angles = angles(&[("x0", FRAC_PI_4.into()), ("x1", FRAC_PI_4.into())]);
    c.noise = NoiseConfig { p_s, schedule: ChannelSchedule::PerTessellation };
    c.output.density_maps = maps;
    c
}

/// 641-site chain with a tanh wall of width `0.1 a0` at the central site;
/// 100 periods of the symmetric program.
fn edge_1d(minus: (f64, f64), plus: (f64, f64)) -> ExperimentConfig {
    let sites = 641;
    let mut c =
        base(ExperimentKind::Edge1d, 100, LatticeSpec::chain_sites(sites, 1.0, 1.0), ProgramConfig::CoinlessSymmetric);
    let center = (sites / 2) as f64;
    let wall =
        |m: f64, p: f64| AngleField::Spatial(SpatialAngle::Profile { axis: 0, minus: m, plus: p, width: 0.1, center });
    c.angles = angles(&[("x0", wall(minus.0, plus.0)), ("x1", wall(minus.1, plus.1))]);
    c.init = InitConfig::Site { site: sites / 2 };
    c
}

/// Coined walk on periodic `8 × 10` dimers with `(π/10, 4π/10)` inside
/// `2 ≤ x ≤ 4` and `(4π/10, π/10)` outside.
fn edge_2d(protocol: CoinedPreset) -> ExperimentConfig {
    let mut c = base(
        ExperimentKind::Edge2d,
        200,
        LatticeSpec::uniform(UnitKind::Dimer, &[8, 10], 1.0),
        ProgramConfig::Coined { protocol },
    );
    c.boundary = BoundaryTopology::periodic(2);
    c.angles = angles(&[
        ("coin0", stripe(0, 2.0, 4.0, PI / 10.0, 4.0 * PI / 10.0)),
        ("coin1", stripe(0, 2.0, 4.0, 4.0 * PI / 10.0, PI / 10.0)),
    ]);
    c.init = InitConfig::Terms { terms: vec![InitTerm::cell(&[2, 5], "e"), InitTerm::cell(&[4, 5], "e")] };
    c.analysis.planes = vec![2, 4];
    c.output.cell_sums = true;
    c
}

/// Coinless walk on `13 × 10` tetramers, open along x and periodic along
/// y, with `(θx0, θx1) = (π/10, 4π/10)` for `3 < x ≤ 9`.
fn edge_2d_tetramer() -> ExperimentConfig {
    let mut c = base(
        ExperimentKind::Edge2d,
        209,
        LatticeSpec::uniform(UnitKind::Tetramer, &[13, 10], 1.0),
        ops(&[TessKind::X0, TessKind::X1, TessKind::Y0, TessKind::Y1]),
    );
    c.boundary = BoundaryTopology { axes: vec![AxisRule::Open, AxisRule::Periodic], seam: None };
    c.angles = angles(&[
        ("x0", stripe(0, 3.5, 9.0, PI / 10.0, 4.0 * PI / 10.0)),
        ("x1", stripe(0, 3.5, 9.0, 4.0 * PI / 10.0, PI / 10.0)),
        ("y0", FRAC_PI_3.into()),
        ("y1", (PI / 10.0).into()),
    ]);
    c.init = InitConfig::Terms { terms: vec![InitTerm::cell(&[4, 5], "oo")] };
    c.analysis.planes = vec![3, 4, 9, 10];
    c.output.cell_sums = true;
    c
}

/// Coined 3D walk on periodic `8 × 8 × 8` dimers with `(4π/10, π/10)`
/// inside `3 ≤ x ≤ 5`, started on the `x = 3` and `x = 5` planes.
fn edge_3d(with_stripe: bool) -> ExperimentConfig {
    let mut c = base(
        ExperimentKind::Edge3d,
        200,
        LatticeSpec::uniform(UnitKind::Dimer, &[8, 8, 8], 1.0),
        ProgramConfig::Coined { protocol: CoinedPreset::Coined3d },
    );
    c.boundary = BoundaryTopology::periodic(3);
    let (inside, outside) = ((4.0 * PI / 10.0, PI / 10.0), (PI / 10.0, 4.0 * PI / 10.0));
    c.angles = if with_stripe {
        angles(&[
            ("coin0", stripe(0, 3.0, 5.0, inside.0, outside.0)),
            ("coin1", stripe(0, 3.0, 5.0, inside.1, outside.1)),
        ])
    } else {
        angles(&[("coin0", inside.0.into()), ("coin1", inside.1.into())])
    };
    c.init = InitConfig::Terms { terms: vec![InitTerm::cell(&[3, 3, 3], "o"), InitTerm::cell(&[5, 3, 3], "o")] };
    c.analysis.planes = vec![3, 5];
    c.output.cell_sums = true;
    c
}

/// Four full swaps per period on open `6 × 6` dimers.
fn anomalous_2d() -> ExperimentConfig {
    let mut c = base(
        ExperimentKind::Insulator,
        12,
        LatticeSpec::uniform(UnitKind::Dimer, &[6, 6], 1.0),
        ops(&[TessKind::Xy0, TessKind::X1, TessKind::Xy1, TessKind::X0]),
    );
    c.angles = ["xy0", "x1", "xy1", "x0"].iter().map(|k| (k.to_string(), FRAC_PI_2.into())).collect();
    c.init = InitConfig::Terms { terms: vec![InitTerm::cell(&[0, 0], "o")] };
    c.output.trajectory = true;
    c
}

/// Eight full swaps per period on open `4 × 4 × 4` dimers.
fn insulator_3d() -> ExperimentConfig {
    use TessKind::*;
    let seq = [X1, Xy1, X0, Xy0, Xz0, X0, Xz1, X1];
    let mut c = base(ExperimentKind::Insulator, 8, LatticeSpec::uniform(UnitKind::Dimer, &[4, 4, 4], 1.0), ops(&seq));
    c.angles = seq.iter().map(|k| (k.name().to_string(), FRAC_PI_2.into())).collect();
    c.init = InitConfig::Terms { terms: vec![InitTerm::cell(&[0, 0, 0], "o")] };
    c.output.trajectory = true;
    c
}

/// `6 × 6` tetramers with explicit boundary steps,
/// `xb, x1, x0, yb, y1, y0` in application order.
fn surface(boundary: BoundaryTopology) -> ExperimentConfig {
    let seq = [
        OpConfig::Boundary { axis: 0, angle: None },
        OpConfig::Tessellation { kind: TessKind::X1, angle: None },
        OpConfig::Tessellation { kind: TessKind::X0, angle: None },
        OpConfig::Boundary { axis: 1, angle: None },
        OpConfig::Tessellation { kind: TessKind::Y1, angle: None },
        OpConfig::Tessellation { kind: TessKind::Y0, angle: None },
    ];
    let mut c = base(
        ExperimentKind::Surface,
        30,
        LatticeSpec::uniform(UnitKind::Tetramer, &[6, 6], 1.0),
        ProgramConfig::Ops { order: OpOrder::Application, ops: seq.to_vec() },
    );
    c.boundary = boundary;
    c.angles = ["xb", "x0", "x1", "yb", "y0", "y1"].iter().map(|k| (k.to_string(), FRAC_PI_4.into())).collect();
    c.init = InitConfig::Terms { terms: vec![InitTerm::cell(&[5, 1], "eo")] };
    c.output.trajectory = true;
    c
}
