use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, ProgramConfig};
use crate::decoherence::{
    coherence_length, evolve, mean_square_displacement, power_law_fit, quadratic_coefficient, CoherenceLength,
    DensityMatrix, DephasingModel, PowerLaw,
};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, SiteTable};
use crate::par::Exec;
use crate::topology::{invariants, GapProtocol, Invariants, GAP_TOLERANCE};
use crate::walk::{compile, run_program, AngleField, CompiledProgram, SpatialAngle, WalkerState};

/// Overlap modulus counted as an exact return.
pub const RETURN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellProbability {
    pub cell: [usize; 3],
    pub probability: f64,
}

/// Hopping angles on one side of a wall or stripe and their phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidePhase {
    pub label: String,
    pub theta0: f64,
    pub theta1: f64,
    /// Smaller of the gaps at `E = 0` and `E = π`.
    pub min_gap: f64,
    /// Chain invariants, when the angles describe a chain.
    pub invariants: Option<Invariants>,
}

/// Outcome of the check that the two sides of a stripe or wall are
/// separated by a gap closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    /// `chain` or `coined`.
    pub family: String,
    pub sides: Vec<SidePhase>,
    /// Smallest gap along the straight path between the two sides.
    pub min_gap_on_path: f64,
    /// Path parameter in `[0, 1]` where that minimum sits.
    pub closure_at: f64,
    pub separated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    /// 1D runs: probability within `window` sites of the start.
    pub trapped_fraction: Option<f64>,
    /// Probability on the configured planes after the last step.
    pub plane_fraction: Option<f64>,
    /// Plane probability after every step, starting with step 0.
    pub plane_series: Vec<f64>,
    /// Share of sites lying on the planes.
    pub plane_volume_fraction: Option<f64>,
}

/// Which basis states one period maps back to themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnReport {
    /// `|⟨b|U|b⟩|` per site.
    pub overlaps: Vec<f64>,
    /// Sites whose swap path uses a bond in every tessellation.
    pub bulk: Vec<usize>,
    pub boundary: Vec<usize>,
    pub bulk_min_overlap: f64,
    pub boundary_max_overlap: f64,
    /// Boundary sites mapped to another boundary site with unit weight.
    pub boundary_images: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingRun {
    pub p_s: f64,
    /// `(γt, ⟨x²⟩)` per step, `γt = step · p_s`.
    pub msd: Vec<(f64, f64)>,
    pub final_diagonal: Vec<f64>,
    /// `|ρ(c + x, c − x)|` for `x = 0, 1, ...` around the start site.
    pub anti_diagonal: Vec<f64>,
    /// Row-major `|ρ(x, x′)|`.
    pub density_map: Option<Vec<f64>>,
    pub max_trace_error: f64,
    pub coherence_length: Option<CoherenceLength>,
    pub ballistic: Option<PowerLaw>,
    pub diffusive: Option<PowerLaw>,
    pub quadratic_coefficient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub kind: ExperimentKind,
    pub n_sites: usize,
    pub steps: usize,
    pub start_sites: Vec<usize>,
    pub final_probabilities: Vec<f64>,
    pub cell_probabilities: Option<Vec<CellProbability>>,
    /// `(step, probabilities)` every `stride` steps.
    pub trajectory: Option<Vec<(usize, Vec<f64>)>>,
    pub max_norm_error: f64,
    pub sides: Vec<SidePhase>,
    pub gate: Option<GateReport>,
    pub edge: Option<EdgeReport>,
    pub returns: Option<ReturnReport>,
    pub dephasing: Vec<DephasingRun>,
    pub warnings: Vec<String>,
}

/// Probabilities summed over the sites of each cell, in cell order.
pub fn cell_sums(table: &SiteTable, probabilities: &[f64]) -> Vec<CellProbability> {
    let mut out: Vec<CellProbability> = Vec::new();
    for (i, p) in probabilities.iter().enumerate() {
        let cell = table.site(i).cell;
        match out.last_mut() {
            Some(last) if last.cell == cell => last.probability += p,
            _ => out.push(CellProbability { cell, probability: *p }),
        }
    }
    out
}

fn plane_sites(table: &SiteTable, axis: usize, planes: &[usize]) -> Vec<bool> {
    table.sites().iter().map(|s| planes.contains(&s.cell[axis])).collect()
}

fn masked_sum(p: &[f64], mask: &[bool]) -> f64 {
    p.iter().zip(mask).filter(|(_, m)| **m).map(|(x, _)| x).sum()
}

/// The two limiting values of a wall or stripe field.
fn field_sides(field: &AngleField) -> (f64, f64) {
    match field {
        AngleField::Uniform(t) => (*t, *t),
        AngleField::Spatial(SpatialAngle::Profile { minus, plus, .. }) => (*minus, *plus),
        AngleField::Spatial(SpatialAngle::Stripe { inside, outside, .. }) => (*inside, *outside),
    }
}

/// The `(θ0, θ1)` family of a program and its two sides, when it has one.
/// `(label, θ0, θ1)` on each side of a wall or stripe.
type Sides = [(String, f64, f64); 2];

fn program_sides(config: &ExperimentConfig) -> Option<(GapProtocol, Sides)> {
    let pick = |a: &str, b: &str| Some((config.angles.get(a)?, config.angles.get(b)?));
    let (family, (f0, f1)) = match &config.program {
        ProgramConfig::CoinlessSymmetric | ProgramConfig::CoinlessPlain | ProgramConfig::Ops { .. } => {
            (GapProtocol::Chain, pick("x0", "x1")?)
        }
        ProgramConfig::Coined { protocol } => {
            (GapProtocol::Coined { protocol: protocol.protocol() }, pick("coin0", "coin1")?)
        }
    };
    let stripe = matches!(f0, AngleField::Spatial(SpatialAngle::Stripe { .. }))
        || matches!(f1, AngleField::Spatial(SpatialAngle::Stripe { .. }));
    let (a0, b0) = field_sides(f0);
    let (a1, b1) = field_sides(f1);
    let (la, lb) = if stripe { ("inside", "outside") } else { ("minus", "plus") };
    Some((family, [(la.into(), a0, a1), (lb.into(), b0, b1)]))
}

fn has_spatial_angles(config: &ExperimentConfig) -> bool {
    config.angles.values().any(|f| matches!(f, AngleField::Spatial(_)))
}

fn side_phase(family: &GapProtocol, label: &str, theta0: f64, theta1: f64, abar: f64, k_grid: usize) -> SidePhase {
    let (g0, gpi) = family.gaps(theta0, theta1, k_grid);
    let inv = match family {
        GapProtocol::Chain => invariants(theta0, theta1, abar, k_grid.max(256)).ok(),
        GapProtocol::Coined { .. } => None,
    };
    SidePhase { label: label.into(), theta0, theta1, min_gap: g0.min(gpi), invariants: inv }
}

/// Smallest gap on the segment between two parameter points: coarse scan
/// followed by golden-section refinement around the best sample.
fn path_minimum(family: &GapProtocol, a: (f64, f64), b: (f64, f64), k_grid: usize) -> (f64, f64) {
    let gap = |s: f64| {
        let (g0, gpi) = family.gaps(a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1), k_grid);
        g0.min(gpi)
    };
    let samples = 64;
    let (mut best_s, mut best) = (0.0, gap(0.0));
    for i in 1..=samples {
        let s = i as f64 / samples as f64;
        let g = gap(s);
        if g < best {
            best = g;
            best_s = s;
        }
    }
    let h = 1.0 / samples as f64;
    let (mut lo, mut hi) = ((best_s - h).max(0.0), (best_s + h).min(1.0));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let m1 = hi - r * (hi - lo);
        let m2 = lo + r * (hi - lo);
        if gap(m1) < gap(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let s = 0.5 * (lo + hi);
    let g = gap(s);
    if g < best {
        (g, s)
    } else {
        (best, best_s)
    }
}

fn gate(config: &ExperimentConfig, abar: f64) -> Option<GateReport> {
    let (family, sides) = program_sides(config)?;
    let k = match family {
        GapProtocol::Chain => config.analysis.k_grid,
        GapProtocol::Coined { .. } => config.analysis.coined_k_grid,
    };
    let phases: Vec<SidePhase> = sides.iter().map(|(l, t0, t1)| side_phase(&family, l, *t0, *t1, abar, k)).collect();
    let (a, b) = ((sides[0].1, sides[0].2), (sides[1].1, sides[1].2));
    let (min_gap, at) = path_minimum(&family, a, b, k);
    let open = phases.iter().all(|p| p.min_gap >= GAP_TOLERANCE);
    let separated = open
        && min_gap < GAP_TOLERANCE
        && match (&phases[0].invariants, &phases[1].invariants) {
            (Some(x), Some(y)) => (x.nu_zero, x.nu_pi) != (y.nu_zero, y.nu_pi),
            _ => true,
        };
    let family_name = match family {
        GapProtocol::Chain => "chain",
        GapProtocol::Coined { .. } => "coined",
    };
    Some(GateReport { family: family_name.into(), sides: phases, min_gap_on_path: min_gap, closure_at: at, separated })
}

/// Compile and start a config's pure-state run.
pub fn prepare(config: &ExperimentConfig) -> Result<(SiteTable, CompiledProgram, WalkerState, Vec<usize>)> {
    config.validate()?;
    let table = build_lattice(&config.lattice)?;
    let program = compile(&config.step_program()?, &table, &config.boundary)?;
    let terms = config.init.resolve(&table)?;
    let start: Vec<usize> = terms.iter().map(|t| t.0).collect();
    let state = WalkerState::superposition(table.len(), &terms)?;
    Ok((table, program, state, start))
}

pub fn run_experiment(config: &ExperimentConfig, exec: Exec) -> Result<ExperimentReport> {
    let (table, program, state0, start) = prepare(config)?;
    let abar = config.lattice.inter_fraction(0);
    let mut warnings = Vec::new();

    let mut sides = Vec::new();
    let mut gate_report = None;
    match config.kind {
        ExperimentKind::Edge1d => {
            if let Some((family, s)) = program_sides(config) {
                for (l, t0, t1) in &s {
                    let p = side_phase(&family, l, *t0, *t1, abar, config.analysis.k_grid);
                    if p.min_gap < GAP_TOLERANCE {
                        let msg = format!("{l} side (θ0, θ1) = ({t0}, {t1}) sits on a gap closure");
                        log::warn!("{msg}");
                        warnings.push(msg);
                    }
                    sides.push(p);
                }
            }
        }
        ExperimentKind::Edge2d | ExperimentKind::Edge3d => {
            if let Some(g) = gate(config, abar).filter(|_| has_spatial_angles(config)) {
                if !g.separated {
                    let msg = format!(
                        "stripe sides share one gapped region (smallest gap on the path {:.3e})",
                        g.min_gap_on_path
                    );
                    if config.analysis.consistency_gate {
                        return Err(Error::Incompatible { what: "stripe angles".into(), why: msg });
                    }
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                sides = g.sides.clone();
                gate_report = Some(g);
            }
        }
        _ => {}
    }

    if config.kind == ExperimentKind::Dephasing {
        return run_dephasing(config, &table, &program, &state0, start, exec, warnings);
    }

    let traj = run_program(&state0, &program, config.steps, false)?;
    let final_probabilities = traj.final_state.probabilities();

    let edge = match config.kind {
        ExperimentKind::Edge1d => {
            let s0 = table.global(start[0])[0] as i64;
            let w = config.analysis.window as i64;
            let trapped = final_probabilities
                .iter()
                .enumerate()
                .filter(|(i, _)| (table.global(*i)[0] as i64 - s0).abs() <= w)
                .map(|(_, p)| p)
                .sum();
            Some(EdgeReport {
                trapped_fraction: Some(trapped),
                plane_fraction: None,
                plane_series: Vec::new(),
                plane_volume_fraction: None,
            })
        }
        ExperimentKind::Edge2d | ExperimentKind::Edge3d if !config.analysis.planes.is_empty() => {
            let mask = plane_sites(&table, config.analysis.plane_axis, &config.analysis.planes);
            let series: Vec<f64> = traj.probabilities.iter().map(|p| masked_sum(p, &mask)).collect();
            Some(EdgeReport {
                trapped_fraction: None,
                plane_fraction: series.last().copied(),
                plane_series: series,
                plane_volume_fraction: Some(mask.iter().filter(|m| **m).count() as f64 / table.len() as f64),
            })
        }
        _ => None,
    };

    let returns = if config.kind == ExperimentKind::Insulator { Some(return_report(&table, &program)) } else { None };

    let trajectory = config.output.trajectory.then(|| {
        traj.probabilities
            .iter()
            .enumerate()
            .filter(|(s, _)| s % config.output.stride == 0 || *s == config.steps)
            .map(|(s, p)| (s, p.clone()))
            .collect()
    });

    Ok(ExperimentReport {
        name: config.name.clone(),
        kind: config.kind,
        n_sites: table.len(),
        steps: config.steps,
        start_sites: start,
        cell_probabilities: config.output.cell_sums.then(|| cell_sums(&table, &final_probabilities)),
        final_probabilities,
        trajectory,
        max_norm_error: traj.max_norm_error,
        sides,
        gate: gate_report,
        edge,
        returns,
        dephasing: Vec::new(),
        warnings,
    })
}

/// `|⟨b|U|b⟩|` for every basis state. A site is bulk when its swap path
/// through the period finds a partner in every tessellation, boundary when
/// it meets a missing bond.
pub fn return_report(table: &SiteTable, program: &CompiledProgram) -> ReturnReport {
    let n = table.len();
    let mut partner = vec![vec![None; n]; program.tessellations().len()];
    for (t, tess) in program.tessellations().iter().enumerate() {
        for p in tess.pairs().pairs() {
            partner[t][p.a] = Some(p.b);
            partner[t][p.b] = Some(p.a);
        }
    }
    let complete_path = |b: usize| {
        let mut at = b;
        for row in &partner {
            match row[at] {
                Some(j) => at = j,
                None => return false,
            }
        }
        true
    };
    let mut overlaps = Vec::with_capacity(n);
    let (mut bulk, mut boundary, mut boundary_images) = (Vec::new(), Vec::new(), Vec::new());
    let mut images = Vec::with_capacity(n);
    for b in 0..n {
        let mut s = WalkerState::basis(n, b);
        program.apply_period(&mut s);
        let amps = s.amplitudes();
        overlaps.push(amps[b].norm());
        images.push(amps.iter().position(|a| (a.norm() - 1.0).abs() < RETURN_TOLERANCE));
        if complete_path(b) {
            bulk.push(b);
        } else {
            boundary.push(b);
        }
    }
    for &b in &boundary {
        if let Some(j) = images[b] {
            if j != b && boundary.binary_search(&j).is_ok() {
                boundary_images.push((b, j));
            }
        }
    }
    let bulk_min_overlap = bulk.iter().map(|&b| overlaps[b]).fold(f64::INFINITY, f64::min);
    let boundary_max_overlap = boundary.iter().map(|&b| overlaps[b]).fold(0.0, f64::max);
    ReturnReport { overlaps, bulk, boundary, bulk_min_overlap, boundary_max_overlap, boundary_images }
}

fn run_dephasing(
    config: &ExperimentConfig,
    table: &SiteTable,
    program: &CompiledProgram,
    state0: &WalkerState,
    start: Vec<usize>,
    exec: Exec,
    warnings: Vec<String>,
) -> Result<ExperimentReport> {
    let n = table.len();
    let center = start[0];
    let steps = config.steps;
    let schedule = config.noise.schedule;

    // Noiseless reference for the coherence length.
    let mut ideal = DensityMatrix::from_state(state0);
    evolve(&mut ideal, program, &DephasingModel::new(0.0)?, schedule, steps, exec, |_, _| {})?;

    let mut runs = Vec::with_capacity(config.noise.p_s.len());
    let mut final_probabilities = Vec::new();
    for &p_s in &config.noise.p_s {
        let model = DephasingModel::new(p_s)?;
        let mut rho = DensityMatrix::from_state(state0);
        let mut msd = Vec::with_capacity(steps + 1);
        let mut max_trace_error = 0.0f64;
        evolve(&mut rho, program, &model, schedule, steps, exec, |step, r| {
            msd.push((step as f64 * p_s, mean_square_displacement(r, center)));
            max_trace_error = max_trace_error.max((r.trace() - 1.0).abs());
        })?;
        if max_trace_error > 1e-8 {
            return Err(Error::Integration(format!("trace drifted by {max_trace_error:e}")));
        }
        let reach = center.min(n - 1 - center);
        let anti_diagonal = (0..=reach).map(|x| rho.get(center + x, center - x).norm()).collect();
        let a = &config.analysis;
        let fit = |lo: f64, hi: f64| power_law_fit(&msd, lo, hi).ok();
        let noisy = p_s > 0.0;
        runs.push(DephasingRun {
            p_s,
            final_diagonal: rho.diagonal(),
            anti_diagonal,
            density_map: config.output.density_maps.then(|| rho.as_slice().iter().map(|z| z.norm()).collect()),
            max_trace_error,
            coherence_length: coherence_length(&rho, &ideal, center).ok(),
            ballistic: if noisy { fit(0.0, a.ballistic_below) } else { None },
            diffusive: if noisy { fit(a.diffusive_above, f64::INFINITY) } else { None },
            quadratic_coefficient: noisy
                .then(|| quadratic_coefficient(&msd, a.quadratic_below))
                .filter(|c| c.is_finite()),
            msd,
        });
        final_probabilities = rho.diagonal();
    }
    Ok(ExperimentReport {
        name: config.name.clone(),
        kind: config.kind,
        n_sites: n,
        steps,
        start_sites: start,
        cell_probabilities: config.output.cell_sums.then(|| cell_sums(table, &final_probabilities)),
        final_probabilities,
        trajectory: None,
        max_norm_error: runs.iter().map(|r| r.max_trace_error).fold(0.0, f64::max),
        sides: Vec::new(),
        gate: None,
        edge: None,
        returns: None,
        dephasing: runs,
        warnings,
    })
}
