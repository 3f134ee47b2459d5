use std::fs;
use std::path::{Path, PathBuf};

use rydberg_walk::experiments::{self, fmt_f64, report_csv, ExperimentConfig, ExperimentReport};
use rydberg_walk::lattice::{build_lattice, LatticeSpec};
use rydberg_walk::microphysics::{
    contrast_curve, error_budget, family_pair, leakage_infidelity, numerical_leakage, site_selectivity_scan,
    step_budget, Averaging, DetuningDistribution, DetuningErrorModel, LossModel, RydbergParams, StepBudgetConfig,
};
use rydberg_walk::par::{self, Exec};
use rydberg_walk::topology::{band_structure, chern_number, gap_map, phase_diagram, square_grid, Band, GapProtocol};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{config_err, CliError, CliResult};
use crate::output::{csv_bytes, Artifact, StageTiming, Stages};

/// Largest norm or trace drift accepted from a run.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;

/// Everything a command produced, before it is written.
pub struct Output {
    pub command: String,
    pub config_path: Option<PathBuf>,
    /// Parameters after defaults and overrides; hashed into the manifest.
    pub resolved: Value,
    pub artifacts: Vec<Artifact>,
    pub stages: Vec<StageTiming>,
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt_int<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Read a TOML file, or JSON when the extension says so.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let parsed = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text).map_err(|e| e.to_string()),
        _ => toml::from_str(&text).map_err(|e| e.to_string()),
    };
    parsed.map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn experiment_config(src: &Source) -> CliResult<ExperimentConfig> {
    let config = match (&src.config, &src.preset) {
        (Some(path), _) => load(path)?,
        (None, Some(name)) => experiments::preset(name).ok_or_else(|| {
            config_err(format!("unknown preset {name:?}; known: {}", experiments::PRESET_NAMES.join(", ")))
        })?,
        (None, None) => return Err(config_err("either --config or --preset is required")),
    };
    config.validate()?;
    Ok(config)
}

fn params(args: &ParamsArgs) -> CliResult<RydbergParams> {
    let mut p: RydbergParams = match &args.params {
        Some(path) => load(path)?,
        None => RydbergParams::default(),
    };
    if let Some(n) = args.n {
        p.n = n;
    }
    if let Some(r) = args.rabi {
        p.rabi_mhz = r;
    }
    p.validate()?;
    Ok(p)
}

fn check_conservation(report: &ExperimentReport) -> CliResult<()> {
    if !(report.max_norm_error <= CONSERVATION_TOLERANCE) {
        return Err(CliError::Numerical(format!("norm drifted by {:.3e}", report.max_norm_error)));
    }
    for d in &report.dephasing {
        if !(d.max_trace_error <= CONSERVATION_TOLERANCE) {
            return Err(CliError::Numerical(format!("trace drifted by {:.3e} at p_s = {}", d.max_trace_error, d.p_s)));
        }
    }
    Ok(())
}

pub fn run(src: &Source, exec: Exec) -> CliResult<Output> {
    let mut stages = Stages::default();
    let config = stages.time("load", || experiment_config(src))?;
    let (table, ..) = stages.time("prepare", || experiments::prepare(&config))?;
    let report = stages.time("evolve", || experiments::run_experiment(&config, exec))?;
    check_conservation(&report)?;

    let mut artifacts: Vec<Artifact> = stages
        .time("export", || report_csv(&report, &table))
        .into_iter()
        .map(|f| Artifact::new(f.name, f.body))
        .collect();
    let dephasing: Vec<Value> = report
        .dephasing
        .iter()
        .map(|d| {
            json!({
                "p_s": d.p_s,
                "max_trace_error": d.max_trace_error,
                "coherence_length": d.coherence_length,
                "ballistic": d.ballistic,
                "diffusive": d.diffusive,
                "quadratic_coefficient": d.quadratic_coefficient,
            })
        })
        .collect();
    let summary = json!({
        "name": report.name,
        "kind": report.kind,
        "n_sites": report.n_sites,
        "steps": report.steps,
        "start_sites": report.start_sites,
        "max_norm_error": report.max_norm_error,
        "sides": report.sides,
        "gate": report.gate,
        "edge": report.edge.as_ref().map(|e| json!({
            "trapped_fraction": e.trapped_fraction,
            "plane_fraction": e.plane_fraction,
            "plane_volume_fraction": e.plane_volume_fraction,
        })),
        "returns": report.returns.as_ref().map(|r| json!({
            "bulk_sites": r.bulk.len(),
            "boundary_sites": r.boundary.len(),
            "bulk_min_overlap": r.bulk_min_overlap,
            "boundary_max_overlap": r.boundary_max_overlap,
        })),
        "dephasing": dephasing,
        "warnings": report.warnings,
    });
    artifacts.push(Artifact::json("summary.json", &summary)?);
    Ok(Output {
        command: "run".into(),
        config_path: src.config.clone(),
        resolved: serde_json::to_value(&config)?,
        artifacts,
        stages: stages.into_inner(),
    })
}

pub fn lattice_dump(src: &Source) -> CliResult<Output> {
    let mut stages = Stages::default();
    let config = stages.time("load", || experiment_config(src))?;
    let table = stages.time("build", || build_lattice(&config.lattice))?;
    let rows = (0..table.len()).map(|i| {
        let s = table.site(i);
        let g = table.global(i);
        vec![
            i.to_string(),
            fmt_f64(s.position[0]),
            fmt_f64(s.position[1]),
            fmt_f64(s.position[2]),
            s.cell[0].to_string(),
            s.cell[1].to_string(),
            s.cell[2].to_string(),
            g[0].to_string(),
            g[1].to_string(),
            g[2].to_string(),
            table.parity_labels(i),
        ]
    });
    let body = csv_bytes(&["index", "x", "y", "z", "cx", "cy", "cz", "gx", "gy", "gz", "parities"], rows)?;
    let summary = json!({
        "n_sites": table.len(),
        "dimension": table.dimension(),
        "cells": table.cells(),
        "extent": (0..3).map(|a| table.extent(a)).collect::<Vec<_>>(),
    });
    Ok(Output {
        command: "lattice-dump".into(),
        config_path: src.config.clone(),
        resolved: serde_json::to_value::<&LatticeSpec>(&config.lattice)?,
        artifacts: vec![Artifact::new("sites.csv", body), Artifact::json("summary.json", &summary)?],
        stages: stages.into_inner(),
    })
}

pub fn bands(args: &BandsArgs) -> CliResult<Output> {
    if args.grid < 2 {
        return Err(config_err("--grid must be at least 2"));
    }
    if args.theta1.is_empty() {
        return Err(config_err("--theta1 needs at least one value"));
    }
    let mut stages = Stages::default();
    let curves: Vec<_> = stages
        .time("bands", || args.theta1.iter().map(|&t1| (t1, band_structure(args.theta0, t1, args.grid))).collect());
    let rows = curves.iter().enumerate().flat_map(|(c, (t1, pts))| {
        pts.iter().map(move |p| {
            vec![c.to_string(), fmt_f64(args.theta0), fmt_f64(*t1), fmt_f64(p.k), fmt_f64(p.energy), fmt_f64(-p.energy)]
        })
    });
    let body = csv_bytes(&["curve", "theta0", "theta1", "k", "upper", "lower"], rows)?;
    Ok(Output {
        command: "bands".into(),
        config_path: None,
        resolved: serde_json::to_value(args)?,
        artifacts: vec![Artifact::new("bands.csv", body)],
        stages: stages.into_inner(),
    })
}

fn chain_diagram(args: &PhaseArgs, points: &[(f64, f64)], exec: Exec, stages: &mut Stages) -> CliResult<Vec<Artifact>> {
    let diagram = stages.time("invariants", || phase_diagram(points, args.abar, args.k_grid, exec));
    let mut sentinels = 0usize;
    let mut regions = std::collections::BTreeMap::<String, usize>::new();
    let rows: Vec<Vec<String>> = diagram
        .iter()
        .map(|p| {
            let status = match (&p.invariants, p.gap.is_closed()) {
                (Some(inv), _) => {
                    *regions.entry(format!("({}, {})", inv.nu_zero, inv.nu_pi)).or_default() += 1;
                    "ok"
                }
                (None, true) => "gap_closed",
                (None, false) => "not_quantized",
            };
            if p.invariants.is_none() {
                sentinels += 1;
            }
            let inv = p.invariants.as_ref();
            vec![
                fmt_f64(p.gap.theta0),
                fmt_f64(p.gap.theta1),
                fmt_f64(p.gap.gap_zero),
                fmt_f64(p.gap.gap_pi),
                opt_int(inv.map(|i| i.nu.value)),
                opt_int(inv.map(|i| i.nu_prime.value)),
                opt_int(inv.map(|i| i.nu_zero)),
                opt_int(inv.map(|i| i.nu_pi)),
                status.to_string(),
            ]
        })
        .collect();
    let body =
        csv_bytes(&["theta0", "theta1", "gap_zero", "gap_pi", "nu", "nu_prime", "nu_zero", "nu_pi", "status"], rows)?;
    let summary = json!({ "points": diagram.len(), "sentinels": sentinels, "regions": regions });
    Ok(vec![Artifact::new("phase_diagram.csv", body), Artifact::json("summary.json", &summary)?])
}

fn coined_diagram(
    args: &PhaseArgs,
    name: CoinedName,
    points: &[(f64, f64)],
    exec: Exec,
    stages: &mut Stages,
) -> CliResult<Vec<Artifact>> {
    let protocol = name.protocol();
    let gaps =
        stages.time("gaps", || gap_map(&GapProtocol::Coined { protocol: protocol.clone() }, points, args.k_grid, exec));
    let cherns: Vec<Option<i32>> = stages.time("chern", || {
        par::map(exec, &gaps, |g| {
            if protocol.dimension != 2 || g.is_closed() {
                return None;
            }
            chern_number(&protocol, &[g.theta0, g.theta1], Band::Upper, args.chern_grid).ok().map(|c| c.value)
        })
    });
    let closed = gaps.iter().filter(|g| g.is_closed()).count();
    let rows = gaps.iter().zip(&cherns).map(|(g, c)| {
        vec![
            fmt_f64(g.theta0),
            fmt_f64(g.theta1),
            fmt_f64(g.gap_zero),
            fmt_f64(g.gap_pi),
            opt_int(*c),
            if g.is_closed() { "gap_closed" } else { "ok" }.to_string(),
        ]
    });
    let body = csv_bytes(&["theta0", "theta1", "gap_zero", "gap_pi", "chern_upper", "status"], rows)?;
    let summary = json!({ "points": gaps.len(), "sentinels": closed, "protocol": name });
    Ok(vec![Artifact::new("coined_gaps.csv", body), Artifact::json("summary.json", &summary)?])
}

pub fn phase(args: &PhaseArgs, exec: Exec) -> CliResult<Output> {
    if args.grid == 0 {
        return Err(config_err("--grid must be positive"));
    }
    if !(args.lo < args.hi) {
        return Err(config_err(format!("empty angle range [{}, {})", args.lo, args.hi)));
    }
    if !(args.abar > 0.0 && args.abar < 1.0) {
        return Err(config_err(format!("--abar {} outside (0, 1)", args.abar)));
    }
    if args.k_grid < 8 || args.chern_grid < 4 {
        return Err(config_err("--k-grid must be at least 8 and --chern-grid at least 4"));
    }
    let mut stages = Stages::default();
    let points = square_grid(args.lo, args.hi, args.grid);
    let artifacts = match args.coined {
        None => chain_diagram(args, &points, exec, &mut stages)?,
        Some(name) => coined_diagram(args, name, &points, exec, &mut stages)?,
    };
    Ok(Output {
        command: "phase-diagram".into(),
        config_path: None,
        resolved: serde_json::to_value(args)?,
        artifacts,
        stages: stages.into_inner(),
    })
}

pub fn budget(args: &BudgetArgs) -> CliResult<Output> {
    let p = params(&args.params)?;
    let averaging = match args.monte_carlo {
        Some(0) => return Err(config_err("--monte-carlo needs at least one sample")),
        Some(samples) => Averaging::MonteCarlo { samples, seed: args.seed },
        None => Averaging::default(),
    };
    let distribution = match args.distribution {
        Distribution::Uniform => DetuningDistribution::Uniform,
        Distribution::Gaussian => DetuningDistribution::Gaussian,
    };
    let model = DetuningErrorModel { distribution, averaging, ..Default::default() };
    let mut stages = Stages::default();
    let b = stages.time("budget", || error_budget(&p, &model))?;
    let rows = b
        .entries
        .iter()
        .map(|e| vec![e.source.clone(), fmt_f64(e.p_s), opt(e.quoted), e.flagged.to_string(), e.note.clone()]);
    let body = csv_bytes(&["source", "p_s", "quoted", "flagged", "note"], rows)?;
    Ok(Output {
        command: "error-budget".into(),
        config_path: args.params.params.clone(),
        resolved: json!({ "params": p, "detuning_model": model }),
        artifacts: vec![Artifact::new("budget.csv", body), Artifact::json("budget.json", &b)?],
        stages: stages.into_inner(),
    })
}

pub fn fidelity(args: &FidelityArgs) -> CliResult<Output> {
    let p = params(&args.params)?;
    let loss = match args.loss_per_step {
        Some(loss_per_step) => LossModel::Fixed { loss_per_step },
        None => LossModel::default(),
    };
    let config = StepBudgetConfig {
        fidelity: args.fidelity,
        loss,
        steps: args.steps,
        multipliers: args.multipliers.clone(),
        survival_floor: args.survival_floor,
    };
    let mut stages = Stages::default();
    let b = stages.time("budget", || step_budget(&p, &config))?;
    let curve = stages.time("curve", || {
        (0..=b.steps)
            .map(|s| step_budget(&p, &StepBudgetConfig { steps: Some(s), ..config.clone() }).map(|x| (s, x)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let rows = curve.iter().map(|(s, x)| {
        vec![
            s.to_string(),
            fmt_f64(x.survival_probability),
            fmt_f64(x.survival_with_multipliers),
            fmt_f64(x.cumulative_fidelity),
        ]
    });
    let body = csv_bytes(&["step", "survival", "survival_with_multipliers", "cumulative_fidelity"], rows)?;
    Ok(Output {
        command: "fidelity".into(),
        config_path: args.params.params.clone(),
        resolved: json!({ "params": p, "step_budget": config }),
        artifacts: vec![Artifact::new("survival.csv", body), Artifact::json("step_budget.json", &b)?],
        stages: stages.into_inner(),
    })
}

fn selectivity(args: &SelectivityArgs, exec: Exec) -> CliResult<(Value, Vec<Artifact>, Stages)> {
    if args.sites < 2 {
        return Err(config_err("--sites must be at least 2"));
    }
    let p = params(&args.params)?;
    let mut stages = Stages::default();
    let table = build_lattice(&LatticeSpec::chain_sites(args.sites, args.spacing, args.spacing))?;
    let walker = args.sites / 2;
    let scan = stages.time("scan", || site_selectivity_scan(&table, walker, &p, exec))?;
    let rows = scan.iter().map(|s| {
        vec![
            s.site.to_string(),
            fmt_f64(s.distance_um),
            fmt_f64(s.phi),
            fmt_f64(s.exchange_mhz),
            fmt_f64(s.delta_mhz),
            fmt_f64(s.max_s_population),
            fmt_f64(s.two_level),
        ]
    });
    let body =
        csv_bytes(&["site", "distance_um", "phi", "exchange_mhz", "delta_mhz", "max_s_population", "two_level"], rows)?;
    let resolved = json!({ "params": p, "sites": args.sites, "spacing_um": args.spacing, "walker": walker });
    Ok((resolved, vec![Artifact::new("selectivity.csv", body)], stages))
}

fn leakage(args: &LeakageArgs, exec: Exec) -> CliResult<(Value, Vec<Artifact>, Stages)> {
    if args.ratios.iter().any(|r| !(*r > 0.0)) || args.samples == 0 {
        return Err(config_err("ratios must be positive and --samples nonzero"));
    }
    let p = params(&args.params)?;
    let mut stages = Stages::default();
    let (table, w, t) = family_pair(args.a_x0, args.a_x1, args.family.into())?;
    let v = leakage_infidelity(&table, w, t, &p, 0.0, args.shell)?.target_exchange_mhz.abs();
    let results = stages.time("leakage", || {
        par::map(exec, &args.ratios, |&r| -> CliResult<Vec<String>> {
            let omega = r * v;
            let formula = leakage_infidelity(&table, w, t, &p, omega, args.shell)?;
            let numerical = numerical_leakage(&table, w, t, &p, omega, args.shell, args.samples)?;
            Ok(vec![
                fmt_f64(r),
                fmt_f64(omega),
                fmt_f64(formula.infidelity),
                fmt_f64(formula.two_branch),
                fmt_f64(numerical),
            ])
        })
    });
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let body = csv_bytes(&["omega_over_v", "omega_mhz", "closed_form", "two_branch", "numerical"], rows)?;
    let resolved = json!({
        "params": p, "family": args.family, "a_x0": args.a_x0, "a_x1": args.a_x1,
        "ratios": args.ratios, "samples": args.samples, "shell": args.shell,
    });
    Ok((resolved, vec![Artifact::new("leakage.csv", body)], stages))
}

fn contrast(args: &ContrastArgs, exec: Exec) -> CliResult<(Value, Vec<Artifact>, Stages)> {
    if args.grid < 2 || !(args.from < args.to) {
        return Err(config_err("contrast scan needs --grid >= 2 and --from < --to"));
    }
    let p = params(&args.params)?;
    let xs: Vec<f64> =
        (0..args.grid).map(|i| args.from + (args.to - args.from) * i as f64 / (args.grid - 1) as f64).collect();
    let mut stages = Stages::default();
    let curve = stages
        .time("contrast", || contrast_curve(args.a_x0, &xs, args.family.into(), &p, args.fidelity, args.shell, exec))?;
    let rows =
        curve.iter().map(|c| vec![fmt_f64(c.a_x1), fmt_f64(c.contrast), opt(c.omega_over_delta), opt_int(c.collision)]);
    let body = csv_bytes(&["a_x1", "contrast", "omega_over_delta", "collision_site"], rows)?;
    let resolved = json!({
        "params": p, "family": args.family, "a_x0": args.a_x0, "a_x1": xs,
        "fidelity": args.fidelity, "shell": args.shell,
    });
    Ok((resolved, vec![Artifact::new("contrast.csv", body)], stages))
}

pub fn micro(cmd: &MicroCommand, exec: Exec) -> CliResult<Output> {
    let (name, path, (resolved, artifacts, stages)) = match cmd {
        MicroCommand::Selectivity(a) => ("micro selectivity", &a.params.params, selectivity(a, exec)?),
        MicroCommand::Leakage(a) => ("micro leakage", &a.params.params, leakage(a, exec)?),
        MicroCommand::Contrast(a) => ("micro contrast", &a.params.params, contrast(a, exec)?),
    };
    Ok(Output { command: name.into(), config_path: path.clone(), resolved, artifacts, stages: stages.into_inner() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phase_rows_carry_sentinels() {
        let args = PhaseArgs { grid: 4, lo: 0.0, hi: PI, abar: 0.5, k_grid: 256, coined: None, chern_grid: 16 };
        let out = phase(&args, Exec::Sequential).unwrap();
        let body = String::from_utf8(out.artifacts[0].bytes.clone()).unwrap();
        // Diagonal points sit on the closure θ0 = θ1.
        assert!(body.lines().filter(|l| l.ends_with("gap_closed")).count() >= 4);
        assert!(body.lines().skip(1).all(|l| l.split(',').count() == 9));
    }
}
