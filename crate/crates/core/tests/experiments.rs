use rydberg_walk::experiments::*;
use rydberg_walk::par::Exec;
use rydberg_walk::walk::{AngleField, SpatialAngle};
use rydberg_walk::Error;
use std::f64::consts::PI;

fn run(c: &ExperimentConfig) -> ExperimentReport {
    run_experiment(c, Exec::Sequential).unwrap()
}

fn csv(c: &ExperimentConfig, exec: Exec) -> Vec<CsvFile> {
    let (table, ..) = prepare(c).unwrap();
    report_csv(&run_experiment(c, exec).unwrap(), &table)
}

#[test]
fn every_preset_runs_and_conserves_norm() {
    for name in PRESET_NAMES {
        let r = run(&preset(name).unwrap());
        assert_eq!(r.name, name);
        assert!(r.max_norm_error < 1e-10, "{name}: {}", r.max_norm_error);
        let total: f64 = r.final_probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-10, "{name}: {total}");
        for d in &r.dephasing {
            assert!(d.max_trace_error < 1e-10, "{name} p_s {}", d.p_s);
        }
    }
}

#[test]
fn wall_traps_the_walker() {
    let r = run(&preset("edge_1d_wall").unwrap());
    let trapped = r.edge.unwrap().trapped_fraction.unwrap();
    assert!((trapped - 0.834_048_152_230_672).abs() < 1e-9, "{trapped}");
    let sides = &r.sides;
    assert_eq!(sides.len(), 2);
    let inv: Vec<_> = sides.iter().map(|s| s.invariants.map(|i| (i.nu_zero, i.nu_pi))).collect();
    assert_eq!(inv, vec![Some((1, 0)), Some((0, 0))]);

    let smooth = run(&preset("edge_1d_smooth").unwrap()).edge.unwrap().trapped_fraction.unwrap();
    assert!(trapped > 5.0 * smooth, "{trapped} vs {smooth}");
}

#[test]
fn infinitely_wide_wall_is_the_homogeneous_walk() {
    let mut wide = preset("edge_1d_smooth").unwrap();
    let (a, b) = (0.3, 1.1);
    for (key, th) in [("x0", a), ("x1", b)] {
        wide.angles.insert(
            key.into(),
            AngleField::Spatial(SpatialAngle::Profile {
                axis: 0,
                minus: th,
                plus: th,
                width: f64::INFINITY,
                center: 320.0,
            }),
        );
    }
    let mut flat = wide.clone();
    flat.angles.insert("x0".into(), a.into());
    flat.angles.insert("x1".into(), b.into());
    assert_eq!(run(&wide).final_probabilities, run(&flat).final_probabilities);
}

#[test]
fn sequential_and_parallel_outputs_match() {
    for name in ["edge_2d_chern", "density_maps", "anomalous_2d"] {
        let c = preset(name).unwrap();
        assert_eq!(csv(&c, Exec::Sequential), csv(&c, Exec::Parallel), "{name}");
        assert_eq!(csv(&c, Exec::Sequential), csv(&c, Exec::Sequential), "{name}");
    }
}

#[test]
fn anomalous_bulk_returns_and_boundary_moves() {
    let r = run(&preset("anomalous_2d").unwrap());
    let ret = r.returns.unwrap();
    assert!(!ret.bulk.is_empty() && !ret.boundary.is_empty());
    assert_eq!(ret.bulk.len() + ret.boundary.len(), r.n_sites);
    assert!(ret.bulk_min_overlap > 1.0 - RETURN_TOLERANCE);
    assert!(ret.boundary_max_overlap < RETURN_TOLERANCE);
    assert_eq!(ret.boundary_images.len(), ret.boundary.len());
    for (from, to) in &ret.boundary_images {
        assert_ne!(from, to);
        assert!(ret.boundary.binary_search(to).is_ok());
    }
}

#[test]
fn zero_angles_give_the_identity() {
    let mut c = preset("insulator_3d").unwrap();
    for v in c.angles.values_mut() {
        *v = 0.0.into();
    }
    let r = run(&c);
    let ret = r.returns.unwrap();
    assert!(ret.overlaps.iter().all(|&o| (o - 1.0).abs() < 1e-15));
    assert_eq!(r.final_probabilities[r.start_sites[0]], 1.0);
}

#[test]
fn seam_changes_the_surface_walk() {
    let torus = run(&preset("surface_torus").unwrap());
    let moebius = run(&preset("surface_moebius").unwrap());
    assert_ne!(torus.final_probabilities, moebius.final_probabilities);
    let mut open = preset("surface_torus").unwrap();
    open.angles.insert("xb".into(), 0.0.into());
    open.angles.insert("yb".into(), 0.0.into());
    let mut open_m = preset("surface_moebius").unwrap();
    open_m.angles = open.angles.clone();
    assert_eq!(run(&open).final_probabilities, run(&open_m).final_probabilities);
}

#[test]
fn stripes_without_a_closure_are_rejected() {
    let mut c = preset("edge_2d_simple").unwrap();
    let stripe = |inside: f64, outside: f64| {
        AngleField::Spatial(SpatialAngle::Stripe { axis: 0, lo: 2.0, hi: 4.0, inside, outside })
    };
    c.angles.insert("coin0".into(), stripe(PI / 10.0, 0.12 * PI));
    c.angles.insert("coin1".into(), stripe(4.0 * PI / 10.0, 0.38 * PI));
    match run_experiment(&c, Exec::Sequential) {
        Err(Error::Incompatible { .. }) => {}
        other => panic!("expected a rejection, got {other:?}"),
    }
    c.analysis.consistency_gate = false;
    assert!(run_experiment(&c, Exec::Sequential).is_ok());
}

#[test]
fn chern_stripe_passes_the_gate() {
    let r = run(&preset("edge_2d_chern").unwrap());
    let gate = r.gate.unwrap();
    assert!(gate.separated && gate.min_gap_on_path < 1e-3);
    let edge = r.edge.unwrap();
    assert_eq!(edge.plane_series.len(), r.steps + 1);
    assert!((edge.plane_series[0] - 1.0).abs() < 1e-12);
}

#[test]
fn dephasing_limits() {
    let r = run(&preset("density_maps").unwrap());
    assert_eq!(r.dephasing.len(), 3);
    let coherent = &r.dephasing[0];
    assert_eq!(coherent.coherence_length, Some(rydberg_walk::decoherence::CoherenceLength::Unbounded));
    let classical = r.dephasing.last().unwrap();
    // Full dephasing leaves a diffusive spread, far narrower than the ballistic one.
    let spread = |d: &DephasingRun| d.msd.last().unwrap().1;
    assert!(spread(classical) < 0.2 * spread(coherent));
    let n = classical.final_diagonal.len();
    assert_eq!(classical.density_map.as_ref().unwrap().len(), n * n);
}

#[test]
fn configs_round_trip_through_json() {
    for name in PRESET_NAMES {
        let c = preset(name).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(c, back, "{name}");
    }
    let mut v = serde_json::to_value(preset("transport").unwrap()).unwrap();
    v["unexpected"] = serde_json::json!(1);
    assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
}

#[test]
fn invalid_configs_fail_validation() {
    let mut c = preset("transport").unwrap();
    c.noise.p_s = vec![1.5];
    assert!(c.validate().is_err());
    let mut c = preset("edge_2d_chern").unwrap();
    c.output.stride = 0;
    assert!(c.validate().is_err());
    let mut c = preset("edge_2d_chern").unwrap();
    c.init = InitConfig::Terms { terms: vec![InitTerm::cell(&[2, 5], "x")] };
    assert!(run_experiment(&c, Exec::Sequential).is_err());
}

#[test]
fn tanh_profile() {
    let p = AngleProfile::new(0.2, 1.0, 0.5);
    assert!((angle_at(&p, 0.0) - 0.6).abs() < 1e-15);
    assert!((angle_at(&p, 50.0) - 1.0).abs() < 1e-12);
    assert!((angle_at(&p, -50.0) - 0.2).abs() < 1e-12);
    assert_eq!(AngleProfile::new(0.2, 1.0, f64::INFINITY).angle_at(3.0), 0.6);
}
