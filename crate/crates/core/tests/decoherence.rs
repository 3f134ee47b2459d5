use proptest::prelude::*;
use rydberg_walk::decoherence::*;
use rydberg_walk::lattice::{build_lattice, BoundaryTopology, LatticeSpec};
use rydberg_walk::par::Exec;
use rydberg_walk::walk::{compile, CompiledProgram, StepProgram, WalkerState};
use rydberg_walk::C64;
use std::f64::consts::FRAC_PI_4;

fn chain_program(sites: usize, t0: f64, t1: f64) -> CompiledProgram {
    let table = build_lattice(&LatticeSpec::chain_sites(sites, 1.0, 1.0)).unwrap();
    compile(&StepProgram::coinless_plain(t0, t1), &table, &BoundaryTopology::open(1)).unwrap()
}

fn mixed_state(n: usize, seed: &[f64]) -> DensityMatrix {
    // Equal mixture of two pure states.
    let a = |shift: f64| {
        let v = (0..n).map(|i| C64::new(seed[i % seed.len()] + shift, (i as f64 * 0.37 + shift).sin())).collect();
        DensityMatrix::from_state(&WalkerState::from_amplitudes(v).unwrap())
    };
    let (x, y) = (a(0.1), a(0.7));
    let data = x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| (p + q) * 0.5).collect();
    DensityMatrix::from_rows(n, data).unwrap()
}

#[test]
fn zero_dephasing_follows_the_pure_state() {
    let prog = chain_program(21, 0.6, 1.1);
    let mut psi = WalkerState::basis(21, 10);
    let mut states = vec![psi.clone()];
    let tess = prog.tessellations();
    for step in 0..20 {
        psi.apply(&tess[step % tess.len()]);
        states.push(psi.clone());
    }
    let mut rho = DensityMatrix::localized(21, 10);
    let model = DephasingModel::new(0.0).unwrap();
    evolve(&mut rho, &prog, &model, ChannelSchedule::PerTessellation, 20, Exec::Sequential, |step, r| {
        let pure = DensityMatrix::from_state(&states[step]);
        for (a, b) in r.as_slice().iter().zip(pure.as_slice()) {
            assert!((a - b).norm() < 1e-12, "step {step}");
        }
    })
    .unwrap();
}

#[test]
fn full_dephasing_is_a_classical_random_walk() {
    let (t0, t1) = (0.6, 1.1);
    let prog = chain_program(21, t0, t1);
    let mut p = vec![0.0; 21];
    p[10] = 1.0;
    let mut rho = DensityMatrix::localized(21, 10);
    let model = DephasingModel::new(1.0).unwrap();
    let mut expected = vec![p.clone()];
    let tess = prog.tessellations();
    for step in 0..20 {
        let t = &tess[step % tess.len()];
        let mut q = p.clone();
        for (k, pair) in t.pairs().pairs().iter().enumerate() {
            let (c2, s2) = (t.angle(k).cos().powi(2), t.angle(k).sin().powi(2));
            q[pair.a] = c2 * p[pair.a] + s2 * p[pair.b];
            q[pair.b] = s2 * p[pair.a] + c2 * p[pair.b];
        }
        p = q;
        expected.push(p.clone());
    }
    evolve(&mut rho, &prog, &model, ChannelSchedule::PerTessellation, 20, Exec::Sequential, |step, r| {
        for (a, b) in r.diagonal().iter().zip(&expected[step]) {
            assert!((a - b).abs() < 1e-12, "step {step}");
        }
        if step > 0 {
            for i in 0..21 {
                for j in 0..21 {
                    if i != j {
                        assert_eq!(r.get(i, j).norm(), 0.0);
                    }
                }
            }
        }
    })
    .unwrap();
}

#[test]
fn per_period_schedule_dephases_once_per_period() {
    let prog = chain_program(15, 0.5, 0.9);
    let model = DephasingModel::new(0.3).unwrap();
    let mut a = DensityMatrix::localized(15, 7);
    evolve(&mut a, &prog, &model, ChannelSchedule::PerPeriod, 3, Exec::Sequential, |_, _| {}).unwrap();
    let mut b = DensityMatrix::localized(15, 7);
    let none = DephasingModel::new(0.0).unwrap();
    for _ in 0..3 {
        channel_step(&mut b, &prog.tessellations()[..1], &none, Exec::Sequential);
        channel_step(&mut b, &prog.tessellations()[1..], &model, Exec::Sequential);
    }
    assert_eq!(a, b);
}

#[test]
fn coherence_length_shrinks_with_dephasing() {
    let prog = chain_program(61, FRAC_PI_4, FRAC_PI_4);
    let run = |p_s: f64| {
        let mut rho = DensityMatrix::localized(61, 30);
        evolve(
            &mut rho,
            &prog,
            &DephasingModel::new(p_s).unwrap(),
            ChannelSchedule::PerTessellation,
            24,
            Exec::Sequential,
            |_, _| {},
        )
        .unwrap();
        rho
    };
    let ideal = run(0.0);
    assert_eq!(coherence_length(&ideal, &ideal, 30).unwrap(), CoherenceLength::Unbounded);
    let mut last = f64::INFINITY;
    for p_s in [0.02, 0.05, 0.1, 0.2] {
        match coherence_length(&run(p_s), &ideal, 30).unwrap() {
            CoherenceLength::Finite(l) => {
                assert!(l < last, "p_s {p_s}: {l} >= {last}");
                last = l;
            }
            other => panic!("p_s {p_s}: {other:?}"),
        }
    }
    assert_eq!(coherence_length(&run(1.0), &ideal, 30).unwrap(), CoherenceLength::Collapsed);
}

#[test]
fn fits_recover_synthetic_laws() {
    let series: Vec<(f64, f64)> = (1..200).map(|i| i as f64 * 0.05).map(|t| (t, 3.0 * t.powf(1.5))).collect();
    let fit = power_law_fit(&series, 0.0, f64::INFINITY).unwrap();
    assert!((fit.exponent - 1.5).abs() < 1e-12 && (fit.prefactor - 3.0).abs() < 1e-10);
    let quad: Vec<(f64, f64)> = (1..40).map(|i| i as f64 * 0.02).map(|t| (t, 22.5 * t * t)).collect();
    assert!((quadratic_coefficient(&quad, 1.0) - 22.5).abs() < 1e-12);
    assert!(power_law_fit(&series[..3], 0.0, 1.0).is_err());
}

#[test]
fn rejects_bad_probabilities() {
    assert!(DephasingModel::new(-0.1).is_err());
    assert!(DephasingModel::new(1.5).is_err());
    let prog = chain_program(9, 0.3, 0.3);
    let mut rho = DensityMatrix::localized(7, 3);
    let model = DephasingModel::new(0.1).unwrap();
    assert!(evolve(&mut rho, &prog, &model, ChannelSchedule::PerPeriod, 1, Exec::Sequential, |_, _| {}).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn channel_preserves_trace_and_hermiticity(
        p_s in 0.0f64..=1.0,
        t0 in -3.0f64..3.0,
        t1 in -3.0f64..3.0,
        seed in prop::collection::vec(-1.0f64..1.0, 2..6),
    ) {
        let prog = chain_program(16, t0, t1);
        let mut rho = mixed_state(16, &seed);
        let model = DephasingModel::new(p_s).unwrap();
        evolve(&mut rho, &prog, &model, ChannelSchedule::PerTessellation, 12, Exec::Sequential, |_, r| {
            assert!((r.trace() - 1.0).abs() < 1e-12);
            assert!(r.hermiticity_error() < 1e-12);
            assert!(r.min_diagonal() > -1e-14);
        }).unwrap();
    }

    #[test]
    fn purity_never_increases(p_s in 0.0f64..=1.0, t0 in 0.1f64..1.5, t1 in 0.1f64..1.5) {
        let prog = chain_program(12, t0, t1);
        let mut rho = DensityMatrix::localized(12, 5);
        let model = DephasingModel::new(p_s).unwrap();
        let mut last = 1.0 + 1e-12;
        evolve(&mut rho, &prog, &model, ChannelSchedule::PerTessellation, 10, Exec::Sequential, |_, r| {
            let purity: f64 = r.as_slice().iter().map(|z| z.norm_sqr()).sum();
            assert!(purity <= last + 1e-12);
            last = purity;
        }).unwrap();
    }

    #[test]
    fn parallel_matches_sequential(p_s in 0.0f64..=1.0, t0 in 0.1f64..1.5) {
        let prog = chain_program(24, t0, 0.7);
        let model = DephasingModel::new(p_s).unwrap();
        let mut a = DensityMatrix::localized(24, 11);
        let mut b = a.clone();
        evolve(&mut a, &prog, &model, ChannelSchedule::PerTessellation, 9, Exec::Sequential, |_, _| {}).unwrap();
        evolve(&mut b, &prog, &model, ChannelSchedule::PerTessellation, 9, Exec::Parallel, |_, _| {}).unwrap();
        prop_assert_eq!(a, b);
    }
}
