use nalgebra::DMatrix;
use proptest::prelude::*;
use rydberg_walk::lattice::{build_lattice, LatticeSpec};
use rydberg_walk::microphysics::*;
use rydberg_walk::par::Exec;
use rydberg_walk::C64;
use std::f64::consts::{FRAC_PI_2, PI};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn resonant_exchange_and_step_time() {
    let p = RydbergParams::default();
    // 8.4 GHz μm³ over 27 μm³
    assert!(close(p.exchange(3.0, 0.0).unwrap(), 8400.0 / 27.0, 1e-12));
    // Half the strength with the opposite sign at right angles.
    assert!(close(p.exchange(3.0, FRAC_PI_2).unwrap(), -4200.0 / 27.0, 1e-12));
    let b = error_budget(&p, &DetuningErrorModel::default()).unwrap();
    // 1/√(Ω² + δ²) with δ = Ω/√3
    assert!(close(b.step_time_us, 3f64.sqrt() / 4.0, 1e-12));
}

#[test]
fn closed_form_budget_entries() {
    let p = RydbergParams::default();
    let b = error_budget(&p, &DetuningErrorModel::default()).unwrap();
    let scat = PI * 1.4 / 1200.0 * (60.0 / 40.0 + 40.0 / 60.0);
    assert!(close(b.entry("intermediate_scattering").unwrap().p_s, scat, 1e-12));
    let trap = 3f64.sqrt() / 4.0 / 12e6;
    assert!(close(b.entry("trap_scattering").unwrap().p_s, trap, 1e-12));
    let v = (1.054_571_817e-34 * 2.0 * PI * 150e3 / (2.0 * 86.909_180_5 * 1.660_539_066_60e-27)).sqrt();
    assert!(close(b.doppler_speed_mm_s, v * 1e3, 1e-12));
    assert!(close(b.doppler_speed_mm_s, 18.556_722_365_345, 1e-10));
}

#[test]
fn frozen_budget_values() {
    let p = RydbergParams::default();
    let b = error_budget(&p, &DetuningErrorModel::default()).unwrap();
    let frozen = [
        ("laser_noise", 2.191_499_423_112_031e-4),
        ("confinement", 1.464_243_424_239_564e-4),
        ("doppler", 2.449_181_022_545_766e-6),
    ];
    for (name, want) in frozen {
        assert!(close(b.entry(name).unwrap().p_s, want, 1e-6), "{name}");
    }
    assert!(!b.entry("confinement").unwrap().flagged);
    assert!(b.entry("intermediate_scattering").unwrap().flagged);
}

#[test]
fn laser_noise_is_linear_in_linewidth() {
    let p = RydbergParams::default();
    let a = laser_noise_ps(&p, 0.25).unwrap();
    let b = laser_noise_ps(&p, 0.5).unwrap();
    assert!(close(b / a, 2.0, 1e-3), "{}", b / a);
    assert_eq!(laser_noise_ps(&p, 0.0).unwrap(), 0.0);
}

#[test]
fn detuning_error_is_quadratic_for_small_spread() {
    let p = RydbergParams::default();
    let m = DetuningErrorModel::default();
    let a = detuning_error_ps(&p, 0.05, &m).unwrap();
    let b = detuning_error_ps(&p, 0.1, &m).unwrap();
    assert!(close(b / a, 4.0, 1e-2), "{}", b / a);
    assert_eq!(detuning_error_ps(&p, 0.0, &m).unwrap(), 0.0);
    // Uniform on [−E, E] has variance E²/3; a Gaussian with σ = E has E².
    let g = DetuningErrorModel {
        distribution: DetuningDistribution::Gaussian,
        averaging: Averaging::Quadrature { points: 400 },
        ..m
    };
    let c = detuning_error_ps(&p, 0.05, &g).unwrap();
    assert!(close(c / a, 3.0, 2e-2), "{}", c / a);
}

#[test]
fn monte_carlo_matches_quadrature() {
    let p = RydbergParams::default();
    let q = detuning_error_ps(&p, 0.1, &DetuningErrorModel::default()).unwrap();
    let mc = DetuningErrorModel { averaging: Averaging::MonteCarlo { samples: 4000, seed: 7 }, ..Default::default() };
    let x = detuning_error_ps(&p, 0.1, &mc).unwrap();
    assert!(close(x, q, 0.05), "{x} vs {q}");
    assert_eq!(x, detuning_error_ps(&p, 0.1, &mc).unwrap());
}

#[test]
fn calibrated_loss_and_survival() {
    let p = RydbergParams::default();
    let s = step_budget(&p, &StepBudgetConfig::default()).unwrap();
    assert!(close(s.loss_per_step, -(0.4f64.ln()) / 210.0, 1e-12));
    assert!(close(s.loss_per_step, 4.363_289_199_400_738e-3, 1e-12));
    assert_eq!(s.steps, 210);
    assert!(close(s.survival_probability, 0.4, 1e-12));
    assert_eq!(s.max_steps, Some(210));

    let high = RydbergParams { n: 100, ..p.clone() };
    let s = step_budget(&high, &StepBudgetConfig::default()).unwrap();
    assert_eq!(s.steps, 300);
    assert!(close(s.survival_probability, 0.4, 1e-12));
    assert!(close(s.lifetime_us, 450.0 * (100.0f64 / 70.0).powi(-3), 1e-12));

    let lossless = StepBudgetConfig { loss: LossModel::Fixed { loss_per_step: 0.0 }, ..Default::default() };
    let s = step_budget(&p, &lossless).unwrap();
    assert_eq!(s.survival_probability, 1.0);
    assert_eq!(s.max_steps, None);
    assert!(step_budget(&p, &StepBudgetConfig { fidelity: 1.5, ..Default::default() }).is_err());
}

#[test]
fn lindblad_pure_dephasing_oracle() {
    // L = √γ |1⟩⟨1| damps the coherence as e^{−γt/2}.
    let gamma: f64 = 0.8;
    let h = DMatrix::<C64>::zeros(2, 2);
    let mut l = DMatrix::<C64>::zeros(2, 2);
    l[(1, 1)] = C64::new(gamma.sqrt(), 0.0);
    let rho0 = DMatrix::from_element(2, 2, C64::new(0.5, 0.0));
    let rho = lindblad_evolve(&h, &[l], &rho0, 1.7).unwrap();
    assert!((rho[(0, 1)].re - 0.5 * (-gamma * 1.7 / 2.0).exp()).abs() < 1e-9);
    assert!((rho[(0, 0)].re - 0.5).abs() < 1e-12);
}

#[test]
fn selectivity_peaks_at_resonant_neighbor() {
    let table = build_lattice(&LatticeSpec::chain_sites(9, 3.0, 3.0)).unwrap();
    let p = RydbergParams::default();
    let scan = site_selectivity_scan(&table, 4, &p, Exec::Sequential).unwrap();
    let near: Vec<_> = scan.iter().filter(|s| (s.distance_um - 3.0).abs() < 1e-9).collect();
    assert_eq!(near.len(), 2);
    for s in &near {
        assert!(s.delta_mhz.abs() < 1e-9 && s.max_s_population > 0.99, "{s:?}");
    }
    for s in scan.iter().filter(|s| s.distance_um > 4.0) {
        assert!(s.max_s_population < 0.01, "{s:?}");
        // Far-detuned pairs follow the two-level estimate.
        assert!(s.max_s_population <= 1.05 * s.two_level.max(1e-12) + 1e-6, "{s:?}");
    }
    let par = site_selectivity_scan(&table, 4, &p, Exec::Parallel).unwrap();
    assert_eq!(scan, par);
}

#[test]
fn leakage_numerics_scale_as_omega_squared() {
    let (t, w, g) = family_pair(1.0, 1.5, Family::X0).unwrap();
    let p = RydbergParams::default();
    let v = leakage_infidelity(&t, w, g, &p, 0.0, DEFAULT_SHELL).unwrap().target_exchange_mhz.abs();
    let a = numerical_leakage(&t, w, g, &p, 0.01 * v, DEFAULT_SHELL, 2000).unwrap();
    let b = numerical_leakage(&t, w, g, &p, 0.02 * v, DEFAULT_SHELL, 2000).unwrap();
    assert!(b / a > 3.0 && b / a < 5.0, "{}", b / a);
    let la = leakage_infidelity(&t, w, g, &p, 0.01 * v, DEFAULT_SHELL).unwrap();
    assert!(la.two_branch > la.infidelity);
}

#[test]
fn contrast_requirement_tightens_with_fidelity() {
    let (t, w, g) = family_pair(1.0, 1.5, Family::X0).unwrap();
    let p = RydbergParams::default();
    let mut last = f64::INFINITY;
    for f in [0.9, 0.99, 0.999, 0.9999] {
        let r = contrast_requirement(&t, w, g, &p, f, DEFAULT_SHELL).unwrap();
        assert!(r <= last, "{f}");
        last = r;
    }
    assert!(contrast_requirement(&t, w, g, &p, 1.0, DEFAULT_SHELL).is_err());
}

#[test]
fn contrast_curve_is_deterministic() {
    let xs: Vec<f64> = (0..8).map(|i| 1.6 + 0.2 * i as f64).collect();
    let p = RydbergParams::default();
    let a = contrast_curve(1.0, &xs, Family::X1, &p, 0.99, DEFAULT_SHELL, Exec::Sequential).unwrap();
    let b = contrast_curve(1.0, &xs, Family::X1, &p, 0.99, DEFAULT_SHELL, Exec::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn params_round_trip_through_json() {
    let p = RydbergParams { n: 80, rabi_mhz: 3.0, ..Default::default() };
    let text = serde_json::to_string(&p).unwrap();
    let q: RydbergParams = serde_json::from_str(&text).unwrap();
    assert_eq!(p, q);
    assert!(serde_json::from_str::<RydbergParams>(r#"{"bogus": 1}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pulses_conserve_norm(omega in 0.5f64..5.0, detuning in -400.0f64..400.0, v in -400.0f64..400.0) {
        let out = pulse_dynamics(&PulseSpec::new(omega, detuning, v)).unwrap();
        prop_assert!(out.norm_error < 1e-10);
        prop_assert!(out.max_s_population <= 1.0 + 1e-12);
    }

    #[test]
    fn lindblad_keeps_trace_and_positivity(gamma in 0.0f64..2.0, omega in 0.1f64..5.0, t in 0.01f64..1.0) {
        let spec = PulseSpec::new(omega, -20.0, 19.0);
        let mut l = DMatrix::<C64>::zeros(4, 4);
        l[(1, 1)] = C64::new(gamma.sqrt(), 0.0);
        let mut rho0 = DMatrix::<C64>::zeros(4, 4);
        rho0[(0, 0)] = C64::new(1.0, 0.0);
        let rho = lindblad_evolve(&spec.hamiltonian(), &[l], &rho0, t).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-8);
        prop_assert!(min_eigenvalue(&rho) > -1e-8);
    }

    #[test]
    fn exchange_angular_factor_is_even(phi in 0.0f64..PI) {
        let p = RydbergParams::default();
        let a = p.exchange(4.0, phi).unwrap();
        let b = p.exchange(4.0, PI - phi).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }
}
