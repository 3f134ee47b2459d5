use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rydberg_walk::lattice::*;
use rydberg_walk::walk::*;
use rydberg_walk::C64;

fn dimer_2d(nx: usize, ny: usize) -> SiteTable {
    build_lattice(&LatticeSpec::uniform(UnitKind::Dimer, &[nx, ny], 1.0)).unwrap()
}

/// `exp(iθH)` for the adjacency matrix `H` of a matching, through the
/// eigendecomposition of `H`.
fn dense_rotation(n: usize, pairs: &PairSet, theta: f64) -> DMatrix<C64> {
    let mut h = DMatrix::<f64>::zeros(n, n);
    for p in pairs.pairs() {
        h[(p.a, p.b)] = 1.0;
        h[(p.b, p.a)] = 1.0;
    }
    let eig = SymmetricEigen::new(h);
    let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, theta * l)));
    &v * d * v.adjoint()
}

fn random_state(n: usize, seed: &[f64]) -> WalkerState {
    let amps =
        (0..n).map(|i| C64::new(seed[i % seed.len()] + i as f64 * 0.01, seed[(i + 1) % seed.len()] - 0.3)).collect();
    WalkerState::from_amplitudes(amps).unwrap()
}

#[test]
fn rotation_matches_dense_exponential() {
    let table = dimer_2d(3, 3);
    let n = table.len();
    for kind in [TessKind::X0, TessKind::X1, TessKind::Xy0, TessKind::Xy1] {
        let pairs = tessellation_pairs(&table, kind, &BoundaryTopology::periodic(2)).unwrap();
        let theta = 0.737;
        let u = dense_rotation(n, &pairs, theta);
        let t = Tessellation::uniform(pairs, theta);
        for b in 0..n {
            let mut s = WalkerState::basis(n, b);
            s.apply(&t);
            for a in 0..n {
                assert!((s.amplitudes()[a] - u[(a, b)]).norm() < 1e-12, "{kind} column {b} row {a}");
            }
        }
    }
}

#[test]
fn octamer_cells_have_eight_sites() {
    let t = build_lattice(&LatticeSpec::uniform(UnitKind::Octamer, &[2, 2, 2], 1.0)).unwrap();
    assert_eq!(t.len(), 64);
    for kind in [TessKind::X0, TessKind::Y1, TessKind::Z0] {
        let p = tessellation_pairs(&t, kind, &BoundaryTopology::open(3)).unwrap();
        assert!(!p.is_empty());
    }
    assert!(tessellation_pairs(&t, TessKind::Xy0, &BoundaryTopology::open(3)).is_err());
}

#[test]
fn moebius_seam_flips_rows() {
    let t = build_lattice(&LatticeSpec::uniform(UnitKind::Tetramer, &[3, 3], 1.0)).unwrap();
    let seams = seam_pairs(&t, &BoundaryTopology::with_seam(Seam::MoebiusX)).unwrap();
    let (gx, gy) = (t.extent(0), t.extent(1));
    for j in 0..gy {
        let a = t.at_global([gx - 1, j, 0]).unwrap();
        let b = seams.axis(0).partner(a).unwrap();
        assert_eq!(t.global(b), [0, gy - 1 - j, 0]);
        // Crossing twice returns to the start.
        assert_eq!(seams.axis(0).partner(b), Some(a));
    }
    let torus = seam_pairs(&t, &BoundaryTopology::torus()).unwrap();
    for j in 0..gy {
        let a = t.at_global([gx - 1, j, 0]).unwrap();
        assert_eq!(t.global(torus.axis(0).partner(a).unwrap()), [0, j, 0]);
    }
}

#[test]
fn zero_seam_angle_is_open_walk() {
    let t = build_lattice(&LatticeSpec::uniform(UnitKind::Tetramer, &[3, 3], 1.0)).unwrap();
    let with_seam = StepProgram::new(vec![
        StepOp::Boundary { axis: 0, angle: 0.0 },
        StepProgram::tess(TessKind::X1, 0.4),
        StepProgram::tess(TessKind::X0, 0.9),
        StepOp::Boundary { axis: 1, angle: 0.0 },
        StepProgram::tess(TessKind::Y1, 0.4),
        StepProgram::tess(TessKind::Y0, 0.9),
    ]);
    let open =
        StepProgram::new(with_seam.ops.iter().filter(|op| !matches!(op, StepOp::Boundary { .. })).cloned().collect());
    let a = compile(&with_seam, &t, &BoundaryTopology::with_seam(Seam::MoebiusX)).unwrap();
    let b = compile(&open, &t, &BoundaryTopology::open(2)).unwrap();
    let s0 = WalkerState::basis(t.len(), 5);
    let ra = run_program(&s0, &a, 7, false).unwrap();
    let rb = run_program(&s0, &b, 7, false).unwrap();
    assert_eq!(ra.final_state, rb.final_state);
}

#[test]
fn torus_wraps_same_row() {
    let t = build_lattice(&LatticeSpec::uniform(UnitKind::Tetramer, &[3, 3], 1.0)).unwrap();
    let prog = StepProgram::new(vec![StepOp::Boundary { axis: 0, angle: std::f64::consts::FRAC_PI_2 }]);
    let c = compile(&prog, &t, &BoundaryTopology::torus()).unwrap();
    let start = t.at_global([5, 2, 0]).unwrap();
    let mut s = WalkerState::basis(t.len(), start);
    c.apply_period(&mut s);
    let end = t.at_global([0, 2, 0]).unwrap();
    assert!((s.probabilities()[end] - 1.0).abs() < 1e-15);
}

#[test]
fn coined_shift_moves_by_one_cell() {
    let t = dimer_2d(4, 4);
    let b = BoundaryTopology::periodic(2);
    let odd = t.index([1, 1, 0], 0).unwrap();
    let mut s = WalkerState::basis(t.len(), odd);
    transition_operator(&mut s, &t, &b, ShiftDir::X).unwrap();
    let to = t.index([2, 1, 0], 0).unwrap();
    assert!((s.amplitudes()[to] - C64::new(-1.0, 0.0)).norm() < 1e-15);

    let even = t.index([1, 1, 0], 1).unwrap();
    let mut s = WalkerState::basis(t.len(), even);
    transition_operator(&mut s, &t, &b, ShiftDir::Y).unwrap();
    let to = t.index([1, 0, 0], 1).unwrap();
    assert!((s.amplitudes()[to] - C64::new(-1.0, 0.0)).norm() < 1e-15);
}

fn kinds_2d() -> impl Strategy<Value = TessKind> {
    prop::sample::select(vec![TessKind::X0, TessKind::X1, TessKind::Xy0, TessKind::Xy1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairs_form_a_matching(nx in 1usize..5, ny in 1usize..5, kind in kinds_2d(), periodic in any::<bool>()) {
        let t = dimer_2d(nx, ny);
        let b = if periodic { BoundaryTopology::periodic(2) } else { BoundaryTopology::open(2) };
        let p = tessellation_pairs(&t, kind, &b).unwrap();
        let mut seen = vec![false; t.len()];
        for pair in p.pairs() {
            prop_assert!(!seen[pair.a] && !seen[pair.b]);
            seen[pair.a] = true;
            seen[pair.b] = true;
            // An even site is always paired with an odd one.
            prop_assert_ne!(t.parity(pair.a, 0), t.parity(pair.b, 0));
        }
    }

    #[test]
    fn global_coordinates_round_trip(nx in 1usize..5, ny in 1usize..5, tetramer in any::<bool>()) {
        let unit = if tetramer { UnitKind::Tetramer } else { UnitKind::Dimer };
        let t = build_lattice(&LatticeSpec::uniform(unit, &[nx, ny], 1.0)).unwrap();
        for i in 0..t.len() {
            prop_assert_eq!(t.at_global(t.global(i)), Some(i));
        }
    }

    #[test]
    fn rotations_preserve_norm(theta in -6.3f64..6.3, seed in prop::collection::vec(-1.0f64..1.0, 3..8), kind in kinds_2d()) {
        let t = dimer_2d(4, 3);
        let p = tessellation_pairs(&t, kind, &BoundaryTopology::periodic(2)).unwrap();
        let mut s = random_state(t.len(), &seed);
        for _ in 0..10 {
            s.apply(&Tessellation::uniform(p.clone(), theta));
        }
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotations_are_local(theta in 0.1f64..3.0, site in 0usize..24, kind in kinds_2d()) {
        let t = dimer_2d(4, 3);
        let p = tessellation_pairs(&t, kind, &BoundaryTopology::periodic(2)).unwrap();
        let mut s = WalkerState::basis(t.len(), site);
        s.apply(&Tessellation::uniform(p.clone(), theta));
        let partner = p.partner(site);
        for (i, a) in s.amplitudes().iter().enumerate() {
            if i != site && Some(i) != partner {
                prop_assert_eq!(a.norm(), 0.0);
            }
        }
    }

    #[test]
    fn full_swap_is_a_permutation(kind in kinds_2d(), site in 0usize..24) {
        let t = dimer_2d(4, 3);
        let p = tessellation_pairs(&t, kind, &BoundaryTopology::open(2)).unwrap();
        let mut s = WalkerState::basis(t.len(), site);
        s.apply(&Tessellation::uniform(p.clone(), std::f64::consts::FRAC_PI_2));
        let dest = p.partner(site).unwrap_or(site);
        prop_assert!((s.probabilities()[dest] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adjoint_program_inverts(theta0 in -3.0f64..3.0, theta1 in -3.0f64..3.0, seed in prop::collection::vec(-1.0f64..1.0, 3..6)) {
        let t = build_lattice(&LatticeSpec::chain(8, 1.0, 1.0)).unwrap();
        let c = compile(&StepProgram::coinless_symmetric(theta0, theta1), &t, &BoundaryTopology::periodic(1)).unwrap();
        let s0 = random_state(t.len(), &seed);
        let mut s = s0.clone();
        c.apply_period(&mut s);
        c.adjoint().apply_period(&mut s);
        for (a, b) in s.amplitudes().iter().zip(s0.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}
