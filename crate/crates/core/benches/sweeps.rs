use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rydberg_walk::decoherence::{channel_step, DensityMatrix, DephasingModel};
use rydberg_walk::lattice::{build_lattice, BoundaryTopology, LatticeSpec};
use rydberg_walk::par::Exec;
use rydberg_walk::topology::{gap_map, phase_diagram, square_grid, CoinedProtocol, GapProtocol};
use rydberg_walk::walk::{compile, StepProgram};
use std::f64::consts::PI;
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn phase(c: &mut Criterion) {
    let pts = square_grid(0.0, PI, 40);
    let mut g = c.benchmark_group("phase_diagram_40x40_k512");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| phase_diagram(black_box(&pts), 0.5, 512, exec))
        });
    }
    g.finish();
}

fn density(c: &mut Criterion) {
    let table = build_lattice(&LatticeSpec::chain_sites(201, 1.0, 1.0)).unwrap();
    let prog = compile(&StepProgram::coinless_plain(0.6, 1.1), &table, &BoundaryTopology::open(1)).unwrap();
    let model = DephasingModel::new(0.1).unwrap();
    let mut g = c.benchmark_group("channel_step_201");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            let mut rho = DensityMatrix::localized(201, 100);
            b.iter(|| channel_step(&mut rho, prog.tessellations(), &model, exec))
        });
    }
    g.finish();
}

fn coined_gaps(c: &mut Criterion) {
    let pts = square_grid(0.0, PI, 16);
    let protocol = GapProtocol::Coined { protocol: CoinedProtocol::chern_2d() };
    let mut g = c.benchmark_group("coined_gap_map_16x16_k32");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| gap_map(&protocol, black_box(&pts), 32, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, phase, density, coined_gaps);
criterion_main!(benches);
