use cavity_ghz::engine::{self, Initial, PropagationSettings, Record};
use cavity_ghz::hilbert::HilbertLayout;
use cavity_ghz::protocol::{self, ProtocolOptions, SourceModel};
use cavity_ghz::{model, Exec, SimParams};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::f64::consts::PI;
use std::hint::black_box;

const POLICIES: [Exec; 2] = [Exec::Sequential, Exec::Parallel];

fn column_propagation(c: &mut Criterion) {
    let small = HilbertLayout::qubits(3, 6).unwrap();
    let padded = small.with_fock_dim(24).unwrap();
    let params = SimParams::new(3, 1.0, 2.0, 0.0, 23);
    let recipe = model::build_effective_hamiltonian(&params, 0.0).unwrap();
    let x0 = engine::padded_identity_columns(&small, &padded);

    let mut group = c.benchmark_group("column_propagation");
    group.sample_size(10);
    for exec in POLICIES {
        let settings = PropagationSettings::default()
            .with_record(Record::Final)
            .with_exec(exec);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &settings, |b, s| {
            b.iter(|| engine::propagate(&recipe, &Initial::Columns(x0.clone()), 0.0, black_box(1.0), s).unwrap())
        });
    }
    group.finish();
}

fn protocol_grid(c: &mut Criterion) {
    let eta = 2.0 * PI * 0.05;
    let ratios = [2.0, 4.0, 6.0, 8.0];
    let mut opts = ProtocolOptions {
        source: SourceModel::Driven,
        ..Default::default()
    };
    opts.settings = opts.settings.with_exec(Exec::Sequential);

    let mut group = c.benchmark_group("protocol_grid");
    group.sample_size(10);
    for exec in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(format!("{exec:?}")), |b| {
            b.iter(|| {
                exec.map(&ratios, |r| {
                    let params = SimParams::new(2, eta, 2.0 * eta, r * 2.0 * eta, 6);
                    protocol::run_ghz_protocol(&params, &opts).unwrap().final_fidelity
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, column_propagation, protocol_grid);
criterion_main!(benches);
