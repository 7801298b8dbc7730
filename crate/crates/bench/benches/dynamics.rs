use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;

use chainwave_core::fem::sim::Stepper;
use chainwave_core::{discretize, validate_chain, State, Variant};

fn bench_assembly(c: &mut Criterion) {
    let g = validate_chain(&[1.0, 0.8, 1.3, 0.9]).unwrap();
    c.bench_function("discretize N=2 h=1/100", |b| {
        b.iter(|| black_box(discretize(&g, 0.01, Variant::P2).unwrap()));
    });
}

fn bench_stepping(c: &mut Criterion) {
    let g = validate_chain(&[1.0, 1.0]).unwrap();
    let sys = discretize(&g, 0.02, Variant::P2).unwrap();
    let stepper = Stepper::new(&sys, 0.01).unwrap();
    let initial = State::new(sys.smooth_bump(), DVector::zeros(sys.n_dofs()));
    c.bench_function("implicit midpoint step n~300", |b| {
        let mut state = initial.clone();
        b.iter(|| {
            let (next, stats) = stepper.step(&state);
            state = next;
            black_box(stats.energy);
        });
    });
}

criterion_group!(benches, bench_assembly, bench_stepping);
criterion_main!(benches);
