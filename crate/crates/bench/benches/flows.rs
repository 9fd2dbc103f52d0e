use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cusplab::blowup::{chart_field, ChartId, ChartPoint};
use cusplab::cusp::{critical_branches, A3System};
use cusplab::exp_maps::{compose_exp, ExpTypeMap};
use cusplab::odeflow::{integrate_to_section, Axis, Direction, Options, Section, Sign};
use cusplab::sdi::{sdi_quadrature, transition_sdi};
use cusplab::transition::{estimate_transition, TransitionSetup};

fn transitions(c: &mut Criterion) {
    let sys = A3System::principal();
    let flat = A3System::stock_flat(1.0);
    let setup = TransitionSetup::default();
    let mut g = c.benchmark_group("transition");
    g.sample_size(20);
    g.bench_function("principal eps=1e-2", |b| {
        b.iter(|| estimate_transition(&sys, black_box(0.0), 2.0, 1e-2, &setup).unwrap())
    });
    g.bench_function("principal eps=1e-3", |b| {
        b.iter(|| estimate_transition(&sys, black_box(0.0), 2.0, 1e-3, &setup).unwrap())
    });
    g.bench_function("stock-flat eps=1e-2", |b| {
        b.iter(|| estimate_transition(&flat, black_box(0.0), 2.0, 1e-2, &setup).unwrap())
    });
    g.finish();
}

fn section_hits(c: &mut Criterion) {
    let sys = A3System::principal();
    let sec = Section::new(Axis::A, 1.0).unwrap().with_z_sign(Sign::Minus);
    let opts = Options::default();
    c.bench_function("integrate_to_section eps=1e-2", |b| {
        b.iter(|| {
            integrate_to_section(
                &sys.fast_field(),
                black_box([-1.0, 0.0, 2.0, 1e-2]),
                &sec,
                Direction::Increasing,
                &opts,
                1e4,
            )
            .unwrap()
        })
    });
}

fn small_kernels(c: &mut Criterion) {
    c.bench_function("critical_branches", |b| {
        b.iter(|| critical_branches(black_box(0.1), black_box(-0.3)))
    });
    c.bench_function("sdi_quadrature", |b| {
        b.iter(|| sdi_quadrature(black_box(0.3), 1.2, -1.1, 1e-12).unwrap())
    });
    c.bench_function("transition_sdi b<0", |b| {
        b.iter(|| transition_sdi(1.0, 1.0, black_box(-0.3)).unwrap())
    });
    let sys = A3System::stock_flat(1.0);
    let field = chart_field(ChartId::En, &sys);
    let p = ChartPoint::new(ChartId::En, 0.3, [0.2, 1.1, 0.4]).unwrap();
    c.bench_function("chart field en", |b| {
        b.iter(|| field.eval_point(black_box(&p)).unwrap())
    });
    let d = compose_exp(&ExpTypeMap::pure(0.7), &ExpTypeMap::pure(1.3));
    c.bench_function("compose_exp eval", |b| {
        b.iter(|| d.eval(0.0, black_box(0.5), 1e-2).unwrap())
    });
}

criterion_group!(benches, transitions, section_hits, small_kernels);
criterion_main!(benches);
