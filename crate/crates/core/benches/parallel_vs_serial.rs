use std::hint::black_box;

use chernlab::builders::{build, Descriptor};
use chernlab::chernforms::{ch_odd, cs_form};
use chernlab::kops::{inversion_homotopy_odd, Grading, DEFAULT_TIME_NODES};
use chernlab::par;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn su2(res: usize) -> chernlab::geomgrid::SampledMap {
    let desc = Descriptor { builder: "su2_chart".into(), params: serde_json::json!({ "domain": "torus3" }) };
    build(&desc, &[res]).unwrap().map
}

fn bench_ch3(c: &mut Criterion) {
    let mut group = c.benchmark_group("ch3_torus3");
    group.sample_size(10);
    let full = par::current_jobs().max(2);
    for res in [16usize, 24] {
        let f = su2(res);
        for jobs in [1, full] {
            group.bench_with_input(BenchmarkId::new(format!("jobs{jobs}"), res), &f, |b, f| {
                b.iter(|| par::with_jobs(jobs, || black_box(ch_odd(f, 2).unwrap())))
            });
        }
    }
    group.finish();
}

fn bench_cs(c: &mut Criterion) {
    let mut group = c.benchmark_group("cs2_inversion");
    group.sample_size(10);
    let full = par::current_jobs().max(2);
    let f = su2(12);
    let h = inversion_homotopy_odd(&f, Grading::Ungraded, DEFAULT_TIME_NODES).unwrap();
    for jobs in [1, full] {
        group.bench_function(format!("jobs{jobs}"), |b| b.iter(|| par::with_jobs(jobs, || black_box(cs_form(&h, 2).unwrap()))));
    }
    group.finish();
}

criterion_group!(benches, bench_ch3, bench_cs);
criterion_main!(benches);
