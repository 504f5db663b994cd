use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use toric_ic::cohom::ih_betti;
use toric_ic::gem::dualize_d;
use toric_ic::{build_ic, Perversity};
use toric_ic_bench::corpus_fan;

fn betti(c: &mut Criterion) {
    let mut g = c.benchmark_group("ih_betti_middle");
    g.sample_size(10);
    for name in ["p2", "p1xp1", "octahedron", "cube"] {
        let sites = corpus_fan(name);
        let p = Perversity::middle(sites.fan());
        g.bench_function(name, |b| b.iter(|| ih_betti(black_box(&sites), &p).unwrap()));
    }
    g.finish();
}

fn dual(c: &mut Criterion) {
    let mut g = c.benchmark_group("dualize_ic");
    g.sample_size(10);
    for name in ["p2", "cube"] {
        let sites = corpus_fan(name);
        let ic = build_ic(&sites, &Perversity::top(sites.fan())).unwrap();
        g.bench_function(name, |b| b.iter(|| dualize_d(black_box(&ic)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, betti, dual);
criterion_main!(benches);
