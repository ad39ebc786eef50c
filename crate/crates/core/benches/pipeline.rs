//! Sequential against rayon on the three data-parallel stages.

use std::hint::black_box;

use coordlab::coordination::{coordination_profile, CoordinationConfig};
use coordlab::corpus::{FilterSpec, Group};
use coordlab::lexicon::Lexicon;
use coordlab::stats::bootstrap_std_of_mean;
use coordlab::synth::{generate, GenSpec};
use coordlab::Parallelism;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("rayon", Parallelism::Rayon)];

fn spec() -> GenSpec {
    GenSpec::from_json(
        r#"{
  "seed": 1,
  "domains": { "d": ["blorp", "zint", "quax", "fendle", "mirk", "tabby"] },
  "groups": [
    { "name": "s", "size": 200, "labels": ["speaker"], "domain": "d", "p": 0.2, "delta": 0.3 },
    { "name": "t", "size": 20, "labels": ["target"], "domain": "d", "q": 0.5 }
  ],
  "interactions": [ { "speakers": "s", "targets": "t", "exchanges_per_speaker": 200, "partners": 4 } ]
}"#,
    )
    .unwrap()
}

fn benches(c: &mut Criterion) {
    let lex = Lexicon::shipped();
    let spec = spec();

    let mut g = c.benchmark_group("generate_40k");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| generate(black_box(&spec), &lex, mode).unwrap())
        });
    }
    g.finish();

    let corpus = generate(&spec, &lex, Parallelism::default()).unwrap().to_corpus(&lex).unwrap();
    let all = Group::everyone();
    let mut g = c.benchmark_group("profile_40k");
    g.sample_size(20);
    for (name, parallelism) in MODES {
        let config = CoordinationConfig {
            parallelism,
            ..Default::default()
        };
        g.bench_function(name, |b| {
            b.iter(|| coordination_profile(&corpus, &lex, &all, &all, &FilterSpec::default(), config).unwrap())
        });
    }
    g.finish();

    let values: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64 / 100.0).collect();
    let mut g = c.benchmark_group("bootstrap_10k");
    for (name, mode) in MODES {
        g.bench_function(name, |b| b.iter(|| bootstrap_std_of_mean(black_box(&values), 10_000, 3, mode)));
    }
    g.finish();
}

criterion_group!(pipeline, benches);
criterion_main!(pipeline);
