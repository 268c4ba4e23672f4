use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use screener_core::exec::Execution;
use screener_stats::{concordance_report, contingency_report, Endpoint, Factor, PairedRecord};

fn records(n: usize) -> Vec<PairedRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    (0..n)
        .map(|i| {
            let s: u8 = rng.random_range(0..=27);
            let b = (i64::from(s) + rng.random_range(-3..=3)).clamp(0, 27) as u8;
            let mut r = PairedRecord::new(&format!("p{i}"), s, b);
            r.demographics.mh_experience = Some(rng.random_bool(0.5));
            r.demographics.chatbot_experience = Some(rng.random_bool(0.4));
            r.demographics.country = Some(if rng.random_bool(0.6) { "UK" } else { "China" }.into());
            r.demographics.gender = Some(if rng.random_bool(0.5) { "female" } else { "male" }.into());
            r.endpoints.recommend = Some(rng.random_bool(0.7));
            r
        })
        .collect()
}

fn bench(c: &mut Criterion) {
    let recs = records(20_000);
    let mut g = c.benchmark_group("concordance");
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_function(format!("{exec:?}"), |b| b.iter(|| concordance_report(&recs, exec).unwrap()));
    }
    g.finish();
    let mut g = c.benchmark_group("contingency");
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| contingency_report(&recs, &Factor::ALL, Endpoint::Recommend, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
