use criterion::{criterion_group, criterion_main, Criterion};
use testforge::rng::SeedStream;
use testforge::serializer::Generator;
use testforge::{structure_check, GenMode};
use testforge_bench::{doc, LOOKUP_DOC, TLV_DOC};

fn bench_generate(c: &mut Criterion) {
    for (name, text) in [("lookup", LOOKUP_DOC), ("tlv", TLV_DOC)] {
        let d = doc(text);
        let gen = Generator::new(&d).unwrap();
        let mut seed = 0u64;
        c.bench_function(&format!("generate_coverage/{name}"), |b| {
            b.iter(|| {
                seed += 1;
                gen.generate(&SeedStream::new(seed), GenMode::Coverage).unwrap()
            })
        });
        c.bench_function(&format!("generate_crash/{name}"), |b| {
            b.iter(|| {
                seed += 1;
                gen.generate(&SeedStream::new(seed), GenMode::Crash).unwrap()
            })
        });
        let blobs: Vec<Vec<u8>> = (0..64)
            .map(|s| gen.generate(&SeedStream::new(s), GenMode::Coverage).unwrap().0)
            .collect();
        let mut i = 0;
        c.bench_function(&format!("structure_check/{name}"), |b| {
            b.iter(|| {
                i = (i + 1) % blobs.len();
                structure_check(&d, &blobs[i]).unwrap()
            })
        });
    }
}

criterion_group!(benches, bench_generate);
criterion_main!(benches);
