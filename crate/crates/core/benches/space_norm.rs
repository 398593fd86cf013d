//! Norm-evaluation benchmarks; run with and without the `parallel` feature
//! to compare the data-parallel and sequential kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use morrey_embed::dyadic::DyadicCube;
use morrey_embed::seqnorm::{space_norm, CoeffSequence, NormRequest, SeqScale};
use morrey_embed::weights::{WeightFamily, WeightFunction};

fn random_sequence(d: usize, max_level: i64, decay: f64, seed: u64) -> CoeffSequence {
    let mut seq = CoeffSequence::new(d);
    for j in 0..=max_level {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(j as u64);
        let side = 1i64 << j.min(6);
        let mut m = vec![0i64; d];
        loop {
            let u: f64 = 1.0 - rng.gen::<f64>();
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let cube = DyadicCube::new(j, m.clone()).unwrap();
            seq.insert(cube, sign * 2f64.powf(-(j as f64) * decay) * u).unwrap();
            let mut axis = 0;
            loop {
                if axis == d {
                    break;
                }
                m[axis] += 1;
                if m[axis] < side {
                    break;
                }
                m[axis] = 0;
                axis += 1;
            }
            if axis == d {
                break;
            }
        }
    }
    seq
}

fn bench_norms(c: &mut Criterion) {
    let mode = if cfg!(feature = "parallel") { "parallel" } else { "sequential" };
    let phi = WeightFunction::new(WeightFamily::PiecewisePower { u: 2.0, v: 4.0 }, 1).unwrap();

    let mut group = c.benchmark_group(format!("space_norm/{mode}"));
    for depth in [6i64, 8, 10] {
        let seq = random_sequence(1, depth, 2.0, 42);
        for scale in [SeqScale::B, SeqScale::F, SeqScale::N, SeqScale::E] {
            let req = NormRequest::new(scale, 0.5, 1.0, 2.0, phi.clone()).unwrap();
            group.bench_with_input(
                BenchmarkId::new(format!("{}", scale.letter()), depth),
                &seq,
                |b, seq| b.iter(|| space_norm(seq, &req).unwrap().value),
            );
        }
    }
    group.finish();

    let mut group = c.benchmark_group(format!("space_norm_2d/{mode}"));
    for depth in [4i64, 6] {
        let seq = random_sequence(2, depth, 2.5, 42);
        let phi2 = WeightFunction::new(WeightFamily::Power { u: 4.0 }, 2).unwrap();
        let req = NormRequest::new(SeqScale::N, 0.5, 2.0, 2.0, phi2).unwrap();
        group.bench_with_input(BenchmarkId::new("n", depth), &seq, |b, seq| {
            b.iter(|| space_norm(seq, &req).unwrap().value)
        });
    }
    group.finish();
}

criterion_group!(benches, bench_norms);
criterion_main!(benches);
