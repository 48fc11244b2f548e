use std::hint::black_box;

use cdrl_core::algo::gae_advantages;
use cdrl_core::hindsight::{evolve, GaConfig};
use cdrl_core::seed::child_rng;
use cdrl_core::{Activation, Condition, FeatureVector, Interval, Mlp, RewardSpace};
use criterion::{criterion_group, criterion_main, Criterion};

fn mlp(c: &mut Criterion) {
    let mut rng = child_rng(0, "bench", 0);
    for norm in [false, true] {
        let net = Mlp::glorot(&[19, 64, 64, 6], Activation::Tanh, &[norm, norm], &mut rng).unwrap();
        let x: Vec<f64> = (0..19).map(|i| (i as f64 * 0.37).sin()).collect();
        let up = vec![0.5; 6];
        let tag = if norm { "layer_norm" } else { "plain" };
        c.bench_function(&format!("mlp_forward_{tag}"), |b| b.iter(|| net.predict(black_box(&x)).unwrap()));
        c.bench_function(&format!("mlp_forward_backward_{tag}"), |b| {
            b.iter(|| {
                let (_, cache) = net.forward(black_box(&x)).unwrap();
                net.backward(&cache, &up).unwrap()
            })
        });
    }
}

fn gae(c: &mut Criterion) {
    let n = 2048;
    let rewards: Vec<f64> = (0..n).map(|t| (t as f64 * 0.1).cos()).collect();
    let values: Vec<f64> = (0..n).map(|t| (t as f64 * 0.05).sin()).collect();
    let dones: Vec<bool> = (0..n).map(|t| t % 200 == 199).collect();
    c.bench_function("gae_2048", |b| {
        b.iter(|| gae_advantages(black_box(&rewards), &values, &dones, 0.3, 0.99, 0.95).unwrap())
    });
}

fn conditional_reward(c: &mut Criterion) {
    let names = ["goal", "bonus", "hazard", "step"].map(String::from).to_vec();
    let ranges = vec![
        Interval::new(0.0, 2.0).unwrap(),
        Interval::new(-3.0, -0.5).unwrap(),
        Interval::new(-0.5, -0.05).unwrap(),
    ];
    let space = RewardSpace::new(names, 0, 1.0, ranges).unwrap();
    let cond = Condition::new(vec![0.2, -0.4, 0.9]).unwrap();
    let phi = FeatureVector(vec![1.0, 0.0, 1.0, -1.0]);
    c.bench_function("conditional_reward", |b| {
        b.iter(|| space.conditional_reward(black_box(&cond), black_box(&phi)).unwrap())
    });
}

fn ga_generation(c: &mut Criterion) {
    let mut ga = GaConfig::with_dims(3);
    ga.generations = 1;
    c.bench_function("ga_generation_50", |b| {
        b.iter(|| evolve(&ga, 0, |g, _| Ok(-g.iter().map(|x| x * x).sum::<f64>())).unwrap())
    });
}

criterion_group!(benches, mlp, gae, conditional_reward, ga_generation);
criterion_main!(benches);
