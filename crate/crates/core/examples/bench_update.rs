//! Rough timing of one training-update worth of linear algebra.

use std::time::Instant;

use mqf::matrix::Matrix2D;
use mqf::network::{Activation, DenseNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let net = DenseNetwork::mlp(6, 3, 256, 6, Activation::Tanh, &mut rng);
    let batch = Matrix2D::from_fn(512, 6, |_, _| rng.gen_range(-1.0..1.0));
    let grad = Matrix2D::from_fn(512, 6, |_, _| rng.gen_range(-1.0..1.0));

    // Warm up.
    for _ in 0..3 {
        let (_, tape) = net.forward(&batch).unwrap();
        let _ = net.backward(&tape, &grad).unwrap();
    }

    let reps = 50;
    let t0 = Instant::now();
    for _ in 0..reps {
        let (_, tape) = net.forward(&batch).unwrap();
        let _ = net.backward(&tape, &grad).unwrap();
    }
    let fwd_bwd = t0.elapsed().as_secs_f64() / reps as f64;

    let t1 = Instant::now();
    for _ in 0..reps {
        let (_, _) = net.forward(&batch).unwrap();
    }
    let fwd = t1.elapsed().as_secs_f64() / reps as f64;

    // tanh throughput on its own.
    let mut z: Vec<f64> = (0..512 * 256).map(|i| (i as f64 * 0.001).sin()).collect();
    let t2 = Instant::now();
    for _ in 0..reps {
        for v in &mut z {
            *v = v.tanh();
        }
    }
    let tanh_per = t2.elapsed().as_secs_f64() / (reps * z.len()) as f64;

    let per_update_per_agent = fwd_bwd + fwd; // prediction fwd+bwd, target fwd
    println!("forward (b=512, 3x256): {:.3} ms", fwd * 1e3);
    println!("forward+backward:       {:.3} ms", fwd_bwd * 1e3);
    println!("tanh: {:.2} ns/elem", tanh_per * 1e9);
    println!(
        "est. per update, 2 agents: {:.1} ms -> 65k updates: {:.1} min",
        per_update_per_agent * 2.0 * 1e3,
        per_update_per_agent * 2.0 * 65_000.0 / 60.0
    );
}
