//! A/B: DenseNetwork::forward vs a hand-inlined equivalent on the same data.

use std::time::Instant;

use mqf::matrix::Matrix2D;
use mqf::network::{Activation, DenseNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let net = DenseNetwork::mlp(6, 3, 256, 6, Activation::Tanh, &mut rng);
    let batch = Matrix2D::from_fn(512, 6, |_, _| rng.gen_range(-1.0..1.0));

    let reps = 100;
    for _ in 0..3 {
        let _ = net.forward(&batch).unwrap();
    }
    let t0 = Instant::now();
    for _ in 0..reps {
        let out = net.forward(&batch).unwrap();
        std::hint::black_box(&out);
    }
    println!("net.forward:  {:.3} ms", t0.elapsed().as_secs_f64() / reps as f64 * 1e3);

    let t1 = Instant::now();
    for _ in 0..reps {
        let mut acts: Vec<Matrix2D> = vec![batch.clone()];
        for layer in net.layers() {
            let mut z = acts.last().unwrap().matmul(&layer.weight);
            for r in 0..z.rows() {
                let row = z.row_mut(r);
                for (v, bb) in row.iter_mut().zip(&layer.bias) {
                    let s = *v + bb;
                    *v = layer.activation.apply(s);
                }
            }
            acts.push(z);
        }
        std::hint::black_box(&acts);
    }
    println!("manual same:  {:.3} ms", t1.elapsed().as_secs_f64() / reps as f64 * 1e3);
}
