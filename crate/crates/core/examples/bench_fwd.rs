//! Breakdown of forward-pass cost at training shape.

use std::time::Instant;

use mqf::matrix::Matrix2D;

fn main() {
    let b = 512usize;
    let dims = [6usize, 256, 256, 256, 6];
    let weights: Vec<Matrix2D> = dims
        .windows(2)
        .map(|w| Matrix2D::from_fn(w[0], w[1], |r, c| ((r * 7 + c) % 13) as f64 * 0.01 - 0.06))
        .collect();
    let biases: Vec<Vec<f64>> = dims[1..].iter().map(|&d| vec![0.01; d]).collect();
    let batch = Matrix2D::from_fn(b, 6, |r, c| ((r + c) % 17) as f64 * 0.05 - 0.4);

    let reps = 100;

    // gemm chain only
    let t0 = Instant::now();
    for _ in 0..reps {
        let mut x = batch.clone();
        for w in &weights {
            x = x.matmul(w);
        }
        std::hint::black_box(&x);
    }
    let gemm_only = t0.elapsed().as_secs_f64() / reps as f64;

    // gemm + bias + tanh (hidden) pass
    let t1 = Instant::now();
    for _ in 0..reps {
        let mut x = batch.clone();
        for (li, w) in weights.iter().enumerate() {
            let mut z = x.matmul(w);
            let tanh_layer = li + 1 < weights.len();
            for r in 0..z.rows() {
                let row = z.row_mut(r);
                for (v, bb) in row.iter_mut().zip(&biases[li]) {
                    let s = *v + bb;
                    *v = if tanh_layer {
                        let e = (-2.0 * s.abs()).exp();
                        let y = (1.0 - e) / (1.0 + e);
                        if s < 0.0 { -y } else { y }
                    } else {
                        s
                    };
                }
            }
            x = z;
        }
        std::hint::black_box(&x);
    }
    let with_act = t1.elapsed().as_secs_f64() / reps as f64;

    // tape variant: keep every activation alive like the real forward
    let t2 = Instant::now();
    for _ in 0..reps {
        let mut acts: Vec<Matrix2D> = vec![batch.clone()];
        for (li, w) in weights.iter().enumerate() {
            let mut z = acts.last().unwrap().matmul(w);
            let tanh_layer = li + 1 < weights.len();
            for r in 0..z.rows() {
                let row = z.row_mut(r);
                for (v, bb) in row.iter_mut().zip(&biases[li]) {
                    let s = *v + bb;
                    *v = if tanh_layer {
                        let e = (-2.0 * s.abs()).exp();
                        let y = (1.0 - e) / (1.0 + e);
                        if s < 0.0 { -y } else { y }
                    } else {
                        s
                    };
                }
            }
            acts.push(z);
        }
        std::hint::black_box(&acts);
    }
    let taped = t2.elapsed().as_secs_f64() / reps as f64;

    println!("gemm chain only:   {:.3} ms", gemm_only * 1e3);
    println!("gemm+bias+tanh:    {:.3} ms", with_act * 1e3);
    println!("taped (full fwd):  {:.3} ms", taped * 1e3);
}
