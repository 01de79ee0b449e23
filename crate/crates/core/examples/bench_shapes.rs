//! Per-shape gemm timing at the exact training dimensions.

use std::time::Instant;

fn time_gemm(m: usize, k: usize, n: usize, reps: usize) -> f64 {
    let a = vec![0.5f64; m * k];
    let b = vec![0.25f64; k * n];
    let mut c = vec![0.0f64; m * n];
    let t = Instant::now();
    for _ in 0..reps {
        unsafe {
            matrixmultiply::dgemm(
                m, k, n,
                1.0,
                a.as_ptr(), k as isize, 1,
                b.as_ptr(), n as isize, 1,
                0.0,
                c.as_mut_ptr(), n as isize, 1,
            );
        }
    }
    t.elapsed().as_secs_f64() / reps as f64
}

fn main() {
    for (m, k, n, label) in [
        (512, 6, 256, "fwd layer 0"),
        (512, 256, 256, "fwd hidden"),
        (512, 256, 6, "fwd out"),
        (6, 512, 256, "dW layer 0"),
        (256, 512, 256, "dW hidden"),
        (256, 512, 6, "dW out"),
        (512, 6, 256, "dX out->h"),
    ] {
        let t = time_gemm(m, k, n, 100);
        let gf = (2 * m * k * n) as f64 / t / 1e9;
        println!("{label:12} {m}x{k}x{n}: {:8.3} ms  ({gf:6.1} GFLOP/s)", t * 1e3);
    }
    // exp throughput
    let mut z: Vec<f64> = (0..512 * 256).map(|i| (i as f64 * 0.001).sin()).collect();
    let t = Instant::now();
    for _ in 0..50 {
        for v in &mut z {
            let e = (-2.0 * v.abs()).exp();
            *v = (1.0 - e) / (1.0 + e);
        }
    }
    println!("tanh_fast: {:.2} ns/elem", t.elapsed().as_secs_f64() / (50.0 * z.len() as f64) * 1e9);
}
