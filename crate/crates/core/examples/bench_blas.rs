//! Compares gemm backends and tanh variants at training shapes.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[link(name = "openblas")]
extern "C" {
    fn cblas_dgemm(
        layout: i32,
        transa: i32,
        transb: i32,
        m: i32,
        n: i32,
        k: i32,
        alpha: f64,
        a: *const f64,
        lda: i32,
        b: *const f64,
        ldb: i32,
        beta: f64,
        c: *mut f64,
        ldc: i32,
    );
    fn openblas_set_num_threads(n: i32);
}

const ROW_MAJOR: i32 = 101;
const NO_TRANS: i32 = 111;

fn tanh_via_exp(x: f64) -> f64 {
    let t = (-2.0 * x.abs()).exp();
    let y = (1.0 - t) / (1.0 + t);
    if x < 0.0 {
        -y
    } else {
        y
    }
}

fn main() {
    unsafe { openblas_set_num_threads(1) };
    let (m, k, n) = (512usize, 256usize, 256usize);
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let a: Vec<f64> = (0..m * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..k * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut c = vec![0.0f64; m * n];

    let reps = 200;
    // openblas
    let t0 = Instant::now();
    for _ in 0..reps {
        unsafe {
            cblas_dgemm(
                ROW_MAJOR, NO_TRANS, NO_TRANS,
                m as i32, n as i32, k as i32,
                1.0, a.as_ptr(), k as i32,
                b.as_ptr(), n as i32,
                0.0, c.as_mut_ptr(), n as i32,
            );
        }
    }
    let blas = t0.elapsed().as_secs_f64() / reps as f64;

    // matrixmultiply
    let t1 = Instant::now();
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
    let mm = t1.elapsed().as_secs_f64() / reps as f64;

    let flops = (2 * m * k * n) as f64;
    println!("dgemm 512x256x256:");
    println!("  openblas:       {:.3} ms  ({:.1} GFLOP/s)", blas * 1e3, flops / blas / 1e9);
    println!("  matrixmultiply: {:.3} ms  ({:.1} GFLOP/s)", mm * 1e3, flops / mm / 1e9);

    // tanh variants
    let mut z: Vec<f64> = (0..512 * 256).map(|i| ((i as f64) * 0.00017).sin() * 3.0).collect();
    let zc = z.clone();
    let t2 = Instant::now();
    for _ in 0..50 {
        for v in &mut z {
            *v = v.tanh();
        }
    }
    let std_tanh = t2.elapsed().as_secs_f64() / (50 * z.len()) as f64;
    z.copy_from_slice(&zc);
    let t3 = Instant::now();
    for _ in 0..50 {
        for v in &mut z {
            *v = tanh_via_exp(*v);
        }
    }
    let exp_tanh = t3.elapsed().as_secs_f64() / (50 * z.len()) as f64;

    // accuracy of the exp form
    let mut max_err: f64 = 0.0;
    for i in 0..200_000 {
        let x = (i as f64 - 100_000.0) * 1e-4;
        let err = (tanh_via_exp(x) - x.tanh()).abs();
        max_err = max_err.max(err);
    }
    println!("tanh std: {:.2} ns, via exp: {:.2} ns, max abs err {:.2e}", std_tanh * 1e9, exp_tanh * 1e9, max_err);
}
