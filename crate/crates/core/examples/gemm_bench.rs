use fun_core::nn::linalg::gemm_acc;
use std::time::Instant;

fn main() {
    // shapes typical of the micro model at grid 10 and efun at grid 28
    for (m, k, n) in [(1152, 192, 100), (336, 56, 100), (1152, 192, 784), (128, 768, 784)] {
        let a = vec![1.0f32; m * k];
        let b = vec![1.0f32; k * n];
        let mut c = vec![0.0f32; m * n];
        let reps = (2_000_000_000 / (m * k * n)).max(1);
        let t = Instant::now();
        for _ in 0..reps {
            gemm_acc(m, k, n, &a, &b, &mut c);
        }
        let el = t.elapsed().as_secs_f64();
        let gmacs = (m * k * n * reps) as f64 / el / 1e9;
        println!("{m}x{k}x{n}: {gmacs:.2} GMAC/s ({reps} reps, {el:.2}s)");
    }
}
