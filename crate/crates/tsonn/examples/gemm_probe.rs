use ndarray::Array2;
use std::time::Instant;

fn main() {
    for &(rows, k, cols) in &[(28800usize, 64usize, 64usize), (4096, 64, 64), (1440, 64, 64)] {
        let a = Array2::<f64>::from_elem((rows, k), 1.000001);
        let b = Array2::<f64>::from_elem((k, cols), 0.999999);
        let reps = (2e9 / (rows * k * cols * 2) as f64).ceil() as usize;
        let t = Instant::now();
        let mut acc = 0.0;
        for _ in 0..reps {
            let c = a.dot(&b);
            acc += c[(0, 0)];
        }
        let dt = t.elapsed().as_secs_f64();
        let gf = (reps * rows * k * cols * 2) as f64 / dt / 1e9;
        println!("{}x{}x{}: {:.2} GF/s (reps {}, {:.3}s, acc {})", rows, k, cols, gf, reps, dt, acc);
    }
}
