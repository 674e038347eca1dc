use latentmark::{haar_sample, RngSeed, sample_std_gauss};
use std::time::Instant;

fn main() {
    for d in [256usize, 512, 1024, 2048, 4096] {
        let t0 = Instant::now();
        let reps = if d <= 512 { 5 } else { 2 };
        for i in 0..reps {
            let t = haar_sample(d, &RngSeed::new(i as u64, 0)).unwrap();
            std::hint::black_box(&t);
        }
        let per = t0.elapsed().as_secs_f64() / reps as f64;
        let x = sample_std_gauss(d, &RngSeed::new(1,1)).unwrap();
        let t = haar_sample(d, &RngSeed::new(0, 0)).unwrap();
        let t1 = Instant::now();
        for _ in 0..20 { std::hint::black_box(t.apply(&x).unwrap()); }
        let ap = t1.elapsed().as_secs_f64() / 20.0;
        println!("d={d}: haar_sample {per:.4} s, apply {ap:.6} s");
    }
}
