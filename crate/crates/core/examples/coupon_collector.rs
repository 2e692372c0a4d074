// Draws needed to see all but an epsilon fraction of n coupons.

use std::error::Error;

use bubble_cuckoo::oracle::coupon_trial;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let n = 100_000;
    for eps in [0.5, 0.25, 1.0 / 16.0, 1.0 / 256.0] {
        let trials: Vec<u64> = (0..10).map(|s| coupon_trial(n, eps, s)).collect();
        let mean = trials.iter().sum::<u64>() as f64 / trials.len() as f64;
        let predicted = n as f64 * (1.0 / eps).ln();
        println!(
            "eps {eps:<10} mean draws {mean:>10.0}  n ln(1/eps) {predicted:>10.0}  ratio {:.4}",
            mean / predicted
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
