//! The inverse-gap kernel for a fixed prediction vector as gamma grows.

use falcon::ActionDistribution;

fn main() {
    let predictions = [0.9, 0.7, 0.5, 0.1];
    println!("predictions {predictions:?}\n");
    println!("{:>8}  p(a)", "gamma");
    for gamma in [1.0, 4.0, 16.0, 64.0, 256.0] {
        let d = ActionDistribution::inverse_gap(&predictions, gamma);
        let probs: Vec<String> = d.probs().iter().map(|p| format!("{p:.4}")).collect();
        println!("{gamma:>8}  {}", probs.join("  "));
    }

    let d = ActionDistribution::inverse_gap(&predictions, 16.0);
    let mut counts = [0usize; 4];
    let n = 100_000;
    for i in 0..n {
        counts[d.sample((i as f64 + 0.5) / n as f64)] += 1;
    }
    println!("\nstratified sampling at gamma=16: {counts:?}");
}
