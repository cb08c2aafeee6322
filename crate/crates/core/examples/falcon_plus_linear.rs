//! FALCON+ with a ridge regression oracle. Regret at T and 2T.

use falcon::{replicate, RunConfig};

fn main() -> falcon::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/linear.toml");
    let mut config = RunConfig::load(path.as_ref())?;
    let seeds: Vec<u64> = (0..20).collect();
    let t = config.horizon()?;

    let (short, runs) = replicate(&config, &seeds)?;
    config.horizon = Some(2 * t);
    let (long, _) = replicate(&config, &seeds)?;

    let gammas: Vec<String> = runs[0]
        .epochs
        .iter()
        .map(|e| format!("{:.2}", e.gamma))
        .collect();
    println!("gamma by epoch: {}", gammas.join(" "));
    let clamps: u64 = runs.iter().map(|r| r.totals.clamp_events).sum();
    println!("clamped predictions across seeds: {clamps}");
    println!("mean regret T={t}: {:.1}", short.mean);
    println!("mean regret T={}: {:.1}", 2 * t, long.mean);
    println!(
        "ratio: {:.3} (sqrt 2 = {:.3})",
        long.mean / short.mean,
        2f64.sqrt()
    );
    Ok(())
}
