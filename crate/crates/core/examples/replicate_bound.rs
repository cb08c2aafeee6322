//! FALCON against the uniform baseline over 20 seeds, with the
//! high-probability regret bound for reference.

use falcon::{replicate, Algorithm, RunConfig};

fn main() -> falcon::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/planted.toml");
    let config = RunConfig::load(path.as_ref())?;
    let seeds = config.replication_seeds();

    let (falcon, runs) = replicate(&config, &seeds)?;
    let mut uniform = config.clone();
    uniform.algorithm = Algorithm::Uniform;
    let (baseline, _) = replicate(&uniform, &seeds)?;

    println!("{:>6} {:>12}", "seed", "regret");
    for s in &falcon.per_seed_final_regrets {
        println!("{:>6} {:>12}", s.seed, s.final_regret);
    }
    let bound = falcon.theoretical_bound.unwrap();
    let horizon = config.horizon()?;
    let late_better = runs
        .iter()
        .filter(|r| r.mean_regret(horizon / 2 + 1, horizon) < r.mean_regret(1, horizon / 2))
        .count();
    println!(
        "\nfalcon   mean {:.1}  p10 {:.1}  p90 {:.1}",
        falcon.mean, falcon.p10, falcon.p90
    );
    println!("uniform  mean {:.1}", baseline.mean);
    println!("ratio    {:.3}", falcon.mean / baseline.mean);
    println!(
        "bound    {bound:.0} (max seed uses {:.2}%)",
        100.0 * falcon.p90.max(falcon.mean) / bound
    );
    println!("second half better in {late_better}/{} seeds", runs.len());
    Ok(())
}
