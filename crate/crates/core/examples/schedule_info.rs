//! Epoch boundaries, oracle calls and FALCON learning rates.

use falcon::algo::learning_rates;
use falcon::{Algorithm, EpochSchedule};

fn show(name: &str, schedule: &EpochSchedule, horizon: u64) -> falcon::Result<()> {
    let taus = schedule.boundaries_through(horizon)?;
    let falcon = Algorithm::Falcon { delta: 0.05 };
    let gammas = learning_rates(&falcon, schedule, 5, Some(50), horizon)?;
    println!(
        "{name}, T = {horizon}: {} epochs, {} oracle calls",
        taus.len(),
        taus.len() - 1
    );
    for (m, (tau, g)) in taus.iter().zip(&gammas).enumerate() {
        println!("  m={:<3} tau={:<8} gamma={g:.4}", m + 1, tau);
    }
    Ok(())
}

fn main() -> falcon::Result<()> {
    show("geometric", &EpochSchedule::geometric(), 100_000)?;
    show("known horizon", &EpochSchedule::known_horizon(100)?, 100)?;
    show(
        "known horizon",
        &EpochSchedule::known_horizon(100_000)?,
        100_000,
    )?;
    Ok(())
}
