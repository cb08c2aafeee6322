//! Writes an SVG of cumulative regret with the regret bound overlaid.
//!
//! cargo run --example plot_regret -- regret.svg

use falcon::plot::{emit_plot, BoundParams};
use falcon::{run, RunConfig};

fn main() -> falcon::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/planted.toml");
    let config = RunConfig::load(path.as_ref())?;
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "regret.svg".into());
    let result = run(&config)?;
    let bound = BoundParams {
        num_actions: 5,
        class_size: 50,
        delta: 0.05,
        tau_1: 2,
    };
    emit_plot(
        &result,
        Some(bound),
        "FALCON cumulative regret",
        &config.to_toml_string(),
        out.as_ref(),
    )?;
    println!(
        "wrote {out} (final regret {}, bound {:.0})",
        result.final_regret(),
        bound.at(result.totals.rounds)
    );
    Ok(())
}
