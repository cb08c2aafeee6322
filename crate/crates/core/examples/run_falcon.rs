//! One FALCON run on a planted finite class.
//!
//! cargo run --example run_falcon -- [path/to/out.csv]

use falcon::{run, RunConfig};

fn main() -> falcon::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/planted.toml");
    let config = RunConfig::load(path.as_ref())?;
    let result = run(&config)?;

    println!(
        "{:>6} {:>8} {:>10} {:>12}",
        "epoch", "start", "gamma", "model"
    );
    for e in &result.epochs {
        let model = e
            .model
            .member_id()
            .map_or("-".into(), |id| format!("f{id}"));
        println!(
            "{:>6} {:>8} {:>10.4} {:>12}",
            e.epoch, e.first_round, e.gamma, model
        );
    }
    let t = &result.totals;
    println!(
        "\nrounds {}  oracle calls {}  regret {}  pseudo-regret {:.1}  bound {:.0}",
        t.rounds,
        t.oracle_calls,
        t.final_regret,
        t.final_pseudo_regret,
        result.bound.unwrap_or(f64::NAN)
    );

    if let Some(out) = std::env::args().nth(1) {
        result.write_csv(std::fs::File::create(&out)?)?;
        println!("wrote {out}");
    }
    Ok(())
}
