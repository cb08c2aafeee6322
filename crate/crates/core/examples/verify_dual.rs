//! Checks the policy-space identities on every epoch of a small run.

use falcon::verify::verify_config;
use falcon::RunConfig;

fn main() -> falcon::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/tiny.toml");
    let config = RunConfig::load(path.as_ref())?;
    let report = verify_config(&config)?;
    println!("{report}");
    if !report.passed() {
        std::process::exit(2);
    }
    Ok(())
}
