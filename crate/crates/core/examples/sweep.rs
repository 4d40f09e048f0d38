//! Runs the bundled amplitude sweep configuration through the library entry
//! point the `kgblow sweep` command uses.
//!
//! `cargo run --release --example sweep -- [config.ini] [out_dir]`
use std::path::PathBuf;

use kg_blowup::cli::{cmd_sweep, RunConfig};

fn main() -> kg_blowup::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/sweep_lambda.ini"));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("kgblow_sweep"));
    let cfg = RunConfig::load(&config)?;
    let code = cmd_sweep(&cfg, &out, None);
    print!("{}", std::fs::read_to_string(out.join("sweep.csv"))?);
    std::process::exit(code);
}
