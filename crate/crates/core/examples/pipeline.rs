//! End-to-end run of a configuration file, as `deform run` does.
//!
//! `cargo run --example pipeline -- configs/manufactured.toml /tmp/out`

use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let cfg = args.next().map(PathBuf::from).unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/manufactured.toml")));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("deform-example"));
    let outcome = deform::pipeline::run(&cfg, Some(&out), None);
    println!("exit {} ({}): {}", outcome.exit_code, outcome.summary.status.code, outcome.summary.status.message);
    if let Some(it) = &outcome.summary.iteration {
        println!("{} steps, final residual {:.3e}", it.step, it.final_residual());
    }
    println!("summary at {}", outcome.out_dir.join("summary.json").display());
}
