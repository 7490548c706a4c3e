//! Parses, compiles and runs a `.bench` file, printing the CSV table.
//!
//! `cargo run --example run_bench -- programs/bell_scan.bench`

use gpq::bench::{compile, parse};
use gpq::experiment::{execute, ExecOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/programs/fringe_hv_phi0.bench").into());
    let text = std::fs::read_to_string(&path)?;
    let parsed = match parse(&text) {
        Ok(p) => p,
        Err(diags) => {
            for d in diags {
                eprintln!("{path}:{d}");
            }
            std::process::exit(3);
        }
    };
    for w in &parsed.warnings {
        eprintln!("{path}:{w}");
    }
    let plan = compile(&parsed.program).map_err(|d| format!("{d:?}"))?;
    let opts = ExecOptions {
        seed: parsed.program.seed.as_ref().map_or(0, |s| s.value),
        ..Default::default()
    };
    execute(&plan, &opts)?.write_csv(std::io::stdout())?;
    Ok(())
}
