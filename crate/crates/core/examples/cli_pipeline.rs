//! Drives the `etmsim` command line from code: validates a config, runs
//! the HOM subcommand, and replays the run from its own manifest.
//!
//! Run with `cargo run --release --example cli_pipeline`.

use etmsim::cli::{run, EXIT_OK, MANIFEST_FILE};

pub fn run_example() -> etmsim::Result<()> {
    let dir = std::env::temp_dir().join(format!("etmsim-cli-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).map_err(|e| etmsim::EtmError::io(&dir, e))?;
    let config = dir.join("config.json");
    let body = r#"{
  "T_I": 1e-5,
  "sigma_e": 0.05,
  "grid": {"n_points": 160},
  "convergence": {"max_points": 400}
}
"#;
    std::fs::write(&config, body).map_err(|e| etmsim::EtmError::io(&config, e))?;

    let first = dir.join("first");
    let code = run([
        "etmsim".as_ref(),
        "hom".as_ref(),
        "--config".as_ref(),
        config.as_os_str(),
        "--delta-range".as_ref(),
        "-3:3:121".as_ref(),
        "--out".as_ref(),
        first.as_os_str(),
    ]);
    println!("hom exit code: {code}");
    if code != EXIT_OK {
        return Err(etmsim::EtmError::Config(format!(
            "hom run exited with {code}"
        )));
    }

    let replay = dir.join("replay");
    let code = run([
        "etmsim".as_ref(),
        "hom".as_ref(),
        "--config".as_ref(),
        first.join(MANIFEST_FILE).as_os_str(),
        "--out".as_ref(),
        replay.as_os_str(),
    ]);
    let a = std::fs::read(first.join("scan.csv")).map_err(|e| etmsim::EtmError::io(&first, e))?;
    let b = std::fs::read(replay.join("scan.csv")).map_err(|e| etmsim::EtmError::io(&replay, e))?;
    println!(
        "replay exit code: {code}, scan.csv byte-identical: {}",
        a == b
    );

    let bad = run([
        "etmsim",
        "schmidt",
        "--sigma-e",
        "-1",
        "--dry-run",
        "--out",
        dir.join("bad").to_str().unwrap_or("bad"),
    ]);
    println!("negative sigma_e exit code: {bad}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> etmsim::Result<()> {
    run_example()
}
