//! Scans the fermionic Hong-Ou-Mandel coincidence probability against the
//! path difference for a separable and an entangled pair.
//!
//! Run with `cargo run --release --example hom_scan`.

use etmsim::hom::{coincidence_scan, default_deltas, CoincidenceScan};
use etmsim::params::{ChiModel, ControlParams};
use etmsim::schmidt::{converge_spectrum, ConvergeOptions};

fn sketch(scan: &CoincidenceScan) {
    let step = (scan.deltas.len() / 32).max(1);
    for (d, p) in scan.deltas.iter().zip(&scan.p12).step_by(step) {
        let bar = ((p - 0.5) * 2.0 * 50.0).round() as usize;
        println!("  {d:>8.3} {p:.4} |{}", "#".repeat(bar));
    }
}

pub fn run_example() -> etmsim::Result<()> {
    let opts = ConvergeOptions {
        max_points: 400,
        ..ConvergeOptions::default()
    };
    let cases = [
        (
            "separable",
            ControlParams::new(1e-5, 0.5)
                .with_chi(ChiModel::zero_exchange())
                .with_points(120),
        ),
        ("entangled", ControlParams::new(1e-5, 0.05).with_points(160)),
    ];
    for (name, params) in cases {
        let spec = converge_spectrum(&params, &opts)?;
        let scan = coincidence_scan(&spec, &default_deltas(&spec, 801))?;
        println!(
            "{name}: kappa = {:.4}, P12(0) = {:.6}, baseline = {:.6}, fwhm = {}, truncated weight = {:.1e}",
            scan.kappa,
            scan.peak,
            scan.baseline,
            scan.fwhm.map_or("unbracketed".to_string(), |w| format!("{w:.4}")),
            scan.truncated_weight
        );
        sketch(&scan);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> etmsim::Result<()> {
    run_example()
}
