//! Discriminates incoming electronic temporal modes with shaped probe
//! electrons and estimates the Schmidt probabilities by counting
//! coincidence peaks over seeded random shots.
//!
//! Run with `cargo run --release --example etm_discrimination`.

use etmsim::discriminate::{probe_coincidence, run_tomography, ProbeMode, DEFAULT_THRESHOLD};
use etmsim::params::ControlParams;
use etmsim::schmidt::{converge_spectrum, ConvergeOptions};

pub fn run_example() -> etmsim::Result<()> {
    let params = ControlParams::new(1e-5, 0.03).with_points(200);
    let opts = ConvergeOptions {
        max_points: 450,
        ..ConvergeOptions::default()
    };
    let spec = converge_spectrum(&params, &opts)?;
    println!("kappa = {:.4}", spec.kappa);

    let probes = (0..3)
        .map(|n| ProbeMode::from_mode(&spec, n))
        .collect::<etmsim::Result<Vec<_>>>()?;
    println!("zero-delay coincidence, incoming mode (rows) vs probe (columns):");
    for n in 0..3 {
        let row = probes
            .iter()
            .map(|p| probe_coincidence(&spec, n, p, &[0.0]).map(|s| s.p12[0]))
            .collect::<etmsim::Result<Vec<_>>>()?;
        println!(
            "  phi_{n}: {}",
            row.iter()
                .map(|p| format!("{p:.6}"))
                .collect::<Vec<_>>()
                .join("  ")
        );
    }

    for shots in [100, 1_000, 10_000] {
        let t = run_tomography(&spec, &probes, shots, 7, DEFAULT_THRESHOLD)?;
        println!("{shots:>6} shots:");
        for (j, label) in t.labels.iter().enumerate() {
            println!(
                "  {label}: estimate {:.4} +- {:.4}   true {:.4}",
                t.estimates[j], t.std_errors[j], spec.probs[j]
            );
        }
        println!("  other: {:.4}", t.other);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> etmsim::Result<()> {
    run_example()
}
