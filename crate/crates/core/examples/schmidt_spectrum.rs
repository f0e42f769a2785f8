//! Decomposes an anticorrelated pair amplitude into electronic temporal
//! modes, refining the grid until the Schmidt number settles, and checks
//! the result against the independent SVD route.
//!
//! Run with `cargo run --release --example schmidt_spectrum`.

use etmsim::amplitude::build_amplitude;
use etmsim::params::ControlParams;
use etmsim::schmidt::{converge_spectrum, schmidt_decompose, ConvergeOptions, Method};

pub fn run_example() -> etmsim::Result<()> {
    let params = ControlParams::new(1e-5, 0.05).with_points(160);
    let opts = ConvergeOptions {
        max_points: 400,
        ..ConvergeOptions::default()
    };
    let spec = converge_spectrum(&params, &opts)?;
    println!(
        "kappa = {:.6}   H2 = {:.6} bits   rank = {}",
        spec.kappa,
        spec.h2,
        spec.rank()
    );
    if let Some(report) = &spec.convergence {
        for step in &report.history {
            match step.rel_change {
                Some(c) => println!(
                    "  n = {:>4}  kappa = {:.8}  change = {c:.2e}",
                    step.n_points, step.kappa
                ),
                None => println!("  n = {:>4}  kappa = {:.8}", step.n_points, step.kappa),
            }
        }
        println!("converged: {}", report.converged);
    }
    for (n, p) in spec.probs.iter().take(6).enumerate() {
        println!("  p_{n} = {p:.8}");
    }
    println!("degenerate groups: {:?}", spec.degenerate);
    println!("orthonormality error: {:.2e}", spec.orthonormality_error());

    let amp = build_amplitude(&params)?;
    let fast = schmidt_decompose(&amp, Method::KernelEig)?;
    let oracle = schmidt_decompose(&amp, Method::SvdOracle)?;
    let worst = fast
        .probs
        .iter()
        .zip(&oracle.probs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!(
        "kernel-eig vs SVD on {} points: max |dp| = {worst:.2e}",
        amp.grid.n
    );
    let full = fast.reconstruct(fast.len());
    let err = (full - &amp.values).norm();
    println!("full-rank reconstruction error: {err:.2e}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> etmsim::Result<()> {
    run_example()
}
