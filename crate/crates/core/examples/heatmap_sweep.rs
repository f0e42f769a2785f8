//! Sweeps the Schmidt number over a small `(T_I, sigma_e)` heatmap, resumes
//! it from its checkpoint, evaluates a path cut, and tabulates the HOM
//! peak width along the path.
//!
//! Run with `cargo run --release --example heatmap_sweep`.

use etmsim::io::write_text;
use etmsim::params::GridSpec;
use etmsim::sweep::{cut_csv, heatmap_csv, run_heatmap, run_path_cut, run_scan_family, SweepPlan};

pub fn run_example() -> etmsim::Result<()> {
    let mut plan = SweepPlan::default_heatmap(3);
    plan.base.grid = GridSpec::with_points(140);
    plan.convergence.max_points = 320;
    plan.jobs = 2;

    let dir = std::env::temp_dir().join(format!("etmsim-heatmap-{}", std::process::id()));
    let checkpoint = dir.join("checkpoint.log");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).map_err(|e| etmsim::EtmError::io(&dir, e))?;

    let rows = run_heatmap(&plan, Some(&checkpoint))?;
    println!(
        "{:>10} {:>8} {:>9} {:>9} {:>5}",
        "T_I", "sigma_e", "H2", "kappa", "conv"
    );
    for r in &rows {
        println!(
            "{:>10.2e} {:>8.4} {:>9.5} {:>9.5} {:>5}",
            r.t_i, r.sigma_e, r.h2, r.kappa, r.converged
        );
    }
    let csv = heatmap_csv(&rows);
    write_text(&dir.join("heatmap.csv"), &csv)?;

    // a second pass reads every point back from the checkpoint
    let resumed = run_heatmap(&plan, Some(&checkpoint))?;
    println!("resumed table identical: {}", heatmap_csv(&resumed) == csv);

    plan.path = Some(vec![(1e-5, 0.05), (1e-4, 0.1), (1e-3, 0.2), (1e-2, 0.4)]);
    let cut = run_path_cut(&plan, None)?;
    write_text(&dir.join("cut.csv"), &cut_csv(&cut))?;
    for c in &cut {
        println!(
            "cut[{}] T_I = {:.0e}, sigma_e = {}: kappa = {:.5}",
            c.index, c.row.t_i, c.row.sigma_e, c.row.kappa
        );
    }

    let (_, widths) = run_scan_family(&plan, None)?;
    for w in &widths {
        println!(
            "kappa = {:.5}  fwhm = {}",
            w.kappa,
            w.fwhm
                .map_or("unbracketed".to_string(), |f| format!("{f:.4}"))
        );
    }
    println!("outputs in {}", dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> etmsim::Result<()> {
    run_example()
}
