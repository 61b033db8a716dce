//! Desk-scale benchmark: 10 spikes, 4 planes of 32 x 32 pixels, PGD against BCD from the
//! same OP-COMP initialization.
//!
//! `cargo run --release --example pgd_vs_bcd -- [output_dir] [seeds]`

use spikebench::harness::{parse_seeds, run_experiment, ExperimentConfig};

fn main() -> spikebench::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::desk();
    cfg.output_dir = args.next().unwrap_or_else(|| "results/desk".into()).into();
    if let Some(seeds) = args.next() {
        cfg.seeds = parse_seeds(&seeds)?;
    }
    let report = run_experiment(&cfg)?;
    println!("seed  method  status            residual   found  outer  time[s]  jaccard  speedup");
    for r in &report.summary {
        println!(
            "{:>4}  {:<6}  {:<16}  {:>9.2e}  {:>2}->{:<2}  {:>5}  {:>7.3}  {:>7.3}  {}",
            r.seed,
            r.method,
            r.status,
            r.final_residual,
            r.init_spike_count,
            r.detected_spike_count,
            r.iterations,
            r.wall_time_seconds,
            r.jaccard,
            r.speedup.map_or("-".into(), |s| format!("{s:.2}")),
        );
    }
    if let Some(m) = report.median_time_reduction() {
        println!(
            "median wall-time reduction of BCD vs PGD: {:.1}%",
            100.0 * m
        );
    }
    println!("artifacts in {}", report.output_dir.display());
    Ok(())
}
