//! Greedy OP-COMP initialization on a desk-scale instance: how many spikes it places, how
//! the data fit decreases, and how close the placed spikes are to the truth.

use spikebench::comp::op_comp_traced;
use spikebench::harness::{generate_truth, ExperimentConfig};
use spikebench::objective::Objective;
use spikebench::spike::distance;

fn main() -> spikebench::error::Result<()> {
    let cfg = ExperimentConfig::desk();
    let op = cfg.operator.build()?;
    let (truth, y) = generate_truth(&cfg, 0)?;
    let obj = Objective::new(op.as_ref(), y)?;
    let comp_cfg = cfg.comp_config(op.as_ref());
    let out = op_comp_traced(&obj, &comp_cfg)?;

    println!(
        "grid {:?}, cap {} spikes: placed {} for {} true spikes",
        comp_cfg.grid_resolution,
        comp_cfg.max_spikes,
        out.train.len(),
        truth.len()
    );
    for (n, v) in out.values.iter().enumerate().step_by(5) {
        println!("  after {n:>2} atoms: ||A x - y||^2 = {v:.3e}");
    }
    for t in &truth {
        let nearest = out
            .train
            .iter()
            .map(|s| distance(&s.position, &t.position))
            .fold(f64::INFINITY, f64::min);
        println!(
            "  truth {:?}: nearest init spike at {nearest:.3}",
            t.position
                .iter()
                .map(|x| format!("{x:.2}"))
                .collect::<Vec<_>>()
        );
    }
    if out.ill_conditioned {
        println!("warning: a refit was numerically rank deficient");
    }
    Ok(())
}
