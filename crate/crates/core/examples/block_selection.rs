//! One BCD outer iteration by hand: block gradient norms, the thresholded selection, and
//! the partial observation the active spikes are fitted against.

use spikebench::bcd::{bcd_step, select_blocks, BcdConfig};
use spikebench::comp::op_comp;
use spikebench::harness::{generate_truth, ExperimentConfig};
use spikebench::objective::Objective;

fn main() -> spikebench::error::Result<()> {
    let cfg = ExperimentConfig::desk();
    let op = cfg.operator.build()?;
    let (_, y) = generate_truth(&cfg, 2)?;
    let obj = Objective::new(op.as_ref(), y)?;
    let mut train = op_comp(&obj, &cfg.comp_config(op.as_ref()))?;
    let bcd: BcdConfig = cfg.bcd_config(op.as_ref());

    let mut step = bcd.descent.step_init;
    for outer in 1..=12 {
        let norms = obj.block_gradient_norms(&train)?;
        let part = select_blocks(&norms, bcd.threshold);
        let out = bcd_step(&obj, &train, &bcd, step)?;
        let Some(inner) = out.inner else { break };
        step = inner.final_step;
        train = out.train;
        println!(
            "outer {outer:>2}: |I| = {:>2} of {:>2}, inner iterations {:>2}, value {:.3e}",
            part.active.len(),
            part.len(),
            inner.iterations_run,
            obj.value(&train)?
        );
        if obj.value(&train)? <= bcd.stop_residual {
            break;
        }
    }
    Ok(())
}
