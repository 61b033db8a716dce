//! Recovery with random Fourier measurements in 2D, solved by PGD and by BCD.

use spikebench::bcd::{bcd_run, BcdConfig};
use spikebench::comp::{op_comp, CompConfig};
use spikebench::descent::{pgd, DescentConfig};
use spikebench::harness::{detections, generate_truth_with, match_and_score};
use spikebench::objective::Objective;
use spikebench::operators::{FourierOperator, FourierOperatorConfig};

fn main() -> spikebench::error::Result<()> {
    let op = FourierOperator::new(&FourierOperatorConfig::new(2, 150, 7))?;
    let eps = 0.25;
    let (truth, y) = generate_truth_with(&op, 4, eps, [1.0, 2.0], 3)?;
    let obj = Objective::new(&op, y)?;
    let init = op_comp(&obj, &CompConfig::new(vec![64, 64], 12))?;
    let descent = DescentConfig::for_operator(&op, eps);

    let runs = [
        ("pgd", pgd(&obj, &init, &descent)?),
        (
            "bcd",
            bcd_run(&obj, &init, &BcdConfig::new(descent.clone()))?,
        ),
    ];
    println!(
        "init: {} spikes for {} true spikes",
        init.len(),
        truth.len()
    );
    for (name, out) in runs {
        let found = detections(&out.train, 1e-2);
        let m = match_and_score(&truth, &found, eps / 3.0)?;
        println!(
            "{name}: {:?} after {} iterations, value {:.2e}, {} spikes, jaccard {:.2}",
            out.termination,
            out.iterations_run,
            out.final_value,
            found.len(),
            m.jaccard
        );
    }
    Ok(())
}
