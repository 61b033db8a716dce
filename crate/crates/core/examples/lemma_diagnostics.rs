//! Dipole energies, a sampled coherence constant and both dipole bounds on one random
//! well-initialized instance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spikebench::diagnostics::{estimate_mu, random_instance, GradientBoundForm, LemmaInstance};
use spikebench::operators::{MultiPlanePsf, MultiPlanePsfConfig};
use spikebench::spike::SeparationModel;

fn main() -> spikebench::error::Result<()> {
    let op = MultiPlanePsf::new(&MultiPlanePsfConfig::desk_geometry())?;
    let sep = SeparationModel::new(1.6, 3)?;
    let sampled = estimate_mu(&op, sep.epsilon(), 2000, 1)?;
    println!(
        "sampled mu over {} pairs: {:.4e}",
        sampled.trials, sampled.mu
    );

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (truth, init) = random_instance(&op, 3, &sep, &mut rng)?;
    let inst = LemmaInstance::new(&op, &truth, &init, &sep)?;
    let exact = inst.instance_mu()?;
    println!("dipole energies {:?}", inst.energies());
    println!("instance mu {exact:.4e}");

    for (label, mu) in [("instance", exact), ("sampled", sampled.mu)] {
        let e = inst.energy_bound(mu)?;
        println!(
            "{label:>8} mu: energy bound {:.4e} <= {:.4e} ({})",
            e.lhs, e.rhs, e.holds
        );
    }
    for i in 0..3 {
        let proof = inst.gradient_bound(exact, i, 0, GradientBoundForm::Proof)?;
        let stmt = inst.gradient_bound(exact, i, 0, GradientBoundForm::Statement)?;
        println!(
            "spike {i}, x: gap {:.3e}, bound {:.3e} (derivative atom) / {:.3e} (derivative dipole)",
            proof.lhs, proof.rhs, stmt.rhs
        );
    }
    println!(
        "{}",
        serde_json::to_string(&inst.energy_bound(exact)?.with_seed(11))?
    );
    Ok(())
}
