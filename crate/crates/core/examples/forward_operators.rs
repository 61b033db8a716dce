//! Builds both measurement operators, evaluates atoms and their derivatives, and shows the
//! separable PSF structure on a single spike.

use spikebench::operators::{
    FourierOperator, FourierOperatorConfig, MeasurementOperator, MultiPlanePsf, MultiPlanePsfConfig,
};
use spikebench::spike::SpikeTrain;

fn main() -> spikebench::error::Result<()> {
    let fourier = FourierOperator::new(&FourierOperatorConfig::new(2, 256, 7))?;
    let atom = fourier.apply_dirac(&[0.3, 0.7])?;
    println!(
        "fourier: m = {}, frequency scale {:.3}, ||A delta|| = {:.6}",
        fourier.len(),
        fourier.frequency_scale(),
        atom.norm_sqr().sqrt()
    );

    let psf = MultiPlanePsf::new(&MultiPlanePsfConfig::desk_geometry())?;
    println!(
        "psf: m = {} ({} planes), sigma = {:.3}, decays = {:?}",
        psf.len(),
        psf.plane_decays().len(),
        psf.sigma(),
        psf.plane_decays()
    );
    for z in [0.0, 0.4, 0.8] {
        let atom = psf.apply_dirac(&[3.2, 3.2, z])?;
        let plane_energy: Vec<String> = (0..4)
            .map(|p| {
                let start = p * 32 * 32;
                let e: f64 = atom.as_slice()[start..start + 32 * 32]
                    .iter()
                    .map(|v| v.norm_sqr())
                    .sum();
                format!("{e:.3}")
            })
            .collect();
        println!(
            "  depth {z:.1}: energy per plane [{}]",
            plane_energy.join(", ")
        );
    }

    let jac = psf.apply_dirac_jacobian(&[3.0, 3.3, 0.2])?;
    let norms: Vec<String> = jac
        .iter()
        .map(|d| format!("{:.3}", d.norm_sqr().sqrt()))
        .collect();
    println!(
        "  derivative norms (x, y, z) at (3.0, 3.3, 0.2): [{}]",
        norms.join(", ")
    );

    let train =
        SpikeTrain::from_parts(3, &[1.5, -0.7], &[vec![1.0, 1.0, 0.1], vec![5.0, 4.0, 0.6]])?;
    let y = psf.apply(&train)?;
    println!("  two-spike observation energy {:.4}", y.norm_sqr());
    Ok(())
}
