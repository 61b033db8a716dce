//! Numerical checks of the dipole decomposition bounds behind block selection.
//!
//! A well-initialized estimate `x = sum b_i delta_{s_i}` of a separated truth
//! `x0 = sum a_i delta_{t_i}` (each `s_i` within `epsilon / 3` of `t_i`) splits the residual
//! into dipoles `nu_i = a_i delta_{t_i} - b_i delta_{s_i}`. If the operator is coherent with
//! constant `mu` on separated dipoles, the data fit is close to the sum of the dipole energies
//! and each position gradient is close to the gradient of its own dipole energy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::objective::Objective;
use crate::operators::{MeasurementOperator, MeasurementVector};
use crate::spike::{
    dipoles_are_separated, distance, satisfies_separation, Dipole, SeparationModel, SpikeTrain,
};

/// Absolute slack when comparing the two sides of a bound.
pub const BOUND_TOLERANCE: f64 = 1e-10;

/// Sampled dipoles with energy below this are redrawn.
pub const MIN_DIPOLE_ENERGY: f64 = 1e-8;

/// Rejection attempts per sampled pair before giving up.
pub const MAX_SAMPLING_ATTEMPTS: usize = 1_000_000;

/// `|Im <A nu1, A nu2>|` above this fraction of `||A nu1|| ||A nu2||` is counted as
/// non-negligible.
const IMAGINARY_FLAG: f64 = 1e-8;

/// `||A nu||^2`.
pub fn dipole_energy(op: &dyn MeasurementOperator, n: &Dipole) -> Result<f64> {
    Ok(op.apply_dipole(n)?.norm_sqr())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceEstimate {
    /// Largest sampled `Re <A nu1, A nu2> / (||A nu1||^2 ||A nu2||^2)`, floored at 0.
    pub mu: f64,
    pub trials: usize,
    pub epsilon: f64,
    /// Sampled pairs whose inner product had a non-negligible imaginary part.
    pub imaginary_flagged: usize,
}

/// Uniform offset in the closed ball of radius `radius`.
fn ball_offset<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let norm = dir
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    dir.iter().map(|x| x * r / norm).collect()
}

fn sample_dipole<R: Rng + ?Sized>(
    op: &dyn MeasurementOperator,
    rng: &mut R,
    radius: f64,
) -> Result<Dipole> {
    let t = op.domain().sample(rng);
    let s: Vec<f64> = t
        .iter()
        .zip(ball_offset(rng, op.dim(), radius))
        .map(|(a, b)| a + b)
        .collect();
    let a = rng.random_range(-2.0..=2.0);
    let b = rng.random_range(-2.0..=2.0);
    // the offset can overshoot the radius by an ulp
    Dipole::new(a, t, b, s, radius * (1.0 + 1e-12))
}

/// Monte-Carlo estimate of the coherence constant over pairs of `epsilon / 3`-dipoles
/// whose supports are `epsilon / 3`-separated.
///
/// The same seed consumes the random stream identically, so more trials never lower `mu`.
pub fn estimate_mu(
    op: &dyn MeasurementOperator,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<CoherenceEstimate> {
    if trials == 0 {
        return Err(Error::Precondition("estimate_mu needs trials >= 1".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Precondition("epsilon must be > 0".into()));
    }
    let radius = epsilon / 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mu = 0.0f64;
    let mut imaginary_flagged = 0;
    for _ in 0..trials {
        let mut attempts = 0;
        let (v1, e1, v2, e2) = loop {
            attempts += 1;
            if attempts > MAX_SAMPLING_ATTEMPTS {
                return Err(Error::DomainTooSmall {
                    attempts: MAX_SAMPLING_ATTEMPTS,
                });
            }
            let n1 = sample_dipole(op, &mut rng, radius)?;
            let n2 = sample_dipole(op, &mut rng, radius)?;
            if !dipoles_are_separated(&n1, &n2, radius) {
                continue;
            }
            let v1 = op.apply_dipole(&n1)?;
            let v2 = op.apply_dipole(&n2)?;
            let (e1, e2) = (v1.norm_sqr(), v2.norm_sqr());
            if e1 >= MIN_DIPOLE_ENERGY && e2 >= MIN_DIPOLE_ENERGY {
                break (v1, e1, v2, e2);
            }
        };
        let ip = v1.inner(&v2);
        if ip.im.abs() > IMAGINARY_FLAG * (e1 * e2).sqrt() {
            imaginary_flagged += 1;
        }
        mu = mu.max(ip.re / (e1 * e2));
    }
    Ok(CoherenceEstimate {
        mu,
        trials,
        epsilon,
        imaginary_flagged,
    })
}

/// Which norm of the differentiated dipole enters the gradient bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientBoundForm {
    /// `||d_{i,r} A delta_{s_i}||^2`.
    #[default]
    Proof,
    /// `||d_{i,r} A nu_i||^2 = b_i^2 ||d_{i,r} A delta_{s_i}||^2`.
    Statement,
}

/// Both sides of one bound evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub mu: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: Option<u64>,
    pub holds: bool,
}

impl BoundReport {
    fn new(lhs: f64, rhs: f64, mu: f64, k: usize) -> Self {
        Self {
            lhs,
            rhs,
            mu,
            k,
            seed: None,
            holds: lhs <= rhs + BOUND_TOLERANCE,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// A separated truth paired index-by-index with a well-initialized estimate.
#[derive(Debug, Clone)]
pub struct LemmaInstance<'a> {
    op: &'a dyn MeasurementOperator,
    truth: &'a SpikeTrain,
    init: &'a SpikeTrain,
    dipoles: Vec<MeasurementVector>,
    energies: Vec<f64>,
}

impl<'a> LemmaInstance<'a> {
    /// Fails unless `truth` is `epsilon`-separated and `||t_i - s_i|| < epsilon / 3` for all `i`.
    pub fn new(
        op: &'a dyn MeasurementOperator,
        truth: &'a SpikeTrain,
        init: &'a SpikeTrain,
        separation: &SeparationModel,
    ) -> Result<Self> {
        check_dim(op.dim(), truth.dim())?;
        check_dim(op.dim(), init.dim())?;
        if truth.len() != init.len() || truth.is_empty() {
            return Err(Error::Precondition(format!(
                "truth and init must pair one-to-one (got {} and {})",
                truth.len(),
                init.len()
            )));
        }
        if !satisfies_separation(truth, separation) {
            return Err(Error::Precondition("truth is not epsilon-separated".into()));
        }
        let radius = separation.epsilon() / 3.0;
        for (i, (t, s)) in truth.iter().zip(init).enumerate() {
            if distance(&t.position, &s.position) >= radius {
                return Err(Error::Precondition(format!(
                    "spike {i} is not within epsilon/3 of its true position"
                )));
            }
        }
        let dipoles = truth
            .iter()
            .zip(init)
            .map(|(t, s)| {
                let mut v = MeasurementVector::zeros(op.len());
                op.accumulate_dirac(&t.position, t.amplitude, &mut v)?;
                op.accumulate_dirac(&s.position, -s.amplitude, &mut v)?;
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        let energies = dipoles.iter().map(MeasurementVector::norm_sqr).collect();
        Ok(Self {
            op,
            truth,
            init,
            dipoles,
            energies,
        })
    }

    pub fn k(&self) -> usize {
        self.truth.len()
    }

    /// `||A nu_i||^2` for every dipole.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Smallest `mu` for which the coherence assumption holds on this instance: the largest
    /// `|Re <u, A nu_j>| / (||u||^2 ||A nu_j||^2)` over `u = A nu_i` and over the
    /// derivative atoms `u = d_r A delta_{s_i}`, for all `i != j`.
    pub fn instance_mu(&self) -> Result<f64> {
        let mut mu = 0.0f64;
        let mut update = |u: &MeasurementVector, eu: f64, j: usize| {
            let ej = self.energies[j];
            if eu > 0.0 && ej > 0.0 {
                mu = mu.max(u.inner(&self.dipoles[j]).re.abs() / (eu * ej));
            }
        };
        for i in 0..self.k() {
            let jac = self
                .op
                .apply_dirac_jacobian(&self.init.spikes()[i].position)?;
            for j in (0..self.k()).filter(|&j| j != i) {
                update(&self.dipoles[i], self.energies[i], j);
                for g in &jac {
                    update(g, g.norm_sqr(), j);
                }
            }
        }
        Ok(mu)
    }

    /// `||A(truth) - A(init)||^2 <= sum E_i + mu sum_{i != j} E_i E_j`.
    pub fn energy_bound(&self, mu: f64) -> Result<BoundReport> {
        let lhs = self
            .op
            .apply(self.truth)?
            .sub(&self.op.apply(self.init)?)
            .norm_sqr();
        let total: f64 = self.energies.iter().sum();
        let mut cross = 0.0;
        for (i, ei) in self.energies.iter().enumerate() {
            for (j, ej) in self.energies.iter().enumerate() {
                if i != j {
                    cross += ei * ej;
                }
            }
        }
        Ok(BoundReport::new(lhs, total + mu * cross, mu, self.k()))
    }

    /// `|d_{i,r} g - d_{i,r} ||A nu_i||^2| <= 2 |b_i| (K - 1) mu N max_j E_j`, differentiating
    /// with respect to coordinate `r` of the estimated position `s_i`; `N` depends on `form`.
    pub fn gradient_bound(
        &self,
        mu: f64,
        i: usize,
        r: usize,
        form: GradientBoundForm,
    ) -> Result<BoundReport> {
        let k = self.k();
        if i >= k {
            return Err(Error::IndexOutOfRange { index: i, len: k });
        }
        if r >= self.op.dim() {
            return Err(Error::IndexOutOfRange {
                index: r,
                len: self.op.dim(),
            });
        }
        let full = Objective::new(self.op, self.op.apply(self.truth)?)?;
        let d_full = full.block_gradient(self.init, i)?.position_grad[r];

        let (t, s) = (&self.truth.spikes()[i], &self.init.spikes()[i]);
        let pair = SpikeTrain::from_parts(
            self.op.dim(),
            &[t.amplitude, -s.amplitude],
            &[t.position.clone(), s.position.clone()],
        )?;
        let own = Objective::new(self.op, MeasurementVector::zeros(self.op.len()))?;
        let d_own = own.block_gradient(&pair, 1)?.position_grad[r];

        let b = s.amplitude.abs();
        let g = self.op.apply_dirac_jacobian(&s.position)?[r].norm_sqr();
        let n = match form {
            GradientBoundForm::Proof => g,
            GradientBoundForm::Statement => b * b * g,
        };
        let max_energy = self.energies.iter().copied().fold(0.0, f64::max);
        let rhs = 2.0 * b * (k - 1) as f64 * mu * n * max_energy;
        Ok(BoundReport::new((d_full - d_own).abs(), rhs, mu, k))
    }
}

/// Energy bound for `truth` against the well-initialized `init`.
pub fn check_energy_bound(
    op: &dyn MeasurementOperator,
    truth: &SpikeTrain,
    init: &SpikeTrain,
    mu: f64,
    separation: &SeparationModel,
) -> Result<BoundReport> {
    LemmaInstance::new(op, truth, init, separation)?.energy_bound(mu)
}

/// Gradient bound for coordinate `r` of spike `i`, in the proof's form.
pub fn check_gradient_bound(
    op: &dyn MeasurementOperator,
    truth: &SpikeTrain,
    init: &SpikeTrain,
    mu: f64,
    separation: &SeparationModel,
    i: usize,
    r: usize,
) -> Result<BoundReport> {
    LemmaInstance::new(op, truth, init, separation)?.gradient_bound(
        mu,
        i,
        r,
        GradientBoundForm::Proof,
    )
}

/// Draws a random well-initialized instance: `k` truth spikes with amplitudes in `[1, 2]`,
/// pairwise more than `epsilon` apart, each perturbed by less than `epsilon / 3` in position
/// and by up to 50% in amplitude.
pub fn random_instance<R: Rng + ?Sized>(
    op: &dyn MeasurementOperator,
    k: usize,
    separation: &SeparationModel,
    rng: &mut R,
) -> Result<(SpikeTrain, SpikeTrain)> {
    let eps = separation.epsilon();
    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut attempts = 0;
    while positions.len() < k {
        attempts += 1;
        if attempts > MAX_SAMPLING_ATTEMPTS {
            return Err(Error::PackingInfeasible {
                k,
                epsilon: eps,
                attempts: MAX_SAMPLING_ATTEMPTS,
            });
        }
        let p = op.domain().sample(rng);
        if positions.iter().all(|q| distance(q, &p) > eps) {
            positions.push(p);
        }
    }
    let amplitudes: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..=2.0)).collect();
    let truth = SpikeTrain::from_parts(op.dim(), &amplitudes, &positions)?;
    let radius = 0.999 * eps / 3.0;
    let init_positions: Vec<Vec<f64>> = positions
        .iter()
        .map(|p| {
            p.iter()
                .zip(ball_offset(rng, op.dim(), radius))
                .map(|(a, b)| a + b)
                .collect()
        })
        .collect();
    let init_amplitudes: Vec<f64> = amplitudes
        .iter()
        .map(|a| a * rng.random_range(0.5..=1.5))
        .collect();
    let init = SpikeTrain::from_parts(op.dim(), &init_amplitudes, &init_positions)?;
    Ok((truth, init))
}

/// Largest deviation between the analytic block gradients and central finite differences,
/// relative to the largest finite-difference entry. Position steps are `rel_step` times the
/// operator's length scales; amplitude steps are `rel_step`.
pub fn finite_difference_error(obj: &Objective, train: &SpikeTrain, rel_step: f64) -> Result<f64> {
    let analytic = obj.full_gradient(train)?;
    let scales = obj.operator().length_scales();
    let mut spikes = train.spikes().to_vec();
    let mut value_at = |i: usize, coord: usize, delta: f64| -> Result<f64> {
        let s = &mut spikes[i];
        let saved = s.clone();
        if coord == 0 {
            s.amplitude += delta;
        } else {
            s.position[coord - 1] += delta;
        }
        let v = obj.value(&SpikeTrain::from_spikes(train.dim(), spikes.clone())?);
        spikes[i] = saved;
        v
    };
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for (i, g) in analytic.iter().enumerate() {
        for coord in 0..=train.dim() {
            let h = if coord == 0 {
                rel_step
            } else {
                rel_step * scales[coord - 1]
            };
            let fd = (value_at(i, coord, h)? - value_at(i, coord, -h)?) / (2.0 * h);
            let exact = if coord == 0 {
                g.amplitude_grad
            } else {
                g.position_grad[coord - 1]
            };
            err = err.max((exact - fd).abs());
            scale = scale.max(fd.abs());
        }
    }
    Ok(err / scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{
        FourierOperator, FourierOperatorConfig, MultiPlanePsf, MultiPlanePsfConfig,
    };
    use crate::spike::Spike;
    use num_complex::Complex64;

    fn fourier(dim: usize) -> FourierOperator {
        FourierOperator::new(&FourierOperatorConfig::new(dim, 200, 5)).unwrap()
    }

    fn psf() -> MultiPlanePsf {
        MultiPlanePsf::new(&MultiPlanePsfConfig::desk_geometry()).unwrap()
    }

    #[test]
    fn dipole_energy_examples() {
        let op = fourier(2);
        let cancelled = Dipole::new(1.3, vec![0.4, 0.4], 1.3, vec![0.4, 0.4], 0.1).unwrap();
        assert_eq!(dipole_energy(&op, &cancelled).unwrap(), 0.0);
        let lone = Dipole::new(1.7, vec![0.2, 0.9], 0.0, vec![0.21, 0.9], 0.1).unwrap();
        assert!((dipole_energy(&op, &lone).unwrap() - 1.7 * 1.7).abs() < 1e-12);

        // scalar recomputation straight from the atom entries
        let n = Dipole::new(0.8, vec![0.3, 0.6], -1.1, vec![0.33, 0.58], 0.1).unwrap();
        let at = op.apply_dirac(&n.t).unwrap();
        let as_ = op.apply_dirac(&n.s).unwrap();
        let mut e = 0.0;
        for j in 0..op.len() {
            let z: Complex64 = at[j] * n.a - as_[j] * n.b;
            e += z.re * z.re + z.im * z.im;
        }
        assert!((dipole_energy(&op, &n).unwrap() - e).abs() < 1e-12 * e);

        // same as the objective of the 2-spike train against a zero observation
        let obj = Objective::new(&op, MeasurementVector::zeros(op.len())).unwrap();
        assert!((obj.value(&n.to_train()).unwrap() - e).abs() < 1e-12 * e);
    }

    #[test]
    fn estimate_mu_is_monotone_in_trials() {
        let op = fourier(2);
        let mut last = 0.0;
        for trials in [1, 5, 20, 80] {
            let est = estimate_mu(&op, 0.3, trials, 9).unwrap();
            assert!(est.mu >= last);
            assert_eq!(est.trials, trials);
            last = est.mu;
        }
        assert!(estimate_mu(&op, 0.3, 0, 9).is_err());
    }

    #[test]
    fn estimate_mu_flags_complex_inner_products_only_for_complex_atoms() {
        assert!(
            estimate_mu(&fourier(2), 0.3, 50, 1)
                .unwrap()
                .imaginary_flagged
                > 0
        );
        assert_eq!(
            estimate_mu(&psf(), 1.6, 50, 1).unwrap().imaginary_flagged,
            0
        );
    }

    #[test]
    fn estimate_mu_small_for_far_psf_supports() {
        let op =
            MultiPlanePsf::new(&MultiPlanePsfConfig::new(4, 64, 64, [12.8, 12.8, 0.8])).unwrap();
        let sigma = op.sigma();
        let est = estimate_mu(&op, 18.0 * sigma, 500, 3).unwrap();
        assert!(est.mu < 1e-3, "mu = {}", est.mu);
    }

    #[test]
    fn estimate_mu_reports_small_domain() {
        let op = fourier(1);
        // no two 0.5-separated supports fit in the unit interval with dipole spread
        let err = estimate_mu(&op, 30.0, 1, 0).unwrap_err();
        assert!(matches!(err, Error::DomainTooSmall { .. }));
    }

    fn train(dim: usize, spikes: &[(f64, Vec<f64>)]) -> SpikeTrain {
        SpikeTrain::from_spikes(
            dim,
            spikes
                .iter()
                .map(|(a, p)| Spike::new(*a, p.clone()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_init_gives_zero_sides() {
        let op = psf();
        let sep = SeparationModel::new(1.6, 10).unwrap();
        let truth = train(3, &[(1.2, vec![1.0, 1.0, 0.2]), (1.5, vec![4.0, 4.5, 0.6])]);
        let rep = check_energy_bound(&op, &truth, &truth, 0.5, &sep).unwrap();
        assert_eq!((rep.lhs, rep.rhs, rep.holds), (0.0, 0.0, true));
        let rep = check_gradient_bound(&op, &truth, &truth, 0.5, &sep, 1, 2).unwrap();
        assert!(rep.lhs < 1e-14, "{}", rep.lhs);
        assert!(rep.holds);
    }

    #[test]
    fn single_dipole_is_tight() {
        let op = psf();
        let sep = SeparationModel::new(1.6, 10).unwrap();
        let truth = train(3, &[(1.2, vec![3.0, 3.0, 0.4])]);
        let init = train(3, &[(1.0, vec![3.2, 2.9, 0.35])]);
        let rep = check_energy_bound(&op, &truth, &init, 7.0, &sep).unwrap();
        assert!((rep.lhs - rep.rhs).abs() <= 1e-12 * rep.rhs);
        for r in 0..3 {
            let rep = check_gradient_bound(&op, &truth, &init, 7.0, &sep, 0, r).unwrap();
            assert!(rep.lhs < 1e-12);
            assert!(rep.holds);
        }
    }

    #[test]
    fn only_dipole_i_active_gives_zero_gradient_gap() {
        let op = psf();
        let sep = SeparationModel::new(1.6, 10).unwrap();
        let truth = train(
            3,
            &[
                (1.2, vec![1.0, 1.0, 0.2]),
                (1.5, vec![4.0, 4.5, 0.6]),
                (1.1, vec![5.5, 1.2, 0.1]),
            ],
        );
        let mut init = truth.clone();
        init.spikes_mut()[1] = Spike::new(1.3, vec![4.1, 4.4, 0.5]);
        let rep = check_gradient_bound(&op, &truth, &init, 0.0, &sep, 1, 0).unwrap();
        assert!(rep.lhs < 1e-12);
    }

    #[test]
    fn precondition_violations() {
        let op = psf();
        let sep = SeparationModel::new(1.6, 10).unwrap();
        let truth = train(3, &[(1.2, vec![1.0, 1.0, 0.2]), (1.5, vec![4.0, 4.5, 0.6])]);
        let far = train(3, &[(1.2, vec![1.6, 1.0, 0.2]), (1.5, vec![4.0, 4.5, 0.6])]);
        let short = train(3, &[(1.2, vec![1.0, 1.0, 0.2])]);
        assert!(matches!(
            check_energy_bound(&op, &truth, &far, 0.1, &sep),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            check_energy_bound(&op, &truth, &short, 0.1, &sep),
            Err(Error::Precondition(_))
        ));
        assert!(check_gradient_bound(&op, &truth, &truth, 0.1, &sep, 2, 0).is_err());
        assert!(check_gradient_bound(&op, &truth, &truth, 0.1, &sep, 0, 3).is_err());
    }

    #[test]
    fn bounds_hold_with_instance_mu() {
        let ops: Vec<Box<dyn MeasurementOperator>> = vec![Box::new(psf()), Box::new(fourier(2))];
        let seps = [1.6, 0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for (op, eps) in ops.iter().zip(seps) {
            let sep = SeparationModel::new(eps, 3).unwrap();
            for k in 1..=3 {
                for _ in 0..5 {
                    let (truth, init) = random_instance(op.as_ref(), k, &sep, &mut rng).unwrap();
                    let inst = LemmaInstance::new(op.as_ref(), &truth, &init, &sep).unwrap();
                    let mu = inst.instance_mu().unwrap();
                    assert!(inst.energy_bound(mu).unwrap().holds);
                    for i in 0..k {
                        for r in 0..op.dim() {
                            let rep = inst
                                .gradient_bound(mu, i, r, GradientBoundForm::Proof)
                                .unwrap();
                            assert!(rep.holds, "{rep:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn statement_form_scales_by_amplitude_squared() {
        let op = psf();
        let sep = SeparationModel::new(1.6, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (truth, init) = random_instance(&op, 3, &sep, &mut rng).unwrap();
        let inst = LemmaInstance::new(&op, &truth, &init, &sep).unwrap();
        let p = inst
            .gradient_bound(0.2, 1, 0, GradientBoundForm::Proof)
            .unwrap();
        let s = inst
            .gradient_bound(0.2, 1, 0, GradientBoundForm::Statement)
            .unwrap();
        let b = init.spikes()[1].amplitude;
        assert!((s.rhs - b * b * p.rhs).abs() <= 1e-12 * s.rhs);
        assert_eq!(p.lhs, s.lhs);
    }

    #[test]
    fn finite_differences_agree_with_block_gradients() {
        let op = psf();
        let sep = SeparationModel::new(1.6, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (truth, init) = random_instance(&op, 4, &sep, &mut rng).unwrap();
        let obj = Objective::new(&op, op.apply(&truth).unwrap()).unwrap();
        assert!(finite_difference_error(&obj, &init, 1e-6).unwrap() < 1e-6);
    }

    #[test]
    fn report_serializes_with_capital_k() {
        let rep = BoundReport::new(1.0, 2.0, 0.1, 3).with_seed(5);
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["K"], 3);
        assert_eq!(json["seed"], 5);
        assert_eq!(json["holds"], true);
    }
}
