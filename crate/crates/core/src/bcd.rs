//! Projected block coordinate descent.
//!
//! Each spike is one block. An outer iteration evaluates every block gradient once, keeps
//! the blocks whose gradient norm is within `threshold` of the largest, and runs the
//! projected descent on those spikes only, against the observation with the frozen spikes'
//! contribution removed. The inner descent stops early when a merge happens so the
//! selection is redone on the new spike count.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::descent::{
    projected_descent, DescentConfig, DescentOutcome, IterationRecord, Termination,
};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::spike::{Spike, SpikeTrain};

/// Largest block gradient norm treated as zero.
pub const STATIONARY_NORM: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcdConfig {
    /// Relative cutoff in `(0, 1]` on the block gradient norms.
    pub threshold: f64,
    pub outer_iterations: usize,
    /// Iteration budget of each inner descent.
    pub inner_iterations: usize,
    pub descent: DescentConfig,
    pub stop_residual: f64,
}

impl BcdConfig {
    pub fn new(descent: DescentConfig) -> Self {
        Self {
            threshold: 1e-3,
            outer_iterations: 5_000,
            inner_iterations: 50,
            stop_residual: descent.stop_residual,
            descent,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidConfig(
                "bcd threshold must lie in (0, 1]".into(),
            ));
        }
        if self.inner_iterations == 0 {
            return Err(Error::InvalidConfig(
                "bcd inner_iterations must be >= 1".into(),
            ));
        }
        if !(self.stop_residual > 0.0) {
            return Err(Error::InvalidConfig("bcd stop_residual must be > 0".into()));
        }
        self.descent.validate(dim)
    }
}

/// Active (`I`) and frozen (`J`) spike indices, both ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub active: Vec<usize>,
    pub frozen: Vec<usize>,
}

impl BlockPartition {
    pub fn len(&self) -> usize {
        self.active.len() + self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn active_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.active.len() as f64 / self.len() as f64
        }
    }
}

/// `I = {i : norms[i] >= threshold * max_j norms[j]}`, `J` its complement.
pub fn select_blocks(norms: &[f64], threshold: f64) -> BlockPartition {
    let max = norms.iter().copied().fold(0.0, f64::max);
    let cutoff = threshold * max;
    let (active, frozen) = (0..norms.len()).partition(|&i| norms[i] >= cutoff);
    BlockPartition { active, frozen }
}

/// Result of one selection / descent / recombination cycle.
#[derive(Debug, Clone)]
pub struct OuterStep {
    pub train: SpikeTrain,
    pub partition: BlockPartition,
    pub max_norm: f64,
    /// `None` when the step stopped at the stationarity check.
    pub inner: Option<DescentOutcome>,
    pub block_gradient_evals: usize,
}

/// One outer iteration from `train`; `step` seeds the inner line search.
pub fn bcd_step(
    obj: &Objective,
    train: &SpikeTrain,
    cfg: &BcdConfig,
    step: f64,
) -> Result<OuterStep> {
    let norms = obj.block_gradient_norms(train)?;
    let mut evals = norms.len();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let partition = select_blocks(&norms, cfg.threshold);
    if max_norm < STATIONARY_NORM {
        return Ok(OuterStep {
            train: train.clone(),
            partition,
            max_norm,
            inner: None,
            block_gradient_evals: evals,
        });
    }

    let active = train.select(&partition.active)?;
    let frozen = train.select(&partition.frozen)?;
    let partial = obj.observation().sub(&obj.operator().apply(&frozen)?);
    let inner_obj = obj.with_observation(partial)?;
    let inner_cfg = DescentConfig {
        step_init: step,
        stop_residual: cfg.stop_residual,
        ..cfg.descent.clone()
    };
    let inner = projected_descent(&inner_obj, &active, &inner_cfg, cfg.inner_iterations, true)?;
    evals += inner.block_gradient_evals;

    let train = recombine(train, &partition, &inner.train)?;
    Ok(OuterStep {
        train,
        partition,
        max_norm,
        inner: Some(inner),
        block_gradient_evals: evals,
    })
}

/// Puts the updated active spikes back into their slots. After a merge the survivors fill
/// the lowest active slots and the remaining active slots are dropped.
fn recombine(
    train: &SpikeTrain,
    partition: &BlockPartition,
    updated: &SpikeTrain,
) -> Result<SpikeTrain> {
    let mut slots: Vec<Option<Spike>> = train.spikes().iter().cloned().map(Some).collect();
    for (n, &i) in partition.active.iter().enumerate() {
        slots[i] = updated.spikes().get(n).cloned();
    }
    SpikeTrain::from_spikes(train.dim(), slots.into_iter().flatten().collect())
}

/// Runs outer iterations until the objective reaches `stop_residual`, the block gradients
/// vanish, the inner line search stalls, or `outer_iterations` is used up.
///
/// The trace has one row per outer iteration (row 0 is the initialization); `iterations_run`
/// counts outer iterations.
pub fn bcd_run(obj: &Objective, init: &SpikeTrain, cfg: &BcdConfig) -> Result<DescentOutcome> {
    if init.is_empty() {
        return Err(Error::Precondition(
            "bcd needs a nonempty initialization".into(),
        ));
    }
    cfg.validate(init.dim())?;
    let start = Instant::now();
    let mut train = init.clone();
    let mut value = obj.value(&train)?;
    let mut step = cfg.descent.step_init;
    let mut evals = 0;
    let mut outer = 0;
    let record = |iteration: usize, value: f64, count: usize, fraction: f64| IterationRecord {
        iteration,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        residual_norm_squared: value,
        spike_count: count,
        active_fraction: fraction,
    };
    let mut trace = vec![record(0, value, train.len(), 1.0)];

    let termination = loop {
        if value <= cfg.stop_residual {
            break Termination::Converged;
        }
        if outer >= cfg.outer_iterations {
            break Termination::BudgetExhausted;
        }
        if train.is_empty() {
            break Termination::Stationary;
        }
        let out = bcd_step(obj, &train, cfg, step)?;
        evals += out.block_gradient_evals;
        let Some(inner) = out.inner else {
            break Termination::Stationary;
        };
        outer += 1;
        step = inner.final_step;
        train = out.train;
        value = obj.value(&train)?;
        trace.push(record(
            outer,
            value,
            train.len(),
            out.partition.active_fraction(),
        ));
        if inner.termination == Termination::StepUnderflow && inner.iterations_run == 0 {
            break Termination::StepUnderflow;
        }
    };

    Ok(DescentOutcome {
        projected: train.len() < init.len(),
        train,
        iterations_run: outer,
        termination,
        final_value: value,
        final_step: step,
        block_gradient_evals: evals,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::pgd;
    use crate::operators::{
        FourierOperator, FourierOperatorConfig, MeasurementOperator, MultiPlanePsf,
        MultiPlanePsfConfig,
    };
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn select_blocks_examples() {
        let p = select_blocks(&[5.0, 0.004, 0.002], 1e-3);
        assert_eq!(p.active, vec![0]);
        assert_eq!(p.frozen, vec![1, 2]);
        let p = select_blocks(&[5.0, 0.005, 0.002], 1e-3);
        assert_eq!(p.active, vec![0, 1]);
        let p = select_blocks(&[1.0, 3.0, 3.0, 2.0], 1.0);
        assert_eq!(p.active, vec![1, 2]);
        let p = select_blocks(&[0.7; 5], 0.3);
        assert_eq!(p.active, vec![0, 1, 2, 3, 4]);
        let p = select_blocks(&[0.0, 0.0], 1e-3);
        assert_eq!(p.active, vec![0, 1]);
        assert!(p.frozen.is_empty());
    }

    proptest! {
        #[test]
        fn argmax_is_always_active(norms in proptest::collection::vec(0.0f64..10.0, 1..20),
                                   threshold in 1e-6f64..=1.0) {
            let p = select_blocks(&norms, threshold);
            let max = norms.iter().copied().fold(0.0, f64::max);
            let argmax = norms.iter().position(|&n| n == max).unwrap();
            prop_assert!(p.active.contains(&argmax));
            let mut all: Vec<usize> = p.active.iter().chain(&p.frozen).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..norms.len()).collect::<Vec<_>>());
        }
    }

    fn psf() -> MultiPlanePsf {
        MultiPlanePsf::new(&MultiPlanePsfConfig::desk_geometry()).unwrap()
    }

    fn random_train<R: Rng>(op: &dyn MeasurementOperator, k: usize, rng: &mut R) -> SpikeTrain {
        let spikes = (0..k)
            .map(|_| Spike::new(rng.random_range(-2.0..2.0), op.domain().sample(rng)))
            .collect();
        SpikeTrain::from_spikes(op.dim(), spikes).unwrap()
    }

    #[test]
    fn partial_observation_objective_is_consistent() {
        let op = psf();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let truth = random_train(&op, 6, &mut rng);
            let est = random_train(&op, 9, &mut rng);
            let obj = Objective::new(&op, op.apply(&truth).unwrap()).unwrap();
            let (active, frozen): (Vec<usize>, Vec<usize>) =
                (0..9).partition(|_| rng.random_bool(0.5));
            let partial = obj
                .observation()
                .sub(&op.apply(&est.select(&frozen).unwrap()).unwrap());
            let inner = obj.with_observation(partial).unwrap();
            let full = obj.value(&est).unwrap();
            let part = inner.value(&est.select(&active).unwrap()).unwrap();
            assert!((full - part).abs() <= 1e-12 * full);
        }
    }

    #[test]
    fn frozen_spikes_are_untouched() {
        let op = psf();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = random_train(&op, 4, &mut rng);
        let obj = Objective::new(&op, op.apply(&truth).unwrap()).unwrap();
        let mut init = truth.clone();
        // perturb a single spike so the others carry tiny gradients
        let s = &mut init.spikes_mut()[2];
        s.position[0] += 0.05;
        s.amplitude *= 1.1;
        let mut cfg = BcdConfig::new(DescentConfig::for_operator(&op, 1.6));
        cfg.threshold = 0.5;
        let out = bcd_step(&obj, &init, &cfg, cfg.descent.step_init).unwrap();
        assert!(!out.partition.frozen.is_empty());
        assert_eq!(out.train.len(), init.len());
        for &j in &out.partition.frozen {
            assert_eq!(out.train.spikes()[j], init.spikes()[j]);
        }
        assert!(obj.value(&out.train).unwrap() < obj.value(&init).unwrap());
    }

    #[test]
    fn exact_fit_returns_immediately() {
        let op = psf();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let truth = random_train(&op, 3, &mut rng);
        let obj = Objective::new(&op, op.apply(&truth).unwrap()).unwrap();
        let out = bcd_run(
            &obj,
            &truth,
            &BcdConfig::new(DescentConfig::for_operator(&op, 1.6)),
        )
        .unwrap();
        assert_eq!(out.iterations_run, 0);
        assert_eq!(out.termination, Termination::Converged);
        assert_eq!(out.train, truth);
    }

    #[test]
    fn single_spike_matches_pgd() {
        let op = FourierOperator::new(&FourierOperatorConfig::new(2, 100, 8)).unwrap();
        let truth = SpikeTrain::from_parts(2, &[1.5], &[vec![0.42, 0.61]]).unwrap();
        let init = SpikeTrain::from_parts(2, &[1.2], &[vec![0.45, 0.58]]).unwrap();
        let obj = Objective::new(&op, op.apply(&truth).unwrap()).unwrap();
        let dcfg = DescentConfig::for_operator(&op, 0.3);
        let a = pgd(&obj, &init, &dcfg).unwrap();
        let b = bcd_run(&obj, &init, &BcdConfig::new(dcfg)).unwrap();
        assert_eq!(a.termination, Termination::Converged);
        assert_eq!(b.termination, Termination::Converged);
        assert!(b.trace.iter().skip(1).all(|r| r.active_fraction == 1.0));
        let (sa, sb) = (&a.train.spikes()[0], &b.train.spikes()[0]);
        assert!((sa.amplitude - sb.amplitude).abs() < 1e-4);
        assert!(crate::spike::distance(&sa.position, &sb.position) < 1e-4);
    }

    #[test]
    fn merges_shrink_the_train_and_keep_order() {
        let op = psf();
        let truth =
            SpikeTrain::from_parts(3, &[1.5, 1.2], &[vec![1.5, 1.5, 0.3], vec![4.5, 4.0, 0.5]])
                .unwrap();
        let init = SpikeTrain::from_parts(
            3,
            &[0.8, 1.0, 0.7],
            &[
                vec![1.45, 1.5, 0.3],
                vec![4.5, 4.1, 0.5],
                vec![1.55, 1.55, 0.3],
            ],
        )
        .unwrap();
        let obj = Objective::new(&op, op.apply(&truth).unwrap()).unwrap();
        let out = bcd_run(
            &obj,
            &init,
            &BcdConfig::new(DescentConfig::for_operator(&op, 1.6)),
        )
        .unwrap();
        assert_eq!(out.termination, Termination::Converged);
        assert_eq!(out.train.len(), 2);
        assert!(out.projected);
        for (e, t) in out.train.iter().zip(&truth) {
            assert!(crate::spike::distance(&e.position, &t.position) < 1e-3);
        }
        for w in out.trace.windows(2) {
            assert!(w[1].wall_time_seconds >= w[0].wall_time_seconds);
            assert!(w[1].spike_count <= w[0].spike_count);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let op = psf();
        let obj = Objective::new(&op, op.apply(&SpikeTrain::new(3)).unwrap()).unwrap();
        let cfg = BcdConfig::new(DescentConfig::for_operator(&op, 1.6));
        assert!(bcd_run(&obj, &SpikeTrain::new(3), &cfg).is_err());
        let one = SpikeTrain::from_parts(3, &[1.0], &[vec![1.0, 1.0, 0.2]]).unwrap();
        for bad in [0.0, 1.5] {
            let cfg = BcdConfig {
                threshold: bad,
                ..cfg.clone()
            };
            assert!(bcd_run(&obj, &one, &cfg).is_err());
        }
        let cfg = BcdConfig {
            inner_iterations: 0,
            ..cfg
        };
        assert!(bcd_run(&obj, &one, &cfg).is_err());
    }
}
