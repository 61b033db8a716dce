//! Projected descent shared by the full (PGD) and block (BCD) solvers.
//!
//! The update rule is FISTA with function-value restart and Armijo backtracking, run on
//! all parameters of a spike train. After every accepted step the train is projected by
//! merging spikes closer than `merge_radius`, which is how the spike count shrinks from an
//! over-parametrized initialization down to the model order.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::operators::MeasurementOperator;
use crate::spike::{distance, Spike, SpikeTrain};

/// Relative size of `a_i + a_j` below which merging two spikes deletes both.
pub const CANCELLATION_TOLERANCE: f64 = 1e-10;

/// Consecutive backtracking reductions before declaring step underflow.
pub const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    pub max_iterations: usize,
    /// Initial step, in the rescaled parameter space.
    pub step_init: f64,
    pub backtrack_factor: f64,
    /// Armijo constant `c` in `f(x - s g) <= f(x) - c s |g|^2`.
    pub sufficient_decrease: f64,
    pub merge_radius: f64,
    pub stop_residual: f64,
    /// Per-axis length unit; position coordinate `r` is optimized as `t_r / scale_r`.
    pub position_step_scale: Vec<f64>,
    /// Factor applied to the previous accepted step before each line search (>= 1).
    #[serde(default = "default_step_growth")]
    pub step_growth: f64,
}

fn default_step_growth() -> f64 {
    1.25
}

impl DescentConfig {
    /// Defaults for an operator and separation `epsilon`: merge radius `epsilon / 3`,
    /// step scales from the operator's natural length scales, residual target `2e-8`.
    pub fn for_operator(op: &dyn MeasurementOperator, epsilon: f64) -> Self {
        Self {
            max_iterations: 20_000,
            step_init: 0.5,
            backtrack_factor: 0.5,
            sufficient_decrease: 1e-4,
            merge_radius: epsilon / 3.0,
            stop_residual: 2e-8,
            position_step_scale: op.length_scales(),
            step_growth: default_step_growth(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.step_init > 0.0) {
            return bad("step_init must be > 0");
        }
        if !(self.sufficient_decrease > 0.0) {
            return bad("sufficient_decrease must be > 0");
        }
        if !(self.merge_radius > 0.0) {
            return bad("merge_radius must be > 0");
        }
        if !(self.stop_residual > 0.0) {
            return bad("stop_residual must be > 0");
        }
        if !(self.step_growth >= 1.0) {
            return bad("step_growth must be >= 1");
        }
        if self.position_step_scale.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.position_step_scale.len(),
            });
        }
        if self.position_step_scale.iter().any(|s| !(*s > 0.0)) {
            return bad("position_step_scale entries must be > 0");
        }
        Ok(())
    }
}

/// One row of an optimization trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub wall_time_seconds: f64,
    pub residual_norm_squared: f64,
    pub spike_count: usize,
    /// Fraction of blocks whose gradients the iteration computed.
    pub active_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Objective reached `stop_residual`.
    Converged,
    /// Iteration budget used up.
    BudgetExhausted,
    /// Returned early because a merge reduced the spike count.
    Projected,
    /// Line search failed `MAX_BACKTRACKS` times in a row.
    StepUnderflow,
    /// All block gradients vanished at a nonzero residual.
    Stationary,
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub train: SpikeTrain,
    pub iterations_run: usize,
    /// True iff the returned train has fewer spikes than the input.
    pub projected: bool,
    pub termination: Termination,
    pub final_value: f64,
    /// Last accepted step, reusable as the next call's `step_init`.
    pub final_step: f64,
    /// Number of single-spike gradient evaluations performed.
    pub block_gradient_evals: usize,
    pub trace: Vec<IterationRecord>,
}

/// Greedily merges the closest pair of spikes closer than `merge_radius` until none is left.
///
/// The merged spike carries `a_i + a_j` at the amplitude-weighted barycenter and takes the
/// lower of the two indices. A pair whose amplitudes nearly cancel is deleted.
pub fn merge_projection(train: &SpikeTrain, merge_radius: f64) -> SpikeTrain {
    let dim = train.dim();
    let mut spikes: Vec<Spike> = train.spikes().to_vec();
    loop {
        let mut closest: Option<(usize, usize, f64)> = None;
        for i in 0..spikes.len() {
            for j in i + 1..spikes.len() {
                let d = distance(&spikes[i].position, &spikes[j].position);
                if d < merge_radius && closest.is_none_or(|(_, _, best)| d < best) {
                    closest = Some((i, j, d));
                }
            }
        }
        let Some((i, j, _)) = closest else { break };
        let (ai, aj) = (spikes[i].amplitude, spikes[j].amplitude);
        let total = ai + aj;
        if total.abs() < CANCELLATION_TOLERANCE * (ai.abs() + aj.abs()) {
            spikes.remove(j);
            spikes.remove(i);
        } else {
            let position = spikes[i]
                .position
                .iter()
                .zip(&spikes[j].position)
                .map(|(ti, tj)| (ai * ti + aj * tj) / total)
                .collect::<Vec<_>>();
            spikes[i] = Spike::new(total, position);
            spikes.remove(j);
        }
    }
    SpikeTrain::from_spikes(dim, spikes).expect("merging preserves dimension")
}

/// Flat parameter vector in rescaled coordinates: `[a, t_1 / s_1, ..., t_d / s_d]` per spike.
struct Params<'s> {
    scale: &'s [f64],
}

impl Params<'_> {
    fn encode(&self, train: &SpikeTrain) -> Vec<f64> {
        let mut x = Vec::with_capacity(train.len() * (self.scale.len() + 1));
        for s in train {
            x.push(s.amplitude);
            x.extend(s.position.iter().zip(self.scale).map(|(t, sc)| t / sc));
        }
        x
    }

    fn decode(&self, x: &[f64]) -> SpikeTrain {
        let d = self.scale.len();
        let spikes = x
            .chunks_exact(d + 1)
            .map(|c| {
                Spike::new(
                    c[0],
                    c[1..]
                        .iter()
                        .zip(self.scale)
                        .map(|(u, sc)| u * sc)
                        .collect::<Vec<_>>(),
                )
            })
            .collect();
        SpikeTrain::from_spikes(d, spikes).expect("chunk width matches dimension")
    }
}

/// Value and rescaled gradient at `x`.
fn value_and_gradient(obj: &Objective, params: &Params, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let train = params.decode(x);
    let residual = obj.residual(&train)?;
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..train.len() {
        let g = obj.block_gradient_at(&train, i, &residual)?;
        grad.push(g.amplitude_grad);
        grad.extend(
            g.position_grad
                .iter()
                .zip(params.scale)
                .map(|(g, sc)| g * sc),
        );
    }
    Ok((residual.norm_sqr(), grad))
}

fn norm_sqr(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// FISTA with function-value restart and merge projection on every parameter of `train`.
///
/// Runs at most `iteration_budget` accepted steps. With `stop_on_projection`, returns as
/// soon as a merge reduces the spike count.
pub fn projected_descent(
    obj: &Objective,
    train: &SpikeTrain,
    cfg: &DescentConfig,
    iteration_budget: usize,
    stop_on_projection: bool,
) -> Result<DescentOutcome> {
    if iteration_budget == 0 {
        return Err(Error::Precondition("iteration budget must be >= 1".into()));
    }
    cfg.validate(train.dim())?;
    let start = Instant::now();
    let params = Params {
        scale: &cfg.position_step_scale,
    };
    let input_count = train.len();

    let mut x = params.encode(train);
    let mut x_prev = x.clone();
    let mut fx = obj.value(train)?;
    let mut momentum = 1.0f64;
    let mut step = cfg.step_init;
    let mut spike_count = train.len();
    let mut evals = 0usize;
    let mut iterations = 0usize;
    let mut termination = Termination::BudgetExhausted;

    let record = |iteration: usize, value: f64, count: usize| IterationRecord {
        iteration,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        residual_norm_squared: value,
        spike_count: count,
        active_fraction: 1.0,
    };
    let mut trace = vec![record(0, fx, spike_count)];

    if fx <= cfg.stop_residual || x.is_empty() {
        termination = Termination::Converged;
    } else {
        while iterations < iteration_budget {
            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next_momentum;
            let mut accelerated = beta > 0.0;

            let accepted = loop {
                let y: Vec<f64> = if accelerated {
                    x.iter()
                        .zip(&x_prev)
                        .map(|(xi, pi)| xi + beta * (xi - pi))
                        .collect()
                } else {
                    x.clone()
                };
                let (fy, gy) = value_and_gradient(obj, &params, &y)?;
                evals += spike_count;
                let gnorm2 = norm_sqr(&gy);

                let mut s = step * cfg.step_growth;
                let mut found = None;
                for _ in 0..MAX_BACKTRACKS {
                    let cand: Vec<f64> = y.iter().zip(&gy).map(|(yi, gi)| yi - s * gi).collect();
                    let fc = obj.value(&params.decode(&cand))?;
                    if fc <= fy - cfg.sufficient_decrease * s * gnorm2 {
                        found = Some((cand, fc));
                        break;
                    }
                    s *= cfg.backtrack_factor;
                }
                match found {
                    Some((cand, fc)) if fc <= fx || !accelerated => break Some((cand, fc, s)),
                    // objective went up (or no acceptable step) from the extrapolated point:
                    // drop momentum and retry from the last accepted iterate
                    _ if accelerated => {
                        accelerated = false;
                        x_prev.clone_from(&x);
                    }
                    _ => break None,
                }
            };

            let Some((x_new, f_new, s)) = accepted else {
                termination = Termination::StepUnderflow;
                break;
            };
            iterations += 1;
            step = s;
            momentum = if accelerated { next_momentum } else { 1.0 };
            x_prev = std::mem::replace(&mut x, x_new);
            fx = f_new;

            let current = params.decode(&x);
            let merged = merge_projection(&current, cfg.merge_radius);
            if merged.len() < current.len() {
                spike_count = merged.len();
                x = params.encode(&merged);
                x_prev.clone_from(&x);
                momentum = 1.0;
                fx = obj.value(&merged)?;
                trace.push(record(iterations, fx, spike_count));
                if stop_on_projection {
                    termination = Termination::Projected;
                    break;
                }
            } else {
                trace.push(record(iterations, fx, spike_count));
            }

            if fx <= cfg.stop_residual {
                termination = Termination::Converged;
                break;
            }
            if x.is_empty() {
                termination = Termination::Stationary;
                break;
            }
        }
    }

    let train = params.decode(&x);
    Ok(DescentOutcome {
        projected: train.len() < input_count,
        train,
        iterations_run: iterations,
        termination,
        final_value: fx,
        final_step: step,
        block_gradient_evals: evals,
        trace,
    })
}

/// Full-parameter projected gradient descent: continues through projections until
/// `stop_residual` or `max_iterations`.
pub fn pgd(obj: &Objective, init: &SpikeTrain, cfg: &DescentConfig) -> Result<DescentOutcome> {
    projected_descent(obj, init, cfg, cfg.max_iterations.max(1), false)
}
