//! Least-squares data fit `g(theta) = ||A phi(theta) - y||^2` and its per-spike gradients.
//!
//! All gradient routines share one residual evaluation; after that, each block costs a
//! single correlation of the spike's atom (and its derivatives) against the residual.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::operators::{MeasurementOperator, MeasurementVector};
use crate::spike::SpikeTrain;

/// Gradient of `g` with respect to the parameters `(a_i, t_i)` of one spike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGradient {
    pub spike_index: usize,
    pub amplitude_grad: f64,
    pub position_grad: Vec<f64>,
}

impl BlockGradient {
    /// Euclidean norm of the `(d + 1)`-vector `(amplitude_grad, position_grad)`.
    pub fn norm(&self) -> f64 {
        (self.amplitude_grad * self.amplitude_grad
            + self.position_grad.iter().map(|g| g * g).sum::<f64>())
        .sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct Objective<'a> {
    operator: &'a dyn MeasurementOperator,
    observation: MeasurementVector,
}

impl<'a> Objective<'a> {
    pub fn new(
        operator: &'a dyn MeasurementOperator,
        observation: MeasurementVector,
    ) -> Result<Self> {
        check_dim(operator.len(), observation.len())?;
        Ok(Self {
            operator,
            observation,
        })
    }

    pub fn operator(&self) -> &'a dyn MeasurementOperator {
        self.operator
    }

    pub fn observation(&self) -> &MeasurementVector {
        &self.observation
    }

    /// Same operator, different observation.
    pub fn with_observation(&self, observation: MeasurementVector) -> Result<Objective<'a>> {
        Objective::new(self.operator, observation)
    }

    /// `A phi(train) - y`.
    pub fn residual(&self, train: &SpikeTrain) -> Result<MeasurementVector> {
        check_dim(self.operator.dim(), train.dim())?;
        let mut r = self.observation.scaled(-1.0);
        for spike in train {
            self.operator
                .accumulate_dirac(&spike.position, spike.amplitude, &mut r)?;
        }
        Ok(r)
    }

    pub fn value(&self, train: &SpikeTrain) -> Result<f64> {
        Ok(self.residual(train)?.norm_sqr())
    }

    /// Block gradient of spike `index` given a precomputed `residual = A phi(train) - y`.
    pub fn block_gradient_at(
        &self,
        train: &SpikeTrain,
        index: usize,
        residual: &MeasurementVector,
    ) -> Result<BlockGradient> {
        let spike = train.get(index)?;
        let corr = self.operator.correlate(&spike.position, residual)?;
        Ok(BlockGradient {
            spike_index: index,
            amplitude_grad: 2.0 * corr.value.re,
            position_grad: corr
                .derivatives
                .iter()
                .map(|d| 2.0 * spike.amplitude * d.re)
                .collect(),
        })
    }

    pub fn block_gradient(&self, train: &SpikeTrain, index: usize) -> Result<BlockGradient> {
        if index >= train.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: train.len(),
            });
        }
        let r = self.residual(train)?;
        self.block_gradient_at(train, index, &r)
    }

    /// Block gradients for `indices`, sharing one residual evaluation.
    pub fn block_gradients(
        &self,
        train: &SpikeTrain,
        indices: &[usize],
    ) -> Result<Vec<BlockGradient>> {
        let r = self.residual(train)?;
        indices
            .iter()
            .map(|&i| self.block_gradient_at(train, i, &r))
            .collect()
    }

    pub fn full_gradient(&self, train: &SpikeTrain) -> Result<Vec<BlockGradient>> {
        let all: Vec<usize> = (0..train.len()).collect();
        self.block_gradients(train, &all)
    }

    pub fn block_gradient_norms(&self, train: &SpikeTrain) -> Result<Vec<f64>> {
        Ok(self
            .full_gradient(train)?
            .iter()
            .map(BlockGradient::norm)
            .collect())
    }
}
