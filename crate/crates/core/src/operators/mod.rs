//! Linear measurement operators mapping spike trains to complex measurement vectors.
//!
//! Every operator is defined by its atom `A delta_t` and the atom's spatial derivatives.
//! Applying the operator to a train is the amplitude-weighted sum of atoms, so the
//! provided methods on [`MeasurementOperator`] are linear by construction.
//!
//! Two concrete operators are provided:
//! - [`FourierOperator`]: random Fourier sampling at Gaussian-drawn frequencies.
//! - [`MultiPlanePsf`]: a multi-plane Gaussian point-spread function with per-plane
//!   exponential axial decay, a stand-in for multi-angle TIRF microscopy.

mod fourier;
mod psf;

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::spike::{Dipole, SpikeTrain};

pub use fourier::{FourierOperator, FourierOperatorConfig};
pub use psf::{MultiPlanePsf, MultiPlanePsfConfig};

/// A vector of `m` complex measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector(Vec<Complex64>);

impl MeasurementVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn from_vec(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Hermitian inner product, conjugate-linear in `self`.
    pub fn inner(&self, other: &MeasurementVector) -> Complex64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(u, v)| u.conj() * v).sum()
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &MeasurementVector) {
        debug_assert_eq!(self.len(), other.len());
        for (u, v) in self.0.iter_mut().zip(&other.0) {
            *u += v * alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self(self.0.iter().map(|z| z * alpha).collect())
    }

    pub fn sub(&self, other: &MeasurementVector) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(u, v)| u - v).collect())
    }
}

impl Index<usize> for MeasurementVector {
    type Output = Complex64;

    fn index(&self, index: usize) -> &Complex64 {
        &self.0[index]
    }
}

impl IndexMut<usize> for MeasurementVector {
    fn index_mut(&mut self, index: usize) -> &mut Complex64 {
        &mut self.0[index]
    }
}

/// Axis-aligned box `[lower, upper]` in which spikes are expected to live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidConfig(
                "domain must have dimension >= 1".into(),
            ));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(Error::InvalidConfig(format!(
                "domain upper bounds must exceed lower bounds: {lower:?} / {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn unit_cube(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *x >= *l && *x <= *u)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| rng.random_range(*l..*u))
            .collect()
    }
}

/// Uniform cell-centred grid over a domain, flattened in row-major order
/// (first axis most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub domain: Domain,
    pub resolution: Vec<usize>,
}

impl Grid {
    pub fn new(domain: Domain, resolution: Vec<usize>) -> Result<Self> {
        check_dim(domain.dim(), resolution.len())?;
        if resolution.contains(&0) {
            return Err(Error::InvalidConfig(
                "grid resolution must be >= 1 per axis".into(),
            ));
        }
        Ok(Self { domain, resolution })
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the grid nodes along `axis`.
    pub fn axis_points(&self, axis: usize) -> Vec<f64> {
        let n = self.resolution[axis];
        let lo = self.domain.lower[axis];
        let step = (self.domain.upper[axis] - lo) / n as f64;
        (0..n).map(|k| lo + (k as f64 + 0.5) * step).collect()
    }

    pub fn steps(&self) -> Vec<f64> {
        self.domain
            .lengths()
            .iter()
            .zip(&self.resolution)
            .map(|(l, &n)| l / n as f64)
            .collect()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.resolution.len()];
        let mut rest = flat;
        for axis in (0..self.resolution.len()).rev() {
            idx[axis] = rest % self.resolution[axis];
            rest /= self.resolution[axis];
        }
        idx.iter()
            .enumerate()
            .map(|(axis, &k)| {
                let step = (self.domain.upper[axis] - self.domain.lower[axis])
                    / self.resolution[axis] as f64;
                self.domain.lower[axis] + (k as f64 + 0.5) * step
            })
            .collect()
    }
}

/// Correlations of one atom and its partial derivatives against a vector `r`:
/// `value = <A delta_t, r>` and `derivatives[k] = <d/dt_k A delta_t, r>`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCorrelation {
    pub value: Complex64,
    pub derivatives: Vec<Complex64>,
}

/// A linear map from finite signed measures on `R^d` to `C^m`, described by its atoms.
#[allow(clippy::len_without_is_empty)]
pub trait MeasurementOperator: Send + Sync + std::fmt::Debug {
    /// Spatial dimension `d`.
    fn dim(&self) -> usize;

    /// Number of measurements `m`.
    fn len(&self) -> usize;

    /// Region where spikes are expected (greedy search grid, sampling).
    fn domain(&self) -> &Domain;

    /// `A delta_position`.
    fn apply_dirac(&self, position: &[f64]) -> Result<MeasurementVector>;

    /// `d/dt_r A delta_t` at `position`, one vector per coordinate.
    fn apply_dirac_jacobian(&self, position: &[f64]) -> Result<Vec<MeasurementVector>>;

    /// Natural length scale per axis, used to scale finite-difference and descent steps.
    fn length_scales(&self) -> Vec<f64> {
        self.domain().lengths()
    }

    /// `out += weight * A delta_position`.
    fn accumulate_dirac(
        &self,
        position: &[f64],
        weight: f64,
        out: &mut MeasurementVector,
    ) -> Result<()> {
        check_dim(self.len(), out.len())?;
        out.add_scaled(weight, &self.apply_dirac(position)?);
        Ok(())
    }

    fn correlate(&self, position: &[f64], residual: &MeasurementVector) -> Result<AtomCorrelation> {
        check_dim(self.len(), residual.len())?;
        let value = self.apply_dirac(position)?.inner(residual);
        let derivatives = self
            .apply_dirac_jacobian(position)?
            .iter()
            .map(|d| d.inner(residual))
            .collect();
        Ok(AtomCorrelation { value, derivatives })
    }

    /// For every grid node (flat order): `(<A delta_t, r>, ||A delta_t||)`.
    fn correlate_grid(
        &self,
        grid: &Grid,
        residual: &MeasurementVector,
    ) -> Result<Vec<(Complex64, f64)>> {
        check_dim(self.dim(), grid.domain.dim())?;
        check_dim(self.len(), residual.len())?;
        (0..grid.len())
            .map(|flat| {
                let atom = self.apply_dirac(&grid.point(flat))?;
                Ok((atom.inner(residual), atom.norm_sqr().sqrt()))
            })
            .collect()
    }

    /// `A phi(train) = sum_i a_i A delta_{t_i}`; the zero vector for an empty train.
    fn apply(&self, train: &SpikeTrain) -> Result<MeasurementVector> {
        check_dim(self.dim(), train.dim())?;
        let mut out = MeasurementVector::zeros(self.len());
        for spike in train {
            self.accumulate_dirac(&spike.position, spike.amplitude, &mut out)?;
        }
        Ok(out)
    }

    /// `a A delta_t - b A delta_s`.
    fn apply_dipole(&self, dipole: &Dipole) -> Result<MeasurementVector> {
        check_dim(self.dim(), dipole.dim())?;
        let mut out = MeasurementVector::zeros(self.len());
        self.accumulate_dirac(&dipole.t, dipole.a, &mut out)?;
        self.accumulate_dirac(&dipole.s, -dipole.b, &mut out)?;
        Ok(out)
    }
}

/// Serializable operator description, as found in experiment config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorSpec {
    Fourier(FourierOperatorConfig),
    MultiplanePsf(MultiPlanePsfConfig),
}

impl OperatorSpec {
    pub fn build(&self) -> Result<Box<dyn MeasurementOperator>> {
        Ok(match self {
            OperatorSpec::Fourier(cfg) => Box::new(FourierOperator::new(cfg)?),
            OperatorSpec::MultiplanePsf(cfg) => Box::new(MultiPlanePsf::new(cfg)?),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::Fourier(cfg) => cfg.dim,
            OperatorSpec::MultiplanePsf(_) => 3,
        }
    }
}

#[cfg(test)]
pub(crate) mod testing {
    //! Finite-difference helpers shared by operator and objective tests.

    use super::*;

    /// Central finite differences of `apply_dirac` along every axis.
    pub fn fd_jacobian(
        op: &dyn MeasurementOperator,
        position: &[f64],
        steps: &[f64],
    ) -> Vec<MeasurementVector> {
        (0..op.dim())
            .map(|r| {
                let mut plus = position.to_vec();
                let mut minus = position.to_vec();
                plus[r] += steps[r];
                minus[r] -= steps[r];
                let fp = op.apply_dirac(&plus).unwrap();
                let fm = op.apply_dirac(&minus).unwrap();
                fp.sub(&fm).scaled(0.5 / steps[r])
            })
            .collect()
    }

    /// Relative error `||u - v|| / max(||v||, floor)`.
    pub fn rel_err(u: &MeasurementVector, v: &MeasurementVector, floor: f64) -> f64 {
        u.sub(v).norm_sqr().sqrt() / v.norm_sqr().sqrt().max(floor)
    }
}
