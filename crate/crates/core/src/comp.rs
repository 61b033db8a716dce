//! Over-parametrized continuous orthogonal matching pursuit (OP-COMP).
//!
//! Greedy initialization: pick the grid atom most correlated with the residual, append it,
//! refit all amplitudes by least squares, repeat. There is no descent inside the loop, so
//! several grid spikes typically end up around each true spike; the projected descent
//! merges them afterwards.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::objective::Objective;
use crate::operators::{Grid, MeasurementVector};
use crate::spike::{Spike, SpikeTrain};

/// Diagonal damping added to the real Gram matrix of the selected atoms.
pub const RIDGE: f64 = 1e-10;

/// Reciprocal condition estimate below which a refit is flagged.
const CONDITION_WARNING: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompConfig {
    /// Grid points per axis.
    pub grid_resolution: Vec<usize>,
    pub max_spikes: usize,
    /// Stop when one iteration decreases the objective by less than this fraction.
    pub stall_tolerance: f64,
    pub stop_residual: f64,
}

impl CompConfig {
    pub fn new(grid_resolution: Vec<usize>, max_spikes: usize) -> Self {
        Self {
            grid_resolution,
            max_spikes,
            stall_tolerance: 1e-4,
            stop_residual: 2e-8,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_spikes == 0 {
            return Err(Error::InvalidConfig("comp max_spikes must be >= 1".into()));
        }
        if !(self.stall_tolerance > 0.0 && self.stop_residual > 0.0) {
            return Err(Error::InvalidConfig(
                "comp stall_tolerance and stop_residual must be > 0".into(),
            ));
        }
        Ok(())
    }
}

fn search_grid(obj: &Objective, cfg: &CompConfig) -> Result<Grid> {
    Grid::new(obj.operator().domain().clone(), cfg.grid_resolution.clone())
}

/// Grid point maximizing `|<A delta_t, residual>| / ||A delta_t||`; ties go to the lowest
/// row-major index.
pub fn best_atom(
    obj: &Objective,
    residual: &MeasurementVector,
    cfg: &CompConfig,
) -> Result<Vec<f64>> {
    let grid = search_grid(obj, cfg)?;
    let (flat, _) = best_grid_index(obj, &grid, residual)?;
    Ok(grid.point(flat))
}

fn best_grid_index(
    obj: &Objective,
    grid: &Grid,
    residual: &MeasurementVector,
) -> Result<(usize, f64)> {
    let scores = obj.operator().correlate_grid(grid, residual)?;
    let mut best = (0, f64::NEG_INFINITY);
    for (k, (corr, norm)) in scores.iter().enumerate() {
        let score = if *norm > 0.0 { corr.norm() / norm } else { 0.0 };
        if score > best.1 {
            best = (k, score);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refit {
    pub amplitudes: Vec<f64>,
    /// The damped Gram matrix was numerically rank deficient.
    pub ill_conditioned: bool,
}

/// Real least-squares amplitudes: `argmin_b || sum_j b_j A delta_{s_j} - y ||^2`.
pub fn refit_amplitudes(obj: &Objective, positions: &[Vec<f64>]) -> Result<Refit> {
    if positions.is_empty() {
        return Err(Error::Precondition(
            "refit needs at least one position".into(),
        ));
    }
    let atoms = positions
        .iter()
        .map(|p| obj.operator().apply_dirac(p))
        .collect::<Result<Vec<_>>>()?;
    let n = atoms.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let g = atoms[i].inner(&atoms[j]).re;
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let rhs = DVector::from_iterator(n, atoms.iter().map(|a| a.inner(obj.observation()).re));
    Ok(solve_damped(gram, rhs))
}

fn solve_damped(mut gram: DMatrix<f64>, rhs: DVector<f64>) -> Refit {
    let n = gram.nrows();
    for i in 0..n {
        gram[(i, i)] += RIDGE;
    }
    if let Some(chol) = gram.clone().cholesky() {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
            (lo.min(d * d), hi.max(d * d))
        });
        return Refit {
            amplitudes: chol.solve(&rhs).iter().copied().collect(),
            ill_conditioned: lo < CONDITION_WARNING * hi,
        };
    }
    let amplitudes = gram
        .clone()
        .lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|| vec![0.0; n]);
    Refit {
        amplitudes,
        ill_conditioned: true,
    }
}

#[derive(Debug, Clone)]
pub struct CompOutcome {
    pub train: SpikeTrain,
    /// Objective value after each iteration, starting with `||y||^2`.
    pub values: Vec<f64>,
    pub ill_conditioned: bool,
}

/// Runs OP-COMP and returns the accumulated (usually over-parametrized) train.
pub fn op_comp(obj: &Objective, cfg: &CompConfig) -> Result<SpikeTrain> {
    Ok(op_comp_traced(obj, cfg)?.train)
}

pub fn op_comp_traced(obj: &Objective, cfg: &CompConfig) -> Result<CompOutcome> {
    cfg.validate()?;
    let op = obj.operator();
    let grid = search_grid(obj, cfg)?;
    check_dim(op.dim(), grid.domain.dim())?;
    let y = obj.observation();

    let mut positions: Vec<Vec<f64>> = Vec::new();
    let mut flat_indices: Vec<usize> = Vec::new();
    let mut atoms: Vec<MeasurementVector> = Vec::new();
    let mut gram_rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut amplitudes: Vec<f64> = Vec::new();
    let mut residual = y.clone();
    let mut value = residual.norm_sqr();
    let mut values = vec![value];
    let mut ill_conditioned = false;

    while value > cfg.stop_residual && positions.len() < cfg.max_spikes {
        let (flat, _) = best_grid_index(obj, &grid, &residual)?;
        if flat_indices.contains(&flat) {
            // residual already orthogonal to every remaining direction the grid offers
            break;
        }
        let position = grid.point(flat);
        let atom = op.apply_dirac(&position)?;
        let row: Vec<f64> = atoms.iter().map(|a| a.inner(&atom).re).collect();
        for (g, v) in gram_rows.iter_mut().zip(&row) {
            g.push(*v);
        }
        let mut new_row = row;
        new_row.push(atom.norm_sqr());
        gram_rows.push(new_row);
        rhs.push(atom.inner(y).re);
        atoms.push(atom);
        positions.push(position);
        flat_indices.push(flat);

        let n = atoms.len();
        let gram = DMatrix::from_fn(n, n, |i, j| gram_rows[i][j]);
        let refit = solve_damped(gram, DVector::from_column_slice(&rhs));
        ill_conditioned |= refit.ill_conditioned;
        amplitudes = refit.amplitudes;

        residual = y.clone();
        for (a, b) in atoms.iter().zip(&amplitudes) {
            residual.add_scaled(-b, a);
        }
        let new_value = residual.norm_sqr();
        values.push(new_value);
        let stalled = value - new_value < cfg.stall_tolerance * value;
        value = new_value;
        if stalled {
            break;
        }
    }

    let spikes = amplitudes
        .into_iter()
        .zip(positions)
        .map(|(a, p)| Spike::new(a, p))
        .collect();
    Ok(CompOutcome {
        train: SpikeTrain::from_spikes(op.dim(), spikes)?,
        values,
        ill_conditioned,
    })
}
