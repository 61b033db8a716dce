//! Discrete-measure signal model: weighted Diracs, separation constraint and dipoles.
//!
//! A [`SpikeTrain`] is the parameter vector of the recovery problem, an ordered list of
//! `(amplitude, position)` pairs in a fixed dimension `d`. Order is meaningful: block
//! indices used by the descent routines refer to positions in this list.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A single weighted Dirac `a * delta_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub amplitude: f64,
    pub position: Vec<f64>,
}

impl Spike {
    pub fn new(amplitude: f64, position: impl Into<Vec<f64>>) -> Self {
        Self {
            amplitude,
            position: position.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Finite sum of Diracs in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    dim: usize,
    spikes: Vec<Spike>,
}

impl SpikeTrain {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            spikes: Vec::new(),
        }
    }

    pub fn from_spikes(dim: usize, spikes: Vec<Spike>) -> Result<Self> {
        for s in &spikes {
            check_dim(dim, s.dim())?;
        }
        Ok(Self { dim, spikes })
    }

    /// Builds a train from parallel amplitude / position lists.
    pub fn from_parts(dim: usize, amplitudes: &[f64], positions: &[Vec<f64>]) -> Result<Self> {
        check_dim(amplitudes.len(), positions.len())?;
        let spikes = amplitudes
            .iter()
            .zip(positions)
            .map(|(&a, p)| Spike::new(a, p.clone()))
            .collect();
        Self::from_spikes(dim, spikes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Spike> {
        self.spikes.iter()
    }

    pub fn get(&self, index: usize) -> Result<&Spike> {
        self.spikes.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.spikes.len(),
        })
    }

    pub fn push(&mut self, spike: Spike) -> Result<()> {
        check_dim(self.dim, spike.dim())?;
        self.spikes.push(spike);
        Ok(())
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.spikes.iter().map(|s| s.amplitude).collect()
    }

    pub fn total_amplitude(&self) -> f64 {
        self.spikes.iter().map(|s| s.amplitude).sum()
    }

    /// Sub-train made of the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let spikes = indices
            .iter()
            .map(|&i| self.get(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: self.dim,
            spikes,
        })
    }

    /// Concatenation `alpha * self (+) beta * other`.
    pub fn combine(&self, alpha: f64, other: &SpikeTrain, beta: f64) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let spikes = self
            .spikes
            .iter()
            .map(|s| Spike::new(alpha * s.amplitude, s.position.clone()))
            .chain(
                other
                    .spikes
                    .iter()
                    .map(|s| Spike::new(beta * s.amplitude, s.position.clone())),
            )
            .collect();
        Ok(Self {
            dim: self.dim,
            spikes,
        })
    }

    #[cfg(test)]
    pub(crate) fn spikes_mut(&mut self) -> &mut Vec<Spike> {
        &mut self.spikes
    }

    /// Writes the train as CSV with header `amplitude,x1,...,xd`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["amplitude".to_string()];
        header.extend((1..=self.dim).map(|r| format!("x{r}")));
        w.write_record(&header)?;
        for s in &self.spikes {
            let mut row = vec![s.amplitude.to_string()];
            row.extend(s.position.iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.is_empty() || &header[0] != "amplitude" {
            return Err(Error::Parse("first column must be `amplitude`".into()));
        }
        let dim = header.len() - 1;
        for (r_idx, name) in header.iter().skip(1).enumerate() {
            if name != format!("x{}", r_idx + 1) {
                return Err(Error::Parse(format!("unexpected column `{name}`")));
            }
        }
        let mut train = SpikeTrain::new(dim);
        for record in r.records() {
            let record = record?;
            let values = record
                .iter()
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("`{v}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            check_dim(dim + 1, values.len())?;
            train.push(Spike::new(values[0], values[1..].to_vec()))?;
        }
        Ok(train)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

impl<'a> IntoIterator for &'a SpikeTrain {
    type Item = &'a Spike;
    type IntoIter = std::slice::Iter<'a, Spike>;

    fn into_iter(self) -> Self::IntoIter {
        self.spikes.iter()
    }
}

/// The separation model: at most `max_spikes` spikes, pairwise more than `epsilon` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationModel {
    epsilon: f64,
    max_spikes: usize,
}

impl SeparationModel {
    pub fn new(epsilon: f64, max_spikes: usize) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "separation epsilon must be > 0, got {epsilon}"
            )));
        }
        if max_spikes == 0 {
            return Err(Error::InvalidConfig("max_spikes must be >= 1".into()));
        }
        Ok(Self {
            epsilon,
            max_spikes,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_spikes(&self) -> usize {
        self.max_spikes
    }
}

/// Smallest pairwise Euclidean distance; `+inf` for fewer than two spikes.
pub fn min_pairwise_separation(train: &SpikeTrain) -> f64 {
    let spikes = train.spikes();
    let mut best = f64::INFINITY;
    for (i, a) in spikes.iter().enumerate() {
        for b in &spikes[i + 1..] {
            best = best.min(distance(&a.position, &b.position));
        }
    }
    best
}

/// Strict separation test: every pair is more than `epsilon` apart.
pub fn satisfies_separation(train: &SpikeTrain, model: &SeparationModel) -> bool {
    min_pairwise_separation(train) > model.epsilon()
}

/// The measure `a delta_t - b delta_s` with `|t - s| <= epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dipole {
    pub a: f64,
    pub t: Vec<f64>,
    pub b: f64,
    pub s: Vec<f64>,
    pub epsilon: f64,
}

impl Dipole {
    pub fn new(a: f64, t: Vec<f64>, b: f64, s: Vec<f64>, epsilon: f64) -> Result<Self> {
        check_dim(t.len(), s.len())?;
        let gap = distance(&t, &s);
        if gap > epsilon {
            return Err(Error::Precondition(format!(
                "dipole support gap {gap} exceeds epsilon {epsilon}"
            )));
        }
        Ok(Self {
            a,
            t,
            b,
            s,
            epsilon,
        })
    }

    pub fn dim(&self) -> usize {
        self.t.len()
    }

    /// The equivalent two-spike train `(a, t), (-b, s)`.
    pub fn to_train(&self) -> SpikeTrain {
        SpikeTrain {
            dim: self.dim(),
            spikes: vec![
                Spike::new(self.a, self.t.clone()),
                Spike::new(-self.b, self.s.clone()),
            ],
        }
    }
}

/// Strict `eps`-separation of the supports of two dipoles (all four cross distances).
pub fn dipoles_are_separated(n1: &Dipole, n2: &Dipole, eps: f64) -> bool {
    [
        (&n1.t, &n2.t),
        (&n1.t, &n2.s),
        (&n1.s, &n2.t),
        (&n1.s, &n2.s),
    ]
    .iter()
    .all(|(u, v)| distance(u, v) > eps)
}
