use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{AtomCorrelation, Domain, MeasurementOperator, MeasurementVector};
use crate::error::{check_dim, Error, Result};

/// Parameters of a random Fourier sampling operator.
///
/// Frequencies are drawn i.i.d. Gaussian with per-coordinate standard deviation
/// `frequency_scale`, unless `frequencies` is given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierOperatorConfig {
    pub dim: usize,
    pub measurements: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to `6 pi / L` (about three oscillations across a domain side of length `L`).
    #[serde(default)]
    pub frequency_scale: Option<f64>,
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub frequencies: Option<Vec<Vec<f64>>>,
}

impl FourierOperatorConfig {
    pub fn new(dim: usize, measurements: usize, seed: u64) -> Self {
        Self {
            dim,
            measurements,
            seed,
            frequency_scale: None,
            domain: None,
            frequencies: None,
        }
    }

    pub fn with_frequency_scale(mut self, scale: f64) -> Self {
        self.frequency_scale = Some(scale);
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = Some(domain);
        self
    }
}

/// `A delta_t = (exp(i <w_j, t>) / sqrt(m))_j`.
#[derive(Debug, Clone)]
pub struct FourierOperator {
    dim: usize,
    domain: Domain,
    frequency_scale: f64,
    /// Row-major `m x d`.
    frequencies: Vec<f64>,
    inv_sqrt_m: f64,
}

impl FourierOperator {
    pub fn new(cfg: &FourierOperatorConfig) -> Result<Self> {
        if cfg.dim == 0 || cfg.measurements == 0 {
            return Err(Error::InvalidConfig(
                "fourier operator needs dim >= 1 and measurements >= 1".into(),
            ));
        }
        let domain = match &cfg.domain {
            Some(d) => {
                check_dim(cfg.dim, d.dim())?;
                Domain::new(d.lower.clone(), d.upper.clone())?
            }
            None => Domain::unit_cube(cfg.dim),
        };
        let mean_len = domain.lengths().iter().sum::<f64>() / cfg.dim as f64;
        let frequency_scale = cfg.frequency_scale.unwrap_or(6.0 * PI / mean_len);
        if !(frequency_scale > 0.0) {
            return Err(Error::InvalidConfig("frequency_scale must be > 0".into()));
        }
        let frequencies = match &cfg.frequencies {
            Some(rows) => {
                check_dim(cfg.measurements, rows.len())?;
                let mut flat = Vec::with_capacity(rows.len() * cfg.dim);
                for row in rows {
                    check_dim(cfg.dim, row.len())?;
                    flat.extend_from_slice(row);
                }
                flat
            }
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let normal = Normal::new(0.0, frequency_scale)
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                (0..cfg.measurements * cfg.dim)
                    .map(|_| normal.sample(&mut rng))
                    .collect()
            }
        };
        Ok(Self {
            dim: cfg.dim,
            domain,
            frequency_scale,
            frequencies,
            inv_sqrt_m: 1.0 / (cfg.measurements as f64).sqrt(),
        })
    }

    pub fn frequency(&self, j: usize) -> &[f64] {
        &self.frequencies[j * self.dim..(j + 1) * self.dim]
    }

    pub fn frequency_scale(&self) -> f64 {
        self.frequency_scale
    }

    /// Writes the frequency table as CSV `index,w1,...,wd`.
    pub fn write_frequencies_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["index".to_string()];
        header.extend((1..=self.dim).map(|r| format!("w{r}")));
        w.write_record(&header)?;
        for j in 0..self.len() {
            let mut row = vec![j.to_string()];
            row.extend(self.frequency(j).iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    fn phase(&self, j: usize, position: &[f64]) -> Complex64 {
        let arg: f64 = self
            .frequency(j)
            .iter()
            .zip(position)
            .map(|(w, t)| w * t)
            .sum();
        Complex64::from_polar(self.inv_sqrt_m, arg)
    }
}

impl MeasurementOperator for FourierOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.frequencies.len() / self.dim
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn length_scales(&self) -> Vec<f64> {
        vec![1.0 / self.frequency_scale; self.dim]
    }

    fn apply_dirac(&self, position: &[f64]) -> Result<MeasurementVector> {
        check_dim(self.dim, position.len())?;
        Ok(MeasurementVector::from_vec(
            (0..self.len()).map(|j| self.phase(j, position)).collect(),
        ))
    }

    fn apply_dirac_jacobian(&self, position: &[f64]) -> Result<Vec<MeasurementVector>> {
        check_dim(self.dim, position.len())?;
        let atom = self.apply_dirac(position)?;
        Ok((0..self.dim)
            .map(|r| {
                MeasurementVector::from_vec(
                    atom.iter()
                        .enumerate()
                        .map(|(j, e)| Complex64::new(0.0, self.frequency(j)[r]) * e)
                        .collect(),
                )
            })
            .collect())
    }

    fn accumulate_dirac(
        &self,
        position: &[f64],
        weight: f64,
        out: &mut MeasurementVector,
    ) -> Result<()> {
        check_dim(self.dim, position.len())?;
        check_dim(self.len(), out.len())?;
        for (j, o) in out.as_mut_slice().iter_mut().enumerate() {
            *o += self.phase(j, position) * weight;
        }
        Ok(())
    }

    fn correlate(&self, position: &[f64], residual: &MeasurementVector) -> Result<AtomCorrelation> {
        check_dim(self.dim, position.len())?;
        check_dim(self.len(), residual.len())?;
        let mut value = Complex64::new(0.0, 0.0);
        let mut derivatives = vec![Complex64::new(0.0, 0.0); self.dim];
        for (j, r) in residual.iter().enumerate() {
            let term = self.phase(j, position).conj() * r;
            value += term;
            // conj(i w e) = -i w conj(e)
            let rotated = Complex64::new(term.im, -term.re);
            for (d, w) in derivatives.iter_mut().zip(self.frequency(j)) {
                *d += rotated * *w;
            }
        }
        Ok(AtomCorrelation { value, derivatives })
    }
}
