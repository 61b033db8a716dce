use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AtomCorrelation, Domain, Grid, MeasurementOperator, MeasurementVector};
use crate::error::{check_dim, Error, Result};

/// Geometry of the multi-plane Gaussian PSF operator.
///
/// Measurements are `planes` images of `nx x ny` pixels covering `[0, lx] x [0, ly]`;
/// the axial coordinate lives in `[0, lz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPlanePsfConfig {
    pub planes: usize,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    /// Lateral Gaussian width; defaults to two pixel widths.
    #[serde(default)]
    pub psf_sigma: Option<f64>,
    /// Axial decay rate per plane; defaults to rates with `exp(-rate * lz)` evenly
    /// spanning `[0.9, 0.3]` across planes.
    #[serde(default)]
    pub plane_decays: Option<Vec<f64>>,
}

impl MultiPlanePsfConfig {
    pub fn new(planes: usize, nx: usize, ny: usize, lengths: [f64; 3]) -> Self {
        Self {
            planes,
            nx,
            ny,
            lx: lengths[0],
            ly: lengths[1],
            lz: lengths[2],
            psf_sigma: None,
            plane_decays: None,
        }
    }

    /// 4 planes of 64 x 64 pixels over 6.4 x 6.4 x 0.8.
    pub fn paper_geometry() -> Self {
        Self::new(4, 64, 64, [6.4, 6.4, 0.8])
    }

    /// 4 planes of 32 x 32 pixels over the same 6.4 x 6.4 x 0.8 box.
    pub fn desk_geometry() -> Self {
        Self::new(4, 32, 32, [6.4, 6.4, 0.8])
    }

    pub fn pixel_width(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn measurements(&self) -> usize {
        self.planes * self.nx * self.ny
    }

    pub fn default_plane_decays(planes: usize, lz: f64) -> Vec<f64> {
        (0..planes)
            .map(|p| {
                let frac = if planes > 1 {
                    p as f64 / (planes - 1) as f64
                } else {
                    0.0
                };
                let attenuation = 0.9 - 0.6 * frac;
                -attenuation.ln() / lz
            })
            .collect()
    }
}

/// Separable per-position factors of one atom: plane weights and lateral Gaussians.
struct Factors {
    w: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

/// Multi-plane Gaussian PSF with exponential axial decay.
///
/// Entry `(p, px, py)` of `A delta_(x,y,z)` is
/// `c * exp(-decay_p z) * exp(-((x - cx_px)^2 + (y - cy_py)^2) / (2 sigma^2))`
/// with `c` fixed so that the atom at the domain centre has unit norm.
#[derive(Debug, Clone)]
pub struct MultiPlanePsf {
    planes: usize,
    nx: usize,
    ny: usize,
    sigma: f64,
    decays: Vec<f64>,
    centers_x: Vec<f64>,
    centers_y: Vec<f64>,
    domain: Domain,
    normalization: f64,
}

impl MultiPlanePsf {
    pub fn new(cfg: &MultiPlanePsfConfig) -> Result<Self> {
        if cfg.planes == 0 || cfg.nx == 0 || cfg.ny == 0 {
            return Err(Error::InvalidConfig(
                "planes and pixel counts must be >= 1".into(),
            ));
        }
        if !(cfg.lx > 0.0 && cfg.ly > 0.0 && cfg.lz > 0.0) {
            return Err(Error::InvalidConfig(
                "domain lengths must be positive".into(),
            ));
        }
        let sigma = cfg.psf_sigma.unwrap_or(2.0 * cfg.pixel_width());
        if !(sigma > 0.0) {
            return Err(Error::InvalidConfig("psf_sigma must be positive".into()));
        }
        let decays = match &cfg.plane_decays {
            Some(d) => {
                check_dim(cfg.planes, d.len())?;
                if d.iter().any(|&x| !(x > 0.0)) {
                    return Err(Error::InvalidConfig("plane decays must be positive".into()));
                }
                d.clone()
            }
            None => MultiPlanePsfConfig::default_plane_decays(cfg.planes, cfg.lz),
        };
        let centers = |n: usize, len: f64| -> Vec<f64> {
            (0..n).map(|k| (k as f64 + 0.5) * len / n as f64).collect()
        };
        let mut op = Self {
            planes: cfg.planes,
            nx: cfg.nx,
            ny: cfg.ny,
            sigma,
            decays,
            centers_x: centers(cfg.nx, cfg.lx),
            centers_y: centers(cfg.ny, cfg.ly),
            domain: Domain::new(vec![0.0; 3], vec![cfg.lx, cfg.ly, cfg.lz])?,
            normalization: 1.0,
        };
        let f = op.factors(&op.domain.center());
        let energy = sq_sum(&f.w) * sq_sum(&f.gx) * sq_sum(&f.gy);
        op.normalization = 1.0 / energy.sqrt();
        Ok(op)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn plane_decays(&self) -> &[f64] {
        &self.decays
    }

    pub fn pixel_center(&self, px: usize, py: usize) -> (f64, f64) {
        (self.centers_x[px], self.centers_y[py])
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Flat measurement index of pixel `(px, py)` in plane `p`.
    pub fn index(&self, p: usize, px: usize, py: usize) -> usize {
        (p * self.nx + px) * self.ny + py
    }

    fn gaussian(&self, centers: &[f64], x: f64) -> Vec<f64> {
        let inv = 0.5 / (self.sigma * self.sigma);
        centers
            .iter()
            .map(|c| (-(x - c) * (x - c) * inv).exp())
            .collect()
    }

    fn factors(&self, t: &[f64]) -> Factors {
        Factors {
            w: self
                .decays
                .iter()
                .map(|d| self.normalization * (-d * t[2]).exp())
                .collect(),
            gx: self.gaussian(&self.centers_x, t[0]),
            gy: self.gaussian(&self.centers_y, t[1]),
        }
    }

    /// d/dx of the lateral Gaussian factor.
    fn gaussian_slope(&self, centers: &[f64], g: &[f64], x: f64) -> Vec<f64> {
        let inv = 1.0 / (self.sigma * self.sigma);
        centers
            .iter()
            .zip(g)
            .map(|(c, g)| g * (c - x) * inv)
            .collect()
    }

    fn outer(&self, w: &[f64], gx: &[f64], gy: &[f64]) -> MeasurementVector {
        let mut out = Vec::with_capacity(self.len());
        for wp in w {
            for gxv in gx {
                let s = wp * gxv;
                out.extend(gy.iter().map(|g| Complex64::new(s * g, 0.0)));
            }
        }
        MeasurementVector::from_vec(out)
    }
}

fn sq_sum(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

impl MeasurementOperator for MultiPlanePsf {
    fn dim(&self) -> usize {
        3
    }

    fn len(&self) -> usize {
        self.planes * self.nx * self.ny
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn length_scales(&self) -> Vec<f64> {
        vec![self.sigma, self.sigma, self.domain.upper[2]]
    }

    fn apply_dirac(&self, position: &[f64]) -> Result<MeasurementVector> {
        check_dim(3, position.len())?;
        let f = self.factors(position);
        Ok(self.outer(&f.w, &f.gx, &f.gy))
    }

    fn apply_dirac_jacobian(&self, position: &[f64]) -> Result<Vec<MeasurementVector>> {
        check_dim(3, position.len())?;
        let f = self.factors(position);
        let dgx = self.gaussian_slope(&self.centers_x, &f.gx, position[0]);
        let dgy = self.gaussian_slope(&self.centers_y, &f.gy, position[1]);
        let dw: Vec<f64> = f.w.iter().zip(&self.decays).map(|(w, d)| -d * w).collect();
        Ok(vec![
            self.outer(&f.w, &dgx, &f.gy),
            self.outer(&f.w, &f.gx, &dgy),
            self.outer(&dw, &f.gx, &f.gy),
        ])
    }

    fn accumulate_dirac(
        &self,
        position: &[f64],
        weight: f64,
        out: &mut MeasurementVector,
    ) -> Result<()> {
        check_dim(3, position.len())?;
        check_dim(self.len(), out.len())?;
        let f = self.factors(position);
        let gy: Vec<f64> = f.gy.iter().map(|g| g * weight).collect();
        let mut rows = out.as_mut_slice().chunks_exact_mut(self.ny);
        for wp in &f.w {
            for gxv in &f.gx {
                let s = wp * gxv;
                let row = rows.next().expect("row count matches planes * nx");
                for (o, g) in row.iter_mut().zip(&gy) {
                    o.re += s * g;
                }
            }
        }
        Ok(())
    }

    fn correlate(&self, position: &[f64], residual: &MeasurementVector) -> Result<AtomCorrelation> {
        check_dim(3, position.len())?;
        check_dim(self.len(), residual.len())?;
        let f = self.factors(position);
        let dgx = self.gaussian_slope(&self.centers_x, &f.gx, position[0]);
        let dgy = self.gaussian_slope(&self.centers_y, &f.gy, position[1]);

        let zero = Complex64::new(0.0, 0.0);
        let (mut value, mut dx, mut dy, mut dz) = (zero, zero, zero, zero);
        let mut rows = residual.as_slice().chunks_exact(self.ny);
        for (wp, decay) in f.w.iter().zip(&self.decays) {
            let (mut v_p, mut dx_p, mut dy_p) = (zero, zero, zero);
            for (gxv, dgxv) in f.gx.iter().zip(&dgx) {
                let row = rows.next().expect("row count matches planes * nx");
                let mut s = zero;
                let mut ds = zero;
                for ((r, g), dg) in row.iter().zip(&f.gy).zip(&dgy) {
                    s += r * g;
                    ds += r * dg;
                }
                v_p += s * gxv;
                dx_p += s * dgxv;
                dy_p += ds * gxv;
            }
            value += v_p * wp;
            dx += dx_p * wp;
            dy += dy_p * wp;
            dz -= v_p * (wp * decay);
        }
        Ok(AtomCorrelation {
            value,
            derivatives: vec![dx, dy, dz],
        })
    }

    fn correlate_grid(
        &self,
        grid: &Grid,
        residual: &MeasurementVector,
    ) -> Result<Vec<(Complex64, f64)>> {
        check_dim(3, grid.domain.dim())?;
        check_dim(self.len(), residual.len())?;
        let xs = grid.axis_points(0);
        let ys = grid.axis_points(1);
        let zs = grid.axis_points(2);
        let gxs: Vec<Vec<f64>> = xs
            .iter()
            .map(|&x| self.gaussian(&self.centers_x, x))
            .collect();
        let gys: Vec<Vec<f64>> = ys
            .iter()
            .map(|&y| self.gaussian(&self.centers_y, y))
            .collect();

        // per-plane lateral correlation maps: corr[p][ix][iy] = sum gx gy r_p
        let zero = Complex64::new(0.0, 0.0);
        let mut corr = vec![zero; self.planes * xs.len() * ys.len()];
        let mut partial = vec![zero; ys.len()];
        for p in 0..self.planes {
            for px in 0..self.nx {
                let start = self.index(p, px, 0);
                let row = &residual.as_slice()[start..start + self.ny];
                for (pt, gy) in partial.iter_mut().zip(&gys) {
                    *pt = row.iter().zip(gy).map(|(r, g)| r * g).sum();
                }
                for (ix, gx) in gxs.iter().enumerate() {
                    let weight = gx[px];
                    let base = (p * xs.len() + ix) * ys.len();
                    for (c, pt) in corr[base..base + ys.len()].iter_mut().zip(&partial) {
                        *c += pt * weight;
                    }
                }
            }
        }

        let norms_x: Vec<f64> = gxs.iter().map(|g| sq_sum(g).sqrt()).collect();
        let norms_y: Vec<f64> = gys.iter().map(|g| sq_sum(g).sqrt()).collect();
        let mut out = Vec::with_capacity(grid.len());
        for (ix, nxv) in norms_x.iter().enumerate() {
            for (iy, nyv) in norms_y.iter().enumerate() {
                for &z in &zs {
                    let w: Vec<f64> = self
                        .decays
                        .iter()
                        .map(|d| self.normalization * (-d * z).exp())
                        .collect();
                    let value: Complex64 = (0..self.planes)
                        .map(|p| corr[(p * xs.len() + ix) * ys.len() + iy] * w[p])
                        .sum();
                    out.push((value, sq_sum(&w).sqrt() * nxv * nyv));
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::testing::{fd_jacobian, rel_err};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> MultiPlanePsf {
        MultiPlanePsf::new(&MultiPlanePsfConfig::new(4, 12, 10, [2.4, 2.0, 0.8])).unwrap()
    }

    #[test]
    fn unit_norm_at_domain_centre() {
        let op = small();
        let atom = op.apply_dirac(&op.domain().center()).unwrap();
        assert!((atom.norm_sqr() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn default_decays_span_attenuation_range() {
        let op = small();
        let att: Vec<f64> = op.plane_decays().iter().map(|d| (-d * 0.8).exp()).collect();
        assert!((att[0] - 0.9).abs() < 1e-12);
        assert!((att[3] - 0.3).abs() < 1e-12);
        assert!((op.sigma() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn pointwise_formula_at_pixel_centre() {
        // independent scalar evaluation of the Gaussian-times-decay formula
        let op = small();
        let (x, y) = op.pixel_center(5, 3);
        let t = [x, y, 0.0];
        let atom = op.apply_dirac(&t).unwrap();
        let sigma = op.sigma();
        let mut unnormalized_centre = 0.0;
        for d in op.plane_decays() {
            for px in 0..12 {
                for py in 0..10 {
                    let (cx, cy) = op.pixel_center(px, py);
                    let g =
                        (-((1.2 - cx).powi(2) + (1.0 - cy).powi(2)) / (2.0 * sigma * sigma)).exp();
                    unnormalized_centre += ((-d * 0.4).exp() * g).powi(2);
                }
            }
        }
        let c = 1.0 / unnormalized_centre.sqrt();
        for (p, d) in op.plane_decays().iter().enumerate() {
            for px in 0..12 {
                for py in 0..10 {
                    let (cx, cy) = op.pixel_center(px, py);
                    let expected = c
                        * (-d * 0.0f64).exp()
                        * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * sigma * sigma)).exp();
                    let got = atom[op.index(p, px, py)];
                    assert!((got.re - expected).abs() < 1e-14 && got.im == 0.0);
                }
            }
            // peak pixel of every z=0 plane carries the unattenuated value
            assert!((atom[op.index(p, 5, 3)].re - c).abs() < 1e-14);
        }
    }

    #[test]
    fn lateral_derivative_vanishes_at_pixel_centre() {
        let op = small();
        let (x, y) = op.pixel_center(7, 2);
        let jac = op.apply_dirac_jacobian(&[x, y, 0.3]).unwrap();
        for p in 0..4 {
            assert!(jac[0][op.index(p, 7, 2)].norm() < 1e-15);
            assert!(jac[1][op.index(p, 7, 2)].norm() < 1e-15);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let op = small();
        let h: Vec<f64> = op.domain().lengths().iter().map(|l| 1e-6 * l).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t = op.domain().sample(&mut rng);
            let exact = op.apply_dirac_jacobian(&t).unwrap();
            for (e, f) in exact.iter().zip(fd_jacobian(&op, &t, &h)) {
                assert!(rel_err(&f, e, 1e-12) < 1e-5);
            }
        }
    }

    #[test]
    fn fast_paths_agree_with_materialized_atoms() {
        let op = small();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = MeasurementVector::from_vec(
            (0..op.len())
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        );
        let t = [1.1, 0.3, 0.55];
        let fast = op.correlate(&t, &r).unwrap();
        assert!((fast.value - op.apply_dirac(&t).unwrap().inner(&r)).norm() < 1e-12);
        for (d, j) in fast
            .derivatives
            .iter()
            .zip(op.apply_dirac_jacobian(&t).unwrap())
        {
            assert!((d - j.inner(&r)).norm() < 1e-11);
        }

        let mut acc = r.clone();
        op.accumulate_dirac(&t, -0.75, &mut acc).unwrap();
        let mut expected = r.clone();
        expected.add_scaled(-0.75, &op.apply_dirac(&t).unwrap());
        assert!(rel_err(&acc, &expected, 1e-12) < 1e-14);

        let grid = Grid::new(op.domain().clone(), vec![5, 4, 3]).unwrap();
        let fast = op.correlate_grid(&grid, &r).unwrap();
        for (flat, (c, n)) in fast.iter().enumerate() {
            let atom = op.apply_dirac(&grid.point(flat)).unwrap();
            assert!((c - atom.inner(&r)).norm() < 1e-11);
            assert!((n - atom.norm_sqr().sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut cfg = MultiPlanePsfConfig::desk_geometry();
        cfg.lz = 0.0;
        assert!(MultiPlanePsf::new(&cfg).is_err());
        let mut cfg = MultiPlanePsfConfig::desk_geometry();
        cfg.plane_decays = Some(vec![1.0, 2.0]);
        assert!(MultiPlanePsf::new(&cfg).is_err());
        assert_eq!(MultiPlanePsfConfig::paper_geometry().measurements(), 16384);
    }
}
