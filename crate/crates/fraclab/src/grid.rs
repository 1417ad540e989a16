//! Uniform rectangular grids with endpoints, for finite-difference kernels.

use crate::error::{Error, Result};
use crate::numerics::{fd_d1, fd_d2, gregory_weights, product, unravel, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct RectGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Node counts per axis, endpoints included.
    pub n: Vec<usize>,
}

impl RectGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != n.len() || lo.is_empty() {
            return Err(Error::InvalidDomain("grid bounds and counts must agree".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) || n.iter().any(|&m| m < 6) {
            return Err(Error::InvalidDomain("need hi > lo and at least 6 nodes per axis".into()));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }
    pub fn count(&self) -> usize {
        product(&self.n)
    }
    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.n[axis] - 1) as f64
    }
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        self.lo[axis] + j as f64 * self.spacing(axis)
    }
    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        unravel(i, &self.n, &mut idx);
        idx.iter().enumerate().map(|(a, &j)| self.coord(a, j)).collect()
    }

    /// Tensor Gregory weights.
    pub fn weights(&self) -> Vec<f64> {
        let w: Vec<Vec<f64>> = (0..self.dim()).map(|a| gregory_weights(self.n[a], self.spacing(a))).collect();
        let mut idx = vec![0; self.dim()];
        (0..self.count())
            .map(|i| {
                unravel(i, &self.n, &mut idx);
                idx.iter().enumerate().map(|(a, &j)| w[a][j]).product()
            })
            .collect()
    }

    /// Mask of nodes at least `margin` (fraction of each side) away from the edges.
    pub fn inner_mask(&self, margin: f64) -> Vec<bool> {
        let mut idx = vec![0; self.dim()];
        (0..self.count())
            .map(|i| {
                unravel(i, &self.n, &mut idx);
                idx.iter().enumerate().all(|(a, &j)| {
                    let t = j as f64 / (self.n[a] - 1) as f64;
                    t >= margin - 1e-12 && t <= 1.0 - margin + 1e-12
                })
            })
            .collect()
    }
}

/// Complex samples on a RectGrid.
#[derive(Debug, Clone, PartialEq)]
pub struct RectField {
    pub grid: RectGrid,
    pub values: Vec<C64>,
}

impl RectField {
    pub fn zeros(grid: &RectGrid) -> Self {
        Self { grid: grid.clone(), values: vec![C64::new(0.0, 0.0); grid.count()] }
    }

    pub fn from_fn(grid: &RectGrid, f: impl Fn(&[f64]) -> C64) -> Self {
        Self { grid: grid.clone(), values: (0..grid.count()).map(|i| f(&grid.point(i))).collect() }
    }

    pub fn from_real_fn(grid: &RectGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    fn with(&self, values: Vec<C64>) -> Self {
        Self { grid: self.grid.clone(), values }
    }

    /// Fourth-order first derivative.
    pub fn d1(&self, axis: usize) -> Self {
        self.with(fd_d1(&self.values, &self.grid.n, axis, self.grid.spacing(axis)))
    }

    /// Fourth-order second derivative.
    pub fn d2(&self, axis: usize) -> Self {
        self.with(fd_d2(&self.values, &self.grid.n, axis, self.grid.spacing(axis)))
    }

    /// Mixed derivative ∂_a ∂_b (a != b) or ∂_a^2.
    pub fn d11(&self, a: usize, b: usize) -> Self {
        if a == b {
            self.d2(a)
        } else {
            self.d1(a).d1(b)
        }
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zeros(&self.grid);
        for a in 0..self.grid.dim() {
            out = out.add(&self.d2(a));
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        self.with(self.values.iter().zip(&o.values).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.with(self.values.iter().zip(&o.values).map(|(a, b)| a - b).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.with(self.values.iter().zip(&o.values).map(|(a, b)| a * b).collect())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.with(self.values.iter().map(|a| a * c).collect())
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.with(self.values.iter().map(|a| a * c).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Gregory quadrature of the samples.
    pub fn integral(&self) -> C64 {
        self.values.iter().zip(self.grid.weights()).map(|(v, w)| v * w).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().zip(self.grid.weights()).map(|(v, w)| v.norm() * w).sum()
    }

    /// Discrete L2 norm over the masked nodes (cell-volume weighted).
    pub fn masked_l2(&self, mask: &[bool]) -> f64 {
        let cell: f64 = (0..self.grid.dim()).map(|a| self.grid.spacing(a)).product();
        (self.values.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| v.norm_sqr()).sum::<f64>() * cell).sqrt()
    }

    pub fn masked_max(&self, mask: &[bool]) -> f64 {
        self.values.iter().zip(mask).filter(|(_, m)| **m).map(|(v, _)| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_quartic() {
        let g = RectGrid::new(vec![0.0, -1.0], vec![1.0, 1.0], vec![21, 31]).unwrap();
        let f = RectField::from_real_fn(&g, |x| x[0].powi(4) + x[0] * x[1] * x[1]);
        let l = f.laplacian();
        let e = RectField::from_real_fn(&g, |x| 12.0 * x[0] * x[0] + 2.0 * x[0]);
        assert!(l.sub(&e).max_abs() < 1e-9);
        let m = f.d11(0, 1);
        let em = RectField::from_real_fn(&g, |x| 2.0 * x[1]);
        assert!(m.sub(&em).max_abs() < 1e-9);
    }

    #[test]
    fn integral_and_mask() {
        let g = RectGrid::new(vec![0.0, 0.0], vec![2.0, 1.0], vec![41, 41]).unwrap();
        let f = RectField::from_real_fn(&g, |x| x[0] * x[1]);
        assert!((f.integral().re - 1.0).abs() < 1e-12);
        let mask = g.inner_mask(0.25);
        assert_eq!(mask.iter().filter(|m| **m).count(), 21 * 21);
    }
}
