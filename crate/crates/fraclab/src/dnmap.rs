//! DN maps, their linearization and matrices in a boundary basis.
//!
//! The boundary basis holds per-face tangential sine products plus one
//! constant per face. Output traces are mapped back to coefficients by an
//! L2 projection with the face quadrature weights.

use crate::eigenbasis::{boundary_inner, normal_derivative_synthesis, BoundaryField, BoxDomain, Face, SpectralField};
use crate::error::{Error, Result};
use crate::fracops::scale_by_power;
use crate::numerics::{product, sine_mode, unravel, C64};
use crate::solvers::{
    born_first, check_inverse_range, fractional_poisson, schrodinger_born, schrodinger_direct_with, DirectSolver, Potential,
};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Largest boundary basis accepted by the matrix assembly.
pub const MAX_BASIS: usize = 4096;

/// ∂_ν w_v with w_v = (-Δ_{D,0})^{-(1-s)} v, sampled on all faces.
pub fn neumann_of_w(v: &SpectralField, s: f64) -> Result<BoundaryField> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfRange(format!("s = {s} not in (0,1)")));
    }
    Ok(normal_derivative_synthesis(&scale_by_power(v, s - 1.0)))
}

/// Share of the Neumann-trace weight carried by the outer half of each axis'
/// modes. Large values signal truncation error in `neumann_of_w`.
pub fn neumann_tail_estimate(v: &SpectralField, s: f64) -> f64 {
    let d = &v.domain;
    let lam = d.eigenvalues();
    let modes = d.all_modes();
    let (mut tail, mut total) = (0.0, 0.0);
    for ((c, l), k) in v.coeffs.iter().zip(&lam).zip(&modes) {
        let w = (l.powf(s - 1.0) * c.norm()).powi(2) * l;
        total += w;
        if k.0.iter().zip(d.modes()).any(|(ki, ni)| 2 * ki > *ni) {
            tail += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (tail / total).sqrt()
    }
}

/// Λ_q^s g = ∂_ν w_{ṽ[g]}.
pub fn dn_apply(q: &Potential, s: f64, g: &BoundaryField) -> Result<BoundaryField> {
    let solver = DirectSolver::new(q, s)?;
    dn_apply_with(&solver, q, s, g)
}

fn dn_apply_with(solver: &DirectSolver, q: &Potential, s: f64, g: &BoundaryField) -> Result<BoundaryField> {
    let sol = schrodinger_direct_with(solver, q, g, s)?;
    neumann_of_w(&sol.correction, s)
}

/// (dΛ^s[q]) g = ∂_ν w_{v[g]} with v[g] the one-term Born solution.
pub fn dn_linearized_apply(q: &Potential, s: f64, g: &BoundaryField) -> Result<BoundaryField> {
    let base = fractional_poisson(g, s)?;
    let v = born_first(q, &base, s)?;
    neumann_of_w(&v, s)
}

/// Which boundary operator a matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DnKind {
    Full,
    Linearized,
    /// Truncated Born series with the given number of terms.
    Born { terms: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisFunction {
    pub face: Face,
    /// Tangential sine indices; empty for the face constant.
    pub modes: Vec<usize>,
}

/// Per-face tangential sines (indices 1..=modes per tangential axis) plus face constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryBasis {
    pub domain: BoxDomain,
    pub modes: usize,
    pub functions: Vec<BasisFunction>,
}

impl BoundaryBasis {
    pub fn new(domain: &BoxDomain, modes: usize) -> Result<Self> {
        let mut functions = Vec::new();
        let tdim = domain.dim() - 1;
        for face in domain.faces() {
            functions.push(BasisFunction { face, modes: vec![] });
            if tdim == 0 {
                continue;
            }
            let shape = vec![modes; tdim];
            let mut idx = vec![0; tdim];
            for i in 0..product(&shape) {
                unravel(i, &shape, &mut idx);
                functions.push(BasisFunction { face, modes: idx.iter().map(|k| k + 1).collect() });
            }
        }
        if functions.len() > MAX_BASIS {
            return Err(Error::OutOfRange(format!("boundary basis of {} exceeds {MAX_BASIS}", functions.len())));
        }
        Ok(Self { domain: domain.clone(), modes, functions })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Sobolev weight (1 + |m|^2)^{σ/2}; the face constant has m = 0.
    pub fn weight(&self, i: usize, sigma: f64) -> f64 {
        let m2: f64 = self.functions[i].modes.iter().map(|&m| (m * m) as f64).sum();
        (1.0 + m2).powf(0.5 * sigma)
    }

    /// Samples of basis function i (zero off its face).
    pub fn field(&self, i: usize) -> BoundaryField {
        let d = &self.domain;
        let bf = &self.functions[i];
        let tang = d.tangential_axes(bf.face);
        let area: f64 = tang.iter().map(|&a| d.lengths()[a]).product();
        BoundaryField::from_face_fn(d, |face, x| {
            if face != bf.face {
                return C64::new(0.0, 0.0);
            }
            if bf.modes.is_empty() {
                return C64::new(1.0 / area.sqrt(), 0.0);
            }
            let v: f64 = tang.iter().zip(&bf.modes).map(|(&a, &m)| sine_mode(d.lengths()[a], m, x[a])).product();
            C64::new(v, 0.0)
        })
    }

    pub fn synthesize(&self, coeffs: &[C64]) -> BoundaryField {
        let mut out = BoundaryField::zeros(&self.domain);
        for (i, c) in coeffs.iter().enumerate() {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            out = out.add(&self.field(i).scale(*c)).expect("same domain");
        }
        out
    }

    fn gram(&self) -> DMatrix<f64> {
        let fields: Vec<BoundaryField> = (0..self.len()).map(|i| self.field(i)).collect();
        let n = self.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                if self.functions[i].face != self.functions[j].face {
                    continue;
                }
                let v = boundary_inner(&fields[i], &fields[j]).expect("same domain").re;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// L2 projection coefficients of a boundary field.
    pub fn project(&self, f: &BoundaryField) -> Result<Vec<C64>> {
        let proj = Projector::new(self);
        proj.apply(self, f)
    }
}

struct Projector {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    fields: Vec<BoundaryField>,
}

impl Projector {
    fn new(basis: &BoundaryBasis) -> Self {
        Self { lu: basis.gram().lu(), fields: (0..basis.len()).map(|i| basis.field(i)).collect() }
    }

    fn apply(&self, basis: &BoundaryBasis, f: &BoundaryField) -> Result<Vec<C64>> {
        if f.domain != basis.domain {
            return Err(Error::ShapeMismatch("field and basis on different domains".into()));
        }
        let n = self.fields.len();
        let rhs: Vec<C64> = self.fields.iter().map(|b| boundary_inner(f, b).expect("same domain")).collect();
        let re = nalgebra::DVector::from_iterator(n, rhs.iter().map(|v| v.re));
        let im = nalgebra::DVector::from_iterator(n, rhs.iter().map(|v| v.im));
        let xr = self.lu.solve(&re).ok_or_else(|| Error::Degenerate("singular boundary Gram matrix".into()))?;
        let xi = self.lu.solve(&im).ok_or_else(|| Error::Degenerate("singular boundary Gram matrix".into()))?;
        Ok(xr.iter().zip(xi.iter()).map(|(a, b)| C64::new(*a, *b)).collect())
    }
}

/// Boundary operator in basis coordinates with the Sobolev weights it is measured in.
#[derive(Debug, Clone)]
pub struct DnMatrix {
    pub entries: DMatrix<C64>,
    pub sigma_in: f64,
    pub sigma_out: f64,
    pub basis: BoundaryBasis,
}

impl DnMatrix {
    pub fn apply(&self, coeffs: &[C64]) -> Vec<C64> {
        let x = nalgebra::DVector::from_column_slice(coeffs);
        (&self.entries * x).iter().copied().collect()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.entries.shape() != other.entries.shape() {
            return Err(Error::ShapeMismatch("matrices of different size".into()));
        }
        Ok(Self { entries: &self.entries - &other.entries, ..self.clone() })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { entries: self.entries.map(|v| v * a), ..self.clone() }
    }

    pub fn with_weights(&self, sigma_in: f64, sigma_out: f64) -> Self {
        Self { sigma_in, sigma_out, ..self.clone() }
    }
}

/// Assembles the matrix of Λ_q^s or dΛ^s[q] column by column.
pub fn dn_matrix(
    kind: DnKind,
    q: &Potential,
    s: f64,
    sigma_in: f64,
    sigma_out: f64,
    basis: &BoundaryBasis,
) -> Result<DnMatrix> {
    check_inverse_range(s)?;
    if basis.domain != *q.domain() {
        return Err(Error::ShapeMismatch("basis and potential on different domains".into()));
    }
    let n = basis.len();
    let proj = Projector::new(basis);
    let solver = match kind {
        DnKind::Full => Some(DirectSolver::new(q, s)?),
        _ => None,
    };
    let cols: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let g = &proj.fields[i];
            let out = match (&solver, kind) {
                (Some(sv), _) => dn_apply_with(sv, q, s, g)?,
                (None, DnKind::Born { terms }) => neumann_of_w(&schrodinger_born(q, g, s, terms)?.correction, s)?,
                (None, _) => dn_linearized_apply(q, s, g)?,
            };
            proj.apply(basis, &out)
        })
        .collect::<Result<_>>()?;
    let entries = DMatrix::from_fn(n, n, |r, c| cols[c][r]);
    Ok(DnMatrix { entries, sigma_in, sigma_out, basis: basis.clone() })
}

/// Largest singular value of W_out A W_in^{-1}.
pub fn weighted_operator_norm(m: &DnMatrix) -> f64 {
    let n = m.entries.nrows();
    if n == 0 {
        return 0.0;
    }
    let w = DMatrix::from_fn(n, m.entries.ncols(), |r, c| {
        m.entries[(r, c)] * (m.basis.weight(r, m.sigma_out) / m.basis.weight(c, m.sigma_in))
    });
    if w.iter().all(|v| *v == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    w.singular_values().max()
}

/// One row of the Fréchet experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetRow {
    pub eps: f64,
    pub sup_norm: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct FrechetReport {
    pub rows: Vec<FrechetRow>,
    /// Least-squares slope of log(gap) against log(eps) over rows with eps > 0.
    pub slope: f64,
    /// max gap / eps^2 over rows with eps > 0.
    pub max_quadratic_ratio: f64,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// ‖Λ_{εq} - Λ_0 - dΛ[εq]‖ in the H^{s-1/2} -> H^{1/2} weighting over a list of scales.
pub fn frechet_experiment(q: &Potential, s: f64, scales: &[f64], basis: &BoundaryBasis) -> Result<FrechetReport> {
    check_inverse_range(s)?;
    let lam1 = q.domain().eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    let limit = 0.5 * lam1.powf(s);
    for &e in scales {
        let sup = e.abs() * q.sup_bound();
        if sup > limit {
            return Err(Error::Smallness { sup, limit });
        }
    }
    let (sig_in, sig_out) = (s - 0.5, 0.5);
    let lin = dn_matrix(DnKind::Linearized, q, s, sig_in, sig_out, basis)?;
    let mut rows = Vec::with_capacity(scales.len());
    for &e in scales {
        let gap = if e == 0.0 {
            0.0
        } else {
            let full = dn_matrix(DnKind::Full, &q.scale(e), s, sig_in, sig_out, basis)?;
            weighted_operator_norm(&full.sub(&lin.scaled(e))?)
        };
        rows.push(FrechetRow { eps: e, sup_norm: e.abs() * q.sup_bound(), gap });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.eps.abs()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let slope = loglog_slope(&xs, &ys);
    let max_quadratic_ratio =
        rows.iter().filter(|r| r.eps != 0.0).map(|r| r.gap / (r.eps * r.eps)).fold(0.0, f64::max);
    Ok(FrechetReport { rows, slope, max_quadratic_ratio })
}
