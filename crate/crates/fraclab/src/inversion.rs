//! Fourier sampling of potentials from linearized DN maps, reconstruction and
//! logarithmic stability.
//!
//! Exponentials are centred at the middle of the box, u = e^{α·(x-c)}, so that
//! their magnitudes stay balanced on the boundary. The product u_h u_g equals
//! e^{-iξ·(x-c)} and the phase e^{-iξ·c} is restored afterwards.

use crate::dnmap::{dn_matrix, weighted_operator_norm, BoundaryBasis, DnKind};
use crate::eigenbasis::{boundary_pairing, BoundaryField, BoxDomain, GridField};
use crate::error::{Error, Result};
use crate::numerics::{gregory_weights, product, unravel, C64};
use crate::solvers::{check_inverse_range, Potential};
use rayon::prelude::*;

/// Harmonic exponentials whose product is a pure Fourier mode.
#[derive(Debug, Clone)]
pub struct ExponentialPair {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
    pub center: Vec<f64>,
    pub g: BoundaryField,
    pub h: BoundaryField,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn shifted_exp(a: &[C64], c: &[f64], x: &[f64]) -> C64 {
    a.iter().zip(x.iter().zip(c)).map(|(ai, (xi, ci))| ai * (xi - ci)).sum::<C64>().exp()
}

/// η is the first standard basis vector not parallel to ξ, with ξ projected
/// out, normalized and scaled to |ξ|.
pub fn choose_eta(xi: &[f64]) -> Result<Vec<f64>> {
    let n = xi.len();
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Degenerate("ξ = 0 has no exponential pair".into()));
    }
    if n < 2 {
        return Err(Error::Degenerate("no η orthogonal to ξ in one dimension".into()));
    }
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let proj = xi[i] / (norm * norm);
        let mut v: Vec<f64> = e.iter().zip(xi).map(|(a, b)| a - proj * b).collect();
        let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if vn > 1e-8 {
            v.iter_mut().for_each(|a| *a *= norm / vn);
            return Ok(v);
        }
    }
    Err(Error::Degenerate("no admissible η".into()))
}

pub fn make_exponential_pair(domain: &BoxDomain, xi: &[f64]) -> Result<ExponentialPair> {
    if xi.len() != domain.dim() {
        return Err(Error::ShapeMismatch("ξ dimension differs from domain".into()));
    }
    let eta = choose_eta(xi)?;
    let alpha: Vec<C64> = eta.iter().zip(xi).map(|(e, x)| C64::new(0.5 * e, -0.5 * x)).collect();
    let beta: Vec<C64> = eta.iter().zip(xi).map(|(e, x)| C64::new(-0.5 * e, -0.5 * x)).collect();
    let center: Vec<f64> = domain.lengths().iter().map(|l| 0.5 * l).collect();
    let g = BoundaryField::from_fn(domain, |x| shifted_exp(&beta, &center, x));
    let h = BoundaryField::from_fn(domain, |x| shifted_exp(&alpha, &center, x));
    Ok(ExponentialPair { xi: xi.to_vec(), eta, alpha, beta, center, g, h })
}

impl ExponentialPair {
    pub fn alpha_null(&self) -> f64 {
        dot(&self.alpha, &self.alpha).norm()
    }
    pub fn beta_null(&self) -> f64 {
        dot(&self.beta, &self.beta).norm()
    }
    pub fn u_g(&self, x: &[f64]) -> C64 {
        shifted_exp(&self.beta, &self.center, x)
    }
    pub fn u_h(&self, x: &[f64]) -> C64 {
        shifted_exp(&self.alpha, &self.center, x)
    }
    /// e^{-iξ·c}, the phase removed by centring.
    pub fn phase(&self) -> C64 {
        let a: f64 = self.xi.iter().zip(&self.center).map(|(x, c)| x * c).sum();
        C64::new(0.0, -a).exp()
    }
}

/// Boundary operator signature used by sampling and reconstruction.
pub type BoundaryOp<'a> = dyn Fn(&BoundaryField) -> Result<BoundaryField> + Sync + 'a;

/// Estimate of (χ_Ω q)^(ξ) = ∫_Ω e^{-iξ·x} q from -<h, dn(g)> (bilinear pairing).
pub fn fourier_sample(dn: &BoundaryOp, domain: &BoxDomain, xi: &[f64]) -> Result<C64> {
    if xi.iter().all(|v| *v == 0.0) {
        let one = BoundaryField::from_real_fn(domain, |_| 1.0);
        return Ok(-boundary_pairing(&one, &dn(&one)?)?);
    }
    let pair = make_exponential_pair(domain, xi)?;
    let pairing = boundary_pairing(&pair.h, &dn(&pair.g)?)?;
    Ok(-pairing * pair.phase())
}

/// Tensor Gregory quadrature of a closed-grid array over the box.
pub fn closed_volume_integral(domain: &BoxDomain, closed: &[C64]) -> C64 {
    let shape = domain.closed_shape();
    let w: Vec<Vec<f64>> = (0..domain.dim()).map(|a| gregory_weights(shape[a], domain.spacing(a))).collect();
    let mut idx = vec![0; domain.dim()];
    let mut acc = C64::new(0.0, 0.0);
    for (i, v) in closed.iter().enumerate() {
        unravel(i, &shape, &mut idx);
        let wt: f64 = idx.iter().enumerate().map(|(a, &j)| w[a][j]).product();
        acc += v * wt;
    }
    acc
}

/// Both sides of the Alessandrini identity.
#[derive(Debug, Clone, Copy)]
pub struct AlessandriniReport {
    /// <h, (dΛ[q]) g>
    pub pairing: C64,
    /// ∫ q u_h u_g
    pub volume: C64,
    pub residual: f64,
    pub relative: f64,
}

/// |<h,(dΛ^s[q])g> + ∫ q u_h u_g| with the centred exponentials.
pub fn alessandrini_report(q: &Potential, s: f64, xi: &[f64]) -> Result<AlessandriniReport> {
    check_inverse_range(s)?;
    let d = q.domain();
    let pair = make_exponential_pair(d, xi)?;
    let dn = crate::dnmap::dn_linearized_apply(q, s, &pair.g)?;
    let pairing = boundary_pairing(&pair.h, &dn)?;
    let prod: Vec<C64> = (0..q.closed_values().len())
        .map(|i| {
            let x = d.closed_point(i);
            q.closed_values()[i] * pair.u_h(&x) * pair.u_g(&x)
        })
        .collect();
    let volume = closed_volume_integral(d, &prod);
    let residual = (pairing + volume).norm();
    let relative = if volume.norm() > 0.0 { residual / volume.norm() } else { residual };
    Ok(AlessandriniReport { pairing, volume, residual, relative })
}

pub fn alessandrini_residual(q: &Potential, s: f64, xi: &[f64]) -> Result<f64> {
    if q.is_zero() {
        check_inverse_range(s)?;
        return Ok(0.0);
    }
    Ok(alessandrini_report(q, s, xi)?.residual)
}

/// Dual lattice of the periodization box [0, P_1) x ... x [0, P_n).
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub periods: Vec<f64>,
}

impl Lattice {
    /// Box of side (1 + pad) L_a per axis; pad = 1 pads by one domain width.
    pub fn padded(domain: &BoxDomain, pad: f64) -> Result<Self> {
        if !(pad >= 0.0) {
            return Err(Error::OutOfRange("padding must be nonnegative".into()));
        }
        Ok(Self { periods: domain.lengths().iter().map(|l| l * (1.0 + pad)).collect() })
    }

    pub fn check_embedding(&self, domain: &BoxDomain) -> Result<()> {
        if self.periods.len() != domain.dim()
            || self.periods.iter().zip(domain.lengths()).any(|(p, l)| *p < *l * (1.0 - 1e-12))
        {
            return Err(Error::Resolution("periodization box does not contain the domain".into()));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.periods.iter().product()
    }

    /// Circumradius of the periodization box.
    pub fn radius(&self) -> f64 {
        0.5 * self.periods.iter().map(|p| p * p).sum::<f64>().sqrt()
    }

    /// Lattice points 2π m / P with |ξ| <= ρ.
    pub fn points_within(&self, rho: f64) -> Vec<Vec<f64>> {
        let n = self.periods.len();
        let steps: Vec<f64> = self.periods.iter().map(|p| 2.0 * std::f64::consts::PI / p).collect();
        let bounds: Vec<i64> = steps.iter().map(|s| (rho / s).floor() as i64).collect();
        let shape: Vec<usize> = bounds.iter().map(|b| (2 * b + 1) as usize).collect();
        let mut idx = vec![0; n];
        let mut out = Vec::new();
        for i in 0..product(&shape) {
            unravel(i, &shape, &mut idx);
            let xi: Vec<f64> = (0..n).map(|a| (idx[a] as i64 - bounds[a]) as f64 * steps[a]).collect();
            if xi.iter().map(|v| v * v).sum::<f64>().sqrt() <= rho * (1.0 + 1e-12) {
                out.push(xi);
            }
        }
        out
    }
}

/// Samples q^ on the lattice inside |ξ| <= ρ and sums the Fourier series on the domain grid.
pub fn reconstruct(dn: &BoundaryOp, domain: &BoxDomain, lattice: &Lattice, rho: f64) -> Result<GridField> {
    lattice.check_embedding(domain)?;
    let pts = lattice.points_within(rho);
    let samples: Vec<C64> = pts.par_iter().map(|xi| fourier_sample(dn, domain, xi)).collect::<Result<_>>()?;
    Ok(fourier_synthesis(domain, lattice, &pts, &samples))
}

/// (1/|Π|) Σ c(ξ) e^{iξ·x} on the interior grid.
pub fn fourier_synthesis(domain: &BoxDomain, lattice: &Lattice, pts: &[Vec<f64>], samples: &[C64]) -> GridField {
    let n = domain.dim();
    let nodes: Vec<Vec<f64>> = (0..n).map(|a| domain.interior_nodes(a)).collect();
    let vol = lattice.volume();
    let mut out = GridField::zeros(domain);
    let mut idx = vec![0; n];
    for (xi, c) in pts.iter().zip(samples) {
        let tables: Vec<Vec<C64>> =
            (0..n).map(|a| nodes[a].iter().map(|x| C64::new(0.0, xi[a] * x).exp()).collect()).collect();
        for (i, v) in out.values.iter_mut().enumerate() {
            unravel(i, domain.grid(), &mut idx);
            let e: C64 = (0..n).map(|a| tables[a][idx[a]]).product();
            *v += c * e / vol;
        }
    }
    out
}

/// Samples on a uniform periodic grid of the periodization box.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    pub periods: Vec<f64>,
    pub shape: Vec<usize>,
    pub values: Vec<C64>,
}

impl PeriodicField {
    pub fn from_fn(periods: &[f64], shape: &[usize], f: impl Fn(&[f64]) -> C64) -> Self {
        let mut idx = vec![0; shape.len()];
        let values = (0..product(shape))
            .map(|i| {
                unravel(i, shape, &mut idx);
                let x: Vec<f64> = idx.iter().enumerate().map(|(a, &j)| j as f64 * periods[a] / shape[a] as f64).collect();
                f(&x)
            })
            .collect();
        Self { periods: periods.to_vec(), shape: shape.to_vec(), values }
    }

    /// χ_Ω f on the periodic grid (zero outside the closed domain).
    pub fn extend_by_zero(domain: &BoxDomain, lattice: &Lattice, shape: &[usize], f: impl Fn(&[f64]) -> f64) -> Self {
        let l = domain.lengths().to_vec();
        Self::from_fn(&lattice.periods, shape, |x| {
            if x.iter().zip(&l).all(|(xi, li)| *xi <= *li) {
                C64::new(f(x), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn cell_volume(&self) -> f64 {
        self.periods.iter().zip(&self.shape).map(|(p, n)| p / *n as f64).product()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_volume()).sqrt()
    }
}

/// Discrete H^{-1} norm sqrt((1/|Π|) Σ |f^(ξ)|^2 / (1 + |ξ|^2)).
pub fn hminus1_norm(f: &PeriodicField) -> f64 {
    let spec = crate::numerics::fft_axes(&f.values, &f.shape, false);
    let n = f.shape.len();
    let cell = f.cell_volume();
    let vol: f64 = f.periods.iter().product();
    let mut idx = vec![0; n];
    let mut acc = 0.0;
    for (i, v) in spec.iter().enumerate() {
        unravel(i, &f.shape, &mut idx);
        let k2: f64 = (0..n)
            .map(|a| {
                let m = idx[a] as i64;
                let m = if 2 * m > f.shape[a] as i64 { m - f.shape[a] as i64 } else { m };
                (2.0 * std::f64::consts::PI * m as f64 / f.periods[a]).powi(2)
            })
            .sum();
        acc += (v * cell).norm_sqr() / (1.0 + k2);
    }
    (acc / vol).sqrt()
}

/// Paper's choice ρ = |log t| / (6R), or a fixed cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoRule {
    Logarithmic,
    Fixed(f64),
}

/// w(t) = 1/|log t| for 0 < t < 1/e.
pub fn log_modulus(t: f64) -> Option<f64> {
    if t > 0.0 && t < (-1.0f64).exp() {
        Some(1.0 / t.ln().abs())
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRecord {
    pub t: f64,
    pub err: f64,
    /// w(t) when 0 < t < 1/e.
    pub bound: Option<f64>,
    pub rho: f64,
    pub l2_bound: f64,
    pub sup_bound: f64,
}

/// Operator weighting used for t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weighting {
    pub sigma_in: f64,
    pub sigma_out: f64,
}

impl Weighting {
    pub const HALF: Weighting = Weighting { sigma_in: 0.5, sigma_out: -0.5 };
    pub const UNWEIGHTED: Weighting = Weighting { sigma_in: 0.0, sigma_out: 0.0 };
}

/// t from the linearized DN matrices, err as the H^{-1} norm of χ_Ω(q1 - q2).
#[allow(clippy::too_many_arguments)]
pub fn stability_experiment(
    q1: &Potential,
    q2: &Potential,
    s: f64,
    rule: RhoRule,
    basis: &BoundaryBasis,
    weighting: Weighting,
    lattice: &Lattice,
    fft_shape: &[usize],
) -> Result<StabilityRecord> {
    check_inverse_range(s)?;
    let m1 = dn_matrix(DnKind::Linearized, q1, s, weighting.sigma_in, weighting.sigma_out, basis)?;
    let m2 = dn_matrix(DnKind::Linearized, q2, s, weighting.sigma_in, weighting.sigma_out, basis)?;
    let t = weighted_operator_norm(&m1.sub(&m2)?);
    let diff = q1.add(&q2.scale(-1.0))?;
    let err = hminus1_norm(&periodic_of_potential(&diff, lattice, fft_shape));
    let bound = log_modulus(t);
    let rho = match rule {
        RhoRule::Fixed(r) => r,
        RhoRule::Logarithmic => {
            if t > 0.0 {
                t.ln().abs() / (6.0 * lattice.radius())
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(StabilityRecord {
        t,
        err,
        bound,
        rho,
        l2_bound: q1.l2_bound().max(q2.l2_bound()),
        sup_bound: q1.sup_bound().max(q2.sup_bound()),
    })
}

/// Interpolates a potential onto the periodic grid by multilinear interpolation
/// of its closed-grid samples, zero outside the domain.
pub fn periodic_of_potential(q: &Potential, lattice: &Lattice, shape: &[usize]) -> PeriodicField {
    let d = q.domain();
    let cshape = d.closed_shape();
    let closed = q.closed_values();
    let n = d.dim();
    PeriodicField::extend_by_zero(d, lattice, shape, |x| {
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for a in 0..n {
            let p = x[a] / d.spacing(a);
            let j = (p.floor() as usize).min(cshape[a] - 2);
            base[a] = j;
            frac[a] = p - j as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = vec![0usize; n];
            for a in 0..n {
                let bit = (corner >> a) & 1;
                idx[a] = base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            acc += w * closed[crate::numerics::ravel(&idx, &cshape)].re;
        }
        acc
    })
}

/// Sweep summary: the sweep-wide constant C = max err / w(t).
#[derive(Debug, Clone)]
pub struct StabilitySweep {
    pub records: Vec<StabilityRecord>,
    pub constant: f64,
    pub monotone: bool,
    pub bounded: bool,
}

/// Boundedness check of err / w(t) over a sweep ordered by decreasing ε.
pub fn summarize_sweep(records: Vec<StabilityRecord>) -> StabilitySweep {
    let ratios: Vec<f64> = records.iter().filter_map(|r| r.bound.map(|w| r.err / w)).collect();
    let constant = ratios.iter().cloned().fold(0.0, f64::max);
    let finite = ratios.len() == records.len() && ratios.iter().all(|v| v.is_finite());
    // Not growing as t -> 0: the last ratio does not exceed the first.
    let bounded = finite && ratios.last().zip(ratios.first()).map(|(l, f)| *l <= *f * (1.0 + 1e-9)).unwrap_or(false);
    let mut sorted: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.err)).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let monotone = sorted.windows(2).all(|w| w[1].1 >= w[0].1);
    StabilitySweep { records, constant, monotone, bounded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pair_invariants() {
        let d = BoxDomain::cube(2, 4).unwrap();
        let p = make_exponential_pair(&d, &[1.0, 0.0]).unwrap();
        assert!((p.eta[0]).abs() < 1e-15 && (p.eta[1] - 1.0).abs() < 1e-15);
        assert!((p.alpha[0] - C64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((p.alpha[1] - C64::new(0.5, 0.0)).norm() < 1e-15);
        for xi in [[1.0, 0.0], [2.0, -3.0], [0.3, 7.1]] {
            let p = make_exponential_pair(&d, &xi).unwrap();
            assert!(p.alpha_null() < 1e-12 && p.beta_null() < 1e-12);
            let nx = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            let na = p.alpha.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            assert!((na - nx / 2f64.sqrt()).abs() < 1e-12);
            for x in [[0.1, 0.2], [3.0, 1.0]] {
                let prod = p.u_h(&x) * p.u_g(&x) * p.phase();
                let e = C64::new(0.0, -(xi[0] * x[0] + xi[1] * x[1])).exp();
                assert!((prod - e).norm() < 1e-12);
            }
        }
        assert!(make_exponential_pair(&d, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn hminus1_single_harmonic() {
        let periods = [2.0 * PI, 2.0 * PI];
        let f = PeriodicField::from_fn(&periods, &[32, 32], |x| C64::new(0.0, x[0] + 2.0 * x[1]).exp() * 3.0);
        let expected = 3.0 * (4.0 * PI * PI / 6.0f64).sqrt();
        assert!((hminus1_norm(&f) - expected).abs() < 1e-10);
        let z = PeriodicField::from_fn(&periods, &[8, 8], |_| C64::new(0.0, 0.0));
        assert_eq!(hminus1_norm(&z), 0.0);
        let r = PeriodicField::from_fn(&periods, &[16, 16], |x| C64::new((x[0] * 3.1).sin() + x[1], 0.0));
        assert!(hminus1_norm(&r) <= r.l2_norm());
    }

    #[test]
    fn lattice_points() {
        let d = BoxDomain::cube(2, 4).unwrap();
        let l = Lattice::padded(&d, 1.0).unwrap();
        let pts = l.points_within(1.0);
        assert_eq!(pts.len(), 5);
        assert!((l.radius() - 2f64.sqrt() * PI).abs() < 1e-12);
        assert!(Lattice { periods: vec![1.0, 1.0] }.check_embedding(&d).is_err());
    }

    #[test]
    fn modulus() {
        assert!(log_modulus(0.5).is_none());
        assert!(log_modulus(0.0).is_none());
        assert!((log_modulus(1e-3).unwrap() - 1.0 / 1e-3f64.ln().abs()).abs() < 1e-15);
    }
}
