//! Complex geometrical optics amplitudes for linear null phases.
//!
//! Everything lives in rotated coordinates y = (y1, y2, y'') with y1 along e1 and
//! y2 along η; z = y1 + i y2. The phase is Φ = sign·(y1 + i y2), so the transport
//! operator T = 2∇Φ·∇ is 4·sign·∂̄ and acts on the first two grid axes only.
//! Trailing axes are parameters.
//!
//! Derivatives are fourth-order centred differences (one-sided near the edges), so
//! residuals are reported on an inner sub-rectangle.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{RectField, RectGrid};
use crate::numerics::{fft_axes, product, C64};

/// Fraction of each side dropped when measuring residuals.
pub const RESIDUAL_MARGIN: f64 = 0.25;
/// Relative tolerance for leading-equation and recursion residuals.
pub const TRANSPORT_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPhase {
    pub e1: Vec<f64>,
    pub eta: Vec<f64>,
    pub sign: f64,
    pub h: f64,
}

impl LinearPhase {
    pub fn new(e1: Vec<f64>, eta: Vec<f64>, sign: f64, h: f64) -> Result<Self> {
        if e1.len() != eta.len() || e1.len() < 2 {
            return Err(Error::ShapeMismatch("phase vectors need equal length >= 2".into()));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::OutOfRange(format!("phase sign must be +1 or -1, got {sign}")));
        }
        if !(h > 0.0) {
            return Err(Error::OutOfRange(format!("h must be positive, got {h}")));
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let defect = (dot(&e1, &e1) - 1.0).abs().max((dot(&eta, &eta) - 1.0).abs()).max(dot(&e1, &eta).abs());
        if defect > 1e-12 {
            return Err(Error::NotOrthonormal(defect));
        }
        Ok(Self { e1, eta, sign, h })
    }

    /// Phase along the first two coordinate axes.
    pub fn standard(dim: usize, sign: f64, h: f64) -> Result<Self> {
        let mut e1 = vec![0.0; dim];
        let mut eta = vec![0.0; dim];
        e1[0] = 1.0;
        if dim > 1 {
            eta[1] = 1.0;
        }
        Self::new(e1, eta, sign, h)
    }

    /// ∇Φ = sign·(e1 + iη).
    pub fn gradient(&self) -> Vec<C64> {
        self.e1.iter().zip(&self.eta).map(|(&a, &b)| C64::new(a, b) * self.sign).collect()
    }

    /// ∇Φ·∇Φ, zero for orthonormal e1, η.
    pub fn null_defect(&self) -> C64 {
        self.gradient().iter().map(|g| g * g).sum()
    }

    /// Rotated coordinates (y1, y2) = (x·e1, x·η).
    pub fn rotate(&self, x: &[f64]) -> (f64, f64) {
        let y1 = x.iter().zip(&self.e1).map(|(a, b)| a * b).sum();
        let y2 = x.iter().zip(&self.eta).map(|(a, b)| a * b).sum();
        (y1, y2)
    }

    /// Φ(y) in rotated coordinates.
    pub fn value_rotated(&self, y: &[f64]) -> C64 {
        C64::new(y[0], y[1]) * self.sign
    }
}

/// T f = 2∇Φ·∇f = 2·sign·(∂1 + i∂2) f.
pub fn transport_apply(f: &RectField, phase: &LinearPhase) -> RectField {
    f.d1(0).add(&f.d1(1).scale(C64::new(0.0, 1.0))).scale_re(2.0 * phase.sign)
}

/// ∂_z f = (∂1 − i∂2) f / 2.
fn dz(f: &RectField) -> RectField {
    f.d1(0).sub(&f.d1(1).scale(C64::new(0.0, 1.0))).scale_re(0.5)
}

fn check_rotated_grid(grid: &RectGrid) -> Result<()> {
    if grid.dim() < 2 {
        return Err(Error::InvalidDomain("rotated grid needs at least two axes".into()));
    }
    Ok(())
}

/// Cauchy transform (1/π)∫ f(w)/(z − w) dA(w) over the first two axes, per slice.
///
/// Gregory weights, zero-padded FFT convolution with the sampled kernel, and the
/// missing self-cell contribution −(cell/π)∂_z f.
pub fn cauchy_transform(f: &RectField) -> Result<RectField> {
    let grid = &f.grid;
    check_rotated_grid(grid)?;
    let (n1, n2) = (grid.n[0], grid.n[1]);
    let (h1, h2) = (grid.spacing(0), grid.spacing(1));
    let (p1, p2) = ((2 * n1 - 1).next_power_of_two(), (2 * n2 - 1).next_power_of_two());
    let mut kernel = vec![C64::new(0.0, 0.0); p1 * p2];
    for a in 0..p1 {
        let da = if a < n1 { a as f64 } else if a + n1 > p1 { a as f64 - p1 as f64 } else { continue };
        for b in 0..p2 {
            let db = if b < n2 { b as f64 } else if b + n2 > p2 { b as f64 - p2 as f64 } else { continue };
            if a == 0 && b == 0 {
                continue;
            }
            kernel[a * p2 + b] = C64::new(1.0, 0.0) / (C64::new(da * h1, db * h2) * std::f64::consts::PI);
        }
    }
    let kernel_hat = fft_axes(&kernel, &[p1, p2], false);
    let w = RectGrid::new(grid.lo[..2].to_vec(), grid.hi[..2].to_vec(), vec![n1, n2])?.weights();
    let corr = dz(f);
    let slices = product(&grid.n[2..]);
    let plane = n1 * n2;
    let norm = 1.0 / (p1 * p2) as f64;
    // Values are stored row-major, so slice s at fixed trailing index has stride `slices`.
    let results: Vec<Vec<C64>> = (0..slices)
        .into_par_iter()
        .map(|s| {
            let mut buf = vec![C64::new(0.0, 0.0); p1 * p2];
            for i in 0..n1 {
                for j in 0..n2 {
                    buf[i * p2 + j] = f.values[(i * n2 + j) * slices + s] * w[i * n2 + j];
                }
            }
            let spec = fft_axes(&buf, &[p1, p2], false);
            let prod: Vec<C64> = spec.iter().zip(&kernel_hat).map(|(a, b)| a * b).collect();
            let conv = fft_axes(&prod, &[p1, p2], true);
            (0..plane)
                .map(|k| {
                    let (i, j) = (k / n2, k % n2);
                    conv[i * p2 + j] * norm
                        - corr.values[k * slices + s] * (w[k] / std::f64::consts::PI)
                })
                .collect()
        })
        .collect();
    let mut out = RectField::zeros(grid);
    for (s, vals) in results.into_iter().enumerate() {
        for (k, v) in vals.into_iter().enumerate() {
            out.values[k * slices + s] = v;
        }
    }
    Ok(out)
}

fn subtract_plane_means(f: &mut RectField) -> Result<()> {
    let grid = f.grid.clone();
    let (n1, n2) = (grid.n[0], grid.n[1]);
    let w = RectGrid::new(grid.lo[..2].to_vec(), grid.hi[..2].to_vec(), vec![n1, n2])?.weights();
    let area: f64 = w.iter().sum();
    let slices = product(&grid.n[2..]);
    for s in 0..slices {
        let mean: C64 = (0..n1 * n2).map(|k| f.values[k * slices + s] * w[k]).sum::<C64>() / area;
        for k in 0..n1 * n2 {
            f.values[k * slices + s] -= mean;
        }
    }
    Ok(())
}

/// Particular solution of T a = f (order 1) or T² a = f (order 2).
///
/// a = sign·C[f]/4 with the per-slice rectangle mean removed; order 2 iterates.
pub fn transport_solve(f: &RectField, phase: &LinearPhase, order: usize) -> Result<RectField> {
    if order != 1 && order != 2 {
        return Err(Error::OutOfRange(format!("transport order must be 1 or 2, got {order}")));
    }
    check_rotated_grid(&f.grid)?;
    let mut cur = f.clone();
    for _ in 0..order {
        if cur.max_abs() == 0.0 {
            return Ok(RectField::zeros(&f.grid));
        }
        cur = cauchy_transform(&cur)?.scale_re(0.25 * phase.sign);
        subtract_plane_means(&mut cur)?;
    }
    Ok(cur)
}

/// Relative residual ‖T^order a − f‖/‖f‖ on the inner sub-rectangle.
pub fn transport_residual(a: &RectField, f: &RectField, phase: &LinearPhase, order: usize) -> f64 {
    let mut ta = transport_apply(a, phase);
    if order == 2 {
        ta = transport_apply(&ta, phase);
    }
    let mask = a.grid.inner_mask(RESIDUAL_MARGIN);
    let den = f.masked_l2(&mask);
    let num = ta.sub(f).masked_l2(&mask);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeKind {
    Harmonic,
    Biharmonic,
}

#[derive(Debug, Clone)]
pub struct CgoAmplitudes {
    pub phase: LinearPhase,
    pub kind: AmplitudeKind,
    pub amps: Vec<RectField>,
    /// Recursion residual per level (entry 0 is the leading equation).
    pub residuals: Vec<f64>,
}

impl CgoAmplitudes {
    pub fn order(&self) -> usize {
        self.amps.len()
    }
    pub fn grid(&self) -> &RectGrid {
        &self.amps[0].grid
    }
}

/// (TΔ + ΔT) f.
pub fn anticommutator(f: &RectField, phase: &LinearPhase) -> RectField {
    transport_apply(&f.laplacian(), phase).add(&transport_apply(f, phase).laplacian())
}

fn relative(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Amplitudes a_0..a_{m−1} with T a_j = −Δa_{j−1}, or b_j with
/// T² b_j = −(TΔ + ΔT) b_{j−1} − Δ² b_{j−2}. `seed = None` means a_0 ≡ 1.
pub fn build_amplitudes(
    kind: AmplitudeKind,
    phase: &LinearPhase,
    m: usize,
    grid: &RectGrid,
    seed: Option<RectField>,
) -> Result<CgoAmplitudes> {
    if m == 0 {
        return Err(Error::OutOfRange("amplitude order must be >= 1".into()));
    }
    check_rotated_grid(grid)?;
    let seed = seed.unwrap_or_else(|| RectField::from_fn(grid, |_| C64::new(1.0, 0.0)));
    if &seed.grid != grid {
        return Err(Error::ShapeMismatch("seed grid differs from amplitude grid".into()));
    }
    let mask = grid.inner_mask(RESIDUAL_MARGIN);
    let order = if kind == AmplitudeKind::Harmonic { 1 } else { 2 };
    let zero = RectField::zeros(grid);
    let lead = {
        let mut t = transport_apply(&seed, phase);
        if order == 2 {
            t = transport_apply(&t, phase);
        }
        relative(t.masked_l2(&mask), seed.masked_l2(&mask))
    };
    if lead > TRANSPORT_TOL {
        return Err(Error::OutOfRange(format!("seed fails its leading equation: residual {lead:.3e}")));
    }
    let mut amps = vec![seed];
    let mut residuals = vec![lead];
    for j in 1..m {
        let prev = &amps[j - 1];
        let rhs = match kind {
            AmplitudeKind::Harmonic => prev.laplacian().scale_re(-1.0),
            AmplitudeKind::Biharmonic => {
                let prev2 = if j >= 2 { &amps[j - 2] } else { &zero };
                anticommutator(prev, phase).add(&prev2.laplacian().laplacian()).scale_re(-1.0)
            }
        };
        let a = transport_solve(&rhs, phase, order)?;
        let r = transport_residual(&a, &rhs, phase, order);
        if r > TRANSPORT_TOL {
            return Err(Error::OutOfRange(format!("recursion residual {r:.3e} at level {j}")));
        }
        residuals.push(r);
        amps.push(a);
    }
    Ok(CgoAmplitudes { phase: phase.clone(), kind, amps, residuals })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub h: f64,
    /// ‖LHS‖ on the inner sub-rectangle.
    pub lhs_norm: f64,
    /// ‖predicted right side‖.
    pub rhs_norm: f64,
    /// ‖LHS − RHS‖ / ‖RHS‖ (absolute when RHS vanishes).
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTable {
    pub rows: Vec<ResidualRow>,
    /// Log–log slope of ‖LHS‖ against h (NaN when LHS vanishes).
    pub slope: f64,
    pub expected_slope: f64,
}

fn combine(amps: &[RectField], h: f64) -> RectField {
    let mut out = RectField::zeros(&amps[0].grid);
    for (j, a) in amps.iter().enumerate() {
        out = out.add(&a.scale_re(h.powi(j as i32)));
    }
    out
}

/// Conjugated residual e^{−Φ/h} L (e^{Φ/h} A) computed by expanding the product
/// derivatives of A = Σ h^j a_j, against the predicted remainder.
pub fn conjugated_residual(amps: &CgoAmplitudes, h_list: &[f64]) -> Result<ResidualTable> {
    let grid = amps.grid().clone();
    let dx = grid.spacing(0).max(grid.spacing(1));
    for &h in h_list {
        if !(h > 0.0) {
            return Err(Error::OutOfRange(format!("h must be positive, got {h}")));
        }
        if 2.0 * std::f64::consts::PI * h < 4.0 * dx {
            return Err(Error::Resolution(format!("h = {h} is unresolved by grid spacing {dx:.4}")));
        }
    }
    let phase = &amps.phase;
    let mask = grid.inner_mask(RESIDUAL_MARGIN);
    let m = amps.order();
    let a = &amps.amps;
    // h-independent pieces of both sides.
    let (lhs_parts, rhs_lead, rhs_next): (Vec<RectField>, RectField, RectField) = match amps.kind {
        AmplitudeKind::Harmonic => {
            let parts: Vec<RectField> =
                a.iter().map(|x| x.laplacian()).chain(a.iter().map(|x| transport_apply(x, phase))).collect();
            (parts, a[m - 1].laplacian(), RectField::zeros(&grid))
        }
        AmplitudeKind::Biharmonic => {
            let parts: Vec<RectField> = a
                .iter()
                .map(|x| x.laplacian().laplacian())
                .chain(a.iter().map(|x| anticommutator(x, phase)))
                .chain(a.iter().map(|x| transport_apply(&transport_apply(x, phase), phase)))
                .collect();
            let lead = anticommutator(&a[m - 1], phase)
                .add(&if m >= 2 { a[m - 2].laplacian().laplacian() } else { RectField::zeros(&grid) });
            (parts, lead, a[m - 1].laplacian().laplacian())
        }
    };
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let mut lhs = RectField::zeros(&grid);
        let rhs;
        match amps.kind {
            AmplitudeKind::Harmonic => {
                // ΔA + (1/h) T A
                for j in 0..m {
                    let p = h.powi(j as i32);
                    lhs = lhs.add(&lhs_parts[j].scale_re(p)).add(&lhs_parts[m + j].scale_re(p / h));
                }
                rhs = rhs_lead.scale_re(h.powi(m as i32 - 1));
            }
            AmplitudeKind::Biharmonic => {
                // Δ²B + (1/h)(TΔ + ΔT)B + (1/h²) T²B
                for j in 0..m {
                    let p = h.powi(j as i32);
                    lhs = lhs
                        .add(&lhs_parts[j].scale_re(p))
                        .add(&lhs_parts[m + j].scale_re(p / h))
                        .add(&lhs_parts[2 * m + j].scale_re(p / (h * h)));
                }
                rhs = rhs_lead.scale_re(h.powi(m as i32 - 2)).add(&rhs_next.scale_re(h.powi(m as i32 - 1)));
            }
        }
        let rhs_norm = rhs.masked_l2(&mask);
        rows.push(ResidualRow {
            h,
            lhs_norm: lhs.masked_l2(&mask),
            rhs_norm,
            relative_error: relative(lhs.sub(&rhs).masked_l2(&mask), rhs_norm),
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let ls: Vec<f64> = rows.iter().map(|r| r.lhs_norm).collect();
    let slope = if hs.len() >= 2 && ls.iter().all(|&v| v > 0.0) {
        crate::dnmap::loglog_slope(&hs, &ls)
    } else {
        f64::NAN
    };
    let expected_slope = match amps.kind {
        AmplitudeKind::Harmonic => m as f64 - 1.0,
        AmplitudeKind::Biharmonic => m as f64 - 2.0,
    };
    Ok(ResidualTable { rows, slope, expected_slope })
}

/// A(·;h) = Σ h^j a_j.
pub fn amplitude_sum(amps: &CgoAmplitudes, h: f64) -> RectField {
    combine(&amps.amps, h)
}

/// Rotated working grid: [−half, half]² in-plane with `n` nodes, plus parameter axes.
pub fn working_grid(half: f64, n: usize, extra: &[(f64, f64, usize)]) -> Result<RectGrid> {
    let mut lo = vec![-half, -half];
    let mut hi = vec![half, half];
    let mut counts = vec![n, n];
    for &(a, b, k) in extra {
        lo.push(a);
        hi.push(b);
        counts.push(k);
    }
    RectGrid::new(lo, hi, counts)
}

/// Seed e^{−iλz}χ(y'') with χ a Gaussian in the parameter axes.
pub fn exponential_seed(grid: &RectGrid, lambda: f64) -> RectField {
    RectField::from_fn(grid, |y| {
        let chi: f64 = y[2..].iter().map(|t| (-t * t).exp()).product();
        (C64::new(0.0, -lambda) * C64::new(y[0], y[1])).exp() * chi
    })
}

/// Biharmonic seed z̄·e^{−iλz}χ(y'').
pub fn biharmonic_seed(grid: &RectGrid, lambda: f64) -> RectField {
    let e = exponential_seed(grid, lambda);
    let zbar = RectField::from_fn(grid, |y| C64::new(y[0], -y[1]));
    e.mul(&zbar)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(n: usize) -> RectGrid {
        working_grid(2.0, n, &[]).unwrap()
    }

    #[test]
    fn phase_validation() {
        assert!(matches!(
            LinearPhase::new(vec![1.0, 0.0], vec![0.6, 0.8], 1.0, 0.1),
            Err(Error::NotOrthonormal(_))
        ));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = LinearPhase::new(vec![s, s, 0.0], vec![0.0, 0.0, 1.0], -1.0, 0.1).unwrap();
        assert!(p.null_defect().norm() < 1e-15);
    }

    #[test]
    fn zero_and_constant_sources() {
        let g = plane(256);
        let p = LinearPhase::standard(2, 1.0, 0.1).unwrap();
        let z = transport_solve(&RectField::zeros(&g), &p, 1).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let c = C64::new(0.7, -0.2);
        let f = RectField::from_fn(&g, |_| c);
        let a = transport_solve(&f, &p, 1).unwrap();
        assert!(transport_residual(&a, &f, &p, 1) < 1e-8);
        let exact = RectField::from_fn(&g, |y| c * C64::new(y[0], -y[1]) / 4.0);
        // The difference is holomorphic.
        let d = a.sub(&exact);
        let dbar = transport_apply(&d, &p);
        let mask = g.inner_mask(RESIDUAL_MARGIN);
        assert!(dbar.masked_l2(&mask) < 1e-8 * f.masked_l2(&mask), "{}", dbar.masked_l2(&mask));
    }

    #[test]
    fn manufactured_source() {
        let g = plane(256);
        for sign in [1.0, -1.0] {
            let p = LinearPhase::standard(2, sign, 0.1).unwrap();
            let astar = RectField::from_fn(&g, |y| C64::new((y[0] * y[1]).sin(), (y[0] - 0.5 * y[1]).cos()));
            let f = transport_apply(&astar, &p);
            let a = transport_solve(&f, &p, 1).unwrap();
            let r = transport_residual(&a, &f, &p, 1);
            assert!(r < 1e-6, "sign {sign}: {r:e}");
            let d = transport_apply(&a.sub(&astar), &p);
            let mask = g.inner_mask(RESIDUAL_MARGIN);
            assert!(d.masked_l2(&mask) < 1e-6 * f.masked_l2(&mask));
        }
    }

    #[test]
    fn commutation_and_null_phase() {
        let g = plane(128);
        let p = LinearPhase::standard(2, 1.0, 0.3).unwrap();
        let f = RectField::from_fn(&g, |y| C64::new((y[0] + 0.3 * y[1] * y[1]).sin(), y[0] * y[1]));
        let c = transport_apply(&f.laplacian(), &p).sub(&transport_apply(&f, &p).laplacian());
        let mask = g.inner_mask(RESIDUAL_MARGIN);
        assert!(c.masked_max(&mask) < 1e-10);
        // Δ e^{Φ/h} = 0.
        let e = RectField::from_fn(&g, |y| (p.value_rotated(y) / p.h).exp());
        assert!(e.laplacian().masked_max(&mask) < 1e-5 * e.masked_max(&mask));
    }

    #[test]
    fn constant_seed_is_exact() {
        let g = plane(64);
        let p = LinearPhase::standard(2, 1.0, 0.1).unwrap();
        let amps = build_amplitudes(AmplitudeKind::Harmonic, &p, 2, &g, None).unwrap();
        assert_eq!(amps.amps[1].max_abs(), 0.0);
        let one = build_amplitudes(AmplitudeKind::Harmonic, &p, 1, &g, None).unwrap();
        let t = conjugated_residual(&one, &[0.3, 0.2]).unwrap();
        assert!(t.rows.iter().all(|r| r.lhs_norm == 0.0));
    }

    #[test]
    fn bad_seed_rejected() {
        let g = plane(64);
        let p = LinearPhase::standard(2, 1.0, 0.1).unwrap();
        let seed = RectField::from_fn(&g, |y| C64::new(y[0], -y[1]));
        assert!(build_amplitudes(AmplitudeKind::Harmonic, &p, 2, &g, Some(seed)).is_err());
    }

    #[test]
    fn unresolved_h_rejected() {
        let g = plane(64);
        let p = LinearPhase::standard(2, 1.0, 0.1).unwrap();
        let amps = build_amplitudes(AmplitudeKind::Harmonic, &p, 1, &g, None).unwrap();
        assert!(matches!(conjugated_residual(&amps, &[0.01]), Err(Error::Resolution(_))));
    }
}
