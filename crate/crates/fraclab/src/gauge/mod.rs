//! Second-order perturbations in the natural gauge.
//!
//! A flat function w generates θ² = w·Id, θ¹ = 2∇w, θ⁰ = Δw, so that
//! θ²:∇²u + θ¹·∇u + θ⁰u = Δ(wu). All derivatives are fourth-order differences on
//! a [`RectGrid`].

pub mod stationary;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{RectField, RectGrid};
use crate::numerics::{gauss_legendre, lagrange_uniform, ravel, unravel, C64};

pub use stationary::{
    exact_integral, quadrature_integral, stationary_phase_expand, Expansion, PolyGauss, QuadraticPhase, C_A,
};

/// Vanishing order assigned to identically zero fields.
pub const FLAT_MAX: u32 = 64;

#[derive(Debug, Clone)]
pub struct GaugeCoefficients {
    pub theta2: Vec<Vec<RectField>>,
    pub theta1: Vec<RectField>,
    pub theta0: RectField,
    /// w = O(d^p) at the boundary, d the distance to ∂Ω.
    pub flatness_order: u32,
}

impl GaugeCoefficients {
    pub fn grid(&self) -> &RectGrid {
        &self.theta0.grid
    }

    /// θ²:∇²u + θ¹·∇u + θ⁰u.
    pub fn apply(&self, u: &RectField) -> RectField {
        let n = self.grid().dim();
        let mut out = self.theta0.mul(u);
        for a in 0..n {
            out = out.add(&self.theta1[a].mul(&u.d1(a)));
            for b in 0..n {
                out = out.add(&self.theta2[a][b].mul(&u.d11(a, b)));
            }
        }
        out
    }
}

/// Π_a (4(x_a − lo_a)(hi_a − x_a)/L_a²)^p · core(x).
pub fn flat_bump(grid: &RectGrid, p: i32, core: impl Fn(&[f64]) -> f64) -> RectField {
    RectField::from_real_fn(grid, |x| {
        let mut v = core(x);
        for a in 0..grid.dim() {
            let l = grid.hi[a] - grid.lo[a];
            v *= (4.0 * (x[a] - grid.lo[a]) * (grid.hi[a] - x[a]) / (l * l)).powi(p);
        }
        v
    })
}

/// Estimated vanishing order at the boundary from the first two interior layers.
///
/// Boundary values must vanish (relative to max|w|); the order is the smallest
/// log₂(|w(2d)|/|w(d)|) over all face points.
pub fn boundary_flatness(w: &RectField) -> u32 {
    let grid = &w.grid;
    let scale = w.max_abs();
    if scale == 0.0 {
        return FLAT_MAX;
    }
    let n = grid.dim();
    let mut idx = vec![0; n];
    let mut worst = FLAT_MAX as f64;
    for i in 0..grid.count() {
        unravel(i, &grid.n, &mut idx);
        for a in 0..n {
            for side in [0usize, 1] {
                let at = if side == 0 { 0 } else { grid.n[a] - 1 };
                if idx[a] != at {
                    continue;
                }
                if w.values[i].norm() > 1e-13 * scale {
                    return 0;
                }
                let layer = |k: usize| {
                    let mut j = idx.clone();
                    j[a] = if side == 0 { k } else { grid.n[a] - 1 - k };
                    w.values[ravel(&j, &grid.n)].norm()
                };
                let (w1, w2) = (layer(1), layer(2));
                if w1 > 0.0 && w2 > 0.0 {
                    worst = worst.min((w2 / w1).log2());
                } else if w1 == 0.0 && w2 > 0.0 {
                    // Underflow in the first layer: at least as flat as the grid can resolve.
                    continue;
                }
            }
        }
    }
    worst.clamp(0.0, FLAT_MAX as f64).round() as u32
}

/// Natural gauge (w·Id, 2∇w, Δw); w must vanish with its normal derivative on ∂Ω.
pub fn gauge_from_w(w: &RectField) -> Result<GaugeCoefficients> {
    let order = boundary_flatness(w);
    if order < 2 {
        return Err(Error::NotFlat(format!("boundary vanishing order {order} < 2")));
    }
    let grid = &w.grid;
    let n = grid.dim();
    let zero = RectField::zeros(grid);
    let theta2 = (0..n)
        .map(|a| (0..n).map(|b| if a == b { w.clone() } else { zero.clone() }).collect())
        .collect();
    let theta1 = (0..n).map(|a| w.d1(a).scale_re(2.0)).collect();
    Ok(GaugeCoefficients { theta2, theta1, theta0: w.laplacian(), flatness_order: order })
}

/// max|Δ(wu) − θ(u)| / max|Δ(wu)|, w read from θ²₁₁.
pub fn product_rule_residual(theta: &GaugeCoefficients, u: &RectField) -> f64 {
    let lhs = theta.theta2[0][0].mul(u).laplacian();
    let diff = lhs.sub(&theta.apply(u)).max_abs();
    let s = lhs.max_abs();
    if s == 0.0 {
        diff
    } else {
        diff / s
    }
}

/// ∫_Ω (θ²:∇²u + θ¹·∇u + θ⁰u) v dx.
pub fn integral_identity_eval(theta: &GaugeCoefficients, u: &RectField, v: &RectField) -> C64 {
    theta.apply(u).mul(v).integral()
}

/// max over |α| ≤ 2 of sup|∂^α u|.
pub fn c2_norm(u: &RectField) -> f64 {
    let n = u.grid.dim();
    let mut m = u.max_abs();
    for a in 0..n {
        m = m.max(u.d1(a).max_abs());
        for b in a..n {
            m = m.max(u.d11(a, b).max_abs());
        }
    }
    m
}

#[derive(Debug, Clone)]
pub struct PsiReport {
    pub psi: RectField,
    pub w: RectField,
    /// max_ij sup|θ²_ij − ∂_ij ψ − δ_ij w| / max_ij sup|θ²_ij|.
    pub residual: f64,
    /// max sup|∂_l θ²_1j − ∂_j θ²_1l| / max sup|∇θ²_1·|; zero in two dimensions.
    pub symmetry_defect: f64,
}

/// Gauss points per ray.
pub const PSI_GAUSS: usize = 64;
/// Interpolation stencil width along rays.
pub const PSI_STENCIL: usize = 8;

fn interp(values: &[f64], shape: &[usize], lo: &[f64], h: &[f64], x: &[f64]) -> f64 {
    if shape.len() == 1 {
        return lagrange_uniform(values, lo[0], h[0], x[0], PSI_STENCIL);
    }
    // Interpolate along the trailing axes for each leading index, then along the first.
    let inner: usize = shape[1..].iter().product();
    let line: Vec<f64> = (0..shape[0])
        .map(|i| interp(&values[i * inner..(i + 1) * inner], &shape[1..], &lo[1..], &h[1..], &x[1..]))
        .collect();
    lagrange_uniform(&line, lo[0], h[0], x[0], PSI_STENCIL)
}

/// ψ(y1, y') = Σ_j ∫_{-∞}^{y1} ∫_0^1 y_j θ²_1j(s, t y') dt ds and w = θ²₁₁ − ∂²₁₁ψ.
///
/// The y1 integral is the cumulative trapezoid rule with its first endpoint
/// correction; the t integral uses Gauss–Legendre with local Lagrange interpolation.
/// θ² must be real, vanish near y1 = lo, and the grid must contain y' = 0.
pub fn psi_from_theta(theta2: &[Vec<RectField>]) -> Result<PsiReport> {
    let n = theta2.len();
    if n < 2 || theta2.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch("θ² must be an n×n array with n >= 2".into()));
    }
    let grid = theta2[0][0].grid.clone();
    if grid.dim() != n || theta2.iter().flatten().any(|f| f.grid != grid) {
        return Err(Error::ShapeMismatch("θ² fields must share an n-dimensional grid".into()));
    }
    if (1..n).any(|a| grid.lo[a] > 0.0 || grid.hi[a] < 0.0) {
        return Err(Error::InvalidDomain("grid must contain the y' = 0 axis".into()));
    }
    let n1 = grid.n[0];
    let tshape = grid.n[1..].to_vec();
    let tcount: usize = tshape.iter().product();
    let tlo = grid.lo[1..].to_vec();
    let th: Vec<f64> = (1..n).map(|a| grid.spacing(a)).collect();
    let (gx, gw) = gauss_legendre(PSI_GAUSS);

    // ∂1ψ at every node, computed column by column in y1.
    let cols: Vec<Vec<f64>> = (0..n1)
        .into_par_iter()
        .map(|i| {
            let slices: Vec<Vec<f64>> = (1..n)
                .map(|j| theta2[0][j].values[i * tcount..(i + 1) * tcount].iter().map(|v| v.re).collect())
                .collect();
            let mut idx = vec![0; n - 1];
            let mut col = vec![0.0; tcount];
            for (k, out) in col.iter_mut().enumerate() {
                unravel(k, &tshape, &mut idx);
                let yp: Vec<f64> = idx.iter().enumerate().map(|(a, &m)| tlo[a] + m as f64 * th[a]).collect();
                let mut acc = 0.0;
                for (x, w) in gx.iter().zip(&gw) {
                    let t = 0.5 * (x + 1.0);
                    let pt: Vec<f64> = yp.iter().map(|y| t * y).collect();
                    for (j, sl) in slices.iter().enumerate() {
                        if yp[j] != 0.0 {
                            acc += 0.5 * w * yp[j] * interp(sl, &tshape, &tlo, &th, &pt);
                        }
                    }
                }
                *out = acc;
            }
            col
        })
        .collect();
    let mut g = RectField::zeros(&grid);
    for (i, col) in cols.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            g.values[i * tcount + k] = C64::new(*v, 0.0);
        }
    }
    let h1 = grid.spacing(0);
    let gp = g.d1(0);
    let mut psi = RectField::zeros(&grid);
    for k in 0..tcount {
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..n1 {
            acc += (g.values[(i - 1) * tcount + k] + g.values[i * tcount + k]) * (0.5 * h1);
            psi.values[i * tcount + k] = acc - (gp.values[i * tcount + k] - gp.values[k]) * (h1 * h1 / 12.0);
        }
    }
    let w = theta2[0][0].sub(&gp);
    let mut resid: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let d = if a == 0 {
                g.d1(b)
            } else if b == 0 {
                g.d1(a)
            } else {
                psi.d11(a, b)
            };
            let mut r = theta2[a][b].sub(&d);
            if a == b {
                r = r.sub(&w);
            }
            resid = resid.max(r.max_abs());
            scale = scale.max(theta2[a][b].max_abs());
        }
    }
    let mut sym: f64 = 0.0;
    let mut sym_scale: f64 = 0.0;
    for j in 1..n {
        for l in 1..n {
            sym_scale = sym_scale.max(theta2[0][j].d1(l).max_abs());
            if l > j {
                sym = sym.max(theta2[0][j].d1(l).sub(&theta2[0][l].d1(j)).max_abs());
            }
        }
    }
    Ok(PsiReport {
        psi,
        w,
        residual: if scale > 0.0 { resid / scale } else { resid },
        symmetry_defect: if sym_scale > 0.0 { sym / sym_scale } else { sym },
    })
}

/// Sup norms of the four two-dimensional trace relations:
/// ∂x trθ² − θ¹₁, ∂y trθ² − θ¹₂, ∂xΔ(θ²₁₁ − θ²₂₂) + 2∂yΔθ²₁₂, 2∂xΔθ²₁₂ − ∂yΔ(θ²₁₁ − θ²₂₂).
pub fn trace_relations_check(theta: &GaugeCoefficients) -> Result<[f64; 4]> {
    if theta.grid().dim() != 2 {
        return Err(Error::ShapeMismatch(format!("trace relations need n = 2, got {}", theta.grid().dim())));
    }
    let t2 = &theta.theta2;
    let tr = t2[0][0].add(&t2[1][1]);
    let diff = t2[0][0].sub(&t2[1][1]).laplacian();
    let off = t2[0][1].laplacian();
    Ok([
        tr.d1(0).sub(&theta.theta1[0]).max_abs(),
        tr.d1(1).sub(&theta.theta1[1]).max_abs(),
        diff.d1(0).add(&off.d1(1).scale_re(2.0)).max_abs(),
        off.d1(0).scale_re(2.0).sub(&diff.d1(1)).max_abs(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> RectGrid {
        RectGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![n, n]).unwrap()
    }

    fn bump(g: &RectGrid) -> RectField {
        flat_bump(g, 12, |x| 1.0 + 0.5 * x[0] - 0.3 * x[1] * x[1])
    }

    #[test]
    fn zero_gauge() {
        let g = square(32);
        let t = gauge_from_w(&RectField::zeros(&g)).unwrap();
        assert_eq!(t.flatness_order, FLAT_MAX);
        assert_eq!(t.theta0.max_abs(), 0.0);
        assert!(t.theta1.iter().all(|f| f.max_abs() == 0.0));
        assert_eq!(trace_relations_check(&t).unwrap(), [0.0; 4]);
    }

    #[test]
    fn flatness_detected() {
        let g = square(257);
        let t = gauge_from_w(&bump(&g)).unwrap();
        assert!(t.flatness_order >= 11, "{}", t.flatness_order);
        let w = RectField::from_real_fn(&g, |x| (std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin());
        assert!(matches!(gauge_from_w(&w), Err(Error::NotFlat(_))));
    }

    #[test]
    fn product_rule_pointwise() {
        let g = square(257);
        let t = gauge_from_w(&bump(&g)).unwrap();
        let one = RectField::from_real_fn(&g, |_| 1.0);
        assert_eq!(t.apply(&one).sub(&t.theta0).max_abs(), 0.0);
        let u = RectField::from_real_fn(&g, |x| x[0] * x[1]);
        let r = product_rule_residual(&t, &u);
        assert!(r < 1e-6, "{r:e}");
    }

    #[test]
    fn identity_against_harmonic_and_nonharmonic() {
        let g = square(257);
        let w = bump(&g);
        let t = gauge_from_w(&w).unwrap();
        let scale = w.l1_norm();
        let u = RectField::from_real_fn(&g, |x| x[0].powi(4) - 3.0 * x[0] * x[0] * x[1] * x[1]);
        let one = RectField::from_real_fn(&g, |_| 1.0);
        assert!(integral_identity_eval(&t, &u, &one).norm() < 1e-6 * scale * c2_norm(&u));
        let v = RectField::from_real_fn(&g, |x| x[0].exp() * x[1].cos());
        assert!(integral_identity_eval(&t, &u, &v).norm() < 1e-5 * scale * c2_norm(&u));
        let r2 = RectField::from_real_fn(&g, |x| x[0] * x[0] + x[1] * x[1]);
        let got = integral_identity_eval(&t, &u, &r2);
        let oracle = w.mul(&u).integral() * 4.0;
        assert!(oracle.norm() > 1e-4);
        assert!((got - oracle).norm() < 1e-5 * oracle.norm(), "{got} {oracle}");
    }

    #[test]
    fn trace_relations() {
        let g = square(129);
        let w = bump(&g);
        let t = gauge_from_w(&w).unwrap();
        let r = trace_relations_check(&t).unwrap();
        assert!(r[0] <= 1e-8 && r[1] <= 1e-8);
        assert_eq!((r[2], r[3]), (0.0, 0.0));
        let bad = GaugeCoefficients {
            theta2: vec![vec![w.clone(), RectField::zeros(&g)], vec![RectField::zeros(&g), w.scale_re(-1.0)]],
            theta1: vec![RectField::zeros(&g), RectField::zeros(&g)],
            theta0: RectField::zeros(&g),
            flatness_order: t.flatness_order,
        };
        let rb = trace_relations_check(&bad).unwrap();
        let expect = w.laplacian().d1(0).scale_re(2.0).max_abs();
        assert!(expect > 1.0);
        assert!((rb[2] - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn psi_zero_and_pure_trace() {
        let g = RectGrid::new(vec![-0.5, 0.0], vec![0.5, 1.0], vec![101, 101]).unwrap();
        let z = RectField::zeros(&g);
        let rep = psi_from_theta(&[vec![z.clone(), z.clone()], vec![z.clone(), z.clone()]]).unwrap();
        assert_eq!(rep.psi.max_abs(), 0.0);
        assert_eq!(rep.w.max_abs(), 0.0);
        let ws = RectField::from_real_fn(&g, |x| {
            let r2 = (x[0] * x[0] + (x[1] - 0.5) * (x[1] - 0.5)) / 0.09;
            if r2 < 1.0 { (1.0 - r2).powi(8) } else { 0.0 }
        });
        let rep = psi_from_theta(&[vec![ws.clone(), z.clone()], vec![z.clone(), ws.clone()]]).unwrap();
        assert_eq!(rep.psi.max_abs(), 0.0);
        assert!(rep.w.sub(&ws).max_abs() <= 1e-6 * ws.max_abs());
        assert!(rep.residual <= 1e-6);
    }
}
