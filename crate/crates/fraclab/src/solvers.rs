//! Poisson operators, the Green operator and Schrödinger solvers.
//!
//! The harmonic extension on a box is built from closed-form pieces: a harmonic
//! polynomial fitted at the corners (values and, in 2D, corner curvature),
//! edge lifts in 3D, and per-face tangential sine series with hyperbolic
//! normal profiles for the remainder. Multiplication by q is pseudo-spectral.

use crate::eigenbasis::{
    analyze, analyze_closed, closed_from, synthesize, BoundaryField, BoxDomain, GridField, SpectralField,
};
use crate::error::{Error, Result};
use crate::fracops::InhomFunction;
use crate::numerics::{d2_left, product, ravel, sine_mode, MomentRule, C64};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

/// Condition numbers above this count as a Dirichlet eigenvalue at zero.
pub const COND_LIMIT: f64 = 1e12;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Stable sinh(κ(L-d))/sinh(κL) for d in [0, L].
fn profile(kappa: f64, l: f64, d: f64) -> f64 {
    if kappa == 0.0 {
        return 1.0 - d / l;
    }
    let num = (-kappa * d).exp() * (1.0 - (-2.0 * kappa * (l - d)).exp());
    num / (1.0 - (-2.0 * kappa * l).exp())
}

fn distance(domain: &BoxDomain, axis: usize, high: bool, x: f64) -> f64 {
    if high {
        domain.lengths()[axis] - x
    } else {
        x
    }
}

/// Boundary values on the closed grid, shared nodes averaged.
fn boundary_closed(g: &BoundaryField) -> Vec<C64> {
    closed_from(&GridField::zeros(&g.domain), g).expect("same domain")
}

/// Closed-grid line along `axis` through the fixed closed indices in `at`.
fn closed_line(domain: &BoxDomain, data: &[C64], axis: usize, at: &[usize]) -> Vec<C64> {
    let shape = domain.closed_shape();
    let mut idx = at.to_vec();
    (0..shape[axis])
        .map(|j| {
            idx[axis] = j;
            data[ravel(&idx, &shape)]
        })
        .collect()
}

/// Classical Poisson operator P: the harmonic function with trace g.
pub fn harmonic_extension(g: &BoundaryField) -> InhomFunction {
    let d = &g.domain;
    let interior = match d.dim() {
        1 => {
            let l = d.lengths()[0];
            let (a, b) = (g.faces[0][0], g.faces[1][0]);
            GridField::from_fn(d, |x| a * (1.0 - x[0] / l) + b * (x[0] / l))
        }
        2 => harmonic_2d(g),
        _ => harmonic_3d(g),
    };
    InhomFunction { interior, trace: g.clone(), laplacian_trace: Some(BoundaryField::zeros(d)) }
}

/// Harmonic polynomials in centred, scaled coordinates and their xx-derivatives.
fn harm_poly(x: f64, y: f64) -> [f64; 8] {
    [1.0, x, y, x * y, x * x - y * y, x * x * x - 3.0 * x * y * y, 3.0 * x * x * y - y * y * y, x * x * x * y - x * y * y * y]
}

fn harm_poly_xx(x: f64, y: f64) -> [f64; 8] {
    [0.0, 0.0, 0.0, 0.0, 2.0, 6.0 * x, 6.0 * y, 6.0 * x * y]
}

fn harmonic_2d(g: &BoundaryField) -> GridField {
    let d = &g.domain;
    let (l0, l1) = (d.lengths()[0], d.lengths()[1]);
    let (g0, g1) = (d.grid()[0], d.grid()[1]);
    let (h0, h1) = (d.spacing(0), d.spacing(1));
    let b = boundary_closed(g);
    let scale = 0.5 * l0.max(l1);
    let cx = |x: f64| (x - 0.5 * l0) / scale;
    let cy = |y: f64| (y - 0.5 * l1) / scale;
    let curvature_ok = g0 + 2 >= 6 && g1 + 2 >= 6;

    // Corner fit: values and Q_xx = (g_h'' - g_v'')/2.
    let mut mat = DMatrix::<f64>::zeros(8, 8);
    let mut rhs = DMatrix::<C64>::zeros(8, 1);
    let mut row = 0;
    for i0 in 0..2 {
        for i1 in 0..2 {
            let (x, y) = (i0 as f64 * l0, i1 as f64 * l1);
            let j0 = i0 * (g0 + 1);
            let j1 = i1 * (g1 + 1);
            let v = harm_poly(cx(x), cy(y));
            let vxx = harm_poly_xx(cx(x), cy(y));
            for c in 0..8 {
                mat[(row, c)] = v[c];
                mat[(row + 1, c)] = vxx[c] / (scale * scale);
            }
            rhs[(row, 0)] = b[ravel(&[j0, j1], &d.closed_shape())];
            if curvature_ok {
                let mut horiz = closed_line(d, &b, 0, &[0, j1]);
                let mut vert = closed_line(d, &b, 1, &[j0, 0]);
                if i0 == 1 {
                    horiz.reverse();
                }
                if i1 == 1 {
                    vert.reverse();
                }
                rhs[(row + 1, 0)] = (d2_left(&horiz, h0) - d2_left(&vert, h1)) * 0.5;
            }
            row += 2;
        }
    }
    let coef = solve_real_complex(&mat, &rhs).unwrap_or_else(|| DMatrix::zeros(8, 1));
    let poly = |x: f64, y: f64| -> C64 {
        let v = harm_poly(cx(x), cy(y));
        (0..8).map(|c| coef[(c, 0)] * v[c]).sum()
    };

    let mut out = GridField::from_fn(d, |x| poly(x[0], x[1]));
    let shape = d.grid().to_vec();
    for face in d.faces() {
        let a = face.axis;
        let t = 1 - a;
        let high = face.side == crate::eigenbasis::Side::High;
        let (lt, gt) = (d.lengths()[t], d.grid()[t]);
        let mut at = vec![0, 0];
        at[a] = if high { d.grid()[a] + 1 } else { 0 };
        let line = closed_line(d, &b, t, &at);
        let ht = d.spacing(t);
        let rem: Vec<C64> = line
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let mut p = [0.0, 0.0];
                p[t] = j as f64 * ht;
                p[a] = if high { d.lengths()[a] } else { 0.0 };
                v - poly(p[0], p[1])
            })
            .collect();
        let m = gt;
        let rule = MomentRule::new(lt, m, gt);
        let mut r = vec![ZERO; m];
        rule.apply_line(&rem, &mut r);
        let na = d.grid()[a];
        let xa = d.interior_nodes(a);
        let xt = d.interior_nodes(t);
        // W[j, k] = profile_k(x_j) r_k, then out += W S^T.
        let mut w = vec![ZERO; na * m];
        for (j, &x) in xa.iter().enumerate() {
            let dist = distance(d, a, high, x);
            for k in 0..m {
                let kappa = (k + 1) as f64 * std::f64::consts::PI / lt;
                w[j * m + k] = r[k] * profile(kappa, d.lengths()[a], dist);
            }
        }
        let s: Vec<f64> = xt.iter().flat_map(|&y| (0..m).map(move |k| sine_mode(lt, k + 1, y))).collect();
        let mut idx = [0usize; 2];
        for j in 0..na {
            for i in 0..xt.len() {
                let mut acc = ZERO;
                for k in 0..m {
                    acc += w[j * m + k] * s[i * m + k];
                }
                idx[a] = j;
                idx[t] = i;
                out.values[ravel(&idx, &shape)] += acc;
            }
        }
    }
    out
}

fn solve_real_complex(mat: &DMatrix<f64>, rhs: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    let lu = mat.clone().lu();
    let re = lu.solve(&rhs.map(|v| v.re))?;
    let im = lu.solve(&rhs.map(|v| v.im))?;
    Some(DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)])))
}

fn harmonic_3d(g: &BoundaryField) -> GridField {
    let d = &g.domain;
    let l = d.lengths().to_vec();
    let cshape = d.closed_shape();
    let b = boundary_closed(g);
    let pi = std::f64::consts::PI;

    // Trilinear corner interpolant.
    let mut corner = [[[ZERO; 2]; 2]; 2];
    for (i0, c0) in corner.iter_mut().enumerate() {
        for (i1, c1) in c0.iter_mut().enumerate() {
            for (i2, c) in c1.iter_mut().enumerate() {
                *c = b[ravel(&[i0 * (cshape[0] - 1), i1 * (cshape[1] - 1), i2 * (cshape[2] - 1)], &cshape)];
            }
        }
    }
    let tri = |x: &[f64]| -> C64 {
        let t: Vec<f64> = (0..3).map(|a| x[a] / l[a]).collect();
        let mut acc = ZERO;
        for i0 in 0..2 {
            for i1 in 0..2 {
                for i2 in 0..2 {
                    let w = [i0, i1, i2]
                        .iter()
                        .enumerate()
                        .map(|(a, &i)| if i == 1 { t[a] } else { 1.0 - t[a] })
                        .product::<f64>();
                    acc += corner[i0][i1][i2] * w;
                }
            }
        }
        acc
    };

    // Edge lifts: edge along c at (a, sa), (b, sb).
    struct Edge {
        a: usize,
        sa: bool,
        b: usize,
        sb: bool,
        c: usize,
        coef: Vec<C64>,
    }
    let mut edges = Vec::new();
    for c in 0..3 {
        let (a, bb) = match c {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for sa in [false, true] {
            for sb in [false, true] {
                let mut at = vec![0; 3];
                at[a] = if sa { cshape[a] - 1 } else { 0 };
                at[bb] = if sb { cshape[bb] - 1 } else { 0 };
                let line = closed_line(d, &b, c, &at);
                let hc = d.spacing(c);
                let rem: Vec<C64> = line
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let mut p = vec![0.0; 3];
                        p[a] = if sa { l[a] } else { 0.0 };
                        p[bb] = if sb { l[bb] } else { 0.0 };
                        p[c] = j as f64 * hc;
                        v - tri(&p)
                    })
                    .collect();
                let m = d.grid()[c];
                let mut coef = vec![ZERO; m];
                MomentRule::new(l[c], m, d.grid()[c]).apply_line(&rem, &mut coef);
                edges.push(Edge { a, sa, b: bb, sb, c, coef });
            }
        }
    }
    let edge_value = |e: &Edge, x: &[f64]| -> C64 {
        let mut acc = ZERO;
        for (k, ck) in e.coef.iter().enumerate() {
            let kappa = (k + 1) as f64 * pi / l[e.c];
            let mu = kappa / 2f64.sqrt();
            let pa = profile(mu, l[e.a], distance(d, e.a, e.sa, x[e.a]));
            let pb = profile(mu, l[e.b], distance(d, e.b, e.sb, x[e.b]));
            acc += ck * (sine_mode(l[e.c], k + 1, x[e.c]) * pa * pb);
        }
        acc
    };
    let lift = |x: &[f64]| -> C64 { tri(x) + edges.iter().map(|e| edge_value(e, x)).sum::<C64>() };

    let mut out = GridField::from_fn(d, |x| lift(x));
    let shape = d.grid().to_vec();
    for face in d.faces() {
        let a = face.axis;
        let high = face.side == crate::eigenbasis::Side::High;
        let tang = d.tangential_axes(face);
        let (t1, t2) = (tang[0], tang[1]);
        let fshape = d.face_shape(face);
        let rem: Vec<C64> = (0..product(&fshape))
            .map(|i| b[d.face_to_closed(face, i)] - lift(&d.face_point(face, i)))
            .collect();
        let (m1, m2) = (d.grid()[t1], d.grid()[t2]);
        let (tmp, s1) = MomentRule::new(l[t1], m1, d.grid()[t1]).apply_axis(&rem, &fshape, 0);
        let (r, _) = MomentRule::new(l[t2], m2, d.grid()[t2]).apply_axis(&tmp, &s1, 1);
        let x1 = d.interior_nodes(t1);
        let x2 = d.interior_nodes(t2);
        let (lt1, lt2) = (l[t1], l[t2]);
        let sm1: Vec<f64> = x1.iter().flat_map(|&y| (0..m1).map(move |k| sine_mode(lt1, k + 1, y))).collect();
        let sm2: Vec<f64> = x2.iter().flat_map(|&y| (0..m2).map(move |k| sine_mode(lt2, k + 1, y))).collect();
        let xa = d.interior_nodes(a);
        let contrib: Vec<Vec<C64>> = xa
            .par_iter()
            .map(|&x| {
                let dist = distance(d, a, high, x);
                let mut w = vec![ZERO; m1 * m2];
                for p in 0..m1 {
                    for q in 0..m2 {
                        let kappa = pi
                            * (((p + 1) as f64 / l[t1]).powi(2) + ((q + 1) as f64 / l[t2]).powi(2)).sqrt();
                        w[p * m2 + q] = r[p * m2 + q] * profile(kappa, l[a], dist);
                    }
                }
                // Y[i1, q] = sum_p S1[i1, p] W[p, q]; Z[i1, i2] = sum_q Y[i1, q] S2[i2, q]
                let mut y = vec![ZERO; x1.len() * m2];
                for i1 in 0..x1.len() {
                    for p in 0..m1 {
                        let s = sm1[i1 * m1 + p];
                        for q in 0..m2 {
                            y[i1 * m2 + q] += w[p * m2 + q] * s;
                        }
                    }
                }
                let mut z = vec![ZERO; x1.len() * x2.len()];
                for i1 in 0..x1.len() {
                    for i2 in 0..x2.len() {
                        let mut acc = ZERO;
                        for q in 0..m2 {
                            acc += y[i1 * m2 + q] * sm2[i2 * m2 + q];
                        }
                        z[i1 * x2.len() + i2] = acc;
                    }
                }
                z
            })
            .collect();
        let mut idx = [0usize; 3];
        for (j, z) in contrib.iter().enumerate() {
            for i1 in 0..x1.len() {
                for i2 in 0..x2.len() {
                    idx[a] = j;
                    idx[t1] = i1;
                    idx[t2] = i2;
                    out.values[ravel(&idx, &shape)] += z[i1 * x2.len() + i2];
                }
            }
        }
    }
    out
}

/// P^s g for 1/2 < s < 1, which coincides with the classical Poisson operator.
pub fn fractional_poisson(g: &BoundaryField, s: f64) -> Result<InhomFunction> {
    check_inverse_range(s)?;
    Ok(harmonic_extension(g))
}

pub(crate) fn check_inverse_range(s: f64) -> Result<()> {
    if !(s > 0.5 && s < 1.0) {
        return Err(Error::OutOfRange(format!("s = {s} not in (1/2,1)")));
    }
    Ok(())
}

/// G^s f: coefficients λ_k^{-s} f_k.
pub fn green_apply(f: &SpectralField, s: f64) -> Result<SpectralField> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfRange(format!("s = {s} not in (0,1)")));
    }
    Ok(crate::fracops::scale_by_power(f, -s))
}

/// Real potential sampled on the closed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub q: GridField,
    closed: Vec<C64>,
    sup_bound: f64,
    l2_bound: f64,
}

impl Potential {
    pub fn from_fn(domain: &BoxDomain, f: impl Fn(&[f64]) -> f64) -> Self {
        let closed: Vec<C64> = (0..product(&domain.closed_shape()))
            .map(|i| C64::new(f(&domain.closed_point(i)), 0.0))
            .collect();
        Self::from_closed(domain, closed)
    }

    /// Interior samples; the boundary values are taken to be zero.
    pub fn from_grid(q: GridField) -> Result<Self> {
        if q.values.iter().any(|v| v.im != 0.0 || !v.re.is_finite()) {
            return Err(Error::ShapeMismatch("potential must be real and finite".into()));
        }
        let closed = closed_from(&q, &BoundaryField::zeros(&q.domain))?;
        Ok(Self::from_closed(&q.domain, closed))
    }

    fn from_closed(domain: &BoxDomain, closed: Vec<C64>) -> Self {
        let q = crate::eigenbasis::interior_of_closed(domain, &closed);
        let sup_bound = closed.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let l2_bound = (q.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * domain.cell_volume()).sqrt();
        Self { q, closed, sup_bound, l2_bound }
    }

    pub fn zeros(domain: &BoxDomain) -> Self {
        Self::from_fn(domain, |_| 0.0)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.q.domain
    }
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }
    pub fn l2_bound(&self) -> f64 {
        self.l2_bound
    }
    pub fn closed_values(&self) -> &[C64] {
        &self.closed
    }

    pub fn scale(&self, eps: f64) -> Self {
        Self::from_closed(self.domain(), self.closed.iter().map(|v| v * eps).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.domain() != other.domain() {
            return Err(Error::ShapeMismatch("potentials on different domains".into()));
        }
        Ok(Self::from_closed(self.domain(), self.closed.iter().zip(&other.closed).map(|(a, b)| a + b).collect()))
    }

    pub fn is_zero(&self) -> bool {
        self.sup_bound == 0.0
    }

    /// Pseudo-spectral product: coefficients of q * sum_k c_k φ_k.
    pub fn multiply(&self, c: &SpectralField) -> SpectralField {
        let mut f = synthesize(c);
        for (v, q) in f.values.iter_mut().zip(&self.q.values) {
            *v *= q.re;
        }
        analyze(&f)
    }

    /// Dense Galerkin matrix Q_{jk} = <q φ_k, φ_j>.
    pub fn galerkin_matrix(&self) -> DMatrix<f64> {
        let d = self.domain();
        let m = d.mode_count();
        let cols: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|k| {
                let mut e = SpectralField::zeros(d);
                e.coeffs[k] = C64::new(1.0, 0.0);
                self.multiply(&e).coeffs.iter().map(|v| v.re).collect()
            })
            .collect();
        let mut q = DMatrix::from_fn(m, m, |j, k| cols[k][j]);
        // Symmetrize round-off.
        let qt = q.transpose();
        q = (q + qt) * 0.5;
        q
    }

    /// Moments of q * u for a function given with its trace.
    pub fn moments_of_product(&self, u: &InhomFunction) -> SpectralField {
        let prod: Vec<C64> = u.closed().iter().zip(&self.closed).map(|(a, b)| a * b).collect();
        analyze_closed(self.domain(), &prod)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Born { terms: usize },
}

/// Solution of the fractional Schrödinger problem: u = base + correction.
#[derive(Debug, Clone)]
pub struct SchrodingerSolution {
    pub correction: SpectralField,
    pub base: InhomFunction,
    pub method: SolveMethod,
    /// Relative residual of the Galerkin system (direct) or contraction estimate (Born).
    pub diagnostic: f64,
}

impl SchrodingerSolution {
    pub fn total(&self) -> Result<InhomFunction> {
        let corr = InhomFunction::compactly_supported(synthesize(&self.correction));
        self.base.add(&corr)
    }
}

/// Factored Galerkin operator diag(λ^s) - Q.
#[derive(Debug, Clone)]
pub struct DirectSolver {
    domain: BoxDomain,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    matrix: DMatrix<f64>,
    pub condition: f64,
}

impl DirectSolver {
    pub fn new(q: &Potential, s: f64) -> Result<Self> {
        check_inverse_range(s)?;
        let d = q.domain().clone();
        let lam = d.eigenvalues();
        let mut a = -q.galerkin_matrix();
        for (i, l) in lam.iter().enumerate() {
            a[(i, i)] += l.powf(s);
        }
        let eig = SymmetricEigen::new(a.clone());
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for v in eig.eigenvalues.iter() {
            lo = lo.min(v.abs());
            hi = hi.max(v.abs());
        }
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= COND_LIMIT) {
            return Err(Error::IllConditioned { cond: condition });
        }
        Ok(Self { domain: d, lu: a.clone().lu(), matrix: a, condition })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Solves (diag(λ^s) - Q) c = f; returns c and the relative residual.
    pub fn solve(&self, f: &SpectralField) -> Result<(SpectralField, f64)> {
        let m = f.coeffs.len();
        let re = DVector::from_iterator(m, f.coeffs.iter().map(|v| v.re));
        let im = DVector::from_iterator(m, f.coeffs.iter().map(|v| v.im));
        let xr = self.lu.solve(&re).ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
        let xi = self.lu.solve(&im).ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
        let rr = &self.matrix * &xr - &re;
        let ri = &self.matrix * &xi - &im;
        let fnorm = (re.norm_squared() + im.norm_squared()).sqrt();
        let res = (rr.norm_squared() + ri.norm_squared()).sqrt() / fnorm.max(f64::MIN_POSITIVE);
        let coeffs = xr.iter().zip(xi.iter()).map(|(a, b)| C64::new(*a, *b)).collect();
        Ok((SpectralField { domain: self.domain.clone(), coeffs }, if fnorm == 0.0 { 0.0 } else { res }))
    }
}

/// Right-hand side of the correction problem: moments of q P^s g.
pub fn correction_rhs(q: &Potential, base: &InhomFunction) -> SpectralField {
    q.moments_of_product(base)
}

/// Direct Galerkin solve of ((-Δ_{D,0})^s - q) ṽ = q P^s g.
pub fn schrodinger_direct(q: &Potential, g: &BoundaryField, s: f64) -> Result<SchrodingerSolution> {
    let solver = DirectSolver::new(q, s)?;
    schrodinger_direct_with(&solver, q, g, s)
}

/// Direct solve reusing a factored operator.
pub fn schrodinger_direct_with(
    solver: &DirectSolver,
    q: &Potential,
    g: &BoundaryField,
    s: f64,
) -> Result<SchrodingerSolution> {
    let base = fractional_poisson(g, s)?;
    let f = correction_rhs(q, &base);
    let (correction, residual) = solver.solve(&f)?;
    Ok(SchrodingerSolution { correction, base, method: SolveMethod::Direct, diagnostic: residual })
}

/// Power-iteration estimate of the spectral radius of G^s M_q.
pub fn contraction_estimate(q: &Potential, s: f64) -> f64 {
    let d = q.domain();
    let lam = d.eigenvalues();
    let dh: Vec<f64> = lam.iter().map(|l| l.powf(-0.5 * s)).collect();
    let apply = |v: &[C64]| -> Vec<C64> {
        let scaled: Vec<C64> = v.iter().zip(&dh).map(|(a, b)| a * b).collect();
        let out = q.multiply(&SpectralField { domain: d.clone(), coeffs: scaled });
        out.coeffs.iter().zip(&dh).map(|(a, b)| a * b).collect()
    };
    let mut v: Vec<C64> = (0..d.mode_count()).map(|i| C64::new(1.0 / (1.0 + i as f64).sqrt(), 0.0)).collect();
    let norm = |v: &[C64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut est = 0.0;
    for _ in 0..500 {
        let w = apply(&v);
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        // Two steps per update so that ±ρ pairs do not oscillate the estimate.
        let w2 = apply(&w.iter().map(|x| x / nw).collect::<Vec<_>>());
        let nw2 = norm(&w2);
        let new = (nw * nw2).sqrt();
        v = w2.iter().map(|x| x / nw2).collect();
        if (new - est).abs() <= 1e-12 * new {
            return new;
        }
        est = new;
    }
    est
}

/// Born series Σ_{j=1}^{terms} (G^s M_q)^j P^s g.
pub fn schrodinger_born(q: &Potential, g: &BoundaryField, s: f64, terms: usize) -> Result<SchrodingerSolution> {
    check_inverse_range(s)?;
    if terms == 0 {
        return Err(Error::OutOfRange("at least one Born term required".into()));
    }
    let rho = if terms > 1 { contraction_estimate(q, s) } else { 0.0 };
    if rho >= 1.0 {
        return Err(Error::NotContractive { radius: rho });
    }
    let base = fractional_poisson(g, s)?;
    let f = correction_rhs(q, &base);
    let mut term = green_apply(&f, s)?;
    let mut acc = term.clone();
    for _ in 1..terms {
        term = green_apply(&q.multiply(&term), s)?;
        for (a, t) in acc.coeffs.iter_mut().zip(&term.coeffs) {
            *a += t;
        }
    }
    Ok(SchrodingerSolution { correction: acc, base, method: SolveMethod::Born { terms }, diagnostic: rho })
}

/// One-term Born solution v[g] = G^s(q P^s g).
pub fn born_first(q: &Potential, base: &InhomFunction, s: f64) -> Result<SpectralField> {
    green_apply(&correction_rhs(q, base), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::Mode;
    use std::f64::consts::PI;

    fn max_diff(a: &GridField, f: impl Fn(&[f64]) -> f64) -> f64 {
        (0..a.values.len())
            .map(|i| (a.values[i] - C64::new(f(&a.domain.grid_point(i)), 0.0)).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn extension_of_constants_and_coordinates() {
        for dim in 1..=3 {
            let d = BoxDomain::new(vec![PI; dim], vec![6; dim], vec![12; dim]).unwrap();
            let one = harmonic_extension(&BoundaryField::from_real_fn(&d, |_| 1.0));
            assert!(max_diff(&one.interior, |_| 1.0) < 1e-12, "dim {dim}");
            let x = harmonic_extension(&BoundaryField::from_real_fn(&d, |x| x[0]));
            assert!(max_diff(&x.interior, |x| x[0]) < 1e-8, "dim {dim}");
            let z = harmonic_extension(&BoundaryField::zeros(&d));
            assert!(z.interior.max_abs() == 0.0);
        }
    }

    #[test]
    fn extension_of_harmonic_exponential_2d() {
        let d = BoxDomain::new(vec![PI, PI], vec![64, 64], vec![128, 128]).unwrap();
        let f = |x: &[f64]| x[0].exp() * x[1].cos();
        let u = harmonic_extension(&BoundaryField::from_real_fn(&d, f));
        let e = max_diff(&u.interior, f);
        assert!(e < 1e-6, "{e}");
    }

    #[test]
    fn extension_of_harmonic_polynomial_3d_converges() {
        let f = |x: &[f64]| x[0] * x[0] - x[2] * x[2] + x[0] * x[1] * x[2];
        let err = |g: usize| {
            let d = BoxDomain::new(vec![1.0, 1.2, 0.9], vec![g / 2; 3], vec![g; 3]).unwrap();
            let u = harmonic_extension(&BoundaryField::from_real_fn(&d, f));
            max_diff(&u.interior, f)
        };
        let (e1, e2) = (err(12), err(24));
        assert!(e2 < 1e-2 && e1 / e2 > 2.0, "{e1} {e2}");
    }

    #[test]
    fn green_round_trip() {
        let d = BoxDomain::cube(2, 4).unwrap();
        let v = SpectralField::unit(&d, &Mode::new(&[1, 1])).unwrap();
        let g = green_apply(&v, 0.5).unwrap();
        assert!((g.coeffs[0].re - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_potential_is_diagonal() {
        let d = BoxDomain::cube(2, 8).unwrap();
        let eps = 0.1;
        let q = Potential::from_fn(&d, |_| eps);
        let g = BoundaryField::from_real_fn(&d, |_| 1.0);
        let sol = schrodinger_direct(&q, &g, 0.75).unwrap();
        let one = crate::fracops::moment_pair(&InhomFunction::from_real_fn(&d, |_| 1.0)).0;
        let lam = d.eigenvalues();
        for i in 0..d.mode_count() {
            let expected = one.coeffs[i] * eps / (lam[i].powf(0.75) - eps);
            assert!((sol.correction.coeffs[i] - expected).norm() < 1e-12);
        }
        assert!(sol.diagnostic < 1e-10);
    }

    #[test]
    fn singular_shift_is_rejected() {
        let d = BoxDomain::cube(2, 4).unwrap();
        let q = Potential::from_fn(&d, |_| 2f64.powf(0.75));
        assert!(matches!(DirectSolver::new(&q, 0.75), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn born_matches_direct() {
        let d = BoxDomain::cube(2, 12).unwrap();
        let bump = |x: &[f64]| {
            let r2 = (x[0] - 1.5).powi(2) + (x[1] - 1.6).powi(2);
            if r2 < 1.0 {
                0.5 * (1.0 - r2).powi(4)
            } else {
                0.0
            }
        };
        let q = Potential::from_fn(&d, bump);
        let g = BoundaryField::from_real_fn(&d, |x| 1.0 + x[0]);
        let direct = schrodinger_direct(&q, &g, 0.75).unwrap();
        let born = schrodinger_born(&q, &g, 0.75, 30).unwrap();
        assert!(born.diagnostic < 0.5);
        let diff = direct
            .correction
            .coeffs
            .iter()
            .zip(&born.correction.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
        let one = schrodinger_born(&q, &g, 0.75, 1).unwrap();
        let v = born_first(&q, &one.base, 0.75).unwrap();
        assert_eq!(one.correction.coeffs, v.coeffs);
    }
}
