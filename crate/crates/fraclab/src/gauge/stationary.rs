//! Stationary phase for ∫_{ℝ²} e^{i y·Ay/(2h)} a(y) dy with a quadratic phase.
//!
//! Amplitudes are polynomials times an isotropic Gaussian, which keeps every
//! derivative exact and gives a closed-form reference value via Gaussian moments.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, C64};

/// ∫_{ℝ²} dξ / (1 + |ξ1|³ + |ξ2|³).
pub const K_FOURIER: f64 = 8.544875312264752;
/// Remainder constant K/(4π²): ∫|f̂| dξ/(2π)² ≤ C_A Σ_{|α|≤3} ‖∂^α f‖_{L¹}.
pub const C_A: f64 = K_FOURIER / (4.0 * PI * PI);

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPhase {
    pub a: [[f64; 2]; 2],
    pub h: f64,
}

impl QuadraticPhase {
    pub fn new(a: [[f64; 2]; 2], h: f64) -> Result<Self> {
        if a[0][1] != a[1][0] {
            return Err(Error::Degenerate("phase matrix is not symmetric".into()));
        }
        if !(h > 0.0) {
            return Err(Error::OutOfRange(format!("h must be positive, got {h}")));
        }
        let p = Self { a, h };
        if p.det() == 0.0 {
            return Err(Error::Degenerate("phase matrix is singular".into()));
        }
        Ok(p)
    }

    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let d = self.det();
        [[self.a[1][1] / d, -self.a[0][1] / d], [-self.a[1][0] / d, self.a[0][0] / d]]
    }

    /// Number of positive minus number of negative eigenvalues.
    pub fn signature(&self) -> i32 {
        let tr = self.a[0][0] + self.a[1][1];
        let disc = ((self.a[0][0] - self.a[1][1]).powi(2) / 4.0 + self.a[0][1].powi(2)).sqrt();
        [tr / 2.0 + disc, tr / 2.0 - disc].iter().map(|&l| if l > 0.0 { 1 } else { -1 }).sum()
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        let tr = self.a[0][0] + self.a[1][1];
        let disc = ((self.a[0][0] - self.a[1][1]).powi(2) / 4.0 + self.a[0][1].powi(2)).sqrt();
        (tr / 2.0 + disc).abs().max((tr / 2.0 - disc).abs())
    }
}

/// Σ c_pq y1^p y2^q · e^{−γ|y|²}.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyGauss {
    pub gamma: f64,
    pub coeffs: BTreeMap<(u32, u32), C64>,
}

impl PolyGauss {
    pub fn new(gamma: f64, terms: &[((u32, u32), C64)]) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::OutOfRange(format!("Gaussian rate must be positive, got {gamma}")));
        }
        let mut coeffs = BTreeMap::new();
        for &(k, c) in terms {
            *coeffs.entry(k).or_insert(C64::new(0.0, 0.0)) += c;
        }
        Ok(Self { gamma, coeffs })
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|(p, q)| p + q).max().unwrap_or(0)
    }

    pub fn eval(&self, y: [f64; 2]) -> C64 {
        let g = (-self.gamma * (y[0] * y[0] + y[1] * y[1])).exp();
        self.coeffs.iter().map(|(&(p, q), c)| c * y[0].powi(p as i32) * y[1].powi(q as i32)).sum::<C64>() * g
    }

    pub fn at_origin(&self) -> C64 {
        self.coeffs.get(&(0, 0)).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    fn add_term(map: &mut BTreeMap<(u32, u32), C64>, k: (u32, u32), c: C64) {
        *map.entry(k).or_insert(C64::new(0.0, 0.0)) += c;
    }

    pub fn deriv(&self, axis: usize) -> Self {
        let mut out = BTreeMap::new();
        for (&(p, q), &c) in &self.coeffs {
            let (e, up) = if axis == 0 { (p, (p + 1, q)) } else { (q, (p, q + 1)) };
            if e > 0 {
                let down = if axis == 0 { (p - 1, q) } else { (p, q - 1) };
                Self::add_term(&mut out, down, c * e as f64);
            }
            Self::add_term(&mut out, up, c * (-2.0 * self.gamma));
        }
        Self { gamma: self.gamma, coeffs: out }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { gamma: self.gamma, coeffs: self.coeffs.iter().map(|(&k, &c)| (k, c * s)).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.coeffs.clone();
        for (&k, &c) in &o.coeffs {
            Self::add_term(&mut out, k, c);
        }
        Self { gamma: self.gamma, coeffs: out }
    }

    /// P a = (i/2) A^{-1}:∇²a.
    pub fn apply_p(&self, phase: &QuadraticPhase) -> Self {
        let inv = phase.inverse();
        let (d0, d1) = (self.deriv(0), self.deriv(1));
        let d00 = d0.deriv(0).scale(C64::new(inv[0][0], 0.0));
        let d11 = d1.deriv(1).scale(C64::new(inv[1][1], 0.0));
        let d01 = d0.deriv(1).scale(C64::new(inv[0][1] + inv[1][0], 0.0));
        d00.add(&d11).add(&d01).scale(C64::new(0.0, 0.5))
    }

    /// Truncation half-width beyond which the Gaussian factor is negligible.
    pub fn radius(&self) -> f64 {
        ((46.0 + 2.0 * self.degree() as f64) / self.gamma).sqrt()
    }

    /// ‖a‖_{L¹} by tensor Gauss–Legendre.
    pub fn l1_norm(&self) -> f64 {
        let r = self.radius();
        let (x, w) = composite_gl(-r, r, 32);
        let total: f64 = x
            .par_iter()
            .zip(&w)
            .map(|(&a, &wa)| x.iter().zip(&w).map(|(&b, &wb)| self.eval([a, b]).norm() * wb).sum::<f64>() * wa)
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        total
    }
}

fn composite_gl(lo: f64, hi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(16);
    let width = (hi - lo) / panels as f64;
    let mut x = Vec::with_capacity(panels * 16);
    let mut w = Vec::with_capacity(panels * 16);
    for k in 0..panels {
        let c = lo + (k as f64 + 0.5) * width;
        for (a, b) in gx.iter().zip(&gw) {
            x.push(c + 0.5 * width * a);
            w.push(0.5 * width * b);
        }
    }
    (x, w)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// ∫ e^{i y·Ay/(2h)} a(y) dy from Gaussian moments with M = 2γI − iA/h.
pub fn exact_integral(a: &PolyGauss, phase: &QuadraticPhase) -> C64 {
    let i = C64::new(0.0, 1.0);
    let m = [
        [C64::new(2.0 * a.gamma, 0.0) - i * phase.a[0][0] / phase.h, -i * phase.a[0][1] / phase.h],
        [-i * phase.a[1][0] / phase.h, C64::new(2.0 * a.gamma, 0.0) - i * phase.a[1][1] / phase.h],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let (c11, c22, c12) = (m[1][1] / det, m[0][0] / det, -m[0][1] / det);
    let z = C64::new(2.0 * PI, 0.0) / det.sqrt();
    let moment = |p: u32, q: u32| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..=p.min(q) {
            if (p - k) % 2 != 0 || (q - k) % 2 != 0 {
                continue;
            }
            let (a2, b2) = ((p - k) / 2, (q - k) / 2);
            let comb = factorial(p) * factorial(q)
                / (factorial(k) * factorial(a2) * factorial(b2) * 2f64.powi((a2 + b2) as i32));
            acc += c12.powu(k) * c11.powu(a2) * c22.powu(b2) * comb;
        }
        acc
    };
    a.coeffs.iter().map(|(&(p, q), c)| c * moment(p, q)).sum::<C64>() * z
}

/// Reference value by tensor Gauss–Legendre with about 20‖A‖R/h nodes per axis.
pub fn quadrature_integral(a: &PolyGauss, phase: &QuadraticPhase) -> C64 {
    let r = a.radius();
    let nodes = (20.0 * phase.norm() * r / phase.h).ceil().max(256.0) as usize;
    let (x, w) = composite_gl(-r, r, nodes.div_ceil(16));
    let half = 0.5 / phase.h;
    x.par_iter()
        .zip(&w)
        .map(|(&y1, &w1)| {
            x.iter()
                .zip(&w)
                .map(|(&y2, &w2)| {
                    let q = phase.a[0][0] * y1 * y1 + 2.0 * phase.a[0][1] * y1 * y2 + phase.a[1][1] * y2 * y2;
                    C64::from_polar(1.0, q * half) * a.eval([y1, y2]) * w2
                })
                .sum::<C64>()
                * w1
        })
        .collect::<Vec<C64>>()
        .iter()
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    /// 2πh e^{iπ sgn A/4}|det A|^{-1/2} Σ_{k<N} h^k (P^k a)(0)/k!.
    pub value: C64,
    /// 2πh|det A|^{-1/2} (h^N/N!) C_A Σ_{|α|≤3} ‖∂^α P^N a‖_{L¹}.
    pub bound: f64,
    /// Individual h^k (P^k a)(0)/k! before the prefactor.
    pub terms: Vec<C64>,
}

pub fn stationary_phase_expand(a: &PolyGauss, phase: &QuadraticPhase, order: u32) -> Result<Expansion> {
    if order == 0 {
        return Err(Error::OutOfRange("expansion order must be >= 1".into()));
    }
    let h = phase.h;
    let scale = 2.0 * PI * h / phase.det().abs().sqrt();
    let pre = C64::from_polar(scale, PI * phase.signature() as f64 / 4.0);
    let mut cur = a.clone();
    let mut terms = Vec::with_capacity(order as usize);
    for k in 0..order {
        terms.push(cur.at_origin() * (h.powi(k as i32) / factorial(k)));
        cur = cur.apply_p(phase);
    }
    // cur = P^N a
    let mut l1 = 0.0;
    for d in 0..=3u32 {
        for j in 0..=d {
            let mut f = cur.clone();
            for _ in 0..j {
                f = f.deriv(0);
            }
            for _ in 0..(d - j) {
                f = f.deriv(1);
            }
            l1 += f.l1_norm();
        }
    }
    let bound = scale * h.powi(order as i32) / factorial(order) * C_A * l1;
    Ok(Expansion { value: pre * terms.iter().sum::<C64>(), bound, terms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn fourier_constant_by_quadrature() {
        // 4∫_0^∞∫_0^∞ (1 + a³ + b³)^{-1}, inner integral in closed form.
        let inner = 2.0 * PI / (3.0 * 3f64.sqrt());
        let (x, w) = gauss_legendre(200);
        // a = t/(1−t) on (0,1).
        let total: f64 = x
            .iter()
            .zip(&w)
            .map(|(&s, &ws)| {
                let t = 0.5 * (s + 1.0);
                let a = t / (1.0 - t);
                (1.0 + a * a * a).powf(-2.0 / 3.0) / (1.0 - t).powi(2) * 0.5 * ws
            })
            .sum();
        assert!((4.0 * inner * total - K_FOURIER).abs() < 1e-6, "{}", 4.0 * inner * total);
    }

    #[test]
    fn phase_checks() {
        assert!(QuadraticPhase::new([[1.0, 2.0], [2.0, 4.0]], 0.1).is_err());
        let p = QuadraticPhase::new([[0.0, 4.0], [4.0, 0.0]], 0.1).unwrap();
        assert_eq!(p.signature(), 0);
        assert_eq!(p.det().abs().sqrt().recip(), 0.25);
        assert_eq!(QuadraticPhase::new([[1.0, 0.0], [0.0, 1.0]], 0.1).unwrap().signature(), 2);
    }

    #[test]
    fn wick_matches_quadrature() {
        let a = PolyGauss::new(1.0, &[((0, 0), c(1.0)), ((1, 1), C64::new(0.3, 0.2)), ((2, 0), c(-0.5))]).unwrap();
        for m in [[[1.0, 0.0], [0.0, 1.0]], [[0.0, 4.0], [4.0, 0.0]], [[2.0, 0.5], [0.5, -1.0]]] {
            let p = QuadraticPhase::new(m, 0.1).unwrap();
            let e = exact_integral(&a, &p);
            let q = quadrature_integral(&a, &p);
            assert!((e - q).norm() < 1e-10 * e.norm().max(1e-3), "{e} {q}");
        }
        // h → ∞ limit: plain Gaussian integral π/γ.
        let g = PolyGauss::new(2.0, &[((0, 0), c(1.0))]).unwrap();
        let p = QuadraticPhase::new([[1.0, 0.0], [0.0, 1.0]], 1e12).unwrap();
        assert!((exact_integral(&g, &p) - c(PI / 2.0)).norm() < 1e-9);
    }

    #[test]
    fn derivatives_exact() {
        let a = PolyGauss::new(0.7, &[((2, 1), c(1.0)), ((0, 0), c(0.4))]).unwrap();
        let d = a.deriv(0);
        let y = [0.3, -0.8];
        let eps = 1e-5;
        let fd = (a.eval([y[0] + eps, y[1]]) - a.eval([y[0] - eps, y[1]])) / (2.0 * eps);
        assert!((d.eval(y) - fd).norm() < 1e-8);
    }

    #[test]
    fn vanishing_jet_gives_cubic_decay() {
        // a(0) = 0 and P a(0) = 0 for A = diag(1, 2).
        let a = PolyGauss::new(1.0, &[((2, 0), c(1.0)), ((0, 2), c(-2.0))]).unwrap();
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let p = QuadraticPhase::new([[1.0, 0.0], [0.0, 2.0]], h).unwrap();
            let e = stationary_phase_expand(&a, &p, 2).unwrap();
            assert!(e.value.norm() < 1e-15);
            errs.push(exact_integral(&a, &p).norm());
        }
        let slope = (errs[0] / errs[1]).log2();
        assert!(slope > 2.9, "{slope}");
    }
}
