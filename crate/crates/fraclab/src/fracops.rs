//! Spectral fractional operators, Sobolev scales and boundary identities.
//!
//! For u with Dirichlet trace g the coefficients of (-Δ_D)^s u are
//! λ_k^s (<u,φ_k> + λ_k^{-1} <u,∂_ν φ_k>). Volume moments use the closed-grid
//! sine-moment rule and boundary moments the same rule per face.

use crate::eigenbasis::{
    analyze, analyze_closed, boundary_inner, closed_from, normal_derivative_moments, normal_derivative_synthesis,
    synthesize_closed, trace_of_closed, BoundaryField, BoxDomain, GridField, SpectralField,
};
use crate::error::{Error, Result};
use crate::numerics::{fd_d2, C64};

/// A function on the closed box given by interior samples and a Dirichlet trace.
#[derive(Debug, Clone, PartialEq)]
pub struct InhomFunction {
    pub interior: GridField,
    pub trace: BoundaryField,
    pub laplacian_trace: Option<BoundaryField>,
}

impl InhomFunction {
    pub fn new(interior: GridField, trace: BoundaryField) -> Result<Self> {
        if interior.domain != trace.domain {
            return Err(Error::ShapeMismatch("interior and trace on different domains".into()));
        }
        Ok(Self { interior, trace, laplacian_trace: None })
    }

    pub fn with_laplacian_trace(mut self, lap: BoundaryField) -> Result<Self> {
        if lap.domain != self.trace.domain {
            return Err(Error::ShapeMismatch("laplacian trace on a different domain".into()));
        }
        self.laplacian_trace = Some(lap);
        Ok(self)
    }

    /// Samples a function continuous up to the boundary.
    pub fn from_fn(domain: &BoxDomain, f: impl Fn(&[f64]) -> C64) -> Self {
        Self {
            interior: GridField::from_fn(domain, &f),
            trace: BoundaryField::from_fn(domain, &f),
            laplacian_trace: None,
        }
    }

    pub fn from_real_fn(domain: &BoxDomain, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(domain, |x| C64::new(f(x), 0.0))
    }

    /// Zero-trace function with the given interior samples.
    pub fn compactly_supported(interior: GridField) -> Self {
        let trace = BoundaryField::zeros(&interior.domain);
        Self { interior, trace, laplacian_trace: None }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.interior.domain
    }

    /// Samples on the closed grid.
    pub fn closed(&self) -> Vec<C64> {
        closed_from(&self.interior, &self.trace).expect("domains checked at construction")
    }

    /// Assembles from closed-grid samples.
    pub fn from_closed(domain: &BoxDomain, closed: &[C64]) -> Self {
        Self {
            interior: crate::eigenbasis::interior_of_closed(domain, closed),
            trace: trace_of_closed(domain, closed),
            laplacian_trace: None,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut interior = self.interior.clone();
        if self.interior.domain != other.interior.domain {
            return Err(Error::ShapeMismatch("functions on different domains".into()));
        }
        for (a, b) in interior.values.iter_mut().zip(&other.interior.values) {
            *a += b;
        }
        Ok(Self { interior, trace: self.trace.add(&other.trace)?, laplacian_trace: None })
    }

    pub fn scale(&self, a: C64) -> Self {
        let mut interior = self.interior.clone();
        interior.values.iter_mut().for_each(|v| *v *= a);
        Self {
            interior,
            trace: self.trace.scale(a),
            laplacian_trace: self.laplacian_trace.as_ref().map(|l| l.scale(a)),
        }
    }
}

fn check_open(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfRange(format!("s = {s} not in (0,1)")));
    }
    Ok(())
}

/// (-Δ_{D,0})^s v: coefficient-wise multiplication by λ_k^s.
pub fn apply_homogeneous(v: &SpectralField, s: f64) -> Result<SpectralField> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::OutOfRange(format!("s = {s} not in (0,1]")));
    }
    Ok(scale_by_power(v, s))
}

/// Multiplies coefficients by λ_k^p for any real p.
pub fn scale_by_power(v: &SpectralField, p: f64) -> SpectralField {
    let lam = v.domain.eigenvalues();
    let coeffs = v.coeffs.iter().zip(&lam).map(|(c, l)| c * l.powf(p)).collect();
    SpectralField { domain: v.domain.clone(), coeffs }
}

/// Interior moments <u,φ_k> and boundary moments <u,∂_ν φ_k>.
/// A trace that is identically zero selects the plain sine transform.
pub fn moment_pair(u: &InhomFunction) -> (SpectralField, SpectralField) {
    let d = u.domain();
    if u.trace.max_abs() == 0.0 {
        return (analyze(&u.interior), SpectralField::zeros(d));
    }
    (analyze_closed(d, &u.closed()), normal_derivative_moments(&u.trace))
}

/// Coefficients of (-Δ_D)^s u.
pub fn inhom_coefficients(u: &InhomFunction, s: f64) -> Result<SpectralField> {
    check_open(s)?;
    let (a, b) = moment_pair(u);
    let lam = u.domain().eigenvalues();
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .zip(&lam)
        .map(|((a, b), l)| (a + b / *l) * l.powf(s))
        .collect();
    Ok(SpectralField { domain: a.domain, coeffs })
}

/// Truncated H^γ norm sqrt(sum λ_k^γ |c_k|^2).
pub fn sobolev_norm(v: &SpectralField, gamma: f64) -> f64 {
    let lam = v.domain.eigenvalues();
    v.coeffs.iter().zip(&lam).map(|(c, l)| l.powf(gamma) * c.norm_sqr()).sum::<f64>().sqrt()
}

/// Truncated D^γ quadratic form: the H^γ norm of the corrected coefficients
/// <u,φ_k> + λ_k^{-1}<u,∂_ν φ_k>. No membership certificate is implied.
pub fn inhom_sobolev_form(u: &InhomFunction, gamma: f64) -> f64 {
    let (a, b) = moment_pair(u);
    let lam = u.domain().eigenvalues();
    let coeffs = a.coeffs.iter().zip(&b.coeffs).zip(&lam).map(|((a, b), l)| a + b / *l).collect();
    sobolev_norm(&SpectralField { domain: a.domain, coeffs }, gamma)
}

/// Residual of the integration-by-parts formula
/// <u,∂_ν w_v> - ((-Δ_D)^s u, v) + (u, (-Δ_{D,0})^s v), with (-Δ_{D,0})^{1-s} w_v = v.
/// The boundary term uses face quadrature of the sampled trace against the
/// synthesized Neumann trace of w_v; the volume terms use coefficient sums.
pub fn ibp_residual(u: &InhomFunction, v: &SpectralField, s: f64) -> Result<f64> {
    check_open(s)?;
    if *u.domain() != v.domain {
        return Err(Error::ShapeMismatch("u and v on different domains".into()));
    }
    let w = scale_by_power(v, s - 1.0);
    let dn_w = normal_derivative_synthesis(&w);
    let left = boundary_inner(&u.trace, &dn_w)?;
    let fu = inhom_coefficients(u, s)?;
    let (a, _) = moment_pair(u);
    let fv = scale_by_power(v, s);
    let mid: C64 = fu.coeffs.iter().zip(&v.coeffs).map(|(x, y)| x * y.conj()).sum();
    let right: C64 = a.coeffs.iter().zip(&fv.coeffs).map(|(x, y)| x * y.conj()).sum();
    Ok((left - mid + right).norm())
}

/// Closed-grid samples of -Δu: fourth-order differences inside, the supplied
/// Laplacian trace on the boundary.
fn neg_laplacian_closed(u: &InhomFunction) -> Result<Vec<C64>> {
    let d = u.domain();
    let lap_tr = u
        .laplacian_trace
        .as_ref()
        .ok_or_else(|| Error::MissingInput("laplacian trace required".into()))?;
    let closed = u.closed();
    let shape = d.closed_shape();
    let mut lap = vec![C64::new(0.0, 0.0); closed.len()];
    for a in 0..d.dim() {
        let dd = fd_d2(&closed, &shape, a, d.spacing(a));
        for (l, v) in lap.iter_mut().zip(dd) {
            *l -= v;
        }
    }
    let interior = crate::eigenbasis::interior_of_closed(d, &lap);
    closed_from(&interior, &lap_tr.scale(C64::new(-1.0, 0.0)))
}

/// Coefficient-wise difference (-Δ_D)^s(-Δu) - (-Δ)(-Δ_D)^s u.
///
/// The first term is evaluated with the inhomogeneous formula applied to -Δu;
/// the second applies Green's identity to the sine series F = (-Δ_D)^s u,
/// giving λ_k F_k + <F,∂_ν φ_k>.
pub fn noncommutation_gap(u: &InhomFunction, s: f64) -> Result<SpectralField> {
    check_open(s)?;
    let d = u.domain();
    let neg_lap = neg_laplacian_closed(u)?;
    let first = inhom_coefficients(&InhomFunction::from_closed(d, &neg_lap), s)?;
    let f = inhom_coefficients(u, s)?;
    let f_trace = trace_of_closed(d, &synthesize_closed(&f));
    let f_bnd = normal_derivative_moments(&f_trace);
    let lam = d.eigenvalues();
    let coeffs = first
        .coeffs
        .iter()
        .zip(&f.coeffs)
        .zip(&f_bnd.coeffs)
        .zip(&lam)
        .map(|(((a, fk), fb), l)| a - (fk * *l + fb))
        .collect();
    Ok(SpectralField { domain: d.clone(), coeffs })
}

/// Closed form of the gap:
/// λ^{s+1}(-λ^{-2}<Δu,∂_ν φ> - λ^{-(s+1)}<(-Δ_D)^s u,∂_ν φ>).
pub fn noncommutation_gap_closed_form(u: &InhomFunction, s: f64) -> Result<SpectralField> {
    check_open(s)?;
    let d = u.domain();
    let lap_tr = u
        .laplacian_trace
        .as_ref()
        .ok_or_else(|| Error::MissingInput("laplacian trace required".into()))?;
    let lap_bnd = normal_derivative_moments(lap_tr);
    let f = inhom_coefficients(u, s)?;
    let f_bnd = normal_derivative_moments(&trace_of_closed(d, &synthesize_closed(&f)));
    let lam = d.eigenvalues();
    let coeffs = lap_bnd
        .coeffs
        .iter()
        .zip(&f_bnd.coeffs)
        .zip(&lam)
        .map(|((lb, fb), l)| l.powf(s + 1.0) * (-lb / (l * l) - fb / l.powf(s + 1.0)))
        .collect();
    Ok(SpectralField { domain: d.clone(), coeffs })
}

/// Zero-trace shortcut: apply_homogeneous(analyze(interior), s).
pub fn homogeneous_of_grid(f: &GridField, s: f64) -> Result<SpectralField> {
    apply_homogeneous(&analyze(f), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::{Mode, SpectralField};
    use std::f64::consts::PI;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn homogeneous_examples() {
        let d = BoxDomain::cube(2, 4).unwrap();
        let v = SpectralField::unit(&d, &Mode::new(&[1, 1])).unwrap();
        let r = apply_homogeneous(&v, 0.5).unwrap();
        assert!((r.get(&Mode::new(&[1, 1])).unwrap() - c(2f64.sqrt())).norm() < 1e-15);
        let r1 = apply_homogeneous(&v, 1.0).unwrap();
        assert!((r1.coeffs[0] - c(2.0)).norm() < 1e-15);
        let mut w = SpectralField::zeros(&d);
        w.coeffs[d.mode_index(&Mode::new(&[1, 1])).unwrap()] = c(1.0);
        w.coeffs[d.mode_index(&Mode::new(&[2, 2])).unwrap()] = c(1.0);
        let r = apply_homogeneous(&w, 0.7).unwrap();
        assert!((r.get(&Mode::new(&[1, 1])).unwrap().re - 2f64.powf(0.7)).abs() < 1e-14);
        assert!((r.get(&Mode::new(&[2, 2])).unwrap().re - 8f64.powf(0.7)).abs() < 1e-13);
        assert!(apply_homogeneous(&w, 0.0).is_err());
        assert!(apply_homogeneous(&w, 1.2).is_err());
    }

    #[test]
    fn constant_has_zero_output() {
        let d = BoxDomain::cube(1, 256).unwrap();
        let u = InhomFunction::from_real_fn(&d, |_| 1.0);
        for s in [0.3, 0.55, 0.75, 0.95] {
            let r = inhom_coefficients(&u, s).unwrap();
            assert!(r.max_abs() < 1e-8, "s={s} {}", r.max_abs());
        }
    }

    #[test]
    fn coordinate_has_zero_output() {
        let d = BoxDomain::cube(1, 256).unwrap();
        let u = InhomFunction::from_real_fn(&d, |x| x[0]);
        let (a, _) = moment_pair(&u);
        // <x, φ_k> = sqrt(2/π) (-π cos kπ)/k
        for k in [1usize, 2, 7, 100] {
            let exact = (2.0 / PI).sqrt() * (-PI * (k as f64 * PI).cos()) / k as f64;
            assert!((a.coeffs[k - 1].re - exact).abs() < 1e-11);
        }
        let r = inhom_coefficients(&u, 0.6).unwrap();
        assert!(r.max_abs() < 1e-8);
    }

    #[test]
    fn zero_trace_matches_homogeneous() {
        let d = BoxDomain::cube(2, 8).unwrap();
        let v = SpectralField::unit(&d, &Mode::new(&[1, 1])).unwrap();
        let u = InhomFunction::compactly_supported(crate::eigenbasis::synthesize(&v));
        let r = inhom_coefficients(&u, 0.5).unwrap();
        for (i, m) in d.all_modes().iter().enumerate() {
            let t = if m.0 == [1, 1] { 2f64.sqrt() } else { 0.0 };
            assert!((r.coeffs[i] - c(t)).norm() < 1e-12);
        }
        assert!(inhom_coefficients(&u, 1.0).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let d = BoxDomain::cube(2, 4).unwrap();
        let v = SpectralField::unit(&d, &Mode::new(&[1, 1])).unwrap();
        assert!((sobolev_norm(&v, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        let mut w = SpectralField::zeros(&d);
        w.coeffs[0] = c(3.0);
        w.coeffs[1] = C64::new(0.0, 4.0);
        assert!((sobolev_norm(&w, 0.0) - 5.0).abs() < 1e-14);
        let exact = (9.0 / 2.0 + 16.0 / 5.0f64).sqrt();
        assert!((sobolev_norm(&w, -1.0) - exact).abs() < 1e-14);
    }

    #[test]
    fn ibp_examples() {
        let d = BoxDomain::cube(2, 8).unwrap();
        let v = SpectralField::unit(&d, &Mode::new(&[1, 2])).unwrap();
        let u = InhomFunction::compactly_supported(GridField::from_real_fn(&d, |x| {
            (x[0] * (PI - x[0]) * x[1] * (PI - x[1])).powi(3)
        }));
        assert!(ibp_residual(&u, &v, 0.7).unwrap() <= 1e-10);
        let d1 = BoxDomain::cube(1, 256).unwrap();
        let u = InhomFunction::from_real_fn(&d1, |x| x[0]);
        let v = SpectralField::unit(&d1, &Mode::new(&[3])).unwrap();
        assert!(ibp_residual(&u, &v, 0.6).unwrap() <= 1e-8);
    }

    #[test]
    fn gap_examples() {
        let d = BoxDomain::cube(1, 64).unwrap();
        let u = InhomFunction::from_real_fn(&d, |x| x[0] * x[0])
            .with_laplacian_trace(BoundaryField::from_real_fn(&d, |_| 2.0))
            .unwrap();
        let g = noncommutation_gap(&u, 0.5).unwrap();
        let cf = noncommutation_gap_closed_form(&u, 0.5).unwrap();
        for (a, b) in g.coeffs.iter().zip(&cf.coeffs) {
            assert!((a - b).norm() < 1e-6 * (1.0 + b.norm()), "{a} {b}");
        }
        let one = InhomFunction::from_real_fn(&d, |_| 1.0)
            .with_laplacian_trace(BoundaryField::zeros(&d))
            .unwrap();
        assert!(noncommutation_gap(&one, 0.5).unwrap().max_abs() < 1e-8);
        // Zero traces: the closed form vanishes identically and the computed gap is
        // fourth-order small relative to the size of either expansion.
        let gap_ratio = |m: usize| {
            let d = BoxDomain::new(vec![PI], vec![m], vec![8 * m]).unwrap();
            let bump = InhomFunction::from_real_fn(&d, |x| x[0].sin().powi(8))
                .with_laplacian_trace(BoundaryField::zeros(&d))
                .unwrap();
            assert!(noncommutation_gap_closed_form(&bump, 0.5).unwrap().max_abs() < 1e-12);
            let scale = inhom_coefficients(&bump, 0.5).unwrap().max_abs();
            noncommutation_gap(&bump, 0.5).unwrap().max_abs() / scale
        };
        let (e1, e2) = (gap_ratio(16), gap_ratio(32));
        assert!(e2 < 1e-5 && e1 / e2 > 12.0, "{e1} {e2}");
        let missing = InhomFunction::from_real_fn(&d, |_| 1.0);
        assert!(matches!(noncommutation_gap(&missing, 0.5), Err(Error::MissingInput(_))));
    }
}
