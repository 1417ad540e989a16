//! Closed-form Dirichlet eigenpairs on boxes, sine transforms and boundary traces.
//!
//! The box is (0,L_1) x ... x (0,L_n). Axis i carries N_i retained modes and
//! G_i interior grid nodes x_j = j L_i/(G_i+1), j = 1..G_i, which makes the
//! discrete sine transform exact on retained modes. Faces are sampled on the
//! closed tangential grid (endpoints included) with Gregory-corrected
//! trapezoid weights. Modes are ordered lexicographically.

use crate::error::{Error, Result};
use crate::numerics::{
    apply_all_axes, apply_axis, dst_analysis, gregory_weights, product, ravel, sine_synthesis, unravel, MomentRule, RMat,
    C64,
};
use std::f64::consts::PI;
use std::sync::Arc;

/// Geometric tolerance for point-location checks.
pub const POINT_TOL: f64 = 1e-12;

#[derive(Debug)]
struct AxisTables {
    analysis: RMat,
    synth_interior: RMat,
    synth_closed: RMat,
    moments: MomentRule,
}

/// Box domain with its truncation and sampling grid.
#[derive(Debug, Clone)]
pub struct BoxDomain {
    lengths: Vec<f64>,
    modes: Vec<usize>,
    grid: Vec<usize>,
    tables: Arc<Vec<AxisTables>>,
}

impl PartialEq for BoxDomain {
    fn eq(&self, other: &Self) -> bool {
        self.lengths == other.lengths && self.modes == other.modes && self.grid == other.grid
    }
}

/// Multi-index of a Dirichlet eigenmode (components start at 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mode(pub Vec<usize>);

impl Mode {
    pub fn new(k: &[usize]) -> Self {
        Mode(k.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

/// Face x_axis = 0 (Low) or x_axis = L_axis (High).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Face {
    pub axis: usize,
    pub side: Side,
}

impl BoxDomain {
    pub fn new(lengths: Vec<f64>, modes: Vec<usize>, grid: Vec<usize>) -> Result<Self> {
        let n = lengths.len();
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidDomain(format!("dimension {n} not in 1..=3")));
        }
        if modes.len() != n || grid.len() != n {
            return Err(Error::InvalidDomain("lengths, modes and grid must have equal length".into()));
        }
        for i in 0..n {
            if !(lengths[i] > 0.0 && lengths[i].is_finite()) {
                return Err(Error::InvalidDomain(format!("length {} must be positive", lengths[i])));
            }
            if modes[i] < 1 {
                return Err(Error::InvalidDomain("mode counts must be at least 1".into()));
            }
            if grid[i] < 2 * modes[i] {
                return Err(Error::InvalidDomain(format!(
                    "grid {} below dealiasing margin 2*{}",
                    grid[i], modes[i]
                )));
            }
        }
        let tables = (0..n)
            .map(|i| {
                let (l, m, g) = (lengths[i], modes[i], grid[i]);
                let h = l / (g as f64 + 1.0);
                let interior: Vec<f64> = (1..=g).map(|j| j as f64 * h).collect();
                let closed: Vec<f64> = (0..g + 2).map(|j| j as f64 * h).collect();
                AxisTables {
                    analysis: dst_analysis(l, m, g),
                    synth_interior: sine_synthesis(l, m, &interior),
                    synth_closed: sine_synthesis(l, m, &closed),
                    moments: MomentRule::new(l, m, g),
                }
            })
            .collect();
        Ok(Self { lengths, modes, grid, tables: Arc::new(tables) })
    }

    /// (0,pi)^n with `modes` per axis and grid `2*modes`.
    pub fn cube(n: usize, modes: usize) -> Result<Self> {
        Self::new(vec![PI; n], vec![modes; n], vec![2 * modes; n])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }
    pub fn grid(&self) -> &[usize] {
        &self.grid
    }
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.grid[axis] as f64 + 1.0)
    }
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }
    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }
    pub fn mode_count(&self) -> usize {
        product(&self.modes)
    }
    pub fn grid_count(&self) -> usize {
        product(&self.grid)
    }
    pub fn closed_shape(&self) -> Vec<usize> {
        self.grid.iter().map(|g| g + 2).collect()
    }
    pub fn interior_nodes(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (1..=self.grid[axis]).map(|j| j as f64 * h).collect()
    }
    pub fn closed_nodes(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.grid[axis] + 2).map(|j| j as f64 * h).collect()
    }

    /// All modes in lexicographic order.
    pub fn all_modes(&self) -> Vec<Mode> {
        let mut idx = vec![0; self.dim()];
        (0..self.mode_count())
            .map(|i| {
                unravel(i, &self.modes, &mut idx);
                Mode(idx.iter().map(|k| k + 1).collect())
            })
            .collect()
    }

    pub fn check_mode(&self, k: &Mode) -> Result<()> {
        if k.0.len() != self.dim() || k.0.iter().zip(&self.modes).any(|(&ki, &ni)| ki < 1 || ki > ni) {
            return Err(Error::ModeOutOfRange { mode: k.0.clone(), limit: self.modes.clone() });
        }
        Ok(())
    }

    pub fn mode_index(&self, k: &Mode) -> Result<usize> {
        self.check_mode(k)?;
        let zero: Vec<usize> = k.0.iter().map(|v| v - 1).collect();
        Ok(ravel(&zero, &self.modes))
    }

    /// Eigenvalues in mode order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        (0..self.mode_count())
            .map(|i| {
                unravel(i, &self.modes, &mut idx);
                idx.iter()
                    .enumerate()
                    .map(|(a, &k)| ((k + 1) as f64 * PI / self.lengths[a]).powi(2))
                    .sum()
            })
            .collect()
    }

    pub fn faces(&self) -> Vec<Face> {
        (0..self.dim())
            .flat_map(|axis| [Face { axis, side: Side::Low }, Face { axis, side: Side::High }])
            .collect()
    }

    pub fn face_index(&self, face: Face) -> Result<usize> {
        if face.axis >= self.dim() {
            return Err(Error::InvalidFace { axis: face.axis, dim: self.dim() });
        }
        Ok(2 * face.axis + if face.side == Side::High { 1 } else { 0 })
    }

    pub fn tangential_axes(&self, face: Face) -> Vec<usize> {
        (0..self.dim()).filter(|&a| a != face.axis).collect()
    }

    /// Closed tangential grid shape of a face.
    pub fn face_shape(&self, face: Face) -> Vec<usize> {
        self.tangential_axes(face).iter().map(|&a| self.grid[a] + 2).collect()
    }

    /// Tensor Gregory weights of a face; they sum to the face measure.
    pub fn face_weights(&self, face: Face) -> Vec<f64> {
        let tang = self.tangential_axes(face);
        let per_axis: Vec<Vec<f64>> =
            tang.iter().map(|&a| gregory_weights(self.grid[a] + 2, self.spacing(a))).collect();
        let shape = self.face_shape(face);
        let mut idx = vec![0; shape.len()];
        (0..product(&shape))
            .map(|i| {
                unravel(i, &shape, &mut idx);
                idx.iter().enumerate().map(|(t, &j)| per_axis[t][j]).product()
            })
            .collect()
    }

    /// Full coordinates of face node `i` (flat index in the face shape).
    pub fn face_point(&self, face: Face, i: usize) -> Vec<f64> {
        let shape = self.face_shape(face);
        let mut idx = vec![0; shape.len()];
        unravel(i, &shape, &mut idx);
        let mut x = vec![0.0; self.dim()];
        let mut t = 0;
        for (a, xa) in x.iter_mut().enumerate() {
            if a == face.axis {
                *xa = if face.side == Side::High { self.lengths[a] } else { 0.0 };
            } else {
                *xa = idx[t] as f64 * self.spacing(a);
                t += 1;
            }
        }
        x
    }

    /// Closed-grid flat index of face node `i`.
    pub fn face_to_closed(&self, face: Face, i: usize) -> usize {
        let shape = self.face_shape(face);
        let mut idx = vec![0; shape.len()];
        unravel(i, &shape, &mut idx);
        let closed = self.closed_shape();
        let mut full = Vec::with_capacity(self.dim());
        let mut t = 0;
        for a in 0..self.dim() {
            if a == face.axis {
                full.push(if face.side == Side::High { self.grid[a] + 1 } else { 0 });
            } else {
                full.push(idx[t]);
                t += 1;
            }
        }
        ravel(&full, &closed)
    }

    /// Interior grid point of flat index `i`.
    pub fn grid_point(&self, i: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        unravel(i, &self.grid, &mut idx);
        idx.iter().enumerate().map(|(a, &j)| (j + 1) as f64 * self.spacing(a)).collect()
    }

    /// Closed grid point of flat index `i`.
    pub fn closed_point(&self, i: usize) -> Vec<f64> {
        let shape = self.closed_shape();
        let mut idx = vec![0; self.dim()];
        unravel(i, &shape, &mut idx);
        idx.iter().enumerate().map(|(a, &j)| j as f64 * self.spacing(a)).collect()
    }

    pub(crate) fn analysis_matrix(&self, axis: usize) -> &RMat {
        &self.tables[axis].analysis
    }
    pub(crate) fn synthesis_matrix(&self, axis: usize) -> &RMat {
        &self.tables[axis].synth_interior
    }
    pub(crate) fn closed_synthesis_matrix(&self, axis: usize) -> &RMat {
        &self.tables[axis].synth_closed
    }
    pub(crate) fn moment_rule(&self, axis: usize) -> &MomentRule {
        &self.tables[axis].moments
    }

    /// Outward normal-derivative factor of phi_k on a face for axis index k.
    fn normal_factor(&self, face: Face, k: usize) -> f64 {
        let l = self.lengths[face.axis];
        let base = (k as f64 * PI / l) * (2.0 / l).sqrt();
        match face.side {
            Side::Low => -base,
            Side::High => {
                if k % 2 == 0 {
                    base
                } else {
                    -base
                }
            }
        }
    }
}

/// Complex samples on the interior tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub domain: BoxDomain,
    pub values: Vec<C64>,
}

impl GridField {
    pub fn new(domain: &BoxDomain, values: Vec<C64>) -> Result<Self> {
        if values.len() != domain.grid_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a grid of {}",
                values.len(),
                domain.grid_count()
            )));
        }
        Ok(Self { domain: domain.clone(), values })
    }

    pub fn zeros(domain: &BoxDomain) -> Self {
        Self { domain: domain.clone(), values: vec![C64::new(0.0, 0.0); domain.grid_count()] }
    }

    pub fn from_fn(domain: &BoxDomain, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = (0..domain.grid_count()).map(|i| f(&domain.grid_point(i))).collect();
        Self { domain: domain.clone(), values }
    }

    pub fn from_real_fn(domain: &BoxDomain, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(domain, |x| C64::new(f(x), 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Coefficients <v, phi_k> over the retained modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub domain: BoxDomain,
    pub coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn new(domain: &BoxDomain, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != domain.mode_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                domain.mode_count()
            )));
        }
        Ok(Self { domain: domain.clone(), coeffs })
    }

    pub fn zeros(domain: &BoxDomain) -> Self {
        Self { domain: domain.clone(), coeffs: vec![C64::new(0.0, 0.0); domain.mode_count()] }
    }

    pub fn unit(domain: &BoxDomain, k: &Mode) -> Result<Self> {
        let mut f = Self::zeros(domain);
        f.coeffs[domain.mode_index(k)?] = C64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn get(&self, k: &Mode) -> Result<C64> {
        Ok(self.coeffs[self.domain.mode_index(k)?])
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Per-face samples on closed tangential grids, with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub domain: BoxDomain,
    pub faces: Vec<Vec<C64>>,
    pub weights: Vec<Vec<f64>>,
}

impl BoundaryField {
    pub fn zeros(domain: &BoxDomain) -> Self {
        let faces = domain.faces();
        Self {
            domain: domain.clone(),
            faces: faces.iter().map(|&f| vec![C64::new(0.0, 0.0); product(&domain.face_shape(f))]).collect(),
            weights: faces.iter().map(|&f| domain.face_weights(f)).collect(),
        }
    }

    pub fn from_fn(domain: &BoxDomain, f: impl Fn(&[f64]) -> C64) -> Self {
        let mut b = Self::zeros(domain);
        for (fi, face) in domain.faces().into_iter().enumerate() {
            for (i, v) in b.faces[fi].iter_mut().enumerate() {
                *v = f(&domain.face_point(face, i));
            }
        }
        b
    }

    pub fn from_real_fn(domain: &BoxDomain, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(domain, |x| C64::new(f(x), 0.0))
    }

    /// Samples a function given per face; used for face-local basis functions.
    pub fn from_face_fn(domain: &BoxDomain, f: impl Fn(Face, &[f64]) -> C64) -> Self {
        let mut b = Self::zeros(domain);
        for (fi, face) in domain.faces().into_iter().enumerate() {
            for (i, v) in b.faces[fi].iter_mut().enumerate() {
                *v = f(face, &domain.face_point(face, i));
            }
        }
        b
    }

    pub fn scale(&self, a: C64) -> Self {
        let mut out = self.clone();
        out.faces.iter_mut().flatten().for_each(|v| *v *= a);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::ShapeMismatch("boundary fields on different domains".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.faces.iter_mut().flatten().zip(other.faces.iter().flatten()) {
            *a += b;
        }
        Ok(out)
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        out.faces.iter_mut().flatten().for_each(|v| *v = v.conj());
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.faces.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Quadrature L2 norm on the boundary.
    pub fn l2_norm(&self) -> f64 {
        boundary_inner(self, self).map(|v| v.re.max(0.0).sqrt()).unwrap_or(0.0)
    }
}

/// Closed-form eigenvalue lambda_k.
pub fn mode_eigenvalue(domain: &BoxDomain, k: &Mode) -> Result<f64> {
    domain.check_mode(k)?;
    Ok(k.0.iter().zip(domain.lengths()).map(|(&ki, &l)| (ki as f64 * PI / l).powi(2)).sum())
}

fn check_closure(domain: &BoxDomain, x: &[f64]) -> Result<()> {
    if x.len() != domain.dim()
        || x.iter().zip(domain.lengths()).any(|(&xi, &l)| xi < -POINT_TOL || xi > l + POINT_TOL)
    {
        return Err(Error::PointOutside(x.to_vec()));
    }
    Ok(())
}

/// L2-normalized eigenfunction values at points of the closed box.
pub fn eval_eigenfunction(domain: &BoxDomain, k: &Mode, points: &[Vec<f64>]) -> Result<Vec<C64>> {
    domain.check_mode(k)?;
    points
        .iter()
        .map(|x| {
            check_closure(domain, x)?;
            let v: f64 = (0..domain.dim())
                .map(|a| crate::numerics::sine_mode(domain.lengths()[a], k.0[a], x[a]))
                .product();
            Ok(C64::new(v, 0.0))
        })
        .collect()
}

/// Outward normal derivative of phi_k at points of one face.
pub fn eval_normal_derivative(
    domain: &BoxDomain,
    k: &Mode,
    face: Face,
    points: &[Vec<f64>],
) -> Result<Vec<C64>> {
    domain.face_index(face)?;
    domain.check_mode(k)?;
    let fixed = if face.side == Side::High { domain.lengths()[face.axis] } else { 0.0 };
    points
        .iter()
        .map(|x| {
            check_closure(domain, x)?;
            if (x[face.axis] - fixed).abs() > 1e-9 {
                return Err(Error::PointOutside(x.clone()));
            }
            let tang: f64 = (0..domain.dim())
                .filter(|&a| a != face.axis)
                .map(|a| crate::numerics::sine_mode(domain.lengths()[a], k.0[a], x[a]))
                .product();
            Ok(C64::new(domain.normal_factor(face, k.0[face.axis]) * tang, 0.0))
        })
        .collect()
}

/// Discrete sine analysis of interior samples.
pub fn analyze(f: &GridField) -> SpectralField {
    let d = &f.domain;
    let mats: Vec<&RMat> = (0..d.dim()).map(|a| d.analysis_matrix(a)).collect();
    let (coeffs, _) = apply_all_axes(&f.values, d.grid(), &mats);
    SpectralField { domain: d.clone(), coeffs }
}

/// Sine synthesis on the interior grid.
pub fn synthesize(c: &SpectralField) -> GridField {
    let d = &c.domain;
    let mats: Vec<&RMat> = (0..d.dim()).map(|a| d.synthesis_matrix(a)).collect();
    let (values, _) = apply_all_axes(&c.coeffs, d.modes(), &mats);
    GridField { domain: d.clone(), values }
}

/// Sine synthesis on the closed grid (boundary nodes included, where it vanishes).
pub fn synthesize_closed(c: &SpectralField) -> Vec<C64> {
    let d = &c.domain;
    let mats: Vec<&RMat> = (0..d.dim()).map(|a| d.closed_synthesis_matrix(a)).collect();
    apply_all_axes(&c.coeffs, d.modes(), &mats).0
}

/// Merges interior samples and a trace into a closed-grid array.
/// Nodes shared by several faces take the average of the face values.
pub fn closed_from(interior: &GridField, trace: &BoundaryField) -> Result<Vec<C64>> {
    let d = &interior.domain;
    if *d != trace.domain {
        return Err(Error::ShapeMismatch("interior and trace on different domains".into()));
    }
    let shape = d.closed_shape();
    let total = product(&shape);
    let mut out = vec![C64::new(0.0, 0.0); total];
    let mut count = vec![0u32; total];
    for (fi, face) in d.faces().into_iter().enumerate() {
        for (i, v) in trace.faces[fi].iter().enumerate() {
            let c = d.face_to_closed(face, i);
            out[c] += v;
            count[c] += 1;
        }
    }
    for (o, c) in out.iter_mut().zip(&count) {
        if *c > 1 {
            *o /= *c as f64;
        }
    }
    let mut idx = vec![0; d.dim()];
    for (i, v) in interior.values.iter().enumerate() {
        unravel(i, d.grid(), &mut idx);
        let full: Vec<usize> = idx.iter().map(|j| j + 1).collect();
        out[ravel(&full, &shape)] = *v;
    }
    Ok(out)
}

/// Interior samples of a closed-grid array.
pub fn interior_of_closed(domain: &BoxDomain, closed: &[C64]) -> GridField {
    let shape = domain.closed_shape();
    let mut idx = vec![0; domain.dim()];
    let values = (0..domain.grid_count())
        .map(|i| {
            unravel(i, domain.grid(), &mut idx);
            let full: Vec<usize> = idx.iter().map(|j| j + 1).collect();
            closed[ravel(&full, &shape)]
        })
        .collect();
    GridField { domain: domain.clone(), values }
}

/// Face samples of a closed-grid array.
pub fn trace_of_closed(domain: &BoxDomain, closed: &[C64]) -> BoundaryField {
    let mut b = BoundaryField::zeros(domain);
    for (fi, face) in domain.faces().into_iter().enumerate() {
        for (i, v) in b.faces[fi].iter_mut().enumerate() {
            *v = closed[domain.face_to_closed(face, i)];
        }
    }
    b
}

/// Sine moments <f, phi_k> of a closed-grid array (end-corrected quadrature).
pub fn analyze_closed(domain: &BoxDomain, closed: &[C64]) -> SpectralField {
    let mut cur = closed.to_vec();
    let mut shape = domain.closed_shape();
    for a in 0..domain.dim() {
        (cur, shape) = domain.moment_rule(a).apply_axis(&cur, &shape, a);
    }
    SpectralField { domain: domain.clone(), coeffs: cur }
}

/// Boundary moments <u, d_nu phi_k> over all faces, in mode order.
pub fn normal_derivative_moments(trace: &BoundaryField) -> SpectralField {
    let d = &trace.domain;
    let mut acc = vec![C64::new(0.0, 0.0); d.mode_count()];
    for (fi, face) in d.faces().into_iter().enumerate() {
        let factor = RMat::from_fn(d.modes()[face.axis], 1, |k, _| d.normal_factor(face, k + 1));
        let mut shape: Vec<usize> =
            (0..d.dim()).map(|a| if a == face.axis { 1 } else { d.grid()[a] + 2 }).collect();
        let mut m = trace.faces[fi].clone();
        for a in 0..d.dim() {
            (m, shape) = if a == face.axis {
                apply_axis(&m, &shape, a, &factor)
            } else {
                d.moment_rule(a).apply_axis(&m, &shape, a)
            };
        }
        for (a, b) in acc.iter_mut().zip(m) {
            *a += b;
        }
    }
    SpectralField { domain: d.clone(), coeffs: acc }
}

/// Samples of sum_k c_k d_nu phi_k on every face.
pub fn normal_derivative_synthesis(c: &SpectralField) -> BoundaryField {
    let d = &c.domain;
    let mut b = BoundaryField::zeros(d);
    for (fi, face) in d.faces().into_iter().enumerate() {
        let factor = RMat::from_fn(1, d.modes()[face.axis], |_, k| d.normal_factor(face, k + 1));
        let mats: Vec<&RMat> = (0..d.dim())
            .map(|a| if a == face.axis { &factor } else { d.closed_synthesis_matrix(a) })
            .collect();
        let (v, _) = apply_all_axes(&c.coeffs, d.modes(), &mats);
        b.faces[fi] = v;
    }
    b
}

/// Interior-node quadrature of f conj(g); exact when either factor vanishes on the boundary
/// and the product is resolved by the grid.
pub fn volume_inner(f: &GridField, g: &GridField) -> Result<C64> {
    if f.domain != g.domain {
        return Err(Error::ShapeMismatch("volume fields on different domains".into()));
    }
    let s: C64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).sum();
    Ok(s * f.domain.cell_volume())
}

/// Face quadrature of a conj(b), summed over all faces.
pub fn boundary_inner(a: &BoundaryField, b: &BoundaryField) -> Result<C64> {
    if a.domain != b.domain {
        return Err(Error::ShapeMismatch("boundary fields on different domains".into()));
    }
    let mut s = C64::new(0.0, 0.0);
    for fi in 0..a.faces.len() {
        for ((x, y), w) in a.faces[fi].iter().zip(&b.faces[fi]).zip(&a.weights[fi]) {
            s += x * y.conj() * *w;
        }
    }
    Ok(s)
}

/// Bilinear boundary pairing (no conjugation).
pub fn boundary_pairing(a: &BoundaryField, b: &BoundaryField) -> Result<C64> {
    boundary_inner(a, &b.conj())
}
