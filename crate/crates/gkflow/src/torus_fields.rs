//! Periodic grid-sampled fields on flat `T^{2n}` with spectral
//! differentiation, exterior calculus, Hodge star, integration and Lie
//! derivatives.
//!
//! Grids are uniform with period `2π` per axis, coordinates ordered
//! `(x_1, y_1, ..., x_n, y_n)`, last axis fastest (row-major). All
//! derivatives default to Fourier multipliers; a 4th-order centered
//! finite-difference backend exists for cross-validation.
//!
//! Inhomogeneous complex form fields are stored as a [`SpinorField`]:
//! one complex grid per basis monomial (subset bitmask), matching the
//! pointwise algebra in [`crate::multivector`]. Real k-forms are the
//! special case with a single nonzero degree and vanishing imaginary
//! part.

use std::cell::RefCell;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::multivector::{interior_sign, wedge_sign, FormElement};

pub type C64 = Complex64;

/// A uniform periodic grid on `T^{2n}`, period `2π` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    half_dim: usize,
    res: usize,
}

impl TorusGrid {
    pub fn new(half_dim: usize, res: usize) -> Result<Self> {
        if !(1..=2).contains(&half_dim) {
            return Err(Error::DimensionMismatch(format!(
                "half_dim must be 1 or 2, got {half_dim}"
            )));
        }
        if res < 8 || res % 2 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "N must be even and >= 8, got {res}"
            )));
        }
        Ok(TorusGrid { half_dim, res })
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    /// Real dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn npts(&self) -> usize {
        self.res.pow(self.dim() as u32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.res as f64
    }

    /// Row-major stride of an axis (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.res.pow((self.dim() - 1 - axis) as u32)
    }

    pub fn coord(&self, pt: usize, axis: usize) -> f64 {
        let idx = (pt / self.stride(axis)) % self.res;
        idx as f64 * self.spacing()
    }

    pub fn coords(&self, pt: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(pt, a)).collect()
    }

    /// Number of basis monomials of the exterior algebra (`2^{2n}`).
    pub fn n_masks(&self) -> usize {
        1 << self.dim()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Signed frequency of FFT bin `k` (Nyquist mode mapped to zero, as is
/// standard for odd-order spectral derivatives).
fn signed_freq(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64
    } else if 2 * k == n {
        0.0
    } else {
        k as f64 - n as f64
    }
}

/// In-place spectral derivative of a complex grid along one axis.
pub fn spectral_derivative_c(grid: &TorusGrid, data: &mut [C64], axis: usize) {
    let n = grid.res();
    let s = grid.stride(axis);
    let (fwd, inv) = plans(n);
    let nlines = grid.npts() / n;
    let mut line = vec![C64::new(0.0, 0.0); n];
    let scale = 1.0 / n as f64;
    for l in 0..nlines {
        let base = (l / s) * s * n + (l % s);
        for (j, v) in line.iter_mut().enumerate() {
            *v = data[base + j * s];
        }
        fwd.process(&mut line);
        for (k, v) in line.iter_mut().enumerate() {
            *v *= C64::new(0.0, signed_freq(k, n));
        }
        inv.process(&mut line);
        for (j, v) in line.iter().enumerate() {
            data[base + j * s] = v * scale;
        }
    }
}

/// Spectral derivative of a real grid along one axis.
pub fn spectral_derivative_r(grid: &TorusGrid, data: &[f64], axis: usize) -> Vec<f64> {
    let mut c: Vec<C64> = data.iter().map(|v| C64::new(*v, 0.0)).collect();
    spectral_derivative_c(grid, &mut c, axis);
    c.into_iter().map(|v| v.re).collect()
}

/// 4th-order centered finite-difference derivative (cross-validation
/// backend).
pub fn fd4_derivative_r(grid: &TorusGrid, data: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.res();
    let s = grid.stride(axis);
    let h = grid.spacing();
    let npts = grid.npts();
    let mut out = vec![0.0; npts];
    for (pt, o) in out.iter_mut().enumerate() {
        let idx = (pt / s) % n;
        let base = pt - idx * s;
        let sample = |shift: i64| -> f64 {
            let jdx = ((idx as i64 + shift).rem_euclid(n as i64)) as usize;
            data[base + jdx * s]
        };
        *o = (-sample(2) + 8.0 * sample(1) - 8.0 * sample(-1) + sample(-2)) / (12.0 * h);
    }
    out
}

/// A real scalar field.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: TorusGrid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        ScalarField {
            grid,
            data: vec![0.0; grid.npts()],
        }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let data = (0..grid.npts()).map(|p| f(&grid.coords(p))).collect();
        ScalarField { grid, data }
    }

    pub fn constant(grid: TorusGrid, v: f64) -> Self {
        ScalarField {
            grid,
            data: vec![v; grid.npts()],
        }
    }

    pub fn derivative(&self, axis: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: spectral_derivative_r(&self.grid, &self.data, axis),
        }
    }

    pub fn fd4_derivative(&self, axis: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: fd4_derivative_r(&self.grid, &self.data, axis),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> ScalarField {
        self.map(|v| v * s)
    }

    pub fn shift(&self, s: f64) -> ScalarField {
        self.map(|v| v + s)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Trapezoidal (= spectrally exact) periodic quadrature
    /// `h^{2n} Σ f`.
    pub fn integrate(&self) -> f64 {
        let w = self.grid.spacing().powi(self.grid.dim() as i32);
        self.data.iter().sum::<f64>() * w
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.grid.npts() as f64
    }
}

/// A complex scalar field.
#[derive(Debug, Clone)]
pub struct CScalarField {
    pub grid: TorusGrid,
    pub data: Vec<C64>,
}

impl CScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        CScalarField {
            grid,
            data: vec![C64::new(0.0, 0.0); grid.npts()],
        }
    }

    pub fn from_real(f: &ScalarField) -> Self {
        CScalarField {
            grid: f.grid,
            data: f.data.iter().map(|v| C64::new(*v, 0.0)).collect(),
        }
    }

    pub fn derivative(&self, axis: usize) -> CScalarField {
        let mut data = self.data.clone();
        spectral_derivative_c(&self.grid, &mut data, axis);
        CScalarField {
            grid: self.grid,
            data,
        }
    }

    pub fn re(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|v| v.re).collect(),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn integrate(&self) -> C64 {
        let w = self.grid.spacing().powi(self.grid.dim() as i32);
        self.data.iter().sum::<C64>() * w
    }
}

/// A field of real vectors or 1-forms (`2n` components, each a grid).
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: TorusGrid,
    pub comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        VectorField {
            grid,
            comps: vec![vec![0.0; grid.npts()]; grid.dim()],
        }
    }

    pub fn at(&self, pt: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c[pt]).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for pt in 0..self.grid.npts() {
            let s: f64 = self.comps.iter().map(|c| c[pt] * c[pt]).sum();
            worst = worst.max(s.sqrt());
        }
        worst
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.grid, other.grid);
        VectorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.grid, other.grid);
        VectorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|a| a.iter().map(|x| x * s).collect())
                .collect(),
        }
    }

    /// Gradient of a scalar field (a 1-form field).
    pub fn grad(f: &ScalarField) -> VectorField {
        VectorField {
            grid: f.grid,
            comps: (0..f.grid.dim())
                .map(|a| spectral_derivative_r(&f.grid, &f.data, a))
                .collect(),
        }
    }

    /// Degree-1 spinor field with these components.
    pub fn to_spinor(&self) -> SpinorField {
        let mut out = SpinorField::zeros(self.grid);
        for (a, comp) in self.comps.iter().enumerate() {
            for (p, v) in comp.iter().enumerate() {
                out.comps[1 << a][p] = C64::new(*v, 0.0);
            }
        }
        out
    }
}

/// A field of real `2n × 2n` matrices; used for metrics (Gram
/// matrices), complex structures and two-form map matrices
/// (`X ↦ β(X,·)`).
#[derive(Debug, Clone)]
pub struct MatrixField {
    pub grid: TorusGrid,
    /// component `(i, j)` at `comps[i * 2n + j]`
    pub comps: Vec<Vec<f64>>,
}

impl MatrixField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let d = grid.dim();
        MatrixField {
            grid,
            comps: vec![vec![0.0; grid.npts()]; d * d],
        }
    }

    pub fn identity(grid: TorusGrid) -> Self {
        let mut m = Self::zeros(grid);
        for i in 0..grid.dim() {
            m.comps[i * grid.dim() + i] = vec![1.0; grid.npts()];
        }
        m
    }

    pub fn constant(grid: TorusGrid, mat: &nalgebra::DMatrix<f64>) -> Self {
        let d = grid.dim();
        assert_eq!(mat.nrows(), d);
        let mut m = Self::zeros(grid);
        for i in 0..d {
            for j in 0..d {
                m.comps[i * d + j] = vec![mat[(i, j)]; grid.npts()];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[i * self.dim() + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Vec<f64> {
        let d = self.dim();
        &mut self.comps[i * d + j]
    }

    /// The matrix at one grid point (row-major, `d*d` entries).
    pub fn at(&self, pt: usize, out: &mut [f64]) {
        for (k, c) in self.comps.iter().enumerate() {
            out[k] = c[pt];
        }
    }

    pub fn set_at(&mut self, pt: usize, m: &[f64]) {
        for (k, c) in self.comps.iter_mut().enumerate() {
            c[pt] = m[k];
        }
    }

    pub fn at_dmatrix(&self, pt: usize) -> nalgebra::DMatrix<f64> {
        let d = self.dim();
        nalgebra::DMatrix::from_fn(d, d, |i, j| self.comps[i * d + j][pt])
    }

    pub fn add(&self, other: &MatrixField) -> MatrixField {
        assert_eq!(self.grid, other.grid);
        MatrixField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &MatrixField) -> MatrixField {
        assert_eq!(self.grid, other.grid);
        MatrixField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> MatrixField {
        MatrixField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|a| a.iter().map(|x| x * s).collect())
                .collect(),
        }
    }

    /// Pointwise matrix product.
    pub fn mul(&self, other: &MatrixField) -> MatrixField {
        assert_eq!(self.grid, other.grid);
        let d = self.dim();
        let mut out = MatrixField::zeros(self.grid);
        for i in 0..d {
            for j in 0..d {
                let mut acc = vec![0.0; self.grid.npts()];
                for k in 0..d {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    for (p, o) in acc.iter_mut().enumerate() {
                        *o += a[p] * b[p];
                    }
                }
                *out.get_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn transpose(&self) -> MatrixField {
        let d = self.dim();
        let mut out = MatrixField::zeros(self.grid);
        for i in 0..d {
            for j in 0..d {
                *out.get_mut(i, j) = self.get(j, i).to_vec();
            }
        }
        out
    }

    /// Pointwise inverse by Gaussian elimination.
    pub fn inverse(&self) -> Result<MatrixField> {
        let d = self.dim();
        let mut out = MatrixField::zeros(self.grid);
        let mut a = vec![0.0; d * d];
        let mut inv = vec![0.0; d * d];
        for pt in 0..self.grid.npts() {
            self.at(pt, &mut a);
            if !small_inverse(d, &a, &mut inv) {
                return Err(Error::Singular(format!(
                    "matrix field singular at point {pt}"
                )));
            }
            out.set_at(pt, &inv);
        }
        Ok(out)
    }

    pub fn det(&self) -> ScalarField {
        let d = self.dim();
        let mut out = ScalarField::zeros(self.grid);
        let mut a = vec![0.0; d * d];
        for pt in 0..self.grid.npts() {
            self.at(pt, &mut a);
            out.data[pt] = small_det(d, &a);
        }
        out
    }

    /// Max Frobenius norm over points.
    pub fn sup_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for pt in 0..self.grid.npts() {
            let s: f64 = self.comps.iter().map(|c| c[pt] * c[pt]).sum();
            worst = worst.max(s.sqrt());
        }
        worst
    }

    /// Sylvester criterion pointwise: the most negative leading
    /// principal minor (positive everywhere iff SPD).
    pub fn min_leading_minor(&self) -> f64 {
        let d = self.dim();
        let mut worst = f64::INFINITY;
        let mut a = vec![0.0; d * d];
        for pt in 0..self.grid.npts() {
            self.at(pt, &mut a);
            for k in 1..=d {
                let mut sub = vec![0.0; k * k];
                for i in 0..k {
                    for j in 0..k {
                        sub[i * k + j] = a[i * d + j];
                    }
                }
                worst = worst.min(small_det(k, &sub));
            }
        }
        worst
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| (v - c[0]).abs() <= tol))
    }
}

/// Determinant of a small row-major matrix.
pub fn small_det(d: usize, a: &[f64]) -> f64 {
    match d {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => {
            let mut m = a.to_vec();
            let mut det = 1.0;
            for col in 0..d {
                let mut piv = col;
                for r in (col + 1)..d {
                    if m[r * d + col].abs() > m[piv * d + col].abs() {
                        piv = r;
                    }
                }
                if m[piv * d + col] == 0.0 {
                    return 0.0;
                }
                if piv != col {
                    for c in 0..d {
                        m.swap(col * d + c, piv * d + c);
                    }
                    det = -det;
                }
                det *= m[col * d + col];
                for r in (col + 1)..d {
                    let f = m[r * d + col] / m[col * d + col];
                    for c in col..d {
                        m[r * d + c] -= f * m[col * d + c];
                    }
                }
            }
            det
        }
    }
}

/// Inverse of a small row-major matrix; returns false if singular.
pub fn small_inverse(d: usize, a: &[f64], out: &mut [f64]) -> bool {
    let mut m = a.to_vec();
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
    for col in 0..d {
        let mut piv = col;
        for r in (col + 1)..d {
            if m[r * d + col].abs() > m[piv * d + col].abs() {
                piv = r;
            }
        }
        if m[piv * d + col].abs() < 1e-300 {
            return false;
        }
        if piv != col {
            for c in 0..d {
                m.swap(col * d + c, piv * d + c);
                out.swap(col * d + c, piv * d + c);
            }
        }
        let p = m[col * d + col];
        for c in 0..d {
            m[col * d + c] /= p;
            out[col * d + c] /= p;
        }
        for r in 0..d {
            if r != col {
                let f = m[r * d + col];
                if f != 0.0 {
                    for c in 0..d {
                        m[r * d + c] -= f * m[col * d + c];
                        out[r * d + c] -= f * out[col * d + c];
                    }
                }
            }
        }
    }
    true
}

/// An inhomogeneous complex form field: one complex grid per basis
/// monomial of `Λ*(R^{2n})*`.
#[derive(Debug, Clone)]
pub struct SpinorField {
    pub grid: TorusGrid,
    pub comps: Vec<Vec<C64>>,
}

impl SpinorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        SpinorField {
            grid,
            comps: vec![vec![C64::new(0.0, 0.0); grid.npts()]; grid.n_masks()],
        }
    }

    /// Constant field with the given pointwise value.
    pub fn constant(grid: TorusGrid, element: &FormElement) -> Self {
        assert_eq!(element.half_dim(), grid.half_dim());
        SpinorField {
            grid,
            comps: element
                .coeffs()
                .iter()
                .map(|c| vec![*c; grid.npts()])
                .collect(),
        }
    }

    pub fn at(&self, pt: usize) -> FormElement {
        FormElement::from_coeffs(
            self.grid.half_dim(),
            self.comps.iter().map(|c| c[pt]).collect(),
        )
    }

    pub fn set_at(&mut self, pt: usize, el: &FormElement) {
        for (mask, c) in el.coeffs().iter().enumerate() {
            self.comps[mask][pt] = *c;
        }
    }

    pub fn add(&self, other: &SpinorField) -> SpinorField {
        assert_eq!(self.grid, other.grid);
        SpinorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &SpinorField) -> SpinorField {
        assert_eq!(self.grid, other.grid);
        SpinorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> SpinorField {
        SpinorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|a| a.iter().map(|x| x * s).collect())
                .collect(),
        }
    }

    pub fn axpy(&mut self, s: C64, other: &SpinorField) {
        assert_eq!(self.grid, other.grid);
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    pub fn conj(&self) -> SpinorField {
        SpinorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|a| a.iter().map(|x| x.conj()).collect())
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for pt in 0..self.grid.npts() {
            let s: f64 = self.comps.iter().map(|c| c[pt].norm_sqr()).sum();
            worst = worst.max(s.sqrt());
        }
        worst
    }

    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.spacing().powi(self.grid.dim() as i32);
        (self
            .comps
            .iter()
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            * w)
            .sqrt()
    }

    /// Per-component nonzero flags (cheap sparsity hint).
    pub(crate) fn nonzero_flags(&self) -> Vec<bool> {
        self.comps
            .iter()
            .map(|c| c.iter().any(|v| v.norm_sqr() != 0.0))
            .collect()
    }

    /// Exterior derivative `dφ = Σ_a dx^a ∧ ∂_a φ`; `d∘d = 0` to
    /// spectral accuracy. Top-degree input components map to zero.
    pub fn exterior_d(&self) -> SpinorField {
        let d = self.grid.dim();
        let mut out = SpinorField::zeros(self.grid);
        let flags = self.nonzero_flags();
        for (mask, comp) in self.comps.iter().enumerate() {
            if !flags[mask] {
                continue;
            }
            for a in 0..d {
                let bit = 1usize << a;
                if mask & bit != 0 {
                    continue;
                }
                let mut der = comp.clone();
                spectral_derivative_c(&self.grid, &mut der, a);
                let sign = interior_sign(mask | bit, a) as f64;
                let oc = &mut out.comps[mask | bit];
                for (o, v) in oc.iter_mut().zip(&der) {
                    *o += v * sign;
                }
            }
        }
        out
    }

    /// Pointwise wedge product of two form fields.
    pub fn wedge(&self, other: &SpinorField) -> SpinorField {
        assert_eq!(self.grid, other.grid);
        let mut out = SpinorField::zeros(self.grid);
        let fa = self.nonzero_flags();
        let fb = other.nonzero_flags();
        for (a, ca) in self.comps.iter().enumerate() {
            if !fa[a] {
                continue;
            }
            for (b, cb) in other.comps.iter().enumerate() {
                if !fb[b] {
                    continue;
                }
                let s = wedge_sign(a, b);
                if s == 0 {
                    continue;
                }
                let s = s as f64;
                let oc = &mut out.comps[a | b];
                for (p, o) in oc.iter_mut().enumerate() {
                    *o += ca[p] * cb[p] * s;
                }
            }
        }
        out
    }

    /// Pointwise Mukai density `(self, other)` as a complex scalar
    /// field (coefficient of the standard volume monomial).
    pub fn mukai_density(&self, other: &SpinorField) -> CScalarField {
        assert_eq!(self.grid, other.grid);
        let n = self.grid.half_dim();
        let full = self.grid.n_masks() - 1;
        let two_i_pow = C64::new(0.0, 2.0).powu(n as u32);
        let mut out = CScalarField::zeros(self.grid);
        let fa = self.nonzero_flags();
        let fb = other.nonzero_flags();
        for a in 0..=full {
            if !fa[a] {
                continue;
            }
            let b = full & !a;
            if !fb[b] {
                continue;
            }
            let k = b.count_ones() as usize;
            let s_sign = if (k * k.wrapping_sub(1) / 2) % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            let w = wedge_sign(a, b) as f64 * s_sign;
            let (ca, cb) = (&self.comps[a], &other.comps[b]);
            for (p, o) in out.data.iter_mut().enumerate() {
                *o += ca[p] * cb[p] * w;
            }
        }
        for o in out.data.iter_mut() {
            *o /= two_i_pow;
        }
        out
    }

    /// Restriction to one homogeneous degree.
    pub fn degree_component(&self, k: usize) -> SpinorField {
        let mut out = SpinorField::zeros(self.grid);
        for (mask, c) in self.comps.iter().enumerate() {
            if mask.count_ones() as usize == k {
                out.comps[mask] = c.clone();
            }
        }
        out
    }

    /// Integral of the top-degree component against the coordinate
    /// volume.
    pub fn integrate_top(&self) -> C64 {
        let w = self.grid.spacing().powi(self.grid.dim() as i32);
        self.comps[self.grid.n_masks() - 1].iter().sum::<C64>() * w
    }
}

/// Degree-2 spinor field from a two-form map-matrix field
/// (components `β(e_i, e_j) = map[j][i]`).
pub fn two_form_to_spinor(b: &MatrixField) -> SpinorField {
    let d = b.dim();
    let mut out = SpinorField::zeros(b.grid);
    for i in 0..d {
        for j in (i + 1)..d {
            let m = b.get(j, i);
            let oc = &mut out.comps[(1 << i) | (1 << j)];
            for (p, o) in oc.iter_mut().enumerate() {
                *o = C64::new(m[p], 0.0);
            }
        }
    }
    out
}

/// Two-form map-matrix field from the degree-2 part of a spinor field
/// (imaginary parts are dropped).
pub fn spinor_to_two_form(s: &SpinorField) -> MatrixField {
    let d = s.grid.dim();
    let mut out = MatrixField::zeros(s.grid);
    for i in 0..d {
        for j in (i + 1)..d {
            let c = s.comps[(1 << i) | (1 << j)].clone();
            for (pt, v) in c.iter().enumerate() {
                out.get_mut(j, i)[pt] = v.re;
                out.get_mut(i, j)[pt] = -v.re;
            }
        }
    }
    out
}

/// Pullback action on forms of a pointwise endomorphism:
/// `(𝕀 α)(X_1, ..., X_k) = α(I X_1, ..., I X_k)`.
pub fn pullback_forms(alpha: &SpinorField, i_field: &MatrixField) -> SpinorField {
    let grid = alpha.grid;
    let d = grid.dim();
    let nm = grid.n_masks();
    let mut out = SpinorField::zeros(grid);
    let flags = alpha.nonzero_flags();
    let mut imat = vec![0.0; d * d];
    let mut induced = vec![vec![0.0f64; nm]; nm];
    let compute_induced = |imat: &[f64], induced: &mut [Vec<f64>]| {
        for (mout, row) in induced.iter_mut().enumerate() {
            let deg_out = mout.count_ones() as usize;
            for (min, v) in row.iter_mut().enumerate() {
                if min.count_ones() as usize != deg_out {
                    *v = 0.0;
                    continue;
                }
                if deg_out == 0 {
                    *v = 1.0;
                    continue;
                }
                // I* e^{j} = Σ_i I[j][i] e^i: minor over rows ∈ min,
                // cols ∈ mout
                let rows: Vec<usize> = (0..d).filter(|j| min & (1 << j) != 0).collect();
                let cols: Vec<usize> = (0..d).filter(|i| mout & (1 << i) != 0).collect();
                let k = deg_out;
                let mut sub = vec![0.0; k * k];
                for (r, &rr) in rows.iter().enumerate() {
                    for (c, &cc) in cols.iter().enumerate() {
                        sub[r * k + c] = imat[rr * d + cc];
                    }
                }
                *v = small_det(k, &sub);
            }
        }
    };
    if i_field.is_constant(0.0) {
        i_field.at(0, &mut imat);
        compute_induced(&imat, &mut induced);
        for (min, c) in alpha.comps.iter().enumerate() {
            if !flags[min] {
                continue;
            }
            for (mout, row) in induced.iter().enumerate() {
                let f = row[min];
                if f != 0.0 {
                    let oc = &mut out.comps[mout];
                    for (p, o) in oc.iter_mut().enumerate() {
                        *o += c[p] * f;
                    }
                }
            }
        }
    } else {
        for pt in 0..grid.npts() {
            i_field.at(pt, &mut imat);
            compute_induced(&imat, &mut induced);
            for (min, c) in alpha.comps.iter().enumerate() {
                if c[pt].norm_sqr() == 0.0 {
                    continue;
                }
                for (mout, row) in induced.iter().enumerate() {
                    let f = row[min];
                    if f != 0.0 {
                        out.comps[mout][pt] += c[pt] * f;
                    }
                }
            }
        }
    }
    out
}

/// `d^c_I = i(∂̄_I - ∂_I) = 𝕀^{-1} ∘ d ∘ 𝕀`; real output for real
/// input. Errors if `I² ≠ -Id` beyond tolerance.
pub fn dc_i(alpha: &SpinorField, i_field: &MatrixField) -> Result<SpinorField> {
    let d = i_field.dim();
    let npts = i_field.grid.npts();
    let mut m = vec![0.0; d * d];
    let mut worst = 0.0f64;
    let step = (npts / 64).max(1);
    for pt in (0..npts).step_by(step) {
        i_field.at(pt, &mut m);
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += m[i * d + k] * m[k * d + j];
                }
                let expect = if i == j { -1.0 } else { 0.0 };
                worst = worst.max((acc - expect).abs());
            }
        }
    }
    if worst > 1e-8 {
        return Err(Error::NotComplexStructure(worst));
    }
    let minus = i_field.scale(-1.0); // I^{-1} = -I pointwise
    Ok(pullback_forms(
        &pullback_forms(alpha, i_field).exterior_d(),
        &minus,
    ))
}

/// Pointwise Hodge star of a form field with respect to a metric field
/// (Gram matrices). Works on inhomogeneous inputs degree by degree.
pub fn hodge_star(alpha: &SpinorField, g: &MatrixField) -> Result<SpinorField> {
    let grid = alpha.grid;
    let d = grid.dim();
    let nm = grid.n_masks();
    let g_inv = g.inverse()?;
    let det_g = g.det();
    let flags = alpha.nonzero_flags();
    let mut out = SpinorField::zeros(grid);
    let mut ginv_pt = vec![0.0; d * d];
    for pt in 0..grid.npts() {
        g_inv.at(pt, &mut ginv_pt);
        let det = det_g.data[pt];
        if det <= 0.0 {
            return Err(Error::NotSpd("metric degenerates".into()));
        }
        let sqrtg = det.sqrt();
        for k_mask in 0..nm {
            let kc = (nm - 1) & !k_mask;
            let sgn = wedge_sign(k_mask, kc) as f64;
            let deg = k_mask.count_ones() as usize;
            let mut inner = C64::new(0.0, 0.0);
            for l_mask in 0..nm {
                if l_mask.count_ones() as usize != deg || !flags[l_mask] {
                    continue;
                }
                let v = alpha.comps[l_mask][pt];
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                let minor = if deg == 0 {
                    1.0
                } else {
                    let rows: Vec<usize> = (0..d).filter(|i| k_mask & (1 << i) != 0).collect();
                    let cols: Vec<usize> = (0..d).filter(|i| l_mask & (1 << i) != 0).collect();
                    let mut sub = vec![0.0; deg * deg];
                    for (r, &rr) in rows.iter().enumerate() {
                        for (c, &cc) in cols.iter().enumerate() {
                            sub[r * deg + c] = ginv_pt[rr * d + cc];
                        }
                    }
                    small_det(deg, &sub)
                };
                inner += v * minor;
            }
            out.comps[kc][pt] += inner * sgn * sqrtg;
        }
    }
    Ok(out)
}

/// Codifferential, the formal adjoint of `d` on the closed torus:
/// `∫⟨dα, β⟩ dV = ∫⟨α, d*β⟩ dV`. In even dimension `d* = -⋆ d ⋆`
/// uniformly in the degree.
pub fn codifferential(alpha: &SpinorField, g: &MatrixField) -> Result<SpinorField> {
    let starred = hodge_star(alpha, g)?;
    let d_star = starred.exterior_d();
    let out = hodge_star(&d_star, g)?;
    Ok(out.scale(C64::new(-1.0, 0.0)))
}

/// Riemannian inner product of two same-degree form fields (ascending
/// multi-index normalization).
pub fn form_inner_product(
    alpha: &SpinorField,
    beta: &SpinorField,
    g: &MatrixField,
) -> Result<CScalarField> {
    assert_eq!(alpha.grid, beta.grid);
    let grid = alpha.grid;
    let d = grid.dim();
    let nm = grid.n_masks();
    let g_inv = g.inverse()?;
    let fa = alpha.nonzero_flags();
    let fb = beta.nonzero_flags();
    let mut out = CScalarField::zeros(grid);
    let mut ginv_pt = vec![0.0; d * d];
    for pt in 0..grid.npts() {
        g_inv.at(pt, &mut ginv_pt);
        let mut acc = C64::new(0.0, 0.0);
        for a_mask in 0..nm {
            if !fa[a_mask] {
                continue;
            }
            let va = alpha.comps[a_mask][pt];
            if va.norm_sqr() == 0.0 {
                continue;
            }
            let deg = a_mask.count_ones() as usize;
            for b_mask in 0..nm {
                if !fb[b_mask] || b_mask.count_ones() as usize != deg {
                    continue;
                }
                let vb = beta.comps[b_mask][pt];
                if vb.norm_sqr() == 0.0 {
                    continue;
                }
                let minor = if deg == 0 {
                    1.0
                } else {
                    let rows: Vec<usize> = (0..d).filter(|i| a_mask & (1 << i) != 0).collect();
                    let cols: Vec<usize> = (0..d).filter(|i| b_mask & (1 << i) != 0).collect();
                    let mut sub = vec![0.0; deg * deg];
                    for (r, &rr) in rows.iter().enumerate() {
                        for (c, &cc) in cols.iter().enumerate() {
                            sub[r * deg + c] = ginv_pt[rr * d + cc];
                        }
                    }
                    small_det(deg, &sub)
                };
                acc += va * vb * minor;
            }
        }
        out.data[pt] = acc;
    }
    Ok(out)
}

/// Lie derivative of a scalar: `L_X f = X(f)`.
pub fn lie_scalar(x: &VectorField, f: &ScalarField) -> ScalarField {
    assert_eq!(x.grid, f.grid);
    let mut out = ScalarField::zeros(f.grid);
    for a in 0..f.grid.dim() {
        let df = spectral_derivative_r(&f.grid, &f.data, a);
        for (p, o) in out.data.iter_mut().enumerate() {
            *o += x.comps[a][p] * df[p];
        }
    }
    out
}

/// Lie derivative of a (1,1)-tensor:
/// `(L_X T)^i_j = X^k ∂_k T^i_j - T^k_j ∂_k X^i + T^i_k ∂_j X^k`.
pub fn lie_endomorphism(x: &VectorField, t: &MatrixField) -> MatrixField {
    assert_eq!(x.grid, t.grid);
    let grid = t.grid;
    let d = grid.dim();
    let mut out = MatrixField::zeros(grid);
    let dx: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|k| spectral_derivative_r(&grid, &x.comps[i], k))
                .collect()
        })
        .collect();
    let t_constant = t.is_constant(0.0);
    for i in 0..d {
        for j in 0..d {
            let mut acc = vec![0.0; grid.npts()];
            for k in 0..d {
                if !t_constant {
                    let dt = spectral_derivative_r(&grid, t.get(i, j), k);
                    for (p, o) in acc.iter_mut().enumerate() {
                        *o += x.comps[k][p] * dt[p];
                    }
                }
                let tkj = t.get(k, j);
                let tik = t.get(i, k);
                for (p, o) in acc.iter_mut().enumerate() {
                    *o += -tkj[p] * dx[i][k][p] + tik[p] * dx[k][j][p];
                }
            }
            *out.get_mut(i, j) = acc;
        }
    }
    out
}

/// Lie derivative of a (0,2)-tensor:
/// `(L_X g)_{ij} = X^k ∂_k g_{ij} + g_{kj} ∂_i X^k + g_{ik} ∂_j X^k`.
pub fn lie_bilinear(x: &VectorField, g: &MatrixField) -> MatrixField {
    assert_eq!(x.grid, g.grid);
    let grid = g.grid;
    let d = grid.dim();
    let mut out = MatrixField::zeros(grid);
    let dx: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|k| {
            (0..d)
                .map(|i| spectral_derivative_r(&grid, &x.comps[k], i))
                .collect()
        })
        .collect();
    for i in 0..d {
        for j in 0..d {
            let mut acc = vec![0.0; grid.npts()];
            for k in 0..d {
                let dg = spectral_derivative_r(&grid, g.get(i, j), k);
                let gkj = g.get(k, j);
                let gik = g.get(i, k);
                for (p, o) in acc.iter_mut().enumerate() {
                    *o += x.comps[k][p] * dg[p] + gkj[p] * dx[k][i][p] + gik[p] * dx[k][j][p];
                }
            }
            *out.get_mut(i, j) = acc;
        }
    }
    out
}

/// A band-limited trigonometric polynomial `Σ amp cos(k·x + phase)`;
/// exact pointwise evaluation anywhere on the torus (used for
/// characteristics and analytic initial data).
#[derive(Debug, Clone)]
pub struct TrigPoly {
    pub dim: usize,
    pub terms: Vec<(f64, Vec<i32>, f64)>,
}

impl TrigPoly {
    pub fn zero(dim: usize) -> Self {
        TrigPoly { dim, terms: vec![] }
    }

    /// Single term `amp · cos(k·x + phase)`.
    pub fn mode(dim: usize, amp: f64, k: Vec<i32>, phase: f64) -> Self {
        TrigPoly {
            dim,
            terms: vec![(amp, k, phase)],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(a, k, ph)| {
                let arg: f64 = k.iter().zip(x).map(|(ki, xi)| *ki as f64 * xi).sum();
                a * (arg + ph).cos()
            })
            .sum()
    }

    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (a, k, ph) in &self.terms {
            let arg: f64 = k.iter().zip(x).map(|(ki, xi)| *ki as f64 * xi).sum();
            let s = -a * (arg + ph).sin();
            for (o, ki) in out.iter_mut().zip(k) {
                *o += s * *ki as f64;
            }
        }
    }

    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let d = self.dim;
        for (a, k, ph) in &self.terms {
            let arg: f64 = k.iter().zip(x).map(|(ki, xi)| *ki as f64 * xi).sum();
            let c = -a * (arg + ph).cos();
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] += c * k[i] as f64 * k[j] as f64;
                }
            }
        }
    }

    pub fn to_field(&self, grid: TorusGrid) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.eval(x))
    }

    /// Seeded random band-limited polynomial with `|k|_∞ ≤ max_mode`,
    /// zero mean, sup-amplitude roughly `amplitude`.
    pub fn random<R: rand::Rng>(
        dim: usize,
        max_mode: i32,
        amplitude: f64,
        rng: &mut R,
    ) -> TrigPoly {
        let mut terms = vec![];
        let mut idx = vec![-max_mode; dim];
        loop {
            let k = idx.clone();
            // one representative per ±k pair, skip the zero mode
            if let Some(f) = k.iter().find(|v| **v != 0) {
                if *f > 0 {
                    let knorm: f64 = k.iter().map(|v| (*v * *v) as f64).sum::<f64>();
                    let a = rng.gen_range(-1.0..1.0) / (1.0 + knorm);
                    let ph = rng.gen_range(0.0..std::f64::consts::TAU);
                    terms.push((a, k, ph));
                }
            }
            let mut carry = true;
            for v in idx.iter_mut().rev() {
                if carry {
                    *v += 1;
                    if *v > max_mode {
                        *v = -max_mode;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
        let mut poly = TrigPoly { dim, terms };
        let sup = poly
            .terms
            .iter()
            .map(|(a, _, _)| a.abs())
            .sum::<f64>()
            .max(1e-12);
        for t in poly.terms.iter_mut() {
            t.0 *= amplitude / sup;
        }
        poly
    }
}

// ---------------------------------------------------------------------------
// GKF1 snapshot format
// ---------------------------------------------------------------------------

/// Any field that can hit the disk.
#[derive(Debug, Clone)]
pub enum FieldData {
    Scalar(ScalarField),
    Vector(VectorField),
    Matrix(MatrixField),
    Spinor(SpinorField),
}

const GKF1_MAGIC: &[u8; 4] = b"GKF1";

fn rank_of(f: &FieldData) -> (u32, u32, u8) {
    match f {
        FieldData::Scalar(_) => (0, 1, 0),
        FieldData::Vector(v) => (1, v.grid.dim() as u32, 0),
        FieldData::Matrix(m) => (2, (m.dim() * m.dim()) as u32, 0),
        FieldData::Spinor(s) => (15, s.grid.n_masks() as u32, 1),
    }
}

/// Writes a field in the GKF1 snapshot format: magic `GKF1`, header
/// (half_dim u32, N u32, rank u32, component count u32, value kind u8:
/// 0 real / 1 complex), then little-endian f64 data, component-major,
/// each component's grid row-major (complex values as re, im pairs).
pub fn write_gkf1(path: &Path, field: &FieldData) -> Result<()> {
    let grid = match field {
        FieldData::Scalar(f) => f.grid,
        FieldData::Vector(f) => f.grid,
        FieldData::Matrix(f) => f.grid,
        FieldData::Spinor(f) => f.grid,
    };
    let (rank, ncomp, kind) = rank_of(field);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(GKF1_MAGIC)?;
    w.write_all(&(grid.half_dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.res() as u32).to_le_bytes())?;
    w.write_all(&rank.to_le_bytes())?;
    w.write_all(&ncomp.to_le_bytes())?;
    w.write_all(&[kind])?;
    match field {
        FieldData::Scalar(f) => {
            for v in &f.data {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        FieldData::Vector(f) => {
            for c in &f.comps {
                for v in c {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        FieldData::Matrix(f) => {
            for c in &f.comps {
                for v in c {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        FieldData::Spinor(f) => {
            for c in &f.comps {
                for v in c {
                    w.write_all(&v.re.to_le_bytes())?;
                    w.write_all(&v.im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

/// Reads a GKF1 snapshot; bit-exact inverse of [`write_gkf1`].
pub fn read_gkf1(path: &Path) -> Result<FieldData> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != GKF1_MAGIC {
        return Err(Error::SnapshotFormat("bad magic bytes".into()));
    }
    fn next_u32(r: &mut impl Read) -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn next_f64(r: &mut impl Read) -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    let half_dim = next_u32(&mut r)? as usize;
    let res = next_u32(&mut r)? as usize;
    let rank = next_u32(&mut r)?;
    let ncomp = next_u32(&mut r)? as usize;
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    let grid = TorusGrid::new(half_dim, res)?;
    let npts = grid.npts();
    let mut read_real = |n: usize| -> Result<Vec<f64>> { (0..n).map(|_| next_f64(&mut r)).collect() };
    match (rank, kind[0]) {
        (0, 0) => {
            if ncomp != 1 {
                return Err(Error::SnapshotFormat("scalar with ncomp != 1".into()));
            }
            Ok(FieldData::Scalar(ScalarField {
                grid,
                data: read_real(npts)?,
            }))
        }
        (1, 0) => {
            if ncomp != grid.dim() {
                return Err(Error::SnapshotFormat("vector component count".into()));
            }
            let comps = (0..ncomp).map(|_| read_real(npts)).collect::<Result<_>>()?;
            Ok(FieldData::Vector(VectorField { grid, comps }))
        }
        (2, 0) => {
            if ncomp != grid.dim() * grid.dim() {
                return Err(Error::SnapshotFormat("matrix component count".into()));
            }
            let comps = (0..ncomp).map(|_| read_real(npts)).collect::<Result<_>>()?;
            Ok(FieldData::Matrix(MatrixField { grid, comps }))
        }
        (15, 1) => {
            if ncomp != grid.n_masks() {
                return Err(Error::SnapshotFormat("spinor component count".into()));
            }
            let mut comps = Vec::with_capacity(ncomp);
            for _ in 0..ncomp {
                let mut c = Vec::with_capacity(npts);
                for _ in 0..npts {
                    let re = next_f64(&mut r)?;
                    let im = next_f64(&mut r)?;
                    c.push(C64::new(re, im));
                }
                comps.push(c);
            }
            Ok(FieldData::Spinor(SpinorField { grid, comps }))
        }
        _ => Err(Error::SnapshotFormat(format!(
            "unknown rank/kind combination ({rank}, {})",
            kind[0]
        ))),
    }
}
