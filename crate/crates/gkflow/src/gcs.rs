//! Generalized complex structures as endomorphisms of `T ⊕ T*`, types,
//! b-field transforms, generalized Kähler pairs and the Gualtieri map.
//!
//! Matrix conventions: elements of `T ⊕ T*` are column vectors
//! `(X; ξ)` with the vector part first. Two-forms enter as their *map*
//! matrices `T → T*`, `X ↦ β(X, ·)`; for a component matrix
//! `Ω_{ij} = β(e_i, e_j)` the map matrix is `Ωᵀ = -Ω`. The metric map
//! is the symmetric Gram matrix, so `ω_I = g I` literally as a matrix
//! product.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::conventions::{GCS_INVARIANT_TOL, NULLSPACE_RTOL, TYPE_RANK_RTOL};
use crate::error::{Error, Result};
use crate::multivector::{
    annihilator, complex_nullspace, exp_two_form, is_pure_nondegenerate, FormElement,
    RealTwoForm,
};

type C64 = Complex64;

/// Neutral pairing Gram matrix `½ [[0, I], [I, 0]]` on `T ⊕ T*`.
pub fn neutral_matrix(half_dim: usize) -> DMatrix<f64> {
    let d = 2 * half_dim;
    let mut p = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        p[(i, d + i)] = 0.5;
        p[(d + i, i)] = 0.5;
    }
    p
}

/// Map matrix of a [`RealTwoForm`] (`X ↦ β(X,·)`), i.e. the transpose
/// of its component matrix.
pub fn two_form_map(b: &RealTwoForm) -> DMatrix<f64> {
    let d = 2 * b.half_dim();
    DMatrix::from_fn(d, d, |r, c| b.get(c, r))
}

/// [`RealTwoForm`] with the given map matrix.
pub fn two_form_from_map(half_dim: usize, m: &DMatrix<f64>) -> Result<RealTwoForm> {
    let d = 2 * half_dim;
    let mut comps = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            comps[i * d + j] = m[(j, i)];
        }
    }
    RealTwoForm::from_matrix(half_dim, comps)
}

/// `e^{b}` as an endomorphism of `T ⊕ T*` for a two-form map matrix.
fn b_exp_matrix(bmap: &DMatrix<f64>) -> DMatrix<f64> {
    let d = bmap.nrows();
    let mut m = DMatrix::identity(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            m[(d + i, j)] = bmap[(i, j)];
        }
    }
    m
}

/// A generalized (almost) complex structure: a neutral-orthogonal
/// endomorphism of `T ⊕ T*` with square `-Id`.
#[derive(Debug, Clone)]
pub struct GCSEndo {
    half_dim: usize,
    mat: DMatrix<f64>,
}

impl GCSEndo {
    /// Wraps a matrix after checking the two defining invariants.
    pub fn new(half_dim: usize, mat: DMatrix<f64>) -> Result<Self> {
        let dd = 4 * half_dim;
        if mat.nrows() != dd || mat.ncols() != dd {
            return Err(Error::DimensionMismatch(format!(
                "GCS endomorphism must be {dd}x{dd}"
            )));
        }
        let sq = (&mat * &mat + DMatrix::<f64>::identity(dd, dd)).norm();
        if sq > GCS_INVARIANT_TOL * (1.0 + mat.norm()) {
            return Err(Error::NotComplexStructure(sq));
        }
        let p = neutral_matrix(half_dim);
        let orth = (mat.transpose() * &p * &mat - &p).norm();
        if orth > GCS_INVARIANT_TOL * (1.0 + mat.norm()) {
            return Err(Error::DimensionMismatch(format!(
                "endomorphism is not neutral-orthogonal (residual {orth:.3e})"
            )));
        }
        Ok(GCSEndo { half_dim, mat })
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// The `T ← T*` block (a bivector since the structure is orthogonal).
    pub fn bivector_block(&self) -> DMatrix<f64> {
        let d = 2 * self.half_dim;
        self.mat.view((0, d), (d, d)).into_owned()
    }

    /// Direct sum on the product `R^{2n1} × R^{2n2}`.
    pub fn direct_sum(&self, other: &GCSEndo) -> GCSEndo {
        let (n1, n2) = (self.half_dim, other.half_dim);
        let n = n1 + n2;
        let (d1, d2, d) = (2 * n1, 2 * n2, 2 * n);
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        // index maps: factor-1 vectors 0..d1 -> 0..d1, covectors d1..2d1 -> d..d+d1
        let put = |m: &mut DMatrix<f64>, src: &DMatrix<f64>, offsets: (usize, usize, usize, usize), dk: usize| {
            let (rv, rc, cv, cc) = offsets;
            for r in 0..2 * dk {
                for c in 0..2 * dk {
                    let rr = if r < dk { rv + r } else { rc + (r - dk) };
                    let cc2 = if c < dk { cv + c } else { cc + (c - dk) };
                    m[(rr, cc2)] = src[(r, c)];
                }
            }
        };
        put(&mut m, &self.mat, (0, d, 0, d), d1);
        put(&mut m, &other.mat, (d1, d + d1, d1, d + d1), d2);
        GCSEndo { half_dim: n, mat: m }
    }
}

/// Generalized complex structure of symplectic type,
/// `(0, -ω^{-1}; ω, 0)`.
pub fn gcs_from_symplectic(omega: &RealTwoForm) -> Result<GCSEndo> {
    let n = omega.half_dim();
    let d = 2 * n;
    let w = two_form_map(omega);
    let w_inv = w
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("symplectic form is singular".into()))?;
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            m[(i, d + j)] = -w_inv[(i, j)];
            m[(d + i, j)] = w[(i, j)];
        }
    }
    GCSEndo::new(n, m)
}

/// Generalized complex structure of complex type, `(J, 0; 0, -J*)`.
pub fn gcs_from_complex(jc: &DMatrix<f64>) -> Result<GCSEndo> {
    let d = jc.nrows();
    if d % 2 != 0 || jc.ncols() != d {
        return Err(Error::DimensionMismatch(
            "complex structure matrix must be even-dimensional square".into(),
        ));
    }
    let sq = (jc * jc + DMatrix::<f64>::identity(d, d)).norm();
    if sq > GCS_INVARIANT_TOL * (1.0 + jc.norm()) {
        return Err(Error::NotComplexStructure(sq));
    }
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = jc[(i, j)];
            m[(d + i, d + j)] = -jc[(j, i)];
        }
    }
    GCSEndo::new(d / 2, m)
}

/// The standard complex structure on `R^{2n}` in coordinates
/// `(x_1, y_1, ..., x_n, y_n)`: `∂x_i ↦ ∂y_i ↦ -∂x_i`.
pub fn standard_complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// Generalized complex structure determined by a pure nondegenerate
/// spinor: the `+i` eigenspace is the Clifford annihilator of `φ`.
pub fn gcs_from_spinor(phi: &FormElement) -> Result<GCSEndo> {
    let (pure, nondeg) = is_pure_nondegenerate(phi)?;
    if !pure {
        return Err(Error::ImpureSpinor {
            found: annihilator(phi)?.len(),
            expected: 2 * phi.half_dim(),
        });
    }
    if !nondeg {
        let unit = phi.scale(C64::new(1.0 / phi.norm(), 0.0));
        return Err(Error::DegenerateSpinor(
            crate::multivector::mukai_pairing(&unit, &unit.conj())?.norm(),
        ));
    }
    let n = phi.half_dim();
    let dd = 4 * n;
    let ann = annihilator(phi)?;
    let mut v = DMatrix::<C64>::zeros(dd, dd);
    for (k, e) in ann.iter().enumerate() {
        let flat = e.to_flat();
        for r in 0..dd {
            v[(r, k)] = flat[r];
            v[(r, 2 * n + k)] = flat[r].conj();
        }
    }
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("spinor eigenbasis is singular".into()))?;
    let mut diag = DMatrix::<C64>::zeros(dd, dd);
    for k in 0..2 * n {
        diag[(k, k)] = C64::new(0.0, 1.0);
        diag[(2 * n + k, 2 * n + k)] = C64::new(0.0, -1.0);
    }
    let jc = v * diag * v_inv;
    let mut m = DMatrix::<f64>::zeros(dd, dd);
    let mut imag_norm = 0.0f64;
    for r in 0..dd {
        for c in 0..dd {
            m[(r, c)] = jc[(r, c)].re;
            imag_norm += jc[(r, c)].im * jc[(r, c)].im;
        }
    }
    if imag_norm.sqrt() > 1e-8 * (1.0 + m.norm()) {
        return Err(Error::Singular(format!(
            "spinor does not define a real structure (imaginary residue {:.3e})",
            imag_norm.sqrt()
        )));
    }
    GCSEndo::new(n, m)
}

/// The type `n - ½ rank(Q)` with `Q` the bivector block.
pub fn type_of(j: &GCSEndo) -> usize {
    let q = j.bivector_block();
    let svd = q.svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > TYPE_RANK_RTOL * max.max(1e-300))
        .count();
    j.half_dim() - rank / 2
}

/// Conjugation `e^{-b} J e^{b}`; the spinor-side counterpart wedges by
/// `e^{b}`.
pub fn b_transform_gcs(b: &RealTwoForm, j: &GCSEndo) -> Result<GCSEndo> {
    let bmap = two_form_map(b);
    let e = b_exp_matrix(&bmap);
    let e_inv = b_exp_matrix(&(-&bmap));
    GCSEndo::new(j.half_dim(), e_inv * j.matrix() * e)
}

/// A commuting generalized Kähler pair.
#[derive(Debug, Clone)]
pub struct GKPairAlg {
    pub j1: GCSEndo,
    pub j2: GCSEndo,
}

impl GKPairAlg {
    pub fn new(j1: GCSEndo, j2: GCSEndo) -> Result<Self> {
        if j1.half_dim() != j2.half_dim() {
            return Err(Error::DimensionMismatch(
                "generalized Kähler pair on different spaces".into(),
            ));
        }
        let comm = (j1.matrix() * j2.matrix() - j2.matrix() * j1.matrix()).norm();
        if comm > GCS_INVARIANT_TOL * (1.0 + j1.matrix().norm() * j2.matrix().norm()) {
            return Err(Error::NonCommuting(comm));
        }
        let pair = GKPairAlg { j1, j2 };
        pair.generalized_metric()?;
        Ok(pair)
    }

    pub fn half_dim(&self) -> usize {
        self.j1.half_dim()
    }

    /// `G = -J1 J2`, with `G² = Id` and `⟨G·,·⟩` positive definite.
    pub fn generalized_metric(&self) -> Result<DMatrix<f64>> {
        let gm = -(self.j1.matrix() * self.j2.matrix());
        let dd = gm.nrows();
        let sq = (&gm * &gm - DMatrix::<f64>::identity(dd, dd)).norm();
        if sq > GCS_INVARIANT_TOL * (1.0 + gm.norm()) {
            return Err(Error::NonCommuting(sq));
        }
        // positivity of the symmetric form P·G
        let s = neutral_matrix(self.half_dim()) * &gm;
        let sym = (&s + s.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(sym);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(Error::IndefiniteMetric(min));
        }
        Ok(gm)
    }
}

/// Bihermitian data `(g, b, I, J)` at a point, all as map matrices.
#[derive(Debug, Clone)]
pub struct BihermitianPoint {
    pub half_dim: usize,
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub i_mat: DMatrix<f64>,
    pub j_mat: DMatrix<f64>,
}

impl BihermitianPoint {
    pub fn new(
        half_dim: usize,
        g: DMatrix<f64>,
        b: DMatrix<f64>,
        i_mat: DMatrix<f64>,
        j_mat: DMatrix<f64>,
    ) -> Result<Self> {
        let d = 2 * half_dim;
        let scale = 1.0 + g.norm();
        if (&g - g.transpose()).norm() > GCS_INVARIANT_TOL * scale {
            return Err(Error::NotSpd("metric is not symmetric".into()));
        }
        let eig = nalgebra::SymmetricEigen::new(g.clone());
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(Error::NotSpd(format!("metric has eigenvalue {min:.3e}")));
        }
        if (&b + b.transpose()).norm() > GCS_INVARIANT_TOL * (1.0 + b.norm()) {
            return Err(Error::DimensionMismatch("b-field is not antisymmetric".into()));
        }
        for (name, m) in [("I", &i_mat), ("J", &j_mat)] {
            let sq = (m * m + DMatrix::<f64>::identity(d, d)).norm();
            if sq > GCS_INVARIANT_TOL * (1.0 + m.norm()) {
                return Err(Error::NotComplexStructure(sq));
            }
            let herm = (m.transpose() * &g * m - &g).norm();
            if herm > GCS_INVARIANT_TOL * scale {
                return Err(Error::NotSpd(format!(
                    "{name} is not g-orthogonal (residual {herm:.3e})"
                )));
            }
        }
        Ok(BihermitianPoint {
            half_dim,
            g,
            b,
            i_mat,
            j_mat,
        })
    }

    pub fn omega_i(&self) -> DMatrix<f64> {
        &self.g * &self.i_mat
    }

    pub fn omega_j(&self) -> DMatrix<f64> {
        &self.g * &self.j_mat
    }
}

/// Recovers bihermitian data from a generalized Kähler pair.
pub fn gualtieri_forward(pair: &GKPairAlg) -> Result<BihermitianPoint> {
    let n = pair.half_dim();
    let d = 2 * n;
    let gm = pair.generalized_metric()?;
    let g_inv = gm.view((0, d), (d, d)).into_owned();
    let g = g_inv
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("generalized metric block is singular".into()))?;
    let a_block = gm.view((0, 0), (d, d)).into_owned();
    let b = -(&g * &a_block);
    // J1 restricted to the ±1 eigenbundles C± = graph(b ± g)
    let j1 = pair.j1.matrix();
    let a1 = j1.view((0, 0), (d, d)).into_owned();
    let p1 = j1.view((0, d), (d, d)).into_owned();
    let i_mat = &a1 + &p1 * (&b + &g);
    let j_mat = &a1 + &p1 * (&b - &g);
    BihermitianPoint::new(n, g, b, i_mat, j_mat)
}

/// The Gualtieri block formula `J_{1/2} = ½ e^b M± e^{-b}`.
pub fn gualtieri_inverse(d: &BihermitianPoint) -> Result<GKPairAlg> {
    let n = d.half_dim;
    let dim = 2 * n;
    let omega_i = d.omega_i();
    let omega_j = d.omega_j();
    let wi_inv = omega_i
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("omega_I singular".into()))?;
    let wj_inv = omega_j
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("omega_J singular".into()))?;
    let eb = b_exp_matrix(&d.b);
    let eb_inv = b_exp_matrix(&(-&d.b));
    let build = |sign: f64| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2 * dim, 2 * dim);
        let tt = &d.i_mat + &d.j_mat * sign;
        let tc = -(&wi_inv - &wj_inv * sign);
        let ct = &omega_i - &omega_j * sign;
        let cc = -(d.i_mat.transpose() + d.j_mat.transpose() * sign);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = tt[(r, c)];
                m[(r, dim + c)] = tc[(r, c)];
                m[(dim + r, c)] = ct[(r, c)];
                m[(dim + r, dim + c)] = cc[(r, c)];
            }
        }
        m * 0.5
    };
    let j1 = GCSEndo::new(n, &eb * build(1.0) * &eb_inv)?;
    let j2 = GCSEndo::new(n, &eb * build(-1.0) * &eb_inv)?;
    GKPairAlg::new(j1, j2)
}

/// Nondegenerate-structure package: Poisson tensor, the symplectic
/// forms `F±`, `Ω`, and the two closed pure spinors.
#[derive(Debug, Clone)]
pub struct NondegForms {
    pub sigma: DMatrix<f64>,
    pub f_plus: DMatrix<f64>,
    pub f_minus: DMatrix<f64>,
    pub omega_big: DMatrix<f64>,
    pub psi1: FormElement,
    pub psi2: FormElement,
}

/// Map matrix → degree-2 form element (complex entries allowed).
pub fn map_matrix_to_form(n: usize, m: &DMatrix<C64>) -> FormElement {
    let d = 2 * n;
    let mut f = FormElement::zero(n);
    for i in 0..d {
        for j in (i + 1)..d {
            // component β(e_i, e_j) = map[j][i]
            *f.coeff_mut((1 << i) | (1 << j)) = m[(j, i)];
        }
    }
    f
}

fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| C64::new(m[(r, c)], 0.0))
}

/// Extracts `σ`, `F±`, `Ω` and the underlying pure spinors from a
/// nondegenerate bihermitian point (`I ± J` invertible).
///
/// The spinor exponents are the transformed two-forms
/// `b' = -b + g(I+J)^{-1}(I-J)`: `ψ1 = e^{b' + 2Ω + iF₋}`,
/// `ψ2 = e^{b' + iF₊}`, so that `J_{ψᵢ}` agrees with the Gualtieri
/// pair of `(g, b, I, J)`.
pub fn nondeg_extract(d: &BihermitianPoint) -> Result<NondegForms> {
    let n = d.half_dim;
    let ipj = &d.i_mat + &d.j_mat;
    let imj = &d.i_mat - &d.j_mat;
    let ipj_inv = ipj
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("I + J is singular".into()))?;
    let imj_inv = imj
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("I - J is singular".into()))?;
    let g_inv = d
        .g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("metric singular".into()))?;
    let sigma = (&g_inv * (&d.i_mat * &d.j_mat - &d.j_mat * &d.i_mat)) * 0.5;
    let f_plus = -(&d.g * &ipj_inv) * 2.0;
    let f_minus = -(&d.g * &imj_inv) * 2.0;
    let omega_big = (&d.g * &ipj_inv * &imj_inv) * 2.0;
    let b_prime = -&d.b + &d.g * &ipj_inv * &imj;

    let i_unit = C64::new(0.0, 1.0);
    let mut exp1 = real_to_complex(&(&b_prime + &omega_big * 2.0));
    let fm_c = real_to_complex(&f_minus);
    exp1 += fm_c * i_unit;
    let psi1 = exp_two_form(&map_matrix_to_form(n, &exp1));
    let mut exp2 = real_to_complex(&b_prime);
    let fp_c = real_to_complex(&f_plus);
    exp2 += fp_c * i_unit;
    let psi2 = exp_two_form(&map_matrix_to_form(n, &exp2));

    Ok(NondegForms {
        sigma,
        f_plus,
        f_minus,
        omega_big,
        psi1,
        psi2,
    })
}

/// Contraction exponential perturbing a complex-type spinor toward
/// symplectic type: `φ^t = e^{-t i β̄} ⌟ Θ̄` for a holomorphic bivector
/// `β` (given by its complex antisymmetric component matrix
/// `β^{jk} = β(e^j, e^k)` in the real frame).
pub fn symplectic_perturb_spinor(
    theta_bar: &FormElement,
    beta: &DMatrix<C64>,
    t: f64,
) -> Result<FormElement> {
    let n = theta_bar.half_dim();
    let (pure, _) = is_pure_nondegenerate(theta_bar)?;
    if !pure {
        return Err(Error::ImpureSpinor {
            found: annihilator(theta_bar)?.len(),
            expected: 2 * n,
        });
    }
    let d = 2 * n;
    let beta_bar = DMatrix::from_fn(d, d, |r, c| beta[(r, c)].conj());
    // one contraction by the bivector: Σ_{j<k} β̄^{jk} i_{e_k} i_{e_j}
    let contract = |f: &FormElement| -> FormElement {
        let mut out = FormElement::zero(n);
        for j in 0..d {
            for k in (j + 1)..d {
                let w = beta_bar[(j, k)];
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                let term = f.interior(j).interior(k);
                out = out.add(&term.scale(w));
            }
        }
        out
    };
    let mut out = theta_bar.clone();
    let mut term = theta_bar.clone();
    let factor = C64::new(0.0, -t);
    for k in 1..=n {
        term = contract(&term).scale(factor / C64::new(k as f64, 0.0));
        out = out.add(&term);
    }
    Ok(out)
}

/// Flat Kähler bihermitian point (`I = J` standard, `b = 0`).
pub fn flat_kahler_point(n: usize) -> BihermitianPoint {
    let i = standard_complex_structure(n);
    BihermitianPoint::new(
        n,
        DMatrix::identity(2 * n, 2 * n),
        DMatrix::zeros(2 * n, 2 * n),
        i.clone(),
        i,
    )
    .expect("flat Kähler point is valid")
}

/// Flat anti-Kähler point (`J = -I`).
pub fn flat_anti_kahler_point(n: usize) -> BihermitianPoint {
    let i = standard_complex_structure(n);
    let j = -&i;
    BihermitianPoint::new(
        n,
        DMatrix::identity(2 * n, 2 * n),
        DMatrix::zeros(2 * n, 2 * n),
        i,
        j,
    )
    .expect("flat anti-Kähler point is valid")
}

/// The standard flat hyperkähler triple `(I, J, K = IJ)` on `R⁴`,
/// identified with the quaternions via `(x_1, y_1, x_2, y_2) ↔ (1, i, j, k)`.
pub fn quaternion_triple() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let i = standard_complex_structure(2);
    let mut j = DMatrix::zeros(4, 4);
    // left multiplication by j: 1 ↦ j, i ↦ -k, j ↦ -1, k ↦ i
    j[(2, 0)] = 1.0;
    j[(3, 1)] = -1.0;
    j[(0, 2)] = -1.0;
    j[(1, 3)] = 1.0;
    let k = &i * &j;
    (i, j, k)
}

/// Flat hyperkähler bihermitian point `(g0, 0, I, J)` on `R⁴`.
pub fn flat_hyperkahler_point() -> BihermitianPoint {
    let (i, j, _) = quaternion_triple();
    BihermitianPoint::new(2, DMatrix::identity(4, 4), DMatrix::zeros(4, 4), i, j)
        .expect("flat hyperkähler point is valid")
}

/// Flat commuting-type point on `R⁴`: `J = I` on the first factor and
/// `-I` on the second.
pub fn flat_commuting_point() -> BihermitianPoint {
    let i = standard_complex_structure(2);
    let mut j = i.clone();
    j[(3, 2)] = -1.0;
    j[(2, 3)] = 1.0;
    BihermitianPoint::new(2, DMatrix::identity(4, 4), DMatrix::zeros(4, 4), i, j)
        .expect("flat commuting point is valid")
}

/// Matrix exponential by plain power series (arguments here are small).
pub fn matrix_exp(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut acc = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..30 {
        term = &term * x / (k as f64);
        acc += &term;
        if term.norm() < 1e-18 * acc.norm() {
            break;
        }
    }
    acc
}

/// Random neutral-orthogonal endomorphism `exp(ε X)` with
/// `X = [[A, B], [C, -Aᵀ]]`, `B`, `C` antisymmetric.
pub fn random_neutral_orthogonal<R: rand::Rng>(n: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let d = 2 * n;
    let mut x = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let a = rng.gen_range(-scale..scale);
            x[(i, j)] = a;
            x[(d + j, d + i)] = -a;
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let b = rng.gen_range(-scale..scale);
            x[(i, d + j)] = b;
            x[(j, d + i)] = -b;
            let c = rng.gen_range(-scale..scale);
            x[(d + i, j)] = c;
            x[(d + j, i)] = -c;
        }
    }
    matrix_exp(&x)
}

/// Synthetic random generalized Kähler point: a flat model conjugated
/// by a random small b-transform and a random neutral-orthogonal map.
/// Valid by construction.
pub fn synthetic_gk_point<R: rand::Rng>(n: usize, rng: &mut R) -> GKPairAlg {
    let base = if n == 2 && rng.gen_bool(0.5) {
        flat_hyperkahler_point()
    } else {
        flat_kahler_point(n)
    };
    let pair = gualtieri_inverse(&base).expect("flat pair");
    let mut b = RealTwoForm::zero(n);
    for i in 0..2 * n {
        for j in (i + 1)..2 * n {
            b.set(i, j, rng.gen_range(-0.2..0.2));
        }
    }
    let j1 = b_transform_gcs(&b, &pair.j1).expect("b transform");
    let j2 = b_transform_gcs(&b, &pair.j2).expect("b transform");
    let t = random_neutral_orthogonal(n, 0.1, rng);
    let t_inv = t.clone().try_inverse().expect("orthogonal map invertible");
    let j1 = GCSEndo::new(n, &t * j1.matrix() * &t_inv).expect("conjugated GCS");
    let j2 = GCSEndo::new(n, &t * j2.matrix() * &t_inv).expect("conjugated GCS");
    GKPairAlg::new(j1, j2).expect("synthetic pair is GK")
}

/// Least-squares distance between the +i eigenspace of `j` and the
/// annihilator of `phi`: sup over annihilator basis vectors of
/// `|(J - i)e|`. Zero iff the spinor induces `j`.
pub fn spinor_structure_mismatch(phi: &FormElement, j: &GCSEndo) -> Result<f64> {
    let ann = annihilator(phi)?;
    let n = phi.half_dim();
    if ann.len() != 2 * n {
        return Err(Error::ImpureSpinor {
            found: ann.len(),
            expected: 2 * n,
        });
    }
    let m = j.matrix();
    let mut worst = 0.0f64;
    for e in &ann {
        let flat = e.to_flat();
        let dd = 4 * n;
        let mut res = 0.0f64;
        for r in 0..dd {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..dd {
                acc += C64::new(m[(r, c)], 0.0) * flat[c];
            }
            acc -= C64::new(0.0, 1.0) * flat[r];
            res += acc.norm_sqr();
        }
        worst = worst.max(res.sqrt() / e.norm());
    }
    Ok(worst)
}

/// Intersections of a complex subspace (columns) with the ±i
/// eigenspaces of a real endomorphism; used by the `U^{p,q}` machinery.
pub fn split_by_eigenvalue(
    basis: &[Vec<C64>],
    m: &DMatrix<f64>,
) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let dim = m.nrows();
    let apply = |v: &[C64], shift: C64| -> Vec<C64> {
        (0..dim)
            .map(|r| {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..dim {
                    acc += C64::new(m[(r, c)], 0.0) * v[c];
                }
                acc - shift * v[r]
            })
            .collect()
    };
    // kernel of (M - i) restricted to span(basis): columns are images of
    // the basis, null combinations give the +i intersection
    let make = |shift: C64| -> Vec<Vec<C64>> {
        let cols: Vec<Vec<C64>> = basis.iter().map(|v| apply(v, shift)).collect();
        complex_nullspace(&cols, NULLSPACE_RTOL)
            .into_iter()
            .map(|combo| {
                let mut w = vec![C64::new(0.0, 0.0); dim];
                for (k, c) in combo.iter().enumerate() {
                    for r in 0..dim {
                        w[r] += c * basis[k][r];
                    }
                }
                w
            })
            .collect()
    };
    (make(C64::new(0.0, 1.0)), make(C64::new(0.0, -1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multivector::{b_field_exp, mukai_pairing};
    use rand::{Rng as _, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn standard_symplectic(n: usize) -> RealTwoForm {
        let mut w = RealTwoForm::zero(n);
        for k in 0..n {
            w.set(2 * k, 2 * k + 1, 1.0);
        }
        w
    }

    fn symplectic_spinor(n: usize) -> FormElement {
        exp_two_form(&standard_symplectic(n).to_form().scale(C64::new(0.0, 1.0)))
    }

    fn antiholomorphic_volume(n: usize) -> FormElement {
        let mut theta_bar = FormElement::one(n);
        for k in 0..n {
            let mut dzbar = FormElement::zero(n);
            *dzbar.coeff_mut(1 << (2 * k)) = C64::new(1.0, 0.0);
            *dzbar.coeff_mut(1 << (2 * k + 1)) = C64::new(0.0, -1.0);
            theta_bar = theta_bar.wedge(&dzbar);
        }
        theta_bar
    }

    #[test]
    fn symplectic_gcs_matches_paper_matrix() {
        let w = standard_symplectic(1);
        let j = gcs_from_symplectic(&w).unwrap();
        // blocks (0, -ω^{-1}; ω, 0) with ω the map matrix
        let m = j.matrix();
        let wmap = two_form_map(&w);
        let winv = wmap.clone().try_inverse().unwrap();
        for i in 0..2 {
            for k in 0..2 {
                assert_eq!(m[(i, k)], 0.0);
                assert_eq!(m[(2 + i, 2 + k)], 0.0);
                assert!((m[(i, 2 + k)] + winv[(i, k)]).abs() < 1e-14);
                assert!((m[(2 + i, k)] - wmap[(i, k)]).abs() < 1e-14);
            }
        }
        assert_eq!(type_of(&j), 0);
    }

    #[test]
    fn complex_gcs_matches_paper_matrix() {
        for n in 1..=2usize {
            let jc = standard_complex_structure(n);
            let j = gcs_from_complex(&jc).unwrap();
            assert_eq!(type_of(&j), n);
        }
    }

    #[test]
    fn spinor_reproduces_symplectic_structure() {
        for n in 1..=2usize {
            let j_sp = gcs_from_symplectic(&standard_symplectic(n)).unwrap();
            let j_spinor = gcs_from_spinor(&symplectic_spinor(n)).unwrap();
            assert!((j_sp.matrix() - j_spinor.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn spinor_reproduces_complex_structure() {
        for n in 1..=2usize {
            let j_c = gcs_from_complex(&standard_complex_structure(n)).unwrap();
            let j_spinor = gcs_from_spinor(&antiholomorphic_volume(n)).unwrap();
            assert!((j_c.matrix() - j_spinor.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn spinor_scale_invariance() {
        let phi = symplectic_spinor(2).scale(C64::new(3.0, 4.0));
        let j = gcs_from_spinor(&phi).unwrap();
        let j0 = gcs_from_spinor(&symplectic_spinor(2)).unwrap();
        assert!((j.matrix() - j0.matrix()).norm() < 1e-10);
    }

    #[test]
    fn type_of_mixed_product() {
        let sympl = gcs_from_symplectic(&standard_symplectic(1)).unwrap();
        let cplx = gcs_from_complex(&standard_complex_structure(1)).unwrap();
        let prod = sympl.direct_sum(&cplx);
        assert_eq!(prod.half_dim(), 2);
        assert_eq!(type_of(&prod), 1);
    }

    #[test]
    fn b_transform_preserves_type_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let j = gcs_from_symplectic(&standard_symplectic(2)).unwrap();
        let mut b = RealTwoForm::zero(2);
        for i in 0..4 {
            for k in (i + 1)..4 {
                b.set(i, k, rng.gen_range(-0.5..0.5));
            }
        }
        let jb = b_transform_gcs(&b, &j).unwrap();
        assert_eq!(type_of(&jb), type_of(&j));
        let back = b_transform_gcs(&b.scale(-1.0), &jb).unwrap();
        assert!((back.matrix() - j.matrix()).norm() < 1e-12);

        // spinor-side compatibility: e^b ∧ φ generates e^{-b} J e^{b}
        let phi_b = b_field_exp(&b, &symplectic_spinor(2));
        assert!(spinor_structure_mismatch(&phi_b, &jb).unwrap() < 1e-9);
    }

    #[test]
    fn kahler_pair_metric_block_form() {
        let pair = gualtieri_inverse(&flat_kahler_point(1)).unwrap();
        let gm = pair.generalized_metric().unwrap();
        // b = 0: G = (0, g^{-1}; g, 0)
        for i in 0..2 {
            for j in 0..2 {
                assert!((gm[(i, j)]).abs() < 1e-13);
                assert!((gm[(2 + i, 2 + j)]).abs() < 1e-13);
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((gm[(i, 2 + j)] - id).abs() < 1e-13);
                assert!((gm[(2 + i, j)] - id).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn kahler_pair_types_and_spinors() {
        // (ψ1, ψ2) = (Θ̄, e^{iω}) determines (I = J, b = 0)
        let pair = gualtieri_inverse(&flat_kahler_point(2)).unwrap();
        assert_eq!(type_of(&pair.j1), 2);
        assert_eq!(type_of(&pair.j2), 0);
        assert!(spinor_structure_mismatch(&antiholomorphic_volume(2), &pair.j1).unwrap() < 1e-9);
        assert!(spinor_structure_mismatch(&symplectic_spinor(2), &pair.j2).unwrap() < 1e-9);
        let back = gualtieri_forward(&pair).unwrap();
        assert!((&back.b).norm() < 1e-12);
        assert!((&back.i_mat - &back.j_mat).norm() < 1e-12);
    }

    #[test]
    fn hyperkahler_pair_is_nondegenerate_symplectic_type() {
        let pair = gualtieri_inverse(&flat_hyperkahler_point()).unwrap();
        assert_eq!(type_of(&pair.j1), 0);
        assert_eq!(type_of(&pair.j2), 0);
    }

    #[test]
    fn commuting_pair_types() {
        // product of a Kähler factor and an anti-Kähler factor
        let pair = gualtieri_inverse(&flat_commuting_point()).unwrap();
        assert_eq!(type_of(&pair.j1), 1);
        assert_eq!(type_of(&pair.j2), 1);
    }

    #[test]
    fn gualtieri_round_trip_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in 1..=2usize {
            for _ in 0..20 {
                let pair = synthetic_gk_point(n, &mut rng);
                let biherm = gualtieri_forward(&pair).unwrap();
                let pair2 = gualtieri_inverse(&biherm).unwrap();
                let err = (pair.j1.matrix() - pair2.j1.matrix())
                    .norm()
                    .max((pair.j2.matrix() - pair2.j2.matrix()).norm());
                assert!(err < 1e-10, "round trip error {err:.3e}");
            }
        }
    }

    #[test]
    fn b_transform_equivariance_of_forward_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pair = synthetic_gk_point(2, &mut rng);
        let base = gualtieri_forward(&pair).unwrap();
        let mut b = RealTwoForm::zero(2);
        for i in 0..4 {
            for j in (i + 1)..4 {
                b.set(i, j, rng.gen_range(-0.3..0.3));
            }
        }
        let pair_b = GKPairAlg::new(
            b_transform_gcs(&b, &pair.j1).unwrap(),
            b_transform_gcs(&b, &pair.j2).unwrap(),
        )
        .unwrap();
        let shifted = gualtieri_forward(&pair_b).unwrap();
        assert!((&shifted.g - &base.g).norm() < 1e-10);
        assert!((&shifted.i_mat - &base.i_mat).norm() < 1e-10);
        assert!((&shifted.j_mat - &base.j_mat).norm() < 1e-10);
        // b shifts by -(map of the transform): e^{-b}Je^{b} has
        // bihermitian b-field b_old - b_map
        let bmap = two_form_map(&b);
        assert!((&shifted.b - (&base.b - &bmap)).norm() < 1e-10);
    }

    #[test]
    fn nondeg_extract_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..10 {
            let pair = loop {
                let p = synthetic_gk_point(2, &mut rng);
                if type_of(&p.j1) == 0 && type_of(&p.j2) == 0 {
                    break p;
                }
            };
            let d = gualtieri_forward(&pair).unwrap();
            let forms = nondeg_extract(&d).unwrap();
            // σ = ½ g^{-1}[I,J] is invertible iff I ± J are
            assert!(forms.sigma.clone().try_inverse().is_some(), "trial {trial}");
            // F± antisymmetric
            assert!((&forms.f_plus + forms.f_plus.transpose()).norm() < 1e-9);
            assert!((&forms.f_minus + forms.f_minus.transpose()).norm() < 1e-9);
            // spinors reproduce the structures
            let m1 = spinor_structure_mismatch(&forms.psi1, &pair.j1).unwrap();
            let m2 = spinor_structure_mismatch(&forms.psi2, &pair.j2).unwrap();
            assert!(m1 < 1e-9, "psi1 mismatch {m1:.3e}");
            assert!(m2 < 1e-9, "psi2 mismatch {m2:.3e}");
            // both nondegenerate
            let p1 = mukai_pairing(&forms.psi1, &forms.psi1.conj()).unwrap();
            let p2 = mukai_pairing(&forms.psi2, &forms.psi2.conj()).unwrap();
            assert!(p1.norm() > 1e-8 && p2.norm() > 1e-8);
        }
    }

    #[test]
    fn hyperkahler_nondeg_forms_are_constant_classics() {
        let d = flat_hyperkahler_point();
        let forms = nondeg_extract(&d).unwrap();
        let (i, j, k) = quaternion_triple();
        // F± = -2g(I±J)^{-1} = g(I±J) on the flat quaternionic point
        assert!((&forms.f_plus - (&i + &j)).norm() < 1e-12);
        assert!((&forms.f_minus - (&i - &j)).norm() < 1e-12);
        // σ = ½[I,J] = -K·(...): [I,J] = IJ - JI = 2K
        assert!((&forms.sigma - &k).norm() < 1e-12);
    }

    #[test]
    fn symplectic_perturbation_flips_type() {
        let theta_bar = antiholomorphic_volume(2);
        // β = ∂z^1 ∧ ∂z^2 in the real frame
        let d = 4;
        let mut beta = DMatrix::<C64>::zeros(d, d);
        let dz1 = [
            C64::new(0.5, 0.0),
            C64::new(0.0, -0.5),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ];
        let dz2 = [
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.0, -0.5),
        ];
        for a in 0..d {
            for b in 0..d {
                beta[(a, b)] = dz1[a] * dz2[b] - dz1[b] * dz2[a];
            }
        }
        // t = 0: unchanged
        let p0 = symplectic_perturb_spinor(&theta_bar, &beta, 0.0).unwrap();
        assert!(p0.sub(&theta_bar).is_zero(1e-15));
        // t = 1: scalar part appears, type drops to 0
        let p1 = symplectic_perturb_spinor(&theta_bar, &beta, 1.0).unwrap();
        assert!(p1.coeff(0).norm() > 0.1);
        let (pure, nondeg) = is_pure_nondegenerate(&p1).unwrap();
        assert!(pure && nondeg);
        assert_eq!(type_of(&gcs_from_spinor(&p1).unwrap()), 0);
        // degenerate β = 0 keeps type n
        let beta0 = DMatrix::<C64>::zeros(d, d);
        let q = symplectic_perturb_spinor(&theta_bar, &beta0, 1.0).unwrap();
        assert_eq!(type_of(&gcs_from_spinor(&q).unwrap()), 2);
    }

    #[test]
    fn type_parity_stable_under_small_perturbation() {
        // perturbing e^{iω} inside purity keeps even type
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let mut b = RealTwoForm::zero(2);
            for i in 0..4 {
                for j in (i + 1)..4 {
                    b.set(i, j, rng.gen_range(-0.05..0.05));
                }
            }
            let phi = b_field_exp(&b, &symplectic_spinor(2));
            let ty = type_of(&gcs_from_spinor(&phi).unwrap());
            assert_eq!(ty % 2, 0);
        }
    }
}
