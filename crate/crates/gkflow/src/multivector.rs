//! Pointwise complex exterior algebra on `R^{2n}` with the Clifford
//! action of `T ⊕ T*`.
//!
//! A [`FormElement`] is an inhomogeneous complex form, i.e. a spinor for
//! `T ⊕ T*`. Coefficients are indexed by subset bitmasks over the
//! covector basis `(dx^1, ..., dx^{2n})` in ascending order; bit `i`
//! set means the monomial contains covector `i`. This fixes every sign
//! convention once: the wedge sign is the parity of the permutation
//! sorting the concatenation of two ascending index lists.

use num_complex::Complex64;

use crate::conventions::NULLSPACE_RTOL;
use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Sign of `e^A ∧ e^B` for disjoint bitmasks in ascending convention,
/// or 0 if the masks overlap.
pub fn wedge_sign(a: usize, b: usize) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut transpositions = 0u32;
    let mut bb = b;
    while bb != 0 {
        let low = bb & bb.wrapping_neg();
        let pos = low.trailing_zeros();
        // bits of `a` strictly above `pos` must be hopped over
        transpositions += (a >> (pos + 1)).count_ones();
        bb &= !low;
    }
    if transpositions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sign picked up by `i_{e_j}` acting on the monomial `mask`
/// (which must contain `j`): `(-1)^{#indices below j}`.
pub fn interior_sign(mask: usize, j: usize) -> i32 {
    let below = (mask & ((1 << j) - 1)).count_ones();
    if below % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A complex inhomogeneous exterior form at a point of `R^{2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormElement {
    half_dim: usize,
    coeffs: Vec<C64>,
}

impl FormElement {
    pub fn zero(half_dim: usize) -> Self {
        assert!(half_dim >= 1);
        FormElement {
            half_dim,
            coeffs: vec![C64::new(0.0, 0.0); 1 << (2 * half_dim)],
        }
    }

    pub fn one(half_dim: usize) -> Self {
        let mut f = Self::zero(half_dim);
        f.coeffs[0] = C64::new(1.0, 0.0);
        f
    }

    /// Builds the element from a full coefficient vector (length `2^{2n}`).
    pub fn from_coeffs(half_dim: usize, coeffs: Vec<C64>) -> Self {
        assert_eq!(coeffs.len(), 1 << (2 * half_dim));
        FormElement { half_dim, coeffs }
    }

    /// The monomial `e^{i_1} ∧ ... ∧ e^{i_k}` for an ascending index set
    /// given as a bitmask.
    pub fn monomial(half_dim: usize, mask: usize, c: C64) -> Self {
        let mut f = Self::zero(half_dim);
        f.coeffs[mask] = c;
        f
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.half_dim
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> C64 {
        self.coeffs[mask]
    }

    pub fn coeff_mut(&mut self, mask: usize) -> &mut C64 {
        &mut self.coeffs[mask]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.norm() <= tol)
    }

    pub fn conj(&self) -> Self {
        FormElement {
            half_dim: self.half_dim,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        FormElement {
            half_dim: self.half_dim,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.half_dim, other.half_dim);
        FormElement {
            half_dim: self.half_dim,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Extracts the degree-`k` homogeneous component.
    pub fn degree_component(&self, k: usize) -> Self {
        let mut out = Self::zero(self.half_dim);
        for (mask, c) in self.coeffs.iter().enumerate() {
            if mask.count_ones() as usize == k {
                out.coeffs[mask] = *c;
            }
        }
        out
    }

    /// True if every nonzero monomial has degree of the given parity
    /// (0 = even, 1 = odd).
    pub fn has_parity(&self, parity: usize, tol: f64) -> bool {
        self.coeffs.iter().enumerate().all(|(mask, c)| {
            c.norm() <= tol || (mask.count_ones() as usize) % 2 == parity
        })
    }

    /// Exterior product.
    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.half_dim, other.half_dim);
        let mut out = Self::zero(self.half_dim);
        for (a, ca) in self.coeffs.iter().enumerate() {
            if ca.norm_sqr() == 0.0 {
                continue;
            }
            for (b, cb) in other.coeffs.iter().enumerate() {
                let s = wedge_sign(a, b);
                if s != 0 {
                    out.coeffs[a | b] += ca * cb * (s as f64);
                }
            }
        }
        out
    }

    /// Interior product with the coordinate vector `e_j`.
    pub fn interior(&self, j: usize) -> Self {
        let mut out = Self::zero(self.half_dim);
        let bit = 1usize << j;
        for (mask, c) in self.coeffs.iter().enumerate() {
            if mask & bit != 0 {
                out.coeffs[mask & !bit] += c * (interior_sign(mask, j) as f64);
            }
        }
        out
    }

    /// Clifford involution `s`: degree-`k` part scaled by `(-1)^{k(k-1)/2}`
    /// (reversal of the wedge factors).
    pub fn clifford_involution(&self) -> Self {
        let mut out = self.clone();
        for (mask, c) in out.coeffs.iter_mut().enumerate() {
            let k = mask.count_ones() as usize;
            if (k * (k.wrapping_sub(1)) / 2) % 2 == 1 {
                *c = -*c;
            }
        }
        out
    }

    /// Coefficient of the top monomial `dx^1 ∧ ... ∧ dx^{2n}`.
    pub fn top_coeff(&self) -> C64 {
        self.coeffs[self.coeffs.len() - 1]
    }
}

/// An element `X + ξ` of the complexified generalized tangent space
/// `(T ⊕ T*) ⊗ C` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct GenVector {
    pub vec: Vec<C64>,
    pub covec: Vec<C64>,
}

impl GenVector {
    pub fn zero(half_dim: usize) -> Self {
        GenVector {
            vec: vec![C64::new(0.0, 0.0); 2 * half_dim],
            covec: vec![C64::new(0.0, 0.0); 2 * half_dim],
        }
    }

    pub fn basis_vector(half_dim: usize, j: usize) -> Self {
        let mut e = Self::zero(half_dim);
        e.vec[j] = C64::new(1.0, 0.0);
        e
    }

    pub fn basis_covector(half_dim: usize, j: usize) -> Self {
        let mut e = Self::zero(half_dim);
        e.covec[j] = C64::new(1.0, 0.0);
        e
    }

    pub fn half_dim(&self) -> usize {
        self.vec.len() / 2
    }

    /// Coordinates in `C^{4n}`: vector part first, then covector part.
    pub fn from_flat(half_dim: usize, flat: &[C64]) -> Self {
        assert_eq!(flat.len(), 4 * half_dim);
        GenVector {
            vec: flat[..2 * half_dim].to_vec(),
            covec: flat[2 * half_dim..].to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<C64> {
        let mut v = self.vec.clone();
        v.extend_from_slice(&self.covec);
        v
    }

    pub fn conj(&self) -> Self {
        GenVector {
            vec: self.vec.iter().map(|c| c.conj()).collect(),
            covec: self.covec.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.vec.iter().map(|c| c.norm_sqr()).sum::<f64>()
            + self.covec.iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sqrt()
    }

    /// Neutral pairing `⟨X+ξ, Y+η⟩ = ½(ξ(Y) + η(X))`, bilinear.
    pub fn neutral_pairing(&self, other: &Self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..self.vec.len() {
            acc += self.covec[j] * other.vec[j] + other.covec[j] * self.vec[j];
        }
        acc * 0.5
    }
}

/// A real antisymmetric two-form on `R^{2n}` stored as its full matrix,
/// `b(e_i, e_j) = mat[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTwoForm {
    half_dim: usize,
    mat: Vec<f64>,
}

impl RealTwoForm {
    pub fn zero(half_dim: usize) -> Self {
        RealTwoForm {
            half_dim,
            mat: vec![0.0; (2 * half_dim) * (2 * half_dim)],
        }
    }

    /// Builds from a full matrix, checking antisymmetry.
    pub fn from_matrix(half_dim: usize, mat: Vec<f64>) -> Result<Self> {
        let d = 2 * half_dim;
        if mat.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "two-form matrix has {} entries, expected {}",
                mat.len(),
                d * d
            )));
        }
        for i in 0..d {
            for j in 0..d {
                if (mat[i * d + j] + mat[j * d + i]).abs() > 1e-12 {
                    return Err(Error::DimensionMismatch(
                        "two-form matrix is not antisymmetric".into(),
                    ));
                }
            }
        }
        Ok(RealTwoForm { half_dim, mat })
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let d = 2 * self.half_dim;
        self.mat[i * d + j] = v;
        self.mat[j * d + i] = -v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[i * 2 * self.half_dim + j]
    }

    pub fn half_dim(&self) -> usize {
        self.half_dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.mat
    }

    pub fn scale(&self, s: f64) -> Self {
        RealTwoForm {
            half_dim: self.half_dim,
            mat: self.mat.iter().map(|v| v * s).collect(),
        }
    }

    /// The corresponding degree-2 [`FormElement`]
    /// `Σ_{i<j} b_{ij} dx^i ∧ dx^j`.
    pub fn to_form(&self) -> FormElement {
        let d = 2 * self.half_dim;
        let mut f = FormElement::zero(self.half_dim);
        for i in 0..d {
            for j in (i + 1)..d {
                f.coeffs[(1 << i) | (1 << j)] = C64::new(self.get(i, j), 0.0);
            }
        }
        f
    }
}

/// Clifford action `(X + ξ) · φ = i_X φ + ξ ∧ φ`.
pub fn clifford_act(e: &GenVector, phi: &FormElement) -> Result<FormElement> {
    if e.half_dim() != phi.half_dim() {
        return Err(Error::DimensionMismatch(format!(
            "generalized vector half_dim {} vs form half_dim {}",
            e.half_dim(),
            phi.half_dim()
        )));
    }
    let d = phi.dim();
    let mut out = FormElement::zero(phi.half_dim());
    for j in 0..d {
        let bit = 1usize << j;
        let xv = e.vec[j];
        let xc = e.covec[j];
        if xv.norm_sqr() == 0.0 && xc.norm_sqr() == 0.0 {
            continue;
        }
        for (mask, c) in phi.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            if mask & bit != 0 {
                // interior product
                out.coeffs[mask & !bit] += xv * c * (interior_sign(mask, j) as f64);
            } else {
                // wedge; the covector slots ascend so the sign is the
                // same crossing count
                out.coeffs[mask | bit] += xc * c * (interior_sign(mask | bit, j) as f64);
            }
        }
    }
    Ok(out)
}

/// Mukai pairing `(φ, ψ) = (2i)^{-n} [φ ∧ s(ψ)]_top`, reported as the
/// coefficient of the standard volume monomial.
pub fn mukai_pairing(phi: &FormElement, psi: &FormElement) -> Result<C64> {
    if phi.half_dim() != psi.half_dim() {
        return Err(Error::DimensionMismatch(
            "mukai pairing of forms with different half_dim".into(),
        ));
    }
    let n = phi.half_dim();
    let full = (1usize << (2 * n)) - 1;
    let mut top = C64::new(0.0, 0.0);
    for (a, ca) in phi.coeffs.iter().enumerate() {
        if ca.norm_sqr() == 0.0 {
            continue;
        }
        let b = full & !a;
        let k = b.count_ones() as usize;
        let s_sign = if (k * (k.wrapping_sub(1)) / 2) % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        let w = wedge_sign(a, b);
        if w != 0 {
            top += ca * psi.coeffs[b] * (w as f64) * s_sign;
        }
    }
    // (2i)^{-n}
    let two_i = C64::new(0.0, 2.0);
    Ok(top / two_i.powu(n as u32))
}

/// `e^b ∧ φ` for a real two-form `b` (finite sum, `b^{∧k}/k!` up to `k = n`).
pub fn b_field_exp(b: &RealTwoForm, phi: &FormElement) -> FormElement {
    let n = phi.half_dim();
    assert_eq!(b.half_dim(), n);
    let bform = b.to_form();
    let mut term = FormElement::one(n);
    let mut out = phi.clone();
    for k in 1..=n {
        term = term.wedge(&bform).scale(C64::new(1.0 / k as f64, 0.0));
        out = out.add(&term.wedge(phi));
    }
    out
}

/// Exponential `Σ_k B^{∧k}/k!` of an arbitrary (possibly complex)
/// degree-2 form element.
pub fn exp_two_form(b2: &FormElement) -> FormElement {
    let n = b2.half_dim();
    let mut out = FormElement::one(n);
    let mut term = FormElement::one(n);
    for k in 1..=n {
        term = term.wedge(b2).scale(C64::new(1.0 / k as f64, 0.0));
        out = out.add(&term);
    }
    out
}

/// Matrix of the linear map `e ↦ e · φ` from `C^{4n}` (vector part then
/// covector part) to the `2^{2n}` spinor coefficients. Column-major by
/// generalized-basis index.
fn clifford_action_matrix(phi: &FormElement) -> Vec<Vec<C64>> {
    let n = phi.half_dim();
    let d = 2 * n;
    let mut cols = Vec::with_capacity(4 * n);
    for j in 0..d {
        let e = GenVector::basis_vector(n, j);
        cols.push(clifford_act(&e, phi).unwrap().coeffs);
    }
    for j in 0..d {
        let e = GenVector::basis_covector(n, j);
        cols.push(clifford_act(&e, phi).unwrap().coeffs);
    }
    cols
}

/// Null space of a complex matrix given as columns, via full-pivot
/// Gaussian elimination with relative pivot threshold `rtol`.
/// Returns a basis of the kernel (vectors in the column-index space).
pub(crate) fn complex_nullspace(columns: &[Vec<C64>], rtol: f64) -> Vec<Vec<C64>> {
    let ncols = columns.len();
    if ncols == 0 {
        return vec![];
    }
    let nrows = columns[0].len();
    // row-major working copy
    let mut a: Vec<Vec<C64>> = (0..nrows)
        .map(|r| (0..ncols).map(|c| columns[c][r]).collect())
        .collect();
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.norm()))
        .fold(0.0_f64, f64::max);
    let tol = rtol * scale.max(1e-300);

    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut row = 0usize;
    let mut col_order: Vec<usize> = (0..ncols).collect();
    let mut perm_swaps: Vec<(usize, usize)> = Vec::new();
    for _ in 0..ncols.min(nrows) {
        // full pivot over remaining block
        let mut best = (row, pivot_cols.len(), 0.0_f64);
        for r in row..nrows {
            for c in pivot_cols.len()..ncols {
                let v = a[r][c].norm();
                if v > best.2 {
                    best = (r, c, v);
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        a.swap(row, best.0);
        if best.1 != pivot_cols.len() {
            for r in 0..nrows {
                a[r].swap(pivot_cols.len(), best.1);
            }
            col_order.swap(pivot_cols.len(), best.1);
            perm_swaps.push((pivot_cols.len(), best.1));
        }
        let pc = pivot_cols.len();
        let piv = a[row][pc];
        for c in 0..ncols {
            a[row][c] /= piv;
        }
        for r in 0..nrows {
            if r != row {
                let f = a[r][pc];
                if f.norm_sqr() != 0.0 {
                    for c in 0..ncols {
                        let sub = f * a[row][c];
                        a[r][c] -= sub;
                    }
                }
            }
        }
        pivot_cols.push(pc);
        row += 1;
    }
    let rank = pivot_cols.len();
    let mut basis = Vec::with_capacity(ncols - rank);
    for free in rank..ncols {
        let mut v = vec![C64::new(0.0, 0.0); ncols];
        v[free] = C64::new(1.0, 0.0);
        for (r, _) in pivot_cols.iter().enumerate() {
            v[r] = -a[r][free];
        }
        // undo column permutation
        let mut w = vec![C64::new(0.0, 0.0); ncols];
        for (permuted, original) in col_order.iter().enumerate() {
            w[*original] = v[permuted];
        }
        basis.push(w);
    }
    basis
}

/// Basis of the Clifford annihilator `Ker(φ) = { e : e · φ = 0 }` inside
/// the complexified generalized tangent space.
pub fn annihilator(phi: &FormElement) -> Result<Vec<GenVector>> {
    if phi.is_zero(0.0) {
        return Err(Error::ZeroSpinor);
    }
    let n = phi.half_dim();
    let unit = phi.scale(C64::new(1.0 / phi.norm(), 0.0));
    let cols = clifford_action_matrix(&unit);
    let null = complex_nullspace(&cols, NULLSPACE_RTOL);
    Ok(null
        .into_iter()
        .map(|v| GenVector::from_flat(n, &v))
        .collect())
}

/// The standard symplectic form `Σ dx_i ∧ dy_i` on `R^{2n}`.
pub fn standard_symplectic_form(n: usize) -> RealTwoForm {
    let mut omega = RealTwoForm::zero(n);
    for i in 0..n {
        omega.set(2 * i, 2 * i + 1, 1.0);
    }
    omega
}

/// `e^{iω}` for the standard symplectic form.
pub fn standard_symplectic_spinor(n: usize) -> FormElement {
    exp_two_form(
        &standard_symplectic_form(n)
            .to_form()
            .scale(C64::new(0.0, 1.0)),
    )
}

/// `Θ̄ = dz̄^1 ∧ ... ∧ dz̄^n` with `z^k = x^k + i y^k`.
pub fn antiholomorphic_volume(n: usize) -> FormElement {
    let mut theta_bar = FormElement::one(n);
    for k in 0..n {
        let mut dzbar = FormElement::zero(n);
        *dzbar.coeff_mut(1 << (2 * k)) = C64::new(1.0, 0.0);
        *dzbar.coeff_mut(1 << (2 * k + 1)) = C64::new(0.0, -1.0);
        theta_bar = theta_bar.wedge(&dzbar);
    }
    theta_bar
}

/// Purity (`dim Ker(φ) = 2n`) and nondegeneracy (`(φ, conj φ) ≠ 0`).
pub fn is_pure_nondegenerate(phi: &FormElement) -> Result<(bool, bool)> {
    if phi.is_zero(0.0) {
        return Err(Error::ZeroSpinor);
    }
    let ann = annihilator(phi)?;
    let pure = ann.len() == 2 * phi.half_dim();
    let unit = phi.scale(C64::new(1.0 / phi.norm(), 0.0));
    let pairing = mukai_pairing(&unit, &unit.conj())?;
    Ok((pure, pairing.norm() > 1e-10))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng as _};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_form(n: usize, rng: &mut ChaCha8Rng) -> FormElement {
        let mut f = FormElement::zero(n);
        for mask in 0..(1usize << (2 * n)) {
            *f.coeff_mut(mask) = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        f
    }

    fn random_genvector(n: usize, rng: &mut ChaCha8Rng) -> GenVector {
        let mut e = GenVector::zero(n);
        for j in 0..2 * n {
            e.vec[j] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            e.covec[j] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        e
    }

    /// `e^{iω}` for the standard symplectic form on `R^{2n}`.
    pub(crate) fn symplectic_spinor(n: usize) -> FormElement {
        let mut omega = RealTwoForm::zero(n);
        for i in 0..n {
            omega.set(2 * i, 2 * i + 1, 1.0);
        }
        exp_two_form(&omega.to_form().scale(c(0.0, 1.0)))
    }

    /// `dz̄^1 ∧ ... ∧ dz̄^n` with `z^k = x^k + i y^k`.
    pub(crate) fn antiholomorphic_volume(n: usize) -> FormElement {
        let mut theta_bar = FormElement::one(n);
        for k in 0..n {
            let mut dzbar = FormElement::zero(n);
            *dzbar.coeff_mut(1 << (2 * k)) = c(1.0, 0.0);
            *dzbar.coeff_mut(1 << (2 * k + 1)) = c(0.0, -1.0);
            theta_bar = theta_bar.wedge(&dzbar);
        }
        theta_bar
    }

    #[test]
    fn clifford_act_interior_of_leading_factor() {
        // e = (∂_1, 0), φ = dx^1 ∧ dx^2 -> dx^2
        let phi = FormElement::monomial(1, 0b11, c(1.0, 0.0));
        let e = GenVector::basis_vector(1, 0);
        let out = clifford_act(&e, &phi).unwrap();
        assert_eq!(out.coeff(0b10), c(1.0, 0.0));
        assert!(out.sub(&FormElement::monomial(1, 0b10, c(1.0, 0.0))).is_zero(1e-15));
    }

    #[test]
    fn clifford_act_wedge_with_scalar() {
        let phi = FormElement::one(1);
        let e = GenVector::basis_covector(1, 0);
        let out = clifford_act(&e, &phi).unwrap();
        assert!(out.sub(&FormElement::monomial(1, 0b01, c(1.0, 0.0))).is_zero(1e-15));
    }

    #[test]
    fn clifford_relation_mixed_element() {
        // e = (∂_1, dx^1), φ = dx^2: e·(e·φ) = ⟨e,e⟩ φ = 1 · dx^2
        let mut e = GenVector::zero(1);
        e.vec[0] = c(1.0, 0.0);
        e.covec[0] = c(1.0, 0.0);
        let phi = FormElement::monomial(1, 0b10, c(1.0, 0.0));
        let out = clifford_act(&e, &clifford_act(&e, &phi).unwrap()).unwrap();
        let expected = phi.scale(e.neutral_pairing(&e));
        assert!(out.sub(&expected).is_zero(1e-14));
        assert_eq!(e.neutral_pairing(&e), c(1.0, 0.0));
    }

    #[test]
    fn clifford_relation_randomized() {
        // acceptance-grade version lives in tests/acceptance.rs; this is
        // the module smoke test
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=2usize {
            for _ in 0..100 {
                let e = random_genvector(n, &mut rng);
                let phi = random_form(n, &mut rng);
                let lhs = clifford_act(&e, &clifford_act(&e, &phi).unwrap()).unwrap();
                let rhs = phi.scale(e.neutral_pairing(&e));
                assert!(lhs.sub(&rhs).norm() < 1e-12 * (1.0 + phi.norm()));
            }
        }
    }

    #[test]
    fn involution_signs() {
        let f1 = FormElement::monomial(2, 0b0001, c(1.0, 0.0));
        assert_eq!(f1.clifford_involution().coeff(0b0001), c(1.0, 0.0));
        let f2 = FormElement::monomial(2, 0b0011, c(1.0, 0.0));
        assert_eq!(f2.clifford_involution().coeff(0b0011), c(-1.0, 0.0));
        let f4 = FormElement::monomial(2, 0b1111, c(1.0, 0.0));
        assert_eq!(f4.clifford_involution().coeff(0b1111), c(1.0, 0.0));
    }

    #[test]
    fn involution_matches_explicit_reversal() {
        // reversal oracle: s(e^{i1..ik}) = e^{ik} ∧ ... ∧ e^{i1}, whose
        // sign is the parity of reversing k elements
        for n in 1..=2usize {
            for mask in 0..(1usize << (2 * n)) {
                let k = mask.count_ones() as usize;
                let mut sign = 1.0;
                // bubble-reverse: k(k-1)/2 adjacent transpositions
                for _ in 0..(k * k.wrapping_sub(1) / 2) % 2 {
                    sign = -sign;
                }
                let f = FormElement::monomial(n, mask, c(1.0, 0.0));
                assert_eq!(f.clifford_involution().coeff(mask).re, sign);
            }
        }
    }

    #[test]
    fn mukai_symplectic_paper_value() {
        for n in 1..=2usize {
            let psi = symplectic_spinor(n);
            let p = mukai_pairing(&psi, &psi.conj()).unwrap();
            // (e^{iω}, e^{-iω}) = ω^n/n! = standard volume, coefficient 1
            assert!((p - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn mukai_complex_paper_value() {
        for n in 1..=2usize {
            let theta_bar = antiholomorphic_volume(n);
            let p = mukai_pairing(&theta_bar, &theta_bar.conj()).unwrap();
            assert!((p - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn mukai_parity_mismatch_vanishes() {
        let one = FormElement::one(1);
        let dx = FormElement::monomial(1, 0b01, c(1.0, 0.0));
        assert_eq!(mukai_pairing(&one, &dx).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn b_field_identity_and_truncation() {
        let b = RealTwoForm::zero(1);
        let phi = FormElement::one(1);
        assert!(b_field_exp(&b, &phi).sub(&phi).is_zero(1e-15));

        let mut b = RealTwoForm::zero(1);
        b.set(0, 1, 0.7);
        let out = b_field_exp(&b, &FormElement::one(1));
        assert_eq!(out.coeff(0), c(1.0, 0.0));
        assert!((out.coeff(0b11) - c(0.7, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn annihilator_symplectic() {
        // Ker(e^{iω}) = span{ X - iω(X,·) }
        let psi = symplectic_spinor(1);
        let ann = annihilator(&psi).unwrap();
        assert_eq!(ann.len(), 2);
        // ∂x - i dy must lie in the kernel: check via action directly
        let mut e = GenVector::zero(1);
        e.vec[0] = c(1.0, 0.0);
        e.covec[1] = c(0.0, -1.0);
        assert!(clifford_act(&e, &psi).unwrap().norm() < 1e-13);
        let mut e2 = GenVector::zero(1);
        e2.vec[1] = c(1.0, 0.0);
        e2.covec[0] = c(0.0, 1.0);
        assert!(clifford_act(&e2, &psi).unwrap().norm() < 1e-13);
    }

    #[test]
    fn annihilator_complex_type() {
        // Ker(dz̄) = T^{1,0} ⊕ Λ^{0,1}
        let theta_bar = antiholomorphic_volume(1);
        let ann = annihilator(&theta_bar).unwrap();
        assert_eq!(ann.len(), 2);
        // ∂_z = ½(∂x - i ∂y)
        let mut dz_vec = GenVector::zero(1);
        dz_vec.vec[0] = c(0.5, 0.0);
        dz_vec.vec[1] = c(0.0, -0.5);
        assert!(clifford_act(&dz_vec, &theta_bar).unwrap().norm() < 1e-13);
        // dz̄ = dx - i dy
        let mut dzbar_cov = GenVector::zero(1);
        dzbar_cov.covec[0] = c(1.0, 0.0);
        dzbar_cov.covec[1] = c(0.0, -1.0);
        assert!(clifford_act(&dzbar_cov, &theta_bar).unwrap().norm() < 1e-13);
    }

    #[test]
    fn annihilator_rejects_zero() {
        assert!(matches!(
            annihilator(&FormElement::zero(1)),
            Err(Error::ZeroSpinor)
        ));
    }

    #[test]
    fn purity_and_nondegeneracy() {
        let (pure, nondeg) = is_pure_nondegenerate(&symplectic_spinor(2)).unwrap();
        assert!(pure && nondeg);

        // 1 + dx^1∧dx^2∧dx^3∧dx^4 is not pure at n = 2
        let mut f = FormElement::one(2);
        *f.coeff_mut(0b1111) = c(1.0, 0.0);
        let (pure, _) = is_pure_nondegenerate(&f).unwrap();
        assert!(!pure);

        // dz̄^1∧dz̄^2 is pure and nondegenerate
        let (pure, nondeg) = is_pure_nondegenerate(&antiholomorphic_volume(2)).unwrap();
        assert!(pure && nondeg);

        // dz^1∧dz^2 is pure but (φ, φ) = 0; its conjugate-pairing is
        // nonzero, so it is nondegenerate as well
        let theta = antiholomorphic_volume(2).conj();
        let self_pairing = mukai_pairing(&theta, &theta).unwrap();
        assert!(self_pairing.norm() < 1e-14);
        let (pure, nondeg) = is_pure_nondegenerate(&theta).unwrap();
        assert!(pure && nondeg);
    }

    #[test]
    fn b_field_conjugates_annihilators() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 2;
            let mut b = RealTwoForm::zero(n);
            for i in 0..2 * n {
                for j in (i + 1)..2 * n {
                    b.set(i, j, rng.gen_range(-0.5..0.5));
                }
            }
            let phi = symplectic_spinor(n);
            let shifted = b_field_exp(&b, &phi);
            for e in annihilator(&phi).unwrap() {
                // e^{-b}(X+ξ) = X + ξ - b(X,·)
                let mut te = e.clone();
                for i in 0..2 * n {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..2 * n {
                        acc += C64::new(b.get(j, i), 0.0) * e.vec[j];
                    }
                    te.covec[i] -= acc;
                }
                let act = clifford_act(&te, &shifted).unwrap();
                assert!(act.norm() < 1e-12 * shifted.norm() * (1.0 + te.norm()));
            }
        }
    }

    #[test]
    fn annihilator_is_isotropic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=2usize {
            let mut b = RealTwoForm::zero(n);
            for i in 0..2 * n {
                for j in (i + 1)..2 * n {
                    b.set(i, j, rng.gen_range(-0.4..0.4));
                }
            }
            let phi = b_field_exp(&b, &symplectic_spinor(n));
            let ann = annihilator(&phi).unwrap();
            assert_eq!(ann.len(), 2 * n);
            for e in &ann {
                for f in &ann {
                    assert!(e.neutral_pairing(f).norm() < 1e-10);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn wedge_is_associative(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_form(2, &mut rng);
            let b = random_form(2, &mut rng);
            let cc = random_form(2, &mut rng);
            let lhs = a.wedge(&b).wedge(&cc);
            let rhs = a.wedge(&b.wedge(&cc));
            prop_assert!(lhs.sub(&rhs).norm() < 1e-11 * (1.0 + lhs.norm()));
        }

        #[test]
        fn neutral_pairing_is_symmetric(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_genvector(2, &mut rng);
            let f = random_genvector(2, &mut rng);
            prop_assert!((e.neutral_pairing(&f) - f.neutral_pairing(&e)).norm() < 1e-14);
        }

        #[test]
        fn involution_is_an_involution(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_form(2, &mut rng);
            prop_assert!(a.clifford_involution().clifford_involution().sub(&a).is_zero(1e-15));
        }

        #[test]
        fn b_field_exp_round_trip(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2usize;
            let mut b = RealTwoForm::zero(n);
            for i in 0..2*n {
                for j in (i+1)..2*n {
                    b.set(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            let phi = random_form(n, &mut rng);
            let back = b_field_exp(&b.scale(-1.0), &b_field_exp(&b, &phi));
            prop_assert!(back.sub(&phi).norm() < 1e-12 * (1.0 + phi.norm()));
        }

        #[test]
        fn mukai_vanishes_on_parity_mismatch(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 2usize;
            let mut even = FormElement::zero(n);
            let mut odd = FormElement::zero(n);
            for mask in 0..(1usize << (2*n)) {
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if mask.count_ones() % 2 == 0 {
                    *even.coeff_mut(mask) = v;
                } else {
                    *odd.coeff_mut(mask) = v;
                }
            }
            prop_assert!(mukai_pairing(&even, &odd).unwrap().norm() < 1e-14);
        }
    }
}
