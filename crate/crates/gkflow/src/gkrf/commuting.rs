//! Commuting-type (`σ = 0`) scenario on `T⁴ = T²₊ × T²₋`: analytic
//! initial data generated by a potential, and the reduced scalar flow
//! cross-validated against the tensor integrator.
//!
//! With `J = I` on the first factor and `-I` on the second, a potential
//! `φ` deforms the Kähler form by
//! `ω_I(φ) = ω₀ + i(∂₊∂̄₊ - ∂₋∂̄₋)φ`, i.e. in real terms the factor
//! densities are `a = 1 + ½Δ₊φ` and `c = 1 - ½Δ₋φ`. The matching
//! b-field is `b(φ) = (∂₊∂₋ + ∂̄₊∂̄₋)φ = 2 Re ∂₊∂₋φ`, which satisfies
//! `db = -d^c_I ω_I` identically, and the closed pure spinors are
//! `ψ₁ = e^{-b} ∧ Θ̄₊ ∧ e^{iω₋}`, `ψ₂ = e^{-b} ∧ e^{iω₊} ∧ Θ̄₋`.

use num_complex::Complex64;

use super::{commuting_j_matrix, FlowState};
use crate::error::{Error, Result};
use crate::gcs::standard_complex_structure;
use crate::torus_fields::{
    MatrixField, ScalarField, SpinorField, TorusGrid, TrigPoly,
};

type C64 = Complex64;

/// Factor densities `a = 1 + ½Δ₊φ`, `c = 1 - ½Δ₋φ` of the deformed
/// metric. Errors (admissibility loss) if either degenerates.
pub fn factor_densities(phi: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    let lap_plus = phi.derivative(0).derivative(0).add(&phi.derivative(1).derivative(1));
    let lap_minus = phi.derivative(2).derivative(2).add(&phi.derivative(3).derivative(3));
    let a = lap_plus.map(|v| 1.0 + 0.5 * v);
    let c = lap_minus.map(|v| 1.0 - 0.5 * v);
    if a.min() <= 0.0 || c.min() <= 0.0 {
        return Err(Error::AdmissibilityLoss(format!(
            "factor metric degenerates: min densities ({:.3e}, {:.3e})",
            a.min(),
            c.min()
        )));
    }
    Ok((a, c))
}

/// `b(φ) = 2 Re ∂₊∂₋φ` as a two-form map-matrix field.
pub fn b_field_of_potential(phi: &ScalarField) -> MatrixField {
    let grid = phi.grid;
    // second derivatives across the two factors
    let d02 = phi.derivative(0).derivative(2);
    let d13 = phi.derivative(1).derivative(3);
    let d03 = phi.derivative(0).derivative(3);
    let d12 = phi.derivative(1).derivative(2);
    // components b(e_i, e_j): b_02 = ½(φ02 - φ13), b_03 = ½(φ03 + φ12),
    // b_12 = ½(φ03 + φ12), b_13 = -½(φ02 - φ13)
    let mut b = MatrixField::zeros(grid);
    let mut put = |i: usize, j: usize, v: Vec<f64>| {
        // map[(j, i)] = b(e_i, e_j)
        for (p, val) in v.iter().enumerate() {
            b.get_mut(j, i)[p] = *val;
            b.get_mut(i, j)[p] = -*val;
        }
    };
    put(0, 2, d02.data.iter().zip(&d13.data).map(|(a, b)| 0.5 * (a - b)).collect());
    put(0, 3, d03.data.iter().zip(&d12.data).map(|(a, b)| 0.5 * (a + b)).collect());
    put(1, 2, d03.data.iter().zip(&d12.data).map(|(a, b)| 0.5 * (a + b)).collect());
    put(1, 3, d02.data.iter().zip(&d13.data).map(|(a, b)| -0.5 * (a - b)).collect());
    b
}

/// Assembles the full commuting-type generalized Kähler state from a
/// potential sampled on the grid.
pub fn commuting_state_from_potential(phi_poly: &TrigPoly, grid: TorusGrid) -> Result<FlowState> {
    if grid.half_dim() != 2 {
        return Err(Error::DimensionMismatch(
            "commuting scenario lives on T⁴".into(),
        ));
    }
    let phi = phi_poly.to_field(grid);
    commuting_state_from_potential_field(&phi)
}

/// Same as [`commuting_state_from_potential`] for an already-sampled
/// potential field.
pub fn commuting_state_from_potential_field(phi: &ScalarField) -> Result<FlowState> {
    let grid = phi.grid;
    let (a, c) = factor_densities(phi)?;
    let mut g = MatrixField::zeros(grid);
    *g.get_mut(0, 0) = a.data.clone();
    *g.get_mut(1, 1) = a.data.clone();
    *g.get_mut(2, 2) = c.data.clone();
    *g.get_mut(3, 3) = c.data.clone();
    let b = b_field_of_potential(phi);
    let i_field = MatrixField::constant(grid, &standard_complex_structure(2));
    let j_field = MatrixField::constant(grid, &commuting_j_matrix());
    let (psi1, psi2) = commuting_spinors(&a, &c, &b);
    Ok(FlowState {
        t: 0.0,
        grid,
        g,
        b,
        i_field,
        j_field,
        psi1,
        psi2,
        scenario: "commuting_potential".into(),
    })
}

/// Closed pure spinors of the commuting state:
/// `ψ₁ = e^{-b} ∧ Θ̄₊ ∧ e^{iω₋}`, `ψ₂ = e^{-b} ∧ e^{iω₊} ∧ Θ̄₋`.
pub fn commuting_spinors(
    a: &ScalarField,
    c: &ScalarField,
    b: &MatrixField,
) -> (SpinorField, SpinorField) {
    let grid = a.grid;
    // e^{-b} = 1 - b + b∧b/2 as a spinor field
    let b_spinor = crate::torus_fields::two_form_to_spinor(b);
    let mut exp_minus_b = SpinorField::zeros(grid);
    for p in exp_minus_b.comps[0].iter_mut() {
        *p = C64::new(1.0, 0.0);
    }
    exp_minus_b.axpy(C64::new(-1.0, 0.0), &b_spinor);
    exp_minus_b.axpy(C64::new(0.5, 0.0), &b_spinor.wedge(&b_spinor));

    // Θ̄₊ = dx₁ - i dy₁, Θ̄₋ = dx₂ - i dy₂
    let mut theta_bar_plus = SpinorField::zeros(grid);
    let mut theta_bar_minus = SpinorField::zeros(grid);
    for pt in 0..grid.npts() {
        theta_bar_plus.comps[0b0001][pt] = C64::new(1.0, 0.0);
        theta_bar_plus.comps[0b0010][pt] = C64::new(0.0, -1.0);
        theta_bar_minus.comps[0b0100][pt] = C64::new(1.0, 0.0);
        theta_bar_minus.comps[0b1000][pt] = C64::new(0.0, -1.0);
    }
    // e^{iω₋} = 1 + i c dx₂∧dy₂, e^{iω₊} = 1 + i a dx₁∧dy₁
    let mut exp_i_omega_minus = SpinorField::zeros(grid);
    let mut exp_i_omega_plus = SpinorField::zeros(grid);
    for pt in 0..grid.npts() {
        exp_i_omega_minus.comps[0][pt] = C64::new(1.0, 0.0);
        exp_i_omega_minus.comps[0b1100][pt] = C64::new(0.0, c.data[pt]);
        exp_i_omega_plus.comps[0][pt] = C64::new(1.0, 0.0);
        exp_i_omega_plus.comps[0b0011][pt] = C64::new(0.0, a.data[pt]);
    }
    let psi1 = exp_minus_b.wedge(&theta_bar_plus.wedge(&exp_i_omega_minus));
    let psi2 = exp_minus_b.wedge(&exp_i_omega_plus.wedge(&theta_bar_minus));
    (psi1, psi2)
}

/// The potential-level flow `∂φ/∂t = 2(log a(φ) - log c(φ) - λ(φ))`,
/// the scalar lift of the tensor flow `∂ω_I/∂t = -2ρ_I^{(1,1)}` on the
/// commuting background; the tensor integrator is its oracle. Returns
/// the advanced potential after one RK4 step.
pub fn commuting_potential_step(phi: &ScalarField, dt: f64) -> Result<ScalarField> {
    let rhs = |f: &ScalarField| -> Result<ScalarField> {
        let (a, c) = factor_densities(f)?;
        let loga = a.map(f64::ln);
        let logc = c.map(f64::ln);
        let lambda = (a.integrate() / c.integrate()).ln();
        Ok(loga.sub(&logc).map(|v| 2.0 * (v - lambda)))
    };
    let k1 = rhs(phi)?;
    let k2 = rhs(&phi.add(&k1.scale(dt / 2.0)))?;
    let k3 = rhs(&phi.add(&k2.scale(dt / 2.0)))?;
    let k4 = rhs(&phi.add(&k3.scale(dt)))?;
    Ok(phi
        .add(&k1.scale(dt / 6.0))
        .add(&k2.scale(dt / 3.0))
        .add(&k3.scale(dt / 3.0))
        .add(&k4.scale(dt / 6.0)))
}

/// Startup self-test: sup-norm of `(-d^c_I ω_I) - (d^c_J ω_J)` on an
/// analytic commuting configuration, which pins the `d^c` sign
/// convention operationally.
pub fn torsion_compatibility_residual(res: usize) -> Result<f64> {
    let grid = TorusGrid::new(2, res)?;
    let phi = TrigPoly::mode(4, 0.04, vec![1, 0, 1, 0], 0.4);
    let state = commuting_state_from_potential(&phi, grid)?;
    let r = state.gk_residual()?;
    Ok(r.torsion_i.max(r.torsion_j))
}
