// scratch: determine the relative sign in rho^C = rho_I + c * d(I theta_I)
use gkflow::geometry::*;
use gkflow::torus_fields::*;
use gkflow::gkrf::commuting::commuting_state_from_potential;

fn main() {
    let grid = TorusGrid::new(2, 16).unwrap();
    let phi = TrigPoly {
        dim: 4,
        terms: vec![(0.05, vec![1, 0, 1, 0], 0.3), (0.04, vec![0, 1, 0, 1], 1.1)],
    };
    let state = commuting_state_from_potential(&phi, grid).unwrap();
    let tors = torsion(&state.g, &state.i_field).unwrap();
    let rho_i = bismut_ricci(&state.g, &tors.h, &state.i_field).unwrap();
    let rho_i_sp = two_form_to_spinor(&rho_i);
    let rho_c = chern_ricci(&state.g, &state.i_field).unwrap();
    let theta_i = lee_form(&state.g, &state.i_field).unwrap();
    let i_ti = endo_act_one_form(&state.i_field, &theta_i).to_spinor().exterior_d();
    for c in [-1.0f64, -0.5, 0.5, 1.0] {
        let resid = rho_c.sub(&rho_i_sp.add(&i_ti.scale(num_complex::Complex64::new(c, 0.0)))).sup_norm();
        println!("c = {c:+.1}: residual {resid:.3e}");
    }
    // also raw scales
    println!("|rho_c| {:.3e} |rho_i| {:.3e} |dItheta| {:.3e}", rho_c.sup_norm(), rho_i_sp.sup_norm(), i_ti.sup_norm());
}
