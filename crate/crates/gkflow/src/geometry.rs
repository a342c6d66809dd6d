//! Connections, curvature, torsion, Lee forms, Ricci potentials and the
//! transgression identity residuals.
//!
//! Two-form fields are handled in the same map-matrix convention as
//! [`crate::gcs`] (`X ↦ β(X,·)`), so `ω_I = g·I` holds literally and
//! component `β(e_k, e_l)` sits at `map[(l, k)]`. A complex structure
//! acts on 1-forms by `(Iα)(X) = -α(IX)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::torus_fields::{
    codifferential, dc_i, form_inner_product, spectral_derivative_r, two_form_to_spinor,
    MatrixField, ScalarField, SpinorField, TorusGrid, VectorField,
};

type C64 = num_complex::Complex64;

/// Christoffel symbols `Γ^i_{jk}` (symmetric in the lower pair),
/// component `i·d² + j·d + k`.
#[derive(Debug, Clone)]
pub struct Christoffels {
    pub grid: TorusGrid,
    pub comps: Vec<Vec<f64>>,
}

impl Christoffels {
    pub fn get(&self, i: usize, j: usize, k: usize) -> &[f64] {
        let d = self.grid.dim();
        &self.comps[i * d * d + j * d + k]
    }
}

/// Levi-Civita curvature data.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub christoffels: Christoffels,
    /// `R^i_{jkl} = (R(e_k, e_l) e_j)^i` at `((i·d + j)·d + k)·d + l`;
    /// populated on demand (it is the largest object here).
    pub riemann: Option<Vec<Vec<f64>>>,
    pub ricci: MatrixField,
    pub scalar: ScalarField,
}

/// Torsion data of a Hermitian pair.
#[derive(Debug, Clone)]
pub struct TorsionPack {
    /// `H = -d^c_I ω_I` as a degree-3 form field.
    pub h: SpinorField,
    /// Full-index contraction `|H|² = H_{abc} H^{abc}`.
    pub hnorm2: ScalarField,
    /// `H²(X, Y) = ⟨i_X H, i_Y H⟩` (ascending-pair inner product).
    pub hsq: MatrixField,
}

/// Ricci potentials, the cohomological constant and Mabuchi energies.
#[derive(Debug, Clone)]
pub struct PotentialPack {
    pub psi1: ScalarField,
    pub psi2: ScalarField,
    pub phi: ScalarField,
    /// `λ = log [∫(ψ₂, ψ̄₂) / ∫(ψ₁, ψ̄₁)]`, so that generalized
    /// Calabi-Yau data has `Φ ≡ λ` and the Jensen bounds hold as
    /// stated.
    pub lambda: f64,
    pub m1: f64,
    pub m2: f64,
    /// spinor class masses `∫(ψᵢ, ψ̄ᵢ)`
    pub mass1: f64,
    pub mass2: f64,
}

/// Parallel derivative table: `out[c][a]` is the spectral derivative of
/// `comps[c]` along axis `a`.
pub fn derivative_table(grid: &TorusGrid, comps: &[&[f64]]) -> Vec<Vec<Vec<f64>>> {
    let d = grid.dim();
    let pairs: Vec<(usize, usize)> = (0..comps.len())
        .flat_map(|c| (0..d).map(move |a| (c, a)))
        .collect();
    let flat: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|(c, a)| spectral_derivative_r(grid, comps[*c], *a))
        .collect();
    let mut out: Vec<Vec<Vec<f64>>> = Vec::with_capacity(comps.len());
    let mut it = flat.into_iter();
    for _ in 0..comps.len() {
        out.push((0..d).map(|_| it.next().unwrap()).collect());
    }
    out
}

/// Christoffel symbols of a metric field by spectral derivatives.
pub fn christoffels(g: &MatrixField) -> Result<Christoffels> {
    let grid = g.grid;
    let d = grid.dim();
    let g_inv = g.inverse()?;
    let refs: Vec<&[f64]> = g.comps.iter().map(|c| c.as_slice()).collect();
    let dg = derivative_table(&grid, &refs); // dg[i*d+j][a] = ∂_a g_ij
    let npts = grid.npts();
    let triples: Vec<(usize, usize, usize)> = (0..d)
        .flat_map(|i| (0..d).flat_map(move |j| (0..d).map(move |k| (i, j, k))))
        .collect();
    let comps: Vec<Vec<f64>> = triples
        .par_iter()
        .map(|&(i, j, k)| {
            let mut out = vec![0.0; npts];
            for l in 0..d {
                let gil = g_inv.get(i, l);
                let t1 = &dg[l * d + k][j];
                let t2 = &dg[l * d + j][k];
                let t3 = &dg[j * d + k][l];
                for (p, o) in out.iter_mut().enumerate() {
                    *o += 0.5 * gil[p] * (t1[p] + t2[p] - t3[p]);
                }
            }
            out
        })
        .collect();
    Ok(Christoffels { grid, comps })
}

/// Ricci tensor and scalar from Christoffels:
/// `R_{ab} = ∂_k Γ^k_{ab} - ∂_a Γ^k_{kb} + Γ^k_{km} Γ^m_{ab} -
/// Γ^k_{am} Γ^m_{kb}`.
fn ricci_from_christoffels(
    chris: &Christoffels,
    g_inv: &MatrixField,
) -> (MatrixField, ScalarField) {
    let grid = chris.grid;
    let d = grid.dim();
    let npts = grid.npts();
    let mut div = vec![vec![0.0; npts]; d * d];
    for a in 0..d {
        for b in 0..d {
            let slot = &mut div[a * d + b];
            for k in 0..d {
                let der = spectral_derivative_r(&grid, chris.get(k, a, b), k);
                for (p, o) in slot.iter_mut().enumerate() {
                    *o += der[p];
                }
            }
        }
    }
    let mut gamma = vec![vec![0.0; npts]; d];
    for (b, gb) in gamma.iter_mut().enumerate() {
        for k in 0..d {
            let c = chris.get(k, k, b);
            for (p, o) in gb.iter_mut().enumerate() {
                *o += c[p];
            }
        }
    }
    let dgamma: Vec<Vec<Vec<f64>>> =
        derivative_table(&grid, &gamma.iter().map(|c| c.as_slice()).collect::<Vec<_>>());
    let mut ricci = MatrixField::zeros(grid);
    for a in 0..d {
        for b in 0..d {
            let mut out = div[a * d + b].clone();
            let dg = &dgamma[b][a];
            for (p, o) in out.iter_mut().enumerate() {
                *o -= dg[p];
            }
            for k in 0..d {
                for m in 0..d {
                    let c1 = chris.get(k, k, m);
                    let c2 = chris.get(m, a, b);
                    let c3 = chris.get(k, a, m);
                    let c4 = chris.get(m, k, b);
                    for (p, o) in out.iter_mut().enumerate() {
                        *o += c1[p] * c2[p] - c3[p] * c4[p];
                    }
                }
            }
            *ricci.get_mut(a, b) = out;
        }
    }
    let mut scalar = ScalarField::zeros(grid);
    for a in 0..d {
        for b in 0..d {
            let gi = g_inv.get(a, b);
            let rc = ricci.get(a, b);
            for (p, o) in scalar.data.iter_mut().enumerate() {
                *o += gi[p] * rc[p];
            }
        }
    }
    (ricci, scalar)
}

/// Full Levi-Civita curvature of a metric field; the Riemann tensor is
/// stored only when `with_riemann` (it is `d⁴` grids).
pub fn levi_civita_curvature(g: &MatrixField, with_riemann: bool) -> Result<CurvaturePack> {
    let grid = g.grid;
    let d = grid.dim();
    let chris = christoffels(g)?;
    let g_inv = g.inverse()?;
    let (ricci, scalar) = ricci_from_christoffels(&chris, &g_inv);
    let riemann = if with_riemann {
        let npts = grid.npts();
        let refs: Vec<&[f64]> = chris.comps.iter().map(|c| c.as_slice()).collect();
        let dchris = derivative_table(&grid, &refs);
        let mut r = vec![vec![0.0; npts]; d * d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let slot = &mut r[((i * d + j) * d + k) * d + l];
                        let t1 = &dchris[i * d * d + l * d + j][k];
                        let t2 = &dchris[i * d * d + k * d + j][l];
                        for (p, o) in slot.iter_mut().enumerate() {
                            *o = t1[p] - t2[p];
                        }
                        for m in 0..d {
                            let a1 = chris.get(i, k, m);
                            let b1 = chris.get(m, l, j);
                            let a2 = chris.get(i, l, m);
                            let b2 = chris.get(m, k, j);
                            for (p, o) in slot.iter_mut().enumerate() {
                                *o += a1[p] * b1[p] - a2[p] * b2[p];
                            }
                        }
                    }
                }
            }
        }
        Some(r)
    } else {
        None
    };
    Ok(CurvaturePack {
        christoffels: chris,
        riemann,
        ricci,
        scalar,
    })
}

/// Laplace-Beltrami operator (trace Hessian; negative spectrum):
/// `Δf = g^{ab}(∂_a ∂_b f - Γ^c_{ab} ∂_c f)`.
pub fn laplace_beltrami(f: &ScalarField, g_inv: &MatrixField, chris: &Christoffels) -> ScalarField {
    let grid = f.grid;
    let d = grid.dim();
    let df: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|a| spectral_derivative_r(&grid, &f.data, a))
        .collect();
    let d2f: Vec<Vec<Vec<f64>>> =
        derivative_table(&grid, &df.iter().map(|c| c.as_slice()).collect::<Vec<_>>());
    let mut out = ScalarField::zeros(grid);
    for a in 0..d {
        for b in 0..d {
            let gi = g_inv.get(a, b);
            let hess = &d2f[a][b];
            for (p, o) in out.data.iter_mut().enumerate() {
                *o += gi[p] * hess[p];
            }
            for c in 0..d {
                let ch = chris.get(c, a, b);
                let dc = &df[c];
                for (p, o) in out.data.iter_mut().enumerate() {
                    *o -= gi[p] * ch[p] * dc[p];
                }
            }
        }
    }
    out
}

/// `|∇f|² = g^{ab} ∂_a f ∂_b f`.
pub fn gradient_norm_sq(f: &ScalarField, g_inv: &MatrixField) -> ScalarField {
    gradient_inner(f, f, g_inv)
}

/// `⟨da, db⟩_g` for scalar fields.
pub fn gradient_inner(a: &ScalarField, b: &ScalarField, g_inv: &MatrixField) -> ScalarField {
    let grid = a.grid;
    let d = grid.dim();
    let da: Vec<Vec<f64>> = (0..d)
        .map(|x| spectral_derivative_r(&grid, &a.data, x))
        .collect();
    let db: Vec<Vec<f64>> = (0..d)
        .map(|x| spectral_derivative_r(&grid, &b.data, x))
        .collect();
    let mut out = ScalarField::zeros(grid);
    for x in 0..d {
        for y in 0..d {
            let gi = g_inv.get(x, y);
            for (p, o) in out.data.iter_mut().enumerate() {
                *o += gi[p] * da[x][p] * db[y][p];
            }
        }
    }
    out
}

/// `⟨a, b⟩_g` for 1-form fields.
pub fn one_form_inner(a: &VectorField, b: &VectorField, g_inv: &MatrixField) -> ScalarField {
    let grid = a.grid;
    let d = grid.dim();
    let mut out = ScalarField::zeros(grid);
    for x in 0..d {
        for y in 0..d {
            let gi = g_inv.get(x, y);
            for (p, o) in out.data.iter_mut().enumerate() {
                *o += gi[p] * a.comps[x][p] * b.comps[y][p];
            }
        }
    }
    out
}

/// Action of a complex structure on a 1-form field,
/// `(Iα)_k = -α_m I^m_k`.
pub fn endo_act_one_form(i_field: &MatrixField, a: &VectorField) -> VectorField {
    let grid = a.grid;
    let d = grid.dim();
    let mut out = VectorField::zeros(grid);
    for k in 0..d {
        for m in 0..d {
            let im = i_field.get(m, k);
            for (p, o) in out.comps[k].iter_mut().enumerate() {
                *o -= a.comps[m][p] * im[p];
            }
        }
    }
    out
}

/// Index raise `α♯ = g^{-1} α`.
pub fn sharp(a: &VectorField, g_inv: &MatrixField) -> VectorField {
    let grid = a.grid;
    let d = grid.dim();
    let mut out = VectorField::zeros(grid);
    for i in 0..d {
        for j in 0..d {
            let gi = g_inv.get(i, j);
            for (p, o) in out.comps[i].iter_mut().enumerate() {
                *o += gi[p] * a.comps[j][p];
            }
        }
    }
    out
}

/// Bismut connection coefficients as direction matrices:
/// `(Γ_k)^i_j = Γ^i_{kj} + ½ g^{im} H_{kjm}`.
fn bismut_gamma(g_inv: &MatrixField, chris: &Christoffels, h: &SpinorField) -> Vec<Vec<Vec<f64>>> {
    let grid = chris.grid;
    let d = grid.dim();
    let npts = grid.npts();
    let h_comp = |a: usize, b: usize, c: usize, pt: usize| -> f64 {
        if a == b || b == c || a == c {
            return 0.0;
        }
        let mask = (1 << a) | (1 << b) | (1 << c);
        let mut arr = [a, b, c];
        let mut sign = 1.0;
        for i in 0..2 {
            for j in 0..(2 - i) {
                if arr[j] > arr[j + 1] {
                    arr.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        sign * h.comps[mask][pt].re
    };
    let mut out = vec![vec![vec![0.0; npts]; d * d]; d];
    for (k, mat) in out.iter_mut().enumerate() {
        for i in 0..d {
            for j in 0..d {
                let slot = &mut mat[i * d + j];
                slot.copy_from_slice(chris.get(i, k, j));
                for m in 0..d {
                    let gi = g_inv.get(i, m);
                    for (p, o) in slot.iter_mut().enumerate() {
                        *o += 0.5 * gi[p] * h_comp(k, j, m, p);
                    }
                }
            }
        }
    }
    out
}

/// Bismut Ricci form `ρ_I = ½ tr(I ∘ Ω^I)` of `∇^I = ∇ + ½ g^{-1} H`,
/// returned as a two-form map-matrix field. Checks `(g, I)` Hermitian
/// compatibility on a sample of points.
pub fn bismut_ricci(
    g: &MatrixField,
    h: &SpinorField,
    i_field: &MatrixField,
) -> Result<MatrixField> {
    let grid = g.grid;
    let d = grid.dim();
    let npts = grid.npts();
    {
        let step = (npts / 32).max(1);
        let mut gm = vec![0.0; d * d];
        let mut im = vec![0.0; d * d];
        let mut worst = 0.0f64;
        for pt in (0..npts).step_by(step) {
            g.at(pt, &mut gm);
            i_field.at(pt, &mut im);
            for a in 0..d {
                for b in 0..d {
                    let mut acc = 0.0;
                    for x in 0..d {
                        for y in 0..d {
                            acc += im[x * d + a] * gm[x * d + y] * im[y * d + b];
                        }
                    }
                    worst = worst.max((acc - gm[a * d + b]).abs());
                }
            }
        }
        if worst > 1e-6 * (1.0 + g.sup_norm()) {
            return Err(Error::NotSpd(format!(
                "(g, I) is not Hermitian (residual {worst:.3e})"
            )));
        }
    }
    let chris = christoffels(g)?;
    let g_inv = g.inverse()?;
    let gam = bismut_gamma(&g_inv, &chris, h);
    let mut rho = MatrixField::zeros(grid);
    if i_field.is_constant(0.0) {
        let mut im = vec![0.0; d * d];
        i_field.at(0, &mut im);
        let mut a_fields = vec![vec![0.0; npts]; d];
        for (k, ak) in a_fields.iter_mut().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    let w = im[j * d + i];
                    if w == 0.0 {
                        continue;
                    }
                    let c = &gam[k][i * d + j];
                    for (p, o) in ak.iter_mut().enumerate() {
                        *o += w * c[p];
                    }
                }
            }
        }
        let da =
            derivative_table(&grid, &a_fields.iter().map(|c| c.as_slice()).collect::<Vec<_>>());
        for k in 0..d {
            for l in (k + 1)..d {
                let dka_l = &da[l][k];
                let dla_k = &da[k][l];
                let comp: Vec<f64> = (0..npts)
                    .into_par_iter()
                    .map(|p| {
                        let mut tr = 0.0;
                        for i in 0..d {
                            for j in 0..d {
                                let w = im[j * d + i];
                                if w == 0.0 {
                                    continue;
                                }
                                let mut commutator = 0.0;
                                for m in 0..d {
                                    commutator += gam[k][i * d + m][p] * gam[l][m * d + j][p]
                                        - gam[l][i * d + m][p] * gam[k][m * d + j][p];
                                }
                                tr += w * commutator;
                            }
                        }
                        0.5 * (dka_l[p] - dla_k[p] + tr)
                    })
                    .collect();
                for (p, v) in comp.iter().enumerate() {
                    rho.get_mut(l, k)[p] = *v;
                    rho.get_mut(k, l)[p] = -*v;
                }
            }
        }
    } else {
        for k in 0..d {
            for l in (k + 1)..d {
                let dk_gl: Vec<Vec<f64>> = gam[l]
                    .par_iter()
                    .map(|c| spectral_derivative_r(&grid, c, k))
                    .collect();
                let dl_gk: Vec<Vec<f64>> = gam[k]
                    .par_iter()
                    .map(|c| spectral_derivative_r(&grid, c, l))
                    .collect();
                let mut comp = vec![0.0; npts];
                let mut im = vec![0.0; d * d];
                for (p, o) in comp.iter_mut().enumerate() {
                    i_field.at(p, &mut im);
                    let mut tr = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            let w = im[j * d + i];
                            if w == 0.0 {
                                continue;
                            }
                            let mut r = dk_gl[i * d + j][p] - dl_gk[i * d + j][p];
                            for m in 0..d {
                                r += gam[k][i * d + m][p] * gam[l][m * d + j][p]
                                    - gam[l][i * d + m][p] * gam[k][m * d + j][p];
                            }
                            tr += w * r;
                        }
                    }
                    *o = 0.5 * tr;
                }
                for (p, v) in comp.iter().enumerate() {
                    rho.get_mut(l, k)[p] = *v;
                    rho.get_mut(k, l)[p] = -*v;
                }
            }
        }
    }
    Ok(rho)
}

/// Lee form `θ_I = I d*ω_I`.
pub fn lee_form(g: &MatrixField, i_field: &MatrixField) -> Result<VectorField> {
    let omega = g.mul(i_field);
    let omega_spinor = two_form_to_spinor(&omega);
    let dstar = codifferential(&omega_spinor, g)?;
    let grid = g.grid;
    let d = grid.dim();
    let mut one_form = VectorField::zeros(grid);
    for a in 0..d {
        for (p, o) in one_form.comps[a].iter_mut().enumerate() {
            *o = dstar.comps[1 << a][p].re;
        }
    }
    Ok(endo_act_one_form(i_field, &one_form))
}

/// Intrinsic torsion `H = -d^c_I ω_I` with the derived norms.
pub fn torsion(g: &MatrixField, i_field: &MatrixField) -> Result<TorsionPack> {
    let omega = g.mul(i_field);
    let h = dc_i(&two_form_to_spinor(&omega), i_field)?.scale(C64::new(-1.0, 0.0));
    torsion_from_h(g, h)
}

/// Builds the [`TorsionPack`] norms from a given 3-form `H`.
pub fn torsion_from_h(g: &MatrixField, h: SpinorField) -> Result<TorsionPack> {
    let grid = g.grid;
    let d = grid.dim();
    // |H|² full contraction = 3! × ascending-triple inner product
    let hnorm2 = form_inner_product(&h, &h, g)?.re().scale(6.0);
    let mut hsq = MatrixField::zeros(grid);
    let mut contractions: Vec<SpinorField> = Vec::with_capacity(d);
    for a in 0..d {
        let mut ia = SpinorField::zeros(grid);
        for mask in 0..grid.n_masks() {
            if mask.count_ones() != 3 || mask & (1 << a) == 0 {
                continue;
            }
            let sign = crate::multivector::interior_sign(mask, a) as f64;
            let src = &h.comps[mask];
            let dst = &mut ia.comps[mask & !(1 << a)];
            for (p, o) in dst.iter_mut().enumerate() {
                *o += src[p] * sign;
            }
        }
        contractions.push(ia);
    }
    for a in 0..d {
        for b in a..d {
            let inner = form_inner_product(&contractions[a], &contractions[b], g)?.re();
            *hsq.get_mut(a, b) = inner.data.clone();
            if b != a {
                *hsq.get_mut(b, a) = inner.data;
            }
        }
    }
    Ok(TorsionPack { h, hnorm2, hsq })
}

/// Partial Ricci potentials, `Φ`, `λ`, Mabuchi energies and spinor
/// masses from the two spinor fields and the metric.
pub fn ricci_potentials(
    psi1: &SpinorField,
    psi2: &SpinorField,
    g: &MatrixField,
) -> Result<PotentialPack> {
    let grid = g.grid;
    let sqrt_det = g.det().map(|v| v.sqrt());
    let density = |psi: &SpinorField| -> Result<ScalarField> {
        let dens = psi.mukai_density(&psi.conj());
        let mut out = ScalarField::zeros(grid);
        for (p, o) in out.data.iter_mut().enumerate() {
            let v = dens.data[p];
            if v.re <= 0.0 {
                return Err(Error::PositivityLoss(format!(
                    "spinor density is nonpositive at point {p}: {:.3e}",
                    v.re
                )));
            }
            *o = v.re;
        }
        Ok(out)
    };
    let rho1 = density(psi1)?;
    let rho2 = density(psi2)?;
    let psi1_f = rho1.zip(&sqrt_det, |r, s| -(r / s).ln());
    let psi2_f = rho2.zip(&sqrt_det, |r, s| -(r / s).ln());
    let phi = psi1_f.sub(&psi2_f);
    let mass1 = rho1.integrate();
    let mass2 = rho2.integrate();
    let lambda = (mass2 / mass1).ln();
    let m1 = phi.zip(&rho1, |a, b| a * b).integrate();
    let m2 = phi.zip(&rho2, |a, b| a * b).integrate();
    Ok(PotentialPack {
        psi1: psi1_f,
        psi2: psi2_f,
        phi,
        lambda,
        m1,
        m2,
        mass1,
        mass2,
    })
}

/// Weighted scalar curvature `R^{H,φ} = R - 1/12 |H|² + 2Δφ - |∇φ|²`.
pub fn weighted_scalar(
    scalar_r: &ScalarField,
    hnorm2: &ScalarField,
    phi: &ScalarField,
    g_inv: &MatrixField,
    chris: &Christoffels,
) -> ScalarField {
    let lap = laplace_beltrami(phi, g_inv, chris);
    let grad2 = gradient_norm_sq(phi, g_inv);
    let mut out = scalar_r.clone();
    for p in 0..out.data.len() {
        out.data[p] += -hnorm2.data[p] / 12.0 + 2.0 * lap.data[p] - grad2.data[p];
    }
    out
}

/// Chern Laplacian `Δ^{C,I} f = Δf - ⟨df, θ_I⟩`.
pub fn chern_laplacian(
    f: &ScalarField,
    g: &MatrixField,
    i_field: &MatrixField,
    chris: &Christoffels,
) -> Result<ScalarField> {
    let g_inv = g.inverse()?;
    let lap = laplace_beltrami(f, &g_inv, chris);
    let theta = lee_form(g, i_field)?;
    let df = VectorField::grad(f);
    let corr = one_form_inner(&df, &theta, &g_inv);
    Ok(lap.sub(&corr))
}

/// `tr_ω β = ½ tr(ω^{-1} ∘ β)` pointwise for two-form map-matrix
/// fields.
pub fn trace_against(omega: &MatrixField, beta: &MatrixField) -> Result<ScalarField> {
    let w_inv = omega.inverse()?;
    let prod = w_inv.mul(beta);
    let d = prod.dim();
    let mut out = ScalarField::zeros(prod.grid);
    for i in 0..d {
        let c = prod.get(i, i);
        for (p, o) in out.data.iter_mut().enumerate() {
            *o += 0.5 * c[p];
        }
    }
    Ok(out)
}

/// Chern-Ricci form `ρ^{C,I} = -¼ d I d log det g` (degree-2 spinor).
pub fn chern_ricci(g: &MatrixField, i_field: &MatrixField) -> Result<SpinorField> {
    let logdet = g.det().map(|v| v.ln());
    Ok(d_i_d(&logdet, i_field).scale(C64::new(-0.25, 0.0)))
}

/// `d(I d f)` as a degree-2 spinor field.
pub fn d_i_d(f: &ScalarField, i_field: &MatrixField) -> SpinorField {
    let df = VectorField::grad(f);
    endo_act_one_form(i_field, &df).to_spinor().exterior_d()
}

/// One identity's numerical residual.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityResidual {
    pub identity: String,
    pub sup_norm: f64,
    pub l2_norm: f64,
}

fn record_spinor(name: &str, s: &SpinorField) -> IdentityResidual {
    IdentityResidual {
        identity: name.into(),
        sup_norm: s.sup_norm(),
        l2_norm: s.l2_norm(),
    }
}

fn record_vector(name: &str, v: &VectorField) -> IdentityResidual {
    let mut l2 = 0.0;
    for c in &v.comps {
        l2 += c.iter().map(|x| x * x).sum::<f64>();
    }
    let w = v.grid.spacing().powi(v.grid.dim() as i32);
    IdentityResidual {
        identity: name.into(),
        sup_norm: v.sup_norm(),
        l2_norm: (l2 * w).sqrt(),
    }
}

fn record_scalar(name: &str, s: &ScalarField) -> IdentityResidual {
    let l2 = (s.data.iter().map(|x| x * x).sum::<f64>()
        * s.grid.spacing().powi(s.grid.dim() as i32))
    .sqrt();
    IdentityResidual {
        identity: name.into(),
        sup_norm: s.sup_abs(),
        l2_norm: l2,
    }
}

/// Evaluates the transgression and trace identities on a generalized
/// Kähler field configuration with global spinors, reporting the
/// left-minus-right residual of each.
pub fn transgression_residuals(
    g: &MatrixField,
    b: &MatrixField,
    i_field: &MatrixField,
    j_field: &MatrixField,
    psi1: &SpinorField,
    psi2: &SpinorField,
) -> Result<Vec<IdentityResidual>> {
    let grid = g.grid;
    let g_inv = g.inverse()?;
    let mut records = Vec::new();

    // torsion two ways, and against db
    let omega_i = g.mul(i_field);
    let omega_j = g.mul(j_field);
    let h_i = dc_i(&two_form_to_spinor(&omega_i), i_field)?.scale(C64::new(-1.0, 0.0));
    let h_j = dc_i(&two_form_to_spinor(&omega_j), j_field)?;
    records.push(record_spinor("torsion_compat", &h_i.sub(&h_j)));
    let b_spinor = two_form_to_spinor(b);
    records.push(record_spinor("torsion_db", &h_i.sub(&b_spinor.exterior_d())));
    records.push(record_spinor("spinor_closed_1", &psi1.exterior_d()));
    records.push(record_spinor("spinor_closed_2", &psi2.exterior_d()));
    let tors = torsion_from_h(g, h_i.clone())?;

    let pots = ricci_potentials(psi1, psi2, g)?;
    let theta_i = lee_form(g, i_field)?;
    let theta_j = lee_form(g, j_field)?;
    let d_psi1 = VectorField::grad(&pots.psi1);
    let d_psi2 = VectorField::grad(&pots.psi2);
    let d_phi = VectorField::grad(&pots.phi);

    // (I-J) dΨ₁ = Iθ_I - Jθ_J and (I+J) dΨ₂ = Iθ_I + Jθ_J
    let imj = i_field.sub(j_field);
    let ipj = i_field.add(j_field);
    let lhs1 = endo_act_one_form(&imj, &d_psi1);
    let i_ti = endo_act_one_form(i_field, &theta_i);
    let j_tj = endo_act_one_form(j_field, &theta_j);
    records.push(record_vector("psi_leeform_1", &lhs1.sub(&i_ti.sub(&j_tj))));
    let lhs2 = endo_act_one_form(&ipj, &d_psi2);
    records.push(record_vector("psi_leeform_2", &lhs2.sub(&i_ti.add(&j_tj))));

    // σ dΦ = θ_I♯ - θ_J♯ (never inverting σ)
    let sigma = g_inv
        .mul(&i_field.mul(j_field).sub(&j_field.mul(i_field)))
        .scale(0.5);
    let d = grid.dim();
    let mut sigma_dphi = VectorField::zeros(grid);
    for a in 0..d {
        for bidx in 0..d {
            let s = sigma.get(a, bidx);
            for (p, o) in sigma_dphi.comps[a].iter_mut().enumerate() {
                *o += s[p] * d_phi.comps[bidx][p];
            }
        }
    }
    let sharp_diff = sharp(&theta_i, &g_inv).sub(&sharp(&theta_j, &g_inv));
    records.push(record_vector("phi_poisson", &sigma_dphi.sub(&sharp_diff)));

    // ρ_I = -½ d J dΦ, ρ_J = -½ d I dΦ
    let rho_i = bismut_ricci(g, &tors.h, i_field)?;
    let rho_j = bismut_ricci(g, &tors.h.scale(C64::new(-1.0, 0.0)), j_field)?;
    let rho_i_spinor = two_form_to_spinor(&rho_i);
    let rho_j_spinor = two_form_to_spinor(&rho_j);
    let djdphi = d_i_d(&pots.phi, j_field);
    let didphi = d_i_d(&pots.phi, i_field);
    records.push(record_spinor(
        "phi_bismut_i",
        &rho_i_spinor.add(&djdphi.scale(C64::new(0.5, 0.0))),
    ));
    records.push(record_spinor(
        "phi_bismut_j",
        &rho_j_spinor.add(&didphi.scale(C64::new(0.5, 0.0))),
    ));
    records.push(record_spinor("rho_i_closed", &rho_i_spinor.exterior_d()));

    // tr_{ω_I} ρ_J - tr_{ω_J} ρ_J = Δ^{C,J} Ψ₂ + ⅙|H|²
    let chris = christoffels(g)?;
    let tr_diff = trace_against(&omega_i, &rho_j)?.sub(&trace_against(&omega_j, &rho_j)?);
    let rhs = chern_laplacian(&pots.psi2, g, j_field, &chris)?.add(&tors.hnorm2.scale(1.0 / 6.0));
    records.push(record_scalar("trace_bismut_diff", &tr_diff.sub(&rhs)));

    // ρ^{C,I} = ρ_I + d(Iθ_I) and Chern flatness of e^{-Ψ₁-Ψ₂} dV_g
    let rho_c = chern_ricci(g, i_field)?;
    let d_itheta = i_ti.to_spinor().exterior_d();
    records.push(record_spinor(
        "chern_ricci_lee",
        &rho_c.sub(&rho_i_spinor.add(&d_itheta)),
    ));
    let psi_sum = pots.psi1.add(&pots.psi2);
    let canonical = rho_c.add(&d_i_d(&psi_sum, i_field).scale(C64::new(0.5, 0.0)));
    records.push(record_spinor("canonical_flat", &canonical));

    // R - 1/12 |H|² = -Δ(Ψ₁+Ψ₂) + ⟨dΨ₁, dΨ₂⟩
    let curv = levi_civita_curvature(g, false)?;
    let lhs = curv.scalar.zip(&tors.hnorm2, |r, h| r - h / 12.0);
    let rhs = laplace_beltrami(&psi_sum, &g_inv, &chris)
        .scale(-1.0)
        .add(&gradient_inner(&pots.psi1, &pots.psi2, &g_inv));
    records.push(record_scalar("scalar_spinors", &lhs.sub(&rhs)));

    // R^{H,Ψ₁} + R^{H,Ψ₂} = -|dΦ|²
    let r1 = weighted_scalar(&curv.scalar, &tors.hnorm2, &pots.psi1, &g_inv, &chris);
    let r2 = weighted_scalar(&curv.scalar, &tors.hnorm2, &pots.psi2, &g_inv, &chris);
    let dphi2 = gradient_norm_sq(&pots.phi, &g_inv);
    records.push(record_scalar(
        "weighted_scalar_sum",
        &r1.add(&r2).add(&dphi2),
    ));

    // ⅙|H|² = d*θ_J + |θ_J|²
    let theta_j_spinor = theta_j.to_spinor();
    let dstar_theta = codifferential(&theta_j_spinor, g)?;
    let mut dstar_scalar = ScalarField::zeros(grid);
    for (p, o) in dstar_scalar.data.iter_mut().enumerate() {
        *o = dstar_theta.comps[0][p].re;
    }
    let tj2 = one_form_inner(&theta_j, &theta_j, &g_inv);
    records.push(record_scalar(
        "lee_h_identity",
        &tors.hnorm2.scale(1.0 / 6.0).sub(&dstar_scalar.add(&tj2)),
    ));

    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcs::standard_complex_structure;
    use crate::torus_fields::TrigPoly;
    use rand::SeedableRng as _;

    fn conformal_metric(grid: TorusGrid, u: &ScalarField) -> MatrixField {
        let mut g = MatrixField::identity(grid);
        let d = grid.dim();
        for i in 0..d {
            for (p, o) in g.get_mut(i, i).iter_mut().enumerate() {
                *o = (2.0 * u.data[p]).exp();
            }
        }
        g
    }

    #[test]
    fn flat_metric_is_flat() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let g = MatrixField::identity(grid);
        let curv = levi_civita_curvature(&g, true).unwrap();
        assert!(curv.scalar.sup_abs() < 1e-12);
        assert!(curv.ricci.sup_norm() < 1e-12);
        let max_riemann = curv
            .riemann
            .unwrap()
            .iter()
            .flat_map(|c| c.iter().map(|v| v.abs()))
            .fold(0.0f64, f64::max);
        assert!(max_riemann < 1e-12);
    }

    #[test]
    fn conformal_scalar_curvature_closed_form() {
        // R(e^{2u} δ) = -2 e^{-2u} Δ₀ u on T², u = 0.1 sin x
        let grid = TorusGrid::new(1, 16).unwrap();
        let u = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin());
        let g = conformal_metric(grid, &u);
        let curv = levi_civita_curvature(&g, false).unwrap();
        let lap0 = u.derivative(0).derivative(0).add(&u.derivative(1).derivative(1));
        let expect = lap0.zip(&u, |l, uu| -2.0 * (-2.0 * uu).exp() * l);
        let resid = curv.scalar.sub(&expect).sup_abs();
        assert!(resid < 1e-10, "residual {resid:.3e}");
    }

    #[test]
    fn conformal_curvature_refines_spectrally() {
        let residual = |n: usize| {
            let grid = TorusGrid::new(1, n).unwrap();
            let u = ScalarField::from_fn(grid, |x| 0.25 * (x[0].sin() + x[1].cos()).exp());
            let g = conformal_metric(grid, &u);
            let curv = levi_civita_curvature(&g, false).unwrap();
            let lap0 = u.derivative(0).derivative(0).add(&u.derivative(1).derivative(1));
            let expect = lap0.zip(&u, |l, uu| -2.0 * (-2.0 * uu).exp() * l);
            curv.scalar.sub(&expect).sup_abs()
        };
        let e8 = residual(8);
        let e16 = residual(16);
        assert!(
            e8 / e16.max(1e-15) > 10.0,
            "spectral refinement e8={e8:.3e} e16={e16:.3e}"
        );
    }

    #[test]
    fn riemann_symmetries_and_bianchi() {
        let grid = TorusGrid::new(1, 12).unwrap();
        let u = ScalarField::from_fn(grid, |x| 0.15 * x[0].sin() * x[1].cos());
        let g = conformal_metric(grid, &u);
        let curv = levi_civita_curvature(&g, true).unwrap();
        let r = curv.riemann.as_ref().unwrap();
        let d = grid.dim();
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * d + j) * d + k) * d + l;
        let mut worst_asym = 0.0f64;
        let mut worst_bianchi = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        for pt in (0..grid.npts()).step_by(7) {
                            let a = r[idx(i, j, k, l)][pt];
                            let bb = r[idx(i, j, l, k)][pt];
                            worst_asym = worst_asym.max((a + bb).abs());
                            let first = a + r[idx(i, k, l, j)][pt] + r[idx(i, l, j, k)][pt];
                            worst_bianchi = worst_bianchi.max(first.abs());
                        }
                    }
                }
            }
        }
        assert!(worst_asym < 1e-9, "antisymmetry {worst_asym:.3e}");
        assert!(worst_bianchi < 1e-9, "first Bianchi {worst_bianchi:.3e}");
    }

    #[test]
    fn laplace_beltrami_flat_mode() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let g = MatrixField::identity(grid);
        let chris = christoffels(&g).unwrap();
        let g_inv = g.inverse().unwrap();
        let f = ScalarField::from_fn(grid, |x| (2.0 * x[0]).sin());
        let lap = laplace_beltrami(&f, &g_inv, &chris);
        let expect = f.scale(-4.0);
        assert!(lap.sub(&expect).sup_abs() < 1e-10);
    }

    #[test]
    fn bismut_equals_riemannian_ricci_form_on_kahler() {
        // conformal T² is Kähler (H = 0): ρ_I = Rc(I·,·), and the
        // classical transgression ρ^{C} = -¼ d I d log det g coincides
        let grid = TorusGrid::new(1, 16).unwrap();
        let u = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin() + 0.07 * x[1].cos());
        let g = conformal_metric(grid, &u);
        let i_field = MatrixField::constant(grid, &standard_complex_structure(1));
        let tors = torsion(&g, &i_field).unwrap();
        assert!(tors.h.sup_norm() < 1e-10, "T² conformal data has H = 0");
        let rho = bismut_ricci(&g, &tors.h, &i_field).unwrap();
        let curv = levi_civita_curvature(&g, false).unwrap();
        let d = grid.dim();
        let mut expected = MatrixField::zeros(grid);
        for k in 0..d {
            for l in 0..d {
                let mut acc = vec![0.0; grid.npts()];
                for m in 0..d {
                    let im = i_field.get(m, k);
                    let rc = curv.ricci.get(m, l);
                    for (p, o) in acc.iter_mut().enumerate() {
                        *o += im[p] * rc[p];
                    }
                }
                // ρ(e_k, e_l) = Rc(Ie_k, e_l) sits at map[(l, k)]
                for (p, v) in acc.iter().enumerate() {
                    expected.get_mut(l, k)[p] = *v;
                }
            }
        }
        let resid = rho.sub(&expected).sup_norm();
        assert!(resid < 1e-9, "Bismut vs Ricci form {resid:.3e}");
        let rho_c = chern_ricci(&g, &i_field).unwrap();
        let resid2 = two_form_to_spinor(&rho).sub(&rho_c).sup_norm();
        assert!(resid2 < 1e-9, "transgression residual {resid2:.3e}");
    }

    #[test]
    fn bismut_general_path_matches_fast_path() {
        let grid = TorusGrid::new(1, 12).unwrap();
        let u = ScalarField::from_fn(grid, |x| 0.1 * (x[0] + x[1]).sin());
        let g = conformal_metric(grid, &u);
        let i_const = MatrixField::constant(grid, &standard_complex_structure(1));
        let tors = torsion(&g, &i_const).unwrap();
        let fast = bismut_ricci(&g, &tors.h, &i_const).unwrap();
        // defeat the constancy detection with a 1-ulp wiggle at one point
        let mut i_var = i_const.clone();
        let bits = i_var.get(0, 0)[0].to_bits();
        i_var.get_mut(0, 0)[0] = f64::from_bits(bits ^ 1);
        let slow = bismut_ricci(&g, &tors.h, &i_var).unwrap();
        assert!(fast.sub(&slow).sup_norm() < 1e-7);
    }

    #[test]
    fn lee_form_kahler_and_conformal() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let g = MatrixField::identity(grid);
        let i_field = MatrixField::constant(grid, &standard_complex_structure(2));
        let theta = lee_form(&g, &i_field).unwrap();
        assert!(theta.sup_norm() < 1e-11);
        // conformally Kähler e^{2u} g_flat on T⁴: θ_I = 2 du
        let u = ScalarField::from_fn(grid, |x| 0.1 * x[0].sin() + 0.05 * (x[2] + x[3]).cos());
        let gc = conformal_metric(grid, &u);
        let theta_c = lee_form(&gc, &i_field).unwrap();
        let du = VectorField::grad(&u);
        let resid = theta_c.sub(&du.scale(2.0)).sup_norm();
        assert!(resid < 1e-9, "conformal Lee form residual {resid:.3e}");
    }

    #[test]
    fn kahler_torsion_vanishes() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let g = MatrixField::identity(grid);
        let i_field = MatrixField::constant(grid, &standard_complex_structure(2));
        let tors = torsion(&g, &i_field).unwrap();
        assert!(tors.h.sup_norm() < 1e-12);
        assert!(tors.hnorm2.min() >= 0.0);
    }

    #[test]
    fn hsq_positive_semidefinite() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let g = MatrixField::identity(grid);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let mut b = MatrixField::zeros(grid);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let p = TrigPoly::random(4, 1, 0.3, &mut rng);
                for pt in 0..grid.npts() {
                    let v = p.eval(&grid.coords(pt));
                    b.get_mut(i, j)[pt] = v;
                    b.get_mut(j, i)[pt] = -v;
                }
            }
        }
        let h = two_form_to_spinor(&b).exterior_d();
        let tors = torsion_from_h(&g, h).unwrap();
        assert!(tors.hnorm2.min() >= -1e-12);
        assert!(tors.hsq.min_leading_minor() > -1e-10);
    }

    #[test]
    fn flat_cy_potentials_vanish() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let g = MatrixField::identity(grid);
        let n = 2;
        let mut theta_bar = crate::multivector::FormElement::one(n);
        for k in 0..n {
            let mut dzbar = crate::multivector::FormElement::zero(n);
            *dzbar.coeff_mut(1 << (2 * k)) = C64::new(1.0, 0.0);
            *dzbar.coeff_mut(1 << (2 * k + 1)) = C64::new(0.0, -1.0);
            theta_bar = theta_bar.wedge(&dzbar);
        }
        let mut omega = crate::multivector::RealTwoForm::zero(n);
        for k in 0..n {
            omega.set(2 * k, 2 * k + 1, 1.0);
        }
        let ei_omega =
            crate::multivector::exp_two_form(&omega.to_form().scale(C64::new(0.0, 1.0)));
        let psi1 = SpinorField::constant(grid, &theta_bar);
        let psi2 = SpinorField::constant(grid, &ei_omega);
        let pots = ricci_potentials(&psi1, &psi2, &g).unwrap();
        assert!(pots.phi.sup_abs() < 1e-13);
        assert!(pots.lambda.abs() < 1e-13);
        assert!(pots.m1.abs() < 1e-10 && pots.m2.abs() < 1e-10);
    }

    #[test]
    fn nondegenerate_potential_closed_form() {
        // on a constant nondegenerate point, Ψ₁ - ½ log det(I-J) and
        // Ψ₂ - ½ log det(I+J) are constants
        let d = crate::gcs::flat_hyperkahler_point();
        let forms = crate::gcs::nondeg_extract(&d).unwrap();
        let grid = TorusGrid::new(2, 8).unwrap();
        let g = MatrixField::identity(grid);
        let psi1 = SpinorField::constant(grid, &forms.psi1);
        let psi2 = SpinorField::constant(grid, &forms.psi2);
        let pots = ricci_potentials(&psi1, &psi2, &g).unwrap();
        let det_imj = (&d.i_mat - &d.j_mat).determinant();
        let det_ipj = (&d.i_mat + &d.j_mat).determinant();
        // both should hold up to the same additive constant pattern
        let c1 = pots.psi1.mean() - 0.5 * det_imj.ln();
        let c2 = pots.psi2.mean() - 0.5 * det_ipj.ln();
        assert!(pots.psi1.sub(&ScalarField::constant(grid, pots.psi1.mean())).sup_abs() < 1e-12);
        assert!(pots.psi2.sub(&ScalarField::constant(grid, pots.psi2.mean())).sup_abs() < 1e-12);
        // Φ = ½ log det(I-J)/det(I+J) + const; on the hyperkähler point
        // both dets are 4, so Φ = c1 - c2 exactly
        assert!((pots.phi.mean() - (c1 - c2)).abs() < 1e-12);
    }

    #[test]
    fn jensen_bounds_on_random_densities() {
        // M₁ ≤ λ∫e^{-Ψ₁} dV and M₂ ≥ λ∫e^{-Ψ₂} dV follow from the
        // definitions; exercise on pointwise-rescaled flat spinors
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let grid = TorusGrid::new(1, 16).unwrap();
        let g = MatrixField::identity(grid);
        for _ in 0..5 {
            let u1 = TrigPoly::random(2, 2, 0.4, &mut rng);
            let u2 = TrigPoly::random(2, 2, 0.4, &mut rng);
            let mut psi1 = SpinorField::zeros(grid);
            let mut psi2 = SpinorField::zeros(grid);
            for pt in 0..grid.npts() {
                let x = grid.coords(pt);
                let s1 = (0.5 * u1.eval(&x)).exp();
                let s2 = (0.5 * u2.eval(&x)).exp();
                psi1.comps[0b01][pt] = C64::new(s1, 0.0);
                psi1.comps[0b10][pt] = C64::new(0.0, -s1);
                psi2.comps[0][pt] = C64::new(s2, 0.0);
                psi2.comps[0b11][pt] = C64::new(0.0, s2 * s2);
            }
            let pots = ricci_potentials(&psi1, &psi2, &g).unwrap();
            let e1 = pots.psi1.map(|v| (-v).exp()).integrate();
            let e2 = pots.psi2.map(|v| (-v).exp()).integrate();
            assert!(pots.m1 <= pots.lambda * e1 + 1e-10);
            assert!(pots.m2 >= pots.lambda * e2 - 1e-10);
        }
    }

    #[test]
    fn weighted_scalar_flat_vanishes() {
        let grid = TorusGrid::new(1, 8).unwrap();
        let g = MatrixField::identity(grid);
        let i_field = MatrixField::constant(grid, &standard_complex_structure(1));
        let curv = levi_civita_curvature(&g, false).unwrap();
        let tors = torsion(&g, &i_field).unwrap();
        let phi = ScalarField::zeros(grid);
        let g_inv = g.inverse().unwrap();
        let r = weighted_scalar(&curv.scalar, &tors.hnorm2, &phi, &g_inv, &curv.christoffels);
        assert!(r.sup_abs() < 1e-12);
    }

    #[test]
    fn chern_laplacian_kahler_and_constant() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let g = MatrixField::identity(grid);
        let i_field = MatrixField::constant(grid, &standard_complex_structure(1));
        let chris = christoffels(&g).unwrap();
        let f = ScalarField::from_fn(grid, |x| x[0].cos() * x[1].sin());
        let lap_c = chern_laplacian(&f, &g, &i_field, &chris).unwrap();
        let g_inv = g.inverse().unwrap();
        let lap = laplace_beltrami(&f, &g_inv, &chris);
        assert!(lap_c.sub(&lap).sup_abs() < 1e-10);
        let c = ScalarField::constant(grid, 4.2);
        assert!(chern_laplacian(&c, &g, &i_field, &chris).unwrap().sup_abs() < 1e-12);
    }

    #[test]
    fn chern_laplacian_divergence_form() {
        // ∫ Δf dV_g = 0 on the closed torus, so
        // ∫ Δ^{C,I} f dV_g = -∫ ⟨df, θ_I⟩ dV_g
        let grid = TorusGrid::new(1, 16).unwrap();
        let u = ScalarField::from_fn(grid, |x| 0.2 * x[0].sin() * x[1].sin());
        let g = conformal_metric(grid, &u);
        let i_field = MatrixField::constant(grid, &standard_complex_structure(1));
        let chris = christoffels(&g).unwrap();
        let g_inv = g.inverse().unwrap();
        let f = ScalarField::from_fn(grid, |x| (x[0] + x[1]).cos());
        let dv = g.det().map(|v| v.sqrt());
        let lap_c = chern_laplacian(&f, &g, &i_field, &chris).unwrap();
        let theta = lee_form(&g, &i_field).unwrap();
        let df = VectorField::grad(&f);
        let corr = one_form_inner(&df, &theta, &g_inv);
        let lhs = lap_c.zip(&dv, |a, w| a * w).integrate();
        let rhs = -corr.zip(&dv, |a, w| a * w).integrate();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }
}
