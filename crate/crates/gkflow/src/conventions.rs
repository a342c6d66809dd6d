//! Global sign conventions and tolerances.
//!
//! The literature realizes the same geometry with several inequivalent
//! sign choices. Everything in this crate is pinned to the following
//! set, and the startup self-test [`self_test`] asserts the one
//! combination that ties them together operationally: the torsion
//! compatibility `-d^c_I ω_I = d^c_J ω_J` on an analytic
//! commuting-type example.
//!
//! * Coordinates on `T^{2n}` are ordered `(x_1, y_1, ..., x_n, y_n)`,
//!   each of period `2π`. The standard complex structure sends
//!   `∂x_i ↦ ∂y_i`, `∂y_i ↦ -∂x_i`.
//! * `ω(X, Y) = g(IX, Y)`; flat Kähler form `Σ dx_i ∧ dy_i`.
//! * A complex structure acts on 1-forms by `(Iα)(X) = -α(IX)`, so
//!   `d^c f = I df` and `d^c = i(∂̄ - ∂)` with `d d^c f = 2i ∂∂̄ f`.
//! * Mukai pairing `(φ, ψ) = (2i)^{-n} [φ ∧ s(ψ)]_top`, reported as the
//!   coefficient of `dx^1 ∧ dy^1 ∧ ... ∧ dx^n ∧ dy^n`.
//! * Bismut connection `∇^I = ∇ + ½ g^{-1} H` with `H = -d^c_I ω_I`;
//!   its Ricci form is `ρ_I = ½ tr(I ∘ Ω^I)`, which on Kähler data
//!   equals `Rc(I·,·)`.
//! * `|H|²` denotes the full-index contraction `H_{abc} H^{abc}`
//!   (six times the sum over ascending triples).
//! * Laplacian `Δ` is the trace Hessian (negative spectrum), and
//!   `Δ^{C,I} f = Δ f - ⟨df, θ_I⟩`.

/// Relative singular-value threshold for pointwise null spaces
/// (annihilators, eigenspace extraction). Pointwise problems are
/// dimension ≤ 16 at n ≤ 2 and well conditioned.
pub const NULLSPACE_RTOL: f64 = 1e-10;

/// Relative rank threshold for the bivector block `Q` when computing
/// the type of a generalized complex structure.
pub const TYPE_RANK_RTOL: f64 = 1e-8;

/// Tolerance for the `J² = -Id` and neutral-orthogonality invariants.
pub const GCS_INVARIANT_TOL: f64 = 1e-10;

/// Round-trip tolerance for the Gualtieri map.
pub const GUALTIERI_ROUNDTRIP_TOL: f64 = 1e-10;

/// Default conjugate-gradient relative tolerance for the periodic
/// Hodge decomposition.
pub const CG_RTOL: f64 = 1e-10;

/// Default CFL factor `c` in `dt = c · h²`.
pub const DEFAULT_CFL_FACTOR: f64 = 0.2;

/// Maximum number of dt halvings before a flow step gives up.
pub const MAX_STEP_HALVINGS: usize = 8;

/// Runs the convention self-test: on an analytic commuting-type `T⁴`
/// configuration the two torsion routes must agree,
/// `-d^c_I ω_I = +d^c_J ω_J`. Returns the sup-norm of the mismatch.
///
/// The flow drivers call this once at startup; it is cheap (one `N = 8`
/// grid) and guards against silent sign regressions.
pub fn self_test() -> crate::Result<f64> {
    crate::gkrf::commuting::torsion_compatibility_residual(8)
}
