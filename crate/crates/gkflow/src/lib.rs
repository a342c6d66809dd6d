//! Generalized Kähler geometry engine and generalized Kähler-Ricci flow
//! (GKRF) simulator on flat tori.
//!
//! The crate is organized around the two descriptions of a generalized
//! Kähler structure and the dictionary between them:
//!
//! * [`multivector`] — pointwise complex exterior algebra on `R^{2n}`:
//!   Clifford action of `T ⊕ T*`, Mukai pairing, b-field exponentials,
//!   spinor annihilators and purity tests.
//! * [`gcs`] — generalized complex structures as endomorphisms of
//!   `T ⊕ T*`, types, b-field transforms, generalized Kähler pairs and
//!   the Gualtieri map in both directions.
//! * [`torus_fields`] — periodic grid-sampled fields on flat `T^{2n}`
//!   with spectral differentiation, exterior calculus, Hodge star and
//!   integration: the discretization substrate.
//! * [`geometry`] — connections, Bismut curvature, Lee forms, Ricci
//!   potentials, weighted scalar curvature and the transgression
//!   identity residuals.
//! * [`twisted_hodge`] — the twisted differential `d_H`, the
//!   generalized-metric star, the twisted Laplacian, the `U^{p,q}`
//!   bigrading and a periodic Hodge decomposition.
//! * [`gkrf`] — time integration of the flow at tensor, spinor and
//!   potential level, initial-data constructors and the diagnostic
//!   monitor pipeline.
//!
//! All conventions (coordinate ordering, signs of `d^c`, the Bismut
//! Ricci form, the flow normalization) are fixed in one place; see
//! [`conventions`].

pub mod conventions;
pub mod error;
pub mod gcs;
pub mod geometry;
pub mod gkrf;
pub mod multivector;
pub mod torus_fields;
pub mod twisted_hodge;

pub use error::{Error, Result};
