//! Exact-arithmetic toolkit for the geometry of norms on `K^n` over a
//! discretely valued field, discrete harmonic maps into NPC targets, and a
//! monodromy/deformation toolbox for representations of finitely presented
//! groups.
//!
//! Everything is computed over `Q` (or an explicit number field) with exact
//! rational arithmetic; magnitudes are carried as base-`q` logarithms, never
//! as floating-point powers.  Floats appear only in reports and in the
//! KMS bookkeeping helpers.
//!
//! The crate is organised as follows:
//!
//! * [`scalars`] — prime places, exact valuations, number-field elements.
//! * [`matrix`] — dense exact linear algebra over any [`scalars::Scalar`].
//! * [`poly`] — univariate rational polynomials, cyclotomics, factorisation.
//! * [`norms`] — diagonalisable norms on `Q^n`, the space of norms with its
//!   `d_2` metric, duals/quotients/wedges, relative spectra, barycenters.
//! * [`harmonic`] — weighted graphs, Dirichlet and equivariant energy
//!   minimisation by deterministic sweeps, characteristic data of states.
//! * [`monodromy`] — quasiunipotence, flat lattices, weight filtrations,
//!   graded nearby cycles, semisimplification, residue bookkeeping.
//! * [`deformation`] — Fox-calculus linearisation, `Z^1`/`H^1`, order-by-order
//!   obstruction lifting.
//!
//! The `parallel` feature (on by default) enables rayon-backed batch helpers
//! and a Jacobi-style parallel sweep; the deterministic Gauss–Seidel solvers
//! are sequential by contract and are used by all golden tests.

pub mod batch;
pub mod deformation;
pub mod error;
pub mod harmonic;
pub mod matrix;
pub mod monodromy;
pub mod norms;
pub mod poly;
pub mod scalars;

pub use error::{Error, Result};
pub use scalars::{LogMag, NumberField, NfElem, PrimePlace, Rat, Scalar, ValuedScalar, Valuation};
