//! Symbolic engine for the spectral (0,4)-tensor functionals of a Dirac
//! operator on an even-dimensional spin manifold.
//!
//! The pipeline re-derives, in exact arithmetic, the two noncommutative-residue
//! functionals
//!
//! ```text
//!   P(u1,u2,u3,u4) = Wres( c(u1)c(u2)c(u3)c(u4) D^{-2m+2} )
//!   Q(u1,u2,u3,u4) = Wres( c(u1)c(u2) D c(u3)c(u4) D^{-2m+1} )
//! ```
//!
//! as curvature-weighted combinations of `g(u_i,u_j)` and `Ric(u_i,u_j)`:
//! Clifford words are traced by pairing expansion, curvature monomials are
//! canonicalized under the full Riemann symmetry group, cosphere integrals are
//! taken with exact moment formulas, and pseudo-differential symbols are
//! composed in normal coordinates. Every intermediate is checkpointed against
//! a transcribed reference table, and an independent gamma-matrix oracle
//! cross-checks both the trace algebra and the assembled densities.
//!
//! Module map:
//! - [`coefficients`]: rational functions of the half dimension `m`, with a
//!   tracked power of the imaginary unit.
//! - [`tensor`]: indexed curvature monomials, canonicalization, projection
//!   onto the 11-element invariant basis.
//! - [`clifford`]: Clifford word algebra and the normalized trace.
//! - [`sphere`]: exact unit-sphere moments of `xi` monomials.
//! - [`symbols`]: symbol models of the operators involved, derivatives, and
//!   the composition formula.
//! - [`functionals`]: per-item assembly, checkpoints, final results.
//! - [`oracle`]: numeric gamma-matrix and random-curvature cross-checks.
//! - [`cli`]: command-line front end.

pub mod cli;
pub mod clifford;
pub mod coefficients;
pub mod functionals;
pub mod oracle;
pub mod sphere;
pub mod symbols;
pub mod tensor;
