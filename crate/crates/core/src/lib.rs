//! Spectral geometry of flat complex tori.
//!
//! Exact Laplace spectra of C^n/Λ drive heat traces, zeta-regularized
//! determinants (two independent routes), analytic torsion bookkeeping, a
//! Fourier-spectral Kuranishi solver and the Weil–Petersson pairing, plus a
//! harness that audits identities between them numerically.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

pub mod cache;
pub mod error;
pub mod exterior;
pub mod heat;
pub mod hodge;
pub mod kuranishi;
pub mod lattice;
pub mod moduli;
pub mod quad;
pub mod report;
pub mod special;
pub mod zeta;

pub use error::{Error, Result};
