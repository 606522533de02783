//! Deformation theory on flat tori: Fourier-mode tensor fields, the
//! Dolbeault operators, the bracket of Beltrami differentials, the Picard
//! solution of the Maurer–Cartan equation and the Weil–Petersson pairing.

pub mod bracket;
pub mod field;
pub mod ops;
pub mod picard;
pub mod wp;

pub use bracket::{bracket, bracket_fd_pointwise};
pub use field::{fundamental_grid, TensorField};
pub use ops::{
    dbar, dbar_star, form_laplacian_symbol, green, harmonic, laplacian, mode_eigenvalue, self_adjoint_eigenvalues,
};
pub use picard::{
    picard_solve, picard_solve_with, synthetic_options, synthetic_seed, KuranishiSolution, MultiIndex, PicardOptions,
    SeedCheck,
};
pub use wp::{
    derivation_trace, symmetry_check, wedge_trace_identity, wp_gram, wp_inner, wp_inner_quadrature, DerivationTrace,
    TraceIdentity, WPGram,
};
