//! Operator layer cake representations of `D log[B](H)` and integral
//! representations of the quantum relative entropy, with closed-form
//! references and a randomized verification harness.
//!
//! Matrices are dense complex Hermitian ([`HermitianMatrix`]); positive
//! definite arguments are validated once into [`PositiveDefinite`], which
//! caches the spectral data the integrands reuse.
//!
//! ```
//! use opcake_core::{frenkel_gamma, umegaki, HermitianMatrix, PositiveDefinite, QuadratureConfig};
//!
//! let a = HermitianMatrix::from_diagonal(&[2.0]);
//! let b = PositiveDefinite::new(HermitianMatrix::from_diagonal(&[1.0])).unwrap();
//! let exact = umegaki(&a, &b).unwrap();
//! let integral = frenkel_gamma(&a, &b, &QuadratureConfig::default()).unwrap();
//! assert!((exact - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-12);
//! assert!((integral.value - exact).abs() < 1e-8);
//! ```

pub mod divergences;
pub mod error;
pub mod frechet;
pub mod layercake;
pub mod matrix;
pub mod quadrature;
pub mod spectral;
pub mod verify;

pub use divergences::{
    frenkel_gamma, frenkel_t, hockey_stick, relative_entropy, umegaki, DivergenceMethod, DivergenceReport,
};
pub use error::{Error, Result};
pub use frechet::{default_step, dlog_daleckii_krein, dlog_finite_difference};
pub use layercake::{layer_cake_positive, layer_cake_two_sided, shift_identity_residual, support_radius};
pub use matrix::HermitianMatrix;
pub use quadrature::{QuadratureConfig, QuadratureResult};
pub use spectral::{eig_hermitian, PositiveDefinite, Projection, SpectralDecomposition};
pub use verify::{run_suite, CheckName, SuiteConfig, VerificationReport};
