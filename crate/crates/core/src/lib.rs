//! Numerical spectral analysis of rank-one off-diagonal perturbations.
//!
//! The crate works with self-adjoint block operators
//!
//! ```text
//!     B = | A0   V  |         A0 = multiplication by mu on L^2(m),
//!         | V*   a1 |         V c = c * v,  dim H1 = 1,
//! ```
//!
//! whose finite materialization is a Hermitian arrowhead matrix. It provides
//!
//! * base measures reduced to weighted atoms ([`measure`]),
//! * the Borel transform of nu = |v|^2 m and the perturbed Herglotz
//!   function with its 2x2 matrix version ([`transform`]),
//! * boundary values F(lambda + i0), the discrete g2 integral and the
//!   minimal-support classification of real spectral points ([`classify`]),
//! * the boundary functional X_lambda with Riccati-equation residuals,
//!   graph-invariance certificates and the gap-perturbation norm bound
//!   ([`riccati`]),
//! * a dense finite-matrix oracle for ground truth ([`oracle`]),
//! * a JSON model-file schema ([`schema`]).
//!
//! Everything is immutable after construction and all operations are pure
//! functions, so concurrent evaluation needs no synchronization.

pub mod classify;
pub mod error;
pub mod measure;
pub mod model;
pub mod oracle;
pub mod riccati;
pub mod schema;
pub mod transform;

pub use error::{Error, Result};
pub use measure::{Atoms, DensitySpec, Measure};
pub use model::{CouplingSpec, SpectralModel};
pub use transform::{borel_transform, m_matrix, phi, MMatrix};
