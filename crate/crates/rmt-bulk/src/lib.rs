//! Numerics for bulk universality of orthogonal (beta = 1) and symplectic
//! (beta = 4) ensembles with polynomial weights `exp(-V)`.
//!
//! The crate is layered bottom-up:
//!
//! * [`potential`], [`quadrature`] and [`orthopoly`]: multiprecision
//!   Gauss-Legendre panels, the Stieltjes recurrence and an `f64`
//!   evaluator for `phi_j`, `phi_j'` and `eps phi_j`.
//! * [`widom`]: the `D`/`eps` matrices, the Widom blocks, the scalar
//!   kernels `S_{N,1}`, `S_{N/2,4}` and the 2x2 matrix kernels.
//! * [`asymptotics`], [`limits`], [`riccati`], [`appendix`]: the limiting
//!   objects `h`, `theta`, `I(q)`, the `T` matrices with their bound
//!   chains, the Riccati structure of `y_m` and the rigorous ledgers for
//!   `L(s)` and `H(s)`.
//! * [`universality`]: scaled kernel comparisons against the sine-kernel
//!   limits and gap probabilities.

pub mod appendix;
pub mod asymptotics;
pub mod error;
pub mod linalg;
pub mod limits;
pub mod orthopoly;
pub mod potential;
pub mod quadrature;
pub mod riccati;
pub mod sine;
pub mod universality;
pub mod widom;

pub use error::{Error, Result};
pub use orthopoly::{PhiBasis, RecurrenceTable};
pub use potential::Potential;
pub use quadrature::Quadrature;

