//! Special functions: complete elliptic integrals, Jacobi theta functions
//! and elliptic dn, and the genus-g Riemann theta function.

pub mod elliptic;
pub mod jacobi;
pub mod rtheta;

pub use elliptic::{ellip_k, ellip_ke};
pub use jacobi::{dn, Jtheta};
pub use rtheta::{RiemannTheta, ThetaError};
