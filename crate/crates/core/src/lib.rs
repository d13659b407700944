//! Leading-order description of dark soliton gases for the defocusing
//! nonlinear Schrodinger equation
//!
//! ```text
//!     i q_t + q_xx - 2 (|q|^2 - 1) q = 0,      |q| -> 1 as |x| -> oo.
//! ```
//!
//! A gas is prescribed by `2N` spectral points on the upper unit circle
//! grouped into `N` bands. The crate computes, for any genus:
//!
//! * the Whitham transition velocities separating the space-time regions
//!   and the modulated endpoint `alpha(xi)` inside each shock region,
//! * phase vectors, period matrices and Abel maps of the underlying
//!   hyperelliptic curves,
//! * the leading-order field `q(x,t)` in every region (theta-function form,
//!   with an independent elliptic form at genus 1),
//! * a split-step reference simulation of the PDE for validation.
//!
//! Modules are layered bottom-up: [`spectrum`] (input data), [`quad`] and
//! [`radicals`] (contour integration and branch tracking), [`special`]
//! (theta and elliptic functions), [`surface`] (periods and Abel maps),
//! [`whitham`] (transition points and modulation), [`phases`] (frequency
//! and Szego phases), [`model`] (explicit model problem solutions),
//! [`leading`] (leading-order field) and [`sim`] (PDE reference).

pub mod leading;
pub mod model;
pub mod phases;
pub mod quad;
pub mod radicals;
pub mod sim;
pub mod special;
pub mod spectrum;
pub mod surface;
pub mod whitham;

pub use num_complex::Complex64;

/// Shorthand used throughout for `Complex64::new`.
#[inline]
pub(crate) fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
