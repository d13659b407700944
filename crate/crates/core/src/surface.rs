//! The hyperelliptic curve attached to a band system on the k-line.
//!
//! Under the Joukowski map the gaps of the circle picture become l + 1
//! real cuts inside [-1, 1], the last one ending at k = 1, and the square
//! root of the branch polynomial turns into [`KRadical`]. This module
//! builds the normalized holomorphic differentials from the a-cycle
//! moment matrix, the b-period matrix tau as sums of gap integrals, the
//! Abel map from the base point k = 1, and the image of infinity on the
//! upper sheet. Everything downstream that evaluates theta functions
//! feeds on the [`Surface`] assembled here.
//!
//! Conventions: a-cycle `l` (1-based) encircles cut `genus - l`
//! counterclockwise, so `a_1` wraps the cut next to the reference cut at
//! k = 1 and `a_genus` wraps the leftmost cut at k = -1. Collapsing the
//! loop onto the cut gives the period as `+2` times the plus-boundary
//! integral. With the spectral data on the unit circle all a-periods are
//! purely imaginary and tau comes out purely imaginary with positive
//! definite imaginary part.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::c64;
use crate::quad::{integrate, integrate_endpoint_singular, QuadError, Singularity};
use crate::radicals::{KRadical, Side};
use crate::special::{RiemannTheta, ThetaError};
use crate::spectrum::BandSystem;

/// Tolerance handed to the period and Abel quadratures.
const QTOL: f64 = 1e-11;

/// Cut or gap width below which the curve is treated as degenerate; the
/// caller should drop to the lower-genus surface instead.
const COLLAPSE_TOL: f64 = 1e-8;

/// Height of the detour used by Abel paths to clear the cuts.
const PATH_HEIGHT: f64 = 0.8;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("cut or gap of width {width:.3e} collapses the curve")]
    DegenerateSurface { width: f64 },
    #[error("a-period matrix is singular")]
    SingularPeriods,
    #[error("b-period matrix asymmetric by {dev:.3e}")]
    AsymmetricPeriods { dev: f64 },
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// The curve `y^2 = prod (k - branch points)` with its normalized
/// differentials, period matrix, theta function and Abel map.
#[derive(Debug, Clone)]
pub struct Surface {
    pub rad: KRadical,
    /// b-period matrix, symmetrized; purely imaginary for circle data.
    pub tau: DMatrix<Complex64>,
    pub theta: RiemannTheta,
    /// Abel image of the point at infinity on the upper sheet.
    pub j_inf: Vec<Complex64>,
    /// Row `j` holds ascending coefficients of the numerator polynomial
    /// of `omega_{j+1} = poly(k) / R(k) dk`.
    coeffs: Vec<Vec<Complex64>>,
    genus: usize,
}

impl Surface {
    pub fn new(bands: &BandSystem) -> Result<Surface, SurfaceError> {
        let rad = KRadical::new(bands);
        let genus = rad.genus();
        let cuts = rad.cuts().to_vec();
        let mut narrowest = f64::INFINITY;
        for &(p, q) in &cuts {
            narrowest = narrowest.min(q - p);
        }
        for w in cuts.windows(2) {
            narrowest = narrowest.min(w[1].0 - w[0].1);
        }
        if narrowest < COLLAPSE_TOL {
            return Err(SurfaceError::DegenerateSurface { width: narrowest });
        }

        // a-periods of the raw monomial differentials k^{j-1} / R
        let mut a = DMatrix::<Complex64>::zeros(genus, genus);
        for l in 1..=genus {
            let (p, q) = cuts[genus - l];
            for j in 1..=genus {
                let r = integrate_endpoint_singular(
                    |x, _, _| c64(x, 0.0).powu(j as u32 - 1) / rad.eval_side(x, Side::Plus),
                    p,
                    q,
                    Singularity::InverseSqrtBoth,
                    QTOL,
                )?;
                a[(l - 1, j - 1)] = 2.0 * r.value;
            }
        }
        let inv = a.try_inverse().ok_or(SurfaceError::SingularPeriods)?;
        // omega_j = sum_i inv[i-1, j-1] k^{i-1} / R normalizes the
        // a-periods to the identity
        let coeffs: Vec<Vec<Complex64>> =
            (0..genus).map(|j| (0..genus).map(|i| inv[(i, j)]).collect()).collect();
        let omega_gap = |j: usize, x: f64| {
            let poly = coeffs[j - 1]
                .iter()
                .rev()
                .fold(Complex64::default(), |acc, &c| acc * x + c);
            poly / rad.eval(c64(x, 0.0))
        };

        // b_l runs through the real gaps separating cut genus - l from
        // the reference cut, where R is regular; each leg is singular at
        // both ends
        let mut tau = DMatrix::<Complex64>::zeros(genus, genus);
        for l in 1..=genus {
            for j in 1..=genus {
                let mut s = Complex64::default();
                for g in genus - l..genus {
                    let (ga, gb) = (cuts[g].1, cuts[g + 1].0);
                    let r = integrate_endpoint_singular(
                        |x, _, _| omega_gap(j, x),
                        ga,
                        gb,
                        Singularity::InverseSqrtBoth,
                        QTOL,
                    )?;
                    s += r.value;
                }
                tau[(l - 1, j - 1)] = 2.0 * s;
            }
        }
        let dev = (&tau - tau.transpose()).camax();
        if dev > 1e-9 {
            return Err(SurfaceError::AsymmetricPeriods { dev });
        }
        let tau = (&tau + tau.transpose()).map(|v| 0.5 * v);
        let theta = RiemannTheta::new(tau.clone())?;

        let mut surface = Surface { rad, tau, theta, j_inf: Vec::new(), coeffs, genus };
        surface.j_inf = surface.abel_infty()?;
        Ok(surface)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Normalized holomorphic differential `omega_j`, `j = 1..=genus`,
    /// as a function value (the dk is implicit).
    pub fn omega(&self, j: usize, k: Complex64) -> Complex64 {
        self.numer(j, k) / self.rad.eval(k)
    }

    /// Boundary value of `omega_j` on a cut from the given side.
    pub fn omega_side(&self, j: usize, x: f64, side: Side) -> Complex64 {
        self.numer(j, c64(x, 0.0)) / self.rad.eval_side(x, side)
    }

    fn numer(&self, j: usize, k: Complex64) -> Complex64 {
        self.coeffs[j - 1]
            .iter()
            .rev()
            .fold(Complex64::default(), |acc, &c| acc * k + c)
    }

    /// Offset of the theta arguments fixed by the curve: `-J(infinity)`.
    pub fn d(&self) -> Vec<Complex64> {
        self.j_inf.iter().map(|v| -v).collect()
    }

    /// Abel map from the base point k = 1, along a path through the half
    /// plane of `k` (upper when `Im k = 0`).
    pub fn abel(&self, k: Complex64) -> Result<Vec<Complex64>, SurfaceError> {
        if k.im == 0.0 && k.re > 1.0 {
            return self.abel_real_right(k.re);
        }
        let side = if k.im >= 0.0 { 1.0 } else { -1.0 };
        self.abel_via(side, k)
    }

    /// Boundary value of the Abel map at real `x` on a cut.
    pub fn abel_side(&self, x: f64, side: Side) -> Result<Vec<Complex64>, SurfaceError> {
        let s = match side {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        };
        self.abel_via(s, c64(x, 0.0))
    }

    /// Legs 1 -> 1 + iHs -> (Re k) + iHs -> k with s = +-1. The first
    /// leg leaves the branch point at the base; the remaining legs stay
    /// clear of the cuts except possibly at the final point, which is
    /// harmless because the quadrature nodes are interior.
    fn abel_via(&self, s: f64, k: Complex64) -> Result<Vec<Complex64>, SurfaceError> {
        let h = PATH_HEIGHT * s;
        let lift = c64(1.0, h);
        let corner = c64(k.re, h);
        (1..=self.genus)
            .map(|j| {
                let first = integrate_endpoint_singular(
                    |t, _, _| self.omega(j, c64(1.0, t * s)) * c64(0.0, s),
                    0.0,
                    PATH_HEIGHT,
                    Singularity::InverseSqrtLeft,
                    QTOL,
                )?;
                let mut v = first.value;
                for (from, to) in [(lift, corner), (corner, k)] {
                    if (to - from).norm() < 1e-15 {
                        continue;
                    }
                    let r = integrate(
                        |t| self.omega(j, from + t * (to - from)) * (to - from),
                        0.0,
                        1.0,
                        QTOL,
                    )?;
                    v += r.value;
                }
                Ok(v)
            })
            .collect()
    }

    /// Abel map for real k > 1: straight along the axis, leaving the
    /// branch point at the base.
    fn abel_real_right(&self, x: f64) -> Result<Vec<Complex64>, SurfaceError> {
        (1..=self.genus)
            .map(|j| {
                let r = integrate_endpoint_singular(
                    |t, _, _| self.omega(j, c64(t, 0.0)),
                    1.0,
                    x,
                    Singularity::InverseSqrtLeft,
                    QTOL,
                )?;
                Ok(r.value)
            })
            .collect()
    }

    /// Abel image of infinity on the upper sheet: along the real axis to
    /// 2, then the inverted tail, which is smooth because all branch
    /// points lie inside [-1, 1].
    fn abel_infty(&self) -> Result<Vec<Complex64>, SurfaceError> {
        (1..=self.genus)
            .map(|j| {
                let head = integrate_endpoint_singular(
                    |t, _, _| self.omega(j, c64(t, 0.0)),
                    1.0,
                    2.0,
                    Singularity::InverseSqrtLeft,
                    QTOL,
                )?;
                let tail = integrate(
                    |u| self.omega(j, c64(1.0 / u, 0.0)) / c64(u * u, 0.0),
                    0.0,
                    0.5,
                    QTOL,
                )?;
                Ok(head.value + tail.value)
            })
            .collect()
    }
}
