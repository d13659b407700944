//! Phase constants of a solved surface: circle periods of the two phase
//! differentials, Szego gap phases with their reflection factor, and the
//! large-`z` constants of the scalar g-function.
//!
//! All contour work happens in the z-plane. Periods come from a three-leg
//! exterior loop (radial leg, arc at a fixed radius clear of the cuts,
//! radial leg back) around each gap; the Szego phases from cosine-moment
//! systems on gaps and bands weighted by `1 / |R|`; the g constants from a
//! regularized ray integral out to a large cutoff closed by the analytic
//! Laurent tail of the differentials.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::c64;
use crate::quad::{
    integrate, integrate_endpoint_singular, integrate_path, QuadError, Seg, Singularity,
};
use crate::spectrum::Reflection;
use crate::whitham::{WhithamError, WhithamState};

/// Default quadrature tolerance for phase work.
const PTOL: f64 = 1e-12;
/// Radius of the free arcs: far enough from the circle that every
/// integrand is smooth, close enough that the radial legs stay short.
pub(crate) const LOOP_RADIUS: f64 = 1.25;
/// Ray cutoff beyond which the Laurent tail is summed analytically.
const RG: f64 = 1e3;
/// Laurent coefficients kept: enough for an `O(z^{-4})` tail truncation
/// at the cutoff and for the interior Taylor series of `g'` near zero.
const NW: usize = 8;

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("period path radius {0} does not clear the unit circle")]
    PathCrossesCut(f64),
    #[error("period integral kept an imaginary residue {0:.3e}")]
    ResidualImaginary(f64),
    #[error("gap moment system is singular")]
    SingularSystem,
    #[error("Laurent tail beyond the ray cutoff estimated at {0:.3e}")]
    TailNotConverged(f64),
    #[error(transparent)]
    Whitham(#[from] WhithamError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Which leading-order regime the constants feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    Modulated,
    Unmodulated,
    LargeSpace,
}

/// Everything the theta-function leading term needs besides the surface
/// itself. `omega = xi * omega1 - omega2` componentwise in the modulated
/// and unmodulated regimes; in the large-space regime the ray carries no
/// velocity and `omega = omega1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseConstants {
    pub mode: PhaseMode,
    pub xi: f64,
    pub omega1: Vec<f64>,
    pub omega2: Vec<f64>,
    pub omega: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_inf: Complex64,
    pub g_inf: Complex64,
    pub g1: f64,
}

/// Assemble the full set of phase constants for one regime.
///
/// `xi` must be the velocity the surface was solved at when the mode is
/// `Modulated`; it is free in the unmodulated regime and unused by the
/// large-space g-function.
pub fn phase_constants(
    st: &WhithamState,
    refl: &Reflection,
    mode: PhaseMode,
    xi: f64,
) -> Result<PhaseConstants, PhaseError> {
    let (omega1, omega2) = omega_periods(st)?;
    let omega = match mode {
        PhaseMode::LargeSpace => omega1.clone(),
        _ => omega1.iter().zip(&omega2).map(|(&o1, &o2)| xi * o1 - o2).collect(),
    };
    let (delta, delta_inf) = szego(st, refl)?;
    let (g_inf, g1) = g_infinity(st, xi, mode)?;
    Ok(PhaseConstants { mode, xi, omega1, omega2, omega, delta, delta_inf, g_inf, g1 })
}

// ---------------------------------------------------------------- periods

/// Circle periods of both differentials: `omega1[k-1]` and `omega2[k-1]`
/// are the jumps of `2 phi^{(1)}` and `2 phi^{(2)}` across gap `k`, real
/// by the Schwarz symmetry of the differentials.
pub fn omega_periods(st: &WhithamState) -> Result<(Vec<f64>, Vec<f64>), PhaseError> {
    omega_periods_at(st, LOOP_RADIUS, PTOL)
}

/// `omega_periods` with explicit loop radius and quadrature tolerance.
///
/// The loop for gap `k` runs from `eta_1` radially out to the arc radius,
/// along the arc to the angle of `eta_{2k}`, and radially back in; both
/// radial legs see an inverse square root at their circle end. Doubling
/// the integral accounts for the mirrored lower half, and the stored signs
/// make `xi * omega1[k] - omega2[k]` the jump of `2 g` across gap `k`.
pub(crate) fn omega_periods_at(
    st: &WhithamState,
    radius: f64,
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>), PhaseError> {
    if radius <= 1.0 {
        return Err(PhaseError::PathCrossesCut(radius));
    }
    let l = st.ell();
    let th1 = st.bands.angles[0];
    let mut omega1 = Vec::with_capacity(l);
    let mut omega2 = Vec::with_capacity(l);
    for k in 1..=l {
        let the = st.bands.angles[2 * k - 1];
        for which in [1u8, 2] {
            let out = ray_leg(st, which, th1, radius, tol)?;
            let arc = integrate_path(
                |z| dphi_free(st, which, z),
                &[Seg::Arc {
                    center: Complex64::default(),
                    radius,
                    from_angle: th1,
                    to_angle: the,
                }],
                tol,
            )?
            .value;
            let back = ray_leg(st, which, the, radius, tol)?;
            let o = 2.0 * (out + arc - back);
            if o.im.abs() > 1e-9 {
                return Err(PhaseError::ResidualImaginary(o.im));
            }
            match which {
                1 => omega1.push(-o.re),
                _ => omega2.push(-2.0 * o.re),
            }
        }
    }
    Ok((omega1, omega2))
}

/// `dphi` without the branch-point guard: quadratures sample arbitrarily
/// close to a band endpoint, where the radical itself stays accurate.
fn dphi_free(st: &WhithamState, which: u8, z: Complex64) -> Complex64 {
    st.numer(which, z) / st.rad.eval(z)
}

/// Radial integral of `dphi_which` from `e^{i theta}` out to `radius`;
/// the inner endpoint is a branch point of the radical.
fn ray_leg(
    st: &WhithamState,
    which: u8,
    theta: f64,
    radius: f64,
    tol: f64,
) -> Result<Complex64, QuadError> {
    let e = Complex64::from_polar(1.0, theta);
    let r = integrate_endpoint_singular(
        |t, _, _| dphi_free(st, which, (1.0 + t) * e) * e,
        0.0,
        radius - 1.0,
        Singularity::InverseSqrtLeft,
        tol,
    )?;
    Ok(r.value)
}

// ------------------------------------------------------------------ szego

/// Gap phases `Delta` of the Szego function for reflection `r`, plus its
/// value `delta_inf` at infinity.
///
/// The phases solve the linear system that cancels the growing powers of
/// the Cauchy-type contour sum against `R`: the matrix holds alternating
/// cosine moments of `1 / |R|` over the gaps, the right side the matching
/// `ln r` moments over the bands. The alternation tracks the sign of
/// `z^{-l} R` from gap to gap. `delta_inf` folds the one remaining free
/// moment into a unimodular constant.
pub fn szego(
    st: &WhithamState,
    refl: &Reflection,
) -> Result<(Vec<f64>, Complex64), PhaseError> {
    szego_tol(st, refl, PTOL)
}

pub(crate) fn szego_tol(
    st: &WhithamState,
    refl: &Reflection,
    tol: f64,
) -> Result<(Vec<f64>, Complex64), PhaseError> {
    let l = st.ell();
    if refl.is_unit() {
        return Ok((vec![0.0; l], c64(1.0, 0.0)));
    }
    let mut mat = DMatrix::<f64>::zeros(l, l);
    let mut rhs = DVector::<f64>::zeros(l);
    for m in 0..l {
        let mu = (m + 1) as i32 - l as i32;
        for j in 0..l {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            mat[(m, j)] = sign * gap_moment(st, j + 1, mu, tol)?;
            rhs[m] += sign * band_moment(st, refl, j + 1, mu, tol)?;
        }
    }
    let delta = mat.lu().solve(&rhs).ok_or(PhaseError::SingularSystem)?;
    let mut top = 0.0;
    for j in 0..l {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        top += sign
            * (delta[j] * gap_moment(st, j + 1, l as i32, tol)?
                - band_moment(st, refl, j + 1, l as i32, tol)?);
    }
    let delta_inf = Complex64::from_polar(1.0, -top / PI);
    Ok((delta.iter().copied().collect(), delta_inf))
}

/// `int cos(mu t) / |rho_gap| dt` over gap `m`. The trailing gap is only
/// singular on its left since `-1` is never a branch point.
fn gap_moment(st: &WhithamState, m: usize, mu: i32, tol: f64) -> Result<f64, PhaseError> {
    let (a, b) = st.bands.gap(m);
    let sing = if m < st.ell() {
        Singularity::InverseSqrtBoth
    } else {
        Singularity::InverseSqrtLeft
    };
    let nf = mu.unsigned_abs() as f64;
    let r = integrate_endpoint_singular(
        |t, dl, dr| c64((nf * t).cos() / st.rad.rho_gap_offsets(a, dl, b, dr).abs(), 0.0),
        a,
        b,
        sing,
        tol,
    )?;
    Ok(r.value.re)
}

/// `int ln r cos(mu t) / |rho_band| dt` over band `m`.
fn band_moment(
    st: &WhithamState,
    refl: &Reflection,
    m: usize,
    mu: i32,
    tol: f64,
) -> Result<f64, PhaseError> {
    let (a, b) = st.bands.band(m);
    let nf = mu.unsigned_abs() as f64;
    let r = integrate_endpoint_singular(
        |t, dl, dr| {
            let lnr = refl.ln_r(Complex64::from_polar(1.0, t)).re;
            c64(lnr * (nf * t).cos() / st.rad.rho_band_offsets(a, dl, b, dr).abs(), 0.0)
        },
        a,
        b,
        Singularity::InverseSqrtBoth,
        tol,
    )?;
    Ok(r.value.re)
}

/// Szego function at a point off the contour, by direct evaluation of the
/// Cauchy-type contour sum: `ln r` on the bands (positive weight on the
/// upper half, negative on the mirrored lower half), `-i Delta_m` on both
/// halves of gap `m`, against the outer boundary value of `R`.
pub fn delta_eval(
    st: &WhithamState,
    refl: &Reflection,
    delta: &[f64],
    z: Complex64,
) -> Result<Complex64, PhaseError> {
    delta_eval_tol(st, refl, delta, z, PTOL)
}

pub(crate) fn delta_eval_tol(
    st: &WhithamState,
    refl: &Reflection,
    delta: &[f64],
    z: Complex64,
    tol: f64,
) -> Result<Complex64, PhaseError> {
    if refl.is_unit() {
        return Ok(c64(1.0, 0.0));
    }
    let l = st.ell();
    let angles = &st.bands.angles;
    // upper-half pieces; the lower half is reached by mirroring the
    // evaluation point inside the same parameter interval
    let mut pieces: Vec<(f64, f64, bool, usize, Singularity)> = Vec::new();
    for m in 1..=l {
        let (a, b) = st.bands.band(m);
        pieces.push((a, b, true, m, Singularity::InverseSqrtBoth));
    }
    for m in 1..l {
        let (a, b) = st.bands.gap(m);
        pieces.push((a, b, false, m, Singularity::InverseSqrtBoth));
    }
    let (a, b) = st.bands.gap(l);
    pieces.push((a, b, false, l, Singularity::InverseSqrtLeft));

    let mut total = Complex64::default();
    for &(lo, hi, is_band, m, sing) in &pieces {
        let pos = angles.iter().filter(|&&t| t < 0.5 * (lo + hi)).count() as u32;
        for lower in [false, true] {
            let sgn = if lower { -1.0 } else { 1.0 };
            // outer boundary value of R at e^{i sgn t} is
            // (i sgn)^pos e^{i l sgn t} |rho|
            let unit = c64(0.0, sgn).powu(pos);
            let r = integrate_endpoint_singular(
                |t, dl, dr| {
                    let tt = sgn * t;
                    let s = Complex64::from_polar(1.0, tt);
                    let rho = if is_band {
                        st.rad.rho_band_offsets(lo, dl, hi, dr).abs()
                    } else {
                        st.rad.rho_gap_offsets(lo, dl, hi, dr).abs()
                    };
                    let r_out = unit * Complex64::from_polar(1.0, l as f64 * tt) * rho;
                    let w = if is_band {
                        c64(sgn * refl.ln_r(s).re, 0.0)
                    } else {
                        c64(0.0, -delta[m - 1])
                    };
                    w * c64(0.0, 1.0) * s / (r_out * (s - z))
                },
                lo,
                hi,
                sing,
                tol,
            )?;
            total += r.value;
        }
    }
    Ok((st.rad.eval(z) * total / c64(0.0, 2.0 * PI)).exp())
}

// ---------------------------------------------------------------- g-function

/// Constant term `g_inf` and `1/z` coefficient `g1` of the g-function at
/// infinity.
///
/// Both reduce to the ray constants `c_j = lim phi^{(j)}(z) - z^j / j`
/// along the ray through `eta_1` and to the Laurent coefficients of the
/// differentials: in the modulated and unmodulated regimes
/// `g_inf = (xi/2) c_1 - c_2`, in the large-space regime the second
/// differential drops out and `g_inf = c_1 / 2`.
pub fn g_infinity(
    st: &WhithamState,
    xi: f64,
    mode: PhaseMode,
) -> Result<(Complex64, f64), PhaseError> {
    g_infinity_at(st, xi, mode, RG, PTOL)
}

pub(crate) fn g_infinity_at(
    st: &WhithamState,
    xi: f64,
    mode: PhaseMode,
    rg: f64,
    tol: f64,
) -> Result<(Complex64, f64), PhaseError> {
    let (w, wt) = laurent_w(st);
    // first term dropped from each tail
    let est = (w[5].abs().max(wt[6].abs())) / (4.0 * rg.powi(4));
    if est > 1e-10 {
        return Err(PhaseError::TailNotConverged(est));
    }
    let (c1, c2) = ray_constants_at(st, &w, &wt, rg, tol)?;
    Ok(match mode {
        PhaseMode::LargeSpace => (0.5 * c1, 0.5 * (1.0 - w[2])),
        _ => (0.5 * xi * c1 - c2, 0.5 * xi * (1.0 - w[2]) + wt[3]),
    })
}

/// The ray constants `c_1, c_2`: head integral of `dphi_j - z^{j-1}` from
/// `eta_1` out to the cutoff, then the termwise-integrated Laurent tail,
/// minus `eta_1^j / j`. The head is split at a finite distance so the
/// singular rule only ever covers a short stretch; the remainder is a
/// smooth, decaying line integral.
fn ray_constants_at(
    st: &WhithamState,
    w: &[f64],
    wt: &[f64],
    rg: f64,
    tol: f64,
) -> Result<(Complex64, Complex64), PhaseError> {
    const T_SPLIT: f64 = 9.0;
    const R_MID: f64 = 30.0;
    debug_assert!(rg > R_MID);
    let th1 = st.bands.angles[0];
    let e = Complex64::from_polar(1.0, th1);
    let zc = rg * e;
    let head = |which: u8| -> Result<Complex64, QuadError> {
        let sub = move |z: Complex64| -> Complex64 {
            let pole = if which == 1 { c64(1.0, 0.0) } else { z };
            dphi_free(st, which, z) - pole
        };
        let near = integrate_endpoint_singular(
            |t, _, _| sub((1.0 + t) * e) * e,
            0.0,
            T_SPLIT,
            Singularity::InverseSqrtLeft,
            tol,
        )?
        .value;
        let mid = e * integrate(|r| sub(r * e), 1.0 + T_SPLIT, R_MID, tol)?.value;
        // last stretch under r = R_MID / v, which maps the decaying tail
        // onto a unit-scale smooth integrand; the stretch contributes
        // O(1e-5), so its tolerance floor stays far below the constants'
        // accuracy while clearing the cancellation noise of dphi - pole
        let far = R_MID
            * e
            * integrate(|v| sub((R_MID / v) * e) / (v * v), R_MID / rg, 1.0, tol.max(1e-10))?
                .value;
        Ok(near + mid + far)
    };
    let tail1 = w[2] / zc + w[3] / (2.0 * zc * zc) + w[4] / (3.0 * zc * zc * zc);
    let c1 = head(1)? + tail1 - e;
    let tail2 = wt[3] / zc + wt[4] / (2.0 * zc * zc) + wt[5] / (3.0 * zc * zc * zc);
    let c2 = head(2)? + tail2 - 0.5 * e * e;
    Ok((c1, c2))
}

/// Laurent coefficients of the differentials at infinity:
/// `dphi_1 = sum w[m] z^{-m}` and `dphi_2 = z sum wt[m] z^{-m}`.
///
/// `1 / R` expands through the exponential of the power sums of the
/// branch points; the numerators contribute their descending
/// coefficients. Palindromy of the numerators makes the same lists the
/// ascending expansions at zero: `dphi_1 = z^{-2} sum w[m] z^m` and
/// `dphi_2 = z^{-3} sum wt[m] z^m`. The residue conditions built into the
/// surface force `w[1] = wt[1] = wt[2] = 0`.
fn laurent_w(st: &WhithamState) -> (Vec<f64>, Vec<f64>) {
    let angles = &st.bands.angles;
    let mut s = [0.0; NW + 1];
    for (k, sk) in s.iter_mut().enumerate().skip(1) {
        let pk: f64 = angles.iter().map(|&t| 2.0 * (k as f64 * t).cos()).sum();
        *sk = pk / (2.0 * k as f64);
    }
    let mut u = [0.0; NW + 1];
    u[0] = 1.0;
    for n in 1..=NW {
        let mut acc = 0.0;
        for k in 1..=n {
            acc += k as f64 * s[k] * u[n - k];
        }
        u[n] = acc / n as f64;
    }
    let conv = |pn: &[f64]| -> Vec<f64> {
        let deg = pn.len() - 1;
        (0..=NW)
            .map(|m| (0..=m.min(deg)).map(|a| pn[deg - a] * u[m - a]).sum())
            .collect()
    };
    (conv(st.numer_coeffs(1)), conv(st.numer_coeffs(2)))
}

/// g at a point off the cuts, by contour integration of the differentials
/// from `eta_1` and subtraction of half the planar phase (all of it in
/// the two modulated regimes, the first-kind part alone in the
/// large-space regime).
///
/// Exterior points are reached through the free arc at `LOOP_RADIUS` and
/// a final radial approach; interior points continue around angle zero,
/// through the gap of the sentinel `z = 1`, and along an interior arc.
pub fn g_eval(
    st: &WhithamState,
    xi: f64,
    z: Complex64,
    mode: PhaseMode,
) -> Result<Complex64, PhaseError> {
    g_eval_tol(st, xi, z, mode, PTOL)
}

pub(crate) fn g_eval_tol(
    st: &WhithamState,
    xi: f64,
    z: Complex64,
    mode: PhaseMode,
    tol: f64,
) -> Result<Complex64, PhaseError> {
    let phi1 = phi_integral(st, 1, z, tol)?;
    Ok(match mode {
        PhaseMode::LargeSpace => 0.5 * (phi1 - (z - 1.0 / z)),
        _ => {
            let phi2 = phi_integral(st, 2, z, tol)?;
            let planar = xi * (z - 1.0 / z) - (z * z - 1.0 / (z * z));
            0.5 * xi * phi1 - phi2 - 0.5 * planar
        }
    })
}

/// `int_{eta_1}^z dphi_which` along a path that never touches the cuts.
fn phi_integral(
    st: &WhithamState,
    which: u8,
    z: Complex64,
    tol: f64,
) -> Result<Complex64, PhaseError> {
    let th1 = st.bands.angles[0];
    let rho = z.norm();
    let thz = z.arg();
    let leg = ray_leg(st, which, th1, LOOP_RADIUS, tol)?;
    let origin = Complex64::default();
    let rest = if rho >= 1.0 {
        integrate_path(
            |w| dphi_free(st, which, w),
            &[
                Seg::Arc { center: origin, radius: LOOP_RADIUS, from_angle: th1, to_angle: thz },
                Seg::Line { from: Complex64::from_polar(LOOP_RADIUS, thz), to: z },
            ],
            tol,
        )?
        .value
    } else {
        integrate_path(
            |w| dphi_free(st, which, w),
            &[
                Seg::Arc { center: origin, radius: LOOP_RADIUS, from_angle: th1, to_angle: 0.0 },
                Seg::Line { from: c64(LOOP_RADIUS, 0.0), to: c64(rho, 0.0) },
                Seg::Arc { center: origin, radius: rho, from_angle: 0.0, to_angle: thz },
            ],
            tol,
        )?
        .value
    };
    Ok(leg + rest)
}

/// g at the origin, where `g(0) = -g_inf` by the inversion antisymmetry.
///
/// The raw integrand blows up like `z^{-3}` toward the origin while the
/// pole parts of the combination cancel exactly, so the last stretch is
/// integrated through the interior Taylor series of `g'` instead: a path
/// evaluation at a small anchor point minus the termwise-integrated
/// series from zero to the anchor.
pub fn g_at_zero(
    st: &WhithamState,
    xi: f64,
    mode: PhaseMode,
) -> Result<Complex64, PhaseError> {
    let (w, wt) = laurent_w(st);
    let z0 = Complex64::from_polar(0.08, 0.4);
    let g0 = g_eval_tol(st, xi, z0, mode, PTOL)?;
    // ascending coefficients of dphi_1 - 1 - z^{-2} and dphi_2 - z - z^{-3}
    let d1 = [w[2] - 1.0, w[3], w[4], w[5], w[6], w[7]];
    let d2 = [wt[3], wt[4] - 1.0, wt[5], wt[6], wt[7], wt[8]];
    let mut series = Complex64::default();
    let mut zp = z0;
    for n in 0..d1.len() {
        let cn = match mode {
            PhaseMode::LargeSpace => 0.5 * d1[n],
            _ => 0.5 * xi * d1[n] - d2[n],
        };
        series += cn * zp / (n as f64 + 1.0);
        zp *= z0;
    }
    Ok(g0 - series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{ellip_k, Jtheta};
    use crate::spectrum::{Reflection, SpectrumConfig};
    use crate::whitham::{genus1_xi2, solve_alpha, solve_bc, solve_bc_unmodulated};

    fn one_band() -> SpectrumConfig {
        SpectrumConfig::with_unit_reflection(&[0.3543, 0.7414]).unwrap()
    }

    fn two_band_a() -> SpectrumConfig {
        SpectrumConfig::with_unit_reflection(&[0.293, 0.423, 0.567, 0.811]).unwrap()
    }

    fn g1_mod() -> WhithamState {
        solve_bc(&one_band(), 1, 0.6 * PI).unwrap()
    }

    fn g2_mod() -> WhithamState {
        solve_bc(&two_band_a(), 2, 0.7 * PI).unwrap()
    }

    const XI1: f64 = -1.7907305237559978;
    const XI2: f64 = -2.5523877862223032;

    /// Complete elliptic quantities of a genus-1 surface with real branch
    /// points `e2 < e1` inside `(-1, 1)`: modulus, K, K'.
    fn genus1_kk(e1: f64, e2: f64) -> (f64, f64, f64) {
        let m1 = ((1.0 - e1) * (1.0 + e2) / ((1.0 + e1) * (1.0 - e2))).sqrt();
        (m1, ellip_k(m1), ellip_k((1.0 - m1 * m1).sqrt()))
    }

    #[test]
    fn periods_match_elliptic_closed_form() {
        let st = g1_mod();
        assert!((st.xi - XI1).abs() < 1e-12, "velocity drifted: {}", st.xi);
        let (o1, o2) = omega_periods(&st).unwrap();
        assert!((o1[0] - 5.1944880227538497).abs() < 1e-8);
        assert!((o2[0] - 0.69032655496872866).abs() < 1e-8);
        // Omega(xi) = (2 pi / |omega_1|) (xi - e1 - e2) on a genus-1 surface
        let e1 = (0.3543 * PI).cos();
        let e2 = (0.6 * PI).cos();
        let (_, k, _) = genus1_kk(e1, e2);
        let o1_cf = 2.0 * PI * ((e1 + 1.0) * (1.0 - e2)).sqrt() / k;
        let omega = XI1 * o1[0] - o2[0];
        assert!((o1[0] - o1_cf).abs() < 1e-8);
        assert!((omega - o1_cf * (XI1 - e1 - e2)).abs() < 1e-8);
        assert!((omega - -9.9922548125989873).abs() < 1e-8);
    }

    #[test]
    fn periods_unmodulated_match_half_period() {
        let st = solve_bc_unmodulated(&one_band(), 1).unwrap();
        let (o1, o2) = omega_periods(&st).unwrap();
        assert!((o1[0] - 6.1256676167638159).abs() < 1e-8);
        assert!((o2[0] - -1.5058953866109506).abs() < 1e-8);
        // large-space ray: Omega = 2 pi / |omega_1| exactly
        let e1 = (0.3543 * PI).cos();
        let e2 = (0.7414 * PI).cos();
        let (_, k, _) = genus1_kk(e1, e2);
        let o1_cf = 2.0 * PI * ((e1 + 1.0) * (1.0 - e2)).sqrt() / k;
        assert!((o1[0] - o1_cf).abs() < 1e-8);
    }

    #[test]
    fn periods_two_band_both_modes() {
        let st = g2_mod();
        assert!((st.xi - XI2).abs() < 1e-12);
        let (o1, o2) = omega_periods(&st).unwrap();
        let want1 = [2.9535590352676939, 5.9901779110193076];
        let want2 = [4.581990978039973, 0.094485552009895572];
        for k in 0..2 {
            assert!((o1[k] - want1[k]).abs() < 1e-8, "omega1[{k}] = {}", o1[k]);
            assert!((o2[k] - want2[k]).abs() < 1e-8, "omega2[{k}] = {}", o2[k]);
        }
        let st = solve_bc_unmodulated(&two_band_a(), 2).unwrap();
        let (o1, o2) = omega_periods(&st).unwrap();
        let want1 = [2.9061230425267543, 6.5559699558016981];
        let want2 = [4.7176537583086676, -1.5632860248980432];
        for k in 0..2 {
            assert!((o1[k] - want1[k]).abs() < 1e-8, "omega1[{k}] = {}", o1[k]);
            assert!((o2[k] - want2[k]).abs() < 1e-8, "omega2[{k}] = {}", o2[k]);
        }
    }

    #[test]
    fn periods_radius_and_tolerance_insensitive() {
        let st = g1_mod();
        let (a1, a2) = omega_periods_at(&st, LOOP_RADIUS, PTOL).unwrap();
        let (b1, b2) = omega_periods_at(&st, 1.5, PTOL).unwrap();
        assert!((a1[0] - b1[0]).abs() < 1e-9 && (a2[0] - b2[0]).abs() < 1e-9);
        let (c1, c2) = omega_periods_at(&st, LOOP_RADIUS, 1e-10).unwrap();
        assert!((a1[0] - c1[0]).abs() < 1e-10 && (a2[0] - c2[0]).abs() < 1e-10);
    }

    #[test]
    fn periods_reject_radius_on_or_inside_circle() {
        let st = g1_mod();
        assert!(matches!(
            omega_periods_at(&st, 1.0, PTOL),
            Err(PhaseError::PathCrossesCut(_))
        ));
        assert!(matches!(
            omega_periods_at(&st, 0.9, PTOL),
            Err(PhaseError::PathCrossesCut(_))
        ));
    }

    #[test]
    fn unit_reflection_short_circuits() {
        let st = g2_mod();
        for refl in [Reflection::unit(), Reflection::Constant { value: 1.0 }] {
            let (delta, dinf) = szego(&st, &refl).unwrap();
            assert_eq!(delta, vec![0.0, 0.0]);
            assert_eq!(dinf, c64(1.0, 0.0));
            let d = delta_eval(&st, &refl, &delta, c64(0.3, 0.4)).unwrap();
            assert_eq!(d, c64(1.0, 0.0));
        }
    }

    #[test]
    fn gap_phase_matches_complete_integral_ratio() {
        // one gap, constant reflection: Delta = ln c K'(m1) / K(m1)
        let refl = Reflection::Constant { value: 1.7 };
        let lnc = 1.7f64.ln();

        let st = solve_bc_unmodulated(&one_band(), 1).unwrap();
        let (delta, dinf) = szego(&st, &refl).unwrap();
        let (_, k, kp) = genus1_kk((0.3543 * PI).cos(), (0.7414 * PI).cos());
        assert!((delta[0] - lnc * kp / k).abs() < 1e-8);
        assert!((delta[0] - 0.90739442004069758).abs() < 1e-8);
        let dinf_want = c64(0.97950612094739183, 0.20141439627443071);
        assert!((dinf - dinf_want).norm() < 1e-7);

        let st = g1_mod();
        let (delta, _) = szego(&st, &refl).unwrap();
        let (_, k, kp) = genus1_kk((0.3543 * PI).cos(), (0.6 * PI).cos());
        assert!((delta[0] - lnc * kp / k).abs() < 1e-8);
        assert!((delta[0] - 0.71765580548104618).abs() < 1e-8);
    }

    #[test]
    fn gap_phases_two_band_frozen() {
        let st = solve_bc_unmodulated(&two_band_a(), 2).unwrap();
        let refl = Reflection::Constant { value: 1.7 };
        let (delta, dinf) = szego(&st, &refl).unwrap();
        assert!((delta[0] - 0.43302348781765658).abs() < 1e-8, "{}", delta[0]);
        assert!((delta[1] - 1.0776124729777105).abs() < 1e-8, "{}", delta[1]);
        let dinf_want = c64(0.97280544683395754, 0.23162375225823496);
        assert!((dinf - dinf_want).norm() < 1e-7);
    }

    #[test]
    fn partial_reflection_exp_weight_frozen() {
        let st = g1_mod();
        let refl = Reflection::ExpReK { amp: 0.4 };
        let (delta, dinf) = szego(&st, &refl).unwrap();
        assert!((delta[0] - 0.038858487561359665).abs() < 1e-8, "{}", delta[0]);
        let dinf_want = c64(0.99968408872125007, 0.025134095519111599);
        assert!((dinf - dinf_want).norm() < 1e-7);
        let zt = Complex64::from_polar(1.21, 0.77);
        let d = delta_eval(&st, &refl, &delta, zt).unwrap();
        let want = c64(0.97850981833842214, 0.0090540976934961848);
        assert!((d - want).norm() < 1e-7, "delta(zt) = {d}");
    }

    #[test]
    fn szego_function_frozen_at_point() {
        let refl = Reflection::Constant { value: 1.7 };
        let zt = Complex64::from_polar(1.21, 0.77);
        let st = solve_bc_unmodulated(&one_band(), 1).unwrap();
        let (delta, _) = szego(&st, &refl).unwrap();
        let d = delta_eval(&st, &refl, &delta, zt).unwrap();
        let want = c64(0.89243954512556227, 0.033981633138058926);
        assert!((d - want).norm() < 1e-7, "genus 1: {d}");
        let st = solve_bc_unmodulated(&two_band_a(), 2).unwrap();
        let (delta, _) = szego(&st, &refl).unwrap();
        let d = delta_eval(&st, &refl, &delta, zt).unwrap();
        let want = c64(0.86448681609064956, 0.049572132526731534);
        assert!((d - want).norm() < 1e-7, "genus 2: {d}");
    }

    #[test]
    fn szego_function_symmetric_under_inversion() {
        let st = solve_bc_unmodulated(&two_band_a(), 2).unwrap();
        let refl = Reflection::Constant { value: 1.7 };
        let (delta, dinf) = szego(&st, &refl).unwrap();
        let radii = [1.3, 0.45, 2.2, 0.8, 1.07];
        for i in 0..50 {
            let r = radii[i % radii.len()];
            let th = -PI + (i as f64 + 0.5) * (2.0 * PI / 50.0);
            let z = Complex64::from_polar(r, th);
            let d = delta_eval(&st, &refl, &delta, z).unwrap();
            let di = delta_eval(&st, &refl, &delta, 1.0 / z).unwrap();
            assert!((d * di - 1.0).norm() < 1e-8, "asymmetry at {z}: {}", (d * di - 1.0).norm());
        }
        // value at the origin inverts the value at infinity
        let d0 = delta_eval(&st, &refl, &delta, Complex64::default()).unwrap();
        assert!((d0 * dinf - 1.0).norm() < 1e-9);
    }

    #[test]
    fn g_constants_frozen() {
        let (w, wt) = laurent_w(&g1_mod());
        let (c1, c2) = ray_constants_at(&g1_mod(), &w, &wt, RG, PTOL).unwrap();
        assert!((c1.re - -1.3495450469055157).abs() < 1e-8 && c1.im.abs() < 1e-8);
        assert!((c2.re - -0.2306485059435786).abs() < 1e-8 && c2.im.abs() < 1e-8);
        let (g_inf, g1) = g_infinity(&g1_mod(), XI1, PhaseMode::Modulated).unwrap();
        assert!((g_inf.re - 1.438984260282292).abs() < 1e-8 && g_inf.im.abs() < 1e-8);
        assert!((g1 - -1.5149067262415704).abs() < 1e-8);

        let (w, wt) = laurent_w(&g2_mod());
        let (c1, c2) = ray_constants_at(&g2_mod(), &w, &wt, RG, PTOL).unwrap();
        assert!((c1.re - -1.5042408036530243).abs() < 1e-8 && c1.im.abs() < 1e-8);
        assert!((c2.re - -0.36651141908871056).abs() < 1e-8 && c2.im.abs() < 1e-8);
        let (g_inf, g1) = g_infinity(&g2_mod(), XI2, PhaseMode::Modulated).unwrap();
        assert!((g_inf.re - 2.286214346479311).abs() < 1e-8);
        assert!((g1 - -2.2015036389971046).abs() < 1e-8);

        let st = solve_bc_unmodulated(&two_band_a(), 2).unwrap();
        let (w, wt) = laurent_w(&st);
        let (c1, c2) = ray_constants_at(&st, &w, &wt, RG, PTOL).unwrap();
        assert!((c1.re - -1.5304586606304245).abs() < 1e-8);
        assert!((c2.re - -0.32883202952054808).abs() < 1e-8);

        let st = solve_bc_unmodulated(&one_band(), 1).unwrap();
        let (g_inf, g1) = g_infinity(&st, 0.0, PhaseMode::LargeSpace).unwrap();
        assert!((g_inf.re - -0.71288823389535582).abs() < 1e-8 && g_inf.im.abs() < 1e-8);
        assert!((g1 - 0.89694997909462578).abs() < 1e-8);
    }

    #[test]
    fn g_tail_cutoff_insensitive() {
        let st = g1_mod();
        let (a, a1) = g_infinity_at(&st, XI1, PhaseMode::Modulated, RG, PTOL).unwrap();
        let (b, b1) = g_infinity_at(&st, XI1, PhaseMode::Modulated, 2.0 * RG, PTOL).unwrap();
        assert!((a - b).norm() < 1e-9);
        assert!((a1 - b1).abs() < 1e-12);
    }

    #[test]
    fn g_large_space_matches_theta_closed_form() {
        // genus-1 1/z coefficient through the uniformizing theta constants:
        // g1 = 1 + 2 C2 - 4 X_inf + (pi^2 / W^2) theta1'''(0) / (3 theta1'(0))
        // on the flattened curve with half-period W = 2 omega_1
        let e1 = (0.3543 * PI).cos();
        let e2 = (0.7414 * PI).cos();
        let (_, k, kp) = genus1_kk(e1, e2);
        let jt = Jtheta::new(kp / k);
        let pref = -PI * PI * (e1 + 1.0) * (1.0 - e2) / (4.0 * k * k);
        let a = 1.0 - 0.5 * (e1 + e2);
        let c2 = 0.5 * a * a - 0.25 * (e1 * e1 + e2 * e2);
        let eta1 = Complex64::from_polar(1.0, 0.3543 * PI);
        let eta2 = Complex64::from_polar(1.0, 0.7414 * PI);
        let x_inf = ((eta1 * eta1 * eta2 * eta2 - 6.0 * eta1 * eta1 * eta2
            - 6.0 * eta1 * eta2 * eta2
            + eta1 * eta1
            + 20.0 * eta1 * eta2
            + eta2 * eta2
            - 6.0 * eta1
            - 6.0 * eta2
            + 1.0)
            / (48.0 * eta1 * eta2))
            .re;
        let g1_cf = 1.0 + 2.0 * c2 - 4.0 * x_inf + pref * jt.th1_ppp0() / (3.0 * jt.th1_prime0());
        let st = solve_bc_unmodulated(&one_band(), 1).unwrap();
        let (_, g1) = g_infinity(&st, 0.0, PhaseMode::LargeSpace).unwrap();
        assert!((g1 - g1_cf).abs() < 1e-7, "g1 = {g1}, closed form = {g1_cf}");
    }

    #[test]
    fn g_eval_antisymmetric_under_inversion() {
        let st = g1_mod();
        let z = c64(3.0, 2.0);
        let a = g_eval(&st, XI1, z, PhaseMode::Modulated).unwrap();
        let b = g_eval(&st, XI1, 1.0 / z, PhaseMode::Modulated).unwrap();
        assert!((a + b).norm() < 1e-8, "g(z) + g(1/z) = {}", a + b);
        // large-z limit recovers g_inf
        let (g_inf, g1) = g_infinity(&st, XI1, PhaseMode::Modulated).unwrap();
        let zb = Complex64::from_polar(80.0, 0.4);
        let far = g_eval(&st, XI1, zb, PhaseMode::Modulated).unwrap();
        assert!(((far - g_inf) * zb - g1).norm() < 1e-2);
    }

    #[test]
    fn g_at_zero_matches_minus_g_inf() {
        let st = g1_mod();
        let (g_inf, _) = g_infinity(&st, XI1, PhaseMode::Modulated).unwrap();
        let g0 = g_at_zero(&st, XI1, PhaseMode::Modulated).unwrap();
        assert!((g0 + g_inf).norm() < 1e-7, "g(0) + g_inf = {}", g0 + g_inf);
        let st = g2_mod();
        let (g_inf, _) = g_infinity(&st, XI2, PhaseMode::Modulated).unwrap();
        let g0 = g_at_zero(&st, XI2, PhaseMode::Modulated).unwrap();
        assert!((g0 + g_inf).norm() < 1e-7, "g(0) + g_inf = {}", g0 + g_inf);
    }

    #[test]
    fn laurent_series_drops_residue_terms() {
        let (w, wt) = laurent_w(&g1_mod());
        assert!(w[1].abs() < 1e-9 && wt[1].abs() < 1e-9 && wt[2].abs() < 1e-9);
        let w_want = [
            1.0,
            0.0,
            -0.5945315762529232,
            -0.17443708779426694,
            1.1665016392042641,
            0.19957039970374525,
        ];
        let wt_want = [
            1.0,
            0.0,
            0.0,
            -0.08721854389713347,
            0.46924008347807387,
            -0.066339344322612602,
        ];
        for m in 0..6 {
            assert!((w[m] - w_want[m]).abs() < 1e-9, "w[{m}] = {}", w[m]);
            assert!((wt[m] - wt_want[m]).abs() < 1e-9, "wt[{m}] = {}", wt[m]);
        }
        let (w, wt) = laurent_w(&solve_bc_unmodulated(&two_band_a(), 2).unwrap());
        assert!(w[1].abs() < 1e-9 && wt[1].abs() < 1e-9 && wt[2].abs() < 1e-9);
    }

    #[test]
    fn phases_affine_in_xi() {
        let st = solve_bc_unmodulated(&two_band_a(), 2).unwrap();
        let refl = Reflection::unit();
        let xis = [-3.3, -4.1, -5.6];
        let pc: Vec<PhaseConstants> = xis
            .iter()
            .map(|&x| phase_constants(&st, &refl, PhaseMode::Unmodulated, x).unwrap())
            .collect();
        for k in 0..2 {
            let slope = (pc[2].omega[k] - pc[0].omega[k]) / (xis[2] - xis[0]);
            let interp = pc[0].omega[k] + slope * (xis[1] - xis[0]);
            assert!((pc[1].omega[k] - interp).abs() < 1e-10);
        }
    }

    #[test]
    fn phases_continuous_at_genus_drop() {
        let cfg = one_band();
        let refl = Reflection::Constant { value: 1.7 };
        let xi2 = genus1_xi2(&cfg).unwrap();
        let st_m = solve_alpha(&cfg, 1, xi2 + 1e-9).unwrap();
        let st_u = solve_bc_unmodulated(&cfg, 1).unwrap();
        let pm = phase_constants(&st_m, &refl, PhaseMode::Modulated, st_m.xi).unwrap();
        let pu = phase_constants(&st_u, &refl, PhaseMode::Unmodulated, st_m.xi).unwrap();
        assert!((pm.omega1[0] - pu.omega1[0]).abs() < 1e-7);
        assert!((pm.omega2[0] - pu.omega2[0]).abs() < 1e-7);
        assert!((pm.omega[0] - pu.omega[0]).abs() < 1e-7);
        assert!((pm.delta[0] - pu.delta[0]).abs() < 1e-7);
        assert!((pm.delta_inf - pu.delta_inf).norm() < 1e-7);
        assert!((pm.g_inf - pu.g_inf).norm() < 1e-7);
        assert!((pm.g1 - pu.g1).abs() < 1e-7);
    }

    #[test]
    fn phase_constants_assembles() {
        let st = solve_bc_unmodulated(&one_band(), 1).unwrap();
        let refl = Reflection::Constant { value: 1.7 };
        let pc = phase_constants(&st, &refl, PhaseMode::Unmodulated, -4.0).unwrap();
        assert!((pc.omega[0] - (-4.0 * pc.omega1[0] - pc.omega2[0])).abs() < 1e-14);
        let pl = phase_constants(&st, &refl, PhaseMode::LargeSpace, 0.0).unwrap();
        assert_eq!(pl.omega, pl.omega1);
        // serialization keeps the regime tag and complex fields
        let txt = serde_json::to_string(&pc).unwrap();
        let back: PhaseConstants = serde_json::from_str(&txt).unwrap();
        assert_eq!(back.mode, PhaseMode::Unmodulated);
        assert!((back.delta_inf - pc.delta_inf).norm() < 1e-14);
    }
}
