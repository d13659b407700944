//! Whitham modulation layer: transition velocities and the moving band
//! endpoint.
//!
//! A gas surface of genus `l` consists of the first `2l - 1` spectral
//! points together with a movable endpoint `alpha` on the last band. Two
//! second kind differentials are pinned down by their singular parts at
//! the origin and at infinity together with vanishing gap periods; all
//! their periods are then real. Their ratio at `alpha` is the local
//! characteristic velocity `xi`, and inverting that relation in `alpha`
//! produces the modulated surface for a given `xi = x / t`. Velocities of
//! the region boundaries come from the same differentials on degenerate
//! surfaces.
//!
//! Everything is reduced to the unit circle: on a gap arc each
//! differential is a cosine polynomial over the real gap radical, so the
//! period conditions collapse to one dimensional cosine moment systems
//! sharing a single family of integrals per surface.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::c64;
use crate::quad::{integrate, integrate_endpoint_singular, QuadError, Singularity};
use crate::radicals::{Side, UnitRadical};
use crate::special::ellip_ke;
use crate::spectrum::{BandSystem, SpectrumConfig};

/// Tolerance handed to every quadrature in this module. Well below the
/// 1e-9 residual promised for the period conditions.
const QTOL: f64 = 1e-11;

/// Exit tolerance of the endpoint bisection, measured in xi.
const XI_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum WhithamError {
    #[error("cosine moment system is numerically singular (cond {cond:.3e})")]
    SingularSystem { cond: f64 },
    #[error("evaluation point coincides with a branch point")]
    OnBranchPoint,
    #[error("transition velocities not strictly decreasing at entry {index}: {prev} then {next}")]
    NonMonotone { index: usize, prev: f64, next: f64 },
    #[error("xi = {xi} lies outside the genus {ell} modulated interval ({lo}, {hi})")]
    OutOfRegion { xi: f64, ell: usize, lo: f64, hi: f64 },
    #[error("endpoint bisection could not meet the xi tolerance")]
    BracketFailure,
    #[error("closed form out of range: {0}")]
    OutOfRange(&'static str),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// A solved surface: band system, numerator coefficients of both
/// differentials and the attached velocity.
///
/// `b` holds `B_0 .. B_{l+1}` for the first kind of singular behaviour
/// (simple growth at infinity), `c` holds `C_0 .. C_{l+2}` for the second
/// (quadratic growth). Both numerators are palindromic, which keeps every
/// coefficient real and makes the differentials odd under `z -> 1/z`.
#[derive(Debug, Clone)]
pub struct WhithamState {
    pub bands: BandSystem,
    pub rad: UnitRadical,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Velocity `2 Q_l(alpha) / P_l(alpha)` of this surface.
    pub xi: f64,
    pnum: Vec<f64>,
    qnum: Vec<f64>,
}

impl WhithamState {
    pub fn ell(&self) -> usize {
        self.bands.genus()
    }

    pub fn alpha(&self) -> Complex64 {
        self.bands.alpha()
    }

    pub fn phi_alpha(&self) -> f64 {
        self.bands.phi_alpha()
    }

    /// First numerator on the circle: `P_l(e^{i t}) = e^{i (l-1) t} p_cos(t)`.
    pub fn p_cos(&self, theta: f64) -> f64 {
        let l = self.ell();
        let mut s = self.b[l + 1];
        for (m, &bm) in self.b[..=l].iter().enumerate() {
            s += 2.0 * bm * (((l + 1 - m) as f64) * theta).cos();
        }
        s
    }

    /// Second numerator on the circle: `Q_l(e^{i t}) = e^{i (l-1) t} q_cos(t)`.
    pub fn q_cos(&self, theta: f64) -> f64 {
        let l = self.ell();
        let mut s = self.c[l + 2];
        for (m, &cm) in self.c[..=l + 1].iter().enumerate() {
            s += 2.0 * cm * (((l + 2 - m) as f64) * theta).cos();
        }
        s
    }

    /// Combined phase numerator `(xi/2) p_cos - q_cos` on the circle.
    pub fn num_cos(&self, xi: f64, theta: f64) -> f64 {
        0.5 * xi * self.p_cos(theta) - self.q_cos(theta)
    }

    pub(crate) fn numer(&self, which: u8, z: Complex64) -> Complex64 {
        match which {
            1 => horner(&self.pnum, z) / (z * z),
            2 => horner(&self.qnum, z) / (z * z * z),
            _ => panic!("differential index must be 1 or 2"),
        }
    }

    /// Ascending coefficients of the palindromic numerator polynomials.
    pub(crate) fn numer_coeffs(&self, which: u8) -> &[f64] {
        match which {
            1 => &self.pnum,
            2 => &self.qnum,
            _ => panic!("differential index must be 1 or 2"),
        }
    }

    /// Derivative in `z` of phase integral `which` away from the cuts:
    /// `P_l / R_l` or `Q_l / R_l`.
    pub fn dphi(&self, which: u8, z: Complex64) -> Result<Complex64, WhithamError> {
        for p in self.bands.upper_points() {
            if (z - p).norm() < 1e-12 || (z - p.conj()).norm() < 1e-12 {
                return Err(WhithamError::OnBranchPoint);
            }
        }
        Ok(self.numer(which, z) / self.rad.eval(z))
    }

    /// One sided boundary value of the same derivative on a band arc.
    pub fn dphi_side(&self, which: u8, theta: f64, side: Side) -> Complex64 {
        let z = Complex64::from_polar(1.0, theta);
        self.numer(which, z) / self.rad.eval_side(theta, side)
    }
}

fn horner(coef: &[f64], z: Complex64) -> Complex64 {
    let mut acc = c64(0.0, 0.0);
    for &a in coef.iter().rev() {
        acc = acc * z + a;
    }
    acc
}

fn pnum_coeffs(b: &[f64], l: usize) -> Vec<f64> {
    let mut p = vec![0.0; 2 * l + 3];
    for (j, &bj) in b[..=l].iter().enumerate() {
        p[j] += bj;
        p[2 * l + 2 - j] += bj;
    }
    p[l + 1] += b[l + 1];
    p
}

fn qnum_coeffs(c: &[f64], l: usize) -> Vec<f64> {
    let mut q = vec![0.0; 2 * l + 5];
    for (j, &cj) in c[..=l + 1].iter().enumerate() {
        q[j] += cj;
        q[2 * l + 4 - j] += cj;
    }
    q[l + 2] += c[l + 2];
    q
}

/// Integrals `int cos(n t) / rho(t) dt` over gap `m` of the band system,
/// `n = 0 ..= nmax`. Interior gaps end at branch points on both sides,
/// the trailing gap only on the left since `-1` is never a branch point.
fn cos_moments(
    rad: &UnitRadical,
    bands: &BandSystem,
    m: usize,
    nmax: usize,
) -> Result<Vec<f64>, QuadError> {
    let (a, b) = bands.gap(m);
    let sing = if m < bands.genus() {
        Singularity::InverseSqrtBoth
    } else {
        Singularity::InverseSqrtLeft
    };
    (0..=nmax)
        .map(|n| {
            let nf = n as f64;
            let r = integrate_endpoint_singular(
                |t, dl, dr| c64((nf * t).cos() / rad.rho_gap_offsets(a, dl, b, dr), 0.0),
                a,
                b,
                sing,
                QTOL,
            );
            match r {
                Ok(r) => Ok(r.value.re),
                // near a band collapse the roundoff floor of the radical
                // sits above the requested tolerance; the stalled value
                // is still orders below the residual contract
                Err(QuadError::NonConvergent { value, err, .. })
                    if err.is_finite() && err < 1e-8 =>
                {
                    Ok(value.re)
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Solve the period conditions on the modulated genus `ell` surface with
/// endpoint angle `phi` in the last band.
pub fn solve_bc(cfg: &SpectrumConfig, ell: usize, phi: f64) -> Result<WhithamState, WhithamError> {
    solve_on(BandSystem::modulated(cfg, ell, phi))
}

/// Same with the endpoint parked at `eta_{2 ell}`.
pub fn solve_bc_unmodulated(cfg: &SpectrumConfig, ell: usize) -> Result<WhithamState, WhithamError> {
    solve_on(BandSystem::unmodulated(cfg, ell))
}

fn solve_on(bands: BandSystem) -> Result<WhithamState, WhithamError> {
    let ell = bands.genus();
    let rad = UnitRadical::new(&bands);
    let phi = bands.phi_alpha();

    // pinned coefficients from the singular parts at 0 and infinity
    let b1: f64 = -bands.angles.iter().map(|t| t.cos()).sum::<f64>();
    let (s1, s2) = bands.angles[..2 * ell - 1]
        .iter()
        .fold((0.0, 0.0), |(u, v), &t| (u + 2.0 * t.cos(), v + 2.0 * (2.0 * t).cos()));
    let c2 = (s1 * s1 - 2.0 * s2 + 2.0 + 4.0 * phi.cos() * s1 - 2.0 * (2.0 * phi).cos()) / 8.0;

    let moments: Vec<Vec<f64>> = (1..=ell)
        .map(|m| cos_moments(&rad, &bands, m, ell + 2))
        .collect::<Result<_, _>>()?;

    // both systems share one matrix: unknowns are the free coefficients
    // ordered by descending cosine frequency, the constant term last
    let mut a = DMatrix::<f64>::zeros(ell, ell);
    let mut rb = DVector::<f64>::zeros(ell);
    let mut rc = DVector::<f64>::zeros(ell);
    for (row, g) in moments.iter().enumerate() {
        for k in 0..ell - 1 {
            a[(row, k)] = 2.0 * g[ell - 1 - k];
        }
        a[(row, ell - 1)] = g[0];
        rb[row] = -2.0 * (g[ell + 1] + b1 * g[ell]);
        rc[row] = -2.0 * (g[ell + 2] + b1 * g[ell + 1] + c2 * g[ell]);
    }

    let cond = cond_svd(&a);
    if cond > 1e12 {
        return Err(WhithamError::SingularSystem { cond });
    }
    let lu = a.clone().lu();
    let xb = lu.solve(&rb).ok_or(WhithamError::SingularSystem { cond })?;
    let xc = lu.solve(&rc).ok_or(WhithamError::SingularSystem { cond })?;
    let res = (&a * &xb - &rb).amax().max((&a * &xc - &rc).amax());
    assert!(
        res < 1e-9 * rb.amax().max(rc.amax()).max(1.0),
        "period condition residual {res:.3e}"
    );

    let mut b = vec![1.0, b1];
    b.extend(xb.iter());
    let mut c = vec![1.0, b1, c2];
    c.extend(xc.iter());
    let pnum = pnum_coeffs(&b, ell);
    let qnum = qnum_coeffs(&c, ell);
    let mut st = WhithamState { bands, rad, b, c, xi: 0.0, pnum, qnum };
    st.xi = 2.0 * st.q_cos(phi) / st.p_cos(phi);
    Ok(st)
}

fn cond_svd(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &s in sv.iter() {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// A space-time region at fixed `xi = x / t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Ahead of the first transition the field is the plane wave.
    Planar,
    /// Genus `ell` surface with a moving endpoint.
    Modulated { ell: usize },
    /// Genus `ell` surface with all endpoints at spectral points.
    Unmodulated { ell: usize },
}

/// The `2N` transition velocities of a gas, strictly decreasing, with the
/// `2N + 1` region descriptors between them.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionTable {
    pub xi: Vec<f64>,
    pub regions: Vec<Region>,
}

impl TransitionTable {
    /// Region containing `xi`. A tie against a boundary (within
    /// `1e-12 max(1, |boundary|)`) resolves to the neighbouring surface
    /// without a collapsing band: the unmodulated side, or the plane wave
    /// at the first boundary.
    pub fn classify(&self, xi: f64) -> Region {
        for (i, &bound) in self.xi.iter().enumerate() {
            if (xi - bound).abs() <= 1e-12 * bound.abs().max(1.0) {
                let m = i + 1;
                return if m == 1 { Region::Planar } else { Region::Unmodulated { ell: m / 2 } };
            }
            if xi > bound {
                return self.regions[i];
            }
        }
        *self.regions.last().unwrap()
    }
}

/// Velocity at an odd transition: the two differentials of the
/// unmodulated genus `ell` surface integrated over the piece of its last
/// gap reaching to the next spectral point. The gap radical keeps one
/// sign there, so orientation and sign conventions cancel in the ratio.
fn xi_odd(st: &WhithamState, cfg: &SpectrumConfig, ell: usize) -> Result<f64, WhithamError> {
    let (a, b) = (cfg.theta(2 * ell), cfg.theta(2 * ell + 1));
    let den = integrate_endpoint_singular(
        |t, _, _| c64(st.p_cos(t) / st.rad.rho_gap(t), 0.0),
        a,
        b,
        Singularity::InverseSqrtLeft,
        QTOL,
    )?;
    let num = integrate_endpoint_singular(
        |t, _, _| c64(st.q_cos(t) / st.rad.rho_gap(t), 0.0),
        a,
        b,
        Singularity::InverseSqrtLeft,
        QTOL,
    )?;
    Ok(2.0 * num.value.re / den.value.re)
}

/// All transition velocities of the gas, `xi_1 > ... > xi_{2N}`.
///
/// `xi_1 = 2 Re eta_1` exactly; even entries are surface velocities of
/// the unmodulated surfaces, odd entries come from [`xi_odd`] ratios.
pub fn transition_points(cfg: &SpectrumConfig) -> Result<TransitionTable, WhithamError> {
    let n = cfg.n_bands();
    let mut xi = vec![2.0 * cfg.eta_re(1)];
    for ell in 1..=n {
        let st = solve_bc_unmodulated(cfg, ell)?;
        xi.push(st.xi);
        if ell < n {
            xi.push(xi_odd(&st, cfg, ell)?);
        }
    }
    for i in 1..xi.len() {
        if xi[i] >= xi[i - 1] {
            return Err(WhithamError::NonMonotone { index: i + 1, prev: xi[i - 1], next: xi[i] });
        }
    }
    let mut regions = vec![Region::Planar];
    for i in 1..=2 * n {
        regions.push(if i % 2 == 1 {
            Region::Modulated { ell: i.div_ceil(2) }
        } else {
            Region::Unmodulated { ell: i / 2 }
        });
    }
    Ok(TransitionTable { xi, regions })
}

/// The open `xi` interval of the genus `ell` modulated region.
pub fn modulated_interval(cfg: &SpectrumConfig, ell: usize) -> Result<(f64, f64), WhithamError> {
    let hi = if ell == 1 {
        2.0 * cfg.eta_re(1)
    } else {
        let prev = solve_bc_unmodulated(cfg, ell - 1)?;
        xi_odd(&prev, cfg, ell - 1)?
    };
    let lo = solve_bc_unmodulated(cfg, ell)?.xi;
    Ok((lo, hi))
}

/// Endpoint for a prescribed velocity: bisection in the endpoint angle,
/// re-solving the period conditions at every iterate. The velocity map is
/// strictly decreasing in the angle, so plain bisection is enough and
/// avoids derivatives of the moment systems.
pub fn solve_alpha(cfg: &SpectrumConfig, ell: usize, xi: f64) -> Result<WhithamState, WhithamError> {
    let (lo, hi) = modulated_interval(cfg, ell)?;
    if !(xi > lo && xi < hi) {
        return Err(WhithamError::OutOfRegion { xi, ell, lo, hi });
    }
    let (mut a, mut b) = (cfg.theta(2 * ell - 1), cfg.theta(2 * ell));
    let mut best: Option<WhithamState> = None;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let st = solve_bc(cfg, ell, mid)?;
        if (st.xi - xi).abs() < XI_TOL {
            return Ok(st);
        }
        if best.as_ref().is_none_or(|p| (st.xi - xi).abs() < (p.xi - xi).abs()) {
            best = Some(st.clone());
        }
        if st.xi > xi {
            a = mid;
        } else {
            b = mid;
        }
    }
    // the bracket ran out of representable angles; near a band collapse
    // the velocity has a roundoff floor above XI_TOL, so accept the
    // closest state if it is within that floor
    match best {
        Some(st) if (st.xi - xi).abs() < 1e-6 * xi.abs().max(1.0) => Ok(st),
        _ => Err(WhithamError::BracketFailure),
    }
}

/// Closed form of the velocity map for a single band gas in terms of
/// `e1 = Re eta_1` and `a = Re alpha`, via complete elliptic integrals.
pub fn genus1_xi(cfg: &SpectrumConfig, alpha_re: f64) -> Result<f64, WhithamError> {
    if cfg.n_bands() != 1 {
        return Err(WhithamError::OutOfRange("closed forms need a single band"));
    }
    let e1 = cfg.eta_re(1);
    let e2 = cfg.eta_re(2);
    if !(alpha_re >= e2 - 1e-12 && alpha_re <= e1 + 1e-12) {
        return Err(WhithamError::OutOfRange("alpha outside the band"));
    }
    if e1 - alpha_re < 1e-13 {
        // band collapse limit
        return Ok(2.0 * e1);
    }
    let m1 = ((1.0 - e1) * (1.0 + alpha_re) / ((1.0 + e1) * (1.0 - alpha_re))).sqrt();
    let (kk, ee) = ellip_ke(m1);
    Ok(e1 + alpha_re
        + 2.0 * (e1 - alpha_re) * (alpha_re + 1.0) * kk / ((e1 - alpha_re) * kk - (e1 + 1.0) * ee))
}

/// `xi_2` of a single band gas: the closed form at `alpha = eta_2`.
pub fn genus1_xi2(cfg: &SpectrumConfig) -> Result<f64, WhithamError> {
    genus1_xi(cfg, cfg.eta_re(2))
}

/// Invert the closed form velocity map by bisection in `Re alpha`.
pub fn genus1_solve_alpha(cfg: &SpectrumConfig, xi: f64) -> Result<f64, WhithamError> {
    let lo = genus1_xi2(cfg)?;
    let e1 = cfg.eta_re(1);
    if !(xi > lo && xi < 2.0 * e1) {
        return Err(WhithamError::OutOfRange("xi outside the modulated interval"));
    }
    let (mut a, mut b) = (cfg.eta_re(2), e1);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let v = genus1_xi(cfg, mid)?;
        if (v - xi).abs() < 1e-12 {
            return Ok(mid);
        }
        if v < xi {
            a = mid;
        } else {
            b = mid;
        }
    }
    Err(WhithamError::BracketFailure)
}

/// External field on the unit circle: the imaginary part of the plane
/// wave exponent at `t = 1`, `x = xi`.
pub fn external_field(theta: f64, xi: f64) -> f64 {
    2.0 * theta.sin() * (xi - 2.0 * theta.cos())
}

/// Im phi ahead of the first transition, where the phase is half the
/// exponent itself.
pub fn planar_im_phi(theta: f64, xi: f64) -> f64 {
    0.5 * external_field(theta, xi)
}

/// Im of the phase `(xi/2) phi_1 - phi_2` at `e^{i theta}`, integrated
/// along the circle from the nearest band edge. Single valued because
/// every period of both differentials is real; identically zero on the
/// bands of the surface.
pub fn im_phi_circle(st: &WhithamState, xi: f64, theta: f64) -> Result<f64, WhithamError> {
    assert!((0.0..=PI + 1e-12).contains(&theta));
    let ell = st.ell();
    for m in 1..=ell {
        let (a, b) = st.bands.band(m);
        if theta >= a - 1e-14 && theta <= b + 1e-14 {
            return Ok(0.0);
        }
    }
    let f = |t: f64| c64(st.num_cos(xi, t) / st.rad.rho_gap(t), 0.0);
    let th1 = st.bands.angles[0];
    if theta < th1 {
        // leading arc, anchored at the first branch point
        let r =
            integrate_endpoint_singular(|t, _, _| f(t), theta, th1, Singularity::InverseSqrtRight, QTOL)?;
        return Ok(-r.value.re);
    }
    let mut left = st.bands.gap(ell).0;
    for m in 1..ell {
        let (a, b) = st.bands.gap(m);
        if theta > a && theta < b {
            left = a;
            break;
        }
    }
    let r = integrate_endpoint_singular(|t, _, _| f(t), left, theta, Singularity::InverseSqrtLeft, QTOL)?;
    Ok(r.value.re)
}

/// Im phi just off the circle at `r > 1`: a radial leg from `eta_1`
/// followed by the arc of radius `r`. Values at radius `1/r` coincide by
/// the `z -> 1/z` and conjugation symmetries, so one side covers both
/// lens contours.
pub fn im_phi_offcircle(
    st: &WhithamState,
    xi: f64,
    r: f64,
    theta: f64,
) -> Result<f64, WhithamError> {
    Ok(im_phi_arc_sweep(st, xi, r, &[theta])?[0])
}

fn im_phi_arc_sweep(
    st: &WhithamState,
    xi: f64,
    r: f64,
    thetas: &[f64],
) -> Result<Vec<f64>, WhithamError> {
    assert!(r > 1.0, "sweep radius must sit outside the circle");
    let th1 = st.bands.angles[0];
    let e1 = Complex64::from_polar(1.0, th1);
    let dnum = |z: Complex64| 0.5 * xi * st.numer(1, z) - st.numer(2, z);
    let radial = integrate_endpoint_singular(
        |t, _, _| {
            let z = c64(1.0 + t, 0.0) * e1;
            dnum(z) * e1 / st.rad.eval(z)
        },
        0.0,
        r - 1.0,
        Singularity::InverseSqrtLeft,
        QTOL,
    )?;
    let mut out = Vec::with_capacity(thetas.len());
    let mut acc = radial.value;
    let mut from = th1;
    for &th in thetas {
        debug_assert!(th >= from, "sweep angles must ascend");
        // keep branch angles as panel boundaries, the integrand peaks there
        let mut stops: Vec<f64> =
            st.bands.angles.iter().copied().filter(|&a| a > from && a < th).collect();
        stops.push(th);
        for &to in &stops {
            let seg = integrate(
                |t| {
                    let z = Complex64::from_polar(r, t);
                    dnum(z) * z * c64(0.0, 1.0) / st.rad.eval(z)
                },
                from,
                to,
                QTOL,
            )?;
            acc += seg.value;
            from = to;
        }
        out.push(acc.im);
    }
    Ok(out)
}

/// Zero and extrema of Im phi along the last gap in the unmodulated
/// regime, all in angle.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapLandmarks {
    /// Where Im phi crosses zero, from negative to positive with theta.
    pub rho: f64,
    /// Argmin of Im phi, between the band edge and rho.
    pub beta: f64,
    pub beta_im: f64,
    /// Argmax of Im phi, between rho and pi.
    pub s: f64,
    pub s_im: f64,
}

/// Sign structure report for one surface at one velocity.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub xi: f64,
    pub modulated: bool,
    /// Worst closure defect of Im phi over the leading arc, the interior
    /// gaps and the trailing gap. The leading arc is never imposed by the
    /// solver, so this also checks the automatic conditions.
    pub gap_residual_max: f64,
    /// Radial offset of the lens contours.
    pub lens_offset: f64,
    /// Smallest `-Im phi` over the lens samples above the supported
    /// bands; positive means the lens factors decay.
    pub lens_margin_min: f64,
    /// Smallest `2 Im phi` over the trailing gap samples; positive in the
    /// modulated regime, indefinite in the unmodulated one.
    pub trailing_min: f64,
    /// Sign changes of Im phi along the trailing gap.
    pub sign_changes: usize,
    /// Smallest `2 Im phi - max(0, Q)` over the full spectral band set,
    /// `Q` the external field. Nonnegative, and zero exactly on the
    /// supported part: the variational inequalities of the equilibrium
    /// measure.
    pub obstacle_margin_min: f64,
    pub landmarks: Option<GapLandmarks>,
}

/// Sample the sign structure of the phase attached to `st` at velocity
/// `xi`: gap closure defects, lens margins, trailing gap sign pattern
/// with its landmarks, and the obstacle margin over the band set.
pub fn sign_diagnostics(
    cfg: &SpectrumConfig,
    st: &WhithamState,
    xi: f64,
    samples: usize,
    lens_offset: f64,
) -> Result<DiagnosticsReport, WhithamError> {
    assert!(samples >= 16 && lens_offset > 0.0);
    let ell = st.ell();
    for (j, &a) in st.bands.angles[..2 * ell - 1].iter().enumerate() {
        debug_assert!((a - cfg.theta(j + 1)).abs() < 1e-12, "state not built from this spectrum");
    }
    let phi_a = st.bands.phi_alpha();
    let modulated = phi_a < cfg.theta(2 * ell) - 1e-12;

    let f = |t: f64| c64(st.num_cos(xi, t) / st.rad.rho_gap(t), 0.0);

    let mut gap_residual: f64 = 0.0;
    let r0 = integrate_endpoint_singular(
        |t, _, _| f(t),
        0.0,
        st.bands.angles[0],
        Singularity::InverseSqrtRight,
        QTOL,
    )?;
    gap_residual = gap_residual.max(r0.value.re.abs());
    for m in 1..ell {
        let (a, b) = st.bands.gap(m);
        let r = integrate_endpoint_singular(|t, _, _| f(t), a, b, Singularity::InverseSqrtBoth, QTOL)?;
        gap_residual = gap_residual.max(r.value.re.abs());
    }

    // cumulative Im phi over the trailing gap, anchored at alpha
    let mut grid = Vec::with_capacity(samples + 1);
    for i in 1..=samples {
        grid.push(phi_a + (PI - phi_a) * i as f64 / (samples + 1) as f64);
    }
    grid.push(PI);
    let mut vals = Vec::with_capacity(grid.len());
    let first =
        integrate_endpoint_singular(|t, _, _| f(t), phi_a, grid[0], Singularity::InverseSqrtLeft, QTOL)?;
    let mut acc = first.value.re;
    vals.push(acc);
    for i in 1..grid.len() {
        acc += integrate(f, grid[i - 1], grid[i], QTOL)?.value.re;
        vals.push(acc);
    }
    gap_residual = gap_residual.max(vals[vals.len() - 1].abs());

    let imv = |t: f64| -> Result<f64, WhithamError> {
        if t <= grid[0] {
            let r =
                integrate_endpoint_singular(|u, _, _| f(u), phi_a, t, Singularity::InverseSqrtLeft, QTOL)?;
            return Ok(r.value.re);
        }
        let j = grid.partition_point(|&g| g <= t) - 1;
        Ok(vals[j] + integrate(f, grid[j], t, QTOL)?.value.re)
    };

    let interior = &vals[..vals.len() - 1];
    let trailing_min = 2.0 * interior.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let mut sign_changes = 0usize;
    let mut flip_at = None;
    let mut last = 0.0f64;
    for (i, &v) in interior.iter().enumerate() {
        if v.abs() <= 1e-11 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            sign_changes += 1;
            flip_at = Some(i);
        }
        last = v;
    }

    let mut landmarks = None;
    if !modulated && sign_changes == 1 {
        let k = flip_at.unwrap();
        let (mut a, mut b) = (grid[k - 1], grid[k]);
        let mut fa = interior[k - 1];
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            let fm = imv(mid)?;
            if (fm > 0.0) == (fa > 0.0) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
            if b - a < 1e-10 {
                break;
            }
        }
        let rho = 0.5 * (a + b);

        let kb = (0..k).min_by(|&i, &j| interior[i].total_cmp(&interior[j])).unwrap();
        let lo = if kb == 0 { phi_a } else { grid[kb - 1] };
        let (beta, beta_im) = golden_min(imv, lo, grid[kb + 1])?;

        let ks =
            (k..interior.len()).max_by(|&i, &j| interior[i].total_cmp(&interior[j])).unwrap();
        let hi = if ks + 1 < grid.len() { grid[ks + 1] } else { PI };
        let (s, s_neg) = golden_min(|t| Ok(-imv(t)?), grid[ks - 1], hi)?;
        landmarks = Some(GapLandmarks { rho, beta, beta_im, s, s_im: -s_neg });
    }

    // lens contours above every supported band
    let mut lens_thetas = Vec::with_capacity(ell * samples);
    for m in 1..=ell {
        let (a, b) = st.bands.band(m);
        for i in 0..samples {
            lens_thetas.push(a + (b - a) * (i as f64 + 0.5) / samples as f64);
        }
    }
    let lens_vals = im_phi_arc_sweep(st, xi, 1.0 + lens_offset, &lens_thetas)?;
    let lens_margin_min = lens_vals.iter().fold(f64::INFINITY, |m, &v| m.min(-v));

    // obstacle margin over the full band set of the gas
    let mut obstacle_margin_min = f64::INFINITY;
    for j in 1..=cfg.n_bands() {
        let (a, b) = (cfg.theta(2 * j - 1), cfg.theta(2 * j));
        for i in 0..samples {
            let t = a + (b - a) * (i as f64 + 0.5) / samples as f64;
            let im = if j < ell || t <= phi_a { 0.0 } else { imv(t)? };
            obstacle_margin_min =
                obstacle_margin_min.min(2.0 * im - external_field(t, xi).max(0.0));
        }
    }

    Ok(DiagnosticsReport {
        xi,
        modulated,
        gap_residual_max: gap_residual,
        lens_offset,
        lens_margin_min,
        trailing_min,
        sign_changes,
        obstacle_margin_min,
        landmarks,
    })
}

fn golden_min(
    f: impl Fn(f64) -> Result<f64, WhithamError>,
    mut a: f64,
    mut b: f64,
) -> Result<(f64, f64), WhithamError> {
    const GR: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - GR * (b - a);
    let mut x2 = a + GR * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > 1e-9 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GR * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GR * (b - a);
            f2 = f(x2)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}
