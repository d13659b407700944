//! Jacobi theta functions with purely imaginary modular parameter, their
//! central derivatives, and the elliptic dn built from them.

use num_complex::Complex64;

use crate::c64;
use crate::special::elliptic::ellip_k;

/// Theta functions theta_1..theta_4(u, q) for tau = i im_tau, im_tau > 0,
/// so the nome q = e^{-pi im_tau} is real in (0, 1). Arguments with large
/// imaginary part are reduced by the quasi-period pi tau before summing.
#[derive(Debug, Clone, Copy)]
pub struct Jtheta {
    im_tau: f64,
    q: f64,
}

impl Jtheta {
    pub fn new(im_tau: f64) -> Self {
        assert!(im_tau > 0.0, "need Im tau > 0, got {im_tau}");
        Jtheta { im_tau, q: (-std::f64::consts::PI * im_tau).exp() }
    }

    pub fn nome(&self) -> f64 {
        self.q
    }

    /// theta_j(u, q), j in 1..=4.
    pub fn th(&self, j: u8, u: Complex64) -> Complex64 {
        let pi = std::f64::consts::PI;
        // u = v + m pi tau; the series at v converges with terms
        // q^{n^2 - n} at worst.
        let m = (u.im / (pi * self.im_tau)).round();
        let v = u - c64(0.0, m * pi * self.im_tau);
        // theta_j(v + m pi tau) = s^m q^{-m^2} e^{-2 i m v} theta_j(v),
        // s = -1 for j = 1, 4.
        let mut pref = (-(pi * self.im_tau) * m * m).exp() * (c64(0.0, 2.0 * m) * v).exp();
        pref = 1.0 / pref;
        if (j == 1 || j == 4) && (m as i64) % 2 != 0 {
            pref = -pref;
        }
        pref * self.th_reduced(j, v)
    }

    fn th_reduced(&self, j: u8, v: Complex64) -> Complex64 {
        let mut sum = Complex64::default();
        match j {
            1 | 2 => {
                for n in 0..40 {
                    let nf = n as f64 + 0.5;
                    let qn = self.q.powf(nf * nf);
                    let term = if j == 1 {
                        let s = ((2.0 * n as f64 + 1.0) * v).sin();
                        if n % 2 == 0 { qn * s } else { -qn * s }
                    } else {
                        qn * ((2.0 * n as f64 + 1.0) * v).cos()
                    };
                    sum += term;
                    if qn < 1e-18 * (1.0 + sum.norm()) {
                        break;
                    }
                }
                2.0 * sum
            }
            3 | 4 => {
                for n in 1..40 {
                    let qn = self.q.powi(n * n);
                    let term = qn * ((2.0 * n as f64) * v).cos();
                    sum += if j == 4 && n % 2 != 0 { -term } else { term };
                    if qn < 1e-18 * (1.0 + sum.norm()) {
                        break;
                    }
                }
                1.0 + 2.0 * sum
            }
            _ => panic!("theta index {j} out of 1..=4"),
        }
    }

    /// theta_1'(0).
    pub fn th1_prime0(&self) -> f64 {
        let mut sum = 0.0;
        for n in 0..40 {
            let nf = n as f64 + 0.5;
            let w = (2.0 * n as f64 + 1.0) * self.q.powf(nf * nf);
            sum += if n % 2 == 0 { w } else { -w };
            if w < 1e-18 {
                break;
            }
        }
        2.0 * sum
    }

    /// theta_1'''(0).
    pub fn th1_ppp0(&self) -> f64 {
        let mut sum = 0.0;
        for n in 0..40 {
            let nf = n as f64 + 0.5;
            let c = 2.0 * n as f64 + 1.0;
            let w = c * c * c * self.q.powf(nf * nf);
            sum += if n % 2 == 0 { w } else { -w };
            if w < 1e-18 {
                break;
            }
        }
        -2.0 * sum
    }
}

/// Jacobi dn(u, k) for real u and modulus k, via DLMF 22.2.6:
/// dn = theta_4(0) theta_3(zeta) / (theta_3(0) theta_4(zeta)) with
/// zeta = pi u / (2K).
pub fn dn(u: f64, k: f64) -> f64 {
    if k == 0.0 {
        return 1.0;
    }
    let kk = ellip_k(k);
    let kp = ((1.0 - k) * (1.0 + k)).sqrt();
    let kkp = ellip_k(kp);
    let jt = Jtheta::new(kkp / kk);
    let zeta = c64(std::f64::consts::FRAC_PI_2 * u / kk, 0.0);
    let v = jt.th(4, Complex64::default()).re / jt.th(3, Complex64::default()).re
        * (jt.th(3, zeta) / jt.th(4, zeta)).re;
    v
}
