//! The genus-g Riemann theta function
//! Theta(z; tau) = sum over n in Z^g of exp(i pi n.tau n + 2 pi i n.z),
//! evaluated after reduction of z by the period lattice so the lattice sum
//! stays well conditioned for any argument.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::c64;

#[derive(Debug, Error)]
pub enum ThetaError {
    #[error("period matrix not symmetric: asymmetry {asym:.3e}")]
    NotSymmetric { asym: f64 },
    #[error("period matrix ill conditioned: min eigenvalue of Im tau is {min_eig:.3e}")]
    IllConditionedTau { min_eig: f64 },
}

#[derive(Debug, Clone)]
pub struct RiemannTheta {
    g: usize,
    tau: DMatrix<Complex64>,
    im: DMatrix<f64>,
    im_inv: DMatrix<f64>,
    min_eig: f64,
}

impl RiemannTheta {
    /// Accepts a symmetric tau with positive definite imaginary part.
    /// Tiny asymmetry (below 1e-9) is averaged away; larger asymmetry and
    /// near-singular imaginary parts are rejected.
    pub fn new(tau: DMatrix<Complex64>) -> Result<Self, ThetaError> {
        let g = tau.nrows();
        assert_eq!(g, tau.ncols());
        let mut asym = 0.0_f64;
        for i in 0..g {
            for j in (i + 1)..g {
                asym = asym.max((tau[(i, j)] - tau[(j, i)]).norm());
            }
        }
        if asym >= 1e-9 {
            return Err(ThetaError::NotSymmetric { asym });
        }
        let tau = (&tau + tau.transpose()).scale(0.5);
        let im = tau.map(|v| v.im);
        let eig = nalgebra::SymmetricEigen::new(im.clone());
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < 1e-8 {
            return Err(ThetaError::IllConditionedTau { min_eig });
        }
        let im_inv = im.clone().try_inverse().expect("positive definite");
        Ok(RiemannTheta { g, tau, im, im_inv, min_eig })
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    pub fn tau(&self) -> &DMatrix<Complex64> {
        &self.tau
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.g);
        // Reduce by tau p + m: p kills the imaginary drift, m the real part.
        let imz = DVector::from_iterator(self.g, z.iter().map(|v| v.im));
        let p: Vec<f64> = (&self.im_inv * &imz).iter().map(|v| v.round()).collect();
        let mut z0: Vec<Complex64> = z.to_vec();
        for i in 0..self.g {
            for j in 0..self.g {
                z0[i] -= self.tau[(i, j)] * p[j];
            }
        }
        for v in z0.iter_mut() {
            *v -= v.re.round();
        }
        // Theta(z0 + tau p + m) = exp(i pi p.tau p + 2 pi i p.z0) ... inverted:
        // value at z is exp(-i pi p.tau p - 2 pi i p.z0)^{-1}; see below.
        // Theta(z) = exp(i pi p.tau p + 2 pi i p.z0) requires care: use
        // Theta(z0 + tau p) = exp(-i pi p.tau p - 2 pi i p.z0) Theta(z0).
        let mut phase = Complex64::default();
        for i in 0..self.g {
            phase += -2.0 * std::f64::consts::PI * c64(0.0, 1.0) * p[i] * z0[i];
            for j in 0..self.g {
                phase -= std::f64::consts::PI * c64(0.0, 1.0) * p[i] * self.tau[(i, j)] * p[j];
            }
        }
        // The dropped integer part m contributes nothing.
        phase.exp() * self.raw_sum(&z0)
    }

    fn raw_sum(&self, z0: &[Complex64]) -> Complex64 {
        let lam = self.min_eig;
        let c = z0.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
        let pi = std::f64::consts::PI;
        let b = ((c + (c * c + 40.0 * lam / pi).sqrt()) / lam).ceil() as i64;
        let b = b.clamp(2, 60);
        let mut idx = vec![-b; self.g];
        let mut total = Complex64::default();
        loop {
            let mut expo = Complex64::default();
            for i in 0..self.g {
                expo += 2.0 * pi * c64(0.0, 1.0) * (idx[i] as f64) * z0[i];
                for j in 0..self.g {
                    expo += pi
                        * c64(0.0, 1.0)
                        * (idx[i] as f64)
                        * self.tau[(i, j)]
                        * (idx[j] as f64);
                }
            }
            total += expo.exp();
            // odometer over the box [-b, b]^g
            let mut k = 0;
            loop {
                if k == self.g {
                    return total;
                }
                idx[k] += 1;
                if idx[k] <= b {
                    break;
                }
                idx[k] = -b;
                k += 1;
            }
        }
    }

    /// Im tau, exposed for conditioning diagnostics.
    pub fn im_part(&self) -> &DMatrix<f64> {
        &self.im
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::jacobi::Jtheta;

    fn fig2_tau() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[
                c64(0.0, 1.226_840_066_517_649_3),
                c64(0.0, 0.842_629_794_225_866_35),
                c64(0.0, 0.842_629_794_225_866_35),
                c64(0.0, 1.689_534_531_622_785_5),
            ],
        )
    }

    fn close(a: Complex64, b: Complex64, tol: f64, what: &str) {
        assert!((a - b).norm() <= tol, "{what}: {a} vs {b}");
    }

    #[test]
    fn genus_one_reduces_to_theta3() {
        let im_tau = 1.352_464_374_153_653_8;
        let th = RiemannTheta::new(DMatrix::from_row_slice(1, 1, &[c64(0.0, im_tau)])).unwrap();
        let jt = Jtheta::new(im_tau);
        for &z in &[c64(0.0, 0.0), c64(0.3, 0.2), c64(-1.7, 0.9), c64(0.25, -1.4)] {
            close(
                th.eval(&[z]),
                jt.th(3, std::f64::consts::PI * z),
                1e-12 * jt.th(3, std::f64::consts::PI * z).norm(),
                "theta3 match",
            );
        }
    }

    #[test]
    fn genus_two_frozen_values() {
        let th = RiemannTheta::new(fig2_tau()).unwrap();
        close(
            th.eval(&[c64(0.21, 0.12), c64(-0.33, 0.4)]),
            c64(0.862_963_783_594_008_32, -0.010_151_829_885_665_163),
            1e-14,
            "interior point",
        );
        close(
            th.eval(&[Complex64::default(), Complex64::default()]),
            c64(1.094_181_586_365_553_9, 0.0),
            1e-14,
            "origin",
        );
    }

    #[test]
    fn lattice_quasi_periodicity() {
        let tau = fig2_tau();
        let th = RiemannTheta::new(tau.clone()).unwrap();
        let z = [c64(0.17, -0.23), c64(-0.4, 0.31)];
        let base = th.eval(&z);
        // integer shifts leave theta invariant
        let ze = [z[0] + 1.0, z[1] - 2.0];
        close(th.eval(&ze), base, 1e-10 * base.norm(), "integer shift");
        // tau-column shift j: Theta(z + tau_j) = exp(-i pi tau_jj - 2 pi i z_j) Theta(z)
        for j in 0..2 {
            let zt = [z[0] + tau[(0, j)], z[1] + tau[(1, j)]];
            let factor =
                (-std::f64::consts::PI * c64(0.0, 1.0) * (tau[(j, j)] + 2.0 * z[j])).exp();
            close(th.eval(&zt), factor * base, 1e-10 * (factor * base).norm(), "tau shift");
        }
        // evenness
        let zn = [-z[0], -z[1]];
        close(th.eval(&zn), base, 1e-12 * base.norm(), "even");
    }

    #[test]
    fn rejects_bad_tau() {
        let r = RiemannTheta::new(DMatrix::from_row_slice(1, 1, &[c64(0.0, 1e-10)]));
        assert!(matches!(r, Err(ThetaError::IllConditionedTau { .. })));
        let r = RiemannTheta::new(DMatrix::from_row_slice(
            2,
            2,
            &[c64(0.0, 1.0), c64(0.1, 0.5), c64(0.0, 0.5), c64(0.0, 1.0)],
        ));
        assert!(matches!(r, Err(ThetaError::NotSymmetric { .. })));
    }
}
