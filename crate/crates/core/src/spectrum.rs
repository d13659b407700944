//! Spectral data of a dark soliton gas.
//!
//! A gas of genus `N` is prescribed by `2N` points `eta_j = exp(i theta_j)`
//! on the upper unit circle, `0 < theta_1 < ... < theta_{2N} < pi`, plus an
//! interpolation (reflection) function `r` that is analytic near the bands
//! and obeys the Schwarz symmetry `r(z) = conj(r(conj(z)^{-1}))`, hence is
//! real and positive on the unit circle. Consecutive pairs
//! `(eta_{2j-1}, eta_{2j})` bound the bands; the complementary arcs are the
//! gaps. The sentinels `eta_0 = 1` and `eta_{2N+1} = -1` close the gap list.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::c64;

/// Minimal admissible separation (radians) between consecutive angles,
/// and from the endpoints 0 and pi. Below this the branch points collide
/// numerically and every downstream quadrature degenerates.
pub const MIN_ANGLE_GAP: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("need a positive even number of angles, got {0}")]
    OddCount(usize),
    #[error("angle {index} (= {value} pi) outside the open interval (0, 1)")]
    OutOfRange { index: usize, value: f64 },
    #[error("angles must increase strictly: violation at angle {index}")]
    NotIncreasing { index: usize },
    #[error("separation {gap:.3e} rad at angle {index} is below {MIN_ANGLE_GAP:.0e}")]
    GapTooSmall { index: usize, gap: f64 },
    #[error("reflection must be positive, got {0}")]
    BadReflection(f64),
}

/// Interpolation function `r` along the bands.
///
/// Both variants are analytic in an annulus around the unit circle and
/// satisfy the Schwarz symmetry, so `ln r` is real on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reflection {
    /// `r(z) = value`. The value 1.0 makes every Szego quantity trivial.
    Constant { value: f64 },
    /// `r(z) = exp(amp (z + 1/z) / 2)`, i.e. `r = exp(amp cos theta)` on the
    /// circle. Exercises the nontrivial Szego machinery in tests.
    ExpReK { amp: f64 },
}

impl Reflection {
    pub fn unit() -> Self {
        Reflection::Constant { value: 1.0 }
    }

    /// True when `r == 1` identically, which short-circuits all Szego phases.
    pub fn is_unit(&self) -> bool {
        matches!(self, Reflection::Constant { value } if *value == 1.0)
    }

    /// Analytic continuation of `ln r` off the unit circle.
    pub fn ln_r(&self, z: Complex64) -> Complex64 {
        match self {
            Reflection::Constant { value } => c64(value.ln(), 0.0),
            Reflection::ExpReK { amp } => 0.5 * amp * (z + 1.0 / z),
        }
    }
}

/// Validated gas spectrum: angles are stored as fractions of pi exactly as
/// configured, so serialization round-trips bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub angles_over_pi: Vec<f64>,
    #[serde(default = "Reflection::unit")]
    pub reflection: Reflection,
}

impl SpectrumConfig {
    pub fn new(angles_over_pi: Vec<f64>, reflection: Reflection) -> Result<Self, SpectrumError> {
        let cfg = SpectrumConfig { angles_over_pi, reflection };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_unit_reflection(angles_over_pi: &[f64]) -> Result<Self, SpectrumError> {
        Self::new(angles_over_pi.to_vec(), Reflection::unit())
    }

    pub fn validate(&self) -> Result<(), SpectrumError> {
        let n = self.angles_over_pi.len();
        if n == 0 || n % 2 != 0 {
            return Err(SpectrumError::OddCount(n));
        }
        for (i, &a) in self.angles_over_pi.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) || !a.is_finite() {
                return Err(SpectrumError::OutOfRange { index: i + 1, value: a });
            }
            if i > 0 && a <= self.angles_over_pi[i - 1] {
                return Err(SpectrumError::NotIncreasing { index: i + 1 });
            }
        }
        let mut bounds = Vec::with_capacity(n + 2);
        bounds.push(0.0);
        bounds.extend(self.angles_over_pi.iter().map(|a| a * std::f64::consts::PI));
        bounds.push(std::f64::consts::PI);
        for (i, w) in bounds.windows(2).enumerate() {
            let gap = w[1] - w[0];
            if gap < MIN_ANGLE_GAP {
                return Err(SpectrumError::GapTooSmall { index: i + 1, gap });
            }
        }
        if let Reflection::Constant { value } = self.reflection {
            if !(value > 0.0) || !value.is_finite() {
                return Err(SpectrumError::BadReflection(value));
            }
        }
        Ok(())
    }

    /// Number of bands `N`.
    pub fn n_bands(&self) -> usize {
        self.angles_over_pi.len() / 2
    }

    /// `theta_j` in radians, `j = 1..=2N`. Sentinels: `theta(0) = 0`,
    /// `theta(2N+1) = pi`.
    pub fn theta(&self, j: usize) -> f64 {
        let n2 = self.angles_over_pi.len();
        if j == 0 {
            0.0
        } else if j == n2 + 1 {
            std::f64::consts::PI
        } else {
            self.angles_over_pi[j - 1] * std::f64::consts::PI
        }
    }

    /// `eta_j` on the unit circle, sentinels included.
    pub fn eta(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.theta(j))
    }

    /// `Re eta_j`.
    pub fn eta_re(&self, j: usize) -> f64 {
        self.theta(j).cos()
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: SpectrumConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum serializes")
    }
}

/// Branch points of one genus-`ell` surface: the fixed points
/// `eta_1 .. eta_{2 ell - 1}` together with the (possibly modulated) last
/// endpoint `alpha` on the arc `(theta_{2 ell - 1}, theta_{2 ell}]`.
///
/// Bands are the arcs `(angles[2j], angles[2j+1])` for `j = 0..ell`; the
/// gaps are the complementary arcs, the last one running from `alpha` to
/// `-1`. Everything downstream (radicals, periods, phases) consumes this
/// view rather than the raw spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSystem {
    /// `2 ell` ascending angles in `(0, pi)`: `theta_1, .., theta_{2ell-1}, phi`.
    pub angles: Vec<f64>,
}

impl BandSystem {
    /// Genus-`ell` system with modulated endpoint at angle `phi`,
    /// `theta_{2 ell - 1} < phi <= theta_{2 ell}`.
    pub fn modulated(cfg: &SpectrumConfig, ell: usize, phi: f64) -> Self {
        assert!(ell >= 1 && ell <= cfg.n_bands());
        assert!(
            phi > cfg.theta(2 * ell - 1) && phi <= cfg.theta(2 * ell),
            "alpha angle {phi} outside band {ell}"
        );
        let mut angles: Vec<f64> = (1..2 * ell).map(|j| cfg.theta(j)).collect();
        angles.push(phi);
        BandSystem { angles }
    }

    /// Genus-`ell` system with `alpha = eta_{2 ell}` (unmodulated).
    pub fn unmodulated(cfg: &SpectrumConfig, ell: usize) -> Self {
        Self::modulated(cfg, ell, cfg.theta(2 * ell))
    }

    pub fn genus(&self) -> usize {
        self.angles.len() / 2
    }

    /// Angle of the last endpoint `alpha`.
    pub fn phi_alpha(&self) -> f64 {
        *self.angles.last().unwrap()
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.phi_alpha())
    }

    /// Band `m` (1-based) as an angle interval `(a, b)`.
    pub fn band(&self, m: usize) -> (f64, f64) {
        (self.angles[2 * m - 2], self.angles[2 * m - 1])
    }

    /// Gap `m` (1-based) as an angle interval: for `m < ell` between bands
    /// `m` and `m+1`, for `m = ell` from `alpha` to `pi`.
    pub fn gap(&self, m: usize) -> (f64, f64) {
        let ell = self.genus();
        if m < ell {
            (self.angles[2 * m - 1], self.angles[2 * m])
        } else {
            assert_eq!(m, ell);
            (self.phi_alpha(), std::f64::consts::PI)
        }
    }

    /// Upper-half-plane branch points `eta_1, .., eta_{2 ell - 1}, alpha`.
    pub fn upper_points(&self) -> Vec<Complex64> {
        self.angles.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }

    /// Real branch points of the flattened curve, ascending:
    /// `-1 < cos phi < cos theta_{2 ell - 1} < ... < cos theta_1 < 1`.
    pub fn k_branch_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = Vec::with_capacity(self.angles.len() + 2);
        pts.push(-1.0);
        pts.extend(self.angles.iter().rev().map(|t| t.cos()));
        pts.push(1.0);
        pts
    }
}

/// Joukowski map `k(z) = (z + 1/z) / 2` flattening the unit circle onto
/// `[-1, 1]`.
pub fn joukowski(z: Complex64) -> Complex64 {
    0.5 * (z + 1.0 / z)
}
