//! Branch-cut square roots attached to a band system.
//!
//! Two radicals drive everything downstream: `UnitRadical` lives on the
//! z-plane with cuts along the spectral bands of the unit circle (and their
//! conjugates), `KRadical` lives on the k-plane with cuts along the real
//! gap images. Both expose exact one-sided boundary values on their cuts;
//! no limiting offsets are involved.

use num_complex::Complex64;

use crate::c64;
use crate::spectrum::BandSystem;

/// Boundary side of an oriented cut. `Plus` is the limit from inside the
/// unit disk (z-plane) or from the upper half plane (k-plane).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// sqrt((z - p)(z - q)) with branch cut on the straight chord [p, q],
/// behaving like +z at infinity relative to the half-sum of the roots.
fn chord_sqrt(z: Complex64, p: Complex64, q: Complex64) -> Complex64 {
    (z - p) * ((z - q) / (z - p)).sqrt()
}

/// sqrt((z - e^{ia})(z - e^{ib})) with the cut moved from the chord to the
/// circular arc a..b: flip sign on the lens between chord and arc. The lens
/// is the set of points inside the unit circle lying on the same side of the
/// chord as the arc midpoint.
fn pair_arc(z: Complex64, a: f64, b: f64) -> Complex64 {
    let p = Complex64::from_polar(1.0, a);
    let q = Complex64::from_polar(1.0, b);
    let w = chord_sqrt(z, p, q);
    if z.norm_sqr() < 1.0 {
        let mid = Complex64::from_polar(1.0, 0.5 * (a + b));
        let e = (q - p).conj();
        if (e * (z - p)).im * (e * (mid - p)).im > 0.0 {
            return -w;
        }
    }
    w
}

/// The z-plane radical: square root of the monic polynomial vanishing at
/// all 4l branch points (band endpoints and conjugates), cut along the
/// bands, normalized by `eval(0) = 1` and growth `z^{2l}` at infinity.
#[derive(Debug, Clone)]
pub struct UnitRadical {
    /// Angle intervals of the cut arcs: the l upper bands followed by
    /// their conjugates, each as (low, high).
    arcs: Vec<(f64, f64)>,
    genus: usize,
    /// The 2l upper branch angles in ascending order.
    upper: Vec<f64>,
    /// Sign of the real form of e^{-il theta} R on each of the 2l + 1
    /// intervals of the upper semicircle cut by `upper` (even indices are
    /// gaps, odd are bands), fixed once here from midpoint values.
    signs: Vec<f64>,
}

impl UnitRadical {
    pub fn new(bs: &BandSystem) -> Self {
        let genus = bs.genus();
        let mut arcs = Vec::with_capacity(2 * genus);
        for m in 1..=genus {
            arcs.push(bs.band(m));
        }
        for m in 1..=genus {
            let (a, b) = bs.band(m);
            arcs.push((-b, -a));
        }
        let mut upper = Vec::with_capacity(2 * genus);
        for m in 1..=genus {
            let (a, b) = bs.band(m);
            upper.push(a);
            upper.push(b);
        }
        let mut r = UnitRadical { arcs, genus, upper, signs: Vec::new() };
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(&r.upper);
        bounds.push(std::f64::consts::PI);
        let signs: Vec<f64> = (0..2 * genus + 1)
            .map(|i| {
                let mid = 0.5 * (bounds[i] + bounds[i + 1]);
                let v = Complex64::from_polar(1.0, -(genus as f64) * mid)
                    * if i % 2 == 0 {
                        r.eval(Complex64::from_polar(1.0, mid))
                    } else {
                        r.eval_side(mid, Side::Plus)
                    };
                if i % 2 == 0 {
                    v.re.signum()
                } else {
                    v.im.signum()
                }
            })
            .collect();
        r.signs = signs;
        r
    }

    /// Index of the upper-semicircle interval containing `theta`; even
    /// means gap, odd means band.
    fn interval(&self, theta: f64) -> usize {
        self.upper.partition_point(|&u| u < theta)
    }

    /// (e^{-il theta} R)^2 on the circle, as the exact product
    /// prod_j (2 cos theta - 2 cos u_j) = prod_j 4 sin((u_j + theta)/2)
    /// sin((u_j - theta)/2), free of cancellation near branch points.
    fn squared_on_circle(&self, theta: f64) -> f64 {
        self.upper.iter().fold(1.0, |acc, &u| {
            acc * 4.0 * (0.5 * (u + theta)).sin() * (0.5 * (u - theta)).sin()
        })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Value off the cuts. On-cut points hit the sign ambiguity of the
    /// lens test; use `eval_side` there.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.arcs
            .iter()
            .fold(c64(1.0, 0.0), |acc, &(a, b)| acc * pair_arc(z, a, b))
    }

    /// Exact boundary value at e^{i theta} on the cut containing `theta`.
    pub fn eval_side(&self, theta: f64, side: Side) -> Complex64 {
        let z = Complex64::from_polar(1.0, theta);
        let mut hit = false;
        let mut acc = c64(1.0, 0.0);
        for &(a, b) in &self.arcs {
            if theta > a && theta < b {
                assert!(!hit, "arcs are disjoint");
                hit = true;
                let p = Complex64::from_polar(1.0, a);
                let q = Complex64::from_polar(1.0, b);
                let w = chord_sqrt(z, p, q);
                acc *= match side {
                    Side::Plus => -w,
                    Side::Minus => w,
                };
            } else {
                acc *= pair_arc(z, a, b);
            }
        }
        assert!(hit, "theta {theta} lies on no band");
        acc
    }

    /// On a gap e^{i theta} the combination z^{-l} R(z) is real.
    pub fn rho_gap(&self, theta: f64) -> f64 {
        let i = self.interval(theta);
        debug_assert!(i % 2 == 0, "theta {theta} lies on a band, not a gap");
        let sq = self.squared_on_circle(theta);
        debug_assert!(sq >= 0.0, "gap square negative: {sq}");
        self.signs[i] * sq.sqrt()
    }

    /// `rho_gap` at `theta = a + dl = b - dr` for a gap `(a, b)`, with the
    /// endpoint offsets carried exactly. Branch-angle differences are
    /// formed against the nearer gap end, so the value stays accurate for
    /// offsets far below angle roundoff, including a second branch point
    /// crowding an endpoint when a band nearly collapses.
    pub fn rho_gap_offsets(&self, a: f64, dl: f64, b: f64, dr: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let i = self.interval(mid);
        debug_assert!(i % 2 == 0, "interval ({a}, {b}) is not a gap");
        let theta = a + dl;
        let sq = self.upper.iter().fold(1.0, |acc, &u| {
            let du = if u <= mid { (u - a) - dl } else { (u - b) + dr };
            acc * 4.0 * (0.5 * (u + theta)).sin() * (0.5 * du).sin()
        });
        debug_assert!(sq >= 0.0, "gap square negative: {sq}");
        self.signs[i] * sq.sqrt()
    }

    /// `rho_band` at `theta = a + dl = b - dr` for a band `(a, b)`, with
    /// the endpoint offsets carried exactly, mirroring `rho_gap_offsets`.
    pub fn rho_band_offsets(&self, a: f64, dl: f64, b: f64, dr: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let i = self.interval(mid);
        debug_assert!(i % 2 == 1, "interval ({a}, {b}) is not a band");
        let theta = a + dl;
        let sq = self.upper.iter().fold(1.0, |acc, &u| {
            let du = if u <= mid { (u - a) - dl } else { (u - b) + dr };
            acc * 4.0 * (0.5 * (u + theta)).sin() * (0.5 * du).sin()
        });
        debug_assert!(sq <= 0.0, "band square positive: {sq}");
        self.signs[i] * (-sq).sqrt()
    }

    /// On a band the plus boundary value factors as
    /// R_+ = i e^{i l theta} rho with rho real; returns rho.
    pub fn rho_band(&self, theta: f64) -> f64 {
        let i = self.interval(theta);
        debug_assert!(i % 2 == 1, "theta {theta} lies on a gap, not a band");
        let sq = self.squared_on_circle(theta);
        debug_assert!(sq <= 0.0, "band square positive: {sq}");
        self.signs[i] * (-sq).sqrt()
    }
}

/// The k-plane radical: square root of the degree 2l+2 polynomial with the
/// real branch points of the band system, cut along the l+1 gap images,
/// positive for k > 1 and growing like k^{l+1}.
#[derive(Debug, Clone)]
pub struct KRadical {
    cuts: Vec<(f64, f64)>,
}

impl KRadical {
    pub fn new(bs: &BandSystem) -> Self {
        let b = bs.k_branch_points();
        assert_eq!(b.len() % 2, 0);
        let cuts = b.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        KRadical { cuts }
    }

    /// Cut intervals in ascending order; the last one touches k = 1.
    pub fn cuts(&self) -> &[(f64, f64)] {
        &self.cuts
    }

    pub fn genus(&self) -> usize {
        self.cuts.len() - 1
    }

    fn pair(k: Complex64, p: f64, q: f64) -> Complex64 {
        (k - p) * ((k - q) / (k - p)).sqrt()
    }

    /// Value off the cuts (real k inside a cut lands on the sqrt branch
    /// line; use `eval_side`).
    pub fn eval(&self, k: Complex64) -> Complex64 {
        self.cuts
            .iter()
            .fold(c64(1.0, 0.0), |acc, &(p, q)| acc * Self::pair(k, p, q))
    }

    fn containing_cut(&self, x: f64) -> usize {
        self.cuts
            .iter()
            .position(|&(p, q)| x > p && x < q)
            .unwrap_or_else(|| panic!("x = {x} lies on no cut"))
    }

    /// Exact boundary value on the cut containing real `x`; the plus side
    /// (from above) is i sqrt((x-p)(q-x)) times the remaining factors.
    pub fn eval_side(&self, x: f64, side: Side) -> Complex64 {
        let m = self.containing_cut(x);
        let mut acc = match side {
            Side::Plus => c64(0.0, 1.0),
            Side::Minus => c64(0.0, -1.0),
        };
        let (p, q) = self.cuts[m];
        acc *= ((x - p) * (q - x)).sqrt();
        for (i, &(p, q)) in self.cuts.iter().enumerate() {
            if i != m {
                acc *= Self::pair(c64(x, 0.0), p, q);
            }
        }
        acc
    }

    /// The quarter-power ratio product: h(k) = prod over cuts of
    /// ((k - q)/(k - p))^{1/4}. Tends to 1 at infinity; across every cut
    /// h_+ = i h_-, which is exactly what the theta-matrix jumps need.
    pub fn h(&self, k: Complex64) -> Complex64 {
        self.cuts
            .iter()
            .fold(c64(1.0, 0.0), |acc, &(p, q)| acc * ((k - q) / (k - p)).powf(0.25))
    }

    /// Boundary value of `h` on the cut containing real `x`.
    pub fn h_side(&self, x: f64, side: Side) -> Complex64 {
        let m = self.containing_cut(x);
        let (p, q) = self.cuts[m];
        let phase = match side {
            Side::Plus => Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4),
            Side::Minus => Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4),
        };
        let mut acc = phase * ((q - x) / (x - p)).powf(0.25);
        for (i, &(p, q)) in self.cuts.iter().enumerate() {
            if i != m {
                acc *= ((x - q) / (x - p)).powf(0.25);
            }
        }
        acc
    }
}
