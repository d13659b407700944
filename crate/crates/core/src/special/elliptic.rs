//! Complete elliptic integrals K and E by the arithmetic-geometric mean,
//! in the modulus convention of DLMF 19.2: K(k) = int_0^{pi/2}
//! (1 - k^2 sin^2 t)^{-1/2} dt.

/// K(k) for modulus 0 <= k < 1.
pub fn ellip_k(k: f64) -> f64 {
    ellip_ke(k).0
}

/// (K(k), E(k)) in one AGM pass; both accurate to a few ulp.
pub fn ellip_ke(k: f64) -> (f64, f64) {
    assert!((0.0..1.0).contains(&k), "modulus {k} outside [0, 1)");
    let kp = ((1.0 - k) * (1.0 + k)).sqrt();
    let mut a = 1.0_f64;
    let mut b = kp;
    let mut c = k;
    let mut csum = 0.5 * c * c;
    let mut pow = 0.5;
    for _ in 0..40 {
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        a = an;
        b = bn;
        pow *= 2.0;
        csum += pow * c * c;
    }
    let kk = std::f64::consts::FRAC_PI_2 / a;
    (kk, kk * (1.0 - csum))
}
