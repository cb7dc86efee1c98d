//! Legendre polynomials and fully normalized associated Legendre functions.
//!
//! `theta_part(l, m, ·)` returns the colatitude factor `S_lm(theta)` of the
//! real orthonormal spherical harmonics,
//!
//! ```text
//! Y_{l,0}       = S_{l,0}(theta)
//! Y_{l,m}^cos   = sqrt(2) * S_{l,m}(theta) * cos(m phi)   (m >= 1)
//! Y_{l,m}^sin   = sqrt(2) * S_{l,m}(theta) * sin(m phi)   (m >= 1)
//! ```
//!
//! so that the harmonics have unit L2 norm on the sphere. The Condon–Shortley
//! phase is omitted; all `S_{l,l}` are nonnegative for `theta` in `[0, pi]`.
//!
//! Evaluation climbs the diagonal `S_{m,m}` and then runs the normalized
//! three-term recurrence in the degree. The recurrence coefficients are O(1),
//! which keeps the scheme stable to degrees far beyond the cap used here.

use std::f64::consts::PI;

/// Legendre polynomial `P_l(x)` by the three-term recurrence.
pub fn legendre_p(l: u32, x: f64) -> f64 {
    let mut p0 = 1.0;
    if l == 0 {
        return p0;
    }
    let mut p1 = x;
    for k in 2..=l {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Colatitude factor `S_{l,m}(theta)` evaluated from `(cos theta, sin theta)`.
///
/// Requires `m <= l`. Runs in O(l).
pub fn theta_part(l: u32, m: u32, cos_theta: f64, sin_theta: f64) -> f64 {
    assert!(m <= l, "order m={m} exceeds degree l={l}");
    // Climb the diagonal to S_{m,m}.
    let mut smm = (4.0 * PI).sqrt().recip();
    for k in 1..=m {
        let kf = k as f64;
        smm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * sin_theta;
    }
    if l == m {
        return smm;
    }
    // First off-diagonal step, then the degree recurrence.
    let mut prev = smm;
    let mut cur = (2.0 * m as f64 + 3.0).sqrt() * cos_theta * smm;
    for k in (m + 2)..=l {
        let kf = k as f64;
        let mf = m as f64;
        let a = ((4.0 * kf * kf - 1.0) / (kf * kf - mf * mf)).sqrt();
        let b =
            (((kf - 1.0) * (kf - 1.0) - mf * mf) / (4.0 * (kf - 1.0) * (kf - 1.0) - 1.0)).sqrt();
        let next = a * (cos_theta * cur - b * prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Table of `S_{l,m}(theta)` for all `l <= l_max`, `m <= l`.
///
/// Costs O(l_max^2); use it when a point needs many degrees or orders at once.
pub struct ThetaTable {
    l_max: u32,
    values: Vec<f64>,
}

impl ThetaTable {
    pub fn build(l_max: u32, cos_theta: f64, sin_theta: f64) -> Self {
        let n = ((l_max as usize + 1) * (l_max as usize + 2)) / 2;
        let mut values = vec![0.0; n];
        let idx = |l: u32, m: u32| (l as usize * (l as usize + 1)) / 2 + m as usize;

        values[0] = (4.0 * PI).sqrt().recip();
        for m in 1..=l_max {
            let mf = m as f64;
            values[idx(m, m)] =
                ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_theta * values[idx(m - 1, m - 1)];
        }
        for m in 0..l_max {
            let mf = m as f64;
            values[idx(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * cos_theta * values[idx(m, m)];
            for l in (m + 2)..=l_max {
                let lf = l as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                values[idx(l, m)] =
                    a * (cos_theta * values[idx(l - 1, m)] - b * values[idx(l - 2, m)]);
            }
        }
        ThetaTable { l_max, values }
    }

    #[inline]
    pub fn get(&self, l: u32, m: u32) -> f64 {
        debug_assert!(l <= self.l_max && m <= l);
        self.values[(l as usize * (l as usize + 1)) / 2 + m as usize]
    }
}
