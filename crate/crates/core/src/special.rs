//! Special functions: the scaled exponential integral, the Faddeev Green's
//! function, and smooth radial cutoffs.

use std::f64::consts::{FRAC_1_PI, PI};

use num_complex::Complex64;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `exp(u) E1(u)` on the principal branch of `E1`.
///
/// The side of the branch cut on the negative real axis is taken from the
/// sign bit of `Im u`, so `u` and `u.conj()` always land on opposite sides.
/// Returns infinity at `u = 0`.
pub fn scaled_e1(u: Complex64) -> Complex64 {
    let r = u.norm();
    if r == 0.0 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    // Left sector |arg u| >= 3pi/4, where the continued fraction is slow.
    let left = u.re < 0.0 && u.im.abs() <= -u.re;
    if r <= 2.0 || (left && r <= 40.0) {
        u.exp() * e1_series(u)
    } else if r >= 40.0 {
        scaled_e1_asymptotic(u)
    } else {
        scaled_e1_continued_fraction(u)
    }
}

/// `E1(u) = -gamma - ln u - sum_{n>=1} (-u)^n / (n n!)`.
fn e1_series(u: Complex64) -> Complex64 {
    let mut term = ONE;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = 1.0;
    loop {
        term *= -u / n;
        let add = term / n;
        sum += add;
        if add.norm() <= 1e-17 * sum.norm().max(1e-300) || n > 400.0 {
            break;
        }
        n += 1.0;
    }
    -EULER_GAMMA - u.ln() - sum
}

/// Modified Lentz evaluation of
/// `1/(u + 1 - 1/(u + 3 - 4/(u + 5 - 9/(u + 7 - ...))))`.
fn scaled_e1_continued_fraction(u: Complex64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = u + 1.0;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..2000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        if c.norm() < TINY {
            c = Complex64::new(TINY, 0.0);
        }
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

/// Optimally truncated asymptotic series plus the smoothed Stokes term
/// `-i pi sign(Im u) erfc(theta sqrt(|u|/2)) exp(u)`, `theta = pi - |arg u|`.
fn scaled_e1_asymptotic(u: Complex64) -> Complex64 {
    let inv = 1.0 / u;
    let mut term = inv;
    let mut sum = term;
    let mut prev = term.norm();
    let mut n = 1.0;
    loop {
        let next = -term * n * inv;
        let mag = next.norm();
        if mag >= prev || mag <= 1e-18 * sum.norm() {
            break;
        }
        sum += next;
        term = next;
        prev = mag;
        n += 1.0;
    }
    if u.re < 0.0 {
        let theta = PI - u.im.abs().atan2(u.re);
        let sign = if u.im.is_sign_negative() { -1.0 } else { 1.0 };
        let weight = libm::erfc(theta * (u.norm() / 2.0).sqrt());
        sum -= I * (PI * sign * weight) * u.exp();
    }
    sum
}

/// Faddeev Green's function at `k = 1`: the fundamental solution of
/// `-Laplacian - 4i dbar`, evaluated at `w != 0`.
///
/// `g1(w) = (1/4pi) [S(-i w) + exp(-2i Re w) S(i conj w)]` with
/// `S(u) = exp(u) E1(u)`. The general kernel is `g_k(z) = g1(k z)`.
pub fn faddeev_g1(w: Complex64) -> Complex64 {
    // The two arguments are exact conjugates, including the sign of a zero
    // imaginary part, and S(conj u) = conj S(u), so one evaluation suffices.
    let s = scaled_e1(Complex64::new(w.im, -w.re));
    let phase = Complex64::from_polar(1.0, -2.0 * w.re);
    (s + phase * s.conj()) * (0.25 * FRAC_1_PI)
}

/// Smooth radial cutoff equal to 1 for `r <= inner` and 0 for `r >= outer`,
/// with an error-function transition. Derivatives are returned analytically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCutoff {
    inner: f64,
    outer: f64,
    centre: f64,
    width: f64,
}

impl SmoothCutoff {
    /// The transition width is one twelfth of the annulus so that the
    /// error-function tails at both ends are below `1e-16`.
    pub fn new(inner: f64, outer: f64) -> Self {
        assert!(outer > inner && inner >= 0.0, "cutoff needs 0 <= inner < outer");
        Self {
            inner,
            outer,
            centre: 0.5 * (inner + outer),
            width: (outer - inner) / 12.0,
        }
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn value(&self, r: f64) -> f64 {
        if r <= self.inner {
            1.0
        } else if r >= self.outer {
            0.0
        } else {
            0.5 * libm::erfc((r - self.centre) / self.width)
        }
    }

    /// First and second radial derivatives.
    pub fn derivatives(&self, r: f64) -> (f64, f64) {
        if r <= self.inner || r >= self.outer {
            return (0.0, 0.0);
        }
        let x = (r - self.centre) / self.width;
        let d1 = -(-x * x).exp() / (self.width * PI.sqrt());
        let d2 = -d1 * 2.0 * x / self.width;
        (d1, d2)
    }
}
