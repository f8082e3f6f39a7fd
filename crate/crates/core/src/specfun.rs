//! Bessel functions of the first and second kind (orders 0 and 1) and the
//! outgoing Helmholtz Green's function in the plane.
//!
//! Three regimes are used for `J0, J1, Y0, Y1`:
//!
//! * `x < 8`: ascending power series.
//! * `8 <= x < 25`: Miller backward recurrence for `J_n` normalized by
//!   `J0 + 2 sum J_2k = 1`, with `Y0` and `Y1` from their Neumann series.
//! * `x >= 25`: Hankel asymptotic expansions with the phase evaluated through
//!   `sin x` and `cos x` directly, so large arguments keep full accuracy.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 5.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// Values of `J0, J1, Y0, Y1` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselPair {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl BesselPair {
    /// `H0 = J0 + i Y0`, Hankel function of the first kind.
    #[inline]
    pub fn h0(&self) -> Complex64 {
        Complex64::new(self.j0, self.y0)
    }

    /// `H1 = J1 + i Y1`.
    #[inline]
    pub fn h1(&self) -> Complex64 {
        Complex64::new(self.j1, self.y1)
    }
}

/// Evaluates `J0, J1, Y0, Y1` at `x > 0`.
pub fn bessel_j0j1y0y1(x: f64) -> Result<BesselPair> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "Bessel functions of the second kind need x > 0, got {x}"
        )));
    }
    Ok(bessel_unchecked(x))
}

#[inline]
pub(crate) fn bessel_unchecked(x: f64) -> BesselPair {
    if x < SERIES_LIMIT {
        ascending_series(x)
    } else if x < ASYMPTOTIC_LIMIT {
        miller_neumann(x)
    } else {
        hankel_asymptotic(x)
    }
}

fn ascending_series(x: f64) -> BesselPair {
    let q = 0.25 * x * x;
    let half = 0.5 * x;
    let log_term = (half.ln() + EULER_GAMMA) * 2.0 / PI;

    // term_k = (-q)^k / (k!)^2 for J0, t1_k = (-q)^k / (k! (k+1)!) for J1/(x/2)
    let mut t0 = 1.0;
    let mut t1 = 1.0;
    let mut j0 = 1.0;
    let mut j1 = 1.0;
    // harmonic numbers H_k
    let mut harmonic = 0.0;
    let mut y0_sum = 0.0;
    // sum of (H_k + H_{k+1}) t1_k
    let mut y1_sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        t0 *= -q / (kf * kf);
        t1 *= -q / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        j0 += t0;
        j1 += t1;
        y0_sum -= harmonic * t0;
        y1_sum += (2.0 * harmonic + 1.0 / (kf + 1.0)) * t1;
        if t0.abs() < 1e-18 * j0.abs().max(1e-300) && t1.abs() < 1e-18 && k > 2 {
            break;
        }
    }
    let j1 = half * j1;
    let y0 = log_term * j0 + 2.0 / PI * y0_sum;
    // Y1 = (2/pi) ln(x/2) J1 - 2/(pi x) - (1/pi) sum (psi(k+1)+psi(k+2)) (-q)^k (x/2)/(k!(k+1)!)
    // with psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1).
    let y1 = log_term * j1 - 2.0 / (PI * x) - half / PI * y1_sum;
    BesselPair { j0, j1, y0, y1 }
}

fn miller_neumann(x: f64) -> BesselPair {
    // Start well above x so the backward recurrence settles.
    let start = {
        let n = (x + 30.0 + 3.0 * x.sqrt()) as usize;
        n + (n & 1)
    };
    let mut values = vec![0.0f64; start + 2];
    values[start + 1] = 0.0;
    values[start] = 1e-250;
    for n in (1..=start).rev() {
        values[n - 1] = 2.0 * n as f64 / x * values[n] - values[n + 1];
        if values[n - 1].abs() > 1e200 {
            for v in values[n - 1..].iter_mut() {
                *v *= 1e-200;
            }
        }
    }
    let mut norm = values[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * values[k];
    }
    let scale = 1.0 / norm;
    for v in values.iter_mut() {
        *v *= scale;
    }
    let j0 = values[0];
    let j1 = values[1];
    let log_term = (0.5 * x).ln() + EULER_GAMMA;

    // Y0 = (2/pi) [ (ln(x/2)+gamma) J0 - 2 sum_{k>=1} (-1)^k J_2k / k ]
    // Y1 = (2/pi) [ (ln(x/2)+gamma) J1 - J0/x + sum_{k>=1} (-1)^k (J_{2k-1} - J_{2k+1}) / k ]
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut sign = -1.0;
    let mut k = 1;
    while 2 * k < start {
        let kf = k as f64;
        s0 += sign * values[2 * k] / kf;
        s1 += sign * (values[2 * k - 1] - values[2 * k + 1]) / kf;
        sign = -sign;
        k += 1;
    }
    let y0 = 2.0 / PI * (log_term * j0 - 2.0 * s0);
    let y1 = 2.0 / PI * (log_term * j1 - j0 / x + s1);
    BesselPair { j0, j1, y0, y1 }
}

/// Asymptotic amplitudes `P_nu(x), Q_nu(x)` of the Hankel expansion.
fn hankel_pq(order: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (order * order) as f64;
    let inv8x = 1.0 / (8.0 * x);
    let mut p = 1.0;
    let mut q = 0.0;
    // a_k = prod_{i=1..k} (mu - (2i-1)^2) / (k! (8x)^k)
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) * inv8x / k as f64;
        let mag = term.abs();
        if mag > prev {
            break;
        }
        prev = mag;
        // terms alternate between Q (odd k) and P (even k) with sign (-1)^floor(k/2)
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 1 {
            q += signed;
        } else {
            p += signed;
        }
        if mag < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn hankel_asymptotic(x: f64) -> BesselPair {
    let (s, c) = x.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    // chi_0 = x - pi/4, chi_1 = x - 3 pi/4
    let cos0 = FRAC_1_SQRT_2 * (c + s);
    let sin0 = FRAC_1_SQRT_2 * (s - c);
    let cos1 = FRAC_1_SQRT_2 * (s - c);
    let sin1 = -FRAC_1_SQRT_2 * (s + c);
    let (p0, q0) = hankel_pq(0, x);
    let (p1, q1) = hankel_pq(1, x);
    BesselPair {
        j0: amp * (p0 * cos0 - q0 * sin0),
        y0: amp * (p0 * sin0 + q0 * cos0),
        j1: amp * (p1 * cos1 - q1 * sin1),
        y1: amp * (p1 * sin1 + q1 * cos1),
    }
}

#[inline]
fn distance(x: Point, y: Point) -> f64 {
    (y[0] - x[0]).hypot(y[1] - x[1])
}

/// `G_k(x, y) = (i/4) H0(k |x - y|)`.
pub fn green(k: f64, x: Point, y: Point) -> Result<Complex64> {
    let r = distance(x, y);
    if r == 0.0 {
        return Err(Error::Domain("Green's function evaluated at coincident points".into()));
    }
    let b = bessel_j0j1y0y1(k * r)?;
    Ok(Complex64::new(0.0, 0.25) * b.h0())
}

/// Gradient of `G_k(x, y)` with respect to `y`:
/// `-(i k / 4) H1(k r) (y - x) / r`.
pub fn green_grad(k: f64, x: Point, y: Point) -> Result<[Complex64; 2]> {
    let r = distance(x, y);
    if r == 0.0 {
        return Err(Error::Domain("Green's function gradient evaluated at coincident points".into()));
    }
    let b = bessel_j0j1y0y1(k * r)?;
    let f = Complex64::new(0.0, -0.25 * k) * b.h1() / r;
    Ok([f * (y[0] - x[0]), f * (y[1] - x[1])])
}

/// `(H0(kr), H1(kr))` without the domain check; used by the assembly loops.
#[inline]
pub(crate) fn hankel_pair(kr: f64) -> (Complex64, Complex64) {
    let b = bessel_unchecked(kr);
    (b.h0(), b.h1())
}
