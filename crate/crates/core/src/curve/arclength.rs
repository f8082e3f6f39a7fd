//! Smooth band-limit filtering and arclength resampling of closed curves.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{derivative, fourier, is_simple, ClosedCurve};
use crate::error::{Error, Result};

const RESAMPLE_ITERS: usize = 8;

/// Raised-cosine roll-off: `1` up to `b`, `0` from `b + nb` on.
pub fn rolloff_window(m: usize, b: usize, nb: usize) -> f64 {
    if m <= b {
        1.0
    } else if m >= b + nb {
        0.0
    } else {
        0.5 * (1.0 + (PI * (m - b) as f64 / nb as f64).cos())
    }
}

/// Cumulative arclength `s(t) - s(0)` of a curve, evaluated spectrally from
/// the Fourier series of the speed `|gamma'(t)|`.
pub(crate) struct ArclengthMap {
    speed: Vec<Complex64>,
    length: f64,
}

impl ArclengthMap {
    pub(crate) fn new(curve: &ClosedCurve) -> Self {
        let dx = derivative(curve.coeffs_x());
        let dy = derivative(curve.coeffs_y());
        let mut n = (16 * curve.bandwidth()).max(256).next_power_of_two();
        loop {
            let sx = fourier::samples_from_coefficients(&dx, n);
            let sy = fourier::samples_from_coefficients(&dy, n);
            let mut buf: Vec<Complex64> = sx.iter().zip(&sy).map(|(a, b)| Complex64::new(a.hypot(*b), 0.0)).collect();
            FftPlanner::new().plan_fft_forward(n).process(&mut buf);
            let scale = 1.0 / n as f64;
            let half = n / 2;
            // keep modes 0..half/2 and check the decay past them
            let keep = half / 2;
            let tail = buf[keep..half].iter().map(|z| z.norm()).fold(0.0, f64::max) * scale;
            let mean = buf[0].re * scale;
            if tail <= 1e-16 * mean || n >= 1 << 17 {
                let speed: Vec<Complex64> = buf[..keep].iter().map(|z| z * scale).collect();
                return ArclengthMap { length: 2.0 * PI * mean, speed };
            }
            n *= 2;
        }
    }

    pub(crate) fn length(&self) -> f64 {
        self.length
    }

    /// `(s(t) - s(0), s'(t))`.
    pub(crate) fn eval(&self, t: f64) -> (f64, f64) {
        let mean = self.speed[0].re;
        let mut s = mean * t;
        let mut ds = mean;
        let step = Complex64::from_polar(1.0, t);
        let mut phase = Complex64::new(1.0, 0.0);
        for (m, &c) in self.speed.iter().enumerate().skip(1) {
            phase *= step;
            if m % 64 == 0 {
                phase = Complex64::from_polar(1.0, m as f64 * t);
            }
            let mf = m as f64;
            // 2 Re( c (e^{imt} - 1) / (i m) )
            let z = c * (phase - 1.0) / Complex64::new(0.0, mf);
            s += 2.0 * z.re;
            ds += 2.0 * (c * phase).re;
        }
        (s, ds)
    }

    /// Parameter `t` in `[lo, hi]` with `s(t) - s(0) = target`, by Newton's
    /// method safeguarded with bisection.
    pub(crate) fn invert(&self, target: f64, guess: f64, mut lo: f64, mut hi: f64) -> f64 {
        let mut t = guess.clamp(lo, hi);
        for _ in 0..100 {
            let (s, ds) = self.eval(t);
            let f = s - target;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - f / ds;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let dt = (next - t).abs();
            t = next;
            if dt < 1e-14 || hi - lo < 1e-14 {
                break;
            }
        }
        t
    }

    /// Parameters of `n` points equispaced in arclength, starting at `t = 0`.
    pub(crate) fn equispaced_params(&self, n: usize) -> Vec<f64> {
        let step = self.length / n as f64;
        let mut out = Vec::with_capacity(n);
        out.push(0.0);
        let mut prev = 0.0;
        for k in 1..n {
            let guess = prev + 2.0 * PI / n as f64;
            let t = self.invert(k as f64 * step, guess, prev, 2.0 * PI);
            out.push(t);
            prev = t;
        }
        out
    }
}

/// Maximum deviation of the arclength between consecutive grid nodes
/// `t_j = 2 pi j / n` from `L / n`, relative to `L / n`.
pub fn arclength_spacing_deviation(curve: &ClosedCurve, n: usize) -> f64 {
    let map = ArclengthMap::new(curve);
    let mean = map.length() / n as f64;
    let mut prev = 0.0;
    let mut worst = 0.0f64;
    for j in 1..=n {
        let (s, _) = map.eval(2.0 * PI * j as f64 / n as f64);
        worst = worst.max(((s - prev) - mean).abs() / mean);
        prev = s;
    }
    worst
}

fn truncated(curve: &ClosedCurve, cutoff: usize, n: usize, window: Option<(usize, usize)>) -> Result<ClosedCurve> {
    let mut cx = vec![Complex64::new(0.0, 0.0); n];
    let mut cy = vec![Complex64::new(0.0, 0.0); n];
    let bw = curve.bandwidth().min(cutoff) as i64;
    for m in -bw..=bw {
        let w = window.map_or(1.0, |(b, nb)| rolloff_window(m.unsigned_abs() as usize, b, nb));
        let (a, c) = curve.coefficient(m);
        let i = fourier::index_of(m, n).unwrap();
        cx[i] = a * w;
        cy[i] = c * w;
    }
    ClosedCurve::from_coefficients(cx, cy)
}

/// Filters the curve with a smooth roll-off from mode `b` to `b + nb` and
/// reparametrizes it so that the returned `n`-mode curve is proportional to
/// arclength in its parameter.
///
/// The window is applied once. The arclength reparametrization leaks a small
/// amount of energy past the cutoff; it is removed and the reparametrization
/// repeated until that leak is below `1e-14` relative, so the result has no
/// content above `b + nb` and nodes `t_j = 2 pi j / n` equispaced in
/// arclength to roughly the same accuracy.
///
/// Returns [`Error::Geometry`] if the filtered curve intersects itself.
pub fn filter_resample(curve: &ClosedCurve, b: usize, nb: usize, n: usize) -> Result<ClosedCurve> {
    if b < 1 || nb < 1 {
        return Err(Error::Invalid(format!("filter needs b >= 1 and nb >= 1, got b={b}, nb={nb}")));
    }
    if n < 8 || n % 2 != 0 {
        return Err(Error::Invalid(format!("resampling needs an even number of points >= 8, got {n}")));
    }
    let cutoff = (b + nb - 1).min(n / 2 - 1);
    let mut current = truncated(curve, cutoff, n, Some((b, nb)))?;
    for _ in 0..RESAMPLE_ITERS {
        let map = ArclengthMap::new(&current);
        let params = map.equispaced_params(n);
        let (xs, ys): (Vec<f64>, Vec<f64>) = params
            .iter()
            .map(|&t| {
                let p = current.point(t);
                (p[0], p[1])
            })
            .unzip();
        let resampled = ClosedCurve::from_samples(&xs, &ys)?;
        let leak = resampled.relative_content_above(cutoff);
        current = truncated(&resampled, cutoff, n, None)?;
        if leak <= 1e-14 {
            break;
        }
    }
    let ns = 4096.max(8 * current.bandwidth());
    if !is_simple(&current, ns) {
        return Err(Error::Geometry("filtered curve intersects itself".into()));
    }
    Ok(current)
}
