//! Centered Fourier coefficient arrays for real periodic functions on `[0, 2pi)`.
//!
//! A coefficient vector of even length `n` stores modes `m = -n/2 .. n/2 - 1`
//! at index `m + n/2`.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Mode number stored at `index` of a centered array of length `n`.
#[inline]
pub(crate) fn mode_of(index: usize, n: usize) -> i64 {
    index as i64 - (n / 2) as i64
}

/// Index of mode `m` in a centered array of length `n`, if it fits.
#[inline]
pub(crate) fn index_of(m: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if m < -half || m >= half {
        None
    } else {
        Some((m + half) as usize)
    }
}

/// Centered Fourier coefficients of `n` equispaced samples `f(2 pi j / n)`.
/// The Nyquist mode is dropped so that the result is conjugate symmetric
/// for real data.
pub(crate) fn coefficients_from_samples(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, v) in buf.into_iter().enumerate() {
        let m = if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
        if m == -((n / 2) as i64) {
            continue;
        }
        out[index_of(m, n).unwrap()] = v * scale;
    }
    out
}

/// Samples `f(2 pi j / n_samples)` of the real function with centered
/// coefficients `coeffs`. Modes that do not fit below the sampling Nyquist
/// frequency must be zero; the caller checks the bandwidth.
pub(crate) fn samples_from_coefficients(coeffs: &[Complex64], n_samples: usize) -> Vec<f64> {
    let n = coeffs.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); n_samples];
    for (i, &c) in coeffs.iter().enumerate() {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let m = mode_of(i, n);
        let k = m.rem_euclid(n_samples as i64) as usize;
        buf[k] += c;
    }
    FftPlanner::new().plan_fft_inverse(n_samples).process(&mut buf);
    buf.into_iter().map(|v| v.re).collect()
}

/// Highest `|m|` whose coefficient is nonzero in either array.
pub(crate) fn bandwidth(a: &[Complex64], b: &[Complex64]) -> usize {
    let n = a.len();
    let mut bw = 0;
    for i in 0..n {
        if a[i] != Complex64::new(0.0, 0.0) || b[i] != Complex64::new(0.0, 0.0) {
            bw = bw.max(mode_of(i, n).unsigned_abs() as usize);
        }
    }
    bw
}

/// Evaluates `sum_m c_m e^{imt}` for a real function (returns the real part)
/// together with its first derivative.
pub(crate) fn eval_with_derivative(coeffs: &[Complex64], bw: usize, t: f64) -> (f64, f64) {
    let n = coeffs.len();
    let c0 = coeffs[n / 2];
    let mut value = c0.re;
    let mut deriv = 0.0;
    let step = Complex64::from_polar(1.0, t);
    let mut phase = Complex64::new(1.0, 0.0);
    for m in 1..=bw {
        phase *= step;
        if m % 64 == 0 {
            phase = Complex64::from_polar(1.0, m as f64 * t);
        }
        let c = coeffs[n / 2 + m];
        // c_{-m} = conj(c_m): the pair contributes 2 Re(c_m e^{imt}).
        let z = c * phase;
        value += 2.0 * z.re;
        deriv += -2.0 * m as f64 * z.im;
    }
    (value, deriv)
}

/// `f(t + delta) - f(t)` evaluated without cancellation, together with
/// `f(t + delta)` and `f'(t + delta)`.
pub(crate) fn eval_offset(coeffs: &[Complex64], bw: usize, t: f64, delta: f64) -> (f64, f64, f64) {
    let n = coeffs.len();
    let c0 = coeffs[n / 2];
    let mut value = c0.re;
    let mut diff = 0.0;
    let mut deriv = 0.0;
    let s = t + delta;
    for m in 1..=bw {
        let mf = m as f64;
        let c = coeffs[n / 2 + m];
        let at_s = c * Complex64::from_polar(1.0, mf * s);
        value += 2.0 * at_s.re;
        deriv += -2.0 * mf * at_s.im;
        // e^{im delta} - 1 = 2 i sin(m delta / 2) e^{i m delta / 2}
        let half = 0.5 * mf * delta;
        let jump = Complex64::new(0.0, 2.0 * half.sin()) * Complex64::from_polar(1.0, mf * t + half);
        diff += 2.0 * (c * jump).re;
    }
    (value, diff, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn roundtrip_trigonometric_polynomial() {
        let n = 32;
        let f = |t: f64| 1.0 + 0.5 * (3.0 * t).cos() - 0.25 * (7.0 * t).sin();
        let samples: Vec<f64> = (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect();
        let c = coefficients_from_samples(&samples);
        assert!((c[n / 2].re - 1.0).abs() < 1e-15);
        assert!((c[n / 2 + 3] - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        let fine = samples_from_coefficients(&c, 96);
        for (j, v) in fine.iter().enumerate() {
            assert!((v - f(2.0 * PI * j as f64 / 96.0)).abs() < 1e-14);
        }
        let (v, d) = eval_with_derivative(&c, bandwidth(&c, &c), 0.3);
        assert!((v - f(0.3)).abs() < 1e-14);
        let exact_d = -1.5 * (0.9f64).sin() - 1.75 * (2.1f64).cos();
        assert!((d - exact_d).abs() < 1e-13);
        let (vs, diff, _) = eval_offset(&c, 7, 0.3, 1e-9);
        assert!((vs - f(0.3 + 1e-9)).abs() < 1e-14);
        let mid: f64 = 0.3 + 0.5e-9;
        let d_mid = -1.5 * (3.0 * mid).sin() - 1.75 * (7.0 * mid).cos();
        assert!((diff - d_mid * 1e-9).abs() < 1e-22);
    }
}
