//! Band-limited closed curves.
//!
//! A [`ClosedCurve`] stores the Fourier coefficients of `gamma(t) = (x(t), y(t))`
//! on the internal parameter interval `[0, 2pi)`. Curves are normalized to
//! counterclockwise orientation on construction so that `(y', -x') / |gamma'|`
//! is always the outward normal.

mod arclength;
pub(crate) mod fourier;
mod simple;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::Point;

pub use arclength::{arclength_spacing_deviation, filter_resample, rolloff_window};
pub use simple::{is_simple, segments_intersect};

const SAMPLE_NOISE: f64 = 1e-14;

/// Band-limited simple closed curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    coeffs_x: Vec<Complex64>,
    coeffs_y: Vec<Complex64>,
    bandwidth: usize,
    length: f64,
}

impl ClosedCurve {
    /// Builds a curve from centered coefficient arrays (modes `-n/2 .. n/2-1`).
    ///
    /// The coefficients are symmetrized to `c_{-m} = conj(c_m)`, the Nyquist
    /// mode is discarded and the orientation is flipped if needed so the curve
    /// runs counterclockwise.
    pub fn from_coefficients(coeffs_x: Vec<Complex64>, coeffs_y: Vec<Complex64>) -> Result<Self> {
        let n = coeffs_x.len();
        if n < 4 || n % 2 != 0 || coeffs_y.len() != n {
            return Err(Error::Dimension(format!(
                "coefficient arrays must have equal even length >= 4, got {} and {}",
                coeffs_x.len(),
                coeffs_y.len()
            )));
        }
        if coeffs_x.iter().chain(coeffs_y.iter()).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Invalid("non-finite curve coefficient".into()));
        }
        let mut cx = coeffs_x;
        let mut cy = coeffs_y;
        symmetrize(&mut cx);
        symmetrize(&mut cy);
        let mut curve = ClosedCurve { bandwidth: fourier::bandwidth(&cx, &cy), coeffs_x: cx, coeffs_y: cy, length: 0.0 };
        if curve.signed_area() < 0.0 {
            curve.reverse();
        }
        curve.length = curve.compute_length();
        if !(curve.length > 0.0) {
            return Err(Error::Geometry("curve has zero length".into()));
        }
        Ok(curve)
    }

    /// Interpolates `n` equispaced samples `gamma(2 pi j / n)`.
    pub fn from_samples(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Dimension("sample arrays differ in length".into()));
        }
        if xs.len() < 4 || xs.len() % 2 != 0 {
            return Err(Error::Dimension(format!("need an even number >= 4 of samples, got {}", xs.len())));
        }
        // drop FFT roundoff so that the bandwidth reflects the actual content
        let scale = xs.iter().chain(ys).fold(0.0f64, |m, v| m.max(v.abs()));
        let clean = |mut c: Vec<Complex64>| {
            for z in c.iter_mut() {
                if z.norm() <= SAMPLE_NOISE * scale {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
            c
        };
        Self::from_coefficients(
            clean(fourier::coefficients_from_samples(xs)),
            clean(fourier::coefficients_from_samples(ys)),
        )
    }

    /// Samples `f` at `n` equispaced parameters and interpolates.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Point) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|j| {
                let p = f(2.0 * PI * j as f64 / n as f64);
                (p[0], p[1])
            })
            .unzip();
        Self::from_samples(&xs, &ys)
    }

    /// Circle of the given radius and center.
    pub fn circle(radius: f64, center: Point, n_modes: usize) -> Result<Self> {
        Self::from_fn(n_modes, |t| [center[0] + radius * t.cos(), center[1] + radius * t.sin()])
    }

    /// Radial curve `r(t) (cos t, sin t)` with `r(t) = r0 + amp cos(lobes t)`.
    pub fn star(r0: f64, amp: f64, lobes: u32, n_modes: usize) -> Result<Self> {
        Self::from_fn(n_modes, |t| {
            let r = r0 + amp * (lobes as f64 * t).cos();
            [r * t.cos(), r * t.sin()]
        })
    }

    /// The seven-lobed star `(2 + 0.2 cos 7t)(cos t, sin t)`.
    pub fn star7() -> Self {
        Self::star(2.0, 0.2, 7, 32).expect("star curve is valid")
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs_x.len()
    }

    /// Highest mode with a nonzero coefficient.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Perimeter.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn coeffs_x(&self) -> &[Complex64] {
        &self.coeffs_x
    }

    pub fn coeffs_y(&self) -> &[Complex64] {
        &self.coeffs_y
    }

    /// Coefficient pair of mode `m`, zero when `m` is not stored.
    pub fn coefficient(&self, m: i64) -> (Complex64, Complex64) {
        match fourier::index_of(m, self.n_modes()) {
            Some(i) => (self.coeffs_x[i], self.coeffs_y[i]),
            None => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        }
    }

    /// Largest coefficient magnitude above mode `cutoff`, relative to the
    /// largest coefficient overall.
    pub fn relative_content_above(&self, cutoff: usize) -> f64 {
        let n = self.n_modes();
        let mut top = 0.0f64;
        let mut tail = 0.0f64;
        for i in 0..n {
            let mag = self.coeffs_x[i].norm().max(self.coeffs_y[i].norm());
            top = top.max(mag);
            if fourier::mode_of(i, n).unsigned_abs() as usize > cutoff {
                tail = tail.max(mag);
            }
        }
        if top == 0.0 {
            0.0
        } else {
            tail / top
        }
    }

    /// Same curve stored with a different number of modes. Fails if that
    /// would drop nonzero coefficients.
    pub fn with_n_modes(&self, n: usize) -> Result<Self> {
        if n % 2 != 0 || n < 2 * self.bandwidth + 2 {
            return Err(Error::Bandwidth(format!(
                "cannot store bandwidth {} on {n} modes",
                self.bandwidth
            )));
        }
        let mut cx = vec![Complex64::new(0.0, 0.0); n];
        let mut cy = vec![Complex64::new(0.0, 0.0); n];
        let bw = self.bandwidth as i64;
        for m in -bw..=bw {
            let (a, b) = self.coefficient(m);
            let i = fourier::index_of(m, n).unwrap();
            cx[i] = a;
            cy[i] = b;
        }
        Ok(ClosedCurve { coeffs_x: cx, coeffs_y: cy, bandwidth: self.bandwidth, length: self.length })
    }

    /// `gamma(t)`.
    pub fn point(&self, t: f64) -> Point {
        let (x, _) = fourier::eval_with_derivative(&self.coeffs_x, self.bandwidth, t);
        let (y, _) = fourier::eval_with_derivative(&self.coeffs_y, self.bandwidth, t);
        [x, y]
    }

    /// `gamma(t)` and `gamma'(t)`.
    pub fn point_and_tangent(&self, t: f64) -> (Point, Point) {
        let (x, dx) = fourier::eval_with_derivative(&self.coeffs_x, self.bandwidth, t);
        let (y, dy) = fourier::eval_with_derivative(&self.coeffs_y, self.bandwidth, t);
        ([x, y], [dx, dy])
    }

    /// Unit outward normal and speed at `t + delta`, plus the chord
    /// `gamma(t + delta) - gamma(t)` computed without cancellation.
    pub(crate) fn offset_frame(&self, t: f64, delta: f64) -> OffsetFrame {
        let (_, dxd, dx) = fourier::eval_offset(&self.coeffs_x, self.bandwidth, t, delta);
        let (_, dyd, dy) = fourier::eval_offset(&self.coeffs_y, self.bandwidth, t, delta);
        let speed = dx.hypot(dy);
        OffsetFrame { chord: [dxd, dyd], normal: [dy / speed, -dx / speed], speed }
    }

    /// Signed area enclosed by the curve, positive for counterclockwise curves.
    pub fn signed_area(&self) -> f64 {
        let n = self.n_modes();
        let mut acc = 0.0;
        for i in 0..n {
            let m = fourier::mode_of(i, n) as f64;
            acc += m * (self.coeffs_x[i].conj() * self.coeffs_y[i]).im;
        }
        -2.0 * PI * acc
    }

    /// Samples the curve on `n` equispaced parameters.
    pub fn sample(&self, n: usize) -> Result<DiscretizedBoundary> {
        DiscretizedBoundary::new(self, n)
    }

    /// Samples `n` points (no bandwidth check beyond the sampling theorem).
    pub fn points(&self, n: usize) -> Result<Vec<Point>> {
        self.check_samples(n)?;
        let xs = fourier::samples_from_coefficients(&self.coeffs_x, n);
        let ys = fourier::samples_from_coefficients(&self.coeffs_y, n);
        Ok(xs.into_iter().zip(ys).map(|(x, y)| [x, y]).collect())
    }

    fn check_samples(&self, n: usize) -> Result<()> {
        if n < 2 * self.bandwidth + 2 {
            return Err(Error::Bandwidth(format!(
                "{n} samples cannot resolve a curve of bandwidth {}",
                self.bandwidth
            )));
        }
        Ok(())
    }

    fn reverse(&mut self) {
        let n = self.n_modes();
        for m in 1..(n / 2) as i64 {
            let a = fourier::index_of(m, n).unwrap();
            let b = fourier::index_of(-m, n).unwrap();
            self.coeffs_x.swap(a, b);
            self.coeffs_y.swap(a, b);
        }
    }

    fn compute_length(&self) -> f64 {
        let n = (4 * self.bandwidth + 64).next_power_of_two();
        let dx = fourier::samples_from_coefficients(&derivative(&self.coeffs_x), n);
        let dy = fourier::samples_from_coefficients(&derivative(&self.coeffs_y), n);
        dx.iter().zip(&dy).map(|(a, b)| a.hypot(*b)).sum::<f64>() * 2.0 * PI / n as f64
    }

    /// Rigid translation.
    pub fn translated(&self, shift: Point) -> Self {
        let mut c = self.clone();
        let i = self.n_modes() / 2;
        c.coeffs_x[i] += shift[0];
        c.coeffs_y[i] += shift[1];
        c
    }
}

pub(crate) struct OffsetFrame {
    pub chord: Point,
    pub normal: Point,
    pub speed: f64,
}

fn symmetrize(c: &mut [Complex64]) {
    let n = c.len();
    c[0] = Complex64::new(0.0, 0.0);
    c[n / 2].im = 0.0;
    for m in 1..(n / 2) as i64 {
        let a = fourier::index_of(m, n).unwrap();
        let b = fourier::index_of(-m, n).unwrap();
        let avg = 0.5 * (c[a] + c[b].conj());
        c[a] = avg;
        c[b] = avg.conj();
    }
}

pub(crate) fn derivative(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len();
    c.iter()
        .enumerate()
        .map(|(i, &v)| v * Complex64::new(0.0, fourier::mode_of(i, n) as f64))
        .collect()
}

/// Nyström node set on a curve: equispaced parameters `t_j = 2 pi j / N`.
#[derive(Debug, Clone)]
pub struct DiscretizedBoundary {
    curve: ClosedCurve,
    params: Vec<f64>,
    nodes: Vec<Point>,
    normals: Vec<Point>,
    speeds: Vec<f64>,
}

impl DiscretizedBoundary {
    pub fn new(curve: &ClosedCurve, n: usize) -> Result<Self> {
        curve.check_samples(n)?;
        let xs = fourier::samples_from_coefficients(&curve.coeffs_x, n);
        let ys = fourier::samples_from_coefficients(&curve.coeffs_y, n);
        let dxs = fourier::samples_from_coefficients(&derivative(&curve.coeffs_x), n);
        let dys = fourier::samples_from_coefficients(&derivative(&curve.coeffs_y), n);
        let mut nodes = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut speeds = Vec::with_capacity(n);
        for j in 0..n {
            let s = dxs[j].hypot(dys[j]);
            if !(s > 0.0) {
                return Err(Error::Geometry(format!("parametrization is singular at node {j}")));
            }
            nodes.push([xs[j], ys[j]]);
            normals.push([dys[j] / s, -dxs[j] / s]);
            speeds.push(s);
        }
        let params = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        Ok(DiscretizedBoundary { curve: curve.clone(), params, nodes, normals, speeds })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    /// Grid spacing `2 pi / N` in the parameter.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    /// Arclength quadrature weights `|gamma'(t_j)| 2pi/N`.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        self.speeds.iter().map(|s| s * h).collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.speeds.iter().sum::<f64>() * self.spacing()
    }

    /// Green's theorem: `(1/2) sum |gamma'| (gamma . nu) h`.
    pub fn signed_area(&self) -> f64 {
        let h = self.spacing();
        0.5 * h
            * self
                .nodes
                .iter()
                .zip(&self.normals)
                .zip(&self.speeds)
                .map(|((p, nu), s)| s * (p[0] * nu[0] + p[1] * nu[1]))
                .sum::<f64>()
    }
}

/// Real trigonometric basis `1, cos t, sin t, cos 2t, sin 2t, ...`:
/// value of basis function `q` at `t`.
#[inline]
pub fn trig_basis(q: usize, t: f64) -> f64 {
    if q == 0 {
        1.0
    } else {
        let m = ((q + 1) / 2) as f64;
        if q % 2 == 1 {
            (m * t).cos()
        } else {
            (m * t).sin()
        }
    }
}

/// Evaluates `p(t) = sum_q p_q trig_basis(q, t)`.
pub fn eval_trig(p: &[f64], t: f64) -> f64 {
    p.iter().enumerate().map(|(q, c)| c * trig_basis(q, t)).sum()
}

/// Moves every node of the curve along its normal: `gamma(t_j) + scale p(t_j) nu(t_j)`
/// on the curve's own `n_modes` grid, then re-expands in Fourier modes.
pub fn perturb(curve: &ClosedCurve, p_coeffs: &[f64], scale: f64) -> Result<ClosedCurve> {
    let n = curve.n_modes();
    let boundary = DiscretizedBoundary::new(curve, n)?;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for j in 0..n {
        let amount = scale * eval_trig(p_coeffs, boundary.params[j]);
        xs.push(boundary.nodes[j][0] + amount * boundary.normals[j][0]);
        ys.push(boundary.nodes[j][1] + amount * boundary.normals[j][1]);
    }
    ClosedCurve::from_samples(&xs, &ys)
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let s = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (ap[0] - s * ab[0]).hypot(ap[1] - s * ab[1])
}

fn directed_hausdorff(from: &[Point], to: &[Point]) -> f64 {
    let n = to.len();
    from.iter()
        .map(|&p| {
            (0..n)
                .map(|j| point_segment_distance(p, to[j], to[(j + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the `ns`-gon samplings of two curves
/// (vertices of one polygon against the edges of the other).
pub fn hausdorff(a: &ClosedCurve, b: &ClosedCurve, ns: usize) -> Result<f64> {
    let pa = a.points(ns)?;
    let pb = b.points(ns)?;
    Ok(directed_hausdorff(&pa, &pb).max(directed_hausdorff(&pb, &pa)))
}

/// JSON curve file: `{"n_modes", "coeffs_x": [[re, im], ...], "coeffs_y", "length"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveFile {
    pub n_modes: usize,
    pub coeffs_x: Vec<[f64; 2]>,
    pub coeffs_y: Vec<[f64; 2]>,
    pub length: f64,
}

impl From<&ClosedCurve> for CurveFile {
    fn from(c: &ClosedCurve) -> Self {
        let pack = |v: &[Complex64]| v.iter().map(|z| [z.re, z.im]).collect();
        CurveFile { n_modes: c.n_modes(), coeffs_x: pack(&c.coeffs_x), coeffs_y: pack(&c.coeffs_y), length: c.length }
    }
}

impl TryFrom<CurveFile> for ClosedCurve {
    type Error = Error;

    fn try_from(f: CurveFile) -> Result<Self> {
        if f.coeffs_x.len() != f.n_modes || f.coeffs_y.len() != f.n_modes {
            return Err(Error::Invalid(format!(
                "curve file declares {} modes but stores {} and {}",
                f.n_modes,
                f.coeffs_x.len(),
                f.coeffs_y.len()
            )));
        }
        let unpack = |v: Vec<[f64; 2]>| v.into_iter().map(|[a, b]| Complex64::new(a, b)).collect();
        ClosedCurve::from_coefficients(unpack(f.coeffs_x), unpack(f.coeffs_y))
    }
}

/// Plot-ready polygon `{"x": [...], "y": [...]}` sampled at `t_j = 2 pi j / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoints {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl CurvePoints {
    pub fn new(curve: &ClosedCurve, n: usize) -> Result<Self> {
        let (x, y) = curve.points(n)?.into_iter().map(|[x, y]| (x, y)).unzip();
        Ok(CurvePoints { x, y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_sampling() {
        let c = ClosedCurve::circle(1.0, [0.0, 0.0], 16).unwrap();
        let b = c.sample(64).unwrap();
        for j in 0..64 {
            assert!((b.speeds()[j] - 1.0).abs() < 1e-14);
            let p = b.nodes()[j];
            let nu = b.normals()[j];
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-14);
            assert!((nu[0] - p[0]).abs() < 1e-14 && (nu[1] - p[1]).abs() < 1e-14);
        }
        assert!((b.signed_area() - PI).abs() < 1e-12);
        assert!((c.signed_area() - PI).abs() < 1e-12);
        assert!((c.length() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let c = ClosedCurve::from_fn(16, |t| [t.cos(), -t.sin()]).unwrap();
        assert!(c.signed_area() > 0.0);
        let b = c.sample(32).unwrap();
        for (p, nu) in b.nodes().iter().zip(b.normals()) {
            assert!((p[0] * nu[0] + p[1] * nu[1] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn coefficients_are_conjugate_symmetric() {
        let c = ClosedCurve::star7();
        for m in 1..16 {
            let (a, b) = c.coefficient(m);
            let (am, bm) = c.coefficient(-m);
            assert!((a - am.conj()).norm() < 1e-14);
            assert!((b - bm.conj()).norm() < 1e-14);
        }
        assert_eq!(c.bandwidth(), 8);
    }

    #[test]
    fn sampling_rejects_underresolved_grids() {
        let c = ClosedCurve::star7();
        assert!(matches!(c.sample(16), Err(Error::Bandwidth(_))));
        assert!(c.sample(18).is_ok());
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let c = ClosedCurve::star7();
        let p = perturb(&c, &[0.0; 5], 1.0).unwrap();
        for m in -8..=8 {
            let (a, b) = c.coefficient(m);
            let (a2, b2) = p.coefficient(m);
            assert!((a - a2).norm() < 1e-14 && (b - b2).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_normal_offset_grows_a_circle() {
        let c = ClosedCurve::circle(1.0, [0.0, 0.0], 64).unwrap();
        let p = perturb(&c, &[0.3], 0.5).unwrap();
        for q in p.points(64).unwrap() {
            assert!((q[0].hypot(q[1]) - 1.15).abs() < 1e-13);
        }
    }

    #[test]
    fn hausdorff_of_simple_configurations() {
        let a = ClosedCurve::circle(1.0, [0.0, 0.0], 16).unwrap();
        let b = ClosedCurve::circle(1.5, [0.0, 0.0], 16).unwrap();
        assert_eq!(hausdorff(&a, &a, 256).unwrap(), 0.0);
        assert!((hausdorff(&a, &b, 512).unwrap() - 0.5).abs() < 1e-4);
        let shifted = a.translated([0.2, 0.0]);
        assert!((hausdorff(&a, &shifted, 1024).unwrap() - 0.2).abs() < 1e-4);
    }

    #[test]
    fn curve_file_roundtrip() {
        let c = ClosedCurve::star7();
        let json = serde_json::to_string(&CurveFile::from(&c)).unwrap();
        let back: ClosedCurve = serde_json::from_str::<CurveFile>(&json).unwrap().try_into().unwrap();
        assert_eq!(back, c);
    }
}
