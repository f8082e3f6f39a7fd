//! Nyström matrices of the single-layer, double-layer and adjoint
//! double-layer operators of the Helmholtz equation, and of the far-field
//! patterns of the layer potentials.
//!
//! Kernels (with `G(x, y) = (i/4) H0(k|x - y|)`):
//!
//! * `S`: `G(x, y)`
//! * `D`: `dG(x, y)/dnu(y)`
//! * `S'`: `dG(x, y)/dnu(x)`
//!
//! All three are routed through the same Alpert-corrected trapezoid rule.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::curve::DiscretizedBoundary;
use crate::error::{Error, Result};
use crate::quadrature::{positive_stencils, AlpertRule};
use crate::specfun::{hankel_pair, Point};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Layer operator kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    S,
    D,
    Sprime,
}

/// Kind tag of an assembled boundary operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    S,
    D,
    Sprime,
    Cfie,
    Green,
}

/// `identity * I + s * S + d * D + sprime * S'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerCombination {
    pub identity: Complex64,
    pub s: Complex64,
    pub d: Complex64,
    pub sprime: Complex64,
}

impl LayerCombination {
    pub fn layer(kind: LayerKind) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        match kind {
            LayerKind::S => LayerCombination { identity: zero, s: one, d: zero, sprime: zero },
            LayerKind::D => LayerCombination { identity: zero, s: zero, d: one, sprime: zero },
            LayerKind::Sprime => LayerCombination { identity: zero, s: zero, d: zero, sprime: one },
        }
    }

    /// Combined field operator `I/2 + D - i eta S`.
    pub fn cfie(eta: f64) -> Self {
        LayerCombination {
            identity: Complex64::new(0.5, 0.0),
            s: Complex64::new(0.0, -eta),
            d: Complex64::new(1.0, 0.0),
            sprime: Complex64::new(0.0, 0.0),
        }
    }

    /// Operator of the integral equation for the normal derivative of the
    /// total field, `I/2 + S' + i eta S`.
    pub fn green(eta: f64) -> Self {
        LayerCombination {
            identity: Complex64::new(0.5, 0.0),
            s: Complex64::new(0.0, eta),
            d: Complex64::new(0.0, 0.0),
            sprime: Complex64::new(1.0, 0.0),
        }
    }
}

pub(crate) fn check_wavenumber(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("wavenumber must be positive and finite, got {k}")));
    }
    Ok(())
}

#[inline]
fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Entry-level access to the Nyström discretization of a layer combination.
///
/// Entry `(i, j)` is the trapezoid weight times the kernel for nodes at
/// least `a` steps apart, plus a precomputed band of Alpert corrections
/// near the diagonal. The singular kernel is never evaluated at `x = y`.
pub struct NystromKernel<'a> {
    boundary: &'a DiscretizedBoundary,
    k: f64,
    combo: LayerCombination,
    n_skipped: usize,
    radius: usize,
    band: Vec<Complex64>,
}

impl<'a> NystromKernel<'a> {
    pub fn new(boundary: &'a DiscretizedBoundary, k: f64, combo: LayerCombination, rule: &AlpertRule) -> Result<Self> {
        check_wavenumber(k)?;
        let n = boundary.len();
        if n < rule.min_points() {
            return Err(Error::Invalid(format!(
                "order-{} quadrature needs at least {} nodes, got {n}",
                rule.order(),
                rule.min_points()
            )));
        }
        let radius = rule.stencil_radius();
        let width = 2 * radius + 1;
        let mut kernel = NystromKernel { boundary, k, combo, n_skipped: rule.n_skipped(), radius, band: Vec::new() };
        let h = boundary.spacing();
        let stencils = positive_stencils(rule);
        let curve = boundary.curve();
        let mut band = vec![Complex64::new(0.0, 0.0); n * width];
        band.par_chunks_mut(width).enumerate().for_each(|(i, row)| {
            let t = boundary.params()[i];
            let nu_x = boundary.normals()[i];
            for ((&chi, &w), st) in rule.aux_nodes().iter().zip(rule.aux_weights()).zip(&stencils) {
                for sign in [1.0, -1.0] {
                    let f = curve.offset_frame(t, sign * chi * h);
                    let v = kernel.kernel(f.chord, f.normal, nu_x) * (w * h * f.speed);
                    for &(o, c) in st {
                        let o = if sign > 0.0 { o } else { -o };
                        row[(o + radius as isize) as usize] += v * c;
                    }
                }
            }
        });
        kernel.band = band;
        Ok(kernel)
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn combination(&self) -> LayerCombination {
        self.combo
    }

    /// Combined kernel for the chord `y - x`, the normal at the source `y`
    /// and the normal at the target `x`.
    #[inline]
    fn kernel(&self, chord: Point, nu_y: Point, nu_x: Point) -> Complex64 {
        let r = chord[0].hypot(chord[1]);
        let (h0, h1) = hankel_pair(self.k * r);
        let c = self.combo;
        let mut v = c.s * (0.25 * I) * h0;
        if c.d != Complex64::new(0.0, 0.0) || c.sprime != Complex64::new(0.0, 0.0) {
            // grad_y G = g (y - x)
            let g = -0.25 * I * self.k * h1 / r;
            v += g * (c.d * dot(chord, nu_y) - c.sprime * dot(chord, nu_x));
        }
        v
    }

    /// Matrix entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let n = self.len();
        let d = (j + n - i) % n;
        let mut v = Complex64::new(0.0, 0.0);
        if d >= self.n_skipped && d <= n - self.n_skipped {
            let b = self.boundary;
            let (x, y) = (b.nodes()[i], b.nodes()[j]);
            let chord = [y[0] - x[0], y[1] - x[1]];
            v += self.kernel(chord, b.normals()[j], b.normals()[i]) * (b.spacing() * b.speeds()[j]);
        }
        let off = if d <= n / 2 { d as isize } else { d as isize - n as isize };
        if off.unsigned_abs() <= self.radius {
            v += self.band[i * (2 * self.radius + 1) + (off + self.radius as isize) as usize];
        }
        if i == j {
            v += self.combo.identity;
        }
        v
    }

    /// Dense `N x N` matrix.
    pub fn assemble(&self) -> Mat<Complex64> {
        let n = self.len();
        let mut m = Mat::<Complex64>::zeros(n, n);
        const CHUNK: usize = 32;
        m.par_col_chunks_mut(CHUNK).enumerate().for_each(|(c, mut block)| {
            for jj in 0..block.ncols() {
                let j = c * CHUNK + jj;
                for i in 0..n {
                    block[(i, jj)] = self.entry(i, j);
                }
            }
        });
        m
    }
}

/// Assembled Nyström matrix.
#[derive(Debug, Clone)]
pub struct BoundaryOperatorMatrix {
    pub kind: OperatorKind,
    pub k: f64,
    pub entries: Mat<Complex64>,
}

/// Nyström matrix of a single layer operator.
pub fn assemble_layer(
    kind: LayerKind,
    k: f64,
    boundary: &DiscretizedBoundary,
    rule: &AlpertRule,
) -> Result<BoundaryOperatorMatrix> {
    let kernel = NystromKernel::new(boundary, k, LayerCombination::layer(kind), rule)?;
    let kind = match kind {
        LayerKind::S => OperatorKind::S,
        LayerKind::D => OperatorKind::D,
        LayerKind::Sprime => OperatorKind::Sprime,
    };
    Ok(BoundaryOperatorMatrix { kind, k, entries: kernel.assemble() })
}

/// Far-field operator kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarFieldKind {
    Sinf,
    Dinf,
}

/// Far-field pattern matrix of a layer potential at the given angles.
#[derive(Debug, Clone)]
pub struct FarFieldMatrix {
    pub kind: FarFieldKind,
    pub k: f64,
    pub angles: Vec<f64>,
    pub entries: Mat<Complex64>,
}

/// Far-field matrix with entries
/// `c e^{-ik xhat . y_j} (1 or xhat . nu_j) |gamma'(t_j)| h`.
pub fn assemble_farfield(
    kind: FarFieldKind,
    k: f64,
    boundary: &DiscretizedBoundary,
    angles: &[f64],
) -> Result<FarFieldMatrix> {
    check_wavenumber(k)?;
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::Invalid("non-finite far-field angle".into()));
    }
    let prefactor = match kind {
        FarFieldKind::Sinf => Complex64::from_polar(1.0 / (8.0 * PI * k).sqrt(), PI / 4.0),
        FarFieldKind::Dinf => Complex64::from_polar((k / (8.0 * PI)).sqrt(), -PI / 4.0),
    };
    let h = boundary.spacing();
    let n = boundary.len();
    let entries = Mat::from_fn(angles.len(), n, |l, j| {
        let xhat = [angles[l].cos(), angles[l].sin()];
        let y = boundary.nodes()[j];
        let phase = Complex64::from_polar(1.0, -k * dot(xhat, y));
        let factor = match kind {
            FarFieldKind::Sinf => 1.0,
            FarFieldKind::Dinf => dot(xhat, boundary.normals()[j]),
        };
        prefactor * phase * (factor * boundary.speeds()[j] * h)
    });
    Ok(FarFieldMatrix { kind, k, angles: angles.to_vec(), entries })
}

/// Evaluates `(s S + d D) phi` at points off the boundary with the plain
/// trapezoid rule.
pub fn evaluate_potential(
    boundary: &DiscretizedBoundary,
    k: f64,
    density: &[Complex64],
    s: Complex64,
    d: Complex64,
    targets: &[Point],
) -> Result<Vec<Complex64>> {
    check_wavenumber(k)?;
    if density.len() != boundary.len() {
        return Err(Error::Dimension(format!(
            "density has {} values for {} nodes",
            density.len(),
            boundary.len()
        )));
    }
    let h = boundary.spacing();
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..boundary.len() {
                let y = boundary.nodes()[j];
                let chord = [y[0] - x[0], y[1] - x[1]];
                let r = chord[0].hypot(chord[1]);
                if !(r > 0.0) {
                    return Err(Error::Domain(format!("target {x:?} lies on a boundary node")));
                }
                let (h0, h1) = hankel_pair(k * r);
                let g = 0.25 * I * h0;
                let dg = -0.25 * I * k * h1 / r * dot(chord, boundary.normals()[j]);
                acc += (s * g + d * dg) * density[j] * (h * boundary.speeds()[j]);
            }
            Ok(acc)
        })
        .collect()
}
