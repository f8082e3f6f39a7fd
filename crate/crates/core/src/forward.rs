//! Forward scattering by a sound-soft obstacle.
//!
//! Two boundary integral formulations are available:
//!
//! * combined field: `(I/2 + D - i eta S) phi = -u_inc`, scattered field
//!   `u_s = (D - i eta S) phi`, far field `(D_inf - i eta S_inf) phi`;
//! * normal derivative of the total field: `(I/2 + S' + i eta S) psi =
//!   du_inc/dnu + i eta u_inc`, scattered field `u_s = -S psi`, far field
//!   `-S_inf psi`.
//!
//! Both use `eta = max(k, 1)`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use faer::{Mat, MatRef};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::DiscretizedBoundary;
use crate::error::{Error, Result};
use crate::hodlr::{HodlrMatrix, HodlrOptions};
use crate::linalg::{DenseLu, LinearSolver};
use crate::potentials::{
    assemble_farfield, check_wavenumber, evaluate_potential, FarFieldKind, LayerCombination, NystromKernel,
};
use crate::quadrature::AlpertRule;
use crate::specfun::Point;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Size above which [`SolverKind::Auto`] switches to the HODLR solver.
pub const HODLR_THRESHOLD: usize = 4096;

/// Coupling parameter of both integral equations.
pub fn coupling(k: f64) -> f64 {
    k.max(1.0)
}

/// Number of nodes `ceil(factor * k * length)` used to resolve a boundary.
pub fn resolution(k: f64, length: f64, factor: f64) -> usize {
    (factor * k * length).ceil() as usize
}

/// Far-field angles `(2 l - 1) pi / m`, `l = 1..m`.
pub fn measurement_angles(m: usize) -> Vec<f64> {
    (1..=m).map(|l| (2 * l - 1) as f64 * PI / m as f64).collect()
}

/// Plane wave `exp(i k x . d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave {
    k: f64,
    d: Point,
}

impl IncidentWave {
    pub fn new(k: f64, d: Point) -> Result<Self> {
        check_wavenumber(k)?;
        if (d[0].hypot(d[1]) - 1.0).abs() > 1e-14 {
            return Err(Error::Invalid(format!("incident direction must be a unit vector, got {d:?}")));
        }
        Ok(IncidentWave { k, d })
    }

    /// Direction `(cos angle, sin angle)`.
    pub fn from_angle(k: f64, angle: f64) -> Result<Self> {
        Self::new(k, [angle.cos(), angle.sin()])
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn direction(&self) -> Point {
        self.d
    }

    pub fn value(&self, x: Point) -> Complex64 {
        Complex64::from_polar(1.0, self.k * (x[0] * self.d[0] + x[1] * self.d[1]))
    }

    /// `i k (d . nu) exp(i k x . d)`.
    pub fn normal_derivative(&self, x: Point, nu: Point) -> Complex64 {
        I * self.k * (self.d[0] * nu[0] + self.d[1] * nu[1]) * self.value(x)
    }
}

/// Linear solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SolverKind {
    Dense,
    Hodlr(HodlrOptions),
    /// Dense up to [`HODLR_THRESHOLD`] nodes, HODLR with default options above.
    #[default]
    Auto,
}

impl SolverKind {
    fn resolve(self, n: usize) -> SolverKind {
        match self {
            SolverKind::Auto if n > HODLR_THRESHOLD => SolverKind::Hodlr(HodlrOptions::default()),
            SolverKind::Auto => SolverKind::Dense,
            other => other,
        }
    }
}

/// Which boundary unknown a density represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityKind {
    /// Combined field density `phi`.
    Cfie,
    /// Normal derivative of the total field.
    NormalDerivative,
}

impl DensityKind {
    fn combination(self, eta: f64) -> LayerCombination {
        match self {
            DensityKind::Cfie => LayerCombination::cfie(eta),
            DensityKind::NormalDerivative => LayerCombination::green(eta),
        }
    }
}

/// Boundary density at the nodes of a discretized boundary.
#[derive(Debug, Clone)]
pub struct DensitySolution {
    pub kind: DensityKind,
    pub values: Vec<Complex64>,
    pub k: f64,
    pub eta: f64,
    /// Incident direction, `[0, 0]` when the data does not come from a plane wave.
    pub direction: Point,
    boundary: Arc<DiscretizedBoundary>,
}

impl DensitySolution {
    pub fn boundary(&self) -> &DiscretizedBoundary {
        &self.boundary
    }
}

/// A factorized boundary integral operator on one boundary and frequency,
/// reusable for many right-hand sides.
pub struct BoundarySolver {
    boundary: Arc<DiscretizedBoundary>,
    k: f64,
    eta: f64,
    kind: DensityKind,
    solver: Box<dyn LinearSolver>,
}

impl BoundarySolver {
    pub fn new(
        boundary: Arc<DiscretizedBoundary>,
        k: f64,
        kind: DensityKind,
        solver: SolverKind,
        rule: &AlpertRule,
    ) -> Result<Self> {
        let eta = coupling(k);
        let kernel = NystromKernel::new(&boundary, k, kind.combination(eta), rule)?;
        let n = boundary.len();
        let solver: Box<dyn LinearSolver> = match solver.resolve(n) {
            SolverKind::Hodlr(options) => {
                let h = HodlrMatrix::compress(|i, j| kernel.entry(i, j), n, options)?;
                if h.dense_fallbacks() > 0 {
                    log::warn!("{} off-diagonal blocks stored densely", h.dense_fallbacks());
                }
                Box::new(h.factorize()?)
            }
            _ => Box::new(DenseLu::new(kernel.assemble())?),
        };
        drop(kernel);
        Ok(BoundarySolver { boundary, k, eta, kind, solver })
    }

    pub fn boundary(&self) -> &Arc<DiscretizedBoundary> {
        &self.boundary
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn linear_solver(&self) -> &dyn LinearSolver {
        self.solver.as_ref()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.boundary.len() {
            return Err(Error::Dimension(format!(
                "right-hand side has {len} rows for {} nodes",
                self.boundary.len()
            )));
        }
        Ok(())
    }

    /// Solves for the density with the given right-hand side.
    pub fn solve(&self, rhs: &[Complex64], direction: Point) -> Result<DensitySolution> {
        self.check_len(rhs.len())?;
        let values = self.solver.solve_vec(rhs);
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("solution has non-finite values".into()));
        }
        Ok(DensitySolution { kind: self.kind, values, k: self.k, eta: self.eta, direction, boundary: self.boundary.clone() })
    }

    /// Solves with every column of `rhs`.
    pub fn solve_many(&self, rhs: MatRef<'_, Complex64>) -> Result<Mat<Complex64>> {
        self.check_len(rhs.nrows())?;
        Ok(self.solver.solve(rhs))
    }

    /// Solves with the transposed operator for every column of `rhs`.
    pub fn solve_transpose_many(&self, rhs: MatRef<'_, Complex64>) -> Result<Mat<Complex64>> {
        self.check_len(rhs.nrows())?;
        Ok(self.solver.solve_transpose(rhs))
    }

    /// Right-hand side for scattering of a plane wave.
    pub fn plane_wave_rhs(&self, wave: &IncidentWave) -> Vec<Complex64> {
        let b = &self.boundary;
        match self.kind {
            DensityKind::Cfie => b.nodes().iter().map(|&x| -wave.value(x)).collect(),
            DensityKind::NormalDerivative => b
                .nodes()
                .iter()
                .zip(b.normals())
                .map(|(&x, &nu)| wave.normal_derivative(x, nu) + I * self.eta * wave.value(x))
                .collect(),
        }
    }

    /// Density for scattering of a plane wave.
    pub fn scatter(&self, wave: &IncidentWave) -> Result<DensitySolution> {
        if (wave.k - self.k).abs() > 1e-14 * self.k {
            return Err(Error::Invalid(format!("wave has k={} but the operator has k={}", wave.k, self.k)));
        }
        self.solve(&self.plane_wave_rhs(wave), wave.d)
    }

    /// Far-field matrix mapping densities of this kind to far-field values.
    pub fn far_field_matrix(&self, angles: &[f64]) -> Result<Mat<Complex64>> {
        far_field_matrix(&self.boundary, self.k, self.kind, angles)
    }
}

/// Far-field matrix: `D_inf - i eta S_inf` for combined field densities,
/// `-S_inf` for normal derivatives.
pub fn far_field_matrix(boundary: &DiscretizedBoundary, k: f64, kind: DensityKind, angles: &[f64]) -> Result<Mat<Complex64>> {
    let s = assemble_farfield(FarFieldKind::Sinf, k, boundary, angles)?.entries;
    Ok(match kind {
        DensityKind::Cfie => {
            let d = assemble_farfield(FarFieldKind::Dinf, k, boundary, angles)?.entries;
            let eta = coupling(k);
            Mat::from_fn(angles.len(), boundary.len(), |l, j| d[(l, j)] - I * eta * s[(l, j)])
        }
        DensityKind::NormalDerivative => Mat::from_fn(angles.len(), boundary.len(), |l, j| -s[(l, j)]),
    })
}

/// Solves the combined field equation with an arbitrary right-hand side.
/// For plane-wave scattering the right-hand side is `-u_inc` at the nodes.
pub fn solve_cfie(
    boundary: Arc<DiscretizedBoundary>,
    wave: &IncidentWave,
    rhs: &[Complex64],
    solver: SolverKind,
) -> Result<DensitySolution> {
    let op = BoundarySolver::new(boundary, wave.k, DensityKind::Cfie, solver, &AlpertRule::default())?;
    op.solve(rhs, wave.d)
}

/// Solves for the normal derivative of the total field.
pub fn solve_green(boundary: Arc<DiscretizedBoundary>, wave: &IncidentWave, solver: SolverKind) -> Result<DensitySolution> {
    let op = BoundarySolver::new(boundary, wave.k, DensityKind::NormalDerivative, solver, &AlpertRule::default())?;
    op.scatter(wave)
}

/// Far-field pattern produced by a density.
pub fn far_field(density: &DensitySolution, angles: &[f64]) -> Result<FarFieldData> {
    let m = far_field_matrix(&density.boundary, density.k, density.kind, angles)?;
    let values = (0..angles.len())
        .map(|l| (0..m.ncols()).map(|j| m[(l, j)] * density.values[j]).sum())
        .collect();
    Ok(FarFieldData { k: density.k, direction: density.direction, angles: angles.to_vec(), values })
}

/// Scattered field at points off the boundary.
pub fn scattered_field(density: &DensitySolution, targets: &[Point]) -> Result<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let (s, d) = match density.kind {
        DensityKind::Cfie => (-I * density.eta, one),
        DensityKind::NormalDerivative => (-one, zero),
    };
    evaluate_potential(&density.boundary, density.k, &density.values, s, d, targets)
}

/// Far-field values at a set of angles.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldData {
    pub k: f64,
    pub direction: Point,
    pub angles: Vec<f64>,
    pub values: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct FarFieldFile {
    k: f64,
    direction: [f64; 2],
    angles: Vec<f64>,
    values: Vec<[f64; 2]>,
}

impl FarFieldData {
    pub fn to_json(&self) -> Result<String> {
        let file = FarFieldFile {
            k: self.k,
            direction: self.direction,
            angles: self.angles.clone(),
            values: self.values.iter().map(|z| [z.re, z.im]).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: FarFieldFile = serde_json::from_str(text)?;
        if f.angles.len() != f.values.len() || f.angles.is_empty() {
            return Err(Error::Invalid(format!(
                "far-field file has {} angles and {} values",
                f.angles.len(),
                f.values.len()
            )));
        }
        check_wavenumber(f.k)?;
        Ok(FarFieldData {
            k: f.k,
            direction: f.direction,
            angles: f.angles,
            values: f.values.into_iter().map(|v| Complex64::new(v[0], v[1])).collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `-G_k(x, z)` at the nodes: boundary data whose exterior Dirichlet
/// solution is `-G_k(., z)` for an interior source `z`.
pub fn point_source_rhs(boundary: &DiscretizedBoundary, k: f64, z: Point) -> Result<Vec<Complex64>> {
    boundary.nodes().iter().map(|&x| crate::specfun::green(k, x, z).map(|g| -g)).collect()
}
