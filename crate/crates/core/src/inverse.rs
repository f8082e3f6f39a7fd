//! Damped Gauss-Newton steps for the boundary shape at a single frequency.
//!
//! The unknown is a real, band-limited normal perturbation `p(t)` of the
//! current curve. The linearized far-field map is `F' = A_inf C^{-1} B O`:
//! `O` evaluates the trigonometric basis at the nodes, `B` multiplies by
//! `-du/dnu` (the Dirichlet data of the derivative), `C` is the combined
//! field matrix and `A_inf` its far-field operator.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{filter_resample, is_simple, perturb, trig_basis, ClosedCurve, DiscretizedBoundary};
use crate::error::{Error, Result};
use crate::forward::{far_field, BoundarySolver, DensityKind, FarFieldData, IncidentWave, SolverKind};
use crate::quadrature::AlpertRule;

/// Real trigonometric basis `1, cos t, sin t, ..., cos mt, sin mt` with
/// `b = 2m + 1` functions, together with the frequency where the curve
/// filter starts its roll-off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationBasis {
    b: usize,
    filter: usize,
}

impl PerturbationBasis {
    /// `b` functions; the filter starts at frequency `b`. An even `b` is
    /// rounded up to the next odd number.
    pub fn new(b: usize) -> Result<Self> {
        if b == 0 {
            return Err(Error::Invalid("bandlimit must be at least 1".into()));
        }
        let b = if b % 2 == 0 { b + 1 } else { b };
        Ok(PerturbationBasis { b, filter: b })
    }

    /// All frequencies up to `m` (`2m + 1` functions); the filter starts at `m`.
    pub fn with_max_frequency(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("maximum frequency must be at least 1".into()));
        }
        Ok(PerturbationBasis { b: 2 * m + 1, filter: m })
    }

    /// Frequency where the curve filter starts.
    pub fn filter_start(&self) -> usize {
        self.filter
    }

    pub fn len(&self) -> usize {
        self.b
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Highest frequency in the basis.
    pub fn max_mode(&self) -> usize {
        (self.b - 1) / 2
    }

    /// `N x b` matrix of basis values at the parameters.
    pub fn evaluate(&self, params: &[f64]) -> Mat<f64> {
        Mat::from_fn(params.len(), self.b, |j, q| trig_basis(q, params[j]))
    }

    /// Root mean square of `p(t)` over a period.
    pub fn rms(&self, coeffs: &[f64]) -> f64 {
        let s: f64 = coeffs.iter().enumerate().map(|(q, c)| if q == 0 { c * c } else { 0.5 * c * c }).sum();
        s.sqrt()
    }
}

/// How the rows of the derivative matrix are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assembly {
    /// One solve with `C` per basis function and direction.
    Direct,
    /// One solve with `C^T` per measurement angle.
    #[default]
    Transpose,
}

/// Real least-squares system with complex rows split into real and
/// imaginary parts and scaled by `sqrt(2 pi / M)`.
#[derive(Debug, Clone)]
pub struct LinearizedSystem {
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
}

impl LinearizedSystem {
    /// Ratio of the largest to the smallest singular value.
    pub fn condition(&self) -> Result<f64> {
        let s = self
            .matrix
            .singular_values()
            .map_err(|e| Error::Numerical(format!("singular values did not converge: {e:?}")))?;
        let top = s.first().copied().unwrap_or(0.0);
        let bottom = s.last().copied().unwrap_or(0.0);
        Ok(if bottom > 0.0 { top / bottom } else { f64::INFINITY })
    }

    /// Minimizes `|matrix p - rhs|` by QR with column pivoting.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let qr = self.matrix.col_piv_qr();
        let rhs = Mat::from_fn(self.rhs.len(), 1, |i, _| self.rhs[i]);
        let x = qr.solve_lstsq(&rhs);
        let p: Vec<f64> = x.col(0).iter().copied().collect();
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("least-squares solution is not finite".into()));
        }
        Ok(p)
    }
}

/// Parameters of the damped Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonControls {
    pub rho: f64,
    pub lambda: f64,
    pub max_backtracks: usize,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub min_step_tol: f64,
    /// Width of the filter roll-off above the bandlimit.
    pub nb: usize,
    /// Number of Fourier modes kept in the curve representation.
    pub curve_modes: usize,
    /// Nodes per unit of `k |Gamma|` in the integral equations.
    pub quadrature_factor: f64,
    pub assembly: Assembly,
}

impl Default for NewtonControls {
    fn default() -> Self {
        NewtonControls {
            rho: 1.0,
            lambda: 0.5,
            max_backtracks: 20,
            max_iters: 50,
            residual_tol: 1e-4,
            min_step_tol: 1e-3,
            nb: 50,
            curve_modes: 256,
            quadrature_factor: 10.0,
            assembly: Assembly::Transpose,
        }
    }
}

impl NewtonControls {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.rho, self.lambda, self.residual_tol, self.min_step_tol, self.quadrature_factor];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || !(self.lambda < 1.0) {
            return Err(Error::Invalid(format!("Newton controls out of range: {self:?}")));
        }
        if self.max_iters == 0 || self.nb == 0 {
            return Err(Error::Invalid("max_iters and nb must be positive".into()));
        }
        Ok(())
    }

    /// Number of modes used to represent curves filtered from frequency `b`.
    pub fn modes_for(&self, b: usize) -> usize {
        let need = 2 * (b + self.nb) + 2;
        let n = self.curve_modes.max(need);
        n + n % 2
    }

    /// Quadrature nodes on a curve: `ceil(factor k |Gamma|)`, enough to
    /// resolve the curve's bandwidth and never below 128, made even.
    pub fn nodes_for(&self, k: f64, curve: &ClosedCurve) -> usize {
        let n = ((self.quadrature_factor * k * curve.length()).ceil() as usize)
            .max(2 * curve.bandwidth() + 2)
            .max(128);
        n + n % 2
    }
}

/// Measurements at one frequency for several incident directions.
#[derive(Debug, Clone)]
pub struct NewtonProblem {
    k: f64,
    waves: Vec<IncidentWave>,
    measured: Vec<Vec<Complex64>>,
    angles: Vec<f64>,
    solver: SolverKind,
}

impl NewtonProblem {
    pub fn new(waves: Vec<IncidentWave>, measured: &[FarFieldData], solver: SolverKind) -> Result<Self> {
        if waves.is_empty() || waves.len() != measured.len() {
            return Err(Error::Dimension(format!("{} waves for {} far-field records", waves.len(), measured.len())));
        }
        let k = waves[0].k();
        let angles = measured[0].angles.clone();
        for (w, m) in waves.iter().zip(measured) {
            if (w.k() - k).abs() > 1e-12 * k || (m.k - k).abs() > 1e-12 * k {
                return Err(Error::Invalid(format!("records mix wavenumbers {k} and {}", m.k)));
            }
            let d = w.direction();
            if (d[0] - m.direction[0]).hypot(d[1] - m.direction[1]) > 1e-12 {
                return Err(Error::Invalid(format!("record direction {:?} does not match wave {d:?}", m.direction)));
            }
            if m.angles.len() != angles.len() || m.angles.iter().zip(&angles).any(|(a, b)| (a - b).abs() > 1e-14) {
                return Err(Error::Dimension("records use different measurement angles".into()));
            }
        }
        Ok(NewtonProblem { k, waves, measured: measured.iter().map(|m| m.values.clone()).collect(), angles, solver })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn waves(&self) -> &[IncidentWave] {
        &self.waves
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Residual scale `sqrt(2 pi / M)`.
    pub fn scale(&self) -> f64 {
        (2.0 * PI / self.angles.len() as f64).sqrt()
    }

    /// Solves the forward problems on `curve` sampled at `n` nodes.
    pub fn linearize(&self, curve: &ClosedCurve, n: usize) -> Result<Linearization> {
        let boundary = Arc::new(curve.sample(n)?);
        Linearization::new(self, boundary)
    }
}

/// Forward solutions on the current curve, everything needed to form and
/// apply the derivative.
pub struct Linearization {
    cfie: BoundarySolver,
    far: Mat<Complex64>,
    dudn: Vec<Vec<Complex64>>,
    predicted: Vec<Vec<Complex64>>,
    residual: Vec<Vec<Complex64>>,
    residual_norm: f64,
    scale: f64,
}

impl Linearization {
    fn new(problem: &NewtonProblem, boundary: Arc<DiscretizedBoundary>) -> Result<Self> {
        let rule = AlpertRule::default();
        let k = problem.k;
        let n = boundary.len();
        let nw = problem.waves.len();
        let green = BoundarySolver::new(boundary.clone(), k, DensityKind::NormalDerivative, problem.solver, &rule)?;
        let rhs = Mat::from_fn(n, nw, |i, l| green.plane_wave_rhs(&problem.waves[l])[i]);
        let psi = green.solve_many(rhs.as_ref())?;
        drop(green);
        let dudn: Vec<Vec<Complex64>> = (0..nw).map(|l| psi.col(l).iter().copied().collect()).collect();

        let cfie = BoundarySolver::new(boundary, k, DensityKind::Cfie, problem.solver, &rule)?;
        let rhs = Mat::from_fn(n, nw, |i, l| -problem.waves[l].value(cfie.boundary().nodes()[i]));
        let phi = cfie.solve_many(rhs.as_ref())?;
        let far = cfie.far_field_matrix(&problem.angles)?;
        let u = &far * &phi;
        let predicted: Vec<Vec<Complex64>> = (0..nw).map(|l| u.col(l).iter().copied().collect()).collect();
        let residual: Vec<Vec<Complex64>> = predicted
            .iter()
            .zip(&problem.measured)
            .map(|(p, m)| m.iter().zip(p).map(|(a, b)| a - b).collect())
            .collect();
        let scale = problem.scale();
        let residual_norm = scale * residual.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok(Linearization { cfie, far, dudn, predicted, residual, residual_norm, scale })
    }

    pub fn boundary(&self) -> &DiscretizedBoundary {
        self.cfie.boundary()
    }

    /// Far fields of the current curve, one vector per direction.
    pub fn predicted(&self) -> &[Vec<Complex64>] {
        &self.predicted
    }

    /// Normal derivatives of the total fields at the nodes.
    pub fn normal_derivatives(&self) -> &[Vec<Complex64>] {
        &self.dudn
    }

    /// `sqrt(2 pi / M) |measured - predicted|` over all directions.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Derivative of the far field for direction `l` in the direction of the
    /// normal perturbation with trigonometric coefficients `p`.
    pub fn frechet_apply(&self, l: usize, p: &[f64]) -> Result<Vec<Complex64>> {
        let b = self.boundary();
        let data: Vec<Complex64> =
            b.params().iter().zip(&self.dudn[l]).map(|(&t, du)| -du * crate::curve::eval_trig(p, t)).collect();
        let phi = self.cfie.solve(&data, [0.0, 0.0])?;
        Ok((0..self.far.nrows()).map(|m| (0..b.len()).map(|j| self.far[(m, j)] * phi.values[j]).sum()).collect())
    }

    /// Stacked real least-squares system for the update.
    pub fn build_system(&self, basis: &PerturbationBasis, assembly: Assembly) -> Result<LinearizedSystem> {
        let n = self.boundary().len();
        let m = self.far.nrows();
        let nw = self.dudn.len();
        let nb = basis.len();
        if 2 * m * nw <= nb {
            return Err(Error::Invalid(format!("{} real equations cannot determine {nb} unknowns", 2 * m * nw)));
        }
        let o = basis.evaluate(self.boundary().params());
        let blocks: Vec<Mat<Complex64>> = match assembly {
            Assembly::Direct => {
                let mut out = Vec::with_capacity(nw);
                for du in &self.dudn {
                    let bo = Mat::from_fn(n, nb, |j, q| -du[j] * o[(j, q)]);
                    let x = self.cfie.solve_many(bo.as_ref())?;
                    out.push(&self.far * &x);
                }
                out
            }
            Assembly::Transpose => {
                let at = self.far.transpose().to_owned();
                let w = self.cfie.solve_transpose_many(at.as_ref())?;
                self.dudn
                    .iter()
                    .map(|du| {
                        let bo = Mat::from_fn(n, nb, |j, q| -du[j] * o[(j, q)]);
                        w.transpose() * &bo
                    })
                    .collect()
            }
        };
        let rows = 2 * m * nw;
        let mut matrix = Mat::zeros(rows, nb);
        let mut rhs = vec![0.0; rows];
        for (l, block) in blocks.iter().enumerate() {
            let base = 2 * m * l;
            for i in 0..m {
                for q in 0..nb {
                    matrix[(base + i, q)] = self.scale * block[(i, q)].re;
                    matrix[(base + m + i, q)] = self.scale * block[(i, q)].im;
                }
                rhs[base + i] = self.scale * self.residual[l][i].re;
                rhs[base + m + i] = self.scale * self.residual[l][i].im;
            }
        }
        if (0..nb).any(|q| matrix.col(q).iter().any(|v| !v.is_finite())) {
            return Err(Error::Numerical("derivative matrix has non-finite entries".into()));
        }
        Ok(LinearizedSystem { matrix, rhs })
    }
}

/// Derivative of the far field for one incident wave on a discretized
/// boundary, in the direction of the normal perturbation with
/// trigonometric coefficients `p`.
pub fn frechet_apply(
    boundary: Arc<DiscretizedBoundary>,
    wave: &IncidentWave,
    p: &[f64],
    angles: &[f64],
    solver: SolverKind,
) -> Result<FarFieldData> {
    let rule = AlpertRule::default();
    let green = BoundarySolver::new(boundary.clone(), wave.k(), DensityKind::NormalDerivative, solver, &rule)?;
    let du = green.scatter(wave)?;
    drop(green);
    let data: Vec<Complex64> =
        boundary.params().iter().zip(&du.values).map(|(&t, d)| -d * crate::curve::eval_trig(p, t)).collect();
    let cfie = BoundarySolver::new(boundary, wave.k(), DensityKind::Cfie, solver, &rule)?;
    let phi = cfie.solve(&data, wave.direction())?;
    far_field(&phi, angles)
}

/// Outcome of one accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub iter: usize,
    pub residual: f64,
    pub step_norm: f64,
    pub backtracks: usize,
}

/// Damps the update until the perturbed curve is simple and survives
/// filtering. Returns the filtered curve and the number of halvings used.
pub fn accept_step(
    curve: &ClosedCurve,
    p: &[f64],
    basis: &PerturbationBasis,
    controls: &NewtonControls,
) -> Result<(ClosedCurve, usize)> {
    let modes = controls.modes_for(basis.filter_start());
    for l in 0..=controls.max_backtracks {
        let scale = controls.rho * controls.lambda.powi(l as i32);
        let candidate = perturb(curve, p, scale)?;
        let ns = 4096.max(8 * candidate.bandwidth());
        if !is_simple(&candidate, ns) {
            continue;
        }
        match filter_resample(&candidate, basis.filter_start(), controls.nb, modes) {
            Ok(c) => return Ok((c, l)),
            Err(Error::Geometry(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::StepFailure(format!("no simple curve after {} backtracks", controls.max_backtracks)))
}

/// One damped Gauss-Newton step from a linearization of `curve`. Returns
/// the accepted curve, its linearization and the step report.
pub fn newton_step(
    problem: &NewtonProblem,
    curve: &ClosedCurve,
    lin: &Linearization,
    basis: &PerturbationBasis,
    controls: &NewtonControls,
    iter: usize,
) -> Result<(ClosedCurve, Linearization, StepReport)> {
    let system = lin.build_system(basis, controls.assembly)?;
    let p = system.solve()?;
    let (next, backtracks) = accept_step(curve, &p, basis, controls)?;
    let next_lin = problem.linearize(&next, controls.nodes_for(problem.k, &next))?;
    let report = StepReport { iter, residual: next_lin.residual_norm(), step_norm: basis.rms(&p), backtracks };
    Ok((next, next_lin, report))
}

/// Why a Newton iteration stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Residual,
    SmallStep,
    MaxIters,
    StepFailure(String),
}

/// Iterates and step history of a Newton run.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub curve: ClosedCurve,
    pub initial_residual: f64,
    pub history: Vec<StepReport>,
    pub stop: StopReason,
}

impl NewtonOutcome {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(self.initial_residual, |r| r.residual)
    }
}

/// Newton iteration at one frequency until the residual drops below the
/// tolerance, the update becomes small, or the iteration cap is reached.
/// A step failure stops the iteration and is reported in the outcome.
pub fn run_newton(
    problem: &NewtonProblem,
    curve0: &ClosedCurve,
    basis: &PerturbationBasis,
    controls: &NewtonControls,
) -> Result<NewtonOutcome> {
    run_newton_observed(problem, curve0, basis, controls, &mut |_| {})
}

/// [`run_newton`], calling `on_accept` with every accepted iterate.
pub fn run_newton_observed(
    problem: &NewtonProblem,
    curve0: &ClosedCurve,
    basis: &PerturbationBasis,
    controls: &NewtonControls,
    on_accept: &mut dyn FnMut(&ClosedCurve),
) -> Result<NewtonOutcome> {
    controls.validate()?;
    let mut curve = curve0.clone();
    let mut lin = problem.linearize(&curve, controls.nodes_for(problem.k, &curve))?;
    let initial_residual = lin.residual_norm();
    let mut history = Vec::new();
    let mut stop = StopReason::MaxIters;
    for iter in 1..=controls.max_iters {
        if lin.residual_norm() < controls.residual_tol {
            stop = StopReason::Residual;
            break;
        }
        let system = lin.build_system(basis, controls.assembly)?;
        let p = system.solve()?;
        let step_norm = basis.rms(&p);
        if step_norm < controls.min_step_tol {
            stop = StopReason::SmallStep;
            break;
        }
        let (next, backtracks) = match accept_step(&curve, &p, basis, controls) {
            Ok(v) => v,
            Err(Error::StepFailure(msg)) => {
                stop = StopReason::StepFailure(msg);
                break;
            }
            Err(e) => return Err(e),
        };
        on_accept(&next);
        lin = problem.linearize(&next, controls.nodes_for(problem.k, &next))?;
        curve = next;
        let report = StepReport { iter, residual: lin.residual_norm(), step_norm, backtracks };
        log::debug!("k={} {report:?}", problem.k);
        history.push(report);
    }
    if stop == StopReason::MaxIters && lin.residual_norm() < controls.residual_tol {
        stop = StopReason::Residual;
    }
    Ok(NewtonOutcome { curve, initial_residual, history, stop })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_rounds_to_odd_and_is_orthogonal() {
        let basis = PerturbationBasis::new(4).unwrap();
        assert_eq!(basis.len(), 5);
        assert_eq!(basis.max_mode(), 2);
        let n = 32;
        let t: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let o = basis.evaluate(&t);
        let g = o.transpose() * &o;
        for p in 0..5 {
            for q in 0..5 {
                let expect = if p != q { 0.0 } else if p == 0 { n as f64 } else { n as f64 / 2.0 };
                assert!((g[(p, q)] - expect).abs() < 1e-12);
            }
        }
        assert!(PerturbationBasis::new(0).is_err());
        let wide = PerturbationBasis::with_max_frequency(6).unwrap();
        assert_eq!((wide.len(), wide.max_mode(), wide.filter_start()), (13, 6, 6));
    }

    #[test]
    fn rms_matches_samples() {
        let basis = PerturbationBasis::new(5).unwrap();
        let c = [0.3, -1.0, 0.5, 0.2, 0.7];
        let n = 64;
        let s: f64 = (0..n)
            .map(|j| crate::curve::eval_trig(&c, 2.0 * PI * j as f64 / n as f64).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((basis.rms(&c) - s.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn controls_validation() {
        assert!(NewtonControls::default().validate().is_ok());
        let bad = NewtonControls { lambda: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let c = NewtonControls::default();
        assert_eq!(c.modes_for(3), 256);
        assert_eq!(c.modes_for(121), 2 * 171 + 2);
    }

    #[test]
    fn least_squares_solves_overdetermined_system() {
        let matrix = Mat::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let rhs: Vec<f64> = (0..6).map(|i| 2.0 - 0.5 * i as f64).collect();
        let p = LinearizedSystem { matrix, rhs }.solve().unwrap();
        assert!((p[0] - 2.0).abs() < 1e-13 && (p[1] + 0.5).abs() < 1e-13);
    }
}
