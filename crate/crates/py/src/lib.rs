//! Python bindings: curves, forward solves, data synthesis and reconstruction.

use std::path::PathBuf;
use std::sync::Arc;

use helio2d_core::curve::{filter_resample, hausdorff, is_simple, ClosedCurve, CurveFile};
use helio2d_core::forward::{
    far_field as far_field_of, measurement_angles, point_source_rhs, resolution, scattered_field, solve_cfie,
    solve_green, BoundarySolver, DensityKind, IncidentWave, SolverKind,
};
use helio2d_core::hodlr::HodlrOptions;
use helio2d_core::manifest::{read_json, write_json, RunManifest};
use helio2d_core::quadrature::AlpertRule;
use helio2d_core::rla::{run_rla, RlaConfig, RlaState};
use helio2d_core::specfun::green;
use helio2d_core::synth::{synthesize, Dataset as CoreDataset, NoiseModel, SynthRecord};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: helio2d_core::Error) -> PyErr {
    match e {
        helio2d_core::Error::Invalid(_)
        | helio2d_core::Error::Domain(_)
        | helio2d_core::Error::Dimension(_)
        | helio2d_core::Error::Bandwidth(_)
        | helio2d_core::Error::Geometry(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn solver_kind(name: &str, hodlr_tol: f64) -> PyResult<SolverKind> {
    match name {
        "dense" => Ok(SolverKind::Dense),
        "hodlr" => Ok(SolverKind::Hodlr(HodlrOptions { tol: hodlr_tol, ..HodlrOptions::default() })),
        "auto" => Ok(SolverKind::Auto),
        other => Err(PyValueError::new_err(format!("unknown solver {other:?}, expected dense, hodlr or auto"))),
    }
}

/// Closed smooth curve stored by its Fourier coefficients.
#[pyclass(name = "Curve", module = "helio2d", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Curve {
    inner: ClosedCurve,
}

#[pymethods]
impl Curve {
    #[staticmethod]
    fn star7() -> Self {
        Curve { inner: ClosedCurve::star7() }
    }

    #[staticmethod]
    #[pyo3(signature = (radius, center = (0.0, 0.0), n_modes = 64))]
    fn circle(radius: f64, center: (f64, f64), n_modes: usize) -> PyResult<Self> {
        Ok(Curve { inner: ClosedCurve::circle(radius, [center.0, center.1], n_modes).map_err(err)? })
    }

    #[staticmethod]
    fn from_samples(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<Self> {
        Ok(Curve { inner: ClosedCurve::from_samples(&xs, &ys).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let f: CurveFile = read_json(&path).map_err(err)?;
        Ok(Curve { inner: ClosedCurve::try_from(f).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_json(&path, &CurveFile::from(&self.inner)).map_err(err)
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes()
    }

    #[getter]
    fn bandwidth(&self) -> usize {
        self.inner.bandwidth()
    }

    fn area(&self) -> f64 {
        self.inner.signed_area()
    }

    /// `n` points at equispaced parameter values.
    fn points(&self, n: usize) -> PyResult<Vec<(f64, f64)>> {
        Ok(self.inner.points(n).map_err(err)?.into_iter().map(|[x, y]| (x, y)).collect())
    }

    #[pyo3(signature = (ns = 4096))]
    fn is_simple(&self, ns: usize) -> bool {
        is_simple(&self.inner, ns)
    }

    #[pyo3(signature = (other, ns = 4096))]
    fn hausdorff(&self, other: &Curve, ns: usize) -> PyResult<f64> {
        hausdorff(&self.inner, &other.inner, ns).map_err(err)
    }

    /// Low-pass filter from mode `b` over `nb` modes, then reparametrize by
    /// arclength with `n` modes.
    #[pyo3(signature = (b, n, nb = 50))]
    fn filter_resample(&self, b: usize, n: usize, nb: usize) -> PyResult<Curve> {
        Ok(Curve { inner: filter_resample(&self.inner, b, nb, n).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("Curve(n_modes={}, length={})", self.inner.n_modes(), self.inner.length())
    }
}

/// Measurement angles `(2l - 1) pi / m`.
#[pyfunction]
fn far_field_angles(m: usize) -> Vec<f64> {
    measurement_angles(m)
}

/// Far field of the sound-soft obstacle bounded by `curve` for the plane
/// wave with wavenumber `k` and direction angle `direction`.
#[pyfunction]
#[pyo3(signature = (curve, k, direction, angles, nodes = None, formulation = "cfie", solver = "auto", hodlr_tol = 1e-10))]
#[allow(clippy::too_many_arguments)]
fn far_field(
    py: Python<'_>,
    curve: &Curve,
    k: f64,
    direction: f64,
    angles: Vec<f64>,
    nodes: Option<usize>,
    formulation: &str,
    solver: &str,
    hodlr_tol: f64,
) -> PyResult<Vec<Complex64>> {
    let solver = solver_kind(solver, hodlr_tol)?;
    let green_path = match formulation {
        "cfie" => false,
        "green" => true,
        other => return Err(PyValueError::new_err(format!("unknown formulation {other:?}, expected cfie or green"))),
    };
    let c = curve.inner.clone();
    py.detach(move || {
        let n = nodes
            .unwrap_or_else(|| resolution(k, c.length(), 20.0))
            .max(AlpertRule::default().min_points())
            .max(2 * c.bandwidth() + 2);
        let wave = IncidentWave::from_angle(k, direction)?;
        let boundary = Arc::new(c.sample(n)?);
        let density = if green_path {
            solve_green(boundary, &wave, solver)?
        } else {
            let rhs: Vec<Complex64> = boundary.nodes().iter().map(|&x| -wave.value(x)).collect();
            solve_cfie(boundary, &wave, &rhs, solver)?
        };
        Ok(far_field_of(&density, &angles)?.values)
    })
    .map_err(err)
}

/// Relative error of the exterior solution at `(10, 8)` for a point source
/// at the origin inside the star-shaped curve, and the wall time.
#[pyfunction]
#[pyo3(signature = (k, nodes, solver = "dense", hodlr_tol = 1e-10))]
fn point_source_benchmark(py: Python<'_>, k: f64, nodes: usize, solver: &str, hodlr_tol: f64) -> PyResult<(f64, f64)> {
    let solver = solver_kind(solver, hodlr_tol)?;
    py.detach(move || {
        let target = [10.0, 8.0];
        let t = std::time::Instant::now();
        let b = Arc::new(ClosedCurve::star7().sample(nodes)?);
        let op = BoundarySolver::new(b.clone(), k, DensityKind::Cfie, solver, &AlpertRule::default())?;
        let rhs = point_source_rhs(&b, k, [0.0, 0.0])?;
        let u = scattered_field(&op.solve(&rhs, [1.0, 0.0])?, &[target])?[0];
        let exact = -green(k, target, [0.0, 0.0])?;
        Ok(((u - exact).norm() / exact.norm(), t.elapsed().as_secs_f64()))
    })
    .map_err(err)
}

/// Multi-frequency reconstruction settings.
#[pyclass(name = "Config", module = "helio2d", skip_from_py_object)]
#[derive(Clone)]
pub struct Config {
    inner: RlaConfig,
}

#[pymethods]
impl Config {
    #[staticmethod]
    fn star_example() -> Self {
        Config { inner: RlaConfig::star_example() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Config { inner: RlaConfig::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn wavenumbers(&self) -> Vec<f64> {
        self.inner.wavenumbers()
    }

    #[getter]
    fn get_stages(&self) -> usize {
        self.inner.stages
    }

    #[setter]
    fn set_stages(&mut self, v: usize) -> PyResult<()> {
        self.update(|c| c.stages = v)
    }

    #[getter]
    fn get_directions(&self) -> usize {
        self.inner.directions
    }

    #[setter]
    fn set_directions(&mut self, v: usize) -> PyResult<()> {
        self.update(|c| c.directions = v)
    }

    #[getter]
    fn get_angles(&self) -> usize {
        self.inner.angles
    }

    #[setter]
    fn set_angles(&mut self, v: usize) -> PyResult<()> {
        self.update(|c| c.angles = v)
    }

    #[getter]
    fn get_max_iters(&self) -> usize {
        self.inner.controls.max_iters
    }

    #[setter]
    fn set_max_iters(&mut self, v: usize) -> PyResult<()> {
        self.update(|c| c.controls.max_iters = v)
    }
}

impl Config {
    fn update(&mut self, f: impl FnOnce(&mut RlaConfig)) -> PyResult<()> {
        let mut next = self.inner.clone();
        f(&mut next);
        next.validate().map_err(err)?;
        self.inner = next;
        Ok(())
    }
}

/// Far-field measurements for every wavenumber and direction of a config.
#[pyclass(name = "Dataset", module = "helio2d", frozen, skip_from_py_object)]
pub struct Dataset {
    data: CoreDataset,
    records: Vec<SynthRecord>,
    truth: Option<ClosedCurve>,
    noise: Option<NoiseModel>,
}

#[pymethods]
impl Dataset {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let (data, index) = CoreDataset::read(&path).map_err(err)?;
        let truth = CoreDataset::true_curve(&path, &index).map_err(err)?;
        let noise = NoiseModel::new(index.delta, index.seed).map_err(err)?;
        Ok(Dataset { data, records: Vec::new(), truth: Some(truth), noise: Some(noise) })
    }

    fn __len__(&self) -> usize {
        self.data.records.len()
    }

    /// Noisy far field for wavenumber `k` and direction angle `angle`.
    fn get(&self, k: f64, angle: f64) -> PyResult<Vec<Complex64>> {
        let d = [angle.cos(), angle.sin()];
        Ok(self.data.get(k, d).map_err(err)?.values.clone())
    }

    /// Relative noise `|v - u| / |u|` of every synthesized record.
    fn noise_levels(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| {
                let num: f64 = r.noisy.values.iter().zip(&r.clean.values).map(|(v, u)| (v - u).norm_sqr()).sum();
                let den: f64 = r.clean.values.iter().map(|u| u.norm_sqr()).sum();
                (num / den).sqrt()
            })
            .collect()
    }

    fn write(&self, path: PathBuf, config: &Config) -> PyResult<()> {
        let (Some(truth), Some(noise)) = (&self.truth, &self.noise) else {
            return Err(PyValueError::new_err("dataset has no true curve"));
        };
        if self.records.is_empty() {
            return Err(PyValueError::new_err("only synthesized datasets can be written"));
        }
        let mut m = RunManifest::new("synth", &config.inner).map_err(err)?;
        CoreDataset::write(&path, &self.records, truth, noise, &mut m).map_err(err)?;
        Ok(())
    }
}

/// Synthesizes noisy far fields of `truth` for every stage of `config`.
#[pyfunction]
#[pyo3(signature = (truth, config, delta = 0.05, seed = 1, solver = "auto"))]
fn synthesize_data(py: Python<'_>, truth: &Curve, config: &Config, delta: f64, seed: u64, solver: &str) -> PyResult<Dataset> {
    let solver = solver_kind(solver, 1e-12)?;
    let noise = NoiseModel::new(delta, seed).map_err(err)?;
    let (t, c) = (truth.inner.clone(), config.inner.clone());
    let records = py.detach(move || synthesize(&t, &c, &noise, solver)).map_err(err)?;
    Ok(Dataset {
        data: CoreDataset::from_records(&records),
        records,
        truth: Some(truth.inner.clone()),
        noise: Some(noise),
    })
}

/// Reconstruction produced by [`invert`].
#[pyclass(name = "Reconstruction", module = "helio2d", frozen, skip_from_py_object)]
pub struct Reconstruction {
    state: RlaState,
}

#[pymethods]
impl Reconstruction {
    #[getter]
    fn curve(&self) -> Curve {
        Curve { inner: self.state.curve.clone() }
    }

    #[getter]
    fn iterations(&self) -> Vec<usize> {
        self.state.iterations()
    }

    #[getter]
    fn wavenumbers(&self) -> Vec<f64> {
        self.state.stages.iter().map(|s| s.k).collect()
    }

    #[getter]
    fn stage_curves(&self) -> Vec<Curve> {
        self.state.stages.iter().map(|s| Curve { inner: s.curve.clone() }).collect()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.state.stages.iter().map(|s| s.final_residual()).collect()
    }

    /// `(k, message)` of the stage that failed, if any.
    #[getter]
    fn failure(&self) -> Option<(f64, String)> {
        self.state.failure.clone()
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.state.write(&path).map_err(err)
    }
}

/// Runs the multi-frequency reconstruction from the starting circle of
/// `config` against `data`.
#[pyfunction]
#[pyo3(signature = (config, data, solver = "auto"))]
fn invert(py: Python<'_>, config: &Config, data: &Dataset, solver: &str) -> PyResult<Reconstruction> {
    let solver = solver_kind(solver, 1e-12)?;
    let c = config.inner.clone();
    let d = data.data.clone();
    let state = py.detach(move || run_rla(&c, &d, &c.initial_curve()?, solver)).map_err(err)?;
    Ok(Reconstruction { state })
}

#[pymodule]
fn helio2d(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Curve>()?;
    m.add_class::<Config>()?;
    m.add_class::<Dataset>()?;
    m.add_class::<Reconstruction>()?;
    m.add_function(wrap_pyfunction!(far_field_angles, m)?)?;
    m.add_function(wrap_pyfunction!(far_field, m)?)?;
    m.add_function(wrap_pyfunction!(point_source_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_data, m)?)?;
    m.add_function(wrap_pyfunction!(invert, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
