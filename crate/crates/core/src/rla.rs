//! Recursive linearization: Newton solves over increasing wavenumbers, each
//! started from the reconstruction at the previous one.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::{ClosedCurve, CurveFile, CurvePoints};
use crate::error::{Error, Result};
use crate::forward::{measurement_angles, IncidentWave, SolverKind};
use crate::inverse::{run_newton_observed, NewtonControls, NewtonProblem, PerturbationBasis, StepReport, StopReason};
use crate::manifest::write_json;
use crate::synth::Dataset;

/// Bandlimit used at each frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BandlimitRule {
    /// `ceil(k)`
    Ceil,
    /// `2 ceil(k) + 1`
    TwiceCeilPlusOne,
    /// One value per stage.
    Custom { values: Vec<usize> },
}

impl BandlimitRule {
    pub fn bandlimit(&self, stage: usize, k: f64) -> Result<usize> {
        let c = k.ceil() as usize;
        match self {
            BandlimitRule::Ceil => Ok(c.max(1)),
            BandlimitRule::TwiceCeilPlusOne => Ok(2 * c + 1),
            BandlimitRule::Custom { values } => values
                .get(stage)
                .copied()
                .ok_or_else(|| Error::Invalid(format!("no custom bandlimit for stage {stage}"))),
        }
    }
}

/// How a bandlimit `b` translates into the perturbation basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandlimitMeaning {
    /// `b` real functions, frequencies up to `(b - 1) / 2`.
    DegreesOfFreedom,
    /// Frequencies up to `b`, `2b + 1` real functions.
    #[default]
    MaxFrequency,
}

/// Damping parameter as a function of the wavenumber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoSchedule {
    Constant { value: f64 },
    /// `value` up to `threshold`, `value / k` above it.
    InverseAbove { value: f64, threshold: f64 },
    /// Piecewise constant: the entry with the largest `k_i <= k` applies.
    Table { points: Vec<[f64; 2]> },
}

impl RhoSchedule {
    pub fn rho(&self, k: f64) -> Result<f64> {
        let rho = match self {
            RhoSchedule::Constant { value } => *value,
            RhoSchedule::InverseAbove { value, threshold } => {
                if k <= *threshold {
                    *value
                } else {
                    value / k
                }
            }
            RhoSchedule::Table { points } => points
                .iter()
                .filter(|p| p[0] <= k)
                .max_by(|a, b| a[0].total_cmp(&b[0]))
                .or_else(|| points.iter().min_by(|a, b| a[0].total_cmp(&b[0])))
                .map(|p| p[1])
                .ok_or_else(|| Error::Invalid("empty damping table".into()))?,
        };
        if !(rho > 0.0) {
            return Err(Error::Invalid(format!("damping parameter {rho} at k={k} is not positive")));
        }
        Ok(rho)
    }
}

/// Full description of a multi-frequency reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlaConfig {
    pub k0: f64,
    pub dk: f64,
    /// Number of frequencies `J`; stage `j` uses `k0 + j dk`, `j = 0..J`.
    pub stages: usize,
    /// Number of incident directions `L`, at angles `2 pi l / L`.
    pub directions: usize,
    /// Number of far-field angles `M`.
    pub angles: usize,
    pub bandlimit: BandlimitRule,
    #[serde(default)]
    pub bandlimit_meaning: BandlimitMeaning,
    pub rho: RhoSchedule,
    #[serde(default)]
    pub controls: NewtonControls,
    /// Radius of the starting circle.
    #[serde(default = "default_radius")]
    pub initial_radius: f64,
    /// Nodes per unit of `k |Gamma|` when synthesizing data.
    #[serde(default = "default_synthesis_factor")]
    pub synthesis_factor: f64,
}

fn default_radius() -> f64 {
    1.0
}

fn default_synthesis_factor() -> f64 {
    100.0
}

impl RlaConfig {
    /// Star-shaped obstacle example: `k = 0.5, 1.0, ..., 5.5`, four
    /// directions, 32 angles, `b = 2 ceil(k) + 1`.
    pub fn star_example() -> Self {
        RlaConfig {
            k0: 0.5,
            dk: 0.5,
            stages: 11,
            directions: 4,
            angles: 32,
            bandlimit: BandlimitRule::TwiceCeilPlusOne,
            bandlimit_meaning: BandlimitMeaning::MaxFrequency,
            rho: RhoSchedule::InverseAbove { value: 0.1, threshold: 5.0 },
            controls: NewtonControls { residual_tol: 1e-4, ..Default::default() },
            initial_radius: 1.0,
            synthesis_factor: 100.0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: RlaConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > 0.0) || !(self.dk > 0.0) || self.stages == 0 || self.directions == 0 {
            return Err(Error::Invalid("need k0 > 0, dk > 0, stages >= 1 and directions >= 1".into()));
        }
        if !(self.initial_radius > 0.0) || !(self.synthesis_factor > 0.0) {
            return Err(Error::Invalid("initial radius and synthesis factor must be positive".into()));
        }
        self.controls.validate()?;
        for (j, k) in self.wavenumbers().into_iter().enumerate() {
            let b = self.basis(j, k)?.len();
            if 2 * self.angles * self.directions <= b {
                return Err(Error::Invalid(format!(
                    "{} angles and {} directions cannot determine {b} coefficients at k={k}",
                    self.angles, self.directions
                )));
            }
            self.rho.rho(k)?;
        }
        Ok(())
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.stages).map(|j| self.k0 + j as f64 * self.dk).collect()
    }

    pub fn direction_angles(&self) -> Vec<f64> {
        (1..=self.directions).map(|l| 2.0 * PI * l as f64 / self.directions as f64).collect()
    }

    pub fn measurement_angles(&self) -> Vec<f64> {
        measurement_angles(self.angles)
    }

    pub fn waves(&self, k: f64) -> Result<Vec<IncidentWave>> {
        self.direction_angles().into_iter().map(|a| IncidentWave::from_angle(k, a)).collect()
    }

    pub fn basis(&self, stage: usize, k: f64) -> Result<PerturbationBasis> {
        let b = self.bandlimit.bandlimit(stage, k)?;
        match self.bandlimit_meaning {
            BandlimitMeaning::DegreesOfFreedom => PerturbationBasis::new(b),
            BandlimitMeaning::MaxFrequency => PerturbationBasis::with_max_frequency(b),
        }
    }

    pub fn initial_curve(&self) -> Result<ClosedCurve> {
        ClosedCurve::circle(self.initial_radius, [0.0, 0.0], self.controls.curve_modes)
    }
}

/// Result of the Newton solve at one frequency.
#[derive(Debug, Clone)]
pub struct StageRecord {
    pub k: f64,
    pub bandlimit: usize,
    pub rho: f64,
    pub initial_residual: f64,
    pub history: Vec<StepReport>,
    pub stop: StopReason,
    pub curve: ClosedCurve,
}

impl StageRecord {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(self.initial_residual, |r| r.residual)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StageSummary {
    k: f64,
    bandlimit: usize,
    rho: f64,
    iterations: usize,
    initial_residual: f64,
    final_residual: f64,
    stop: StopReason,
}

/// Current reconstruction and the record of every completed stage.
#[derive(Debug, Clone)]
pub struct RlaState {
    pub curve: ClosedCurve,
    pub stages: Vec<StageRecord>,
    /// Wavenumber and message of the stage that could not take a step.
    pub failure: Option<(f64, String)>,
}

impl RlaState {
    pub fn iterations(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.iterations()).collect()
    }

    /// Writes `stage_NN/curve.json`, `stage_NN/points.json` and
    /// `stage_NN/history.jsonl` for every stage, plus `final_curve.json`,
    /// `final_points.json` and `stages.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut summary = Vec::new();
        for (j, s) in self.stages.iter().enumerate() {
            let sub = dir.join(format!("stage_{j:02}"));
            fs::create_dir_all(&sub)?;
            write_json(&sub.join("curve.json"), &CurveFile::from(&s.curve))?;
            write_json(&sub.join("points.json"), &plot_points(&s.curve)?)?;
            let mut f = fs::File::create(sub.join("history.jsonl"))?;
            for r in &s.history {
                writeln!(f, "{}", serde_json::to_string(r)?)?;
            }
            summary.push(StageSummary {
                k: s.k,
                bandlimit: s.bandlimit,
                rho: s.rho,
                iterations: s.iterations(),
                initial_residual: s.initial_residual,
                final_residual: s.final_residual(),
                stop: s.stop.clone(),
            });
        }
        write_json(&dir.join("final_curve.json"), &CurveFile::from(&self.curve))?;
        write_json(&dir.join("final_points.json"), &plot_points(&self.curve)?)?;
        write_json(&dir.join("stages.json"), &summary)?;
        Ok(())
    }
}

fn plot_points(curve: &ClosedCurve) -> Result<CurvePoints> {
    CurvePoints::new(curve, 1024.max(2 * curve.bandwidth() + 2))
}

/// Runs every stage of `config` from `initial` against the measurements in
/// `data`. A stage whose Newton iteration cannot produce a simple curve
/// ends the sweep; the state then holds the previous stage's curve and
/// the failure.
pub fn run_rla(config: &RlaConfig, data: &Dataset, initial: &ClosedCurve, solver: SolverKind) -> Result<RlaState> {
    run_rla_observed(config, data, initial, solver, &mut |_, _| {})
}

/// [`run_rla`], calling `on_accept(stage, curve)` with every accepted iterate.
pub fn run_rla_observed(
    config: &RlaConfig,
    data: &Dataset,
    initial: &ClosedCurve,
    solver: SolverKind,
    on_accept: &mut dyn FnMut(usize, &ClosedCurve),
) -> Result<RlaState> {
    config.validate()?;
    let mut state = RlaState { curve: initial.clone(), stages: Vec::new(), failure: None };
    for (j, k) in config.wavenumbers().into_iter().enumerate() {
        let waves = config.waves(k)?;
        let measured = waves
            .iter()
            .map(|w| data.get(k, w.direction()).cloned())
            .collect::<Result<Vec<_>>>()?;
        let problem = NewtonProblem::new(waves, &measured, solver)?;
        let basis = config.basis(j, k)?;
        let rho = config.rho.rho(k)?;
        let controls = NewtonControls { rho, ..config.controls };
        let out = run_newton_observed(&problem, &state.curve, &basis, &controls, &mut |c| on_accept(j, c))?;
        log::info!(
            "k={k}: {} iterations, residual {:.3e} -> {:.3e} ({:?})",
            out.iterations(),
            out.initial_residual,
            out.final_residual(),
            out.stop
        );
        if out.stop == StopReason::MaxIters {
            log::warn!("Newton iteration at k={k} reached the iteration cap");
        }
        let failed = match &out.stop {
            StopReason::StepFailure(msg) => Some(msg.clone()),
            _ => None,
        };
        state.stages.push(StageRecord {
            k,
            bandlimit: basis.filter_start(),
            rho,
            initial_residual: out.initial_residual,
            history: out.history,
            stop: out.stop,
            curve: out.curve.clone(),
        });
        if let Some(msg) = failed {
            log::warn!("stopping the sweep at k={k}: {msg}");
            state.failure = Some((k, msg));
            break;
        }
        state.curve = out.curve;
    }
    Ok(state)
}
