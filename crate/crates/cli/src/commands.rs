use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use helio2d::curve::{filter_resample, hausdorff, ClosedCurve, CurveFile, CurvePoints};
use helio2d::forward::{
    far_field, measurement_angles, point_source_rhs, resolution, scattered_field, solve_cfie, solve_green,
    BoundarySolver, DensityKind, IncidentWave,
};
use helio2d::manifest::{read_json, write_json, RunManifest};
use helio2d::quadrature::AlpertRule;
use helio2d::rla::{run_rla, RlaConfig};
use helio2d::specfun::green;
use helio2d::synth::{synthesize, Dataset, NoiseModel};
use helio2d::{Error, Result};
use serde_json::{json, Value};

use crate::{FilterArgs, Formulation, ForwardArgs, InvertArgs, SolverArgs, SolverChoice, SynthArgs, Table1Args};

const CONFIG_FILE: &str = "config.json";
const TABLE1_TARGET: [f64; 2] = [10.0, 8.0];

pub fn report_error(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "status": "error", "kind": kind, "message": message }));
    ExitCode::FAILURE
}

fn emit(value: &Value) {
    println!("{value}");
}

fn load_curve(path: &Path) -> Result<ClosedCurve> {
    let file: CurveFile = read_json(path)
        .map_err(|e| Error::Invalid(format!("{} is not a curve file: {e}", path.display())))?;
    ClosedCurve::try_from(file)
}

fn curve_or_star(path: Option<&Path>) -> Result<ClosedCurve> {
    path.map_or_else(|| Ok(ClosedCurve::star7()), load_curve)
}

fn solver_label(s: &SolverArgs) -> &'static str {
    match s.solver {
        SolverChoice::Dense => "dense",
        SolverChoice::Hodlr => "hodlr",
        SolverChoice::Auto => "auto",
    }
}

fn finish(mut manifest: RunManifest, dir: &Path, start: Instant) -> Result<()> {
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(dir)?;
    Ok(())
}

pub fn forward(a: ForwardArgs) -> Result<bool> {
    if a.table1 {
        return table1(Table1Args { k: vec![a.k], factor: 100.0, solver: a.solver, tol: None, out: a.out });
    }
    let start = Instant::now();
    let curve = curve_or_star(a.curve.as_deref())?;
    let rule = AlpertRule::default();
    let n = a
        .nodes
        .unwrap_or_else(|| resolution(a.k, curve.length(), a.factor))
        .max(rule.min_points())
        .max(2 * curve.bandwidth() + 2);
    let wave = IncidentWave::from_angle(a.k, a.direction)?;
    let boundary = Arc::new(curve.sample(n)?);
    let solver = a.solver.kind();
    let density = match a.formulation {
        Formulation::Cfie => {
            let rhs: Vec<_> = boundary.nodes().iter().map(|&x| -wave.value(x)).collect();
            solve_cfie(boundary, &wave, &rhs, solver)?
        }
        Formulation::Green => solve_green(boundary, &wave, solver)?,
    };
    let data = far_field(&density, &measurement_angles(a.angles))?;
    let seconds = start.elapsed().as_secs_f64();
    let config = json!({
        "k": a.k, "direction": a.direction, "angles": a.angles, "nodes": n,
        "formulation": format!("{:?}", a.formulation), "solver": solver_label(&a.solver), "hodlr_tol": a.solver.hodlr_tol,
    });
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            data.save(&dir.join("far_field.json"))?;
            let mut m = RunManifest::new("forward", &config)?;
            m.inputs.extend(a.curve.clone());
            m.outputs.push(PathBuf::from("far_field.json"));
            m.details = json!({ "nodes": n, "solve_seconds": seconds });
            finish(m, dir, start)?;
            emit(&json!({ "status": "ok", "command": "forward", "nodes": n, "seconds": seconds }));
        }
        None => println!("{}", data.to_json()?),
    }
    Ok(true)
}

pub fn table1(a: Table1Args) -> Result<bool> {
    let start = Instant::now();
    let tol = a.tol.unwrap_or(if a.solver.solver == SolverChoice::Dense { 1e-10 } else { 1e-9 });
    let curve = ClosedCurve::star7();
    let solver = a.solver.kind();
    let mut rows = Vec::new();
    let mut passed = true;
    for &k in &a.k {
        let n = resolution(k, curve.length(), a.factor);
        let t = Instant::now();
        let boundary = Arc::new(curve.sample(n)?);
        let op = BoundarySolver::new(boundary.clone(), k, DensityKind::Cfie, solver, &AlpertRule::default())?;
        let rhs = point_source_rhs(&boundary, k, [0.0, 0.0])?;
        let u = scattered_field(&op.solve(&rhs, [1.0, 0.0])?, &[TABLE1_TARGET])?[0];
        let seconds = t.elapsed().as_secs_f64();
        let exact = -green(k, TABLE1_TARGET, [0.0, 0.0])?;
        let error = (u - exact).norm() / exact.norm();
        passed &= error <= tol;
        let row = json!({ "k": k, "nodes": n, "seconds": seconds, "error": error, "pass": error <= tol });
        emit(&row);
        rows.push(row);
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        let lines: Vec<String> = rows.iter().map(|r| r.to_string()).collect();
        fs::write(dir.join("table1.jsonl"), lines.join("\n") + "\n")?;
        let config = json!({ "k": a.k, "factor": a.factor, "solver": solver_label(&a.solver), "hodlr_tol": a.solver.hodlr_tol, "tol": tol });
        let mut m = RunManifest::new("table1", &config)?;
        m.outputs.push(PathBuf::from("table1.jsonl"));
        m.details = json!({ "rows": rows, "tolerance": tol });
        finish(m, dir, start)?;
    }
    Ok(passed)
}

struct SweepFlags {
    k0: Option<f64>,
    dk: Option<f64>,
    stages: Option<usize>,
    directions: Option<usize>,
    angles: Option<usize>,
    max_iters: Option<usize>,
}

impl SweepFlags {
    fn apply(&self, mut c: RlaConfig) -> Result<RlaConfig> {
        if let Some(v) = self.k0 {
            c.k0 = v;
        }
        if let Some(v) = self.dk {
            c.dk = v;
        }
        if let Some(v) = self.stages {
            c.stages = v;
        }
        if let Some(v) = self.directions {
            c.directions = v;
        }
        if let Some(v) = self.angles {
            c.angles = v;
        }
        if let Some(v) = self.max_iters {
            c.controls.max_iters = v;
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn synth(a: SynthArgs) -> Result<bool> {
    let start = Instant::now();
    let config = match &a.config {
        Some(p) => RlaConfig::load(p)?,
        None => SweepFlags { k0: a.k0, dk: a.dk, stages: a.stages, directions: a.directions, angles: a.angles, max_iters: None }
            .apply(RlaConfig::star_example())?,
    };
    let truth = curve_or_star(a.truth.as_deref())?;
    let noise = NoiseModel::new(a.delta, a.seed)?;
    let records = synthesize(&truth, &config, &noise, a.solver.kind())?;
    fs::create_dir_all(&a.out)?;
    write_json(&a.out.join(CONFIG_FILE), &config)?;
    let mut m = RunManifest::new("synth", &json!({ "config": config, "delta": a.delta, "seed": a.seed }))?;
    m.inputs.extend(a.truth.clone());
    m.inputs.extend(a.config.clone());
    m.outputs.push(PathBuf::from(CONFIG_FILE));
    m.wall_time_s = start.elapsed().as_secs_f64();
    let index = Dataset::write(&a.out, &records, &truth, &noise, &mut m)?;
    emit(&json!({ "status": "ok", "command": "synth", "records": index.records.len(), "seconds": m.wall_time_s }));
    Ok(true)
}

/// Rejects data synthesized with a discretization no finer than the one the
/// inversion would use on the true curve.
fn check_inverse_crime(index: &helio2d::synth::DatasetIndex, config: &RlaConfig, truth: &ClosedCurve) -> Result<()> {
    for e in &index.records {
        let used = config.controls.nodes_for(e.k, truth);
        if e.nodes <= used {
            return Err(Error::Invalid(format!(
                "record {} at k={} was synthesized with {} nodes; inversion would use {used}, \
                 the data must come from a finer discretization",
                e.file.display(),
                e.k,
                e.nodes
            )));
        }
    }
    Ok(())
}

pub fn invert(a: InvertArgs) -> Result<bool> {
    let start = Instant::now();
    let (data, index) = Dataset::read(&a.data)?;
    let stored = a.data.join(CONFIG_FILE);
    let config = match &a.config {
        Some(p) => RlaConfig::load(p)?,
        None => {
            let base = if stored.exists() { RlaConfig::load(&stored)? } else { RlaConfig::star_example() };
            SweepFlags {
                k0: a.k0,
                dk: a.dk,
                stages: a.stages,
                directions: a.directions,
                angles: a.angles,
                max_iters: a.max_iters,
            }
            .apply(base)?
        }
    };
    let truth = Dataset::true_curve(&a.data, &index)?;
    check_inverse_crime(&index, &config, &truth)?;
    let state = run_rla(&config, &data, &config.initial_curve()?, a.solver.kind())?;
    state.write(&a.out)?;
    write_json(&a.out.join(CONFIG_FILE), &config)?;
    let distance = hausdorff(&state.curve, &truth, 4096)?;
    let failure = state.failure.as_ref().map(|(k, msg)| json!({ "k": k, "message": msg }));
    let details = json!({
        "iterations": state.iterations(),
        "stages_completed": state.stages.len(),
        "hausdorff_to_truth": distance,
        "failure": failure,
    });
    let mut m = RunManifest::new("invert", &config)?;
    m.inputs.push(a.data.clone());
    m.inputs.extend(a.config.clone());
    m.outputs.extend(
        (0..state.stages.len()).map(|j| PathBuf::from(format!("stage_{j:02}"))).chain(
            ["final_curve.json", "final_points.json", "stages.json", CONFIG_FILE].map(PathBuf::from),
        ),
    );
    m.details = details.clone();
    finish(m, &a.out, start)?;
    match &failure {
        None => emit(&json!({ "status": "ok", "command": "invert", "result": details })),
        Some(f) => eprintln!("{}", json!({ "status": "error", "kind": "step_failure", "message": f })),
    }
    Ok(failure.is_none())
}

pub fn filter(a: FilterArgs) -> Result<bool> {
    let start = Instant::now();
    let curve = load_curve(&a.curve)?;
    let out = filter_resample(&curve, a.b, a.nb, a.n)?;
    fs::create_dir_all(&a.out)?;
    write_json(&a.out.join("curve.json"), &CurveFile::from(&out))?;
    write_json(&a.out.join("points.json"), &CurvePoints::new(&out, a.n)?)?;
    let mut m = RunManifest::new("filter", &json!({ "b": a.b, "nb": a.nb, "n": a.n }))?;
    m.inputs.push(a.curve.clone());
    m.outputs.extend(["curve.json", "points.json"].map(PathBuf::from));
    finish(m, &a.out, start)?;
    emit(&json!({ "status": "ok", "command": "filter", "n_modes": out.n_modes() }));
    Ok(true)
}
