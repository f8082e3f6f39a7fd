//! Synthetic far-field measurements with relative Gaussian noise.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::curve::{is_simple, ClosedCurve, CurveFile};
use crate::error::{Error, Result};
use crate::forward::{resolution, BoundarySolver, DensityKind, FarFieldData, SolverKind};
use crate::linalg::norm2;
use crate::manifest::{read_json, write_json, RunManifest};
use crate::quadrature::AlpertRule;
use crate::rla::RlaConfig;

/// `v = u + delta |u| / |e| e` with `e = e1 + i e2` standard normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub delta: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::Invalid(format!("noise level must be >= 0, got {delta}")));
        }
        Ok(NoiseModel { delta, seed })
    }

    /// Independent generator for record `(stage, direction)`.
    pub fn record_rng(&self, stage: usize, direction: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((stage as u64) << 32) | direction as u64);
        rng
    }

    /// Adds noise of relative norm `delta` to `values`.
    pub fn apply(&self, values: &[Complex64], rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        if self.delta == 0.0 {
            return values.to_vec();
        }
        let e: Vec<Complex64> = values
            .iter()
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im)
            })
            .collect();
        let scale = self.delta * norm2(values) / norm2(&e);
        values.iter().zip(&e).map(|(u, e)| u + scale * e).collect()
    }
}

/// Clean and noisy far fields for one `(k, d)` pair.
#[derive(Debug, Clone)]
pub struct SynthRecord {
    pub stage: usize,
    pub direction_index: usize,
    pub nodes: usize,
    pub clean: FarFieldData,
    pub noisy: FarFieldData,
}

/// Solves the forward problem on `truth` for every wavenumber and
/// direction of `config` with `ceil(synthesis_factor k |Gamma|)` nodes and
/// adds noise.
pub fn synthesize(
    truth: &ClosedCurve,
    config: &RlaConfig,
    noise: &NoiseModel,
    solver: SolverKind,
) -> Result<Vec<SynthRecord>> {
    if !is_simple(truth, 4096.max(8 * truth.bandwidth())) {
        return Err(Error::Geometry("true curve intersects itself".into()));
    }
    let angles = config.measurement_angles();
    let rule = AlpertRule::default();
    let mut out = Vec::new();
    for (j, k) in config.wavenumbers().into_iter().enumerate() {
        let n = resolution(k, truth.length(), config.synthesis_factor).max(rule.min_points());
        let n = n.max(2 * truth.bandwidth() + 2);
        let boundary = Arc::new(truth.sample(n)?);
        let op = BoundarySolver::new(boundary.clone(), k, DensityKind::Cfie, solver, &rule)?;
        let waves = config.waves(k)?;
        let rhs = Mat::from_fn(n, waves.len(), |i, l| -waves[l].value(boundary.nodes()[i]));
        let phi = op.solve_many(rhs.as_ref())?;
        let far = op.far_field_matrix(&angles)?;
        let u = &far * &phi;
        for (l, w) in waves.iter().enumerate() {
            let values: Vec<Complex64> = u.col(l).iter().copied().collect();
            let clean = FarFieldData { k, direction: w.direction(), angles: angles.clone(), values };
            let mut rng = noise.record_rng(j, l);
            let noisy = FarFieldData { values: noise.apply(&clean.values, &mut rng), ..clean.clone() };
            out.push(SynthRecord { stage: j, direction_index: l, nodes: n, clean, noisy });
        }
        log::info!("synthesized k={k} with {n} nodes");
    }
    Ok(out)
}

/// Far-field measurements keyed by wavenumber and direction.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<FarFieldData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub file: PathBuf,
    pub k: f64,
    pub direction: [f64; 2],
    pub stage: usize,
    pub direction_index: usize,
    pub nodes: usize,
}

/// Index stored in the dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub delta: f64,
    pub seed: u64,
    pub true_curve: PathBuf,
    pub records: Vec<RecordEntry>,
}

impl Dataset {
    pub fn from_records(records: &[SynthRecord]) -> Self {
        Dataset { records: records.iter().map(|r| r.noisy.clone()).collect() }
    }

    /// Record at wavenumber `k` and direction `d`.
    pub fn get(&self, k: f64, d: [f64; 2]) -> Result<&FarFieldData> {
        self.records
            .iter()
            .find(|r| (r.k - k).abs() <= 1e-12 * k && (r.direction[0] - d[0]).hypot(r.direction[1] - d[1]) <= 1e-12)
            .ok_or_else(|| Error::Invalid(format!("dataset has no record for k={k}, d=({}, {})", d[0], d[1])))
    }

    /// Writes one far-field file per record, the true curve and an index.
    pub fn write(
        dir: &Path,
        records: &[SynthRecord],
        truth: &ClosedCurve,
        noise: &NoiseModel,
        manifest: &mut RunManifest,
    ) -> Result<DatasetIndex> {
        fs::create_dir_all(dir)?;
        let true_curve = PathBuf::from("true_curve.json");
        write_json(&dir.join(&true_curve), &CurveFile::from(truth))?;
        let mut entries = Vec::with_capacity(records.len());
        for r in records {
            let file = PathBuf::from(format!("record_k{:03}_d{:03}.json", r.stage, r.direction_index));
            r.noisy.save(&dir.join(&file))?;
            manifest.outputs.push(file.clone());
            entries.push(RecordEntry {
                file,
                k: r.noisy.k,
                direction: r.noisy.direction,
                stage: r.stage,
                direction_index: r.direction_index,
                nodes: r.nodes,
            });
        }
        manifest.outputs.push(true_curve.clone());
        let index = DatasetIndex { delta: noise.delta, seed: noise.seed, true_curve, records: entries };
        manifest.details = serde_json::to_value(&index)?;
        manifest.write(dir)?;
        Ok(index)
    }

    /// Reads a dataset directory written by [`Dataset::write`].
    pub fn read(dir: &Path) -> Result<(Self, DatasetIndex)> {
        let manifest = RunManifest::read(dir)?;
        let index: DatasetIndex = serde_json::from_value(manifest.details)
            .map_err(|e| Error::Invalid(format!("{} is not a dataset manifest: {e}", dir.display())))?;
        let records = index
            .records
            .iter()
            .map(|e| FarFieldData::load(&dir.join(&e.file)))
            .collect::<Result<Vec<_>>>()?;
        Ok((Dataset { records }, index))
    }

    pub fn true_curve(dir: &Path, index: &DatasetIndex) -> Result<ClosedCurve> {
        let f: CurveFile = read_json(&dir.join(&index.true_curve))?;
        ClosedCurve::try_from(f)
    }
}
