//! The `forward`, `synthesize` and `invert` pipelines and their artifacts.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::artifacts::{ArtifactWriter, Manifest};
use super::config::Experiment;
use crate::error::{Error, Result};
use crate::forward::{assemble, far_field, observation_angles, rhs, IncidentWave};
use crate::geometry::{build_mesh, SurfaceProfile};
use crate::inversion::{
    invert_with_progress, profile_from_coeffs, synthesize_measurements_with, InversionResult,
    IterationLog, MeasurementSet, SplineBasis, StageResult,
};

/// Number of uniform points in the profile snapshots.
pub const SNAPSHOT_POINTS: usize = 401;
pub const DATASET_FILE: &str = "dataset.json";
pub const RECONSTRUCTION_FILE: &str = "reconstruction.json";
pub const LOG_FILE: &str = "iterations.ndjson";

/// Far field for one `(k, direction)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardBlock {
    pub k: f64,
    pub theta: f64,
    pub angles: Vec<f64>,
    pub values: Vec<Complex64>,
}

pub fn farfield_file_name(k_index: usize, dir_index: usize) -> String {
    format!("farfield_k{k_index:02}_d{dir_index:02}.csv")
}

pub fn snapshot_file_name(stage: usize) -> String {
    format!("profile_stage{stage:02}.csv")
}

/// Far fields of the configured true profile, synthesis `eta`, no noise.
pub fn forward_blocks(exp: &Experiment) -> Result<Vec<ForwardBlock>> {
    let profile = exp.true_profile()?;
    let angles = observation_angles(exp.n_f);
    let mut out = Vec::new();
    for &k in &exp.schedule {
        let mesh = build_mesh(&profile, exp.mesh.n_for(k))?;
        let eta = exp.synthesis_eta.eta(k);
        let system = assemble(&mesh, k, eta)?;
        for &theta in &exp.incidence {
            let wave = IncidentWave::new(k, theta)?;
            let density = system.solve(&rhs(&mesh, &wave))?;
            out.push(ForwardBlock {
                k,
                theta,
                angles: angles.clone(),
                values: far_field(&mesh, &density, k, eta, &angles)?.values,
            });
        }
    }
    Ok(out)
}

pub fn run_forward(exp: &Experiment, out: &Path) -> Result<(Vec<ForwardBlock>, Manifest)> {
    let blocks = forward_blocks(exp)?;
    let mut w = ArtifactWriter::new(out, exp)?;
    let per_k = exp.incidence.len();
    for (b, block) in blocks.iter().enumerate() {
        let rows: Vec<Vec<f64>> = block
            .angles
            .iter()
            .zip(&block.values)
            .map(|(t, z)| vec![*t, z.re, z.im])
            .collect();
        w.csv(&farfield_file_name(b / per_k, b % per_k), &["angle", "re", "im"], &rows)?;
    }
    let index: Vec<_> = blocks
        .iter()
        .enumerate()
        .map(|(b, block)| {
            serde_json::json!({
                "file": farfield_file_name(b / per_k, b % per_k),
                "k": block.k,
                "theta": block.theta,
            })
        })
        .collect();
    w.json("farfield_index.json", &serde_json::json!({ "blocks": index }))?;
    let manifest = w.finish("forward", exp)?;
    Ok((blocks, manifest))
}

pub fn synthesize(exp: &Experiment) -> Result<MeasurementSet> {
    synthesize_measurements_with(
        &exp.true_profile()?,
        &exp.schedule,
        &exp.incidence,
        exp.n_f,
        exp.delta,
        exp.seed,
        |k| exp.mesh.n_for(k),
        exp.synthesis_eta,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub config_hash: String,
    pub measurements: MeasurementSet,
}

pub fn run_synthesize(exp: &Experiment, out: &Path) -> Result<(MeasurementSet, Manifest)> {
    let set = synthesize(exp)?;
    let mut w = ArtifactWriter::new(out, exp)?;
    w.json(DATASET_FILE, &serde_json::json!({ "measurements": &set }))?;
    let manifest = w.finish("synthesize", exp)?;
    Ok((set, manifest))
}

pub fn load_dataset(path: &Path) -> Result<DatasetFile> {
    let text = std::fs::read_to_string(path)?;
    let file: DatasetFile = serde_json::from_str(&text)?;
    file.measurements.validate()?;
    Ok(file)
}

/// Dataset and config must describe the same experiment.
pub fn check_compatible(exp: &Experiment, set: &MeasurementSet) -> Result<()> {
    if exp.schedule != set.wavenumbers {
        return Err(Error::config(
            "schedule",
            format!("config {:?} disagrees with dataset {:?}", exp.schedule, set.wavenumbers),
        ));
    }
    if exp.incidence != set.directions {
        return Err(Error::config(
            "incidence",
            format!("config {:?} disagrees with dataset {:?}", exp.incidence, set.directions),
        ));
    }
    if exp.n_f != set.n_f() {
        return Err(Error::config(
            "n_f",
            format!("config {} disagrees with dataset {}", exp.n_f, set.n_f()),
        ));
    }
    Ok(())
}

/// Profile errors on the snapshot grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileError {
    pub max: f64,
    /// Root mean square over the grid times `sqrt(2R)`, i.e. a discrete L2 norm on `[-R, R]`.
    pub l2: f64,
}

pub fn snapshot_grid(radius: f64) -> Vec<f64> {
    let n = SNAPSHOT_POINTS - 1;
    (0..=n).map(|i| -radius + 2.0 * radius * i as f64 / n as f64).collect()
}

/// `(x1, h_true, h_reconstructed)` rows on the snapshot grid.
pub fn snapshot(truth: &SurfaceProfile, basis: &SplineBasis, coefficients: &[f64]) -> Result<Vec<[f64; 3]>> {
    let rec = profile_from_coeffs(basis, coefficients)?;
    Ok(snapshot_grid(basis.radius)
        .into_iter()
        .map(|x| [x, truth.eval(x).h, rec.eval(x).h])
        .collect())
}

pub fn profile_error(rows: &[[f64; 3]]) -> ProfileError {
    let max = rows.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);
    let width = rows.last().map_or(0.0, |r| r[0]) - rows.first().map_or(0.0, |r| r[0]);
    let ms = rows.iter().map(|r| (r[1] - r[2]).powi(2)).sum::<f64>() / rows.len().max(1) as f64;
    ProfileError {
        max,
        l2: (ms * width).sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    #[serde(flatten)]
    pub stage: StageResult,
    pub snapshot: String,
    pub profile_error: ProfileError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub config_hash: String,
    pub dataset_config_hash: String,
    pub basis: SplineBasis,
    pub coefficients: Vec<f64>,
    pub effective_delta: f64,
    pub stages: Vec<StageSummary>,
    pub profile_error: ProfileError,
}

pub struct InvertOutput {
    pub result: InversionResult,
    pub reconstruction: Reconstruction,
    pub manifest: Manifest,
    pub snapshots: Vec<PathBuf>,
}

/// Runs the inversion on `dataset` and writes coefficients, the iteration log
/// and one profile snapshot per stage.
pub fn run_invert(
    exp: &Experiment,
    dataset: &DatasetFile,
    out: &Path,
    mut progress: impl FnMut(&IterationLog),
) -> Result<InvertOutput> {
    let set = &dataset.measurements;
    check_compatible(exp, set)?;
    let basis = exp.basis()?;
    let truth = exp.true_profile()?;
    let result = invert_with_progress(set, &basis, &exp.settings(), &mut progress)?;

    let mut w = ArtifactWriter::new(out, exp)?;
    let mut stages = Vec::new();
    let mut snapshots = Vec::new();
    for (s, stage) in result.stages.iter().enumerate() {
        let rows = snapshot(&truth, &basis, &stage.coefficients)?;
        let name = snapshot_file_name(s);
        let csv_rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        snapshots.push(w.csv(&name, &["x1", "h_true", "h_reconstructed"], &csv_rows)?);
        stages.push(StageSummary {
            stage: stage.clone(),
            snapshot: name,
            profile_error: profile_error(&rows),
        });
    }
    let final_rows = snapshot(&truth, &basis, &result.coefficients)?;
    let reconstruction = Reconstruction {
        config_hash: w.config_hash().to_string(),
        dataset_config_hash: dataset.config_hash.clone(),
        basis,
        coefficients: result.coefficients.clone(),
        effective_delta: result.effective_delta,
        stages,
        profile_error: profile_error(&final_rows),
    };
    w.json(RECONSTRUCTION_FILE, &reconstruction)?;
    w.ndjson(LOG_FILE, &result.log)?;
    let manifest = w.finish("invert", exp)?;
    Ok(InvertOutput {
        result,
        reconstruction,
        manifest,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;

    fn exp(text: &str) -> Experiment {
        ExperimentConfig::from_json(text).unwrap().resolve().unwrap()
    }

    #[test]
    fn profile_error_on_grid() {
        let rows: Vec<[f64; 3]> = snapshot_grid(1.0).into_iter().map(|x| [x, 0.0, 0.5]).collect();
        assert_eq!(rows.len(), SNAPSHOT_POINTS);
        let e = profile_error(&rows);
        assert_eq!(e.max, 0.5);
        // 0.5 * sqrt(2)
        assert!((e.l2 - 0.5 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn incompatible_dataset_is_rejected() {
        let a = exp(r#"{"profile": "flat", "schedule": [1, 3], "incidence": [0], "n_f": 8, "mesh": {"below": 16}}"#);
        let set = synthesize(&a).unwrap();
        check_compatible(&a, &set).unwrap();
        let b = exp(r#"{"profile": "flat", "schedule": [1], "incidence": [0], "n_f": 8}"#);
        assert!(matches!(check_compatible(&b, &set), Err(Error::Config { field, .. }) if field == "schedule"));
        let c = exp(r#"{"profile": "flat", "schedule": [1, 3], "incidence": [0.1], "n_f": 8}"#);
        assert!(check_compatible(&c, &set).is_err());
        let d = exp(r#"{"profile": "flat", "schedule": [1, 3], "incidence": [0], "n_f": 4}"#);
        assert!(check_compatible(&d, &set).is_err());
    }
}
