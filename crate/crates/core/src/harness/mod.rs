//! Configuration, the experiment pipelines behind the CLI, their output
//! files and the self-check suite.

pub mod artifacts;
pub mod check;
pub mod config;
pub mod run;

pub use artifacts::{read_csv, verify_artifacts, ArtifactWriter, Manifest, VerifyReport, MANIFEST};
pub use check::{run_checks, CheckEntry, CheckOptions, CheckReport, CHECK_NAMES};
pub use config::{parse_angle, parse_schedule, Experiment, ExperimentConfig};
pub use run::{
    forward_blocks, load_dataset, profile_error, run_forward, run_invert, run_synthesize, snapshot,
    synthesize, DatasetFile, ForwardBlock, ProfileError, Reconstruction, DATASET_FILE, LOG_FILE,
    RECONSTRUCTION_FILE, SNAPSHOT_POINTS,
};
