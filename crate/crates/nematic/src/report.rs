//! The run report: one JSON document per experiment.
//!
//! Schema `nematic-report/1`:
//!
//! | key | content |
//! |-----|---------|
//! | `schema` | the string `nematic-report/1` |
//! | `config_toml` | the configuration text exactly as read |
//! | `config` | the parsed configuration with defaults filled in |
//! | `input_hash` | SHA-256 of the git blob encoding of `config_toml` |
//! | `s_plus`, `c_offset`, `grid_spacing` | derived constants |
//! | `stages` | one [`StageReport`] per ε, in ladder order |
//! | `failure` | set when the run stopped early |

use nematic_core::analysis::{Degree, DefectReport, TangentFit};
use nematic_core::linalg::{Mat3, Vec3};
use nematic_core::solver::SolveReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const SCHEMA: &str = "nematic-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub config_toml: String,
    pub config: ExperimentConfig,
    pub input_hash: String,
    pub s_plus: f64,
    pub c_offset: f64,
    pub grid_spacing: f64,
    pub stages: Vec<StageReport>,
    pub failure: Option<FailureRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageReport {
    pub eps: f64,
    pub r_n: f64,
    pub solve: SolveReport,
    /// Energy of the sampled boundary map with the same Dirichlet data.
    pub reference_energy: f64,
    pub ball_ratios: Vec<RadiusValue>,
    /// Present unless the whole defect analysis failed.
    pub defect: Option<DefectReport>,
    pub analysis_failure: Option<String>,
    pub core_sizes: Vec<CoreSize>,
    pub decay: Vec<RadiusValue>,
    pub drift: Option<f64>,
    pub blowup: Option<BlowupReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusValue {
    pub radius: f64,
    pub value: f64,
}

/// Measured and radially predicted core diameter for one threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreSize {
    /// `δ / (s₊√(2/3))`.
    pub fraction: f64,
    pub delta: f64,
    pub measured: f64,
    pub predicted: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupReport {
    pub center: Vec3,
    pub scale: f64,
    pub half_width: f64,
    pub n_cells: usize,
    pub spheres: Vec<BlowupSphere>,
}

/// Measurements on the sphere `|y| = radius` of the blow-up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupSphere {
    /// In units of ε.
    pub radius: f64,
    pub degree: Option<Degree>,
    pub fit: Option<TangentFit>,
    /// `max |Q - s₊(Tσ⊗Tσ - Id/3)|` on the sphere with the fitted `T`.
    pub sup_deviation: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
    pub stage: Option<usize>,
}

impl BlowupSphere {
    pub fn rotation(&self) -> Option<Mat3> {
        self.fit.map(|f| f.rotation)
    }
}

/// SHA-256 of `blob <len>\0<bytes>`, as git hashes file contents.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("report is not valid JSON for schema {SCHEMA}: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema {0:?}, expected {SCHEMA}")]
    Version(String),
    #[error("report has no stages")]
    Empty,
    #[error("input hash does not match the embedded configuration")]
    Hash,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let r: Report = serde_json::from_str(text)?;
        if r.schema != SCHEMA {
            return Err(SchemaError::Version(r.schema));
        }
        if r.stages.is_empty() {
            return Err(SchemaError::Empty);
        }
        if content_hash(r.config_toml.as_bytes()) != r.input_hash {
            return Err(SchemaError::Hash);
        }
        Ok(r)
    }
}
