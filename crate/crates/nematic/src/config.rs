//! Experiment configuration (TOML).
//!
//! ```toml
//! [material]
//! a2 = 1.0
//! b2 = 1.0
//! c2 = 1.0
//!
//! [ladder]
//! eps = [0.2, 0.1, 0.05]
//!
//! [grid]
//! n_cells = 64
//! half_width = 1.0
//! ball_radius = 1.0          # omit to fix only the outer node layer
//!
//! [boundary]
//! kind = "hedgehog"          # or "rotated-hedgehog" / "constant"
//!
//! [solver]
//! max_iters = 50000
//! grad_tol = 1e-3
//!
//! [analysis]
//! delta_fractions = [0.5]
//! sphere_radii = [0.5, 0.75]
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every table and key not shown falls back to the defaults below.

use std::path::PathBuf;

use nematic_core::linalg::{axis_angle, normalize, IDENTITY};
use nematic_core::linalg::Mat3;
use nematic_core::solver::SolverConfig;
use nematic_core::{GridSpec, MaterialParams, QTensor};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub material: MaterialConfig,
    pub ladder: LadderConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConfig {
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig {
            a2: 1.0,
            b2: 1.0,
            c2: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    pub eps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_cells: usize,
    pub half_width: f64,
    /// Nodes outside this ball about the origin are Dirichlet. Without it
    /// only the outer node layer is.
    pub ball_radius: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_cells: 64,
            half_width: 1.0,
            ball_radius: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryConfig {
    /// `s₊ (x̂⊗x̂ - Id/3)`.
    #[default]
    Hedgehog,
    /// `s₊ (Tx̂⊗Tx̂ - Id/3)` with `T` a rotation by `angle_deg` about `axis`.
    RotatedHedgehog { axis: [f64; 3], angle_deg: f64 },
    /// `s₊ (n⊗n - Id/3)`.
    Constant { director: [f64; 3] },
}

impl BoundaryConfig {
    /// Rotation carrying the hedgehog to the boundary map, if it is one.
    pub fn rotation(&self) -> Option<Mat3> {
        match self {
            BoundaryConfig::Hedgehog => Some(IDENTITY),
            BoundaryConfig::RotatedHedgehog { axis, angle_deg } => {
                normalize(*axis).map(|a| axis_angle(a, angle_deg.to_radians()))
            }
            BoundaryConfig::Constant { .. } => None,
        }
    }

    pub fn tensor_at(&self, x: [f64; 3], s_plus: f64) -> QTensor {
        match self {
            BoundaryConfig::Constant { director } => QTensor::uniaxial_normalized(*director, s_plus),
            _ => {
                let t = self.rotation().unwrap_or(IDENTITY);
                QTensor::uniaxial_normalized(nematic_core::linalg::mat_vec(&t, x), s_plus)
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// The boundary map sampled everywhere.
    #[default]
    Boundary,
    /// The boundary map plus seeded uniform noise on the free nodes.
    Perturbed { amplitude: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
    pub history_stride: usize,
    pub armijo: f64,
    /// Write a field snapshot every this many iterations; 0 disables.
    pub checkpoint_every: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
            seed: d.seed,
            history_stride: d.history_stride,
            armijo: d.armijo,
            checkpoint_every: 0,
        }
    }
}

impl SolverSection {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            seed: self.seed,
            history_stride: self.history_stride,
            armijo: self.armijo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Core thresholds as fractions of `s₊√(2/3)`, the largest distance to N.
    pub delta_fractions: Vec<f64>,
    /// Sphere radii about the core for degree and tangent fit.
    pub sphere_radii: Vec<f64>,
    pub level: u32,
    pub gap_min: f64,
    /// Blow-up sphere radii in units of ε.
    pub blowup_radii: Vec<f64>,
    /// `r_n = ε^exponent` sets the inner radius of the second annulus row.
    pub r_n_exponent: f64,
    pub annulus_inner: f64,
    pub annulus_outer: f64,
    pub ball_radii: Vec<f64>,
    /// Slack for the monotonicity check of the ball ratios.
    pub monotonicity_slack: f64,
    pub decay_radii: Vec<f64>,
    pub drift_r0: f64,
    pub drift_levels: u32,
    /// Mesh nodes for the radial prediction of the core size.
    pub radial_nodes: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            delta_fractions: vec![0.25, 0.5, 0.75],
            sphere_radii: vec![0.5, 0.75],
            level: nematic_core::sphere::DEFAULT_LEVEL,
            gap_min: nematic_core::qtensor::DEFAULT_GAP_MIN,
            blowup_radii: vec![4.0, 8.0, 16.0],
            r_n_exponent: 0.5,
            annulus_inner: 0.3,
            annulus_outer: 0.8,
            ball_radii: (0..10).map(|i| 0.15 + 0.75 * i as f64 / 9.0).collect(),
            monotonicity_slack: 0.01,
            decay_radii: vec![0.1, 0.2, 0.4],
            drift_r0: 0.1,
            drift_levels: 3,
            radial_nodes: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write the converged field of every stage as CSV.
    pub snapshots: bool,
    /// Write per-sphere director maps as CSV.
    pub director_maps: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            snapshots: false,
            director_maps: false,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Ok((Self::from_toml(&text)?, text))
    }

    /// The canonical experiment: B₁ hedgehog, ε ∈ {0.2, 0.1, 0.05}, n = 64.
    pub fn canonical() -> Self {
        ExperimentConfig {
            material: MaterialConfig::default(),
            ladder: LadderConfig {
                eps: vec![0.2, 0.1, 0.05],
            },
            grid: GridConfig {
                ball_radius: Some(1.0),
                ..GridConfig::default()
            },
            boundary: BoundaryConfig::Hedgehog,
            initial: InitialConfig::Boundary,
            solver: SolverSection::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn params(&self, eps: f64) -> Result<MaterialParams, ConfigError> {
        let m = &self.material;
        MaterialParams::new(m.a2, m.b2, m.c2, eps).map_err(|e| invalid(e.to_string()))
    }

    pub fn grid_spec(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::centered(self.grid.half_width, self.grid.n_cells).map_err(|e| invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let eps = &self.ladder.eps;
        if eps.is_empty() {
            return Err(invalid("ladder.eps is empty"));
        }
        if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(invalid("ladder.eps entries must be positive"));
        }
        if eps.windows(2).any(|w| !(w[1] <= w[0])) {
            return Err(invalid("ladder.eps must be nonincreasing"));
        }
        self.params(eps[0])?;
        let g = self.grid_spec()?;
        if let Some(r) = self.grid.ball_radius {
            if !(r > 2.0 * g.spacing() && r <= self.grid.half_width) {
                return Err(invalid("grid.ball_radius must lie in (2h, half_width]"));
            }
        }
        match &self.boundary {
            BoundaryConfig::RotatedHedgehog { axis, angle_deg } => {
                if normalize(*axis).is_none() || !angle_deg.is_finite() {
                    return Err(invalid("boundary.axis must be nonzero and angle_deg finite"));
                }
            }
            BoundaryConfig::Constant { director } => {
                if normalize(*director).is_none() {
                    return Err(invalid("boundary.director must be nonzero"));
                }
            }
            BoundaryConfig::Hedgehog => {}
        }
        if let InitialConfig::Perturbed { amplitude } = self.initial {
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(invalid("initial.amplitude must be nonnegative"));
            }
        }
        self.solver
            .solver_config()
            .validate()
            .map_err(|e| invalid(e.to_string()))?;

        let a = &self.analysis;
        if a.delta_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(invalid("analysis.delta_fractions must lie in (0, 1)"));
        }
        let positive = |name: &str, v: &[f64]| {
            if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                Err(invalid(format!("analysis.{name} must be positive")))
            } else {
                Ok(())
            }
        };
        positive("sphere_radii", &a.sphere_radii)?;
        positive("blowup_radii", &a.blowup_radii)?;
        positive("ball_radii", &a.ball_radii)?;
        positive("decay_radii", &a.decay_radii)?;
        if a.level > 7 {
            return Err(invalid("analysis.level must be at most 7"));
        }
        if !(a.gap_min > 0.0) {
            return Err(invalid("analysis.gap_min must be positive"));
        }
        if !(a.annulus_inner > 0.0 && a.annulus_inner < a.annulus_outer) {
            return Err(invalid("analysis annulus needs 0 < inner < outer"));
        }
        if !(a.r_n_exponent > 0.0 && a.r_n_exponent < 1.0) {
            return Err(invalid("analysis.r_n_exponent must lie in (0, 1)"));
        }
        if !(a.monotonicity_slack >= 0.0) {
            return Err(invalid("analysis.monotonicity_slack must be nonnegative"));
        }
        if !(a.drift_r0 > 0.0) {
            return Err(invalid("analysis.drift_r0 must be positive"));
        }
        if a.radial_nodes < 8 {
            return Err(invalid("analysis.radial_nodes must be at least 8"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::from_toml("[ladder]\neps = [0.2, 0.1]\n").unwrap();
        assert_eq!(c.grid.n_cells, 64);
        assert_eq!(c.boundary, BoundaryConfig::Hedgehog);
        assert_eq!(c.analysis.ball_radii.len(), 10);
    }

    #[test]
    fn canonical_round_trips() {
        let c = ExperimentConfig::canonical();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_ladders_and_keys() {
        assert!(matches!(
            ExperimentConfig::from_toml("[ladder]\neps = []\n"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(ExperimentConfig::from_toml("[ladder]\neps = [0.1, 0.2]\n").is_err());
        assert!(matches!(
            ExperimentConfig::from_toml("[ladder]\neps = [0.1]\nbogus = 1\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn boundary_variants_parse() {
        let text = "[ladder]\neps = [0.1]\n[boundary]\nkind = \"rotated-hedgehog\"\naxis = [0, 0, 1]\nangle_deg = 90\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        let t = c.boundary.rotation().unwrap();
        assert!((t[0][1] + 1.0).abs() < 1e-15);
        let text = "[ladder]\neps = [0.1]\n[boundary]\nkind = \"constant\"\ndirector = [0, 0, 2]\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.boundary.tensor_at([1.0, 0.0, 0.0], 1.5), QTensor::uniaxial([0.0, 0.0, 1.0], 1.5).unwrap());
    }
}
