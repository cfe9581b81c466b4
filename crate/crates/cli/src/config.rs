//! Run configuration: a single JSON document, validated before any work starts.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use horizonlab_core::horizon::{Resolution, SymmetryMode};
use horizonlab_core::{DimensionPair, Submanifold};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Points(Vec<Vec<f64>>),
    Sphere { radius: f64 },
    Product(Vec<FactorSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub dim: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    One(f64),
    Many(Vec<f64>),
}

impl EpsilonSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EpsilonSpec::One(e) => vec![*e],
            EpsilonSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    /// reduced_1d when the configuration is symmetric enough, full otherwise
    Auto,
    Full,
    Reduced1d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub base: usize,
    pub azimuth: usize,
    pub colatitude: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { base: 16, azimuth: 32, colatitude: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative quadrature tolerance for u − 1.
    pub quadrature: f64,
    /// sup |H| threshold; null means 1e-8 / ε.
    pub residual: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { quadrature: 1e-12, residual: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSpec {
    /// Smallest tube radius; null means â ε / 20.
    pub a_min: Option<f64>,
    /// Largest tube radius; null means min(0.95 reach, 100 â ε).
    pub a_max: Option<f64>,
    pub samples: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self { a_min: None, a_max: None, samples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_flow_steps: usize,
    pub max_newton_steps: usize,
    /// Scan barriers first and check confinement and the outer initialization.
    pub certify: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { max_flow_steps: 400, max_newton_steps: 40, certify: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldEvalSpec {
    pub points: Vec<Vec<f64>>,
    /// CSV of coordinates, one point per row; relative paths resolve against the config file.
    pub input_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RescalingSpec {
    /// Base point on S; null means the point of S nearest (1, …, 1).
    pub x_infinity: Option<Vec<f64>>,
    /// null means 3 â.
    pub beta1: Option<f64>,
    /// null means â / 2.
    pub beta2: Option<f64>,
    pub per_axis: usize,
}

impl Default for RescalingSpec {
    fn default() -> Self {
        Self { x_infinity: None, beta1: None, beta2: None, per_axis: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    /// Tube radius; null means â ε for the first ε.
    pub radius: Option<f64>,
    pub segments: usize,
    pub rings: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { radius: None, segments: 64, rings: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub shape: ShapeSpec,
    pub epsilon: EpsilonSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_mode")]
    pub mode: ModeSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub field_eval: FieldEvalSpec,
    #[serde(default)]
    pub rescaling: RescalingSpec,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_mode() -> ModeSpec {
    ModeSpec::Auto
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be a positive finite number, got {v}")))
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn dims(&self) -> Result<DimensionPair, CliError> {
        DimensionPair::new(self.n, self.m).map_err(|e| field_err("n/m", e))
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.epsilon.values()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let dims = self.dims()?;
        let eps = self.epsilons();
        if eps.is_empty() {
            return Err(field_err("epsilon", "must not be empty"));
        }
        for e in &eps {
            positive("epsilon", *e)?;
        }
        positive("tolerances.quadrature", self.tolerances.quadrature)?;
        if self.tolerances.quadrature >= 1.0 {
            return Err(field_err("tolerances.quadrature", "must be below 1"));
        }
        if let Some(r) = self.tolerances.residual {
            positive("tolerances.residual", r)?;
        }
        for (name, v) in [("grid.azimuth", self.grid.azimuth), ("grid.colatitude", self.grid.colatitude), ("grid.base", self.grid.base)] {
            if v < 8 {
                return Err(field_err(name, format!("must be at least 8, got {v}")));
            }
        }
        if let Some(a) = self.scan.a_min {
            positive("scan.a_min", a)?;
        }
        if let Some(a) = self.scan.a_max {
            positive("scan.a_max", a)?;
        }
        if self.scan.samples < 2 {
            return Err(field_err("scan.samples", "must be at least 2"));
        }
        for p in &self.field_eval.points {
            if p.len() != dims.n() {
                return Err(field_err("field_eval.points", format!("point {p:?} is not in R^{}", dims.n())));
            }
        }
        if let Some(x) = &self.rescaling.x_infinity {
            if x.len() != dims.n() {
                return Err(field_err("rescaling.x_infinity", format!("must have {} coordinates", dims.n())));
            }
        }
        for (name, v) in [("rescaling.beta1", self.rescaling.beta1), ("rescaling.beta2", self.rescaling.beta2), ("mesh.radius", self.mesh.radius)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if self.mesh.segments < 3 || self.mesh.rings < 3 {
            return Err(field_err("mesh", "segments and rings must be at least 3"));
        }
        self.submanifold()?;
        Ok(())
    }

    pub fn submanifold(&self) -> Result<Submanifold, CliError> {
        let dims = self.dims()?;
        let s = match &self.shape {
            ShapeSpec::Points(points) => Submanifold::point_set(dims, points.clone()),
            ShapeSpec::Sphere { radius } => Submanifold::round_sphere(dims, *radius),
            ShapeSpec::Product(factors) => {
                let f: Vec<(usize, f64)> = factors.iter().map(|f| (f.dim, f.radius)).collect();
                Submanifold::product_of_spheres(dims, &f)
            }
        };
        s.map_err(|e| field_err("shape", e))
    }

    pub fn resolution(&self) -> Resolution {
        Resolution::new(self.grid.base, self.grid.azimuth, self.grid.colatitude)
    }

    /// Symmetry mode after resolving `auto`.
    pub fn symmetry_mode(&self) -> SymmetryMode {
        match self.mode {
            ModeSpec::Full => SymmetryMode::Full,
            ModeSpec::Reduced1d => SymmetryMode::Reduced1d,
            ModeSpec::Auto => match &self.shape {
                ShapeSpec::Sphere { .. } => SymmetryMode::Reduced1d,
                ShapeSpec::Points(p) if p.len() == 1 && self.n - self.m - 1 > 3 => SymmetryMode::Reduced1d,
                _ => SymmetryMode::Full,
            },
        }
    }

    /// Canonical JSON echo with defaults applied.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical echo.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.echo()).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
