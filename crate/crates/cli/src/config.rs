//! Scenario files.
//!
//! A scenario is one JSON object. Every key is optional except the wave
//! function, given either as `psi` (Madelung pair or Ψ grid) or as a
//! direct `V_Q` expression, never both.
//!
//! ```json
//! {
//!   "constants": { "hbar": 1, "mass": 1, "charge": 1, "c": 1 },
//!   "mass_matrix": ["m11", "m12", "m13", "m22", "m23", "m33"],
//!   "V": "0.5*x^2 - 1",
//!   "phi": 0,
//!   "A": ["-y/2", "x/2", "0"],
//!   "psi": { "R": "exp(-0.5*x^2)", "S": "0" },
//!   "domain": { "lo": [0, -3, -3, -3], "hi": [10, 3, 3, 3] },
//!   "initial": { "x": [0, 0.5, 0, 0], "y": [1, 0, 0, 0] },
//!   "numerics": { "step": 1e-3, "steps": 10000, "stop_time": 5 }
//! }
//! ```
//!
//! A field is an expression string, a number, or `{ "grid": "file.csv" }`
//! naming a grid file relative to the scenario file. `psi` may also be
//! `{ "grid": "psi.csv" }` holding complex samples. Constants default to 1.

use std::path::{Path, PathBuf};

use qhd_core::fields::{madelung_decompose, MadelungPotential};
use qhd_core::grid::{ComplexGrid, GridField};
use qhd_core::{Constants, Domain, MadelungState, MassMatrix, QuantumSource, ScalarField, Scenario, VectorField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub charge: f64,
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0, charge: 1.0, c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Number(f64),
    Expr(String),
    Grid(GridRef),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRef {
    pub grid: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveFunction {
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<FieldSpec>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub x: [f64; 4],
    #[serde(default = "unit_time")]
    pub y: [f64; 4],
}

fn unit_time() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { x: [0.0; 4], y: unit_time() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationConfig {
    #[default]
    Raw,
    FUnit,
    AlphaUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_time: Option<f64>,
    #[serde(default)]
    pub normalization: NormalizationConfig,
    /// Lattice points per axis for checks when no points file is given.
    #[serde(default = "default_lattice")]
    pub lattice: usize,
    /// Random tangent vectors per evaluation point in `validate`.
    #[serde(default = "default_tangents")]
    pub tangents: usize,
    #[serde(default = "default_compare_tolerance")]
    pub compare_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_step() -> f64 {
    1e-3
}
fn default_steps() -> usize {
    10_000
}
fn default_lattice() -> usize {
    3
}
fn default_tangents() -> usize {
    4
}
fn default_compare_tolerance() -> f64 {
    1e-4
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            step: default_step(),
            steps: default_steps(),
            stop_time: None,
            normalization: NormalizationConfig::Raw,
            lattice: default_lattice(),
            tangents: default_tangents(),
            compare_tolerance: default_compare_tolerance(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_matrix: Option<[FieldSpec; 6]>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<FieldSpec>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub vector_potential: Option<[FieldSpec; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<WaveFunction>,
    #[serde(rename = "V_Q", default, skip_serializing_if = "Option::is_none")]
    pub quantum_potential: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub numerics: Numerics,
}

/// A parsed scenario file with the directory its grid paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub base: PathBuf,
}

pub fn parse_scenario(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config = parse_scenario_str(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base })
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioConfig> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let config: ScenarioConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        CliError::schema(key, e.into_inner().to_string())
    })?;
    config.check()?;
    Ok(config)
}

impl ScenarioConfig {
    fn check(&self) -> Result<()> {
        match (&self.psi, &self.quantum_potential) {
            (None, None) => {
                return Err(CliError::schema("psi", "a wave function is required: give `psi` or `V_Q`"))
            }
            (Some(_), Some(_)) => return Err(CliError::schema("V_Q", "give either `psi` or `V_Q`, not both")),
            _ => {}
        }
        if let Some(psi) = &self.psi {
            match (&psi.amplitude, &psi.phase, &psi.grid) {
                (Some(_), Some(_), None) | (None, None, Some(_)) => {}
                (_, _, Some(_)) => return Err(CliError::schema("psi.grid", "a Ψ grid excludes `R` and `S`")),
                (None, _, None) => return Err(CliError::schema("psi.R", "missing amplitude `R`")),
                (_, None, None) => return Err(CliError::schema("psi.S", "missing phase `S`")),
            }
        }
        let n = &self.numerics;
        if !(n.step > 0.0) || !n.step.is_finite() {
            return Err(CliError::schema("numerics.step", "must be positive"));
        }
        if !(n.compare_tolerance > 0.0) {
            return Err(CliError::schema("numerics.compare_tolerance", "must be positive"));
        }
        Ok(())
    }

    /// SHA-256 over the resolved configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

impl LoadedConfig {
    fn grid(&self, key: &str, file: &str) -> Result<GridField<f64>> {
        let path = self.base.join(file);
        let f = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        GridField::read_csv(f).map_err(|e| CliError::schema(key, e.to_string()))
    }

    fn field(&self, key: &str, spec: &FieldSpec) -> Result<ScalarField<f64>> {
        match spec {
            FieldSpec::Number(v) => Ok(ScalarField::constant(*v)),
            FieldSpec::Expr(src) => ScalarField::parse(src).map_err(|e| match e {
                qhd_core::Error::Expression(source) => CliError::Expression { key: key.to_string(), source },
                other => other.into(),
            }),
            FieldSpec::Grid(g) => Ok(ScalarField::from_grid(self.grid(key, &g.grid)?)),
        }
    }

    pub fn domain(&self) -> Result<Domain<f64>> {
        match &self.config.domain {
            Some(d) => Domain::new(d.lo, d.hi).map_err(|e| CliError::schema("domain", e.to_string())),
            None => Ok(Domain::unbounded()),
        }
    }

    /// Box the checks sample: the domain, or `[-1, 1]⁴` when unbounded.
    pub fn sample_box(&self) -> Result<Domain<f64>> {
        match &self.config.domain {
            Some(_) => self.domain(),
            None => Ok(Domain::new([-1.0; 4], [1.0; 4])?),
        }
    }

    pub fn constants(&self) -> Result<Constants<f64>> {
        let c = &self.config.constants;
        Constants::new(c.hbar, c.mass, c.charge, c.c).map_err(|e| CliError::schema("constants", e.to_string()))
    }

    pub fn build(&self) -> Result<Scenario<f64>> {
        let cfg = &self.config;
        let consts = self.constants()?;
        let domain = self.domain()?;
        let mut s = Scenario::new(consts).with_domain(domain);
        if let Some(m) = &cfg.mass_matrix {
            let names = ["m11", "m12", "m13", "m22", "m23", "m33"];
            let mut fields = Vec::with_capacity(6);
            for (k, spec) in m.iter().enumerate() {
                fields.push(self.field(&format!("mass_matrix[{k}] ({})", names[k]), spec)?);
            }
            let upper: [ScalarField<f64>; 6] = fields.try_into().expect("six entries");
            s = s.with_mass(MassMatrix::general(upper));
        }
        if let Some(v) = &cfg.potential {
            s = s.with_potential(self.field("V", v)?);
        }
        if let Some(phi) = &cfg.phi {
            s = s.with_scalar_potential(self.field("phi", phi)?);
        }
        if let Some(a) = &cfg.vector_potential {
            let comps = [self.field("A[0]", &a[0])?, self.field("A[1]", &a[1])?, self.field("A[2]", &a[2])?];
            s = s.with_vector_potential(VectorField::new(comps));
        }
        let quantum = match (&cfg.psi, &cfg.quantum_potential) {
            (_, Some(vq)) => QuantumSource::Direct(self.field("V_Q", vq)?),
            (Some(psi), None) => {
                let state = match (&psi.amplitude, &psi.phase, &psi.grid) {
                    (_, _, Some(file)) => {
                        let path = self.base.join(file);
                        let f = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
                        let grid = ComplexGrid::read_csv(f).map_err(|e| CliError::schema("psi.grid", e.to_string()))?;
                        madelung_decompose(&grid, consts.hbar)?.into_state()
                    }
                    (Some(r), Some(ph), None) => {
                        let r = self.field("psi.R", r)?;
                        let ph = self.field("psi.S", ph)?;
                        MadelungState::on_domain(r, ph, &self.sample_box()?)?
                    }
                    _ => unreachable!("checked at parse time"),
                };
                QuantumSource::Madelung(MadelungPotential::new(state, &consts))
            }
            (None, None) => unreachable!("checked at parse time"),
        };
        Ok(s.with_quantum(quantum))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_neutral_scenario() {
        let cfg = parse_scenario_str(r#"{"V": "-(1)", "psi": {"R": "1", "S": "0"}}"#).unwrap();
        let loaded = LoadedConfig { config: cfg, base: PathBuf::new() };
        let s = loaded.build().unwrap();
        assert!(s.is_neutral());
        assert_eq!(s.total_potential(&[0.3, 1.0, -2.0, 0.5]).unwrap(), -1.0);
    }

    #[test]
    fn harmonic_scenario_loads() {
        let cfg =
            parse_scenario_str(r#"{"V": "0.5*x^2", "psi": {"R": "exp(-0.5*x^2)", "S": "0"}}"#).unwrap();
        let s = LoadedConfig { config: cfg, base: PathBuf::new() }.build().unwrap();
        assert!((s.total_potential(&[0.0, 0.8, 0.0, 0.0]).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_wave_function_is_a_schema_error() {
        let err = parse_scenario_str(r#"{"V": "x"}"#).unwrap_err();
        assert!(matches!(err, CliError::Schema { ref key, .. } if key == "psi"), "{err}");
    }

    #[test]
    fn both_wave_function_paths_rejected() {
        let err = parse_scenario_str(r#"{"V_Q": "0", "psi": {"R": "1", "S": "0"}}"#).unwrap_err();
        assert_eq!(err.name(), "SchemaError");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_scenario_str(r#"{"V_Q": "0", "numerics": {"stepz": 1}}"#).unwrap_err();
        match err {
            CliError::Schema { key, message } => {
                assert_eq!(key, "numerics.stepz");
                assert!(message.contains("stepz"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_scenario_str("{\n  \"V\": \"x\",\n  oops\n}").unwrap_err();
        match err {
            CliError::Syntax { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column >= 3);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn bad_expression_names_the_token() {
        let cfg = parse_scenario_str(r#"{"V": "x + foo", "V_Q": "0"}"#).unwrap();
        let err = LoadedConfig { config: cfg, base: PathBuf::new() }.build().unwrap_err();
        match err {
            CliError::Expression { key, source } => {
                assert_eq!(key, "V");
                assert_eq!(source.token, "foo");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn defaults_apply_and_hash_is_stable() {
        let a = parse_scenario_str(r#"{"V_Q": "0"}"#).unwrap();
        let b = parse_scenario_str(r#"{"V_Q": "0", "constants": {"hbar": 1}, "numerics": {"step": 0.001}}"#).unwrap();
        assert_eq!(a.constants, ConstantsConfig::default());
        assert_eq!(a.hash(), b.hash());
        let c = parse_scenario_str(r#"{"V_Q": "1"}"#).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
