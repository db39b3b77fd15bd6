//! Scenario files: JSON, unknown keys rejected, defaults filled in.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{default_gravity, DimensionlessParams, NondimInputs, PhysicalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Params,
    Criterion,
    Kelvin,
    DnVerify,
    TailVerify,
    Evolve,
    Swsw,
    Compare,
    Case,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseName {
    AirWaterLong,
    AirWaterBreaking,
    KoopButler,
    Grue,
}

impl CaseName {
    pub const ALL: [CaseName; 4] = [
        CaseName::AirWaterLong,
        CaseName::AirWaterBreaking,
        CaseName::KoopButler,
        CaseName::Grue,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::AirWaterLong => "air_water_long",
            CaseName::AirWaterBreaking => "air_water_breaking",
            CaseName::KoopButler => "koop_butler",
            CaseName::Grue => "grue",
        }
    }
}

impl std::str::FromStr for CaseName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown case {s:?}; expected one of air_water_long, air_water_breaking, koop_butler, grue"
                ))
            })
    }
}

/// Physical block; surface tension may be omitted for run kinds that do not need it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSpec {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub depth_plus: f64,
    pub depth_minus: f64,
    pub amplitude: f64,
    pub wavelength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_tension: Option<f64>,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

impl PhysicalSpec {
    /// Missing surface tension reads as zero unless `need_sigma` is set.
    pub fn to_config(&self, need_sigma: bool) -> Result<PhysicalConfig> {
        let sigma = match (self.surface_tension, need_sigma) {
            (Some(s), true) if s <= 0.0 => {
                return Err(Error::InvalidConfig(
                    "physical.surface_tension must be positive for this run kind".into(),
                ))
            }
            (Some(s), _) => s,
            (None, true) => {
                return Err(Error::InvalidConfig(
                    "physical.surface_tension is required for this run kind".into(),
                ))
            }
            (None, false) => 0.0,
        };
        let cfg = PhysicalConfig {
            rho_plus: self.rho_plus,
            rho_minus: self.rho_minus,
            depth_plus: self.depth_plus,
            depth_minus: self.depth_minus,
            amplitude: self.amplitude,
            wavelength: self.wavelength,
            surface_tension: sigma,
            gravity: self.gravity,
        };
        cfg.validate()
            .map_err(|e| Error::InvalidConfig(format!("physical: {e}")))?;
        Ok(cfg)
    }
}

impl From<PhysicalConfig> for PhysicalSpec {
    fn from(c: PhysicalConfig) -> Self {
        Self {
            rho_plus: c.rho_plus,
            rho_minus: c.rho_minus,
            depth_plus: c.depth_plus,
            depth_minus: c.depth_minus,
            amplitude: c.amplitude,
            wavelength: c.wavelength,
            surface_tension: Some(c.surface_tension),
            gravity: c.gravity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative residual of the elliptic solves.
    pub strip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { strip: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub n_points: usize,
    pub n_z: usize,
    /// Defaults to the solver's stability cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Output every this many steps.
    pub cadence: usize,
    pub tolerances: Tolerances,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_points: 64,
            n_z: 32,
            dt: None,
            t_end: 1.0,
            cadence: 10,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown format {other:?}; expected json or csv"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            path: None,
            formats: vec![Format::Json],
        }
    }
}

/// Fourier modes `[k, cos amplitude, sin amplitude]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialData {
    pub zeta: Vec<[f64; 3]>,
    pub psi: Vec<[f64; 3]>,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            zeta: vec![[1.0, 1.0, 0.0]],
            psi: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriterionSpec {
    /// Velocity jump in m/s; defaults to the shear scale of the configuration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shear: Option<f64>,
    pub gamma: f64,
}

impl Default for CriterionSpec {
    fn default() -> Self {
        Self {
            shear: None,
            gamma: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KelvinSpec {
    pub k_min: f64,
    pub k_max: f64,
    /// Rows of the dispersion table.
    pub samples: usize,
    /// Velocity jump used for the dispersion table, m/s.
    pub shear: f64,
    pub arbitrate: bool,
}

impl Default for KelvinSpec {
    fn default() -> Self {
        Self {
            k_min: crate::kelvin::DEFAULT_K_RANGE.0,
            k_max: crate::kelvin::DEFAULT_K_RANGE.1,
            samples: 200,
            shear: 0.0,
            arbitrate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DnVerifySpec {
    pub mu: Vec<f64>,
    /// Random smooth inputs for the symmetry and sign checks.
    pub samples: usize,
    pub eps: f64,
}

impl Default for DnVerifySpec {
    fn default() -> Self {
        Self {
            mu: vec![0.01, 0.25, 1.0],
            samples: 20,
            eps: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailSpec {
    pub eps: Vec<f64>,
    pub mu: Vec<f64>,
    pub rhobar_plus: f64,
    pub depth_ratio: f64,
}

impl Default for TailSpec {
    fn default() -> Self {
        Self {
            eps: vec![0.0, 0.025, 0.05, 0.1, 0.2],
            mu: vec![0.5],
            rhobar_plus: 0.6,
            depth_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSpec {
    pub mu: Vec<f64>,
    pub n_reference: usize,
    pub samples: usize,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self {
            mu: vec![0.04, 0.02, 0.01, 0.005],
            n_reference: 8192,
            samples: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub run_kind: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_name: Option<CaseName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSpec>,
    /// Dimensionless alternative to `physical` for the time-dependent run kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondim: Option<NondimInputs>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kelvin: Option<KelvinSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dn_verify: Option<DnVerifySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
}

impl ScenarioConfig {
    pub fn for_case(name: CaseName) -> Self {
        Self {
            run_kind: RunKind::Case,
            case_name: Some(name),
            physical: None,
            nondim: None,
            numerics: Numerics::default(),
            output: OutputSpec::default(),
            initial: None,
            criterion: None,
            kelvin: None,
            dn_verify: None,
            tail: None,
            compare: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let n = &self.numerics;
        if n.n_points < 8 || !n.n_points.is_multiple_of(2) {
            return bad("numerics.n_points must be even and at least 8");
        }
        if n.n_z < 2 {
            return bad("numerics.n_z must be at least 2");
        }
        if !(n.t_end >= 0.0 && n.t_end.is_finite()) {
            return bad("numerics.t_end must be finite and nonnegative");
        }
        if let Some(dt) = n.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("numerics.dt must be positive");
            }
        }
        if n.cadence == 0 {
            return bad("numerics.cadence must be at least 1");
        }
        if !(n.tolerances.strip > 0.0 && n.tolerances.strip < 1.0) {
            return bad("numerics.tolerances.strip must lie in (0, 1)");
        }
        let need_physical = |field: &str| -> Result<()> {
            if self.physical.is_none() {
                return Err(Error::InvalidConfig(format!(
                    "physical block is required for run_kind {field}"
                )));
            }
            Ok(())
        };
        match self.run_kind {
            RunKind::Case => {
                if self.case_name.is_none() {
                    return bad("case_name is required for run_kind case");
                }
            }
            RunKind::Params => {
                need_physical("params")?;
                self.physical.unwrap().to_config(false)?;
            }
            RunKind::Criterion => {
                need_physical("criterion")?;
                self.physical.unwrap().to_config(true)?;
            }
            RunKind::Kelvin => {
                need_physical("kelvin")?;
                self.physical.unwrap().to_config(true)?;
                if let Some(k) = &self.kelvin {
                    if !(k.k_min > 0.0 && k.k_max > k.k_min) {
                        return bad("kelvin.k_min and kelvin.k_max must satisfy 0 < k_min < k_max");
                    }
                }
            }
            RunKind::Evolve | RunKind::Swsw | RunKind::Compare => {
                self.dimensionless()?;
            }
            RunKind::DnVerify | RunKind::TailVerify => {}
        }
        Ok(())
    }

    /// Dimensionless parameters from whichever block is present.
    pub fn dimensionless(&self) -> Result<DimensionlessParams> {
        match (&self.physical, &self.nondim) {
            (Some(_), Some(_)) => Err(Error::InvalidConfig(
                "give either physical or nondim, not both".into(),
            )),
            (Some(p), None) => crate::units::derive_params(&p.to_config(false)?),
            (None, Some(n)) => DimensionlessParams::from_nondim(n)
                .map_err(|e| Error::InvalidConfig(format!("nondim: {e}"))),
            (None, None) => Err(Error::InvalidConfig(
                "a physical or nondim block is required for this run kind".into(),
            )),
        }
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = serde_json::from_str(text)
        .map_err(|e| Error::InvalidConfig(format!("config parse error: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_case_file() {
        let c = parse_config(r#"{"run_kind": "case", "case_name": "grue"}"#).unwrap();
        assert_eq!(c.case_name, Some(CaseName::Grue));
        assert_eq!(c.numerics, Numerics::default());
        assert_eq!(c.output.formats, vec![Format::Json]);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = parse_config(r#"{"run_kind": "case", "case_name": "grue", "viscosity": 1e-6}"#)
            .unwrap_err();
        assert!(e.to_string().contains("viscosity"), "{e}");
    }

    #[test]
    fn missing_sigma_named() {
        let text = r#"{"run_kind": "criterion", "physical": {"rho_plus": 1022, "rho_minus": 999,
            "depth_plus": 0.62, "depth_minus": 0.15, "amplitude": 0.2, "wavelength": 1.0}}"#;
        let e = parse_config(text).unwrap_err();
        assert!(e.to_string().contains("surface_tension"), "{e}");
        let ok = text.replace("criterion", "params");
        assert!(parse_config(&ok).is_ok());
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = parse_config("{\n  \"run_kind\": \"case\",\n  oops\n}").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn case_needs_name() {
        assert!(parse_config(r#"{"run_kind": "case"}"#).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = parse_config(
            r#"{"run_kind": "evolve", "nondim": {"rhobar_plus": 0.6, "depth_ratio": 1.0,
                "eps": 0.1, "mu": 0.5, "bond": "inf"}}"#,
        )
        .unwrap();
        let back = parse_config(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
