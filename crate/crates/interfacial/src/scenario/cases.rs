//! Published case studies: presets, golden values and their checks.

use serde::{Deserialize, Serialize};

use super::config::CaseName;
use crate::error::Result;
use crate::units::{
    bond_number, derive_params, practical_verdict, sigma_for_upsilon, upsilon, PhysicalConfig,
    PracticalVerdict, VERDICT_HI, VERDICT_LO,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
    /// Accepts `expected / f <= computed <= expected * f`.
    Factor(f64),
}

impl Tolerance {
    pub fn accepts(self, computed: f64, expected: f64) -> bool {
        match self {
            Tolerance::Absolute(t) => (computed - expected).abs() <= t,
            Tolerance::Relative(t) => (computed - expected).abs() <= t * expected.abs(),
            Tolerance::Factor(f) => computed >= expected / f && computed <= expected * f,
        }
    }
}

/// A golden value with its tolerance and a note on where it comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseStudyExpectation {
    pub quantity: &'static str,
    pub expected: f64,
    pub tolerance: Tolerance,
    pub reference: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseCheck {
    pub quantity: String,
    pub computed: f64,
    pub expected: f64,
    pub delta: f64,
    pub tolerance: Tolerance,
    pub passed: bool,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: CaseName,
    pub configs: Vec<PhysicalConfig>,
    pub verdict: Option<PracticalVerdict>,
    pub checks: Vec<CaseCheck>,
    pub passed: bool,
}

const AIR: f64 = 1.2;
const SEA: f64 = 1025.0;
const AIR_WATER_TENSION: f64 = 0.073;
/// Water over Freon tension; an estimate used by the published study, not a measurement.
pub const FREON_WATER_TENSION: f64 = 0.005;

pub fn air_water(amplitude: f64, depth: f64, wavelength: f64) -> PhysicalConfig {
    PhysicalConfig {
        rho_plus: SEA,
        rho_minus: AIR,
        depth_plus: depth,
        depth_minus: depth,
        amplitude,
        wavelength,
        surface_tension: AIR_WATER_TENSION,
        gravity: 9.81,
    }
}

pub fn koop_butler(amplitude: f64) -> PhysicalConfig {
    PhysicalConfig {
        rho_plus: 1563.0,
        rho_minus: 998.0,
        depth_plus: 1.366e-2,
        depth_minus: 6.948e-2,
        amplitude,
        wavelength: 1.0,
        surface_tension: FREON_WATER_TENSION,
        gravity: 9.81,
    }
}

/// Grue geometry; the tension is the value to be inferred, so it starts unset.
pub fn grue(amplitude: f64) -> PhysicalConfig {
    PhysicalConfig {
        rho_plus: 1022.0,
        rho_minus: 999.0,
        depth_plus: 0.62,
        depth_minus: 0.15,
        amplitude,
        wavelength: 1.0,
        surface_tension: 0.0,
        gravity: 9.81,
    }
}

pub fn expectations(case: CaseName) -> Vec<CaseStudyExpectation> {
    match case {
        CaseName::AirWaterLong => vec![
            CaseStudyExpectation {
                quantity: "upsilon_over_eps_squared",
                expected: 4e-4,
                tolerance: Tolerance::Factor(1.5),
                reference: "air-water long wave, strong-criterion parameter quoted to one digit",
            },
            CaseStudyExpectation {
                quantity: "bond",
                expected: 1.7e8,
                tolerance: Tolerance::Relative(0.10),
                reference: "air-water long wave, quoted Bond number",
            },
        ],
        CaseName::AirWaterBreaking => vec![CaseStudyExpectation {
            quantity: "upsilon",
            expected: 0.27,
            tolerance: Tolerance::Relative(0.05),
            reference: "6 m breaking wave in 15 m of water, quoted upsilon",
        }],
        CaseName::KoopButler => vec![
            CaseStudyExpectation {
                quantity: "h_eff_cm",
                expected: 1.989,
                tolerance: Tolerance::Absolute(0.001),
                reference: "water over Freon tank, quoted effective depth",
            },
            CaseStudyExpectation {
                quantity: "upsilon_small_amplitude",
                expected: 5.39e-7,
                tolerance: Tolerance::Relative(0.05),
                reference:
                    "water over Freon tank, lower end of the quoted upsilon range (a = 0.034 cm)",
            },
            CaseStudyExpectation {
                quantity: "upsilon_large_amplitude",
                expected: 0.086,
                tolerance: Tolerance::Relative(0.05),
                reference:
                    "water over Freon tank, upper end of the quoted upsilon range (a = 0.68 cm)",
            },
        ],
        CaseName::Grue => vec![
            CaseStudyExpectation {
                quantity: "h_eff_m",
                expected: 0.243,
                tolerance: Tolerance::Absolute(0.001),
                reference: "brine over fresh water tank, quoted effective depth",
            },
            CaseStudyExpectation {
                quantity: "inferred_surface_tension",
                expected: 0.095,
                tolerance: Tolerance::Absolute(0.001),
                reference: "tension that puts upsilon at 1 for the breaking amplitude 0.2 m",
            },
        ],
    }
}

fn computed_values(
    case: CaseName,
) -> Result<(Vec<PhysicalConfig>, Vec<f64>, Option<PracticalVerdict>)> {
    Ok(match case {
        CaseName::AirWaterLong => {
            let cfg = air_water(0.1, 5.0, 35.0);
            let p = derive_params(&cfg)?;
            let u = upsilon(&cfg)?;
            let strong = u / (p.eps * p.eps);
            let verdict = practical_verdict(strong, VERDICT_LO, VERDICT_HI)?;
            (vec![cfg], vec![strong, bond_number(&cfg)?], Some(verdict))
        }
        CaseName::AirWaterBreaking => {
            let cfg = air_water(6.0, 15.0, 100.0);
            let u = upsilon(&cfg)?;
            (
                vec![cfg],
                vec![u],
                Some(practical_verdict(u, VERDICT_LO, VERDICT_HI)?),
            )
        }
        CaseName::KoopButler => {
            let small = koop_butler(0.034e-2);
            let large = koop_butler(0.68e-2);
            (
                vec![small, large],
                vec![
                    small.effective_depth() * 100.0,
                    upsilon(&small)?,
                    upsilon(&large)?,
                ],
                None,
            )
        }
        CaseName::Grue => {
            let cfg = grue(0.2);
            let sigma = sigma_for_upsilon(&cfg, 1.0)?;
            let tuned = cfg.with_surface_tension(sigma);
            let verdict = practical_verdict(upsilon(&tuned)?, VERDICT_LO, VERDICT_HI)?;
            (
                vec![tuned],
                vec![cfg.effective_depth(), sigma],
                Some(verdict),
            )
        }
    })
}

/// Evaluates one case and compares with its golden values.
pub fn run_case(case: CaseName) -> Result<CaseReport> {
    let (configs, values, verdict) = computed_values(case)?;
    let checks: Vec<CaseCheck> = expectations(case)
        .iter()
        .zip(values)
        .map(|(e, v)| CaseCheck {
            quantity: e.quantity.to_string(),
            computed: v,
            expected: e.expected,
            delta: v - e.expected,
            tolerance: e.tolerance,
            passed: e.tolerance.accepts(v, e.expected),
            reference: e.reference.to_string(),
        })
        .collect();
    Ok(CaseReport {
        case,
        configs,
        verdict,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_case_passes() {
        for c in CaseName::ALL {
            let r = run_case(c).unwrap();
            assert!(r.passed, "{r:#?}");
        }
    }

    #[test]
    fn tolerance_kinds() {
        assert!(Tolerance::Factor(1.5).accepts(5.9e-4, 4e-4));
        assert!(!Tolerance::Factor(1.5).accepts(6.1e-4, 4e-4));
        assert!(Tolerance::Relative(0.05).accepts(0.28, 0.27));
        assert!(!Tolerance::Absolute(0.001).accepts(0.2445, 0.243));
    }

    #[test]
    fn verdicts() {
        assert_eq!(
            run_case(CaseName::AirWaterLong).unwrap().verdict,
            Some(PracticalVerdict::Stable)
        );
        assert_eq!(
            run_case(CaseName::AirWaterBreaking).unwrap().verdict,
            Some(PracticalVerdict::Critical)
        );
    }
}
