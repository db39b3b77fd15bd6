//! Linear stability of two uniform streams separated by a sharp interface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{golden_max, log_scan_max};
use crate::stability::c_flat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearConfig {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub depth_plus: f64,
    pub depth_minus: f64,
    #[serde(default)]
    pub c_plus: f64,
    #[serde(default)]
    pub c_minus: f64,
    pub surface_tension: f64,
    #[serde(default = "crate::units::default_gravity")]
    pub gravity: f64,
}

impl ShearConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.rho_plus,
            self.rho_minus,
            self.depth_plus,
            self.depth_minus,
            self.c_plus,
            self.c_minus,
            self.surface_tension,
            self.gravity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig(
                "shear config values must be finite".into(),
            ));
        }
        if !(self.depth_plus > 0.0 && self.depth_minus > 0.0) {
            return Err(Error::InvalidConfig("depths must be positive".into()));
        }
        if !(self.rho_plus >= self.rho_minus && self.rho_minus >= 0.0 && self.rho_plus > 0.0) {
            return Err(Error::InvalidConfig(
                "densities must satisfy rho_plus >= rho_minus >= 0".into(),
            ));
        }
        if self.surface_tension < 0.0 {
            return Err(Error::InvalidConfig(
                "surface tension must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn shear(&self) -> f64 {
        self.c_plus - self.c_minus
    }

    pub fn with_shear(&self, jump: f64) -> Self {
        Self {
            c_plus: jump,
            c_minus: 0.0,
            ..*self
        }
    }

    fn weights(&self, k: f64) -> (f64, f64) {
        (
            self.rho_plus / (k * self.depth_plus).tanh(),
            self.rho_minus / (k * self.depth_minus).tanh(),
        )
    }

    fn restoring(&self, k: f64) -> f64 {
        (self.gravity * (self.rho_plus - self.rho_minus) + self.surface_tension * k * k) / k
    }

    /// Reduced discriminant of the dispersion quadratic in `omega / k`.
    pub fn discriminant(&self, k: f64) -> f64 {
        let (a, b) = self.weights(k);
        let u = self.shear();
        (a + b) * self.restoring(k) - a * b * u * u
    }
}

/// Both roots of the dispersion relation for one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRoots {
    pub k: f64,
    pub re_omega_1: f64,
    pub re_omega_2: f64,
    pub im_omega_max: f64,
}

pub fn mode_roots(k: f64, cfg: &ShearConfig) -> ModeRoots {
    let (a, b) = cfg.weights(k);
    let mean = k * (a * cfg.c_plus + b * cfg.c_minus) / (a + b);
    let disc = cfg.discriminant(k);
    let spread = k * disc.abs().sqrt() / (a + b);
    if disc >= 0.0 {
        ModeRoots {
            k,
            re_omega_1: mean - spread,
            re_omega_2: mean + spread,
            im_omega_max: 0.0,
        }
    } else {
        ModeRoots {
            k,
            re_omega_1: mean,
            re_omega_2: mean,
            im_omega_max: spread,
        }
    }
}

/// Growth rate in 1/s, zero for neutral modes.
pub fn mode_growth(k: f64, cfg: &ShearConfig) -> f64 {
    mode_roots(k, cfg).im_omega_max
}

/// Depths, in capillary lengths, of the exponent arbitration grid.
pub const ARBITRATION_DEPTHS: [f64; 3] = [0.5, 1.0, 2.0];

pub const DEFAULT_K_RANGE: (f64, f64) = (1e-3, 1e5);
const K_SCAN: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalShear {
    pub shear: f64,
    pub k_critical: f64,
}

/// Marginal shear `min_k (A+B) R / (A B)` over the range, and its wavenumber.
fn marginal_curve(cfg: &ShearConfig, k_range: (f64, f64)) -> (f64, f64) {
    let g = |k: f64| {
        let (a, b) = cfg.weights(k);
        -((a + b) * cfg.restoring(k) / (a * b))
    };
    let (k, v) = log_scan_max(g, k_range.0, k_range.1, K_SCAN);
    let ratio = (k_range.1 / k_range.0).powf(1.0 / (K_SCAN - 1) as f64);
    let (kr, vr) = golden_max(
        g,
        (k / ratio).max(k_range.0),
        (k * ratio).min(k_range.1),
        1e-12,
    );
    if vr > v {
        (kr, -vr)
    } else {
        (k, -v)
    }
}

/// Smallest shear for which some wavenumber in `k_range` grows, by bisection.
pub fn critical_shear(cfg: &ShearConfig, k_range: (f64, f64)) -> Result<CriticalShear> {
    cfg.validate()?;
    if !(k_range.0 > 0.0 && k_range.1 > k_range.0) {
        return Err(Error::InvalidArgument(format!(
            "bad wavenumber range {k_range:?}"
        )));
    }
    let unstable = |u: f64| {
        let c = cfg.with_shear(u);
        let (k, _) = marginal_curve(&c, k_range);
        let scan = (0..K_SCAN).any(|i| {
            let t = i as f64 / (K_SCAN - 1) as f64;
            c.discriminant(k_range.0 * (k_range.1 / k_range.0).powf(t)) < 0.0
        });
        scan || c.discriminant(k) < 0.0
    };
    let mut hi = 1e-3;
    while !unstable(hi) {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Bracket {
                lo: 0.0,
                hi,
                detail: "no unstable shear found; growth never changes sign".into(),
            });
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        if unstable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (k, _) = marginal_curve(&cfg.with_shear(hi), k_range);
    Ok(CriticalShear {
        shear: hi,
        k_critical: k,
    })
}

/// Threshold from the quartic criterion with a given flat constant.
pub fn kelvin_criterion_threshold(cfg: &ShearConfig, c0: f64) -> Result<f64> {
    cfg.validate()?;
    if cfg.rho_minus == 0.0 {
        return Ok(f64::INFINITY);
    }
    if cfg.surface_tension == 0.0 {
        return Ok(0.0);
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "flat constant must be positive, got {c0}"
        )));
    }
    let sum = cfg.rho_plus + cfg.rho_minus;
    let prod = cfg.rho_plus * cfg.rho_minus;
    let num = 4.0 * cfg.surface_tension * cfg.gravity * (cfg.rho_plus - cfg.rho_minus) * sum * sum;
    Ok((num / (prod * prod * c0)).powf(0.25))
}

/// Flat constant for the layer depths of `cfg`. Only the depth ratio and the
/// densities matter, so the depths are made dimensionless by the effective depth.
pub fn flat_constant_unsquared(cfg: &ShearConfig) -> f64 {
    let sum = cfg.rho_plus + cfg.rho_minus;
    let (rp, rm) = (cfg.rho_plus / sum, cfg.rho_minus / sum);
    let h = cfg.depth_plus * cfg.depth_minus / (rp * cfg.depth_minus + rm * cfg.depth_plus);
    c_flat(rp, rm, cfg.depth_plus / h, cfg.depth_minus / h).value
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentCandidate {
    Unsquared,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbitrationCell {
    /// Depths in units of the capillary length `sqrt(sigma / (g (rho+ - rho-)))`.
    pub depth_plus: f64,
    pub depth_minus: f64,
    pub dispersion_threshold: f64,
    pub c0_unsquared: f64,
    pub threshold_unsquared: f64,
    pub threshold_squared: f64,
    pub rel_err_unsquared: f64,
    pub rel_err_squared: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Arbitration {
    pub cells: Vec<ArbitrationCell>,
    pub tolerance: f64,
    pub unsquared_agrees: bool,
    pub squared_agrees: bool,
    /// Set only when exactly one candidate agrees in every cell.
    pub selected: Option<ExponentCandidate>,
}

/// Compares the dispersion threshold with both flat-constant candidates on a
/// grid of depths.
pub fn arbitrate_exponent(
    base: &ShearConfig,
    depths: &[f64],
    tolerance: f64,
) -> Result<Arbitration> {
    base.validate()?;
    if base.surface_tension <= 0.0 {
        return Err(Error::ZeroSurfaceTension);
    }
    let cap = (base.surface_tension / (base.gravity * (base.rho_plus - base.rho_minus))).sqrt();
    let mut cells = Vec::new();
    for &dp in depths {
        for &dm in depths {
            let cfg = ShearConfig {
                depth_plus: dp * cap,
                depth_minus: dm * cap,
                ..*base
            };
            let disp = critical_shear(&cfg, DEFAULT_K_RANGE)?.shear;
            let c0 = flat_constant_unsquared(&cfg);
            let tu = kelvin_criterion_threshold(&cfg, c0)?;
            let ts = kelvin_criterion_threshold(&cfg, c0 * c0)?;
            cells.push(ArbitrationCell {
                depth_plus: dp,
                depth_minus: dm,
                dispersion_threshold: disp,
                c0_unsquared: c0,
                threshold_unsquared: tu,
                threshold_squared: ts,
                rel_err_unsquared: (tu - disp).abs() / disp,
                rel_err_squared: (ts - disp).abs() / disp,
            });
        }
    }
    let unsquared_agrees = cells.iter().all(|c| c.rel_err_unsquared <= tolerance);
    let squared_agrees = cells.iter().all(|c| c.rel_err_squared <= tolerance);
    let selected = match (unsquared_agrees, squared_agrees) {
        (true, false) => Some(ExponentCandidate::Unsquared),
        (false, true) => Some(ExponentCandidate::Squared),
        _ => None,
    };
    Ok(Arbitration {
        cells,
        tolerance,
        unsquared_agrees,
        squared_agrees,
        selected,
    })
}

/// Plot-ready rows `(k, Re omega_1, Re omega_2, Im omega_max)` on a log grid.
pub fn dispersion_table(cfg: &ShearConfig, k_range: (f64, f64), n: usize) -> Vec<ModeRoots> {
    (0..n)
        .map(|i| {
            let t = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            mode_roots(k_range.0 * (k_range.1 / k_range.0).powf(t), cfg)
        })
        .collect()
}

pub fn write_dispersion_csv<W: std::io::Write>(rows: &[ModeRoots], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "re_omega_1", "re_omega_2", "im_omega_max"])?;
    for r in rows {
        w.serialize((r.k, r.re_omega_1, r.re_omega_2, r.im_omega_max))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn air_water(depth: f64) -> ShearConfig {
        ShearConfig {
            rho_plus: 1025.0,
            rho_minus: 1.2,
            depth_plus: depth,
            depth_minus: depth,
            c_plus: 0.0,
            c_minus: 0.0,
            surface_tension: 0.073,
            gravity: 9.81,
        }
    }

    #[test]
    fn no_shear_is_neutral() {
        let c = air_water(10.0);
        for k in [1e-2, 1.0, 370.0, 1e4] {
            assert_eq!(mode_growth(k, &c), 0.0);
        }
    }

    #[test]
    fn equal_density_always_grows() {
        let c = ShearConfig {
            rho_minus: 1025.0,
            surface_tension: 0.0,
            c_plus: 0.3,
            ..air_water(5.0)
        };
        for k in [1e-3, 0.1, 10.0, 1e4] {
            assert!(mode_growth(k, &c) > 0.0);
        }
    }

    #[test]
    fn deep_threshold_closed_form() {
        let c = air_water(1e3);
        let (rp, rm, s, g) = (c.rho_plus, c.rho_minus, c.surface_tension, c.gravity);
        let exact = (4.0 * s * g * (rp - rm) * (rp + rm).powi(2) / (rp * rm).powi(2)).powf(0.25);
        let crit = critical_shear(&c, DEFAULT_K_RANGE).unwrap();
        assert!(
            (crit.shear - exact).abs() / exact < 1e-5,
            "{} {exact}",
            crit.shear
        );
        let kstar = (g * (rp - rm) / s).sqrt();
        assert!((crit.k_critical - kstar).abs() / kstar < 1e-3);
        // double root at the marginal mode
        let at = c.with_shear(exact);
        let (a, b) = at.weights(kstar);
        assert!(at.discriminant(kstar).abs() < 1e-9 * (a + b) * at.restoring(kstar));
        assert!((exact - 6.7).abs() < 0.1);
    }

    #[test]
    fn quartic_root_scaling() {
        let c = air_water(1e3);
        let t1 = kelvin_criterion_threshold(&c, 1.0).unwrap();
        let t2 = kelvin_criterion_threshold(&c, 2.0).unwrap();
        assert!((t2 / t1 - 2f64.powf(-0.25)).abs() < 1e-14);
        let dry = ShearConfig {
            rho_minus: 0.0,
            ..c
        };
        assert_eq!(
            kelvin_criterion_threshold(&dry, 1.0).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn galilean_and_reflection() {
        let c = ShearConfig {
            c_plus: 7.3,
            c_minus: 0.2,
            ..air_water(0.01)
        };
        let shifted = ShearConfig {
            c_plus: 7.3 + 40.0,
            c_minus: 40.2,
            ..c
        };
        let flipped = ShearConfig {
            c_plus: 0.2,
            c_minus: 7.3,
            ..c
        };
        for k in [50.0, 370.0, 2000.0] {
            let g = mode_growth(k, &c);
            assert!((mode_growth(k, &shifted) - g).abs() <= 1e-12 * g.max(1.0));
            assert!((mode_growth(k, &flipped) - g).abs() <= 1e-12 * g.max(1.0));
        }
    }

    #[test]
    fn csv_header() {
        let rows = dispersion_table(&air_water(1.0), (1.0, 10.0), 3);
        let mut buf = Vec::new();
        write_dispersion_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,re_omega_1,re_omega_2,im_omega_max\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
