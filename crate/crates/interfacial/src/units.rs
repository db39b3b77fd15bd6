//! Dimensional configurations and their dimensionless counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensional description of a two-layer configuration, SI units.
///
/// The `plus` layer is the lower, heavier fluid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub depth_plus: f64,
    pub depth_minus: f64,
    pub amplitude: f64,
    pub wavelength: f64,
    pub surface_tension: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

pub(crate) fn default_gravity() -> f64 {
    9.81
}

impl PhysicalConfig {
    pub fn validate(&self) -> Result<()> {
        self.validate_fluids()?;
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "wavelength must be positive, got {}",
                self.wavelength
            )));
        }
        Ok(())
    }

    /// Checks everything except the wavelength, which only enters the Bond number.
    fn validate_fluids(&self) -> Result<()> {
        let all = [
            self.rho_plus,
            self.rho_minus,
            self.depth_plus,
            self.depth_minus,
            self.amplitude,
            self.wavelength,
            self.surface_tension,
            self.gravity,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite physical parameter".into()));
        }
        if !(self.rho_minus >= 0.0 && self.rho_plus > self.rho_minus) {
            return Err(Error::InvalidConfig(format!(
                "densities must satisfy rho_plus > rho_minus >= 0, got {} and {}",
                self.rho_plus, self.rho_minus
            )));
        }
        if !(self.depth_plus > 0.0 && self.depth_minus > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "layer depths must be positive, got {} and {}",
                self.depth_plus, self.depth_minus
            )));
        }
        if !(self.gravity > 0.0) {
            return Err(Error::InvalidConfig("gravity must be positive".into()));
        }
        if self.amplitude < 0.0 || self.surface_tension < 0.0 || self.wavelength < 0.0 {
            return Err(Error::InvalidConfig(
                "amplitude, wavelength and surface tension must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn density_sum(&self) -> f64 {
        self.rho_plus + self.rho_minus
    }

    pub fn rhobar_plus(&self) -> f64 {
        self.rho_plus / self.density_sum()
    }

    pub fn rhobar_minus(&self) -> f64 {
        self.rho_minus / self.density_sum()
    }

    pub fn reduced_gravity(&self) -> f64 {
        (self.rhobar_plus() - self.rhobar_minus()) * self.gravity
    }

    /// Effective depth `H+ H- / (rhobar+ H- + rhobar- H+)`.
    pub fn effective_depth(&self) -> f64 {
        let (hp, hm) = (self.depth_plus, self.depth_minus);
        hp * hm / (self.rhobar_plus() * hm + self.rhobar_minus() * hp)
    }

    pub fn with_surface_tension(mut self, sigma: f64) -> Self {
        self.surface_tension = sigma;
        self
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude = a;
        self
    }
}

/// Dimensionless parameter set. Infinite `bond` encodes zero surface tension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub rhobar_plus: f64,
    pub rhobar_minus: f64,
    pub eps: f64,
    pub mu: f64,
    pub eps_plus: f64,
    pub eps_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub hbar_plus: f64,
    pub hbar_minus: f64,
    #[serde(with = "crate::serde_ext")]
    pub bond: f64,
    pub g_reduced: f64,
    pub h_eff: f64,
    pub wave_speed: f64,
    #[serde(with = "crate::serde_ext")]
    pub upsilon: f64,
}

/// The five numbers that fix a dimensionless configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NondimInputs {
    pub rhobar_plus: f64,
    /// Ratio `H- / H+` of the upper to the lower layer depth.
    pub depth_ratio: f64,
    pub eps: f64,
    pub mu: f64,
    #[serde(with = "crate::serde_ext")]
    pub bond: f64,
}

impl DimensionlessParams {
    /// Builds the parameter set directly in dimensionless variables, with
    /// `g' = H = c = 1`.
    pub fn from_nondim(inp: &NondimInputs) -> Result<Self> {
        let NondimInputs {
            rhobar_plus,
            depth_ratio,
            eps,
            mu,
            bond,
        } = *inp;
        if !(rhobar_plus > 0.5 && rhobar_plus <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "rhobar_plus must lie in (0.5, 1], got {rhobar_plus}"
            )));
        }
        if !(depth_ratio > 0.0 && depth_ratio.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "depth_ratio must be positive, got {depth_ratio}"
            )));
        }
        if !(eps >= 0.0 && eps.is_finite() && mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need eps >= 0 and mu > 0, got eps = {eps}, mu = {mu}"
            )));
        }
        if !(bond > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bond must be positive, got {bond}"
            )));
        }
        let rhobar_minus = 1.0 - rhobar_plus;
        let hbar_plus = rhobar_plus + rhobar_minus / depth_ratio;
        let hbar_minus = rhobar_plus * depth_ratio + rhobar_minus;
        let rr = rhobar_plus * rhobar_minus;
        let upsilon = if rr == 0.0 || eps == 0.0 {
            0.0
        } else {
            rr * rr * eps.powi(4) * mu * bond / 4.0
        };
        Ok(Self {
            rhobar_plus,
            rhobar_minus,
            eps,
            mu,
            eps_plus: eps / hbar_plus,
            eps_minus: eps / hbar_minus,
            mu_plus: mu * hbar_plus * hbar_plus,
            mu_minus: mu * hbar_minus * hbar_minus,
            hbar_plus,
            hbar_minus,
            bond,
            g_reduced: 1.0,
            h_eff: 1.0,
            wave_speed: 1.0,
            upsilon,
        })
    }

    pub fn nondim_inputs(&self) -> NondimInputs {
        NondimInputs {
            rhobar_plus: self.rhobar_plus,
            depth_ratio: self.hbar_minus / self.hbar_plus,
            eps: self.eps,
            mu: self.mu,
            bond: self.bond,
        }
    }

    /// Same configuration with a different amplitude parameter.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut inp = self.nondim_inputs();
        inp.eps = eps;
        let mut out = Self::from_nondim(&inp)?;
        out.restore_scales(self);
        Ok(out)
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        let mut inp = self.nondim_inputs();
        inp.mu = mu;
        let mut out = Self::from_nondim(&inp)?;
        out.restore_scales(self);
        Ok(out)
    }

    pub fn with_bond(&self, bond: f64) -> Result<Self> {
        let mut inp = self.nondim_inputs();
        inp.bond = bond;
        let mut out = Self::from_nondim(&inp)?;
        out.restore_scales(self);
        Ok(out)
    }

    fn restore_scales(&mut self, from: &Self) {
        self.g_reduced = from.g_reduced;
        self.h_eff = from.h_eff;
        self.wave_speed = from.wave_speed;
    }

    /// `1 / Bo`, zero for infinite Bond number.
    pub fn inv_bond(&self) -> f64 {
        if self.bond.is_infinite() {
            0.0
        } else {
            1.0 / self.bond
        }
    }

    /// `eps^-2 * upsilon`, the quantity used by the strong criterion with unit exponent.
    pub fn upsilon_strong(&self, gamma: f64) -> f64 {
        if self.upsilon == 0.0 {
            0.0
        } else {
            self.eps.powf(-2.0 * gamma) * self.upsilon
        }
    }
}

pub fn derive_params(cfg: &PhysicalConfig) -> Result<DimensionlessParams> {
    cfg.validate()?;
    let h = cfg.effective_depth();
    let eps = cfg.amplitude / h;
    let mu = h * h / (cfg.wavelength * cfg.wavelength);
    let hbar_plus = cfg.depth_plus / h;
    let hbar_minus = cfg.depth_minus / h;
    let g_reduced = cfg.reduced_gravity();
    let bond = bond_number(cfg)?;
    let upsilon = if cfg.surface_tension > 0.0 {
        upsilon(cfg)?
    } else if cfg.rho_minus == 0.0 || cfg.amplitude == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(DimensionlessParams {
        rhobar_plus: cfg.rhobar_plus(),
        rhobar_minus: cfg.rhobar_minus(),
        eps,
        mu,
        eps_plus: cfg.amplitude / cfg.depth_plus,
        eps_minus: cfg.amplitude / cfg.depth_minus,
        mu_plus: mu * hbar_plus * hbar_plus,
        mu_minus: mu * hbar_minus * hbar_minus,
        hbar_plus,
        hbar_minus,
        bond,
        g_reduced,
        h_eff: h,
        wave_speed: (g_reduced * h).sqrt(),
        upsilon,
    })
}

/// The practical stability parameter. Zero surface tension is rejected.
pub fn upsilon(cfg: &PhysicalConfig) -> Result<f64> {
    cfg.validate_fluids()?;
    if cfg.surface_tension == 0.0 {
        return Err(Error::ZeroSurfaceTension);
    }
    Ok(upsilon_numerator(cfg) / cfg.surface_tension)
}

/// `upsilon * sigma`, independent of the surface tension.
fn upsilon_numerator(cfg: &PhysicalConfig) -> f64 {
    let rr = cfg.rhobar_plus() * cfg.rhobar_minus();
    let h = cfg.effective_depth();
    rr * rr * cfg.amplitude.powi(4) / (h * h) * cfg.density_sum() * cfg.reduced_gravity() / 4.0
}

/// Surface tension giving the requested `upsilon`; the config's own tension is ignored.
pub fn sigma_for_upsilon(cfg: &PhysicalConfig, target_upsilon: f64) -> Result<f64> {
    if !(target_upsilon > 0.0) || !target_upsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "target upsilon must be positive and finite, got {target_upsilon}"
        )));
    }
    cfg.validate_fluids()?;
    Ok(upsilon_numerator(cfg) / target_upsilon)
}

/// Bond number; `f64::INFINITY` when the surface tension vanishes.
pub fn bond_number(cfg: &PhysicalConfig) -> Result<f64> {
    cfg.validate_fluids()?;
    let num = cfg.density_sum() * cfg.reduced_gravity() * cfg.wavelength * cfg.wavelength;
    if cfg.surface_tension == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(num / cfg.surface_tension)
}

/// Typical size of the velocity jump, `(a/H) sqrt(g' H)`.
pub fn shear_scale(cfg: &PhysicalConfig) -> Result<f64> {
    cfg.validate_fluids()?;
    let h = cfg.effective_depth();
    Ok(cfg.amplitude / h * (cfg.reduced_gravity() * h).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PracticalVerdict {
    Stable,
    Critical,
    Unstable,
}

pub const VERDICT_LO: f64 = 0.1;
pub const VERDICT_HI: f64 = 10.0;

pub fn practical_verdict(upsilon: f64, lo: f64, hi: f64) -> Result<PracticalVerdict> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "verdict band needs 0 < lo < hi, got lo = {lo}, hi = {hi}"
        )));
    }
    Ok(if upsilon < lo {
        PracticalVerdict::Stable
    } else if upsilon > hi {
        PracticalVerdict::Unstable
    } else {
        PracticalVerdict::Critical
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn air_water(a: f64, h: f64, lambda: f64) -> PhysicalConfig {
        PhysicalConfig {
            rho_plus: 1025.0,
            rho_minus: 1.2,
            depth_plus: h,
            depth_minus: h,
            amplitude: a,
            wavelength: lambda,
            surface_tension: 0.073,
            gravity: 9.81,
        }
    }

    fn grue() -> PhysicalConfig {
        PhysicalConfig {
            rho_plus: 1022.0,
            rho_minus: 999.0,
            depth_plus: 0.62,
            depth_minus: 0.15,
            amplitude: 0.2,
            wavelength: 1.0,
            surface_tension: 0.095,
            gravity: 9.81,
        }
    }

    #[test]
    fn equal_depths_give_that_depth() {
        let cfg = air_water(0.1, 7.5, 35.0);
        assert!((cfg.effective_depth() - 7.5).abs() < 1e-12);
    }

    #[test]
    fn grue_densities_and_depth() {
        let p = derive_params(&grue()).unwrap();
        assert!((p.rhobar_plus - 0.506).abs() < 5e-4);
        assert!((p.rhobar_minus - 0.494).abs() < 5e-4);
        assert!((p.h_eff - 0.243).abs() < 1e-3);
    }

    #[test]
    fn koop_butler_depth() {
        let cfg = PhysicalConfig {
            rho_plus: 1563.0,
            rho_minus: 998.0,
            depth_plus: 1.366e-2,
            depth_minus: 6.948e-2,
            amplitude: 0.68e-2,
            wavelength: 1.0,
            surface_tension: 0.005,
            gravity: 9.81,
        };
        assert!((cfg.rhobar_plus() - 0.610).abs() < 5e-4);
        assert!((cfg.effective_depth() * 100.0 - 1.989).abs() < 1e-3);
    }

    #[test]
    fn breaking_wave_upsilon() {
        let u = upsilon(&air_water(6.0, 15.0, 100.0)).unwrap();
        assert!((u / 0.27 - 1.0).abs() < 0.05, "{u}");
    }

    #[test]
    fn zero_amplitude_zero_upsilon() {
        assert_eq!(upsilon(&air_water(0.0, 15.0, 100.0)).unwrap(), 0.0);
    }

    #[test]
    fn zero_tension_is_an_error_for_upsilon_but_not_bond() {
        let cfg = air_water(1.0, 5.0, 35.0).with_surface_tension(0.0);
        assert!(matches!(upsilon(&cfg), Err(Error::ZeroSurfaceTension)));
        assert!(bond_number(&cfg).unwrap().is_infinite());
        assert!(derive_params(&cfg).unwrap().bond.is_infinite());
    }

    #[test]
    fn bond_scaling() {
        let cfg = air_water(0.1, 5.0, 35.0);
        let b = bond_number(&cfg).unwrap();
        let b2 = bond_number(&cfg.with_surface_tension(0.146)).unwrap();
        assert!((b / b2 - 2.0).abs() < 1e-12);
        let mut flat = cfg;
        flat.wavelength = 0.0;
        assert_eq!(bond_number(&flat).unwrap(), 0.0);
        assert!(derive_params(&flat).is_err());
    }

    #[test]
    fn long_wave_bond() {
        let b = bond_number(&air_water(0.1, 5.0, 35.0)).unwrap();
        assert!((b / 1.7e8 - 1.0).abs() < 0.1, "{b}");
    }

    #[test]
    fn grue_sigma_inference() {
        let s = sigma_for_upsilon(&grue(), 1.0).unwrap();
        assert!((s - 0.095).abs() < 1e-3, "{s}");
        assert!(sigma_for_upsilon(&grue(), 0.0).is_err());
        assert!(
            sigma_for_upsilon(&grue(), 1e6).unwrap() < sigma_for_upsilon(&grue(), 1e3).unwrap()
        );
    }

    #[test]
    fn shear_scale_matches_direct_expression() {
        let cfg = grue();
        let h = cfg.effective_depth();
        let gp = (cfg.rho_plus - cfg.rho_minus) / (cfg.rho_plus + cfg.rho_minus) * cfg.gravity;
        let expected = 0.2 / h * (gp * h).sqrt();
        assert!((shear_scale(&cfg).unwrap() - expected).abs() < 1e-14);
        assert_eq!(shear_scale(&cfg.with_amplitude(0.0)).unwrap(), 0.0);
        let doubled = shear_scale(&cfg.with_amplitude(0.4)).unwrap();
        assert!((doubled - 2.0 * expected).abs() < 1e-14);
    }

    #[test]
    fn verdict_bands() {
        let v = |u| practical_verdict(u, VERDICT_LO, VERDICT_HI).unwrap();
        assert_eq!(v(4e-4), PracticalVerdict::Stable);
        assert_eq!(v(0.27), PracticalVerdict::Critical);
        assert_eq!(v(100.0), PracticalVerdict::Unstable);
        assert!(practical_verdict(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn nondim_constructor_is_consistent_with_physical_path() {
        let cfg = grue();
        let p = derive_params(&cfg).unwrap();
        let q = DimensionlessParams::from_nondim(&p.nondim_inputs()).unwrap();
        for (a, b) in [
            (p.hbar_plus, q.hbar_plus),
            (p.hbar_minus, q.hbar_minus),
            (p.eps_plus, q.eps_plus),
            (p.mu_minus, q.mu_minus),
        ] {
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
        assert!((p.upsilon / q.upsilon - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = grue();
        cfg.depth_plus = 0.0;
        assert!(matches!(derive_params(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = grue();
        cfg.rho_minus = 1100.0;
        assert!(derive_params(&cfg).is_err());
    }
}
