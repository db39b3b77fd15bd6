//! Stability constants, the criteria and their margins, the instability
//! quadratic form and the mode-wise margin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{golden_max, lanczos_max, log_scan_max};
use crate::spectral::PeriodicGrid;
use crate::two_fluid::{InterfaceState, TraceBundle, TwoFluidOps};
use crate::units::{DimensionlessParams, PhysicalConfig};

fn flat_quotient(rp: f64, rm: f64, hp: f64, hm: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0 / (rm * hp + rp * hm);
    }
    x / ((1.0 + x) * (rm * (hp * x).tanh() + rp * (hm * x).tanh()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CFlat {
    pub value: f64,
    /// `None` when the supremum is the `x -> infinity` limit.
    pub argmax: Option<f64>,
}

/// Flat-interface constant `sup_x x / ((1+x)(rho- tanh(H+ x) + rho+ tanh(H- x)))`.
pub fn c_flat(rhobar_plus: f64, rhobar_minus: f64, hbar_plus: f64, hbar_minus: f64) -> CFlat {
    let f = |x: f64| flat_quotient(rhobar_plus, rhobar_minus, hbar_plus, hbar_minus, x);
    let limit = 1.0 / (rhobar_plus + rhobar_minus);
    let (x, v) = log_scan_max(f, 1e-4, 1e4, 400);
    let v0 = f(0.0);
    if v0 >= v && v0 > limit {
        return CFlat {
            value: v0,
            argmax: Some(0.0),
        };
    }
    if v <= limit || x >= 1e4 * (1.0 - 1e-9) {
        CFlat {
            value: limit.max(v),
            argmax: None,
        }
    } else {
        CFlat {
            value: v,
            argmax: Some(x),
        }
    }
}

pub fn c_flat_params(p: &DimensionlessParams) -> CFlat {
    c_flat(p.rhobar_plus, p.rhobar_minus, p.hbar_plus, p.hbar_minus)
}

/// Flat-interface value of the `E` constant restricted to the grid's resolved modes.
pub fn e_flat_discrete(p: &DimensionlessParams, grid: &PeriodicGrid) -> f64 {
    let sm = p.mu.sqrt();
    (1..grid.len() / 2)
        .map(|j| {
            flat_quotient(
                p.rhobar_plus,
                p.rhobar_minus,
                p.hbar_plus,
                p.hbar_minus,
                sm * grid.wavenumber(j),
            )
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ECoeffMethod {
    FlatClosedForm,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ECoeff {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub method: ECoeffMethod,
}

/// Largest value of `mu (Gt^{-1} V_x, V_x) / |(1 + sqrt(mu)|D|)^{1/2} V|^2`.
pub fn e_coeff(ops: &TwoFluidOps) -> Result<ECoeff> {
    let flat = ops.params().eps == 0.0 || ops.zeta().iter().all(|v| *v == 0.0);
    if flat {
        return Ok(ECoeff {
            value: e_flat_discrete(ops.params(), ops.grid()),
            converged: true,
            iterations: 0,
            method: ECoeffMethod::FlatClosedForm,
        });
    }
    e_coeff_lanczos(ops)
}

/// Iterative estimate, used for curved interfaces and as a cross-check on flat ones.
pub fn e_coeff_lanczos(ops: &TwoFluidOps) -> Result<ECoeff> {
    let grid = ops.grid();
    let mu = ops.params().mu;
    let sm = mu.sqrt();
    let half_inv =
        |u: &[f64]| grid.apply_multiplier_no_nyquist(|k| (1.0 + sm * k.abs()).powf(-0.5), u);
    let apply = |w: &[f64]| -> Result<Vec<f64>> {
        let v = half_inv(w)?;
        let e = ops.apply_e(&v)?;
        let out = half_inv(&e)?;
        Ok(out.into_iter().map(|x| mu * x).collect())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let modes: Vec<(f64, f64, f64)> = (1..grid.len() / 2)
        .map(|j| {
            let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            (grid.wavenumber(j), ph.cos(), ph.sin())
        })
        .collect();
    let start = grid.project_range(&grid.trig_field(&modes));
    let cap = 500.min(grid.len());
    let out = lanczos_max(apply, &start, 1e-8, cap)?;
    Ok(ECoeff {
        value: out.value,
        converged: out.converged,
        iterations: out.iterations,
        method: ECoeffMethod::Lanczos,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AField {
    pub values: Vec<f64>,
    pub inf: f64,
    /// False when no neighbouring time level was available.
    pub has_time_derivative: bool,
}

fn time_derivative(
    now: &[f64],
    prev: Option<&[f64]>,
    next: Option<&[f64]>,
    dt: f64,
) -> Option<Vec<f64>> {
    match (prev, next) {
        (Some(p), Some(n)) => Some(n.iter().zip(p).map(|(a, b)| (a - b) / (2.0 * dt)).collect()),
        (None, Some(n)) => Some(n.iter().zip(now).map(|(a, b)| (a - b) / dt).collect()),
        (Some(p), None) => Some(now.iter().zip(p).map(|(a, b)| (a - b) / dt).collect()),
        (None, None) => None,
    }
}

fn check_bundle(grid: &PeriodicGrid, t: &TraceBundle) -> Result<()> {
    if t.w_plus.len() != grid.len() || t.v_plus.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "trace bundle has {} samples, grid has {}",
            t.w_plus.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// `a = 1 + eps [[ rho (d/dt + eps V d/dx) w ]]` with centered time differences.
pub fn a_field(
    grid: &PeriodicGrid,
    params: &DimensionlessParams,
    now: &TraceBundle,
    prev: Option<&TraceBundle>,
    next: Option<&TraceBundle>,
    dt: f64,
) -> Result<AField> {
    for t in [Some(now), prev, next].into_iter().flatten() {
        check_bundle(grid, t)?;
    }
    if (prev.is_some() || next.is_some()) && !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let eps = params.eps;
    let wt_p = time_derivative(
        &now.w_plus,
        prev.map(|t| &t.w_plus[..]),
        next.map(|t| &t.w_plus[..]),
        dt,
    );
    let wt_m = time_derivative(
        &now.w_minus,
        prev.map(|t| &t.w_minus[..]),
        next.map(|t| &t.w_minus[..]),
        dt,
    );
    let has_time = wt_p.is_some();
    let wx_p = grid.derivative(&now.w_plus);
    let wx_m = grid.derivative(&now.w_minus);
    let values: Vec<f64> = (0..grid.len())
        .map(|i| {
            let tp = wt_p.as_ref().map_or(0.0, |v| v[i]);
            let tm = wt_m.as_ref().map_or(0.0, |v| v[i]);
            let dp = tp + eps * now.v_plus[i] * wx_p[i];
            let dm = tm + eps * now.v_minus[i] * wx_m[i];
            1.0 + eps * (params.rhobar_plus * dp - params.rhobar_minus * dm)
        })
        .collect();
    let inf = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AField {
        values,
        inf,
        has_time_derivative: has_time,
    })
}

/// Ingredients of the criteria at one time.
#[derive(Debug, Clone)]
pub struct StabilityInputs {
    pub params: DimensionlessParams,
    /// `sup |zeta_x|`.
    pub slope_sup: f64,
    pub jump_v: Vec<f64>,
    pub djump_x: Vec<f64>,
    pub djump_t: Option<Vec<f64>>,
    pub a_field: Vec<f64>,
    pub gamma: f64,
}

impl StabilityInputs {
    /// Assembles inputs from the trace bundles at consecutive times.
    pub fn from_traces(
        state: &InterfaceState,
        now: &TraceBundle,
        prev: Option<&TraceBundle>,
        next: Option<&TraceBundle>,
        dt: f64,
        gamma: f64,
    ) -> Result<Self> {
        let grid = &state.grid;
        let a = a_field(grid, &state.params, now, prev, next, dt)?;
        let jump = now.jump_v();
        let djump_t = time_derivative(
            &jump,
            prev.map(|t| t.jump_v()).as_deref(),
            next.map(|t| t.jump_v()).as_deref(),
            dt,
        );
        Ok(Self {
            params: state.params,
            slope_sup: sup_abs(&grid.derivative(&state.zeta)),
            djump_x: grid.derivative(&jump),
            jump_v: jump,
            djump_t,
            a_field: a.values,
            gamma,
        })
    }

    /// Flat interface with a uniform velocity jump and uniform `a`.
    pub fn uniform(params: &DimensionlessParams, n: usize, jump: f64, a: f64, gamma: f64) -> Self {
        Self {
            params: *params,
            slope_sup: 0.0,
            jump_v: vec![jump; n],
            djump_x: vec![0.0; n],
            djump_t: Some(vec![0.0; n]),
            a_field: vec![a; n],
            gamma,
        }
    }
}

fn sup_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalCheck {
    /// `(rho+ + rho-) g' inf a`, Pa per metre.
    pub pressure_gradient_jump: f64,
    /// `(rho+ rho-)^2 / (4 sigma (rho+ + rho-)^2) c |omega|^4`.
    pub shear_term: f64,
    pub holds: bool,
}

/// One criterion written as `lhs < rhs`, with `rhs = inf a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback_to_alt: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensional: Option<DimensionalCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionVerdict {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    #[serde(with = "crate::serde_ext")]
    pub upsilon: f64,
    pub c_coeff: f64,
    pub c_coeff_unsquared: f64,
    pub e_coeff: f64,
    pub inf_a: f64,
    pub jump_sup: f64,
    pub jump_sup_d1: f64,
    pub sc: CriterionOutcome,
    pub sc_alt: CriterionOutcome,
    pub sc_strong: CriterionOutcome,
    #[serde(with = "crate::serde_ext")]
    pub margin_d: f64,
    #[serde(with = "crate::serde_ext")]
    pub margin_d_alt: f64,
    pub verdict: CriterionVerdict,
}

/// Geometric factor `(1 + eps^2 mu |zeta_x|^2)^{3/2}`.
pub fn slope_factor(p: &DimensionlessParams, slope_sup: f64) -> f64 {
    (1.0 + p.eps * p.eps * p.mu * slope_sup * slope_sup).powf(1.5)
}

fn shear_product(upsilon: f64, c: f64, jump: f64) -> f64 {
    if upsilon == 0.0 || jump == 0.0 {
        0.0
    } else {
        upsilon * c * jump.powi(4)
    }
}

/// Dimensional form of the alternative criterion. `phys` must describe the
/// same configuration as `inputs.params`.
pub fn dimensional_check(
    phys: &PhysicalConfig,
    inf_a: f64,
    c_coeff: f64,
    jump_sup: f64,
    eps: f64,
    wave_speed: f64,
) -> DimensionalCheck {
    let lhs = phys.density_sum() * phys.reduced_gravity() * inf_a;
    let omega = eps * wave_speed * jump_sup;
    let rr = phys.rho_plus * phys.rho_minus;
    let rhs = if rr == 0.0 || omega == 0.0 {
        0.0
    } else {
        rr * rr / (4.0 * phys.surface_tension * phys.density_sum().powi(2))
            * c_coeff
            * omega.powi(4)
    };
    DimensionalCheck {
        pressure_gradient_jump: lhs,
        shear_term: rhs,
        holds: rhs < lhs,
    }
}

pub fn evaluate_criteria(
    inputs: &StabilityInputs,
    e: &ECoeff,
    phys: Option<&PhysicalConfig>,
) -> StabilityReport {
    let p = &inputs.params;
    let geo = slope_factor(p, inputs.slope_sup);
    let c = e.value * e.value * geo;
    let inf_a = inputs.a_field.iter().copied().fold(f64::INFINITY, f64::min);
    let jump_sup = sup_abs(&inputs.jump_v);
    let mut jump_d1 = jump_sup.max(sup_abs(&inputs.djump_x));
    if let Some(t) = &inputs.djump_t {
        jump_d1 = jump_d1.max(sup_abs(t));
    }
    let missing_time = inputs.djump_t.is_none();
    let upsilon = p.upsilon;

    let alt_lhs = shear_product(upsilon, c, jump_sup);
    let mut sc_alt = CriterionOutcome {
        lhs: alt_lhs,
        rhs: inf_a,
        holds: alt_lhs < inf_a,
        fallback_to_alt: false,
        gamma: None,
        dimensional: None,
    };
    if let Some(phys) = phys {
        sc_alt.dimensional = Some(dimensional_check(
            phys,
            inf_a,
            c,
            jump_sup,
            p.eps,
            p.wave_speed,
        ));
    }
    let sc = if missing_time {
        CriterionOutcome {
            fallback_to_alt: true,
            dimensional: None,
            ..sc_alt
        }
    } else {
        let lhs = shear_product(upsilon, c, jump_d1);
        CriterionOutcome {
            lhs,
            rhs: inf_a,
            holds: lhs < inf_a,
            fallback_to_alt: false,
            gamma: None,
            dimensional: None,
        }
    };
    let strong_lhs = shear_product(p.upsilon_strong(inputs.gamma), c, jump_d1);
    let sc_strong = CriterionOutcome {
        lhs: strong_lhs,
        rhs: inf_a,
        holds: strong_lhs < inf_a,
        fallback_to_alt: missing_time,
        gamma: Some(inputs.gamma),
        dimensional: None,
    };
    StabilityReport {
        upsilon,
        c_coeff: c,
        c_coeff_unsquared: e.value * geo,
        e_coeff: e.value,
        inf_a,
        jump_sup,
        jump_sup_d1: jump_d1,
        margin_d: inf_a - shear_product(upsilon, c, jump_d1),
        margin_d_alt: inf_a - alt_lhs,
        verdict: if sc.holds {
            CriterionVerdict::Stable
        } else {
            CriterionVerdict::Unstable
        },
        sc,
        sc_alt,
        sc_strong,
    }
}

/// `(Ins u, u)` for the instability operator at fixed `a` and jump fields.
pub fn ins_form(ops: &TwoFluidOps, u: &[f64], a_field: &[f64], jump_v: &[f64]) -> Result<f64> {
    let grid = ops.grid();
    let p = ops.params();
    let n = grid.len();
    if u.len() != n || a_field.len() != n || jump_v.len() != n {
        return Err(Error::GridMismatch(
            "ins_form fields must share the grid".into(),
        ));
    }
    let au: Vec<f64> = a_field.iter().zip(u).map(|(a, v)| a * v).collect();
    let mut total = grid.inner(&au, u);
    if p.rhobar_minus > 0.0 && p.eps > 0.0 {
        let uj: Vec<f64> = u.iter().zip(jump_v).map(|(a, b)| a * b).collect();
        let e = ops.apply_e(&uj)?;
        total -= p.eps * p.eps * p.mu * p.rhobar_plus * p.rhobar_minus * grid.inner(&e, &uj);
    }
    let ib = p.inv_bond();
    if ib > 0.0 {
        let ux = grid.derivative(u);
        let em = p.eps * p.eps * p.mu;
        let k: Vec<f64> = ops
            .zeta_x()
            .iter()
            .zip(&ux)
            .map(|(zx, d)| d * (1.0 + em * zx * zx).powf(-1.5))
            .collect();
        total += ib * grid.inner(&k, &ux);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModewiseMargin {
    #[serde(with = "crate::serde_ext")]
    pub minimum: f64,
    #[serde(with = "crate::serde_ext")]
    pub argmin: f64,
    pub unbounded_below: bool,
}

/// Minimum over `xi >= 0` of `A(xi) / (1 + xi^2/Bo)` with
/// `A(xi) = inf a - sqrt(mu) eps^2 rho+ rho- e J^2 xi + xi^2 / (Bo q)`,
/// `q` the slope factor.
pub fn modewise_margin(
    params: &DimensionlessParams,
    inf_a: f64,
    jump_sup: f64,
    e_coeff: f64,
    slope_sup: f64,
) -> ModewiseMargin {
    let p = params;
    let shear = p.eps * p.eps * p.rhobar_plus * p.rhobar_minus * e_coeff * jump_sup * jump_sup;
    let lin = p.mu.sqrt() * shear;
    let ib = p.inv_bond();
    if ib == 0.0 {
        return if lin > 0.0 {
            ModewiseMargin {
                minimum: f64::NEG_INFINITY,
                argmin: f64::INFINITY,
                unbounded_below: true,
            }
        } else {
            ModewiseMargin {
                minimum: inf_a,
                argmin: 0.0,
                unbounded_below: false,
            }
        };
    }
    let q = slope_factor(p, slope_sup);
    let f = |xi: f64| (inf_a - lin * xi + ib * xi * xi / q) / (1.0 + ib * xi * xi);
    if lin == 0.0 {
        return ModewiseMargin {
            minimum: f(0.0).min(inf_a.min(1.0 / q)),
            argmin: if inf_a <= 1.0 / q { 0.0 } else { f64::INFINITY },
            unbounded_below: false,
        };
    }
    // The quadratic's vertex sets the scale of the search.
    let centre = lin * q / (2.0 * ib);
    let neg = |xi: f64| -f(xi);
    let (x, v) = log_scan_max(neg, centre * 1e-6, centre * 1e6, 2000);
    let (xr, vr) = golden_max(neg, x * 0.9, x * 1.1, 1e-14);
    let (mut best_x, mut best) = if vr > v { (xr, -vr) } else { (x, -v) };
    if f(0.0) < best {
        best = f(0.0);
        best_x = 0.0;
    }
    let tail = 1.0 / q;
    if tail < best {
        best = tail;
        best_x = f64::INFINITY;
    }
    ModewiseMargin {
        minimum: best,
        argmin: best_x,
        unbounded_below: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strip::StripOptions;
    use crate::units::NondimInputs;

    fn params(rho: f64, ratio: f64, eps: f64, mu: f64, bond: f64) -> DimensionlessParams {
        DimensionlessParams::from_nondim(&NondimInputs {
            rhobar_plus: rho,
            depth_ratio: ratio,
            eps,
            mu,
            bond,
        })
        .unwrap()
    }

    #[test]
    fn deep_flat_constant_is_one() {
        let c = c_flat(0.6, 0.4, 1e3, 1e3);
        assert!((c.value - 1.0).abs() < 1e-3);
        assert_eq!(c.argmax, None);
    }

    #[test]
    fn symmetric_unit_depth_approaches_limit() {
        let c = c_flat(0.5, 0.5, 1.0, 1.0);
        assert!((c.value - 1.0).abs() < 1e-12);
        assert_eq!(c.argmax, None);
        let q = |x: f64| flat_quotient(0.5, 0.5, 1.0, 1.0, x);
        assert!(q(1.0) < q(10.0) && q(10.0) < q(100.0) && q(100.0) < 1.0);
    }

    #[test]
    fn rest_state_is_stable() {
        let p = params(0.6, 1.0, 0.1, 0.5, 10.0);
        let inputs = StabilityInputs::uniform(&p, 16, 0.0, 1.0, 0.5);
        let e = ECoeff {
            value: 0.8,
            converged: true,
            iterations: 0,
            method: ECoeffMethod::FlatClosedForm,
        };
        let r = evaluate_criteria(&inputs, &e, None);
        assert_eq!(r.margin_d, 1.0);
        assert_eq!(r.verdict, CriterionVerdict::Stable);
    }

    #[test]
    fn water_waves_reduce_to_positivity_of_a() {
        let p = params(1.0, 1.0, 0.3, 0.5, 10.0);
        let e = ECoeff {
            value: 0.9,
            converged: true,
            iterations: 0,
            method: ECoeffMethod::FlatClosedForm,
        };
        for (a, stable) in [(0.2, true), (-0.1, false)] {
            let r = evaluate_criteria(&StabilityInputs::uniform(&p, 8, 5.0, a, 1.0), &e, None);
            assert_eq!(r.sc.lhs, 0.0);
            assert_eq!(r.sc.holds, stable);
        }
    }

    #[test]
    fn missing_time_falls_back() {
        let p = params(0.6, 1.0, 0.1, 0.5, 10.0);
        let mut inputs = StabilityInputs::uniform(&p, 8, 1.0, 1.0, 0.0);
        inputs.djump_t = None;
        inputs.djump_x = vec![3.0; 8];
        let e = ECoeff {
            value: 1.0,
            converged: true,
            iterations: 0,
            method: ECoeffMethod::FlatClosedForm,
        };
        let r = evaluate_criteria(&inputs, &e, None);
        assert!(r.sc.fallback_to_alt);
        assert_eq!(r.sc.lhs, r.sc_alt.lhs);
    }

    #[test]
    fn margin_without_jump() {
        let p = params(0.6, 1.0, 0.1, 0.5, 10.0);
        let m = modewise_margin(&p, 0.7, 0.0, 1.0, 0.0);
        assert_eq!(m.minimum, 0.7);
        assert_eq!(m.argmin, 0.0);
        let inf = p.with_bond(f64::INFINITY).unwrap();
        assert!(modewise_margin(&inf, 0.7, 1.0, 1.0, 0.0).unbounded_below);
    }

    #[test]
    fn borderline_margin_is_zero() {
        let p = params(0.6, 0.7, 0.2, 0.5, 50.0);
        let e = 0.9;
        let a0 = 0.8;
        // upsilon e^2 J^4 = a0
        let j = (a0 / (p.upsilon * e * e)).powf(0.25);
        let m = modewise_margin(&p, a0, j, e, 0.0);
        assert!(m.minimum.abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn flat_e_coeff_two_paths() {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = params(0.6, 0.7, 0.1, 0.5, 10.0);
        let ops = TwoFluidOps::new(&g, &vec![0.0; 32], &p, &StripOptions::with_nz(128)).unwrap();
        let closed = e_coeff(&ops).unwrap();
        let lz = e_coeff_lanczos(&ops).unwrap();
        assert!(lz.converged);
        assert!(
            (closed.value - lz.value).abs() < 1e-4,
            "{} {}",
            closed.value,
            lz.value
        );
    }

    #[test]
    fn ins_form_rest_is_h1_sigma() {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = params(0.6, 0.7, 0.1, 0.5, 4.0);
        let ops = TwoFluidOps::new(&g, &vec![0.0; 32], &p, &StripOptions::with_nz(16)).unwrap();
        let u = g.trig_field(&[(1.0, 0.3, 0.2), (3.0, 0.0, 0.5)]);
        let v = ins_form(&ops, &u, &vec![1.0; 32], &vec![0.0; 32]).unwrap();
        let n = g.norm_h1_sigma(&u, 4.0);
        assert!((v - n * n).abs() < 1e-12);
    }
}
