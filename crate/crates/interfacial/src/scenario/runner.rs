//! Dispatch from a validated scenario to the library, one arm per run kind.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::cases::run_case;
use super::config::{
    CompareSpec, CriterionSpec, DnVerifySpec, InitialData, KelvinSpec, RunKind, ScenarioConfig,
    TailSpec,
};
use super::report::{csv_table, table_from, Outcome, Report, Table};
use crate::error::{Error, Result};
use crate::evolution::{self, cfl_cap, monitor_criterion, EEstimate, EvolutionConfig};
use crate::kelvin::{
    arbitrate_exponent, critical_shear, dispersion_table, flat_constant_unsquared,
    kelvin_criterion_threshold, write_dispersion_csv, ShearConfig, ARBITRATION_DEPTHS,
};
use crate::linalg::loglog_slope;
use crate::snapshot;
use crate::spectral::PeriodicGrid;
use crate::stability::{
    c_flat_params, evaluate_criteria, modewise_margin, CriterionVerdict, ECoeff, ECoeffMethod,
    StabilityInputs,
};
use crate::strip::{
    build_trivial_diffeo, dn_apply, dn_flat, dn_shape_derivative_flat, Layer, StripOptions,
};
use crate::swsw::{self, compare_with_full, CellGrid, CompareSetup, SwConfig, SwState};
use crate::symbols::{tail_error_report, TailSweepSetup};
use crate::two_fluid::{InterfaceState, TwoFluidOps};
use crate::units::{
    bond_number, derive_params, practical_verdict, shear_scale, upsilon, DimensionlessParams,
    NondimInputs, PhysicalConfig, VERDICT_HI, VERDICT_LO,
};

/// Relative tolerance used when arbitrating the flat-constant exponent.
pub const ARBITRATION_TOLERANCE: f64 = 0.02;

/// Runs the scenario. `seed` drives every random input so reruns are identical.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<Outcome> {
    cfg.validate()?;
    let mut out = Outcome {
        report: Report {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            run_kind: cfg.run_kind,
            seed,
            config: cfg.clone(),
            results: serde_json::Value::Null,
        },
        tables: Vec::new(),
        blobs: Vec::new(),
        failure: None,
        stable: None,
    };
    match cfg.run_kind {
        RunKind::Params => run_params(cfg, &mut out)?,
        RunKind::Criterion => run_criterion(cfg, &mut out)?,
        RunKind::Kelvin => run_kelvin(cfg, &mut out)?,
        RunKind::DnVerify => run_dn_verify(cfg, seed, &mut out)?,
        RunKind::TailVerify => run_tail(cfg, &mut out)?,
        RunKind::Evolve => run_evolve(cfg, &mut out)?,
        RunKind::Swsw => run_swsw(cfg, &mut out)?,
        RunKind::Compare => run_compare(cfg, &mut out)?,
        RunKind::Case => {
            let name = cfg.case_name.expect("validated");
            let r = run_case(name)?;
            if !r.passed {
                let bad: Vec<String> = r
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| format!("{} = {} (expected {})", c.quantity, c.computed, c.expected))
                    .collect();
                out.failure = Some(format!("case {} failed: {}", name.as_str(), bad.join("; ")));
            }
            out.tables.push(csv_table(
                "case",
                &["quantity", "computed", "expected", "delta", "passed"],
                &r.checks
                    .iter()
                    .map(|c| (&c.quantity, c.computed, c.expected, c.delta, c.passed))
                    .collect::<Vec<_>>(),
            )?);
            out.report.results = serde_json::to_value(&r)?;
        }
    }
    Ok(out)
}

fn physical(cfg: &ScenarioConfig, need_sigma: bool) -> Result<PhysicalConfig> {
    cfg.physical
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("physical block is required".into()))?
        .to_config(need_sigma)
}

fn strip_options(cfg: &ScenarioConfig) -> StripOptions {
    StripOptions::with_nz(cfg.numerics.n_z).with_tol(cfg.numerics.tolerances.strip)
}

#[derive(Serialize)]
struct ParamsResult {
    params: DimensionlessParams,
    #[serde(serialize_with = "crate::serde_ext::option::serialize")]
    upsilon: Option<f64>,
    #[serde(with = "crate::serde_ext")]
    bond: f64,
    shear_scale: f64,
    verdict: Option<crate::units::PracticalVerdict>,
}

fn run_params(cfg: &ScenarioConfig, out: &mut Outcome) -> Result<()> {
    let phys = physical(cfg, false)?;
    let params = derive_params(&phys)?;
    let ups = (phys.surface_tension > 0.0)
        .then(|| upsilon(&phys))
        .transpose()?;
    let res = ParamsResult {
        params,
        upsilon: ups,
        bond: bond_number(&phys)?,
        shear_scale: shear_scale(&phys)?,
        verdict: ups
            .map(|u| practical_verdict(u, VERDICT_LO, VERDICT_HI))
            .transpose()?,
    };
    let p = &res.params;
    let rows = [
        ("rhobar_plus", p.rhobar_plus),
        ("rhobar_minus", p.rhobar_minus),
        ("eps", p.eps),
        ("mu", p.mu),
        ("hbar_plus", p.hbar_plus),
        ("hbar_minus", p.hbar_minus),
        ("bond", p.bond),
        ("upsilon", ups.unwrap_or(f64::NAN)),
        ("shear_scale", res.shear_scale),
    ];
    out.tables
        .push(csv_table("params", &["name", "value"], &rows)?);
    out.report.results = serde_json::to_value(&res)?;
    Ok(())
}

fn run_criterion(cfg: &ScenarioConfig, out: &mut Outcome) -> Result<()> {
    let phys = physical(cfg, true)?;
    let p = derive_params(&phys)?;
    let spec: CriterionSpec = cfg.criterion.unwrap_or_default();
    let shear = match spec.shear {
        Some(s) => s,
        None => shear_scale(&phys)?,
    };
    let scale = p.eps * p.wave_speed;
    if !(scale > 0.0) {
        return Err(Error::InvalidConfig(
            "a positive amplitude is needed to scale the velocity jump".into(),
        ));
    }
    let jump = shear / scale;
    let flat = c_flat_params(&p);
    let e = ECoeff {
        value: flat.value,
        converged: true,
        iterations: 0,
        method: ECoeffMethod::FlatClosedForm,
    };
    let inputs = StabilityInputs::uniform(&p, cfg.numerics.n_points, jump, 1.0, spec.gamma);
    let report = evaluate_criteria(&inputs, &e, Some(&phys));
    let margin = modewise_margin(&p, report.inf_a, jump, e.value, 0.0);
    let stable = report.verdict == CriterionVerdict::Stable;
    out.stable = Some(stable);
    out.tables.push(csv_table(
        "criterion",
        &[
            "shear",
            "jump",
            "upsilon",
            "c_coeff",
            "sc",
            "sc_alt",
            "sc_strong",
            "margin_d",
            "modewise_min",
            "stable",
        ],
        &[(
            shear,
            jump,
            report.upsilon,
            report.c_coeff,
            report.sc.holds,
            report.sc_alt.holds,
            report.sc_strong.holds,
            report.margin_d,
            margin.minimum,
            stable,
        )],
    )?);
    out.report.results = json!({
        "shear": shear,
        "jump": jump,
        "flat_argmax": flat.argmax,
        "report": report,
        "modewise_margin": margin,
    });
    Ok(())
}

fn shear_config(phys: &PhysicalConfig, shear: f64) -> ShearConfig {
    ShearConfig {
        rho_plus: phys.rho_plus,
        rho_minus: phys.rho_minus,
        depth_plus: phys.depth_plus,
        depth_minus: phys.depth_minus,
        c_plus: shear,
        c_minus: 0.0,
        surface_tension: phys.surface_tension,
        gravity: phys.gravity,
    }
}

fn run_kelvin(cfg: &ScenarioConfig, out: &mut Outcome) -> Result<()> {
    let phys = physical(cfg, true)?;
    let spec: KelvinSpec = cfg.kelvin.unwrap_or_default();
    let sc = shear_config(&phys, spec.shear);
    let range = (spec.k_min, spec.k_max);
    let critical = critical_shear(&sc, range)?;
    let c0 = flat_constant_unsquared(&sc);
    let thr_u = kelvin_criterion_threshold(&sc, c0)?;
    let thr_s = kelvin_criterion_threshold(&sc, c0 * c0)?;
    let rows = dispersion_table(&sc, range, spec.samples);
    out.tables.push(table_from("dispersion", |w| {
        write_dispersion_csv(&rows, w)
    })?);
    let arbitration = if spec.arbitrate {
        let a = arbitrate_exponent(&sc, &ARBITRATION_DEPTHS, ARBITRATION_TOLERANCE)?;
        out.tables.push(csv_table(
            "arbitration",
            &[
                "depth_plus",
                "depth_minus",
                "dispersion_threshold",
                "c0_unsquared",
                "threshold_unsquared",
                "threshold_squared",
                "rel_err_unsquared",
                "rel_err_squared",
            ],
            &a.cells,
        )?);
        Some(a)
    } else {
        None
    };
    out.stable = Some(spec.shear < critical.shear);
    out.report.results = json!({
        "critical": critical,
        "c0_unsquared": c0,
        "threshold_unsquared": finite_or_string(thr_u),
        "threshold_squared": finite_or_string(thr_s),
        "arbitration": arbitration,
    });
    Ok(())
}

fn finite_or_string(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(if v > 0.0 { "inf" } else { "nan" })
    }
}

/// Random trigonometric polynomial with modes `1..=modes` and decaying amplitudes.
pub fn random_smooth(grid: &PeriodicGrid, rng: &mut impl Rng, modes: usize) -> Vec<f64> {
    let terms: Vec<(f64, f64, f64)> = (1..=modes)
        .map(|k| {
            let decay = (-(k as f64) / 2.0).exp();
            (
                k as f64,
                decay * rng.gen_range(-1.0..1.0),
                decay * rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    grid.trig_field(&terms)
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatDnRow {
    pub mu: f64,
    pub n_z: usize,
    pub rel_error: f64,
    /// Fitted order in `n_z` from `n_z / 4`, `n_z / 2` and `n_z`.
    pub z_order: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorCheck {
    pub operator: &'static str,
    pub max_asymmetry: f64,
    /// Smallest `(A u, u) / (|A u| |u|)` after orienting by the layer sign.
    pub min_signed_form: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeRow {
    pub eps: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DnVerification {
    pub flat: Vec<FlatDnRow>,
    pub operators: Vec<OperatorCheck>,
    pub shape: Vec<ShapeRow>,
    pub shape_eps_slope: f64,
}

/// Flat-case errors, z-refinement, symmetry and sign checks and the
/// first-order shape derivative, on the lower layer unless stated.
pub fn verify_dn(
    n_points: usize,
    opts: &StripOptions,
    spec: &DnVerifySpec,
    seed: u64,
) -> Result<DnVerification> {
    let grid = PeriodicGrid::standard(n_points)?;
    let psi = grid.trig_field(&[(1.0, 1.0, 0.0)]);
    let zero = vec![0.0; n_points];
    let flat = spec
        .mu
        .iter()
        .map(|&mu| {
            let d = build_trivial_diffeo(&grid, &zero, 0.0, mu, Layer::Lower)?;
            let exact = dn_flat(&grid, mu, Layer::Lower, &psi)?;
            let levels = [opts.nz / 4, opts.nz / 2, opts.nz];
            let errs: Vec<f64> = levels
                .iter()
                .map(|&nz| {
                    let o = StripOptions {
                        nz: nz.max(2),
                        ..*opts
                    };
                    Ok(rel_l2(&dn_apply(&d, &psi, &o)?, &exact))
                })
                .collect::<Result<_>>()?;
            let xs: Vec<f64> = levels.iter().map(|&n| n as f64).collect();
            Ok(FlatDnRow {
                mu,
                n_z: opts.nz,
                rel_error: errs[2],
                z_order: -loglog_slope(&xs, &errs),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = 0.25;
    let params = DimensionlessParams::from_nondim(&NondimInputs {
        rhobar_plus: 0.6,
        depth_ratio: 1.0,
        eps: spec.eps,
        mu,
        bond: f64::INFINITY,
    })?;
    let mut zeta = random_smooth(&grid, &mut rng, 4);
    let zmax = zeta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    zeta.iter_mut().for_each(|v| *v /= zmax);
    let ops = TwoFluidOps::new(&grid, &zeta, &params, opts)?;
    type Apply<'a> = Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a>;
    let list: [(&'static str, f64, Apply); 3] = [
        (
            "g_plus",
            Layer::Lower.sign(),
            Box::new(|u: &[f64]| ops.dn_lower(u)),
        ),
        (
            "g_minus",
            Layer::Upper.sign(),
            Box::new(|u: &[f64]| ops.dn_upper(u)),
        ),
        ("g_two_fluid", 1.0, Box::new(|u: &[f64]| ops.apply_g(u))),
    ];
    let inputs: Vec<(Vec<f64>, Vec<f64>)> = (0..spec.samples)
        .map(|_| {
            (
                random_smooth(&grid, &mut rng, 8),
                random_smooth(&grid, &mut rng, 8),
            )
        })
        .collect();
    let operators = list
        .iter()
        .map(|(name, sign, apply)| {
            let mut asym = 0.0f64;
            let mut form = f64::INFINITY;
            for (u, v) in &inputs {
                let au = apply(u)?;
                let av = apply(v)?;
                let (uv, vu) = (grid.inner(&au, v), grid.inner(u, &av));
                let scale = grid.l2_norm(&au) * grid.l2_norm(v);
                asym = asym.max((uv - vu).abs() / scale);
                form = form.min(sign * grid.inner(&au, u) / (grid.l2_norm(&au) * grid.l2_norm(u)));
            }
            Ok(OperatorCheck {
                operator: name,
                max_asymmetry: asym,
                min_signed_form: form,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let h = grid.trig_field(&[(1.0, 1.0, 0.0), (2.0, 0.0, 0.3)]);
    let g0 = dn_apply(
        &build_trivial_diffeo(&grid, &zero, 0.0, mu, Layer::Lower)?,
        &psi,
        opts,
    )?;
    let deriv = dn_shape_derivative_flat(&grid, mu, &h, &psi)?;
    let shape_eps = [0.04, 0.02, 0.01, 0.005];
    let shape = shape_eps
        .iter()
        .map(|&eps| {
            let d = build_trivial_diffeo(&grid, &h, eps, mu, Layer::Lower)?;
            let ge = dn_apply(&d, &psi, opts)?;
            let quotient: Vec<f64> = ge.iter().zip(&g0).map(|(a, b)| (a - b) / eps).collect();
            Ok(ShapeRow {
                eps,
                rel_error: rel_l2(&quotient, &deriv),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let shape_eps_slope = loglog_slope(
        &shape.iter().map(|r| r.eps).collect::<Vec<_>>(),
        &shape.iter().map(|r| r.rel_error).collect::<Vec<_>>(),
    );
    Ok(DnVerification {
        flat,
        operators,
        shape,
        shape_eps_slope,
    })
}

fn run_dn_verify(cfg: &ScenarioConfig, seed: u64, out: &mut Outcome) -> Result<()> {
    let spec = cfg.dn_verify.clone().unwrap_or_default();
    let v = verify_dn(cfg.numerics.n_points, &strip_options(cfg), &spec, seed)?;
    out.tables.push(csv_table(
        "dn_flat",
        &["mu", "n_z", "rel_error", "z_order"],
        &v.flat,
    )?);
    out.tables.push(csv_table(
        "dn_operators",
        &["operator", "max_asymmetry", "min_signed_form"],
        &v.operators,
    )?);
    out.tables
        .push(csv_table("dn_shape", &["eps", "rel_error"], &v.shape)?);
    out.report.results = serde_json::to_value(&v)?;
    Ok(())
}

fn run_tail(cfg: &ScenarioConfig, out: &mut Outcome) -> Result<()> {
    let spec: TailSpec = cfg.tail.clone().unwrap_or_default();
    let grid = PeriodicGrid::standard(cfg.numerics.n_points)?;
    let zeta = grid.trig_field(&[(1.0, 1.0, 0.0)]);
    let psi = grid.trig_field(&[(1.0, 0.0, 1.0), (2.0, 0.5, 0.0), (3.0, 0.0, 0.25)]);
    let sweep: Vec<(f64, f64)> = spec
        .eps
        .iter()
        .flat_map(|&e| spec.mu.iter().map(move |&m| (e, m)))
        .collect();
    let setup = TailSweepSetup {
        rhobar_plus: spec.rhobar_plus,
        depth_ratio: spec.depth_ratio,
        ..TailSweepSetup::default()
    };
    let report = tail_error_report(&grid, &zeta, &psi, &sweep, &setup, &strip_options(cfg));
    out.tables.push(csv_table(
        "tail",
        &[
            "eps",
            "mu",
            "err_hs",
            "err_hs_half",
            "norm_psi",
            "ratio",
            "tailless_ratio",
            "error",
        ],
        &report.rows,
    )?);
    out.report.results = serde_json::to_value(&report)?;
    Ok(())
}

fn modes(m: &[[f64; 3]]) -> Vec<(f64, f64, f64)> {
    m.iter().map(|&[k, a, b]| (k, a, b)).collect()
}

/// `(zeta(x), d_x psi(x))` from the Fourier description.
fn initial_profile(init: &InitialData) -> impl Fn(f64) -> (f64, f64) + Sync + '_ {
    move |x| {
        let z = init
            .zeta
            .iter()
            .map(|&[k, a, b]| a * (k * x).cos() + b * (k * x).sin())
            .sum();
        let v = init
            .psi
            .iter()
            .map(|&[k, a, b]| k * (b * (k * x).cos() - a * (k * x).sin()))
            .sum();
        (z, v)
    }
}

fn run_evolve(cfg: &ScenarioConfig, out: &mut Outcome) -> Result<()> {
    let params = cfg.dimensionless()?;
    let grid = PeriodicGrid::standard(cfg.numerics.n_points)?;
    let init = cfg.initial.clone().unwrap_or_default();
    let state = InterfaceState::new(
        grid.clone(),
        grid.trig_field(&modes(&init.zeta)),
        grid.trig_field(&modes(&init.psi)),
        params,
    )?;
    let n = &cfg.numerics;
    let mut ec = EvolutionConfig::new(n.dt.unwrap_or_else(|| cfl_cap(&params, &grid)), n.t_end);
    ec.cadence = n.cadence;
    ec.strip = strip_options(cfg);
    let series = evolution::run(&ec, &state)?;
    out.tables.push(table_from("diagnostics", |w| {
        series.write_diagnostics_csv(w)
    })?);
    let monitor = if series.snapshots.len() >= 3 {
        let rows = monitor_criterion(&series, &ec.strip, EEstimate::Flat, 0.0)?;
        out.tables.push(csv_table(
            "criterion",
            &["time", "inf_a", "margin_d", "margin_d_alt", "stable"],
            &rows
                .iter()
                .map(|r| {
                    (
                        r.time,
                        r.report.inf_a,
                        r.report.margin_d,
                        r.report.margin_d_alt,
                        r.report.verdict == CriterionVerdict::Stable,
                    )
                })
                .collect::<Vec<_>>(),
        )?);
        out.stable = Some(
            rows.iter()
                .all(|r| r.report.verdict == CriterionVerdict::Stable),
        );
        rows
    } else {
        Vec::new()
    };
    out.blobs.push((
        "final.snap".into(),
        snapshot::encode(series.last(), series.final_time())?,
    ));
    let d = &series.diagnostics;
    let mass_drift = d
        .iter()
        .map(|r| (r.mass - d[0].mass).abs())
        .fold(0.0, f64::max);
    out.report.results = json!({
        "steps": series.steps,
        "final_time": series.final_time(),
        "dt": if series.steps > 0 { n.t_end / series.steps as f64 } else { ec.dt },
        "breakdown": series.breakdown,
        "mass_drift": mass_drift,
        "last_diagnostics": d.last(),
        "criterion": monitor,
    });
    Ok(())
}

fn run_swsw(cfg: &ScenarioConfig, out: &mut Outcome) -> Result<()> {
    let params = cfg.dimensionless()?;
    let grid = CellGrid::new(cfg.numerics.n_points, 2.0 * std::f64::consts::PI)?;
    let init = cfg.initial.clone().unwrap_or_default();
    let profile = initial_profile(&init);
    let (zeta, v): (Vec<f64>, Vec<f64>) = grid.centres().into_iter().map(&profile).unzip();
    let state = SwState {
        grid,
        zeta,
        v,
        params,
    };
    let sc = SwConfig {
        dt: cfg.numerics.dt,
        cadence: cfg.numerics.cadence,
        ..SwConfig::new(cfg.numerics.t_end)
    };
    let series = swsw::run(&sc, &state)?;
    out.tables
        .push(table_from("swsw", |w| series.write_csv(w))?);
    let mass = |s: &SwState| s.zeta.iter().sum::<f64>() * s.grid.dx();
    let m0 = mass(&series.states[0]);
    let mass_drift = series
        .states
        .iter()
        .map(|s| (mass(s) - m0).abs())
        .fold(0.0, f64::max);
    out.stable = Some(series.loss.is_none());
    out.report.results = json!({
        "final_time": series.times.last(),
        "hyperbolicity_loss": series.loss,
        "indicator_min": series.indicator_min.iter().copied().fold(f64::INFINITY, f64::min),
        "mass_drift": mass_drift,
    });
    Ok(())
}

fn run_compare(cfg: &ScenarioConfig, out: &mut Outcome) -> Result<()> {
    let params = cfg.dimensionless()?;
    let spec: CompareSpec = cfg.compare.clone().unwrap_or_default();
    let init = cfg.initial.clone().unwrap_or_default();
    let profile = initial_profile(&init);
    let setup = CompareSetup {
        n_full: cfg.numerics.n_points,
        strip: strip_options(cfg),
        n_reference: spec.n_reference,
        samples: spec.samples,
    };
    let table = compare_with_full(&params, &profile, &spec.mu, cfg.numerics.t_end, &setup)?;
    out.tables
        .push(table_from("compare", |w| table.write_csv(w))?);
    out.report.results = serde_json::to_value(&table)?;
    Ok(())
}

/// Tables collected by a run, by name.
pub fn table<'a>(out: &'a Outcome, name: &str) -> Option<&'a Table> {
    out.tables.iter().find(|t| t.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::parse_config;

    fn run(text: &str) -> Outcome {
        run_scenario(&parse_config(text).unwrap(), 3).unwrap()
    }

    #[test]
    fn dn_verify_small() {
        let o = run(
            r#"{"run_kind": "dn_verify", "numerics": {"n_points": 16, "n_z": 64},
                "dn_verify": {"mu": [1.0], "samples": 3, "eps": 0.2}}"#,
        );
        let v = &o.report.results;
        let order = v["flat"][0]["z_order"].as_f64().unwrap();
        assert!((order - 2.0).abs() < 0.1, "{order}");
        for op in v["operators"].as_array().unwrap() {
            assert!(op["max_asymmetry"].as_f64().unwrap() < 1e-8);
            assert!(op["min_signed_form"].as_f64().unwrap() > 0.0);
        }
    }

    #[test]
    fn swsw_run_keeps_mass() {
        let o = run(r#"{"run_kind": "swsw",
                "nondim": {"rhobar_plus": 0.6, "depth_ratio": 1.0, "eps": 0.3, "mu": 0.01, "bond": "inf"},
                "numerics": {"n_points": 64, "t_end": 0.5},
                "initial": {"zeta": [[1.0, 1.0, 0.0]], "psi": [[1.0, 0.2, 0.0]]}}"#);
        assert!(o.report.results["mass_drift"].as_f64().unwrap() < 1e-12);
        assert_eq!(o.stable, Some(true));
        assert!(table(&o, "swsw").is_some());
    }

    #[test]
    fn criterion_flags_large_shear() {
        let base = r#""physical": {"rho_plus": 1000.0, "rho_minus": 1.2, "depth_plus": 15.0,
            "depth_minus": 15.0, "amplitude": 6.0, "wavelength": 100.0, "surface_tension": 0.074}"#;
        let calm = run(&format!(
            r#"{{"run_kind": "criterion", {base}, "criterion": {{"shear": 1.0}}}}"#
        ));
        let wild = run(&format!(
            r#"{{"run_kind": "criterion", {base}, "criterion": {{"shear": 30.0}}}}"#
        ));
        assert_eq!(calm.stable, Some(true));
        assert_eq!(wild.stable, Some(false));
        let d = &calm.report.results["report"]["sc_alt"]["dimensional"];
        assert_eq!(d["holds"], true);
    }

    #[test]
    fn random_smooth_is_seeded() {
        let g = PeriodicGrid::standard(16).unwrap();
        let a = random_smooth(&g, &mut ChaCha8Rng::seed_from_u64(1), 4);
        let b = random_smooth(&g, &mut ChaCha8Rng::seed_from_u64(1), 4);
        assert_eq!(a, b);
        assert!(g.mean(&a).abs() < 1e-14);
    }
}
