//! Time integration of the periodic two-fluid system in one horizontal dimension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::PeriodicGrid;
use crate::stability::{
    e_coeff, e_flat_discrete, evaluate_criteria, ECoeff, ECoeffMethod, StabilityInputs,
    StabilityReport,
};
use crate::strip::StripOptions;
use crate::two_fluid::{InterfaceState, TraceBundle, TwoFluidOps};
use crate::units::DimensionlessParams;

/// Default limit on the spectral tail before a run is declared broken down.
pub const DEFAULT_TAIL_LIMIT: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    /// `None` turns the 2/3 rule on for `eps >= 0.1`.
    pub dealias: Option<bool>,
    /// Diagnostics and snapshots every this many steps.
    pub cadence: usize,
    pub strip: StripOptions,
    pub tail_limit: f64,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            dealias: None,
            cadence: 1,
            strip: StripOptions::with_nz(16).with_tol(1e-11),
            tail_limit: DEFAULT_TAIL_LIMIT,
        }
    }

    pub fn dealias_for(&self, params: &DimensionlessParams) -> bool {
        self.dealias.unwrap_or(params.eps >= 0.1)
    }

    pub fn validate(&self, grid: &PeriodicGrid, params: &DimensionlessParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.cadence == 0 {
            return Err(Error::InvalidConfig("cadence must be at least 1".into()));
        }
        let cap = cfl_cap(params, grid);
        if self.dt > cap * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "dt = {} exceeds the stability cap {cap:.4e}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// `0.5 min(sqrt(mu) / k_max, sqrt(Bo sqrt(mu)) / k_max^{3/2})`.
pub fn cfl_cap(params: &DimensionlessParams, grid: &PeriodicGrid) -> f64 {
    let k = grid.max_wavenumber();
    let sm = params.mu.sqrt();
    let gravity = sm / k;
    let capillary = (params.bond * sm).sqrt() / k.powf(1.5);
    0.5 * gravity.min(capillary)
}

/// Time derivatives and the traces they were built from.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub dzeta: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub traces: TraceBundle,
}

/// Stateful right-hand side; keeps the last transmission solution as a warm start.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: PeriodicGrid,
    params: DimensionlessParams,
    opts: StripOptions,
    dealias: bool,
    warm: Option<Vec<f64>>,
}

impl Integrator {
    pub fn new(
        grid: &PeriodicGrid,
        params: &DimensionlessParams,
        opts: &StripOptions,
        dealias: bool,
    ) -> Self {
        Self {
            grid: grid.clone(),
            params: *params,
            opts: *opts,
            dealias,
            warm: None,
        }
    }

    pub fn tendency(&mut self, zeta: &[f64], psi: &[f64]) -> Result<Tendency> {
        let grid = &self.grid;
        let p = self.params;
        let ops = TwoFluidOps::new(grid, zeta, &p, &self.opts)?;
        let (traces, raw) = ops.transmission_warm(psi, self.warm.as_deref())?;
        if !raw.is_empty() {
            self.warm = Some(raw);
        }
        let (eps, mu) = (p.eps, p.mu);
        let zx = ops.zeta_x();
        let mut dzeta: Vec<f64> = traces
            .dn_plus
            .iter()
            .map(|g| g / (mu * p.hbar_plus))
            .collect();
        let mut dpsi: Vec<f64> = (0..grid.len())
            .map(|i| {
                let slope = 1.0 + eps * eps * mu * zx[i] * zx[i];
                let px_p = traces.v_plus[i] + eps * zx[i] * traces.w_plus[i];
                let px_m = traces.v_minus[i] + eps * zx[i] * traces.w_minus[i];
                let grad = p.rhobar_plus * px_p * px_p - p.rhobar_minus * px_m * px_m;
                let vert = p.rhobar_plus * traces.w_plus[i].powi(2)
                    - p.rhobar_minus * traces.w_minus[i].powi(2);
                -zeta[i] - 0.5 * eps * grad + 0.5 * eps / mu * slope * vert
            })
            .collect();
        let ib = p.inv_bond();
        if ib > 0.0 {
            let em = eps * eps * mu;
            let flux: Vec<f64> = zx.iter().map(|s| s / (1.0 + em * s * s).sqrt()).collect();
            for (d, c) in dpsi.iter_mut().zip(grid.derivative(&flux)) {
                *d += ib * c;
            }
        }
        if self.dealias {
            dzeta = grid.dealias(&dzeta);
            dpsi = grid.dealias(&dpsi);
        }
        Ok(Tendency {
            dzeta,
            dpsi,
            traces,
        })
    }

    /// Classical four-stage step. Failures are reported as breakdown at `time`.
    pub fn step(
        &mut self,
        zeta: &[f64],
        psi: &[f64],
        dt: f64,
        time: f64,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let fail = |e: Error| match e {
            Error::Breakdown { .. } => e,
            other => Error::Breakdown {
                time,
                reason: other.to_string(),
            },
        };
        let axpy = |u: &[f64], a: f64, d: &[f64]| -> Vec<f64> {
            u.iter().zip(d).map(|(x, y)| x + a * y).collect()
        };
        let k1 = self.tendency(zeta, psi).map_err(fail)?;
        let k2 = self
            .tendency(
                &axpy(zeta, 0.5 * dt, &k1.dzeta),
                &axpy(psi, 0.5 * dt, &k1.dpsi),
            )
            .map_err(fail)?;
        let k3 = self
            .tendency(
                &axpy(zeta, 0.5 * dt, &k2.dzeta),
                &axpy(psi, 0.5 * dt, &k2.dpsi),
            )
            .map_err(fail)?;
        let k4 = self
            .tendency(&axpy(zeta, dt, &k3.dzeta), &axpy(psi, dt, &k3.dpsi))
            .map_err(fail)?;
        let combine = |u: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..u.len())
                .map(|i| u[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                .collect()
        };
        let z = combine(zeta, &k1.dzeta, &k2.dzeta, &k3.dzeta, &k4.dzeta);
        let q = combine(psi, &k1.dpsi, &k2.dpsi, &k3.dpsi, &k4.dpsi);
        if z.iter().chain(&q).any(|v| !v.is_finite()) {
            return Err(Error::Breakdown {
                time: time + dt,
                reason: "non-finite values after step".into(),
            });
        }
        Ok((z, q))
    }
}

/// One-shot right-hand side `(d zeta/dt, d psi/dt)`.
pub fn rhs(
    state: &InterfaceState,
    opts: &StripOptions,
    dealias: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = Integrator::new(&state.grid, &state.params, opts, dealias)
        .tendency(&state.zeta, &state.psi)?;
    Ok((t.dzeta, t.dpsi))
}

pub fn rk4_step(
    state: &InterfaceState,
    dt: f64,
    opts: &StripOptions,
    dealias: bool,
) -> Result<InterfaceState> {
    let mut it = Integrator::new(&state.grid, &state.params, opts, dealias);
    let (z, q) = it.step(&state.zeta, &state.psi, dt, 0.0)?;
    Ok(InterfaceState {
        zeta: z,
        psi: q,
        ..state.clone()
    })
}

/// Energy fraction above a third of the resolved band, so it stays informative
/// when the 2/3 rule zeroes the top third.
pub fn band_tail(grid: &PeriodicGrid, u: &[f64]) -> f64 {
    let spec = grid.forward(u);
    let cut = grid.len() / 6;
    let (mut hi, mut all) = (0.0, 0.0);
    for (j, c) in spec.iter().enumerate() {
        let e = c.norm_sqr();
        all += e;
        if grid.mode_index(j).unsigned_abs() as usize > cut {
            hi += e;
        }
    }
    if all == 0.0 {
        0.0
    } else {
        (hi / all).sqrt()
    }
}

/// Quadratic energy that the linearized flow conserves exactly.
pub fn linear_energy(
    grid: &PeriodicGrid,
    params: &DimensionlessParams,
    zeta: &[f64],
    psi: &[f64],
) -> f64 {
    let n2 = (grid.len() * grid.len()) as f64;
    let ib = params.inv_bond();
    let (zs, ps) = (grid.forward(zeta), grid.forward(psi));
    (0..grid.len())
        .map(|j| {
            let k = grid.wavenumber(j);
            let g = TwoFluidOps::g_flat_symbol(params, k) / params.mu;
            ((1.0 + ib * k * k) * zs[j].norm_sqr() + g * ps[j].norm_sqr()) / n2
        })
        .sum::<f64>()
        * grid.length()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub time: f64,
    pub mass: f64,
    pub zeta_sup: f64,
    pub jump_sup: f64,
    pub band_tail: f64,
    pub linear_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownInfo {
    pub time: f64,
    pub reason: String,
    pub band_tail: f64,
}

#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub snapshots: Vec<InterfaceState>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub breakdown: Option<BreakdownInfo>,
    pub steps: usize,
}

impl TimeSeries {
    pub fn last(&self) -> &InterfaceState {
        self.snapshots
            .last()
            .expect("series holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("series holds the initial time")
    }

    pub fn write_diagnostics_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        w.write_record([
            "time",
            "mass",
            "zeta_sup",
            "jump_sup",
            "band_tail",
            "linear_energy",
        ])?;
        for r in &self.diagnostics {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn diagnostics(state: &InterfaceState, time: f64, traces: Option<&TraceBundle>) -> DiagnosticRow {
    let g = &state.grid;
    DiagnosticRow {
        time,
        mass: g.integral(&state.zeta),
        zeta_sup: state.zeta.iter().fold(0.0, |m, v| m.max(v.abs())),
        jump_sup: traces.map_or(0.0, |t| t.jump_v().iter().fold(0.0, |m, v| m.max(v.abs()))),
        band_tail: band_tail(g, &state.zeta),
        linear_energy: linear_energy(g, &state.params, &state.zeta, &state.psi),
    }
}

/// Integrates to `t_end`. Breakdown ends the run early and is recorded, not raised.
pub fn run(config: &EvolutionConfig, initial: &InterfaceState) -> Result<TimeSeries> {
    let grid = &initial.grid;
    let params = initial.params;
    config.validate(grid, &params)?;
    initial.check_depths()?;
    let steps = (config.t_end / config.dt).ceil() as usize;
    let dt = if steps == 0 {
        config.dt
    } else {
        config.t_end / steps as f64
    };
    let mut it = Integrator::new(grid, &params, &config.strip, config.dealias_for(&params));
    let first = it.tendency(&initial.zeta, &initial.psi)?;
    let mut series = TimeSeries {
        times: vec![0.0],
        snapshots: vec![initial.clone()],
        diagnostics: vec![diagnostics(initial, 0.0, Some(&first.traces))],
        breakdown: None,
        steps: 0,
    };
    let (mut zeta, mut psi) = (initial.zeta.clone(), initial.psi.clone());
    for s in 0..steps {
        let time = s as f64 * dt;
        let outcome = it.step(&zeta, &psi, dt, time).and_then(|(z, q)| {
            let tail = band_tail(grid, &z);
            if tail > config.tail_limit {
                Err(Error::Breakdown {
                    time: time + dt,
                    reason: format!("spectral tail {tail:.3e} above {:.3e}", config.tail_limit),
                })
            } else {
                Ok((z, q))
            }
        });
        match outcome {
            Ok((z, q)) => {
                zeta = z;
                psi = q;
                series.steps = s + 1;
            }
            Err(Error::Breakdown { time, reason }) => {
                series.breakdown = Some(BreakdownInfo {
                    time,
                    reason,
                    band_tail: band_tail(grid, &zeta),
                });
                break;
            }
            Err(e) => return Err(e),
        }
        let t = (s + 1) as f64 * dt;
        if (s + 1) % config.cadence == 0 || s + 1 == steps {
            let state = InterfaceState {
                grid: grid.clone(),
                zeta: zeta.clone(),
                psi: psi.clone(),
                params,
            };
            let traces = it.tendency(&zeta, &psi).ok().map(|t| t.traces);
            series
                .diagnostics
                .push(diagnostics(&state, t, traces.as_ref()));
            series.times.push(t);
            series.snapshots.push(state);
        }
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EEstimate {
    /// Flat closed form on the grid's modes; cheap.
    Flat,
    /// Iterative estimate on the current interface.
    Iterative,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorRow {
    pub time: f64,
    pub report: StabilityReport,
}

/// Criterion report at every stored snapshot, with centered time differences
/// inside and one-sided ones at the ends.
pub fn monitor_criterion(
    series: &TimeSeries,
    opts: &StripOptions,
    estimate: EEstimate,
    gamma: f64,
) -> Result<Vec<MonitorRow>> {
    let n = series.snapshots.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "criterion monitoring needs at least 3 snapshots, got {n}"
        )));
    }
    let traces: Vec<TraceBundle> = series
        .snapshots
        .iter()
        .map(|s| TwoFluidOps::for_state(s, opts)?.transmission(&s.psi))
        .collect::<Result<_>>()?;
    (0..n)
        .map(|i| {
            let state = &series.snapshots[i];
            let t = &series.times;
            let (prev, next, dt) = if i == 0 {
                (None, Some(&traces[1]), t[1] - t[0])
            } else if i == n - 1 {
                (Some(&traces[i - 1]), None, t[i] - t[i - 1])
            } else {
                (
                    Some(&traces[i - 1]),
                    Some(&traces[i + 1]),
                    0.5 * (t[i + 1] - t[i - 1]),
                )
            };
            let inputs = StabilityInputs::from_traces(state, &traces[i], prev, next, dt, gamma)?;
            let e = match estimate {
                EEstimate::Flat => ECoeff {
                    value: e_flat_discrete(&state.params, &state.grid),
                    converged: true,
                    iterations: 0,
                    method: ECoeffMethod::FlatClosedForm,
                },
                EEstimate::Iterative => e_coeff(&TwoFluidOps::for_state(state, opts)?)?,
            };
            Ok(MonitorRow {
                time: t[i],
                report: evaluate_criteria(&inputs, &e, None),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::NondimInputs;

    fn params(eps: f64, bond: f64) -> DimensionlessParams {
        DimensionlessParams::from_nondim(&NondimInputs {
            rhobar_plus: 0.6,
            depth_ratio: 1.3,
            eps,
            mu: 0.5,
            bond,
        })
        .unwrap()
    }

    fn opts() -> StripOptions {
        StripOptions::with_nz(16).with_tol(1e-12)
    }

    #[test]
    fn rest_is_equilibrium() {
        let g = PeriodicGrid::standard(16).unwrap();
        let s = InterfaceState::rest(g, params(0.3, 20.0));
        let (dz, dp) = rhs(&s, &opts(), true).unwrap();
        assert!(dz.iter().chain(&dp).all(|v| *v == 0.0));
    }

    #[test]
    fn mean_of_dzeta_vanishes() {
        let g = PeriodicGrid::standard(32).unwrap();
        let zeta = g.trig_field(&[(1.0, 0.4, 0.1), (3.0, 0.0, 0.2)]);
        let psi = g.trig_field(&[(2.0, 0.5, 0.3)]);
        let s = InterfaceState::new(g.clone(), zeta, psi, params(0.3, 20.0)).unwrap();
        let (dz, _) = rhs(&s, &opts(), false).unwrap();
        assert!(g.mean(&dz).abs() < 1e-14);
    }

    #[test]
    fn reversing_psi_reverses_dzeta() {
        let g = PeriodicGrid::standard(32).unwrap();
        let zeta = g.trig_field(&[(1.0, 0.4, 0.1)]);
        let psi = g.trig_field(&[(2.0, 0.5, 0.3)]);
        let neg: Vec<f64> = psi.iter().map(|v| -v).collect();
        let p = params(0.3, 20.0);
        let a = rhs(
            &InterfaceState::new(g.clone(), zeta.clone(), psi, p).unwrap(),
            &opts(),
            false,
        )
        .unwrap();
        let b = rhs(
            &InterfaceState::new(g, zeta, neg, p).unwrap(),
            &opts(),
            false,
        )
        .unwrap();
        for i in 0..32 {
            assert!((a.0[i] + b.0[i]).abs() < 1e-9);
            assert!((a.1[i] - b.1[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_tendency_matches_multipliers() {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = params(1e-6, 8.0);
        let zeta = g.trig_field(&[(2.0, 1.0, 0.0), (5.0, 0.0, 0.5)]);
        let psi = g.trig_field(&[(1.0, 0.0, 1.0), (3.0, 0.7, 0.0)]);
        let s = InterfaceState::new(g.clone(), zeta.clone(), psi.clone(), p).unwrap();
        let (dz, dp) = rhs(&s, &StripOptions::with_nz(128).with_tol(1e-12), false).unwrap();
        let ez = g
            .apply_multiplier(|k| TwoFluidOps::g_flat_symbol(&p, k) / p.mu, &psi)
            .unwrap();
        let ep = g.apply_multiplier(|k| -(1.0 + k * k / 8.0), &zeta).unwrap();
        let rel = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
            (d / b.iter().map(|y| y * y).sum::<f64>()).sqrt()
        };
        assert!(rel(&dz, &ez) < 1e-4, "{}", rel(&dz, &ez));
        assert!(rel(&dp, &ep) < 1e-4, "{}", rel(&dp, &ep));
    }

    #[test]
    fn cap_is_enforced() {
        let g = PeriodicGrid::standard(16).unwrap();
        let p = params(0.1, 10.0);
        let cap = cfl_cap(&p, &g);
        assert!(EvolutionConfig::new(cap * 0.99, 1.0)
            .validate(&g, &p)
            .is_ok());
        assert!(EvolutionConfig::new(cap * 1.5, 1.0)
            .validate(&g, &p)
            .is_err());
    }

    #[test]
    fn rest_trajectory_margin_is_one() {
        let g = PeriodicGrid::standard(16).unwrap();
        let p = params(0.2, 10.0);
        let s = InterfaceState::rest(g.clone(), p);
        let cfg = EvolutionConfig::new(cfl_cap(&p, &g), 3.0 * cfl_cap(&p, &g));
        let series = run(&cfg, &s).unwrap();
        assert_eq!(series.snapshots.len(), 4);
        let rows = monitor_criterion(&series, &opts(), EEstimate::Flat, 0.0).unwrap();
        for r in rows {
            assert_eq!(r.report.margin_d, 1.0);
        }
    }
}
