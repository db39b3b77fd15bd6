//! Two-layer shallow-water model in `(zeta, v)` with a first-order finite-volume solver.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{cfl_cap, run as run_full, EvolutionConfig};
use crate::spectral::PeriodicGrid;
use crate::strip::StripOptions;
use crate::two_fluid::InterfaceState;
use crate::units::DimensionlessParams;

/// Cell-centred periodic grid; cell `i` is centred at `(i + 1/2) dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    pub n: usize,
    pub length: f64,
}

impl CellGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cell grid needs n >= 4 and positive length, got {n}, {length}"
            )));
        }
        Ok(Self { n, length })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn centres(&self) -> Vec<f64> {
        (0..self.n).map(|i| (i as f64 + 0.5) * self.dx()).collect()
    }

    /// Averages pairs of cells onto the grid with half as many cells.
    pub fn coarsen(u: &[f64]) -> Vec<f64> {
        u.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SwState {
    pub grid: CellGrid,
    pub zeta: Vec<f64>,
    pub v: Vec<f64>,
    pub params: DimensionlessParams,
}

/// Layer heights `(h+, h-)` at elevation `zeta`.
pub fn heights(p: &DimensionlessParams, zeta: f64) -> (f64, f64) {
    (p.hbar_plus + p.eps * zeta, p.hbar_minus - p.eps * zeta)
}

#[derive(Debug, Clone, Copy)]
struct Coefficients {
    /// Mass-flux coefficient `h+ h- / D` and its derivative.
    a: f64,
    da: f64,
    /// Momentum coefficient `(rho+ h-^2 - rho- h+^2) / D^2` and its derivative.
    b: f64,
    db: f64,
    d: f64,
}

fn coefficients(p: &DimensionlessParams, zeta: f64) -> Coefficients {
    let (hp, hm) = heights(p, zeta);
    let (rp, rm, e) = (p.rhobar_plus, p.rhobar_minus, p.eps);
    let d = rp * hm + rm * hp;
    let dd = e * (rm - rp);
    let prod = hp * hm;
    let dprod = e * (hm - hp);
    let num = rp * hm * hm - rm * hp * hp;
    let dnum = -2.0 * e * d;
    Coefficients {
        a: prod / d,
        da: (dprod * d - prod * dd) / (d * d),
        b: num / (d * d),
        db: dnum / (d * d) - 2.0 * num * dd / (d * d * d),
        d,
    }
}

fn check_cell(p: &DimensionlessParams, zeta: f64, cell: usize) -> Result<()> {
    let (hp, hm) = heights(p, zeta);
    let h = hp.min(hm);
    if !(h > 0.0) {
        return Err(Error::DryState { height: h, cell });
    }
    Ok(())
}

fn point_flux(p: &DimensionlessParams, zeta: f64, v: f64) -> (f64, f64) {
    let c = coefficients(p, zeta);
    (c.a * v, zeta + 0.5 * p.eps * c.b * v * v)
}

/// Mass and momentum fluxes at every cell.
pub fn flux(state: &SwState) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = &state.params;
    let mut f1 = Vec::with_capacity(state.grid.n);
    let mut f2 = Vec::with_capacity(state.grid.n);
    for (i, (z, v)) in state.zeta.iter().zip(&state.v).enumerate() {
        check_cell(p, *z, i)?;
        let (a, b) = point_flux(p, *z, *v);
        f1.push(a);
        f2.push(b);
    }
    Ok((f1, f2))
}

/// Eigenvalues of the flux Jacobian; a complex pair signals lost hyperbolicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianEigs {
    pub discriminant: f64,
    pub lambda_1: Complex64,
    pub lambda_2: Complex64,
}

impl JacobianEigs {
    pub fn is_real(&self) -> bool {
        self.discriminant >= 0.0
    }

    pub fn spectral_radius(&self) -> f64 {
        self.lambda_1.norm().max(self.lambda_2.norm())
    }
}

pub fn point_eigs(p: &DimensionlessParams, zeta: f64, v: f64) -> JacobianEigs {
    let c = coefficients(p, zeta);
    let e = p.eps;
    // [[a' v, a], [1 + e b' v^2 / 2, e b v]]
    let (j11, j12, j21, j22) = (c.da * v, c.a, 1.0 + 0.5 * e * c.db * v * v, e * c.b * v);
    let tr = j11 + j22;
    let disc = (j11 - j22).powi(2) + 4.0 * j12 * j21;
    let half = 0.5 * tr;
    let (l1, l2) = if disc >= 0.0 {
        let r = 0.5 * disc.sqrt();
        (Complex64::new(half - r, 0.0), Complex64::new(half + r, 0.0))
    } else {
        let r = 0.5 * (-disc).sqrt();
        (Complex64::new(half, -r), Complex64::new(half, r))
    };
    JacobianEigs {
        discriminant: disc,
        lambda_1: l1,
        lambda_2: l2,
    }
}

pub fn jacobian_eigs(state: &SwState, cell: usize) -> Result<JacobianEigs> {
    if cell >= state.grid.n {
        return Err(Error::InvalidArgument(format!("cell {cell} out of range")));
    }
    check_cell(&state.params, state.zeta[cell], cell)?;
    Ok(point_eigs(&state.params, state.zeta[cell], state.v[cell]))
}

/// `1 - eps^2 rho+ rho- (H+ + H-)^2 v^2 / (rho+ h- + rho- h+)^3`.
pub fn point_indicator(p: &DimensionlessParams, zeta: f64, v: f64) -> f64 {
    let d = coefficients(p, zeta).d;
    let s = p.hbar_plus + p.hbar_minus;
    1.0 - p.eps * p.eps * p.rhobar_plus * p.rhobar_minus * s * s * v * v / (d * d * d)
}

pub fn hyperbolicity_indicator(state: &SwState) -> Result<Vec<f64>> {
    state
        .zeta
        .iter()
        .zip(&state.v)
        .enumerate()
        .map(|(i, (z, v))| {
            check_cell(&state.params, *z, i)?;
            Ok(point_indicator(&state.params, *z, *v))
        })
        .collect()
}

/// Speed `|v|` at which the indicator vanishes for a given elevation.
pub fn critical_velocity(p: &DimensionlessParams, zeta: f64) -> f64 {
    let d = coefficients(p, zeta).d;
    let s = p.hbar_plus + p.hbar_minus;
    let k = p.eps * p.eps * p.rhobar_plus * p.rhobar_minus * s * s;
    if k == 0.0 {
        f64::INFINITY
    } else {
        (d * d * d / k).sqrt()
    }
}

fn max_speed(state: &SwState) -> f64 {
    state
        .zeta
        .iter()
        .zip(&state.v)
        .map(|(z, v)| point_eigs(&state.params, *z, *v).spectral_radius())
        .fold(0.0, f64::max)
}

/// One Rusanov step.
pub fn fv_step(state: &SwState, dt: f64) -> Result<SwState> {
    let n = state.grid.n;
    let p = &state.params;
    let (f1, f2) = flux(state)?;
    let speed: Vec<f64> = (0..n)
        .map(|i| point_eigs(p, state.zeta[i], state.v[i]).spectral_radius())
        .collect();
    let r = dt / state.grid.dx();
    let face = |i: usize| {
        let j = (i + 1) % n;
        let s = speed[i].max(speed[j]);
        (
            0.5 * (f1[i] + f1[j]) - 0.5 * s * (state.zeta[j] - state.zeta[i]),
            0.5 * (f2[i] + f2[j]) - 0.5 * s * (state.v[j] - state.v[i]),
        )
    };
    let faces: Vec<(f64, f64)> = (0..n).map(face).collect();
    let mut zeta = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let left = faces[(i + n - 1) % n];
        let right = faces[i];
        zeta.push(state.zeta[i] - r * (right.0 - left.0));
        v.push(state.v[i] - r * (right.1 - left.1));
    }
    Ok(SwState {
        grid: state.grid,
        zeta,
        v,
        params: state.params,
    })
}

#[derive(Debug, Clone)]
pub struct SwConfig {
    /// Courant number used when `dt` is not fixed.
    pub cfl: f64,
    /// Fixed step; must respect `dt <= 0.5 dx / max |lambda|` at every step.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub cadence: usize,
}

impl SwConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            cfl: 0.45,
            dt: None,
            t_end,
            cadence: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityLossInfo {
    pub time: f64,
    pub indicator: f64,
    pub cell: usize,
}

#[derive(Debug, Clone)]
pub struct SwSeries {
    pub times: Vec<f64>,
    pub states: Vec<SwState>,
    pub indicator_min: Vec<f64>,
    pub loss: Option<HyperbolicityLossInfo>,
}

impl SwSeries {
    pub fn last(&self) -> &SwState {
        self.states.last().expect("series holds the initial state")
    }

    /// Long-format rows `(t, x, zeta, v, indicator_min)`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "zeta", "v", "indicator_min"])?;
        for ((t, s), m) in self.times.iter().zip(&self.states).zip(&self.indicator_min) {
            for ((x, z), v) in s.grid.centres().iter().zip(&s.zeta).zip(&s.v) {
                w.serialize((t, x, z, v, m))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn min_indicator(state: &SwState) -> Result<(f64, usize)> {
    let ind = hyperbolicity_indicator(state)?;
    Ok(ind.iter().enumerate().fold(
        (f64::INFINITY, 0),
        |(m, c), (i, v)| if *v < m { (*v, i) } else { (m, c) },
    ))
}

/// Integrates to `t_end`; a negative indicator stops the run and is recorded.
pub fn run(config: &SwConfig, initial: &SwState) -> Result<SwSeries> {
    if !(config.t_end >= 0.0) || config.cadence == 0 || !(config.cfl > 0.0 && config.cfl <= 0.5) {
        return Err(Error::InvalidConfig(
            "swsw run needs t_end >= 0, cadence >= 1, cfl in (0, 0.5]".into(),
        ));
    }
    let (m0, c0) = min_indicator(initial)?;
    let mut series = SwSeries {
        times: vec![0.0],
        states: vec![initial.clone()],
        indicator_min: vec![m0],
        loss: None,
    };
    if m0 < 0.0 {
        series.loss = Some(HyperbolicityLossInfo {
            time: 0.0,
            indicator: m0,
            cell: c0,
        });
        return Ok(series);
    }
    let dx = initial.grid.dx();
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut step = 0usize;
    while t < config.t_end * (1.0 - 1e-14) {
        let smax = max_speed(&state);
        let limit = 0.5 * dx / smax;
        let mut dt = match config.dt {
            Some(dt) => {
                if dt > limit * (1.0 + 1e-12) {
                    return Err(Error::InvalidConfig(format!(
                        "dt = {dt} exceeds the CFL limit {limit:.4e}"
                    )));
                }
                dt
            }
            None => config.cfl * dx / smax,
        };
        dt = dt.min(config.t_end - t);
        state = fv_step(&state, dt)?;
        t += dt;
        step += 1;
        let (m, c) = min_indicator(&state)?;
        let stop = m < 0.0;
        if stop || step.is_multiple_of(config.cadence) || t >= config.t_end * (1.0 - 1e-14) {
            series.times.push(t);
            series.states.push(state.clone());
            series.indicator_min.push(m);
        }
        if stop {
            series.loss = Some(HyperbolicityLossInfo {
                time: t,
                indicator: m,
                cell: c,
            });
            break;
        }
    }
    Ok(series)
}

/// Turns cell averages centred half a cell to the right of the nodes into
/// point values at the nodes.
fn averages_to_nodes(grid: &PeriodicGrid, u: &[f64]) -> Vec<f64> {
    let half = 0.5 * grid.dx();
    let mut spec = grid.forward(u);
    for (j, c) in spec.iter_mut().enumerate() {
        if j == grid.nyquist_slot() {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let k = grid.wavenumber(j);
        let sinc = if k == 0.0 {
            1.0
        } else {
            (k * half).sin() / (k * half)
        };
        *c *= Complex64::from_polar(1.0 / sinc, -k * half);
    }
    grid.inverse_real(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub mu: f64,
    pub discrepancy: f64,
    pub zeta_discrepancy: f64,
    pub v_discrepancy: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    /// Least-squares slope of `log discrepancy` against `log mu`.
    pub mu_exponent: Option<f64>,
}

impl CompareTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "mu",
            "discrepancy",
            "zeta_discrepancy",
            "v_discrepancy",
            "flagged",
        ])?;
        for r in &self.rows {
            w.serialize((
                r.mu,
                r.discrepancy,
                r.zeta_discrepancy,
                r.v_discrepancy,
                r.flagged,
            ))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CompareSetup {
    /// Spectral grid of the full solver.
    pub n_full: usize,
    pub strip: StripOptions,
    /// Finest cell count of the reference; the next coarser one is used for extrapolation.
    pub n_reference: usize,
    /// Number of equally spaced comparison times in `(0, t_end]`.
    pub samples: usize,
}

impl Default for CompareSetup {
    fn default() -> Self {
        Self {
            n_full: 64,
            strip: StripOptions::with_nz(16).with_tol(1e-11),
            n_reference: 8192,
            samples: 4,
        }
    }
}

/// Shallow-water reference at the comparison times, extrapolated from two
/// resolutions and sampled at the full solver's nodes.
fn reference_solution(
    params: &DimensionlessParams,
    init: &(dyn Fn(f64) -> (f64, f64) + Sync),
    length: f64,
    times: &[f64],
    setup: &CompareSetup,
    nodes: &PeriodicGrid,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let levels = [setup.n_reference / 2, setup.n_reference];
    let runs: Vec<Vec<(Vec<f64>, Vec<f64>)>> = levels
        .par_iter()
        .map(|&n| {
            let grid = CellGrid::new(n, length)?;
            let (zeta, v): (Vec<f64>, Vec<f64>) = grid.centres().iter().map(|x| init(*x)).unzip();
            let mut state = SwState {
                grid,
                zeta,
                v,
                params: *params,
            };
            let mut t = 0.0;
            let mut out = Vec::new();
            for &target in times {
                let seg = SwConfig::new(target - t);
                let s = run(&seg, &state)?;
                if let Some(l) = s.loss {
                    return Err(Error::HyperbolicityLoss {
                        time: t + l.time,
                        indicator: l.indicator,
                        cell: l.cell,
                    });
                }
                state = s.last().clone();
                t = target;
                out.push((state.zeta.clone(), state.v.clone()));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    // Restrict both levels to the full solver's node count, then extrapolate.
    let restrict = |u: &[f64]| {
        let mut w = u.to_vec();
        while w.len() > nodes.len() {
            w = CellGrid::coarsen(&w);
        }
        w
    };
    Ok((0..times.len())
        .map(|k| {
            let pick = |lvl: usize, which: usize| {
                let (z, v) = &runs[lvl][k];
                restrict(if which == 0 { z } else { v })
            };
            let extrap = |which: usize| {
                let (c, f) = (pick(0, which), pick(1, which));
                let e: Vec<f64> = c.iter().zip(&f).map(|(a, b)| 2.0 * b - a).collect();
                averages_to_nodes(nodes, &e)
            };
            (extrap(0), extrap(1))
        })
        .collect())
}

/// Sup-norm gap between the full solver's `(zeta, psi_x)` and the shallow-water
/// solution for each `mu`, with the fitted exponent.
///
/// The periodic full solver keeps each layer's mean velocity at zero while the
/// shallow-water fluxes assume zero net volume flux. Both hold together when
/// `zeta` is even and `v` odd about a common point, so such data should be used.
pub fn compare_with_full(
    base: &DimensionlessParams,
    init: &(dyn Fn(f64) -> (f64, f64) + Sync),
    mu_list: &[f64],
    t_end: f64,
    setup: &CompareSetup,
) -> Result<CompareTable> {
    if !(t_end > 0.0) || setup.samples == 0 {
        return Err(Error::InvalidArgument(
            "comparison needs t_end > 0 and samples >= 1".into(),
        ));
    }
    let grid = PeriodicGrid::standard(setup.n_full)?;
    let length = grid.length();
    let times: Vec<f64> = (1..=setup.samples)
        .map(|i| t_end * i as f64 / setup.samples as f64)
        .collect();
    let rows: Vec<CompareRow> = mu_list
        .par_iter()
        .map(|&mu| -> Result<CompareRow> {
            let params = base.with_mu(mu)?;
            let sw = reference_solution(&params, init, length, &times, setup, &grid);
            let (zeta, v): (Vec<f64>, Vec<f64>) = grid.nodes().iter().map(|x| init(*x)).unzip();
            let vp = grid.project_range(&v);
            // psi_x = v with psi mean-free
            let psi = grid.apply_multiplier(
                |k| if k == 0.0 { 0.0 } else { -1.0 / (k * k) },
                &grid.derivative(&vp),
            )?;
            let full = InterfaceState::new(grid.clone(), zeta, psi, params)?;
            let cap = cfl_cap(&params, &grid);
            let spacing = times[0];
            let steps = (spacing / cap).ceil();
            let mut cfg = EvolutionConfig::new(spacing / steps, t_end);
            cfg.cadence = steps as usize;
            cfg.strip = setup.strip;
            let series = run_full(&cfg, &full);
            let (sw, series) = match (sw, series) {
                (Ok(a), Ok(b)) if b.breakdown.is_none() => (a, b),
                _ => {
                    return Ok(CompareRow {
                        mu,
                        discrepancy: f64::NAN,
                        zeta_discrepancy: f64::NAN,
                        v_discrepancy: f64::NAN,
                        flagged: true,
                    })
                }
            };
            let (mut dz, mut dv) = (0.0f64, 0.0f64);
            for (k, (zr, vr)) in sw.iter().enumerate() {
                let s = &series.snapshots[k + 1];
                let psi_x = grid.derivative(&s.psi);
                for i in 0..grid.len() {
                    dz = dz.max((s.zeta[i] - zr[i]).abs());
                    dv = dv.max((psi_x[i] - vr[i]).abs());
                }
            }
            Ok(CompareRow {
                mu,
                discrepancy: dz.max(dv),
                zeta_discrepancy: dz,
                v_discrepancy: dv,
                flagged: false,
            })
        })
        .collect::<Result<_>>()?;
    let good: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.flagged && r.discrepancy > 0.0)
        .map(|r| (r.mu, r.discrepancy))
        .collect();
    let mu_exponent = if good.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = good.into_iter().unzip();
        Some(crate::linalg::loglog_slope(&x, &y))
    } else {
        None
    };
    Ok(CompareTable { rows, mu_exponent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::NondimInputs;

    fn params(rho: f64, ratio: f64, eps: f64) -> DimensionlessParams {
        DimensionlessParams::from_nondim(&NondimInputs {
            rhobar_plus: rho,
            depth_ratio: ratio,
            eps,
            mu: 0.01,
            bond: f64::INFINITY,
        })
        .unwrap()
    }

    #[test]
    fn rest_speeds_are_unit() {
        for (rho, ratio) in [(0.6, 1.0), (0.9, 0.3), (0.51, 4.0)] {
            let e = point_eigs(&params(rho, ratio, 0.4), 0.0, 0.0);
            assert!((e.lambda_1.re + 1.0).abs() < 1e-12);
            assert!((e.lambda_2.re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let p = params(0.7, 1.6, 0.5);
        for z in [-0.4, 0.0, 0.3] {
            let h = 1e-6;
            let (c, up, dn) = (
                coefficients(&p, z),
                coefficients(&p, z + h),
                coefficients(&p, z - h),
            );
            assert!((c.da - (up.a - dn.a) / (2.0 * h)).abs() < 1e-7);
            assert!((c.db - (up.b - dn.b) / (2.0 * h)).abs() < 1e-7);
        }
    }

    #[test]
    fn indicator_root_is_discriminant_root() {
        let p = params(0.6, 1.4, 0.5);
        for z in [-0.5, 0.0, 0.7] {
            let vc = critical_velocity(&p, z);
            let e = point_eigs(&p, z, vc);
            let scale = 4.0 * coefficients(&p, z).a;
            assert!(e.discriminant.abs() / scale < 1e-9, "{}", e.discriminant);
            assert!(point_indicator(&p, z, vc).abs() < 1e-12);
            for f in [0.5, 1.5] {
                let sign_i = point_indicator(&p, z, f * vc) > 0.0;
                assert_eq!(sign_i, point_eigs(&p, z, f * vc).is_real());
            }
        }
    }

    #[test]
    fn one_layer_limit() {
        let p = params(1.0, 1.0, 0.3);
        for (z, v) in [(0.2, 0.4), (-0.5, -1.0)] {
            let (f1, f2) = point_flux(&p, z, v);
            assert!((f1 - (1.0 + 0.3 * z) * v).abs() < 1e-14);
            assert!((f2 - (z + 0.15 * v * v)).abs() < 1e-14);
            assert_eq!(point_indicator(&p, z, v), 1.0);
            assert!(point_eigs(&p, z, v).is_real());
        }
    }

    #[test]
    fn constant_state_is_fixed() {
        let p = params(0.6, 1.0, 0.5);
        let s = SwState {
            grid: CellGrid::new(16, 1.0).unwrap(),
            zeta: vec![0.2; 16],
            v: vec![0.1; 16],
            params: p,
        };
        let next = fv_step(&s, 0.01).unwrap();
        assert!(next.zeta.iter().all(|z| (z - 0.2).abs() < 1e-15));
        assert!(next.v.iter().all(|v| (v - 0.1).abs() < 1e-15));
    }

    #[test]
    fn violating_data_is_refused() {
        let p = params(0.6, 1.0, 0.5);
        let vc = critical_velocity(&p, 0.0);
        let s = SwState {
            grid: CellGrid::new(8, 1.0).unwrap(),
            zeta: vec![0.0; 8],
            v: vec![1.2 * vc; 8],
            params: p,
        };
        let series = run(&SwConfig::new(1.0), &s).unwrap();
        assert_eq!(series.loss.unwrap().time, 0.0);
        assert_eq!(series.states.len(), 1);
    }
}
