//! Composed two-fluid operators built from the single-layer strip solvers.
//!
//! Sign conventions: `G+` (lower layer) is nonnegative and `G-` (upper layer)
//! nonpositive. The combination `Gt = rho-/H+ G+ - rho+/H- G-` is nonnegative,
//! and `E V = -d/dx Gt^{-1} d/dx V` so that `(E V, V) = (Gt^{-1} V_x, V_x) >= 0`.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::gmres;
use crate::spectral::{apply_symbol, PeriodicGrid};
use crate::strip::{
    build_trivial_diffeo, dn_apply_with, solve_neumann_with, Block, CoupledSystem, Layer,
    LayerOperator, StripOptions,
};
use crate::symbols::TailSymbols;
use crate::units::DimensionlessParams;

/// Sampled interface elevation and potential jump on a periodic grid.
#[derive(Debug, Clone)]
pub struct InterfaceState {
    pub grid: PeriodicGrid,
    pub zeta: Vec<f64>,
    pub psi: Vec<f64>,
    pub params: DimensionlessParams,
}

impl InterfaceState {
    pub fn new(
        grid: PeriodicGrid,
        zeta: Vec<f64>,
        psi: Vec<f64>,
        params: DimensionlessParams,
    ) -> Result<Self> {
        for (name, f) in [("zeta", &zeta), ("psi", &psi)] {
            if f.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "{name} has {} samples, grid has {}",
                    f.len(),
                    grid.len()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("{name} has non-finite samples")));
            }
        }
        let s = Self {
            grid,
            zeta,
            psi,
            params,
        };
        s.check_depths()?;
        Ok(s)
    }

    pub fn rest(grid: PeriodicGrid, params: DimensionlessParams) -> Self {
        let n = grid.len();
        Self {
            grid,
            zeta: vec![0.0; n],
            psi: vec![0.0; n],
            params,
        }
    }

    pub fn check_depths(&self) -> Result<()> {
        let p = &self.params;
        for (eps, layer) in [(p.eps_plus, Layer::Lower), (p.eps_minus, Layer::Upper)] {
            build_trivial_diffeo(&self.grid, &self.zeta, eps, 1.0, layer)?;
        }
        Ok(())
    }
}

/// Interface traces produced by the transmission solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceBundle {
    pub psi_plus: Vec<f64>,
    pub psi_minus: Vec<f64>,
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub w_plus: Vec<f64>,
    pub w_minus: Vec<f64>,
    /// Unit-depth `G+ psi+`.
    pub dn_plus: Vec<f64>,
    /// Unit-depth `G- psi-`.
    pub dn_minus: Vec<f64>,
}

impl TraceBundle {
    pub fn zeros(n: usize) -> Self {
        let z = vec![0.0; n];
        Self {
            psi_plus: z.clone(),
            psi_minus: z.clone(),
            v_plus: z.clone(),
            v_minus: z.clone(),
            w_plus: z.clone(),
            w_minus: z.clone(),
            dn_plus: z.clone(),
            dn_minus: z,
        }
    }

    /// `V+ - V-`.
    pub fn jump_v(&self) -> Vec<f64> {
        self.v_plus
            .iter()
            .zip(&self.v_minus)
            .map(|(a, b)| a - b)
            .collect()
    }

    /// `(V+ + V-) / 2`.
    pub fn average_v(&self) -> Vec<f64> {
        self.v_plus
            .iter()
            .zip(&self.v_minus)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

/// Reusable operator set for one interface shape.
#[derive(Debug, Clone)]
pub struct TwoFluidOps {
    grid: PeriodicGrid,
    params: DimensionlessParams,
    zeta: Vec<f64>,
    zeta_x: Vec<f64>,
    lower: LayerOperator,
    upper: LayerOperator,
    opts: StripOptions,
}

impl TwoFluidOps {
    pub fn new(
        grid: &PeriodicGrid,
        zeta: &[f64],
        params: &DimensionlessParams,
        opts: &StripOptions,
    ) -> Result<Self> {
        let dl = build_trivial_diffeo(grid, zeta, params.eps_plus, params.mu_plus, Layer::Lower)?;
        let du = build_trivial_diffeo(grid, zeta, params.eps_minus, params.mu_minus, Layer::Upper)?;
        Ok(Self {
            grid: grid.clone(),
            params: *params,
            zeta: zeta.to_vec(),
            zeta_x: dl.zeta_x.clone(),
            lower: LayerOperator::new(&dl, opts.nz)?,
            upper: LayerOperator::new(&du, opts.nz)?,
            opts: *opts,
        })
    }

    pub fn for_state(state: &InterfaceState, opts: &StripOptions) -> Result<Self> {
        Self::new(&state.grid, &state.zeta, &state.params, opts)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn params(&self) -> &DimensionlessParams {
        &self.params
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    pub fn zeta_x(&self) -> &[f64] {
        &self.zeta_x
    }

    pub fn options(&self) -> &StripOptions {
        &self.opts
    }

    fn cap(&self) -> usize {
        self.opts
            .max_iter
            .unwrap_or(10 * self.grid.len() * self.opts.nz)
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "field has {} samples, grid has {}",
                u.len(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// Unit-depth `G+ u`.
    pub fn dn_lower(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        dn_apply_with(&self.lower, u, &self.opts)
    }

    /// Unit-depth `G- u`.
    pub fn dn_upper(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        dn_apply_with(&self.upper, u, &self.opts)
    }

    /// `(G-)^{-1} g`, gauged to zero mean.
    pub fn neumann_upper(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.check(g)?;
        Ok(solve_neumann_with(&self.upper, g, &self.opts)?
            .trace()
            .to_vec())
    }

    /// `J u = rho+ u - rho- (H-/H+) (G-)^{-1} G+ u`.
    pub fn apply_j(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        let p = &self.params;
        if p.rhobar_minus == 0.0 {
            return Ok(u.iter().map(|v| p.rhobar_plus * v).collect());
        }
        let gp = self.dn_lower(u)?;
        let q = self.neumann_upper(&gp)?;
        let f = p.rhobar_minus * p.hbar_minus / p.hbar_plus;
        Ok(u.iter()
            .zip(&q)
            .map(|(a, b)| p.rhobar_plus * a - f * b)
            .collect())
    }

    /// Flat symbol of `J` at wavenumber `k`.
    pub fn j_flat_factor(params: &DimensionlessParams, k: f64) -> f64 {
        let (sp, sm) = (params.mu_plus.sqrt(), params.mu_minus.sqrt());
        let ratio = if k == 0.0 {
            params.mu_plus / params.mu_minus
        } else {
            (sp * (sp * k.abs()).tanh()) / (sm * (sm * k.abs()).tanh())
        };
        params.rhobar_plus + params.rhobar_minus * params.hbar_minus / params.hbar_plus * ratio
    }

    /// `J^{-1} psi` by preconditioned GMRES on the complement of the gauge modes.
    pub fn invert_j(&self, psi: &[f64]) -> Result<Vec<f64>> {
        self.check(psi)?;
        let p = self.params;
        if p.rhobar_minus == 0.0 {
            return Ok(psi.iter().map(|v| v / p.rhobar_plus).collect());
        }
        let grid = &self.grid;
        let (m, q) = grid.gauge_components(psi);
        let b = grid.project_range(psi);
        let inner = Self {
            opts: self.opts.with_tol(self.opts.tol.min(1e-12)),
            ..self.clone()
        };
        let steep = p.eps * self.zeta.iter().fold(0.0f64, |a, v| a.max(v.abs())) > 0.5;
        let symbolic = if steep {
            Some(TailSymbols::new(grid, &self.zeta, &p).sj_inverse_symbol())
        } else {
            None
        };
        let precond = |r: &[f64]| -> Result<Vec<f64>> {
            let out = match &symbolic {
                Some(s) => apply_symbol(grid, s, r)?,
                None => grid.apply_multiplier(|k| 1.0 / Self::j_flat_factor(&p, k), r)?,
            };
            Ok(grid.project_range(&out))
        };
        let apply = |u: &[f64]| -> Result<Vec<f64>> { Ok(grid.project_range(&inner.apply_j(u)?)) };
        let out = gmres(apply, precond, &b, 1e-11, 40, 400)?;
        Ok(out
            .x
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let alt = if i % 2 == 0 { 1.0 } else { -1.0 };
                v + (m + q * alt) / p.rhobar_plus
            })
            .collect())
    }

    /// Transmission solve; returns the traces and the raw solver state for warm starts.
    pub fn transmission_warm(
        &self,
        psi: &[f64],
        guess: Option<&[f64]>,
    ) -> Result<(TraceBundle, Vec<f64>)> {
        self.check(psi)?;
        let p = self.params;
        let grid = &self.grid;
        let (psi_plus, psi_minus, dn_plus, dn_minus, raw) = if p.rhobar_minus == 0.0 {
            let dn_plus = self.dn_lower(psi)?;
            let r = p.hbar_minus / p.hbar_plus;
            let dn_minus: Vec<f64> = dn_plus.iter().map(|v| r * v).collect();
            let psi_minus = self.neumann_upper(&dn_minus)?;
            (psi.to_vec(), psi_minus, dn_plus, dn_minus, Vec::new())
        } else {
            let neg: Vec<f64> = psi.iter().map(|v| -v).collect();
            let sys = CoupledSystem::new(
                vec![
                    Block {
                        op: &self.lower,
                        weight: p.rhobar_plus / p.hbar_plus,
                        coupling: p.rhobar_minus,
                        offset: Some(psi),
                    },
                    Block {
                        op: &self.upper,
                        weight: p.rhobar_minus / p.hbar_minus,
                        coupling: p.rhobar_plus,
                        offset: Some(&neg),
                    },
                ],
                true,
            )?;
            let sol = sys.solve(None, guess, self.opts.tol, self.cap())?;
            let mut pp: Vec<f64> = psi
                .iter()
                .zip(&sol.v)
                .map(|(a, v)| a + p.rhobar_minus * v)
                .collect();
            let mut pm: Vec<f64> = psi
                .iter()
                .zip(&sol.v)
                .map(|(a, v)| p.rhobar_plus * v - a)
                .collect();
            let (m, q) = grid.gauge_components(&pm);
            let f = p.rhobar_minus / p.rhobar_plus;
            for (i, (a, b)) in pp.iter_mut().zip(pm.iter_mut()).enumerate() {
                let g = m + if i % 2 == 0 { q } else { -q };
                *b -= g;
                *a -= f * g;
            }
            let dn_plus = grid.project_range(&sol.fluxes[0]);
            let dn_minus: Vec<f64> = grid
                .project_range(&sol.fluxes[1])
                .iter()
                .map(|v| -v)
                .collect();
            (pp, pm, dn_plus, dn_minus, sol.raw)
        };
        let (eps, mu) = (p.eps, p.mu);
        let trace = |psi_l: &[f64], dn: &[f64], hbar: f64| {
            let px = grid.derivative(psi_l);
            let w: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let zx = self.zeta_x[i];
                    (dn[i] / hbar + eps * mu * zx * px[i]) / (1.0 + eps * eps * mu * zx * zx)
                })
                .collect();
            let v: Vec<f64> = (0..grid.len())
                .map(|i| px[i] - eps * w[i] * self.zeta_x[i])
                .collect();
            (v, w)
        };
        let (v_plus, w_plus) = trace(&psi_plus, &dn_plus, p.hbar_plus);
        let (v_minus, w_minus) = trace(&psi_minus, &dn_minus, p.hbar_minus);
        Ok((
            TraceBundle {
                psi_plus,
                psi_minus,
                v_plus,
                v_minus,
                w_plus,
                w_minus,
                dn_plus,
                dn_minus,
            },
            raw,
        ))
    }

    pub fn transmission(&self, psi: &[f64]) -> Result<TraceBundle> {
        Ok(self.transmission_warm(psi, None)?.0)
    }

    /// `(1/H+) G+ psi+`.
    pub fn apply_g(&self, psi: &[f64]) -> Result<Vec<f64>> {
        let t = self.transmission(psi)?;
        Ok(t.dn_plus
            .iter()
            .map(|v| v / self.params.hbar_plus)
            .collect())
    }

    /// Same operator through `J^{-1}`, an independent route used for cross-checks.
    pub fn apply_g_via_j(&self, psi: &[f64]) -> Result<Vec<f64>> {
        let pp = self.invert_j(psi)?;
        let g = self.dn_lower(&pp)?;
        Ok(g.iter().map(|v| v / self.params.hbar_plus).collect())
    }

    /// Flat multiplier of `G` at wavenumber `k`.
    pub fn g_flat_symbol(params: &DimensionlessParams, k: f64) -> f64 {
        let k = k.abs();
        if k == 0.0 {
            return 0.0;
        }
        let (tp, tm) = (
            (params.mu_plus.sqrt() * k).tanh(),
            (params.mu_minus.sqrt() * k).tanh(),
        );
        params.mu.sqrt() * k * tp * tm / (params.rhobar_plus * tm + params.rhobar_minus * tp)
    }

    /// Flat multiplier of `Gt` at wavenumber `k`.
    pub fn tilde_g_flat_symbol(params: &DimensionlessParams, k: f64) -> f64 {
        let x = params.mu.sqrt() * k.abs();
        x * (params.rhobar_plus * (params.hbar_minus * x).tanh()
            + params.rhobar_minus * (params.hbar_plus * x).tanh())
    }

    /// `Gt u = rho-/H+ G+ u - rho+/H- G- u`.
    pub fn apply_tilde_g(&self, u: &[f64]) -> Result<Vec<f64>> {
        let p = &self.params;
        let gm = self.dn_upper(u)?;
        let gp = if p.rhobar_minus > 0.0 {
            self.dn_lower(u)?
        } else {
            vec![0.0; u.len()]
        };
        Ok(gp
            .iter()
            .zip(&gm)
            .map(|(a, b)| p.rhobar_minus / p.hbar_plus * a - p.rhobar_plus / p.hbar_minus * b)
            .collect())
    }

    /// `Gt^{-1} f` for mean-zero `f`, gauged to zero mean.
    pub fn invert_tilde_g(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        let grid = &self.grid;
        let mean = grid.mean(f);
        let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if mean.abs() > 1e-8 * scale {
            return Err(Error::IncompatibleData(format!(
                "inverse needs zero-mean data, got mean {mean:.3e}"
            )));
        }
        let src = grid.project_range(f);
        let p = &self.params;
        let mut blocks = Vec::new();
        if p.rhobar_minus > 0.0 {
            blocks.push(Block {
                op: &self.lower,
                weight: p.rhobar_minus / p.hbar_plus,
                coupling: 1.0,
                offset: None,
            });
        }
        blocks.push(Block {
            op: &self.upper,
            weight: p.rhobar_plus / p.hbar_minus,
            coupling: 1.0,
            offset: None,
        });
        let sys = CoupledSystem::new(blocks, true)?;
        let sol = sys.solve(Some(&src), None, self.opts.tol.min(1e-12), self.cap())?;
        Ok(grid.project_range(&sol.v))
    }

    /// `E V = -d/dx Gt^{-1} d/dx V`.
    pub fn apply_e(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let f = self.grid.derivative(v);
        let u = self.invert_tilde_g(&f)?;
        Ok(self.grid.derivative(&u).iter().map(|x| -x).collect())
    }

    /// Flat multiplier of `E`, `k^2 / Gt(k)`.
    pub fn e_flat_symbol(params: &DimensionlessParams, k: f64) -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        k * k / Self::tilde_g_flat_symbol(params, k)
    }
}

pub fn apply_j(state: &InterfaceState, u: &[f64], opts: &StripOptions) -> Result<Vec<f64>> {
    TwoFluidOps::for_state(state, opts)?.apply_j(u)
}

pub fn invert_j(state: &InterfaceState, psi: &[f64], opts: &StripOptions) -> Result<Vec<f64>> {
    TwoFluidOps::for_state(state, opts)?.invert_j(psi)
}

pub fn apply_g(state: &InterfaceState, psi: &[f64], opts: &StripOptions) -> Result<Vec<f64>> {
    TwoFluidOps::for_state(state, opts)?.apply_g(psi)
}

pub fn transmission_solve(state: &InterfaceState, opts: &StripOptions) -> Result<TraceBundle> {
    TwoFluidOps::for_state(state, opts)?.transmission(&state.psi)
}

pub fn apply_tilde_g(state: &InterfaceState, u: &[f64], opts: &StripOptions) -> Result<Vec<f64>> {
    TwoFluidOps::for_state(state, opts)?.apply_tilde_g(u)
}

pub fn invert_tilde_g(state: &InterfaceState, f: &[f64], opts: &StripOptions) -> Result<Vec<f64>> {
    TwoFluidOps::for_state(state, opts)?.invert_tilde_g(f)
}

pub fn apply_e(state: &InterfaceState, v: &[f64], opts: &StripOptions) -> Result<Vec<f64>> {
    TwoFluidOps::for_state(state, opts)?.apply_e(v)
}

/// Flat-case `J` applied through its multiplier.
pub fn apply_j_flat(
    grid: &PeriodicGrid,
    params: &DimensionlessParams,
    u: &[f64],
) -> Result<Vec<f64>> {
    let (m, q) = grid.gauge_components(u);
    let mut spec = grid.forward(u);
    for (j, c) in spec.iter_mut().enumerate() {
        if j == 0 || j == grid.nyquist_slot() {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= TwoFluidOps::j_flat_factor(params, grid.wavenumber(j));
        }
    }
    let out = grid.inverse_real(spec);
    Ok(out
        .iter()
        .enumerate()
        .map(|(i, v)| v + params.rhobar_plus * (m + if i % 2 == 0 { q } else { -q }))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::NondimInputs;

    fn params(rho: f64, ratio: f64, eps: f64, mu: f64) -> DimensionlessParams {
        DimensionlessParams::from_nondim(&NondimInputs {
            rhobar_plus: rho,
            depth_ratio: ratio,
            eps,
            mu,
            bond: 100.0,
        })
        .unwrap()
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().max(1e-300);
        (num / den).sqrt()
    }

    fn setup(eps: f64, rho: f64) -> (PeriodicGrid, TwoFluidOps, Vec<f64>) {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = params(rho, 0.7, eps, 0.5);
        let zeta = g.trig_field(&[(1.0, 0.6, 0.0), (2.0, 0.0, 0.3)]);
        let ops =
            TwoFluidOps::new(&g, &zeta, &p, &StripOptions::with_nz(32).with_tol(1e-12)).unwrap();
        let psi = g.trig_field(&[(1.0, 0.2, 0.8), (3.0, -0.3, 0.1)]);
        (g, ops, psi)
    }

    #[test]
    fn j_of_constant() {
        let (_, ops, _) = setup(0.3, 0.6);
        let out = ops.apply_j(&vec![1.5; 32]).unwrap();
        let dev = out
            .iter()
            .map(|v| (v - 0.6 * 1.5).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-10, "{dev}");
    }

    #[test]
    fn j_water_waves_limit() {
        let (_, ops, psi) = setup(0.3, 1.0);
        assert!(rel(&ops.apply_j(&psi).unwrap(), &psi) < 1e-15);
        assert!(rel(&ops.invert_j(&psi).unwrap(), &psi) < 1e-15);
    }

    #[test]
    fn j_flat_matches_multiplier() {
        let (g, _, psi) = setup(0.0, 0.6);
        let p = params(0.6, 0.7, 0.0, 0.5);
        let ops = TwoFluidOps::new(&g, &vec![0.0; 32], &p, &StripOptions::with_nz(256)).unwrap();
        let a = ops.apply_j(&psi).unwrap();
        let b = apply_j_flat(&g, &p, &psi).unwrap();
        assert!(rel(&a, &b) < 1e-5, "{}", rel(&a, &b));
    }

    #[test]
    fn invert_j_roundtrip() {
        let (_, ops, psi) = setup(0.3, 0.6);
        let mut shifted = psi.clone();
        shifted.iter_mut().for_each(|v| *v += 0.4);
        let u = ops.invert_j(&shifted).unwrap();
        let back = ops.apply_j(&u).unwrap();
        assert!(rel(&back, &shifted) < 1e-9, "{}", rel(&back, &shifted));
    }

    #[test]
    fn transmission_consistency() {
        let (_, ops, psi) = setup(0.3, 0.6);
        let p = *ops.params();
        let t = ops.transmission(&psi).unwrap();
        let rec: Vec<f64> = t
            .psi_plus
            .iter()
            .zip(&t.psi_minus)
            .map(|(a, b)| p.rhobar_plus * a - p.rhobar_minus * b)
            .collect();
        assert!(rel(&rec, &psi) < 1e-10);
        let fp: Vec<f64> = t.dn_plus.iter().map(|v| v / p.hbar_plus).collect();
        let fm: Vec<f64> = t.dn_minus.iter().map(|v| v / p.hbar_minus).collect();
        assert!(rel(&fp, &fm) < 1e-8);
    }

    #[test]
    fn g_routes_agree() {
        let (_, ops, psi) = setup(0.3, 0.6);
        let a = ops.apply_g(&psi).unwrap();
        let b = ops.apply_g_via_j(&psi).unwrap();
        assert!(rel(&a, &b) < 1e-8, "{}", rel(&a, &b));
    }

    #[test]
    fn rest_traces_vanish() {
        let (_, ops, _) = setup(0.3, 0.6);
        let t = ops.transmission(&vec![0.0; 32]).unwrap();
        assert!(t.v_plus.iter().chain(&t.w_minus).all(|v| *v == 0.0));
    }

    #[test]
    fn tilde_g_inverse_pair() {
        let (g, ops, psi) = setup(0.3, 0.6);
        let f = g.project_range(&psi);
        let u = ops.invert_tilde_g(&f).unwrap();
        let back = ops.apply_tilde_g(&u).unwrap();
        assert!(rel(&back, &f) < 1e-9, "{}", rel(&back, &f));
        assert!(g.inner(&ops.apply_tilde_g(&psi).unwrap(), &psi) > 0.0);
        assert!(matches!(
            ops.invert_tilde_g(&vec![1.0; 32]),
            Err(Error::IncompatibleData(_))
        ));
    }

    #[test]
    fn e_is_nonnegative_and_kills_constants() {
        let (g, ops, psi) = setup(0.3, 0.6);
        let e = ops.apply_e(&psi).unwrap();
        assert!(g.inner(&e, &psi) > 0.0);
        let c = ops.apply_e(&vec![2.0; 32]).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn flat_e_diagonal() {
        let g = PeriodicGrid::standard(32).unwrap();
        let p = params(0.6, 0.7, 0.0, 0.5);
        let ops = TwoFluidOps::new(&g, &vec![0.0; 32], &p, &StripOptions::with_nz(256)).unwrap();
        let v = g.trig_field(&[(2.0, 1.0, 0.0)]);
        let e = ops.apply_e(&v).unwrap();
        let expect: Vec<f64> = v
            .iter()
            .map(|x| TwoFluidOps::e_flat_symbol(&p, 2.0) * x)
            .collect();
        assert!(rel(&e, &expect) < 1e-5, "{}", rel(&e, &expect));
    }
}
