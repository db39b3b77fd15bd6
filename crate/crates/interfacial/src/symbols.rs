//! Symbols with tail for the layer operators and their ratios, plus the
//! harness measuring how well the symbolic operators approximate the exact ones.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{gauss_legendre, loglog_slope};
use crate::spectral::{apply_symbol, PeriodicGrid, SymbolFn};
use crate::strip::{build_trivial_diffeo, dn_apply, Layer, StripOptions};
use crate::two_fluid::TwoFluidOps;
use crate::units::{DimensionlessParams, NondimInputs};

/// `arctan(y) / y` with its removable singularity.
pub fn arctan_ratio(y: f64) -> f64 {
    if y.abs() < 1e-6 {
        1.0 - y * y / 3.0
    } else {
        y.atan() / y
    }
}

fn layer_eps(p: &DimensionlessParams, layer: Layer) -> f64 {
    match layer {
        Layer::Lower => p.eps_plus,
        Layer::Upper => p.eps_minus,
    }
}

fn layer_mu(p: &DimensionlessParams, layer: Layer) -> f64 {
    match layer {
        Layer::Lower => p.mu_plus,
        Layer::Upper => p.mu_minus,
    }
}

/// Tail symbol in one dimension, closed form.
pub fn t_closed(p: &DimensionlessParams, layer: Layer, zeta: f64, zeta_x: f64, xi: f64) -> f64 {
    let depth = 1.0 + layer.sign() * layer_eps(p, layer) * zeta;
    let y = p.eps * p.mu.sqrt() * zeta_x;
    depth * arctan_ratio(y) * xi.abs()
}

/// Tail symbol from its vertical-integral definition, valid in one or two
/// horizontal dimensions (`grad` and `xi` are 2-vectors; use zero second
/// components for `d = 1`).
pub fn t_quadrature(
    p: &DimensionlessParams,
    layer: Layer,
    zeta: f64,
    grad: [f64; 2],
    xi: [f64; 2],
    nodes: usize,
) -> f64 {
    let depth = 1.0 + layer.sign() * layer_eps(p, layer) * zeta;
    let em = p.eps * p.eps * p.mu;
    let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
    let g2 = grad[0] * grad[0] + grad[1] * grad[1];
    let cross = grad[0] * xi[0] + grad[1] * xi[1];
    let (zs, ws) = gauss_legendre(nodes, -1.0, 0.0);
    let integral: f64 = zs
        .iter()
        .zip(&ws)
        .map(|(z, w)| {
            let s2 = (z + 1.0) * (z + 1.0);
            w * (xi2 + em * s2 * (g2 * xi2 - cross * cross)).sqrt() / (1.0 + em * s2 * g2)
        })
        .sum();
    depth * integral
}

/// Unsigned `S = sqrt(mu_l) g tanh(sqrt(mu_l) t)`, with `g = |xi|` in one dimension.
pub fn s_symbol(p: &DimensionlessParams, layer: Layer, zeta: f64, zeta_x: f64, xi: f64) -> f64 {
    let sm = layer_mu(p, layer).sqrt();
    sm * xi.abs() * (sm * t_closed(p, layer, zeta, zeta_x, xi)).tanh()
}

/// `S+/S-`, continuous at `xi = 0`.
pub fn s_ratio(p: &DimensionlessParams, zeta: f64, zeta_x: f64, xi: f64) -> f64 {
    if xi == 0.0 {
        let tp = t_closed(p, Layer::Lower, zeta, zeta_x, 1.0);
        let tm = t_closed(p, Layer::Upper, zeta, zeta_x, 1.0);
        return p.mu_plus * tp / (p.mu_minus * tm);
    }
    s_symbol(p, Layer::Lower, zeta, zeta_x, xi) / s_symbol(p, Layer::Upper, zeta, zeta_x, xi)
}

/// Zeroth-order symbol of `J`.
pub fn sj_symbol(p: &DimensionlessParams, zeta: f64, zeta_x: f64, xi: f64) -> f64 {
    p.rhobar_plus + p.rhobar_minus * p.hbar_minus / p.hbar_plus * s_ratio(p, zeta, zeta_x, xi)
}

/// Symbol of `Gt`.
pub fn tilde_s_symbol(p: &DimensionlessParams, zeta: f64, zeta_x: f64, xi: f64) -> f64 {
    p.rhobar_minus * s_symbol(p, Layer::Lower, zeta, zeta_x, xi) / p.hbar_plus
        + p.rhobar_plus * s_symbol(p, Layer::Upper, zeta, zeta_x, xi) / p.hbar_minus
}

/// `P^2 / S~` with `P^2 = xi^2 / (1 + sqrt(mu) |xi|)`, continuous at `xi = 0`.
pub fn p2_over_tilde_s(p: &DimensionlessParams, zeta: f64, zeta_x: f64, xi: f64) -> f64 {
    if xi == 0.0 {
        let lp = p.mu_plus * t_closed(p, Layer::Lower, zeta, zeta_x, 1.0);
        let lm = p.mu_minus * t_closed(p, Layer::Upper, zeta, zeta_x, 1.0);
        return 1.0 / (p.rhobar_minus * lp / p.hbar_plus + p.rhobar_plus * lm / p.hbar_minus);
    }
    xi * xi / (1.0 + p.mu.sqrt() * xi.abs()) / tilde_s_symbol(p, zeta, zeta_x, xi)
}

/// Symbols sampled on a grid: `x` arguments are mapped to the nearest node.
#[derive(Debug, Clone)]
pub struct TailSymbols {
    grid: PeriodicGrid,
    params: DimensionlessParams,
    zeta: Arc<Vec<f64>>,
    zeta_x: Arc<Vec<f64>>,
}

impl TailSymbols {
    pub fn new(grid: &PeriodicGrid, zeta: &[f64], params: &DimensionlessParams) -> Self {
        Self {
            grid: grid.clone(),
            params: *params,
            zeta: Arc::new(zeta.to_vec()),
            zeta_x: Arc::new(grid.derivative(zeta)),
        }
    }

    fn node(&self, x: f64) -> usize {
        let n = self.grid.len();
        let r = (x / self.grid.dx()).round() as i64;
        r.rem_euclid(n as i64) as usize
    }

    /// `g(x, xi) = |xi|` in one dimension.
    pub fn eval_g(&self, _x: f64, xi: f64) -> f64 {
        xi.abs()
    }

    pub fn eval_t(&self, x: f64, xi: f64, layer: Layer) -> f64 {
        let i = self.node(x);
        t_closed(&self.params, layer, self.zeta[i], self.zeta_x[i], xi)
    }

    pub fn eval_s(&self, x: f64, xi: f64, layer: Layer) -> f64 {
        let i = self.node(x);
        s_symbol(&self.params, layer, self.zeta[i], self.zeta_x[i], xi)
    }

    fn make(
        &self,
        name: &str,
        f: impl Fn(&DimensionlessParams, f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> SymbolFn {
        let (zeta, zx, p) = (self.zeta.clone(), self.zeta_x.clone(), self.params);
        let (dx, n) = (self.grid.dx(), self.grid.len() as i64);
        SymbolFn::new(name, move |x, xi| {
            let i = ((x / dx).round() as i64).rem_euclid(n) as usize;
            f(&p, zeta[i], zx[i], xi)
        })
        .with_params(self.params)
    }

    pub fn s_plus_symbol(&self) -> SymbolFn {
        self.make("S+", |p, z, zx, xi| s_symbol(p, Layer::Lower, z, zx, xi))
    }

    pub fn s_minus_symbol(&self) -> SymbolFn {
        self.make("S-", |p, z, zx, xi| s_symbol(p, Layer::Upper, z, zx, xi))
    }

    /// Principal part without the tail, `sqrt(mu+) |xi|`.
    pub fn tailless_plus_symbol(&self) -> SymbolFn {
        self.make("sqrt(mu+) g", |p, _, _, xi| p.mu_plus.sqrt() * xi.abs())
    }

    pub fn sj_inverse_symbol(&self) -> SymbolFn {
        self.make("1/S_J", |p, z, zx, xi| 1.0 / sj_symbol(p, z, zx, xi))
    }

    pub fn ratio_symbol(&self, kind: RatioKind) -> SymbolFn {
        match kind {
            RatioKind::PlusOverMinus => self.make("S+/S-", s_ratio),
            RatioKind::PlusOverMinusSj => self.make("S+/(S- S_J)", |p, z, zx, xi| {
                s_ratio(p, z, zx, xi) / sj_symbol(p, z, zx, xi)
            }),
            RatioKind::P2OverTildeS => self.make("P^2/S~", p2_over_tilde_s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioKind {
    /// `(G-)^{-1} G+` against `-Op(S+/S-)`.
    PlusOverMinus,
    /// `(G-)^{-1} G` against `-(1/H+) Op(S+/(S- S_J))`.
    PlusOverMinusSj,
    /// `P^2 Gt^{-1} d/dx` against `Op(P^2/S~) d/dx`.
    P2OverTildeS,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioCheck {
    pub kind: RatioKind,
    /// `Hdot_mu^{1/2}` norm of exact minus symbolic.
    pub discrepancy: f64,
    /// Same norm of the exact image.
    pub reference_norm: f64,
    /// `|f|_{H^{-1/2}}`.
    pub input_norm: f64,
    /// `eps mu^{-1/4}`, the small factor expected in front of the input norm.
    pub predicted_factor: f64,
}

pub fn ratio_symbol_error(ops: &TwoFluidOps, f: &[f64], kind: RatioKind) -> Result<RatioCheck> {
    let grid = ops.grid();
    let p = *ops.params();
    let sym = TailSymbols::new(grid, ops.zeta(), &p);
    let (exact, approx) = match kind {
        RatioKind::PlusOverMinus => {
            let e = ops.neumann_upper(&ops.dn_lower(f)?)?;
            let a: Vec<f64> = apply_symbol(grid, &sym.ratio_symbol(kind), f)?
                .into_iter()
                .map(|v| -v)
                .collect();
            (e, a)
        }
        RatioKind::PlusOverMinusSj => {
            let e = ops.neumann_upper(&ops.apply_g(f)?)?;
            let a: Vec<f64> = apply_symbol(grid, &sym.ratio_symbol(kind), f)?
                .into_iter()
                .map(|v| -v / p.hbar_plus)
                .collect();
            (e, a)
        }
        RatioKind::P2OverTildeS => {
            let fx = grid.derivative(f);
            let smu = p.mu.sqrt();
            let inv = ops.invert_tilde_g(&fx)?;
            let e = grid.apply_multiplier(|k| k * k / (1.0 + smu * k.abs()), &inv)?;
            let a = apply_symbol(grid, &sym.ratio_symbol(kind), &fx)?;
            (e, a)
        }
    };
    let (exact, approx) = (grid.project_range(&exact), grid.project_range(&approx));
    let diff: Vec<f64> = exact.iter().zip(&approx).map(|(a, b)| a - b).collect();
    Ok(RatioCheck {
        kind,
        discrepancy: grid.norm_hdot_mu(&diff, 0.0, p.mu),
        reference_norm: grid.norm_hdot_mu(&exact, 0.0, p.mu),
        input_norm: grid.norm_sobolev(f, -0.5),
        predicted_factor: p.eps * p.mu.powf(-0.25),
    })
}

/// One sweep point of the tail harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailRow {
    pub eps: f64,
    pub mu: f64,
    /// `|G+ psi - Op(S+) psi|_{H^s}`.
    pub err_hs: f64,
    /// Same difference in `H^{s+1/2}`.
    pub err_hs_half: f64,
    /// `|psi|_{Hdot_mu^{s+1/2}}`.
    pub norm_psi: f64,
    /// `err_hs_half / norm_psi`.
    pub ratio: f64,
    /// `|G+ psi - sqrt(mu+)|D| psi| / |G+ psi|` for the symbol without tail.
    pub tailless_ratio: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
    pub eps_exponent: Option<f64>,
    pub mu_exponent: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct TailSweepSetup {
    pub rhobar_plus: f64,
    pub depth_ratio: f64,
    pub s: f64,
}

impl Default for TailSweepSetup {
    fn default() -> Self {
        Self {
            rhobar_plus: 0.6,
            depth_ratio: 1.0,
            s: 0.0,
        }
    }
}

fn tail_point(
    grid: &PeriodicGrid,
    zeta: &[f64],
    psi: &[f64],
    eps: f64,
    mu: f64,
    setup: &TailSweepSetup,
    opts: &StripOptions,
) -> Result<TailRow> {
    let p = DimensionlessParams::from_nondim(&NondimInputs {
        rhobar_plus: setup.rhobar_plus,
        depth_ratio: setup.depth_ratio,
        eps,
        mu,
        bond: f64::INFINITY,
    })?;
    let d = build_trivial_diffeo(grid, zeta, p.eps_plus, p.mu_plus, Layer::Lower)?;
    let exact = dn_apply(&d, psi, opts)?;
    let sym = TailSymbols::new(grid, zeta, &p);
    let approx = grid.project_range(&apply_symbol(grid, &sym.s_plus_symbol(), psi)?);
    let bare = grid.project_range(&apply_symbol(grid, &sym.tailless_plus_symbol(), psi)?);
    let diff: Vec<f64> = exact.iter().zip(&approx).map(|(a, b)| a - b).collect();
    let dbare: Vec<f64> = exact.iter().zip(&bare).map(|(a, b)| a - b).collect();
    let err_hs = grid.norm_sobolev(&diff, setup.s);
    let err_hs_half = grid.norm_sobolev(&diff, setup.s + 0.5);
    let norm_psi = grid.norm_hdot_mu(psi, setup.s, mu);
    Ok(TailRow {
        eps,
        mu,
        err_hs,
        err_hs_half,
        norm_psi,
        ratio: err_hs_half / norm_psi,
        tailless_ratio: grid.l2_norm(&dbare) / grid.l2_norm(&exact),
        error: None,
    })
}

fn modal(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    v.iter()
        .copied()
        .max_by_key(|a| v.iter().filter(|b| *b == a).count())
}

/// Compares the exact lower-layer operator with `Op(S+)` over `(eps, mu)` pairs.
/// Failed points are flagged and the sweep continues.
pub fn tail_error_report(
    grid: &PeriodicGrid,
    zeta: &[f64],
    psi: &[f64],
    sweep: &[(f64, f64)],
    setup: &TailSweepSetup,
    opts: &StripOptions,
) -> TailReport {
    let rows: Vec<TailRow> = sweep
        .par_iter()
        .map(|&(eps, mu)| {
            tail_point(grid, zeta, psi, eps, mu, setup, opts).unwrap_or_else(|e| TailRow {
                eps,
                mu,
                err_hs: f64::NAN,
                err_hs_half: f64::NAN,
                norm_psi: f64::NAN,
                ratio: f64::NAN,
                tailless_ratio: f64::NAN,
                error: Some(e.to_string()),
            })
        })
        .collect();
    let ok: Vec<&TailRow> = rows
        .iter()
        .filter(|r| r.error.is_none() && r.eps > 0.0)
        .collect();
    let fit = |sel: Vec<&&TailRow>, by_eps: bool| {
        if sel.len() < 2 {
            return None;
        }
        let xs: Vec<f64> = sel
            .iter()
            .map(|r| if by_eps { r.eps } else { r.mu })
            .collect();
        let ys: Vec<f64> = sel.iter().map(|r| r.err_hs).collect();
        let s = loglog_slope(&xs, &ys);
        s.is_finite().then_some(s)
    };
    let eps_exponent = modal(ok.iter().map(|r| r.mu))
        .and_then(|m| fit(ok.iter().filter(|r| r.mu == m).collect(), true));
    let mu_exponent = modal(ok.iter().map(|r| r.eps))
        .and_then(|e| fit(ok.iter().filter(|r| r.eps == e).collect(), false));
    TailReport {
        rows,
        eps_exponent,
        mu_exponent,
    }
}
