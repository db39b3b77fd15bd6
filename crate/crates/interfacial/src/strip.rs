//! Single-layer Dirichlet-Neumann operators by solving the straightened
//! elliptic problem on the unit strip.
//!
//! Each layer is mapped to a reference strip `s in [0, 1]` with `s = 0` on the
//! rigid wall and `s = 1` on the interface. The lower layer uses `z = s - 1`,
//! the upper layer `z = 1 - s`. The discrete operator is the gradient of a
//! quadratic energy (spectral in `x`, midpoint rule per half-cell in `s`), so
//! it is symmetric by construction and the interface flux is read off as the
//! residual of the interface row.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pcg, TridiagFactor};
use crate::spectral::PeriodicGrid;

/// Smallest admissible layer depth factor `1 +- eps zeta`.
pub const MIN_DEPTH_FACTOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    /// Heavier fluid below the interface, `z in [-1, 0]`.
    Lower,
    /// Lighter fluid above the interface, `z in [0, 1]`.
    Upper,
}

impl Layer {
    pub fn sign(self) -> f64 {
        match self {
            Layer::Lower => 1.0,
            Layer::Upper => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripOptions {
    pub nz: usize,
    pub tol: f64,
    /// Defaults to `10 * nx * nz`.
    pub max_iter: Option<usize>,
}

impl Default for StripOptions {
    fn default() -> Self {
        Self {
            nz: 64,
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl StripOptions {
    pub fn with_nz(nz: usize) -> Self {
        Self {
            nz,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn cap(&self, nx: usize) -> usize {
        self.max_iter.unwrap_or(10 * nx * self.nz)
    }
}

/// Trivial straightening diffeomorphism `sigma(x, z) = eps (1 +- z) zeta(x)`.
#[derive(Debug, Clone)]
pub struct DiffeoData {
    pub grid: PeriodicGrid,
    pub zeta: Vec<f64>,
    pub zeta_x: Vec<f64>,
    pub eps_layer: f64,
    pub mu_layer: f64,
    pub layer: Layer,
}

pub fn build_trivial_diffeo(
    grid: &PeriodicGrid,
    zeta: &[f64],
    eps_layer: f64,
    mu_layer: f64,
    layer: Layer,
) -> Result<DiffeoData> {
    if zeta.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "zeta has {} samples, grid has {}",
            zeta.len(),
            grid.len()
        )));
    }
    if !(mu_layer > 0.0 && mu_layer.is_finite()) || !(eps_layer >= 0.0 && eps_layer.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need eps >= 0 and mu > 0, got eps = {eps_layer}, mu = {mu_layer}"
        )));
    }
    if zeta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite interface elevation".into()));
    }
    let sign = layer.sign();
    let (node, min_depth) = zeta
        .iter()
        .map(|z| 1.0 + sign * eps_layer * z)
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, h)| if h < acc.1 { (i, h) } else { acc },
        );
    if min_depth < MIN_DEPTH_FACTOR {
        return Err(Error::DegenerateGeometry { min_depth, node });
    }
    Ok(DiffeoData {
        grid: grid.clone(),
        zeta: zeta.to_vec(),
        zeta_x: grid.derivative(zeta),
        eps_layer,
        mu_layer,
        layer,
    })
}

impl DiffeoData {
    fn wall_distance(&self, z: f64) -> f64 {
        1.0 + self.layer.sign() * z
    }

    /// `sigma(x_i, z)`, with `z` in the physical layer interval.
    pub fn sigma(&self, i: usize, z: f64) -> f64 {
        self.eps_layer * self.wall_distance(z) * self.zeta[i]
    }

    pub fn dx_sigma(&self, i: usize, z: f64) -> f64 {
        self.eps_layer * self.wall_distance(z) * self.zeta_x[i]
    }

    /// `d sigma / dz`, independent of `z`.
    pub fn dz_sigma(&self, i: usize) -> f64 {
        self.layer.sign() * self.eps_layer * self.zeta[i]
    }

    pub fn depth_factor(&self, i: usize) -> f64 {
        1.0 + self.dz_sigma(i)
    }

    /// Entries `(p11, p12, p22)` of the straightened coefficient matrix at `(x_i, z)`.
    pub fn p_entries(&self, i: usize, z: f64) -> (f64, f64, f64) {
        let h = self.depth_factor(i);
        let sx = self.dx_sigma(i, z);
        (
            h,
            -self.mu_layer.sqrt() * sx,
            (1.0 + self.mu_layer * sx * sx) / h,
        )
    }

    /// Samples the coefficient matrix at the half-nodes of an `nz`-cell grid.
    pub fn p_field(&self, nz: usize) -> PMatrixField {
        let n = self.grid.len();
        let mut out = PMatrixField {
            n,
            z: Vec::with_capacity(nz),
            p11: Vec::with_capacity(nz * n),
            p12: Vec::with_capacity(nz * n),
            p22: Vec::with_capacity(nz * n),
        };
        for j in 0..nz {
            let s = (j as f64 + 0.5) / nz as f64;
            let z = match self.layer {
                Layer::Lower => s - 1.0,
                Layer::Upper => 1.0 - s,
            };
            out.z.push(z);
            for i in 0..n {
                let (a, b, c) = self.p_entries(i, z);
                out.p11.push(a);
                out.p12.push(b);
                out.p22.push(c);
            }
        }
        out
    }
}

/// Coefficient matrix sampled on a strip grid (row-major, one row per z level).
#[derive(Debug, Clone)]
pub struct PMatrixField {
    pub n: usize,
    pub z: Vec<f64>,
    pub p11: Vec<f64>,
    pub p12: Vec<f64>,
    pub p22: Vec<f64>,
}

impl PMatrixField {
    pub fn min_eigenvalue(&self) -> f64 {
        self.p11
            .iter()
            .zip(&self.p12)
            .zip(&self.p22)
            .map(|((a, b), c)| {
                let m = 0.5 * (a + c);
                let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                m - r
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct StripSolution {
    /// Row-major `(nz + 1) x nx` samples; row `j` sits at height `z[j]`.
    pub phi: Vec<f64>,
    pub z: Vec<f64>,
    pub nx: usize,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl StripSolution {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.phi[j * self.nx..(j + 1) * self.nx]
    }

    /// Values on the interface `z = 0`.
    pub fn trace(&self) -> &[f64] {
        self.row(self.z.len() - 1)
    }
}

/// Discrete energy operator of one layer on the reference strip.
#[derive(Debug, Clone)]
pub(crate) struct LayerOperator {
    grid: PeriodicGrid,
    pub(crate) nz: usize,
    dz: f64,
    sqrt_mu: f64,
    layer: Layer,
    c11: Vec<f64>,
    c12: Vec<f64>,
    c22: Vec<f64>,
    avg11: Vec<f64>,
    avg22: Vec<f64>,
    kd: Vec<f64>,
}

impl LayerOperator {
    pub(crate) fn new(d: &DiffeoData, nz: usize) -> Result<Self> {
        if nz < 2 {
            return Err(Error::InvalidArgument(format!("need nz >= 2, got {nz}")));
        }
        let n = d.grid.len();
        let sqrt_mu = d.mu_layer.sqrt();
        let (mut c11, mut c12, mut c22) = (
            Vec::with_capacity(nz * n),
            Vec::with_capacity(nz * n),
            Vec::with_capacity(nz * n),
        );
        let (mut avg11, mut avg22) = (vec![0.0; nz], vec![0.0; nz]);
        for j in 0..nz {
            let s = (j as f64 + 0.5) / nz as f64;
            for i in 0..n {
                let h = d.depth_factor(i);
                let sx = d.eps_layer * s * d.zeta_x[i];
                let a = h;
                let b = -d.layer.sign() * sqrt_mu * sx;
                let c = (1.0 + d.mu_layer * sx * sx) / h;
                avg11[j] += a / n as f64;
                avg22[j] += c / n as f64;
                c11.push(a);
                c12.push(b);
                c22.push(c);
            }
        }
        let nyq = d.grid.nyquist_slot();
        let kd = (0..n)
            .map(|j| if j == nyq { 0.0 } else { d.grid.wavenumber(j) })
            .collect();
        Ok(Self {
            grid: d.grid.clone(),
            nz,
            dz: 1.0 / nz as f64,
            sqrt_mu,
            layer: d.layer,
            c11,
            c12,
            c22,
            avg11,
            avg22,
            kd,
        })
    }

    pub(crate) fn nx(&self) -> usize {
        self.grid.len()
    }

    pub(crate) fn layer(&self) -> Layer {
        self.layer
    }

    /// `rows <- scale * D rows` for `m` consecutive rows, two rows per complex transform.
    fn derive_rows(&self, rows: &mut [f64], m: usize, scale: f64) {
        let n = self.nx();
        let pairs = m.div_ceil(2);
        let mut buf = vec![Complex64::new(0.0, 0.0); pairs * n];
        for p in 0..pairs {
            let (a, b) = (2 * p, 2 * p + 1);
            for i in 0..n {
                let im = if b < m { rows[b * n + i] } else { 0.0 };
                buf[p * n + i] = Complex64::new(rows[a * n + i], im);
            }
        }
        self.grid.transform_rows(&mut buf, false);
        let f = scale / n as f64;
        for row in buf.chunks_mut(n) {
            for (c, k) in row.iter_mut().zip(&self.kd) {
                *c *= Complex64::new(0.0, k * f);
            }
        }
        self.grid.transform_rows(&mut buf, true);
        for p in 0..pairs {
            let (a, b) = (2 * p, 2 * p + 1);
            for i in 0..n {
                let c = buf[p * n + i];
                rows[a * n + i] = c.re;
                if b < m {
                    rows[b * n + i] = c.im;
                }
            }
        }
    }

    /// `out = A phi`, both `(nz + 1) x nx`.
    pub(crate) fn apply(&self, phi: &[f64], out: &mut [f64]) {
        let (n, nz, dz) = (self.nx(), self.nz, self.dz);
        let mut g1 = vec![0.0; nz * n];
        let mut g2 = vec![0.0; nz * n];
        for j in 0..nz {
            let lo = &phi[j * n..(j + 1) * n];
            let hi = &phi[(j + 1) * n..(j + 2) * n];
            for i in 0..n {
                g1[j * n + i] = 0.5 * (lo[i] + hi[i]);
                g2[j * n + i] = (hi[i] - lo[i]) / dz;
            }
        }
        self.derive_rows(&mut g1, nz, self.sqrt_mu);
        // g1 <- F1, g2 <- F2
        for idx in 0..nz * n {
            let (a, b) = (g1[idx], g2[idx]);
            g1[idx] = self.c11[idx] * a + self.c12[idx] * b;
            g2[idx] = self.c12[idx] * a + self.c22[idx] * b;
        }
        self.derive_rows(&mut g1, nz, self.sqrt_mu);
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..nz {
            for i in 0..n {
                let idx = j * n + i;
                let m = -0.5 * dz * g1[idx];
                out[idx] += m - g2[idx];
                out[idx + n] += m + g2[idx];
            }
        }
    }

    /// Interface row of `A phi`.
    pub(crate) fn interface_flux(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.nx();
        let mut out = vec![0.0; phi.len()];
        self.apply(phi, &mut out);
        out[self.nz * n..].to_vec()
    }
}

/// One layer's contribution to a coupled solve: its unknown interface value is
/// `coupling * v + offset`, and it enters the energy with `weight`.
pub(crate) struct Block<'a> {
    pub op: &'a LayerOperator,
    pub weight: f64,
    pub coupling: f64,
    pub offset: Option<&'a [f64]>,
}

/// Solution of a coupled solve: full per-block fields and the shared unknown.
pub(crate) struct CoupledSolution {
    pub fields: Vec<Vec<f64>>,
    pub fluxes: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub raw: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Symmetric system coupling at most two layers through a shared interface
/// unknown `v`. Without `v` there is a single Dirichlet block.
pub(crate) struct CoupledSystem<'a> {
    n: usize,
    nz: usize,
    blocks: Vec<Block<'a>>,
    has_v: bool,
    factors: Vec<TridiagFactor>,
    singular: Vec<bool>,
    kernel: Vec<f64>,
}

impl<'a> CoupledSystem<'a> {
    pub(crate) fn new(blocks: Vec<Block<'a>>, has_v: bool) -> Result<Self> {
        if blocks.is_empty() || blocks.len() > 2 || (blocks.len() == 2 && !has_v) {
            return Err(Error::InvalidArgument("unsupported block layout".into()));
        }
        let n = blocks[0].op.nx();
        let nz = blocks[0].op.nz;
        if blocks.iter().any(|b| b.op.nx() != n || b.op.nz != nz) {
            return Err(Error::GridMismatch(
                "blocks on different strip grids".into(),
            ));
        }
        let mut sys = Self {
            n,
            nz,
            blocks,
            has_v,
            factors: Vec::new(),
            singular: Vec::new(),
            kernel: Vec::new(),
        };
        sys.kernel = sys.kernel_chain();
        sys.build_preconditioner()?;
        Ok(sys)
    }

    fn chain_len(&self) -> usize {
        self.blocks.len() * self.nz + usize::from(self.has_v)
    }

    fn unknowns(&self) -> usize {
        self.chain_len() * self.n
    }

    /// Position of block `b`, row `j` in the tridiagonal chain.
    fn chain_pos(&self, b: usize, j: usize) -> usize {
        if b == 0 {
            j
        } else {
            self.nz + 1 + (self.nz - 1 - j)
        }
    }

    /// Storage row of chain position `p` in the unknown vector.
    fn storage_row(&self, p: usize) -> usize {
        let nz = self.nz;
        if p < nz {
            p
        } else if self.has_v && p == nz {
            self.blocks.len() * nz
        } else {
            let j = nz - 1 - (p - nz - 1);
            nz + j
        }
    }

    fn kernel_chain(&self) -> Vec<f64> {
        let mut k = vec![0.0; self.chain_len()];
        if !self.has_v || self.blocks.iter().any(|b| b.coupling == 0.0) {
            return k;
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            for j in 0..self.nz {
                k[self.chain_pos(b, j)] = blk.coupling;
            }
        }
        k[self.nz] = 1.0;
        k
    }

    fn build_preconditioner(&mut self) -> Result<()> {
        let len = self.chain_len();
        let half = self.n / 2;
        let has_kernel = self.kernel.iter().any(|&v| v != 0.0);
        for q in 0..=half {
            let k = self.blocks[0].op.kd[q];
            let k2 = k * k;
            let mut d = vec![0.0; len];
            let mut e = vec![0.0; len.saturating_sub(1)];
            for (b, blk) in self.blocks.iter().enumerate() {
                let op = blk.op;
                let mu = op.sqrt_mu * op.sqrt_mu;
                for j in 0..self.nz {
                    let m = blk.weight * op.dz * mu * k2 * op.avg11[j] / 4.0;
                    let s = blk.weight * op.avg22[j] / op.dz;
                    let pa = self.chain_pos(b, j);
                    d[pa] += m + s;
                    let other = if j + 1 < self.nz {
                        Some((self.chain_pos(b, j + 1), 1.0))
                    } else if self.has_v && blk.coupling != 0.0 {
                        Some((self.nz, blk.coupling))
                    } else {
                        None
                    };
                    if let Some((pc, f)) = other {
                        d[pc] += (m + s) * f * f;
                        e[pa.min(pc)] += (m - s) * f;
                    }
                }
            }
            let sing = has_kernel && k == 0.0;
            if sing {
                let v = self.nz;
                d[v] = 1.0;
                if v > 0 {
                    e[v - 1] = 0.0;
                }
                if v < len - 1 {
                    e[v] = 0.0;
                }
            }
            if self.has_v && d[self.nz] == 0.0 {
                d[self.nz] = 1.0;
            }
            self.factors.push(TridiagFactor::new(&d, &e)?);
            self.singular.push(sing);
        }
        Ok(())
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        let (n, len) = (self.n, self.chain_len());
        let mut buf: Vec<Complex64> = r.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.blocks[0].op.grid.transform_rows(&mut buf, false);
        let kk: f64 = self.kernel.iter().map(|v| v * v).sum();
        let rows: Vec<usize> = (0..len).map(|p| self.storage_row(p)).collect();
        let mut chain = vec![Complex64::new(0.0, 0.0); len];
        for slot in 0..n {
            let q = slot.min(n - slot);
            for (p, &row) in rows.iter().enumerate() {
                chain[p] = buf[row * n + slot];
            }
            self.factors[q].solve_in_place(&mut chain);
            if self.singular[q] && kk > 0.0 {
                let c: Complex64 = chain
                    .iter()
                    .zip(&self.kernel)
                    .map(|(y, k)| y * k)
                    .sum::<Complex64>()
                    / kk;
                for (y, k) in chain.iter_mut().zip(&self.kernel) {
                    *y -= c * k;
                }
            }
            for (p, &row) in rows.iter().enumerate() {
                buf[row * n + slot] = chain[p];
            }
        }
        self.blocks[0].op.grid.transform_rows(&mut buf, true);
        let s = 1.0 / n as f64;
        for (zi, c) in z.iter_mut().zip(&buf) {
            *zi = c.re * s;
        }
    }

    /// Removes the constant and Nyquist kernel directions from a vector.
    fn project_kernel(&self, x: &mut [f64]) {
        let kk: f64 = self.kernel.iter().map(|v| v * v).sum();
        if kk == 0.0 {
            return;
        }
        let n = self.n;
        let (mut a, mut b) = (0.0, 0.0);
        for (p, kp) in self.kernel.iter().enumerate() {
            if *kp == 0.0 {
                continue;
            }
            let row = &x[self.storage_row(p) * n..(self.storage_row(p) + 1) * n];
            let (m, q) = gauge_parts(row);
            a += kp * m;
            b += kp * q;
        }
        a /= kk;
        b /= kk;
        for (p, kp) in self.kernel.iter().enumerate() {
            let r = self.storage_row(p);
            for (i, v) in x[r * n..(r + 1) * n].iter_mut().enumerate() {
                let alt = if i % 2 == 0 { 1.0 } else { -1.0 };
                *v -= kp * (a + b * alt);
            }
        }
    }

    fn full_field(&self, b: usize, x: &[f64], with_offset: bool) -> Vec<f64> {
        let (n, nz) = (self.n, self.nz);
        let blk = &self.blocks[b];
        let mut phi = vec![0.0; (nz + 1) * n];
        phi[..nz * n].copy_from_slice(&x[b * nz * n..(b + 1) * nz * n]);
        let top = &mut phi[nz * n..];
        if self.has_v {
            let v = &x[self.blocks.len() * nz * n..];
            for (t, vi) in top.iter_mut().zip(v) {
                *t = blk.coupling * vi;
            }
        }
        if with_offset {
            if let Some(o) = blk.offset {
                for (t, oi) in top.iter_mut().zip(o) {
                    *t += oi;
                }
            }
        }
        phi
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (n, nz) = (self.n, self.nz);
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut a = vec![0.0; (nz + 1) * n];
        let vstart = self.blocks.len() * nz * n;
        for (b, blk) in self.blocks.iter().enumerate() {
            let phi = self.full_field(b, x, false);
            blk.op.apply(&phi, &mut a);
            for (o, ai) in out[b * nz * n..(b + 1) * nz * n].iter_mut().zip(&a) {
                *o = blk.weight * ai;
            }
            if self.has_v {
                let wc = blk.weight * blk.coupling;
                for (o, ai) in out[vstart..].iter_mut().zip(&a[nz * n..]) {
                    *o += wc * ai;
                }
            }
        }
    }

    fn rhs(&self, source: Option<&[f64]>) -> Vec<f64> {
        let (n, nz) = (self.n, self.nz);
        let mut rhs = vec![0.0; self.unknowns()];
        let vstart = self.blocks.len() * nz * n;
        if let Some(s) = source {
            rhs[vstart..].copy_from_slice(s);
        }
        let mut a = vec![0.0; (nz + 1) * n];
        for (b, blk) in self.blocks.iter().enumerate() {
            let Some(o) = blk.offset else { continue };
            let mut phi = vec![0.0; (nz + 1) * n];
            phi[nz * n..].copy_from_slice(o);
            blk.op.apply(&phi, &mut a);
            for (r, ai) in rhs[b * nz * n..(b + 1) * nz * n].iter_mut().zip(&a) {
                *r -= blk.weight * ai;
            }
            if self.has_v {
                let wc = blk.weight * blk.coupling;
                for (r, ai) in rhs[vstart..].iter_mut().zip(&a[nz * n..]) {
                    *r -= wc * ai;
                }
            }
        }
        rhs
    }

    pub(crate) fn solve(
        &self,
        source: Option<&[f64]>,
        guess: Option<&[f64]>,
        tol: f64,
        max_iter: usize,
    ) -> Result<CoupledSolution> {
        let mut b = self.rhs(source);
        self.project_kernel(&mut b);
        let out = pcg(
            |x, y| self.apply(x, y),
            |r, z| self.precondition(r, z),
            &b,
            guess,
            tol,
            max_iter,
        )?;
        let mut x = out.x;
        self.project_kernel(&mut x);
        let (n, nz) = (self.n, self.nz);
        let mut fields = Vec::new();
        let mut fluxes = Vec::new();
        for (b, blk) in self.blocks.iter().enumerate() {
            let phi = self.full_field(b, &x, true);
            fluxes.push(blk.op.interface_flux(&phi));
            fields.push(phi);
        }
        let v = if self.has_v {
            x[self.blocks.len() * nz * n..].to_vec()
        } else {
            Vec::new()
        };
        Ok(CoupledSolution {
            fields,
            fluxes,
            v,
            raw: x,
            iterations: out.iterations,
            residual: out.residual,
        })
    }
}

fn gauge_parts(row: &[f64]) -> (f64, f64) {
    let n = row.len() as f64;
    let m = row.iter().sum::<f64>() / n;
    let q = row
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { *v } else { -*v })
        .sum::<f64>()
        / n;
    (m, q)
}

fn z_levels(layer: Layer, nz: usize) -> Vec<f64> {
    (0..=nz)
        .map(|j| {
            let s = j as f64 / nz as f64;
            match layer {
                Layer::Lower => s - 1.0,
                Layer::Upper => 1.0 - s,
            }
        })
        .collect()
}

fn check_field(d: &DiffeoData, u: &[f64], what: &str) -> Result<()> {
    if u.len() != d.grid.len() {
        return Err(Error::GridMismatch(format!(
            "{what} has {} samples, grid has {}",
            u.len(),
            d.grid.len()
        )));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("{what} has non-finite samples")));
    }
    Ok(())
}

/// Solves the layer problem with interface data `psi` and a no-flux wall.
pub fn solve_dirichlet(d: &DiffeoData, psi: &[f64], opts: &StripOptions) -> Result<StripSolution> {
    check_field(d, psi, "psi")?;
    let op = LayerOperator::new(d, opts.nz)?;
    solve_dirichlet_with(&op, psi, opts)
}

pub(crate) fn solve_dirichlet_with(
    op: &LayerOperator,
    psi: &[f64],
    opts: &StripOptions,
) -> Result<StripSolution> {
    let sys = CoupledSystem::new(
        vec![Block {
            op,
            weight: 1.0,
            coupling: 0.0,
            offset: Some(psi),
        }],
        false,
    )?;
    let sol = sys.solve(None, None, opts.tol, opts.cap(op.nx()))?;
    let phi = sol.fields.into_iter().next().unwrap();
    Ok(StripSolution {
        phi,
        z: z_levels(op.layer(), op.nz),
        nx: op.nx(),
        residual_norm: sol.residual,
        iterations: sol.iterations,
    })
}

/// Finds the interface trace whose Dirichlet-Neumann image is `g`; the trace
/// is gauged to zero mean and zero Nyquist component.
pub fn solve_neumann(d: &DiffeoData, g: &[f64], opts: &StripOptions) -> Result<StripSolution> {
    check_field(d, g, "g")?;
    let op = LayerOperator::new(d, opts.nz)?;
    solve_neumann_with(&op, g, opts)
}

pub(crate) fn solve_neumann_with(
    op: &LayerOperator,
    g: &[f64],
    opts: &StripOptions,
) -> Result<StripSolution> {
    let grid = &op.grid;
    let mean = grid.mean(g);
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if mean.abs() > 1e-8 * scale {
        return Err(Error::IncompatibleData(format!(
            "Neumann data must have zero mean, got {mean:.3e}"
        )));
    }
    let mut src = grid.project_range(g);
    if op.layer() == Layer::Upper {
        src.iter_mut().for_each(|v| *v = -*v);
    }
    let sys = CoupledSystem::new(
        vec![Block {
            op,
            weight: 1.0,
            coupling: 1.0,
            offset: None,
        }],
        true,
    )?;
    let sol = sys.solve(Some(&src), None, opts.tol, opts.cap(op.nx()))?;
    let mut phi = sol.fields.into_iter().next().unwrap();
    let n = op.nx();
    let (m, q) = gauge_parts(&phi[op.nz * n..]);
    for row in phi.chunks_mut(n) {
        for (i, v) in row.iter_mut().enumerate() {
            *v -= m + if i % 2 == 0 { q } else { -q };
        }
    }
    Ok(StripSolution {
        phi,
        z: z_levels(op.layer(), op.nz),
        nx: op.nx(),
        residual_norm: sol.residual,
        iterations: sol.iterations,
    })
}

pub(crate) fn dn_apply_with(
    op: &LayerOperator,
    psi: &[f64],
    opts: &StripOptions,
) -> Result<Vec<f64>> {
    let psi = op.grid.project_range(psi);
    let sol = solve_dirichlet_with(op, &psi, opts)?;
    let flux = op.interface_flux(&sol.phi);
    let out = op.grid.project_range(&flux);
    Ok(match op.layer() {
        Layer::Lower => out,
        Layer::Upper => out.into_iter().map(|v| -v).collect(),
    })
}

/// Dirichlet-Neumann image `G psi` of one unit-depth layer.
pub fn dn_apply(d: &DiffeoData, psi: &[f64], opts: &StripOptions) -> Result<Vec<f64>> {
    check_field(d, psi, "psi")?;
    let op = LayerOperator::new(d, opts.nz)?;
    dn_apply_with(&op, psi, opts)
}

/// Flat-interface multiplier `+- sqrt(mu) |D| tanh(sqrt(mu) |D|)`.
pub fn dn_flat(grid: &PeriodicGrid, mu_layer: f64, layer: Layer, psi: &[f64]) -> Result<Vec<f64>> {
    let sm = mu_layer.sqrt();
    let sign = layer.sign();
    grid.apply_multiplier_no_nyquist(|k| sign * sm * k.abs() * (sm * k.abs()).tanh(), psi)
}

/// First shape derivative of the lower-layer operator at the flat interface,
/// `-G0(h G0 psi) - mu d_x(h d_x psi)`, so that
/// `(G[eps h] psi - G[0] psi) / eps` tends to it as `eps -> 0`.
pub fn dn_shape_derivative_flat(
    grid: &PeriodicGrid,
    mu_layer: f64,
    h: &[f64],
    psi: &[f64],
) -> Result<Vec<f64>> {
    if h.len() != grid.len() || psi.len() != grid.len() {
        return Err(Error::GridMismatch(
            "shape derivative inputs must match the grid".into(),
        ));
    }
    let w = dn_flat(grid, mu_layer, Layer::Lower, psi)?;
    let hw: Vec<f64> = h.iter().zip(&w).map(|(a, b)| a * b).collect();
    let first = dn_flat(grid, mu_layer, Layer::Lower, &hw)?;
    let flux: Vec<f64> = h
        .iter()
        .zip(grid.derivative(psi))
        .map(|(a, b)| a * b)
        .collect();
    let second = grid.derivative(&flux);
    Ok(first
        .iter()
        .zip(&second)
        .map(|(a, b)| -a - mu_layer * b)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::standard(n).unwrap()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn flat_geometry_is_identity_matrix() {
        let g = grid(16);
        let zeta = vec![0.0; 16];
        let d = build_trivial_diffeo(&g, &zeta, 0.3, 1.0, Layer::Lower).unwrap();
        let p = d.p_field(4);
        assert!(p.p11.iter().chain(&p.p22).all(|v| (v - 1.0).abs() < 1e-15));
        assert!(p.p12.iter().all(|v| v.abs() < 1e-15));
        let zeta = g.trig_field(&[(1.0, 0.5, 0.0)]);
        let d0 = build_trivial_diffeo(&g, &zeta, 0.0, 1.0, Layer::Upper).unwrap();
        assert!((d0.p_field(3).min_eigenvalue() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hand_evaluated_coefficients() {
        let g = grid(16);
        let zeta = g.trig_field(&[(1.0, 0.5, 0.0)]);
        let d = build_trivial_diffeo(&g, &zeta, 0.4, 1.0, Layer::Lower).unwrap();
        assert!((d.dz_sigma(0) - 0.2).abs() < 1e-15);
        let (a, b, c) = d.p_entries(0, -0.5);
        assert!((a - 1.2).abs() < 1e-15);
        assert!(b.abs() < 1e-14);
        assert!((c - 1.0 / 1.2).abs() < 1e-14);
        // quarter period: zeta = 0, zeta_x = -0.5
        let (a, b, c) = d.p_entries(4, -0.5);
        let sx = 0.4 * 0.5 * -0.5;
        assert!((a - 1.0).abs() < 1e-14);
        assert!((b + sx).abs() < 1e-14);
        assert!((c - (1.0 + sx * sx)).abs() < 1e-14);
        assert!(d.p_field(8).min_eigenvalue() > 0.0);
    }

    #[test]
    fn depth_violation_names_minimum() {
        let g = grid(16);
        let zeta = g.trig_field(&[(1.0, 1.0, 0.0)]);
        match build_trivial_diffeo(&g, &zeta, 1.5, 1.0, Layer::Upper) {
            Err(Error::DegenerateGeometry { min_depth, node }) => {
                assert!((min_depth + 0.5).abs() < 1e-12);
                assert_eq!(node, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constants_are_exact() {
        let g = grid(16);
        let zeta = g.trig_field(&[(1.0, 0.3, 0.1)]);
        let d = build_trivial_diffeo(&g, &zeta, 0.5, 0.7, Layer::Lower).unwrap();
        let psi = vec![2.0; 16];
        let sol = solve_dirichlet(&d, &psi, &StripOptions::with_nz(8)).unwrap();
        assert!(sol.phi.iter().all(|v| (v - 2.0).abs() < 1e-8));
        let gpsi = dn_apply(&d, &psi, &StripOptions::with_nz(8)).unwrap();
        assert!(gpsi.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn flat_separable_solution() {
        let g = grid(16);
        let zeta = vec![0.0; 16];
        let mu: f64 = 0.5;
        let d = build_trivial_diffeo(&g, &zeta, 0.2, mu, Layer::Upper).unwrap();
        let psi = g.trig_field(&[(2.0, 1.0, 0.0)]);
        let sol = solve_dirichlet(&d, &psi, &StripOptions::with_nz(256)).unwrap();
        let k = 2.0 * mu.sqrt();
        for (j, &z) in sol.z.iter().enumerate() {
            let f = (k * (z - 1.0)).cosh() / k.cosh();
            for (v, p) in sol.row(j).iter().zip(&psi) {
                assert!((v - f * p).abs() < 1e-4, "z = {z}");
            }
        }
    }

    #[test]
    fn flat_dn_matches_multiplier_small_mu() {
        let g = grid(32);
        let zeta = vec![0.0; 32];
        let psi = g.trig_field(&[(1.0, 1.0, 0.0)]);
        let d = build_trivial_diffeo(&g, &zeta, 0.1, 0.01, Layer::Lower).unwrap();
        let a = dn_apply(&d, &psi, &StripOptions::with_nz(256)).unwrap();
        let b = dn_flat(&g, 0.01, Layer::Lower, &psi).unwrap();
        let err = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn flat_dn_tanh_one() {
        let g = grid(32);
        let psi = g.trig_field(&[(1.0, 1.0, 0.0)]);
        let d = build_trivial_diffeo(&g, &vec![0.0; 32], 0.0, 1.0, Layer::Lower).unwrap();
        let a = dn_apply(&d, &psi, &StripOptions::with_nz(256)).unwrap();
        let t = 1f64.tanh();
        assert!((t - 0.76159).abs() < 1e-5);
        let expect: Vec<f64> = psi.iter().map(|p| t * p).collect();
        assert!(rel_err(&a, &expect) < 2e-6);
    }

    #[test]
    fn neumann_inverts_dn() {
        let g = grid(32);
        let zeta = g.trig_field(&[(1.0, 0.4, 0.0), (2.0, 0.0, 0.2)]);
        let opts = StripOptions::with_nz(32);
        for layer in [Layer::Lower, Layer::Upper] {
            let d = build_trivial_diffeo(&g, &zeta, 0.3, 0.8, layer).unwrap();
            let rhs = g.trig_field(&[(1.0, 0.5, -0.3), (3.0, 0.2, 0.1)]);
            let sol = solve_neumann(&d, &rhs, &opts).unwrap();
            assert!(g.mean(sol.trace()).abs() < 1e-12);
            let back = dn_apply(&d, sol.trace(), &opts).unwrap();
            assert!(rel_err(&back, &rhs) < 1e-8, "{layer:?}");
        }
    }

    #[test]
    fn neumann_flat_upper() {
        let g = grid(32);
        let mu: f64 = 0.6;
        let d = build_trivial_diffeo(&g, &vec![0.0; 32], 0.0, mu, Layer::Upper).unwrap();
        let rhs = g.trig_field(&[(2.0, 1.0, 0.0)]);
        let sol = solve_neumann(&d, &rhs, &StripOptions::with_nz(512)).unwrap();
        let k = 2.0 * mu.sqrt();
        let expect: Vec<f64> = rhs.iter().map(|v| -v / (k * k.tanh())).collect();
        assert!(rel_err(sol.trace(), &expect) < 1e-5);
        let zero = solve_neumann(&d, &vec![0.0; 32], &StripOptions::with_nz(8)).unwrap();
        assert!(zero.phi.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn neumann_rejects_mean() {
        let g = grid(16);
        let d = build_trivial_diffeo(&g, &[0.0; 16], 0.0, 1.0, Layer::Upper).unwrap();
        assert!(matches!(
            solve_neumann(&d, &[1.0; 16], &StripOptions::with_nz(4)),
            Err(Error::IncompatibleData(_))
        ));
    }

    #[test]
    fn residual_refinement_second_order() {
        // Fine-grid reference, then compare errors at nz and 2 nz.
        let g = grid(32);
        let zeta = g.trig_field(&[(1.0, 0.1, 0.0)]);
        let psi = g.trig_field(&[(1.0, 0.0, 1.0), (2.0, 0.3, 0.0)]);
        let d = build_trivial_diffeo(&g, &zeta, 0.3, 1.0, Layer::Lower).unwrap();
        let r = dn_apply(&d, &psi, &StripOptions::with_nz(512)).unwrap();
        let e = |nz| rel_err(&dn_apply(&d, &psi, &StripOptions::with_nz(nz)).unwrap(), &r);
        let ratio = e(16) / e(32);
        assert!(ratio > 3.0 && ratio < 5.0, "{ratio}");
    }
}
