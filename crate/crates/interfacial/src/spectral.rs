//! Periodic grid, Fourier multipliers, direct symbol quantization and the
//! discrete norms built on them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::units::DimensionlessParams;

/// Uniform periodic grid on `[0, L)` with `n` nodes.
#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    length: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "grid needs an even number of points >= 8, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "grid length must be positive, got {length}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            length,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    /// Grid on `[0, 2 pi)`.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.dx()).collect()
    }

    /// Integer frequency of FFT slot `j`; the Nyquist slot is reported as `+n/2`.
    pub fn mode_index(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        self.mode_index(j) as f64 * 2.0 * PI / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n / 2
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.wavenumber(self.n / 2)
    }

    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(u.len(), self.n);
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Inverse transform including the `1/n` normalization; imaginary parts dropped.
    pub fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut spec);
        let s = 1.0 / self.n as f64;
        spec.into_iter().map(|c| c.re * s).collect()
    }

    /// In-place unnormalized transform of consecutive length-`n` rows.
    pub(crate) fn transform_rows(&self, buf: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(buf.len() % self.n, 0);
        if buf.is_empty() {
            return;
        }
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::GridMismatch(format!(
                "field has {} samples, grid has {}",
                u.len(),
                self.n
            )));
        }
        Ok(())
    }

    fn multiply(&self, u: &[f64], keep_nyquist: bool, m: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let mut spec = self.forward(u);
        for (j, c) in spec.iter_mut().enumerate() {
            if !keep_nyquist && j == self.n / 2 {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let k = self.wavenumber(j);
            let v = m(k);
            if !v.is_finite() {
                return Err(Error::Numerical(format!(
                    "multiplier is not finite at wavenumber {k}"
                )));
            }
            *c *= v;
        }
        Ok(self.inverse_real(spec))
    }

    /// Diagonal action `u -> Op(m) u`.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> f64, u: &[f64]) -> Result<Vec<f64>> {
        self.multiply(u, true, m)
    }

    /// As [`apply_multiplier`](Self::apply_multiplier) but with the Nyquist
    /// mode removed, used for odd-order (|xi|-type) multipliers.
    pub fn apply_multiplier_no_nyquist(
        &self,
        m: impl Fn(f64) -> f64,
        u: &[f64],
    ) -> Result<Vec<f64>> {
        self.multiply(u, false, m)
    }

    /// Spectral first derivative with the Nyquist mode zeroed.
    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(u);
        for (j, c) in spec.iter_mut().enumerate() {
            if j == self.n / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, self.wavenumber(j));
            }
        }
        self.inverse_real(spec)
    }

    /// Zero all modes with `|j| > n/3` (the 2/3 rule).
    pub fn dealias(&self, u: &[f64]) -> Vec<f64> {
        let cut = self.n / 3;
        let mut spec = self.forward(u);
        for (j, c) in spec.iter_mut().enumerate() {
            if self.mode_index(j).unsigned_abs() as usize > cut {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse_real(spec)
    }

    /// Removes the mean and the Nyquist component.
    pub fn project_range(&self, u: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(u);
        spec[0] = Complex64::new(0.0, 0.0);
        spec[self.n / 2] = Complex64::new(0.0, 0.0);
        self.inverse_real(spec)
    }

    /// Mean and Nyquist amplitude, `u ~ m + q (-1)^i + rest`.
    pub fn gauge_components(&self, u: &[f64]) -> (f64, f64) {
        let n = self.n as f64;
        let mean = u.iter().sum::<f64>() / n;
        let nyq = u
            .iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 0 { *v } else { -*v })
            .sum::<f64>()
            / n;
        (mean, nyq)
    }

    pub fn mean(&self, u: &[f64]) -> f64 {
        u.iter().sum::<f64>() / self.n as f64
    }

    /// Trapezoidal `L^2` inner product.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.dx() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    pub fn integral(&self, u: &[f64]) -> f64 {
        self.dx() * u.iter().sum::<f64>()
    }

    fn weighted_norm(&self, u: &[f64], w: impl Fn(f64) -> f64) -> f64 {
        let spec = self.forward(u);
        let scale = self.length / (self.n as f64 * self.n as f64);
        let s: f64 = spec
            .iter()
            .enumerate()
            .map(|(j, c)| w(self.wavenumber(j)) * c.norm_sqr())
            .sum();
        (scale * s).sqrt()
    }

    /// `|u|_{H^s}` with `Lambda = (1 + xi^2)^{1/2}`.
    pub fn norm_sobolev(&self, u: &[f64], s: f64) -> f64 {
        self.weighted_norm(u, |k| (1.0 + k * k).powf(s))
    }

    /// `|P u|_{H^s}` with `P = |D| / (1 + sqrt(mu) |D|)^{1/2}`.
    pub fn norm_hdot_mu(&self, u: &[f64], s: f64, mu: f64) -> f64 {
        let smu = mu.max(0.0).sqrt();
        self.weighted_norm(u, |k| (1.0 + k * k).powf(s) * k * k / (1.0 + smu * k.abs()))
    }

    /// `(|u|^2 + |u_x|^2 / Bo)^{1/2}`.
    pub fn norm_h1_sigma(&self, u: &[f64], bond: f64) -> f64 {
        let ib = if bond.is_infinite() { 0.0 } else { 1.0 / bond };
        self.weighted_norm(u, |k| 1.0 + ib * k * k)
    }

    /// Fraction of spectral energy in the top third of the resolved modes.
    pub fn tail_ratio(&self, u: &[f64]) -> f64 {
        let spec = self.forward(u);
        let cut = self.n / 3;
        let (mut hi, mut all) = (0.0, 0.0);
        for (j, c) in spec.iter().enumerate() {
            let e = c.norm_sqr();
            all += e;
            if self.mode_index(j).unsigned_abs() as usize > cut {
                hi += e;
            }
        }
        if all == 0.0 {
            0.0
        } else {
            (hi / all).sqrt()
        }
    }

    /// Builds `sum_m a_m cos(k_m x) + b_m sin(k_m x)` on the nodes.
    pub fn trig_field(&self, modes: &[(f64, f64, f64)]) -> Vec<f64> {
        self.nodes()
            .iter()
            .map(|&x| {
                modes
                    .iter()
                    .map(|&(k, a, b)| a * (k * x).cos() + b * (k * x).sin())
                    .sum()
            })
            .collect()
    }
}

type SymbolEval = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A symbol `(x, xi) -> s(x, xi)` with a name and an optional parameter snapshot.
pub struct SymbolFn {
    pub name: String,
    pub params: Option<DimensionlessParams>,
    eval: Box<SymbolEval>,
}

impl fmt::Debug for SymbolFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolFn")
            .field("name", &self.name)
            .finish()
    }
}

impl SymbolFn {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            params: None,
            eval: Box::new(eval),
        }
    }

    pub fn with_params(mut self, p: DimensionlessParams) -> Self {
        self.params = Some(p);
        self
    }

    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        (self.eval)(x, xi)
    }
}

/// Discrete Kohn-Nirenberg quantization, `O(n^2)`.
///
/// The symbol is sampled at each node `x_i` and wavenumber `xi_j`;
/// `s(x, xi)` is called with the node index mapped to its coordinate.
pub fn apply_symbol(grid: &PeriodicGrid, s: &SymbolFn, u: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(u)?;
    let n = grid.len();
    let spec = grid.forward(u);
    let twiddle: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64))
        .collect();
    let ks = grid.wavenumbers();
    let xs = grid.nodes();
    let mut out = vec![0.0; n];
    for (i, (o, &x)) in out.iter_mut().zip(&xs).enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, (c, &k)) in spec.iter().zip(&ks).enumerate() {
            let v = s.eval(x, k);
            if !v.is_finite() {
                return Err(Error::Numerical(format!(
                    "symbol {} is not finite at x = {x}, xi = {k}",
                    s.name
                )));
            }
            acc += twiddle[(i * j) % n] * (*c * v);
        }
        *o = acc.re / n as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::standard(32).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(PeriodicGrid::standard(6).is_err());
        assert!(PeriodicGrid::standard(9).is_err());
        assert!(PeriodicGrid::new(16, -1.0).is_err());
    }

    #[test]
    fn identity_multiplier() {
        let g = grid();
        let u = g.trig_field(&[(1.0, 0.3, -0.2), (5.0, 0.1, 0.7)]);
        let v = g.apply_multiplier(|_| 1.0, &u).unwrap();
        assert!(max_diff(&u, &v) < 1e-14);
    }

    #[test]
    fn abs_xi_on_sine() {
        let g = grid();
        let u = g.trig_field(&[(3.0, 0.0, 1.0)]);
        let v = g.apply_multiplier_no_nyquist(f64::abs, &u).unwrap();
        let w: Vec<f64> = u.iter().map(|x| 3.0 * x).collect();
        assert!(max_diff(&v, &w) < 1e-13);
    }

    #[test]
    fn tanh_on_cosine() {
        let g = grid();
        let u = g.trig_field(&[(2.0, 1.0, 0.0)]);
        let v = g.apply_multiplier(|k| k.abs().tanh(), &u).unwrap();
        let t2 = 2.0f64.tanh();
        assert!((t2 - 0.9640).abs() < 1e-4);
        let w: Vec<f64> = u.iter().map(|x| t2 * x).collect();
        assert!(max_diff(&v, &w) < 1e-13);
    }

    #[test]
    fn nan_multiplier_is_an_error() {
        let g = grid();
        let u = vec![1.0; 32];
        assert!(matches!(
            g.apply_multiplier(|k| if k == 0.0 { f64::NAN } else { 1.0 }, &u),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn symbol_identity_and_pointwise() {
        let g = grid();
        let u = g.trig_field(&[(1.0, 0.3, -0.2), (4.0, 0.5, 0.1)]);
        let id = SymbolFn::new("one", |_, _| 1.0);
        assert!(max_diff(&apply_symbol(&g, &id, &u).unwrap(), &u) < 1e-13);
        let a = SymbolFn::new("a", |x, _| 2.0 + x.sin());
        let v = apply_symbol(&g, &a, &u).unwrap();
        let w: Vec<f64> = g
            .nodes()
            .iter()
            .zip(&u)
            .map(|(x, u)| (2.0 + x.sin()) * u)
            .collect();
        assert!(max_diff(&v, &w) < 1e-13);
    }

    #[test]
    fn x_independent_symbol_matches_multiplier() {
        let g = grid();
        let u = g.trig_field(&[(1.0, 0.3, -0.2), (7.0, 0.5, 0.1), (16.0, 0.2, 0.0)]);
        let s = SymbolFn::new("tanh", |_, xi: f64| xi.abs().tanh() + 0.5);
        let a = apply_symbol(&g, &s, &u).unwrap();
        let b = g.apply_multiplier(|k| k.abs().tanh() + 0.5, &u).unwrap();
        assert!(max_diff(&a, &b) < 1e-13);
    }

    #[test]
    fn sobolev_norms() {
        let g = grid();
        assert_eq!(g.norm_sobolev(&vec![0.0; 32], 1.0), 0.0);
        let u = g.trig_field(&[(3.0, 1.0, 0.0)]);
        let r = g.norm_sobolev(&u, 1.0) / g.norm_sobolev(&u, 0.0);
        assert!((r - 10f64.sqrt()).abs() < 1e-12);
        assert!((g.norm_sobolev(&u, 0.0) - g.l2_norm(&u)).abs() < 1e-12);
        assert!((g.norm_sobolev(&u, 0.0) - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hdot_mu_norm() {
        let g = grid();
        assert!(g.norm_hdot_mu(&vec![2.5; 32], 0.0, 1.0) < 1e-12);
        let u = g.trig_field(&[(4.0, 1.0, 0.0)]);
        let r = g.norm_hdot_mu(&u, 0.0, 1.0) / g.l2_norm(&u);
        assert!((r - 4.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((r - 1.7889).abs() < 1e-4);
        assert!(g.norm_hdot_mu(&u, 0.0, 2.0) <= g.norm_hdot_mu(&u, 0.0, 1.0));
    }

    #[test]
    fn h1_sigma_norm() {
        let g = grid();
        let u = g.trig_field(&[(3.0, 1.0, 0.0)]);
        let v = g.norm_h1_sigma(&u, 4.0);
        assert!((v * v - (1.0 + 9.0 / 4.0) * PI).abs() < 1e-12);
        assert!((g.norm_h1_sigma(&u, f64::INFINITY) - g.l2_norm(&u)).abs() < 1e-14);
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid();
        let u = g.trig_field(&[(3.0, 0.0, 1.0)]);
        let d = g.derivative(&u);
        let w = g.trig_field(&[(3.0, 3.0, 0.0)]);
        assert!(max_diff(&d, &w) < 1e-12);
    }

    #[test]
    fn gauge_components_roundtrip() {
        let g = grid();
        let mut u = g.trig_field(&[(3.0, 0.4, 1.0)]);
        for (i, v) in u.iter_mut().enumerate() {
            *v += 1.5 + if i % 2 == 0 { 0.25 } else { -0.25 };
        }
        let (m, q) = g.gauge_components(&u);
        assert!((m - 1.5).abs() < 1e-13 && (q - 0.25).abs() < 1e-13);
        let (m, q) = g.gauge_components(&g.project_range(&u));
        assert!(m.abs() < 1e-13 && q.abs() < 1e-13);
    }
}
