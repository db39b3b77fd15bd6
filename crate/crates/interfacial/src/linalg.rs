//! Small dense/iterative numerical kernels shared by the solvers.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct IterOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradient for a symmetric positive (semi)definite
/// operator. Stops on relative residual `tol` with respect to `|b|`.
pub fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<IterOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = match x0 {
        Some(g) if g.len() == n => g.to_vec(),
        _ => vec![0.0; n],
    };
    if bnorm == 0.0 {
        return Ok(IterOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
        });
    }
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut history = vec![norm(&r) / bnorm];
    if history[0] <= tol {
        return Ok(IterOutcome {
            x,
            iterations: 0,
            residual: history[0],
            history,
        });
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) || !pq.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: *history.last().unwrap(),
                history,
            });
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let res = norm(&r) / bnorm;
        history.push(res);
        if res <= tol {
            return Ok(IterOutcome {
                x,
                iterations: it,
                residual: res,
                history,
            });
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: *history.last().unwrap(),
        history,
    })
}

/// Restarted GMRES with right preconditioning.
pub fn gmres(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    mut precond: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<IterOutcome> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let mut history = vec![1.0];
    if bnorm == 0.0 {
        return Ok(IterOutcome {
            x,
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
        });
    }
    let mut total = 0;
    while total < max_iter {
        let ax = apply(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta / bnorm <= tol {
            return Ok(IterOutcome {
                x,
                iterations: total,
                residual: beta / bnorm,
                history,
            });
        }
        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let z = precond(&v[k])?;
            let mut w = apply(&z)?;
            zs.push(z);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let den = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if den == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / den;
                sn[k] = h[k + 1][k] / den;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            let res = g[k + 1].abs() / bnorm;
            history.push(res);
            if res <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&zs) {
            for (xj, zj) in x.iter_mut().zip(zi) {
                *xj += yi * zj;
            }
        }
        if *history.last().unwrap() <= tol {
            let ax = apply(&x)?;
            let res = norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>()) / bnorm;
            if res <= tol * 10.0 {
                return Ok(IterOutcome {
                    x,
                    iterations: total,
                    residual: res,
                    history,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: total,
        residual: *history.last().unwrap(),
        history,
    })
}

/// LU factors of a real symmetric tridiagonal matrix, applied to complex data.
#[derive(Debug, Clone)]
pub struct TridiagFactor {
    off: Vec<f64>,
    inv_pivot: Vec<f64>,
    cprime: Vec<f64>,
}

impl TridiagFactor {
    /// `diag` has length `m`, `off` length `m - 1`.
    pub fn new(diag: &[f64], off: &[f64]) -> Result<Self> {
        let m = diag.len();
        let mut inv_pivot = vec![0.0; m];
        let mut cprime = vec![0.0; m.saturating_sub(1)];
        let mut prev_c = 0.0;
        for i in 0..m {
            let piv = diag[i] - if i > 0 { off[i - 1] * prev_c } else { 0.0 };
            if piv == 0.0 || !piv.is_finite() {
                return Err(Error::Numerical(format!(
                    "zero pivot in tridiagonal factor at row {i}"
                )));
            }
            inv_pivot[i] = 1.0 / piv;
            if i + 1 < m {
                cprime[i] = off[i] * inv_pivot[i];
                prev_c = cprime[i];
            }
        }
        Ok(Self {
            off: off.to_vec(),
            inv_pivot,
            cprime,
        })
    }

    pub fn solve_in_place(&self, r: &mut [Complex64]) {
        let m = r.len();
        for i in 0..m {
            if i > 0 {
                let prev = r[i - 1];
                r[i] -= prev * self.off[i - 1];
            }
            r[i] *= self.inv_pivot[i];
        }
        for i in (0..m.saturating_sub(1)).rev() {
            let next = r[i + 1];
            r[i] -= next * self.cprime[i];
        }
    }
}

/// Maximizes a unimodal function on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Scans `n` log-spaced points on `[lo, hi]`, then refines the best one.
pub fn log_scan_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let xs: Vec<f64> = (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    let (ibest, _) =
        xs.iter()
            .map(|&x| f(x))
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    let a = xs[ibest.saturating_sub(1)];
    let b = xs[(ibest + 1).min(n - 1)];
    let (x, v) = golden_max(|t| f(t.exp()), a.ln(), b.ln(), 1e-12);
    let x = x.exp();
    let fb = f(xs[ibest]);
    if fb > v {
        (xs[ibest], fb)
    } else {
        (x, v)
    }
}

/// Largest eigenvalue of the symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiag_max_eig(alpha: &[f64], beta: &[f64]) -> f64 {
    let m = alpha.len();
    if m == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..m {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 }
            + if i + 1 < m { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    // number of eigenvalues below x
    let count = |x: f64| {
        let mut c = 0;
        let mut d = 1.0;
        for i in 0..m {
            let b2 = if i > 0 {
                beta[i - 1] * beta[i - 1]
            } else {
                0.0
            };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                c += 1;
            }
        }
        c
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count(mid) >= m {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * (lo.abs() + hi.abs()).max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOutcome {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of a symmetric operator by Lanczos with full
/// reorthogonalization. Stops when successive Ritz values differ by less than `tol`.
pub fn lanczos_max(
    mut apply: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    start: &[f64],
    tol: f64,
    cap: usize,
) -> Result<LanczosOutcome> {
    let n0 = norm(start);
    if n0 == 0.0 {
        return Err(Error::InvalidArgument(
            "Lanczos start vector is zero".into(),
        ));
    }
    let mut qs: Vec<Vec<f64>> = vec![start.iter().map(|v| v / n0).collect()];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut prev = f64::NAN;
    for it in 1..=cap {
        let q = qs.last().unwrap().clone();
        let mut w = apply(&q)?;
        let a = dot(&w, &q);
        alpha.push(a);
        for _ in 0..2 {
            for qi in &qs {
                let c = dot(&w, qi);
                for (wj, qj) in w.iter_mut().zip(qi) {
                    *wj -= c * qj;
                }
            }
        }
        let ritz = tridiag_max_eig(&alpha, &beta);
        let b = norm(&w);
        if (ritz - prev).abs() < tol || b <= 1e-12 * ritz.abs().max(1e-300) {
            return Ok(LanczosOutcome {
                value: ritz,
                iterations: it,
                converged: true,
            });
        }
        prev = ritz;
        beta.push(b);
        qs.push(w.iter().map(|v| v / b).collect());
    }
    Ok(LanczosOutcome {
        value: prev,
        iterations: cap,
        converged: false,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = 0.5 * (b - a) * x + 0.5 * (b + a);
        ws[i] = (b - a) / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}
