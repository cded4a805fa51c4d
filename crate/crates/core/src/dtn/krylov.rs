use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    /// Target relative residual.
    pub tol: f64,
    /// Relative residual still accepted when the iteration stagnates or hits the cap.
    pub accept: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { tol: 1e-10, accept: 1e-8, restart: 30, max_iter: 500 }
    }
}

impl KrylovOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.accept >= self.tol) {
            return Err(invalid("tol", "need 0 < tol <= accept"));
        }
        if self.restart == 0 || self.max_iter == 0 {
            return Err(invalid("restart", "restart length and iteration cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KrylovStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn finish(x: Vec<f64>, stats: KrylovStats, opts: &KrylovOptions) -> Result<(Vec<f64>, KrylovStats)> {
    if stats.residual <= opts.accept {
        Ok((x, stats))
    } else {
        Err(Error::NotConverged { iterations: stats.iterations, residual: stats.residual })
    }
}

/// Restarted GMRES with right preconditioning: solves `A M y = b`, returns `x = M y`.
pub fn gmres(
    a: impl Fn(&[f64]) -> Vec<f64>,
    m: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<Vec<f64>>,
    opts: &KrylovOptions,
) -> Result<(Vec<f64>, KrylovStats)> {
    opts.validate()?;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; b.len()], KrylovStats::default()));
    }
    let mut x = x0.unwrap_or_else(|| m(b));
    let mut iterations = 0;
    let restart = opts.restart;
    loop {
        let ax = a(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol || iterations >= opts.max_iter {
            return finish(x, KrylovStats { iterations, residual: rel }, opts);
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && iterations < opts.max_iter {
            let mut w = a(&m(&v[k]));
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let c = dot(&w, vi);
                    h[i][k] += c;
                    axpy(&mut w, -c, vi);
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let den = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / den;
            sn[k] = h[k + 1][k] / den;
            h[k][k] = den;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].abs() / bnorm <= 0.5 * opts.tol || hn <= 1e-300 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut comb = vec![0.0; b.len()];
        for (yi, vi) in y.iter().zip(&v) {
            axpy(&mut comb, *yi, vi);
        }
        let dx = m(&comb);
        axpy(&mut x, 1.0, &dx);
        if k == 0 {
            return finish(x, KrylovStats { iterations, residual: rel }, opts);
        }
    }
}

/// Preconditioned conjugate gradients for a symmetric positive operator.
pub fn pcg(
    a: impl Fn(&[f64]) -> Result<Vec<f64>>,
    m: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    opts: &KrylovOptions,
) -> Result<(Vec<f64>, KrylovStats)> {
    opts.validate()?;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; b.len()], KrylovStats::default()));
    }
    let mut x = m(b);
    let ax = a(&x)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z = m(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut best = norm(&r) / bnorm;
    let mut iterations = 0;
    while best > opts.tol && iterations < opts.max_iter {
        let ap = a(&p)?;
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        iterations += 1;
        let rel = norm(&r) / bnorm;
        if rel >= best && rel <= opts.accept && iterations > 3 {
            best = rel;
            break;
        }
        best = rel;
        z = m(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    finish(x, KrylovStats { iterations, residual: best }, opts)
}
