//! Sparse symmetric positive definite systems: CSR storage, banded Cholesky
//! for the direct path and Jacobi-preconditioned conjugate gradients for the
//! iterative one.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from unsorted triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps the summation order of duplicates fixed
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).find(|&(c, _)| c == r).map_or(0.0, |(_, v)| v))
            .collect()
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    /// `‖b - Ax‖₂ / ‖b‖₂` (absolute when `b = 0`).
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.mul_vec(x, &mut ax);
        let r = norm(&ax.iter().zip(b).map(|(a, b)| b - a).collect::<Vec<_>>());
        let bn = norm(b);
        if bn > 0.0 {
            r / bn
        } else {
            r
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factor of a symmetric banded matrix; row `i` stores columns
/// `i-bw ..= i` contiguously.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for r in 0..n {
            for (c, v) in a.row(r) {
                if c <= r {
                    band[r * w + (c + bw - r)] = v;
                }
            }
        }
        for j in 0..n {
            let j0 = j.saturating_sub(bw);
            let row_j = j * w;
            let s = band[row_j + bw]
                - band[row_j + (j0 + bw - j)..row_j + bw]
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>();
            if !(s > 0.0) {
                return Err(Error::SolverFailure {
                    reason: format!("matrix not positive definite at pivot {j} ({s:e})"),
                    residual_history: Vec::new(),
                });
            }
            let d = s.sqrt();
            band[row_j + bw] = d;
            for i in j + 1..(j + bw + 1).min(n) {
                let row_i = i * w;
                let k0 = i.saturating_sub(bw);
                // columns k0..j of rows i and j
                let li = &band[row_i + (k0 + bw - i)..row_i + (j + bw - i)];
                let lj = &band[row_j + (k0 + bw - j)..row_j + bw];
                let v = (band[row_i + (j + bw - i)] - dot(li, lj)) / d;
                band[row_i + (j + bw - i)] = v;
            }
        }
        Ok(Self { n, bw, band })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let k0 = i.saturating_sub(bw);
            let row = i * w;
            let s = dot(&self.band[row + (k0 + bw - i)..row + bw], &y[k0..i]);
            y[i] = (y[i] - s) / self.band[row + bw];
        }
        for i in (0..n).rev() {
            y[i] /= self.band[i * w + bw];
            let yi = y[i];
            let k0 = i.saturating_sub(bw);
            let row = i * w;
            for (k, l) in (k0..i).zip(&self.band[row + (k0 + bw - i)..row + bw]) {
                y[k] -= l * yi;
            }
        }
        y
    }
}

pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Jacobi-preconditioned conjugate gradients on `Ax = b` starting from `x0`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x0: Vec<f64>, tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.dim();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bn = norm(b);
    let scale = if bn > 0.0 { bn } else { 1.0 };
    let mut x = x0;
    let mut r = vec![0.0; n];
    a.mul_vec(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut history = vec![norm(&r) / scale];
    if history[0] <= tol {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual_history: history,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailure {
                reason: format!("CG breakdown (p·Ap = {pap:e}) at iteration {it}"),
                residual_history: history,
            });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rel = norm(&r) / scale;
        history.push(rel);
        if rel <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual_history: history,
            });
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::SolverFailure {
        reason: format!("CG did not reach {tol:e} within {max_iter} iterations"),
        residual_history: history,
    })
}
