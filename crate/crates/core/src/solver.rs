//! Second-order finite-difference Poisson solver on [`CurvGrid`], gradient
//! reconstruction and Neumann traces.
//!
//! The discrete operator is the Hessian of the quadratic energy
//!
//! ```text
//! E(u) = ½ Σ_s-faces A (δ_s u)² Δθ/Δs + ½ Σ_θ-faces C (δ_θ u)² Δs/Δθ + Σ_cells B δ̄_s u δ̄_θ u
//! ```
//!
//! with `A = J g^{ss}`, `B = J g^{sθ}`, `C = J g^{θθ}` evaluated analytically at
//! face and cell centres (`δ̄` averages the two parallel cell edges). This is
//! the 9-point divergence-form stencil; the matrix is symmetric, and
//! `Δ_h u = -(K u)/(J Δs Δθ)` at interior nodes.

use std::sync::Arc;
use std::time::Instant;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::domain::{build_grid, Boundary, CurvGrid, DomainSpec};
use crate::error::{Error, Result};
use crate::linalg::{pcg, BandedCholesky, CsrMatrix};
use crate::model::{model_u_unchecked, ModelParams};

/// Unknown count above which `Auto` switches from Cholesky to CG.
pub const DIRECT_SOLVE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Relative residual `‖b - Ku‖/‖b‖` required of the linear solve.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub method: SolverChoice,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_iterations: 100_000,
            method: SolverChoice::Auto,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1e-4) {
            return Err(Error::InvalidInput(format!(
                "solver tolerance {} outside (0, 1e-4)",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub method: SolverChoice,
    pub unknowns: usize,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    pub elapsed_seconds: f64,
}

/// Nodal values on a grid, stored in the grid's `(s, θ)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    ns: usize,
    ntheta: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(ns: usize, ntheta: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != ns * ntheta {
            return Err(Error::InvalidInput(format!(
                "{} values for a {ns}x{ntheta} grid",
                values.len()
            )));
        }
        Ok(Self { ns, ntheta, values })
    }

    pub fn from_fn(g: &CurvGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            ns: g.ns(),
            ntheta: g.ntheta(),
            values: g.nodes().iter().map(|m| f(m.x, m.y)).collect(),
        }
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ntheta + j]
    }

    pub fn check_grid(&self, g: &CurvGrid) -> Result<()> {
        if self.ns != g.ns() || self.ntheta != g.ntheta() {
            return Err(Error::InvalidInput(format!(
                "field is {}x{}, grid is {}x{}",
                self.ns,
                self.ntheta,
                g.ns(),
                g.ntheta()
            )));
        }
        Ok(())
    }
}

/// Emits every entry `(p, q, v)` of the full energy Hessian over all nodes.
fn for_each_coupling(g: &CurvGrid, mut emit: impl FnMut(usize, usize, f64)) {
    let (ns, nt) = (g.ns(), g.ntheta());
    let (ds, dt) = (g.ds(), g.dtheta());
    let pair = |p: usize, q: usize, w: f64, emit: &mut dyn FnMut(usize, usize, f64)| {
        emit(p, p, w);
        emit(q, q, w);
        emit(p, q, -w);
        emit(q, p, -w);
    };
    for i in 0..ns - 1 {
        let s_half = (i as f64 + 0.5) * ds;
        for j in 0..nt {
            let jn = (j + 1) % nt;
            let (n00, n10, n01, n11) = (g.index(i, j), g.index(i + 1, j), g.index(i, jn), g.index(i + 1, jn));
            // s-face between (i, j) and (i+1, j)
            let (a, _, _) = g.metric_at(s_half, g.theta(j)).flux_coefficients();
            pair(n00, n10, a * dt / ds, &mut emit);
            // cell (i+1/2, j+1/2): mixed term
            let (_, b, _) = g
                .metric_at(s_half, (j as f64 + 0.5) * dt)
                .flux_coefficients();
            if b != 0.0 {
                let h = 0.5 * b;
                emit(n00, n00, h);
                emit(n11, n11, h);
                emit(n10, n10, -h);
                emit(n01, n01, -h);
                emit(n00, n11, -h);
                emit(n11, n00, -h);
                emit(n10, n01, h);
                emit(n01, n10, h);
            }
        }
    }
    for i in 1..ns - 1 {
        let s = g.s(i);
        for j in 0..nt {
            let jn = (j + 1) % nt;
            let (_, _, c) = g.metric_at(s, (j as f64 + 0.5) * dt).flux_coefficients();
            pair(g.index(i, j), g.index(i, jn), c * ds / dt, &mut emit);
        }
    }
}

/// Position of each `θ` index in an ordering that keeps periodic neighbours
/// at most two slots apart: `0, N-1, 1, N-2, …`.
fn interleaved_theta_order(nt: usize) -> Vec<usize> {
    let mut pos = vec![0; nt];
    let (mut lo, mut hi) = (0usize, nt - 1);
    let mut k = 0;
    while lo <= hi {
        pos[lo] = k;
        k += 1;
        if hi != lo {
            pos[hi] = k;
            k += 1;
        }
        lo += 1;
        if hi == 0 {
            break;
        }
        hi -= 1;
    }
    pos
}

/// Discrete Laplacian `Δ_h u` at interior nodes (boundary rows are zero).
pub fn discrete_laplacian(g: &CurvGrid, u: &ScalarField) -> Result<Vec<f64>> {
    u.check_grid(g)?;
    let mut ku = vec![0.0; g.len()];
    let vals = u.values();
    for_each_coupling(g, |p, q, v| ku[p] += v * vals[q]);
    let mut out = vec![0.0; g.len()];
    let cell = g.ds() * g.dtheta();
    for i in 1..g.ns() - 1 {
        for j in 0..g.ntheta() {
            let p = g.index(i, j);
            out[p] = -ku[p] / (g.node(i, j).jacobian * cell);
        }
    }
    Ok(out)
}

/// Solves `Δu = f` with Dirichlet values `boundary(which, j)` on the two boundary rows.
pub fn solve_poisson(
    g: &CurvGrid,
    f: &[f64],
    boundary: impl Fn(Boundary, usize) -> f64,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolveStats)> {
    opts.validate()?;
    if f.len() != g.len() {
        return Err(Error::InvalidInput(format!(
            "right-hand side has {} values, grid has {} nodes",
            f.len(),
            g.len()
        )));
    }
    if let Some(k) = f.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite right-hand side at node {k}")));
    }
    let start = Instant::now();
    let (ns, nt) = (g.ns(), g.ntheta());
    let mut values = vec![0.0; g.len()];
    for j in 0..nt {
        values[g.index(0, j)] = boundary(Boundary::Inner, j);
        values[g.index(ns - 1, j)] = boundary(Boundary::Outer, j);
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite boundary value at node {k}")));
    }

    let pos = interleaved_theta_order(nt);
    let unknowns = (ns - 2) * nt;
    // global node -> unknown number
    let unknown_of = |p: usize| -> Option<usize> {
        let (i, j) = (p / nt, p % nt);
        (i > 0 && i < ns - 1).then(|| (i - 1) * nt + pos[j])
    };
    let cell = g.ds() * g.dtheta();
    let mut rhs = vec![0.0; unknowns];
    for i in 1..ns - 1 {
        for j in 0..nt {
            let p = g.index(i, j);
            rhs[unknown_of(p).unwrap()] = -g.node(i, j).jacobian * cell * f[p];
        }
    }
    let mut triplets = Vec::with_capacity(unknowns * 9);
    for_each_coupling(g, |p, q, v| {
        if let Some(up) = unknown_of(p) {
            match unknown_of(q) {
                Some(uq) => triplets.push((up, uq, v)),
                None => rhs[up] -= v * values[q],
            }
        }
    });
    let k = CsrMatrix::from_triplets(unknowns, triplets);

    let method = match opts.method {
        SolverChoice::Auto if unknowns <= DIRECT_SOLVE_LIMIT => SolverChoice::Direct,
        SolverChoice::Auto => SolverChoice::Iterative,
        m => m,
    };
    let (x, iterations, history) = match method {
        SolverChoice::Direct => {
            let chol = BandedCholesky::factor(&k)?;
            let mut x = chol.solve(&rhs);
            let mut history = vec![k.relative_residual(&x, &rhs)];
            // a couple of refinement sweeps absorb round-off on large grids
            let mut sweeps = 0;
            while history.last().copied().unwrap_or(0.0) > opts.tolerance && sweeps < 3 {
                let mut kx = vec![0.0; unknowns];
                k.mul_vec(&x, &mut kx);
                let r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, a)| b - a).collect();
                let dx = chol.solve(&r);
                for (xi, di) in x.iter_mut().zip(&dx) {
                    *xi += di;
                }
                history.push(k.relative_residual(&x, &rhs));
                sweeps += 1;
            }
            (x, sweeps, history)
        }
        _ => {
            // start from the linear blend of the boundary rows
            let mut x0 = vec![0.0; unknowns];
            for i in 1..ns - 1 {
                let s = g.s(i);
                for j in 0..nt {
                    let v = (1.0 - s) * values[g.index(0, j)] + s * values[g.index(ns - 1, j)];
                    x0[unknown_of(g.index(i, j)).unwrap()] = v;
                }
            }
            let out = pcg(&k, &rhs, x0, opts.tolerance, opts.max_iterations)?;
            (out.x, out.iterations, out.residual_history)
        }
    };
    let residual = *history.last().unwrap_or(&0.0);
    if !(residual <= opts.tolerance) {
        return Err(Error::SolverFailure {
            reason: format!("residual {residual:e} above tolerance {:e}", opts.tolerance),
            residual_history: history,
        });
    }
    for i in 1..ns - 1 {
        for j in 0..nt {
            let p = g.index(i, j);
            values[p] = x[unknown_of(p).unwrap()];
        }
    }
    let stats = SolveStats {
        method,
        unknowns,
        iterations,
        residual,
        residual_history: history,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((
        ScalarField {
            ns,
            ntheta: nt,
            values,
        },
        stats,
    ))
}

/// `Δu = f` with `u = a` on the inner and `u = b` on the outer boundary.
pub fn solve_dirichlet(
    g: &CurvGrid,
    f: &[f64],
    a: f64,
    b: f64,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolveStats)> {
    solve_poisson(
        g,
        f,
        |which, _| match which {
            Boundary::Inner => a,
            Boundary::Outer => b,
        },
        opts,
    )
}

/// Spectral `∂/∂θ` along every `s`-row.
fn theta_derivative(g: &CurvGrid, u: &ScalarField) -> Vec<f64> {
    let nt = g.ntheta();
    let mut planner = FftPlanner::<f64>::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(nt);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(nt);
    let mut out = vec![0.0; g.len()];
    let mut buf = vec![Complex::new(0.0, 0.0); nt];
    for i in 0..g.ns() {
        for j in 0..nt {
            buf[j] = Complex::new(u.at(i, j), 0.0);
        }
        fwd.process(&mut buf);
        for (j, c) in buf.iter_mut().enumerate() {
            let k = if 2 * j < nt {
                j as f64
            } else if 2 * j == nt {
                0.0
            } else {
                j as f64 - nt as f64
            };
            *c = Complex::new(-c.im * k, c.re * k);
        }
        inv.process(&mut buf);
        for j in 0..nt {
            out[g.index(i, j)] = buf[j].re / nt as f64;
        }
    }
    out
}

/// `∂u/∂s`: centred inside, second-order one-sided on the boundary rows.
fn s_derivative(g: &CurvGrid, u: &ScalarField, i: usize, j: usize) -> f64 {
    let ds = g.ds();
    let last = g.ns() - 1;
    if i == 0 {
        (-3.0 * u.at(0, j) + 4.0 * u.at(1, j) - u.at(2, j)) / (2.0 * ds)
    } else if i == last {
        (3.0 * u.at(last, j) - 4.0 * u.at(last - 1, j) + u.at(last - 2, j)) / (2.0 * ds)
    } else {
        (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * ds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    /// `W = |∇u|²`.
    pub w: Vec<f64>,
}

pub fn gradient_field(g: &CurvGrid, u: &ScalarField) -> Result<GradientField> {
    u.check_grid(g)?;
    let ut = theta_derivative(g, u);
    let n = g.len();
    let (mut ux, mut uy, mut w) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..g.ns() {
        for j in 0..g.ntheta() {
            let m = g.node(i, j);
            let us = s_derivative(g, u, i, j);
            let uth = ut[g.index(i, j)];
            let gx = us * m.s_x + uth * m.t_x;
            let gy = us * m.s_y + uth * m.t_y;
            ux.push(gx);
            uy.push(gy);
            w.push(gx * gx + gy * gy);
        }
    }
    Ok(GradientField { ux, uy, w })
}

/// Outward normal derivative along one boundary, with arc-length weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub which: Boundary,
    pub values: Vec<f64>,
    pub arc_weights: Vec<f64>,
}

pub fn neumann_trace(g: &CurvGrid, u: &ScalarField, which: Boundary) -> Result<BoundaryTrace> {
    u.check_grid(g)?;
    let i = g.boundary_row(which);
    let sign = match which {
        Boundary::Inner => -1.0,
        Boundary::Outer => 1.0,
    };
    let ut = theta_derivative(g, u);
    let values = (0..g.ntheta())
        .map(|j| {
            let m = g.node(i, j);
            let us = s_derivative(g, u, i, j);
            sign * (m.g_ss * us + m.g_st * ut[g.index(i, j)]) / m.g_ss.sqrt()
        })
        .collect();
    Ok(BoundaryTrace {
        which,
        values,
        arc_weights: g.arc_weights(which).to_vec(),
    })
}

/// Closed-form fields with known Laplacian used for convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactField {
    /// `L - r²/2 + M log r`; Laplacian `-2`.
    Model { params: ModelParams },
    /// `c + gx·x + gy·y`; harmonic.
    Linear { c: f64, gx: f64, gy: f64 },
    /// `x² - y²` plus a model; Laplacian `-2`.
    SaddlePlusModel { params: ModelParams },
}

impl ExactField {
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            ExactField::Model { params } => model_u_unchecked(params, x.hypot(y)),
            ExactField::Linear { c, gx, gy } => c + gx * x + gy * y,
            ExactField::SaddlePlusModel { params } => {
                x * x - y * y + model_u_unchecked(params, x.hypot(y))
            }
        }
    }

    pub fn laplacian(&self, _x: f64, _y: f64) -> f64 {
        match self {
            ExactField::Model { .. } | ExactField::SaddlePlusModel { .. } => -2.0,
            ExactField::Linear { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmsRow {
    pub n: usize,
    pub h: f64,
    pub linf: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvergenceOrder {
    Fitted { slope: f64 },
    /// Errors at rounding level: the scheme reproduces the field exactly.
    Exact,
}

impl ConvergenceOrder {
    pub fn slope(&self) -> Option<f64> {
        match self {
            ConvergenceOrder::Fitted { slope } => Some(*slope),
            ConvergenceOrder::Exact => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsStudy {
    pub rows: Vec<MmsRow>,
    pub order_linf: ConvergenceOrder,
    pub order_l2: ConvergenceOrder,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Solves for `exact` on `n x n` grids (`Ns = Nθ = n`) and fits the error decay
/// against `h = 1/(n-1)`.
pub fn mms_convergence(
    spec: &DomainSpec,
    exact: &ExactField,
    sizes: &[usize],
    opts: &SolveOptions,
) -> Result<MmsStudy> {
    if sizes.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "convergence study needs at least 3 sizes, got {}",
            sizes.len()
        )));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    let mut scale = 0f64;
    for &n in sizes {
        let g = build_grid(spec, n, n)?;
        let f: Vec<f64> = g.nodes().iter().map(|m| exact.laplacian(m.x, m.y)).collect();
        let (u, _) = solve_poisson(
            &g,
            &f,
            |which, j| {
                let m = g.node(g.boundary_row(which), j);
                exact.value(m.x, m.y)
            },
            opts,
        )?;
        let mut linf = 0f64;
        let mut l2 = 0.0;
        for (k, m) in g.nodes().iter().enumerate() {
            let e = u.values()[k] - exact.value(m.x, m.y);
            scale = scale.max(exact.value(m.x, m.y).abs());
            linf = linf.max(e.abs());
            l2 += g.area_weights()[k] * e * e;
        }
        let area: f64 = g.area_weights().iter().sum();
        rows.push(MmsRow {
            n,
            h: 1.0 / (n - 1) as f64,
            linf,
            l2: (l2 / area).sqrt(),
        });
    }
    let exact_level = 1e-10 * (1.0 + scale);
    let order = |err: &dyn Fn(&MmsRow) -> f64| {
        if rows.iter().all(|r| err(r) <= exact_level) {
            ConvergenceOrder::Exact
        } else {
            let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
            let es: Vec<f64> = rows.iter().map(|r| err(r).max(f64::MIN_POSITIVE)).collect();
            ConvergenceOrder::Fitted {
                slope: fitted_slope(&hs, &es),
            }
        }
    };
    let order_linf = order(&|r: &MmsRow| r.linf);
    let order_l2 = order(&|r: &MmsRow| r.l2);
    Ok(MmsStudy {
        rows,
        order_linf,
        order_l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FourierRadius;
    use crate::model::model_u;

    fn model_a() -> ModelParams {
        ModelParams::new(0.0, 4.0, 1.0, 1.5).unwrap()
    }

    fn perturbed_spec() -> DomainSpec {
        DomainSpec {
            inner: FourierRadius::circle(1.0).with_cos_mode(3, 0.1),
            outer: FourierRadius::circle(2.0),
        }
    }

    #[test]
    fn interleaving_is_a_permutation_with_short_hops() {
        for nt in [16, 17, 64, 129] {
            let pos = interleaved_theta_order(nt);
            let mut seen = pos.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..nt).collect::<Vec<_>>());
            for j in 0..nt {
                assert!(pos[j].abs_diff(pos[(j + 1) % nt]) <= 2);
            }
        }
    }

    #[test]
    fn constant_data_gives_constant_field() {
        let g = build_grid(&perturbed_spec(), 17, 32).unwrap();
        let (u, stats) = solve_dirichlet(&g, &vec![0.0; g.len()], 0.75, 0.75, &SolveOptions::default()).unwrap();
        assert!(u.values().iter().all(|v| (v - 0.75).abs() < 1e-12));
        assert!(stats.residual <= 1e-11);
    }

    #[test]
    fn linear_field_converges_at_second_order() {
        // analytic metrics on a curvilinear grid: linear fields are not reproduced exactly
        let study = mms_convergence(
            &perturbed_spec(),
            &ExactField::Linear { c: 0.3, gx: 1.0, gy: -0.5 },
            &[17, 33, 65],
            &SolveOptions::default(),
        )
        .unwrap();
        let slope = study.order_linf.slope().unwrap();
        assert!((slope - 2.0).abs() < 0.3, "{slope}");
        assert!(study.rows[2].linf < 1e-3);
    }

    #[test]
    fn direct_and_iterative_agree() {
        let g = build_grid(&perturbed_spec(), 17, 32).unwrap();
        let f = vec![-2.0; g.len()];
        let direct = SolveOptions {
            method: SolverChoice::Direct,
            ..Default::default()
        };
        let iterative = SolveOptions {
            method: SolverChoice::Iterative,
            ..Default::default()
        };
        let (u1, s1) = solve_dirichlet(&g, &f, -0.5, 0.4, &direct).unwrap();
        let (u2, s2) = solve_dirichlet(&g, &f, -0.5, 0.4, &iterative).unwrap();
        assert_eq!(s1.method, SolverChoice::Direct);
        assert_eq!(s2.method, SolverChoice::Iterative);
        assert!(s2.iterations > 0 && s2.residual <= 1e-11);
        for (a, b) in u1.values().iter().zip(u2.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn discrete_laplacian_matches_rhs() {
        let g = build_grid(&perturbed_spec(), 17, 32).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|m| -2.0 + 0.1 * m.x).collect();
        let (u, _) = solve_dirichlet(&g, &f, 1.0, 0.0, &SolveOptions::default()).unwrap();
        let lap = discrete_laplacian(&g, &u).unwrap();
        for i in 1..g.ns() - 1 {
            for j in 0..g.ntheta() {
                let k = g.index(i, j);
                assert!((lap[k] - f[k]).abs() < 1e-7, "{} vs {}", lap[k], f[k]);
            }
        }
    }

    #[test]
    fn bad_options_rejected() {
        let g = build_grid(&DomainSpec::annulus(1.0, 2.0), 9, 16).unwrap();
        let opts = SolveOptions {
            tolerance: 1e-3,
            ..Default::default()
        };
        assert!(matches!(
            solve_dirichlet(&g, &vec![0.0; g.len()], 0.0, 0.0, &opts),
            Err(Error::InvalidInput(_))
        ));
        let mut f = vec![0.0; g.len()];
        f[3] = f64::NAN;
        assert!(solve_dirichlet(&g, &f, 0.0, 0.0, &SolveOptions::default()).is_err());
    }

    #[test]
    fn gradient_of_linear_and_constant() {
        let g = build_grid(&perturbed_spec(), 17, 64).unwrap();
        let u = ScalarField::from_fn(&g, |x, _| x);
        let gr = gradient_field(&g, &u).unwrap();
        assert!(gr.w.iter().all(|w| (w - 1.0).abs() < 1e-10));
        let c = ScalarField::from_fn(&g, |_, _| 3.0);
        let gr = gradient_field(&g, &c).unwrap();
        assert!(gr.w.iter().all(|w| w.abs() < 1e-20));
    }

    #[test]
    fn gradient_of_model_a_on_polar_grid() {
        // Ns = 33 puts r = 1.2 on the node s = 0.4 (i = 12, 1 + 12/32 * 0.5 = 1.1875); use Ns = 41: r = 1 + 16/40*0.5 = 1.2
        let g = build_grid(&DomainSpec::annulus(1.0, 1.5), 41, 32).unwrap();
        let p = model_a();
        let u = ScalarField::from_fn(&g, |x, y| model_u(&p, x.hypot(y)).unwrap());
        let gr = gradient_field(&g, &u).unwrap();
        let w = gr.w[g.index(16, 0)];
        assert!((g.node(16, 0).r - 1.2).abs() < 1e-14);
        assert!((w - 4.551_111_111_111_111).abs() < 1e-3, "{w}");
    }

    #[test]
    fn neumann_trace_of_model_a() {
        let g = build_grid(&DomainSpec::annulus(1.0, 1.5), 65, 32).unwrap();
        let p = model_a();
        let (u, _) = solve_dirichlet(&g, &vec![-2.0; g.len()], -0.5, model_u(&p, 1.5).unwrap(), &SolveOptions::default()).unwrap();
        let inner = neumann_trace(&g, &u, Boundary::Inner).unwrap();
        let outer = neumann_trace(&g, &u, Boundary::Outer).unwrap();
        assert!(inner.values.iter().all(|v| (v + 3.0).abs() < 1e-3));
        assert!(outer.values.iter().all(|v| (v - 7.0 / 6.0).abs() < 1e-3));
        let c = ScalarField::from_fn(&g, |_, _| 1.0);
        assert!(neumann_trace(&g, &c, Boundary::Inner).unwrap().values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn mms_needs_three_sizes() {
        let err = mms_convergence(
            &DomainSpec::annulus(1.0, 1.5),
            &ExactField::Model { params: model_a() },
            &[17, 33],
            &SolveOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn mms_constant_is_exact() {
        let study = mms_convergence(
            &perturbed_spec(),
            &ExactField::Linear { c: 1.0, gx: 0.0, gy: 0.0 },
            &[17, 25, 33],
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(study.order_linf, ConvergenceOrder::Exact);
    }

    #[test]
    fn fitted_slope_of_power_law() {
        let hs = [0.1, 0.05, 0.025];
        let es: Vec<f64> = hs.iter().map(|h: &f64| 3.0 * h.powi(2)).collect();
        assert!((fitted_slope(&hs, &es) - 2.0).abs() < 1e-12);
    }
}
