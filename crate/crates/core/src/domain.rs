//! Doubly connected star-shaped domains, the curvilinear `(s, θ)` grid that
//! blends the two boundary curves, and the quadrature built on it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAX_FOURIER_DEGREE: usize = 16;
pub const MIN_NS: usize = 9;
pub const MIN_NTHETA: usize = 16;

const VALIDATION_SAMPLES: usize = 4096;
const BOUNDARY_QUADRATURE_POINTS: usize = 8192;

/// Radius function `ρ(θ) = c0 + Σₙ (cosₙ cos nθ + sinₙ sin nθ)`, `n = 1, 2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierRadius {
    pub c0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

/// `ρ`, `ρ′`, `ρ″` at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusSample {
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
}

impl FourierRadius {
    pub fn circle(radius: f64) -> Self {
        Self {
            c0: radius,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    /// Adds `eps·cos(mode·θ)` to the radius.
    pub fn with_cos_mode(mut self, mode: usize, eps: f64) -> Self {
        if mode == 0 {
            self.c0 += eps;
            return self;
        }
        if self.cos.len() < mode {
            self.cos.resize(mode, 0.0);
        }
        self.cos[mode - 1] += eps;
        self
    }

    pub fn degree(&self) -> usize {
        let last = |v: &[f64]| v.iter().rposition(|&c| c != 0.0).map_or(0, |p| p + 1);
        last(&self.cos).max(last(&self.sin))
    }

    pub fn eval(&self, theta: f64) -> RadiusSample {
        let mut s = RadiusSample {
            rho: self.c0,
            d1: 0.0,
            d2: 0.0,
        };
        let n_max = self.cos.len().max(self.sin.len());
        for n in 1..=n_max {
            let a = self.cos.get(n - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(n - 1).copied().unwrap_or(0.0);
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let nf = n as f64;
            let (sn, cn) = (nf * theta).sin_cos();
            s.rho += a * cn + b * sn;
            s.d1 += nf * (-a * sn + b * cn);
            s.d2 -= nf * nf * (a * cn + b * sn);
        }
        s
    }

    fn is_finite(&self) -> bool {
        self.c0.is_finite() && self.cos.iter().chain(&self.sin).all(|c| c.is_finite())
    }

    /// `½∫₀^{2π} ρ² dθ` by Parseval.
    pub fn enclosed_area(&self) -> f64 {
        let sq: f64 = self.cos.iter().chain(&self.sin).map(|c| c * c).sum();
        PI * self.c0 * self.c0 + 0.5 * PI * sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Inner,
    Outer,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::Inner => "inner",
            Boundary::Outer => "outer",
        }
    }
}

/// A doubly connected domain bounded by two star-shaped curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub inner: FourierRadius,
    pub outer: FourierRadius,
}

impl DomainSpec {
    pub fn annulus(r_inner: f64, r_outer: f64) -> Self {
        Self {
            inner: FourierRadius::circle(r_inner),
            outer: FourierRadius::circle(r_outer),
        }
    }

    pub fn curve(&self, which: Boundary) -> &FourierRadius {
        match which {
            Boundary::Inner => &self.inner,
            Boundary::Outer => &self.outer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("inner", &self.inner), ("outer", &self.outer)] {
            if !c.is_finite() {
                return Err(Error::InvalidDomain(format!("{name} radius has non-finite coefficients")));
            }
            if c.cos.len() > MAX_FOURIER_DEGREE || c.sin.len() > MAX_FOURIER_DEGREE {
                return Err(Error::InvalidDomain(format!(
                    "{name} radius exceeds Fourier degree {MAX_FOURIER_DEGREE}"
                )));
            }
        }
        for k in 0..VALIDATION_SAMPLES {
            let theta = 2.0 * PI * k as f64 / VALIDATION_SAMPLES as f64;
            let ri = self.inner.eval(theta).rho;
            let ro = self.outer.eval(theta).rho;
            if !(ri > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "inner radius {ri} <= 0 at theta = {theta:.6}"
                )));
            }
            if !(ro > ri) {
                return Err(Error::InvalidDomain(format!(
                    "curves cross: outer radius {ro} <= inner radius {ri} at theta = {theta:.6}"
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("domain spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Perimeter `∫₀^{2π} √(ρ² + ρ′²) dθ` by the periodic trapezoid rule.
pub fn boundary_length(spec: &DomainSpec, which: Boundary) -> f64 {
    let c = spec.curve(which);
    let n = BOUNDARY_QUADRATURE_POINTS;
    let dt = 2.0 * PI / n as f64;
    (0..n)
        .map(|k| {
            let s = c.eval(k as f64 * dt);
            s.rho.hypot(s.d1)
        })
        .sum::<f64>()
        * dt
}

/// Signed curvature of the boundary curve at angle `theta`.
pub fn boundary_curvature(spec: &DomainSpec, which: Boundary, theta: f64) -> f64 {
    let s = spec.curve(which).eval(theta);
    let q = s.rho * s.rho + s.d1 * s.d1;
    (s.rho * s.rho + 2.0 * s.d1 * s.d1 - s.rho * s.d2) / (q * q.sqrt())
}

/// Total turning `∫ κ ds` of a boundary curve.
pub fn total_curvature(spec: &DomainSpec, which: Boundary) -> f64 {
    let c = spec.curve(which);
    let n = BOUNDARY_QUADRATURE_POINTS;
    let dt = 2.0 * PI / n as f64;
    (0..n)
        .map(|k| {
            let theta = k as f64 * dt;
            let s = c.eval(theta);
            boundary_curvature(spec, which, theta) * s.rho.hypot(s.d1)
        })
        .sum::<f64>()
        * dt
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionAreas {
    /// Area enclosed by the inner curve.
    pub inner: f64,
    /// Area enclosed by the outer curve.
    pub outer: f64,
    /// Area of the annular region between them.
    pub annulus: f64,
}

pub fn region_areas(spec: &DomainSpec) -> RegionAreas {
    let inner = spec.inner.enclosed_area();
    let outer = spec.outer.enclosed_area();
    RegionAreas {
        inner,
        outer,
        annulus: outer - inner,
    }
}

/// Geometry of the map `(s, θ) ↦ r(s,θ)(cos θ, sin θ)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    /// `det ∂(x,y)/∂(s,θ) = (ρ_o - ρ_i)·r`.
    pub jacobian: f64,
    pub g_ss: f64,
    pub g_st: f64,
    pub g_tt: f64,
    /// Rows of the inverse Jacobian: `∇s = (s_x, s_y)`, `∇θ = (t_x, t_y)`.
    pub s_x: f64,
    pub s_y: f64,
    pub t_x: f64,
    pub t_y: f64,
}

impl Metric {
    /// `J g^{ss}`, `J g^{sθ}`, `J g^{θθ}`: the divergence-form coefficients.
    pub fn flux_coefficients(&self) -> (f64, f64, f64) {
        (
            self.jacobian * self.g_ss,
            self.jacobian * self.g_st,
            self.jacobian * self.g_tt,
        )
    }
}

pub fn metric_at(spec: &DomainSpec, s: f64, theta: f64) -> Metric {
    let pi = spec.inner.eval(theta);
    let po = spec.outer.eval(theta);
    let gap = po.rho - pi.rho;
    let gap_d = po.d1 - pi.d1;
    let r = pi.rho + s * gap;
    let r_t = pi.d1 + s * gap_d;
    let (sn, cs) = theta.sin_cos();
    let (x_s, y_s) = (gap * cs, gap * sn);
    let (x_t, y_t) = (r_t * cs - r * sn, r_t * sn + r * cs);
    let jacobian = gap * r;
    let r2 = r * r;
    Metric {
        x: r * cs,
        y: r * sn,
        r,
        jacobian,
        g_ss: (r_t * r_t + r2) / (gap * gap * r2),
        g_st: -r_t / (gap * r2),
        g_tt: 1.0 / r2,
        s_x: y_t / jacobian,
        s_y: -x_t / jacobian,
        t_x: -y_s / jacobian,
        t_y: x_s / jacobian,
    }
}

/// Node counts along `s` and `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub ns: usize,
    pub ntheta: usize,
}

impl Resolution {
    pub fn square(n: usize) -> Self {
        Self { ns: n, ntheta: n }
    }
}

/// Structured curvilinear grid on a [`DomainSpec`]; node `(i, j)` sits at
/// `s = i/(ns-1)`, `θ = 2πj/ntheta` and is stored at index `i·ntheta + j`.
#[derive(Debug, Clone)]
pub struct CurvGrid {
    spec: DomainSpec,
    ns: usize,
    ntheta: usize,
    nodes: Vec<Metric>,
    area_weights: Vec<f64>,
    inner_arc: Vec<f64>,
    outer_arc: Vec<f64>,
}

pub fn build_grid(spec: &DomainSpec, ns: usize, ntheta: usize) -> Result<CurvGrid> {
    if ns < MIN_NS || ntheta < MIN_NTHETA {
        return Err(Error::InvalidInput(format!(
            "grid {ns}x{ntheta} below minimum {MIN_NS}x{MIN_NTHETA}"
        )));
    }
    spec.validate()?;
    let ds = 1.0 / (ns - 1) as f64;
    let dtheta = 2.0 * PI / ntheta as f64;
    let mut nodes = Vec::with_capacity(ns * ntheta);
    let mut area_weights = Vec::with_capacity(ns * ntheta);
    for i in 0..ns {
        let s = if i == ns - 1 { 1.0 } else { i as f64 * ds };
        let ws = if i == 0 || i == ns - 1 { 0.5 * ds } else { ds };
        for j in 0..ntheta {
            let m = metric_at(spec, s, j as f64 * dtheta);
            if !(m.jacobian > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "non-positive Jacobian {} at node ({i}, {j})",
                    m.jacobian
                )));
            }
            area_weights.push(m.jacobian * ws * dtheta);
            nodes.push(m);
        }
    }
    let arc = |c: &FourierRadius| -> Vec<f64> {
        (0..ntheta)
            .map(|j| {
                let s = c.eval(j as f64 * dtheta);
                s.rho.hypot(s.d1) * dtheta
            })
            .collect()
    };
    Ok(CurvGrid {
        inner_arc: arc(&spec.inner),
        outer_arc: arc(&spec.outer),
        spec: spec.clone(),
        ns,
        ntheta,
        nodes,
        area_weights,
    })
}

impl CurvGrid {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn len(&self) -> usize {
        self.ns * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ds(&self) -> f64 {
        1.0 / (self.ns - 1) as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.ntheta as f64
    }

    pub fn s(&self, i: usize) -> f64 {
        if i == self.ns - 1 {
            1.0
        } else {
            i as f64 * self.ds()
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ntheta + j
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> &Metric {
        &self.nodes[self.index(i, j)]
    }

    pub fn nodes(&self) -> &[Metric] {
        &self.nodes
    }

    pub fn area_weights(&self) -> &[f64] {
        &self.area_weights
    }

    /// Arc-length quadrature weights of the boundary nodes, indexed by `θ`.
    pub fn arc_weights(&self, which: Boundary) -> &[f64] {
        match which {
            Boundary::Inner => &self.inner_arc,
            Boundary::Outer => &self.outer_arc,
        }
    }

    pub fn boundary_row(&self, which: Boundary) -> usize {
        match which {
            Boundary::Inner => 0,
            Boundary::Outer => self.ns - 1,
        }
    }

    /// Mean physical spacing between consecutive `s`-rows.
    pub fn radial_spacing(&self) -> f64 {
        let gap: f64 = (0..self.ntheta)
            .map(|j| {
                let t = self.theta(j);
                self.spec.outer.eval(t).rho - self.spec.inner.eval(t).rho
            })
            .sum::<f64>()
            / self.ntheta as f64;
        gap * self.ds()
    }

    pub fn metric_at(&self, s: f64, theta: f64) -> Metric {
        metric_at(&self.spec, s, theta)
    }

    /// Minimum distance from `(x, y)` to one of the boundary curves.
    pub fn distance_to_boundary(&self, which: Boundary, x: f64, y: f64) -> f64 {
        let c = self.spec.curve(which);
        let theta0 = y.atan2(x);
        let dist2 = |t: f64| {
            let s = c.eval(t);
            let (sn, cs) = t.sin_cos();
            (s.rho * cs - x).powi(2) + (s.rho * sn - y).powi(2)
        };
        // coarse scan around the polar angle of the point, then Newton on d/dθ |γ(θ) - p|²
        let mut best = theta0;
        let mut best_d = dist2(theta0);
        let n = 128;
        for k in 0..=n {
            let t = theta0 - 0.5 + k as f64 / n as f64;
            let d = dist2(t);
            if d < best_d {
                best_d = d;
                best = t;
            }
        }
        let mut t = best;
        for _ in 0..20 {
            let s = c.eval(t);
            let (sn, cs) = t.sin_cos();
            let (gx, gy) = (s.rho * cs, s.rho * sn);
            let (dx, dy) = (s.d1 * cs - s.rho * sn, s.d1 * sn + s.rho * cs);
            let (ddx, ddy) = (
                s.d2 * cs - 2.0 * s.d1 * sn - s.rho * cs,
                s.d2 * sn + 2.0 * s.d1 * cs - s.rho * sn,
            );
            let g = (gx - x) * dx + (gy - y) * dy;
            let dg = dx * dx + dy * dy + (gx - x) * ddx + (gy - y) * ddy;
            if dg <= 0.0 {
                break;
            }
            let step = g / dg;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let d = dist2(t);
        if d < best_d {
            d.sqrt()
        } else {
            best_d.sqrt()
        }
    }
}

/// `Σ f·w` with the grid's area weights (trapezoid in `s` and `θ`, times the Jacobian).
pub fn integrate_area(g: &CurvGrid, f: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::InvalidInput(format!(
            "field has {} values, grid has {} nodes",
            f.len(),
            g.len()
        )));
    }
    Ok(f.iter().zip(&g.area_weights).map(|(v, w)| v * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perturbed(eps: f64) -> DomainSpec {
        DomainSpec {
            inner: FourierRadius::circle(1.0).with_cos_mode(3, eps),
            outer: FourierRadius::circle(2.0),
        }
    }

    #[test]
    fn polar_grid_nodes() {
        let g = build_grid(&DomainSpec::annulus(1.0, 1.5), 33, 64).unwrap();
        let n = g.node(16, 0);
        assert!((n.x - 1.25).abs() < 1e-15 && n.y.abs() < 1e-15);
        assert_eq!(g.node(0, 0).r, 1.0);
        assert_eq!(g.node(32, 5).r, 1.5);
    }

    #[test]
    fn perturbed_grid_has_positive_jacobian() {
        let g = build_grid(&perturbed(0.1), 33, 64).unwrap();
        assert!(g.nodes().iter().all(|m| m.jacobian > 0.0));
    }

    #[test]
    fn inverted_radii_rejected() {
        let err = build_grid(&DomainSpec::annulus(2.0, 1.0), 33, 64).unwrap_err();
        assert!(matches!(err, Error::InvalidDomain(_)));
        let err = build_grid(&DomainSpec::annulus(1.0, 2.0), 8, 64).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn degree_limit() {
        let spec = DomainSpec {
            inner: FourierRadius {
                c0: 1.0,
                cos: vec![0.0; 17],
                sin: vec![],
            },
            outer: FourierRadius::circle(2.0),
        };
        assert!(matches!(spec.validate(), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn circle_lengths_and_curvature() {
        let spec = DomainSpec::annulus(1.0, 1.5);
        assert!((boundary_length(&spec, Boundary::Outer) - 2.0 * PI * 1.5).abs() < 1e-12);
        assert!((boundary_length(&spec, Boundary::Inner) - 2.0 * PI).abs() < 1e-12);
        for t in [0.0, 1.0, 4.0] {
            assert!((boundary_curvature(&spec, Boundary::Outer, t) - 1.0 / 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbed_length_and_curvature() {
        let spec = perturbed(0.1);
        // mpmath quadrature reference
        let len = boundary_length(&spec, Boundary::Inner);
        assert!((len - 6.422_589_333_051_1).abs() < 1e-10 * len, "{len}");
        assert!(len > 2.0 * PI);
        let k = boundary_curvature(&spec, Boundary::Inner, 0.0);
        assert!((k - 1.652_892_561_983_471).abs() < 1e-13, "{k}");
        assert!((total_curvature(&spec, Boundary::Inner) - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn areas() {
        let a = region_areas(&DomainSpec::annulus(1.0, 1.5));
        assert!((a.inner - PI).abs() < 1e-15);
        assert!((a.outer - 2.25 * PI).abs() < 1e-14);
        assert!((a.annulus - 1.25 * PI).abs() < 1e-14);
        let eps = 0.1;
        let a = region_areas(&perturbed(eps));
        assert!((a.inner - PI * (1.0 + eps * eps / 2.0)).abs() < 1e-14);
        let thin = DomainSpec::annulus(1.0, 1.0 + 1e-9);
        assert!(region_areas(&thin).annulus < 1e-8);
    }

    #[test]
    fn integrate_area_examples() {
        let g = build_grid(&DomainSpec::annulus(1.0, 1.5), 128, 128).unwrap();
        let ones = vec![1.0; g.len()];
        assert!((integrate_area(&g, &ones).unwrap() - 1.25 * PI).abs() < 1e-6);
        assert_eq!(integrate_area(&g, &vec![0.0; g.len()]).unwrap(), 0.0);
        assert!(matches!(integrate_area(&g, &[1.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn distance_to_circle() {
        let g = build_grid(&DomainSpec::annulus(1.0, 2.0), 9, 16).unwrap();
        let d = g.distance_to_boundary(Boundary::Inner, 1.3 * 0.6, 1.3 * 0.8);
        assert!((d - 0.3).abs() < 1e-12);
        let d = g.distance_to_boundary(Boundary::Outer, 1.3 * 0.6, 1.3 * 0.8);
        assert!((d - 0.7).abs() < 1e-12);
    }
}
