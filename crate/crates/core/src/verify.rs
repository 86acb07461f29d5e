//! Checks of the integral identities and pointwise inequalities that a
//! solution of the overdetermined problem must satisfy, evaluated on a solved
//! field, and the aggregated report.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{
    boundary_length, build_grid, integrate_area, region_areas, Boundary, CurvGrid, DomainSpec,
    Resolution,
};
use crate::error::{Error, Result};
use crate::model::{
    boundary_data_of, classify_case, fit_model, model_u_unchecked, phi, phi_dot, pseudo_radius,
    refined_k, singular_cutoff, violated_condition, w0_of_psi, BoundaryData, ModelParams,
    Monotonicity, ProblemCase,
};
use crate::solver::{
    gradient_field, neumann_trace, solve_dirichlet, BoundaryTrace, ScalarField, SolveOptions,
    SolveStats, SolverChoice,
};

/// Overshoot of the field past the model's value range absorbed by clipping,
/// relative to the width of that range.
pub const CLIP_TOLERANCE: f64 = 1e-8;
/// Half-width of the band around `Ψ = √M` excluded from the weighted
/// integrals, as a multiple of `√M`.
pub const EXCISION_FACTOR: f64 = 1e-4;
/// A boundary whose mean normal derivative is below this is treated as degenerate.
pub const DEGENERATE_FLUX: f64 = 1e-3;

/// Pass/fail thresholds applied by [`full_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub neumann_sd: f64,
    pub pohozaev: f64,
    pub gradient_margin: f64,
    pub area: f64,
    pub divergence_identity: f64,
    pub refined_identity: f64,
    pub case1_margin: f64,
    pub expansion: f64,
    pub clip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            neumann_sd: 1e-2,
            pohozaev: 5e-3,
            gradient_margin: 5e-3,
            area: 1e-8,
            divergence_identity: 1e-2,
            refined_identity: 2e-2,
            case1_margin: 2e-2,
            expansion: 0.1,
            clip: CLIP_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannStats {
    pub mean: f64,
    pub sd: f64,
    pub max_dev: f64,
}

/// Arc-length weighted mean, standard deviation and largest deviation from the mean.
pub fn weighted_stats(values: &[f64], weights: &[f64]) -> Result<NeumannStats> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "{} values with {} weights",
            values.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("weights must have positive sum".into()));
    }
    // shift by the first value so a constant trace gives its value back exactly
    let v0 = values[0];
    let shift = values
        .iter()
        .zip(weights)
        .map(|(v, w)| (v - v0) * w)
        .sum::<f64>()
        / total;
    let mean = v0 + shift;
    let var = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean).powi(2))
        .sum::<f64>()
        / total;
    let max_dev = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    Ok(NeumannStats {
        mean,
        sd: var.sqrt(),
        max_dev,
    })
}

pub fn neumann_constancy(trace: &BoundaryTrace) -> Result<NeumannStats> {
    weighted_stats(&trace.values, &trace.arc_weights)
}

/// Boundary constants read off a solved field: Dirichlet values as imposed,
/// Neumann values as arc-weighted means of the traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredBoundary {
    pub data: BoundaryData,
    pub inner: NeumannStats,
    pub outer: NeumannStats,
}

pub fn measured_boundary_data(g: &CurvGrid, u: &ScalarField) -> Result<MeasuredBoundary> {
    u.check_grid(g)?;
    let row_mean = |which: Boundary| -> Result<f64> {
        let i = g.boundary_row(which);
        let vals: Vec<f64> = (0..g.ntheta()).map(|j| u.at(i, j)).collect();
        Ok(weighted_stats(&vals, g.arc_weights(which))?.mean)
    };
    let inner = neumann_constancy(&neumann_trace(g, u, Boundary::Inner)?)?;
    let outer = neumann_constancy(&neumann_trace(g, u, Boundary::Outer)?)?;
    Ok(MeasuredBoundary {
        data: BoundaryData::new(
            row_mean(Boundary::Inner)?,
            row_mean(Boundary::Outer)?,
            inner.mean,
            outer.mean,
        ),
        inner,
        outer,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PohozaevTerms {
    /// `∫ 4u` over the domain.
    pub volume: f64,
    /// `(4b+β²)|E_o| - (4a+α²)|E_i|` with `E` the regions enclosed by each curve.
    pub boundary: f64,
    pub residual: f64,
}

pub fn pohozaev_terms(g: &CurvGrid, u: &ScalarField, d: &BoundaryData) -> Result<PohozaevTerms> {
    u.check_grid(g)?;
    let four_u: Vec<f64> = u.values().iter().map(|v| 4.0 * v).collect();
    let volume = integrate_area(g, &four_u)?;
    let areas = region_areas(g.spec());
    let boundary = d.outer_pohozaev_weight() * areas.outer - d.inner_pohozaev_weight() * areas.inner;
    Ok(PohozaevTerms {
        volume,
        boundary,
        residual: volume - boundary,
    })
}

pub fn pohozaev_residual(g: &CurvGrid, u: &ScalarField, d: &BoundaryData) -> Result<f64> {
    Ok(pohozaev_terms(g, u, d)?.residual)
}

fn node_of(g: &CurvGrid, k: usize) -> (usize, usize) {
    (k / g.ntheta(), k % g.ntheta())
}

/// `Ψ` at every node: the radius at which the model takes the field's value.
/// Values past the model range by at most [`CLIP_TOLERANCE`] (relative) are clipped.
pub fn pseudo_radial_field(g: &CurvGrid, u: &ScalarField, p: &ModelParams) -> Result<Vec<f64>> {
    u.check_grid(g)?;
    p.monotonicity()?;
    let ui = model_u_unchecked(p, p.r_inner);
    let uo = model_u_unchecked(p, p.r_outer);
    let (lo, hi) = if ui < uo { (ui, uo) } else { (uo, ui) };
    let tol = CLIP_TOLERANCE * (hi - lo).max(1.0);
    u.values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            if v < lo - tol || v > hi + tol || !v.is_finite() {
                let (i, j) = node_of(g, k);
                return Err(Error::InconsistentModel(format!(
                    "u = {v} at node ({i}, {j}) outside model range [{lo}, {hi}] beyond clip tolerance"
                )));
            }
            pseudo_radius(p, v.clamp(lo, hi))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientMargin {
    /// `max (W - W₀)` over interior nodes.
    pub max: f64,
    pub node: (usize, usize),
    pub x: f64,
    pub y: f64,
}

pub fn gradient_bound_margin(g: &CurvGrid, u: &ScalarField, p: &ModelParams) -> Result<GradientMargin> {
    let psi = pseudo_radial_field(g, u, p)?;
    let grad = gradient_field(g, u)?;
    let mut best = GradientMargin {
        max: f64::NEG_INFINITY,
        node: (0, 0),
        x: 0.0,
        y: 0.0,
    };
    for i in 1..g.ns() - 1 {
        for j in 0..g.ntheta() {
            let k = g.index(i, j);
            let margin = grad.w[k] - w0_of_psi(p, psi[k]);
            if margin > best.max {
                let m = g.node(i, j);
                best = GradientMargin {
                    max: margin,
                    node: (i, j),
                    x: m.x,
                    y: m.y,
                };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaMargins {
    /// `|Γ_i| - 2π r_i`, expected `<= 0`.
    pub inner: f64,
    /// `|Γ_o| - 2π r_o`, expected `>= 0`.
    pub outer: f64,
}

pub fn area_bound_check(spec: &DomainSpec, p: &ModelParams) -> AreaMargins {
    AreaMargins {
        inner: boundary_length(spec, Boundary::Inner) - 2.0 * PI * p.r_inner,
        outer: boundary_length(spec, Boundary::Outer) - 2.0 * PI * p.r_outer,
    }
}

fn regime_error(p: &ModelParams, reason: &str) -> Error {
    let case = classify_case(&boundary_data_of(p)).unwrap_or(ProblemCase::Inadmissible);
    Error::UnsupportedRegime {
        case,
        reason: reason.to_string(),
    }
}

/// Nodes used by the weighted integrals: those with `|Ψ - √M| >= cutoff`.
/// With a zero cutoff a node sitting on `√M` is a singular-evaluation error.
fn kept_nodes(g: &CurvGrid, p: &ModelParams, psi: &[f64], cutoff: f64) -> Result<Vec<bool>> {
    let sm = p.sqrt_m();
    psi.iter()
        .enumerate()
        .map(|(k, &s)| {
            if (s - sm).abs() < cutoff {
                return Ok(false);
            }
            let gap = p.log_coeff - s * s;
            if gap.abs() < singular_cutoff(p) {
                return Err(Error::Singular {
                    psi: s,
                    gap: gap.abs(),
                    location: Some(node_of(g, k)),
                });
            }
            Ok(true)
        })
        .collect()
}

fn resolve_cutoff(p: &ModelParams, cutoff: Option<f64>) -> Result<f64> {
    let c = cutoff.unwrap_or(EXCISION_FACTOR * p.sqrt_m());
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!("excision cutoff {c} must be finite and >= 0")));
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceIdentity {
    /// `∫ 2Ψ²/(M-Ψ²)³ (W₀ - W)`.
    pub interior: f64,
    /// `∫_{Γ_i} |∇u|/(M-Ψ²)`.
    pub inner_boundary: f64,
    /// `∫_{Γ_o} |∇u|/(M-Ψ²)`.
    pub outer_boundary: f64,
    pub residual: f64,
    pub cutoff: f64,
    pub excised_nodes: usize,
}

/// `∫_Γ |∇u|/(M - r²) dσ` on a level boundary at model radius `r`; inside the
/// excision band the model limit `1/r` replaces the ratio.
fn boundary_ratio_integral(
    g: &CurvGrid,
    u: &ScalarField,
    p: &ModelParams,
    which: Boundary,
    r: f64,
    cutoff: f64,
) -> Result<f64> {
    let trace = neumann_trace(g, u, which)?;
    if (r - p.sqrt_m()).abs() < cutoff {
        return Ok(trace.arc_weights.iter().sum::<f64>() / r);
    }
    let gap = p.log_coeff - r * r;
    if gap.abs() < singular_cutoff(p) {
        return Err(Error::Singular {
            psi: r,
            gap: gap.abs(),
            location: Some((g.boundary_row(which), 0)),
        });
    }
    Ok(trace
        .values
        .iter()
        .zip(&trace.arc_weights)
        .map(|(v, w)| v.abs() / gap * w)
        .sum())
}

/// The weighted divergence identity of the increasing case. `cutoff` defaults
/// to `EXCISION_FACTOR·√M`.
pub fn divergence_identity_residual(
    g: &CurvGrid,
    u: &ScalarField,
    p: &ModelParams,
    cutoff: Option<f64>,
) -> Result<DivergenceIdentity> {
    if p.monotonicity()? != Monotonicity::Increasing {
        return Err(regime_error(p, "divergence identity applies to the increasing case"));
    }
    let cutoff = resolve_cutoff(p, cutoff)?;
    let psi = pseudo_radial_field(g, u, p)?;
    let grad = gradient_field(g, u)?;
    let keep = kept_nodes(g, p, &psi, cutoff)?;
    let m = p.log_coeff;
    let integrand: Vec<f64> = (0..g.len())
        .map(|k| {
            if !keep[k] {
                return 0.0;
            }
            let s2 = psi[k] * psi[k];
            2.0 * s2 / (m - s2).powi(3) * (w0_of_psi(p, psi[k]) - grad.w[k])
        })
        .collect();
    let interior = integrate_area(g, &integrand)?;
    let inner_boundary = boundary_ratio_integral(g, u, p, Boundary::Inner, p.r_inner, cutoff)?;
    let outer_boundary = boundary_ratio_integral(g, u, p, Boundary::Outer, p.r_outer, cutoff)?;
    Ok(DivergenceIdentity {
        interior,
        inner_boundary,
        outer_boundary,
        residual: interior - (inner_boundary - outer_boundary),
        cutoff,
        excised_nodes: keep.iter().filter(|k| !**k).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedPohozaev {
    pub k: f64,
    /// `∫ 4u`.
    pub volume: f64,
    /// `∫ φ̇(W - W₀)`.
    pub weighted: f64,
    /// `α φ(a) |Γ_i| + β φ(b) |Γ_o|`.
    pub boundary: f64,
    pub identity_residual: f64,
    /// `(M(4a+α²-4L-M)+k)/2 · (|Γ_i|/r_i - |Γ_o|/r_o)`.
    pub case1_rhs: f64,
    pub case1_margin: f64,
    pub cutoff: f64,
    pub excised_nodes: usize,
}

fn with_location(e: Error, loc: (usize, usize)) -> Error {
    match e {
        Error::Singular { psi, gap, .. } => Error::Singular {
            psi,
            gap,
            location: Some(loc),
        },
        other => other,
    }
}

/// The refined Pohozaev identity and inequality of the decreasing case.
/// `k` defaults to [`refined_k`], `cutoff` to `EXCISION_FACTOR·√M`.
pub fn refined_pohozaev_check(
    g: &CurvGrid,
    u: &ScalarField,
    p: &ModelParams,
    k: Option<f64>,
    cutoff: Option<f64>,
) -> Result<RefinedPohozaev> {
    if p.monotonicity()? != Monotonicity::Decreasing {
        return Err(regime_error(p, "refined Pohozaev check applies to the covered decreasing case"));
    }
    let k = match k {
        Some(k) => k,
        None => refined_k(p)?,
    };
    let cutoff = resolve_cutoff(p, cutoff)?;
    let psi = pseudo_radial_field(g, u, p)?;
    let grad = gradient_field(g, u)?;
    let keep = kept_nodes(g, p, &psi, cutoff)?;
    let mut integrand = vec![0.0; g.len()];
    for (kk, v) in integrand.iter_mut().enumerate() {
        if keep[kk] {
            let pd = phi_dot(p, k, psi[kk]).map_err(|e| with_location(e, node_of(g, kk)))?;
            *v = pd * (grad.w[kk] - w0_of_psi(p, psi[kk]));
        }
    }
    let weighted = integrate_area(g, &integrand)?;
    let four_u: Vec<f64> = u.values().iter().map(|v| 4.0 * v).collect();
    let volume = integrate_area(g, &four_u)?;

    let d = boundary_data_of(p);
    let spec = g.spec();
    let len_i = boundary_length(spec, Boundary::Inner);
    let len_o = boundary_length(spec, Boundary::Outer);
    let term = |flux: f64, r: f64, len: f64, which: Boundary| -> Result<f64> {
        // degenerate boundary: the flux vanishes and φ stays bounded
        if (r - p.sqrt_m()).abs() < cutoff {
            return Ok(0.0);
        }
        let ph = phi(p, k, r).map_err(|e| with_location(e, (g.boundary_row(which), 0)))?;
        Ok(flux * ph * len)
    };
    let boundary = term(d.inner_flux, p.r_inner, len_i, Boundary::Inner)?
        + term(d.outer_flux, p.r_outer, len_o, Boundary::Outer)?;
    let (l, m) = (p.offset, p.log_coeff);
    let coeff = 0.5
        * (m * (4.0 * d.inner_value + d.inner_flux * d.inner_flux - 4.0 * l - m) + k);
    let case1_rhs = coeff * (len_i / p.r_inner - len_o / p.r_outer);
    Ok(RefinedPohozaev {
        k,
        volume,
        weighted,
        boundary,
        identity_residual: volume - (weighted - boundary),
        case1_rhs,
        case1_margin: weighted - case1_rhs,
        cutoff,
        excised_nodes: keep.iter().filter(|k| !**k).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub boundary: Boundary,
    /// Dirichlet value the expansion is taken around.
    pub value: f64,
    /// Least-squares `κ` in `u - value ≈ κ·dist²`.
    pub coefficient: f64,
    pub nodes: usize,
    /// Mean radial grid spacing; the fit uses `dist ∈ [h, 10h]`.
    pub h: f64,
}

/// The boundary with the smaller mean normal derivative, if below [`DEGENERATE_FLUX`].
pub fn find_degenerate_boundary(g: &CurvGrid, u: &ScalarField) -> Result<Option<Boundary>> {
    let mut best: Option<(Boundary, f64)> = None;
    for which in [Boundary::Inner, Boundary::Outer] {
        let mean = neumann_constancy(&neumann_trace(g, u, which)?)?.mean.abs();
        if mean < DEGENERATE_FLUX && best.is_none_or(|(_, m)| mean < m) {
            best = Some((which, mean));
        }
    }
    Ok(best.map(|(b, _)| b))
}

/// Fits `u - c ≈ κ·dist²` near a boundary where the gradient vanishes.
pub fn degenerate_expansion_check(
    g: &CurvGrid,
    u: &ScalarField,
    which: Boundary,
    c: f64,
) -> Result<ExpansionFit> {
    u.check_grid(g)?;
    let mean = neumann_constancy(&neumann_trace(g, u, which)?)?.mean;
    if mean.abs() >= DEGENERATE_FLUX {
        return Err(Error::NotApplicable(format!(
            "{} boundary is not degenerate (mean normal derivative {mean})",
            which.as_str()
        )));
    }
    let h = g.radial_spacing();
    let (lo, hi) = (h * (1.0 - 1e-9), 10.0 * h * (1.0 + 1e-9));
    let rows: Vec<usize> = match which {
        Boundary::Inner => (0..g.ns()).collect(),
        Boundary::Outer => (0..g.ns()).rev().collect(),
    };
    let (mut num, mut den, mut count) = (0.0, 0.0, 0usize);
    for i in rows {
        let mut row_min = f64::INFINITY;
        for j in 0..g.ntheta() {
            let m = g.node(i, j);
            let d = g.distance_to_boundary(which, m.x, m.y);
            row_min = row_min.min(d);
            if d >= lo && d <= hi {
                let d2 = d * d;
                num += (u.at(i, j) - c) * d2;
                den += d2 * d2;
                count += 1;
            }
        }
        if row_min > hi {
            break;
        }
    }
    if count == 0 {
        return Err(Error::NotApplicable(format!(
            "no nodes within [h, 10h] of the {} boundary",
            which.as_str()
        )));
    }
    Ok(ExpansionFit {
        boundary: which,
        value: c,
        coefficient: num / den,
        nodes: count,
        h,
    })
}

/// Locates a degenerate boundary and fits the expansion around its Dirichlet value.
pub fn degenerate_expansion(g: &CurvGrid, u: &ScalarField) -> Result<ExpansionFit> {
    let which = find_degenerate_boundary(g, u)?
        .ok_or_else(|| Error::NotApplicable("no boundary with vanishing normal derivative".into()))?;
    let i = g.boundary_row(which);
    let vals: Vec<f64> = (0..g.ntheta()).map(|j| u.at(i, j)).collect();
    let c = weighted_stats(&vals, g.arc_weights(which))?.mean;
    degenerate_expansion_check(g, u, which, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Computed, but the hypotheses behind the bound do not hold for this field.
    Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub criterion: String,
    pub status: CheckStatus,
}

/// Linear-solve summary kept in reports; timing is left out so reports are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub method: SolverChoice,
    pub unknowns: usize,
    pub iterations: usize,
    pub residual: f64,
}

impl From<&SolveStats> for SolveSummary {
    fn from(s: &SolveStats) -> Self {
        Self {
            method: s.method,
            unknowns: s.unknowns,
            iterations: s.iterations,
            residual: s.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub case: ProblemCase,
    /// Which symmetry result the boundary data falls under.
    pub regime: String,
    /// Set when the Neumann data is not constant: the theorem checks are then
    /// reported but not judged.
    pub diagnostic_only: bool,
    pub resolution: Resolution,
    pub tolerances: Tolerances,
    pub prescribed: BoundaryData,
    pub measured: BoundaryData,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<ModelParams>,
    pub solve: SolveSummary,
    pub neumann_inner: NeumannStats,
    pub neumann_outer: NeumannStats,
    pub pohozaev: PohozaevTerms,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gradient_margin: Option<GradientMargin>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub area_margins: Option<AreaMargins>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub divergence_identity: Option<DivergenceIdentity>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub refined_pohozaev: Option<RefinedPohozaev>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expansion: Option<ExpansionFit>,
    pub checks: Vec<CheckOutcome>,
}

/// Column names of [`VerificationReport::csv_record`].
pub const CSV_COLUMNS: [&str; 14] = [
    "case",
    "Ns",
    "Ntheta",
    "eps",
    "neumann_sd_inner",
    "neumann_sd_outer",
    "pohozaev_res",
    "grad_margin",
    "area_margin_in",
    "area_margin_out",
    "div_identity_res",
    "refined_identity_res",
    "case1_margin",
    "expansion_coeff",
];

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    /// One CSV record in [`CSV_COLUMNS`] order; absent quantities are empty fields.
    pub fn csv_record(&self, eps: f64) -> Vec<String> {
        let num = |x: f64| format!("{x:e}");
        let opt = |v: Option<f64>| v.map_or(String::new(), num);
        vec![
            self.case.as_str().to_string(),
            self.resolution.ns.to_string(),
            self.resolution.ntheta.to_string(),
            eps.to_string(),
            num(self.neumann_inner.sd),
            num(self.neumann_outer.sd),
            num(self.pohozaev.residual),
            opt(self.gradient_margin.map(|g| g.max)),
            opt(self.area_margins.map(|a| a.inner)),
            opt(self.area_margins.map(|a| a.outer)),
            opt(self.divergence_identity.map(|d| d.residual)),
            opt(self.refined_pohozaev.map(|r| r.identity_residual)),
            opt(self.refined_pohozaev.map(|r| r.case1_margin)),
            opt(self.expansion.map(|e| e.coefficient)),
        ]
    }
}

fn regime_description(case: ProblemCase) -> &'static str {
    match case {
        ProblemCase::Increasing => {
            "increasing (a<b, alpha<0, beta>=0): solutions are radially symmetric and increasing"
        }
        ProblemCase::DecreasingCovered => {
            "decreasing, covered (a>b, alpha>=0, beta<0, 2a+alpha^2<=2b+beta^2): the domain must be an annulus"
        }
        ProblemCase::DecreasingUncovered => {
            "unproven regime (2a+alpha^2 > 2b+beta^2): no comparison model, Pohozaev and Neumann checks only"
        }
        ProblemCase::Inadmissible => "inadmissible: no solution exists",
    }
}

struct Judge {
    diagnostic: bool,
    checks: Vec<CheckOutcome>,
}

impl Judge {
    fn push(&mut self, name: &str, value: f64, criterion: String, ok: bool, theorem: bool) {
        let status = if theorem && self.diagnostic {
            CheckStatus::Diagnostic
        } else if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        self.checks.push(CheckOutcome {
            name: name.to_string(),
            value,
            criterion,
            status,
        });
    }
}

/// Classifies `d`, solves `Δu = -2` with its Dirichlet values on `spec` and
/// runs every check that applies to the case.
pub fn full_report(
    spec: &DomainSpec,
    d: &BoundaryData,
    res: Resolution,
    opts: &SolveOptions,
) -> Result<VerificationReport> {
    let case = classify_case(d)?;
    if case == ProblemCase::Inadmissible {
        return Err(Error::UnsupportedRegime {
            case,
            reason: violated_condition(d),
        });
    }
    let g = build_grid(spec, res.ns, res.ntheta)?;
    let f = vec![-2.0; g.len()];
    let (u, stats) = solve_dirichlet(&g, &f, d.inner_value, d.outer_value, opts)?;
    report_for_field(&g, &u, d, &stats)
}

/// The checks of [`full_report`] on an already solved field.
pub fn report_for_field(
    g: &CurvGrid,
    u: &ScalarField,
    d: &BoundaryData,
    stats: &SolveStats,
) -> Result<VerificationReport> {
    let case = classify_case(d)?;
    if case == ProblemCase::Inadmissible {
        return Err(Error::UnsupportedRegime {
            case,
            reason: violated_condition(d),
        });
    }
    let tol = Tolerances::default();
    let measured = measured_boundary_data(g, u)?;
    let pohozaev = pohozaev_terms(g, u, d)?;
    let symmetric = measured.inner.sd <= tol.neumann_sd && measured.outer.sd <= tol.neumann_sd;
    let mut judge = Judge {
        diagnostic: !symmetric,
        checks: Vec::new(),
    };
    judge.push(
        "neumann_sd_inner",
        measured.inner.sd,
        format!("<= {:e}", tol.neumann_sd),
        measured.inner.sd <= tol.neumann_sd,
        false,
    );
    judge.push(
        "neumann_sd_outer",
        measured.outer.sd,
        format!("<= {:e}", tol.neumann_sd),
        measured.outer.sd <= tol.neumann_sd,
        false,
    );
    judge.push(
        "pohozaev_res",
        pohozaev.residual,
        format!("|x| <= {:e}", tol.pohozaev),
        pohozaev.residual.abs() <= tol.pohozaev,
        false,
    );

    let mut report = VerificationReport {
        case,
        regime: regime_description(case).to_string(),
        diagnostic_only: !symmetric,
        resolution: Resolution {
            ns: g.ns(),
            ntheta: g.ntheta(),
        },
        tolerances: tol,
        prescribed: *d,
        measured: measured.data,
        model: None,
        solve: SolveSummary::from(stats),
        neumann_inner: measured.inner,
        neumann_outer: measured.outer,
        pohozaev,
        gradient_margin: None,
        area_margins: None,
        divergence_identity: None,
        refined_pohozaev: None,
        expansion: None,
        checks: Vec::new(),
    };
    if case == ProblemCase::DecreasingUncovered {
        report.checks = judge.checks;
        return Ok(report);
    }

    let p = fit_model(d)?;
    report.model = Some(p);

    let gm = gradient_bound_margin(g, u, &p)?;
    judge.push(
        "grad_margin",
        gm.max,
        format!("<= {:e}", tol.gradient_margin),
        gm.max <= tol.gradient_margin,
        true,
    );
    report.gradient_margin = Some(gm);

    let am = area_bound_check(g.spec(), &p);
    judge.push(
        "area_margin_in",
        am.inner,
        format!("<= {:e}", tol.area),
        am.inner <= tol.area,
        true,
    );
    judge.push(
        "area_margin_out",
        am.outer,
        format!(">= -{:e}", tol.area),
        am.outer >= -tol.area,
        true,
    );
    report.area_margins = Some(am);

    if case == ProblemCase::Increasing {
        let div = divergence_identity_residual(g, u, &p, None)?;
        judge.push(
            "div_identity_res",
            div.residual,
            format!("|x| <= {:e}", tol.divergence_identity),
            div.residual.abs() <= tol.divergence_identity,
            true,
        );
        report.divergence_identity = Some(div);
    } else {
        let rp = refined_pohozaev_check(g, u, &p, None, None)?;
        judge.push(
            "refined_identity_res",
            rp.identity_residual,
            format!("|x| <= {:e}", tol.refined_identity),
            rp.identity_residual.abs() <= tol.refined_identity,
            true,
        );
        judge.push(
            "case1_margin",
            rp.case1_margin,
            format!("|x| <= {:e}", tol.case1_margin),
            rp.case1_margin.abs() <= tol.case1_margin,
            true,
        );
        report.refined_pohozaev = Some(rp);
    }

    match degenerate_expansion(g, u) {
        Ok(fit) => {
            judge.push(
                "expansion_coeff",
                fit.coefficient,
                format!("within -1 ± {}", tol.expansion),
                (fit.coefficient + 1.0).abs() <= tol.expansion,
                true,
            );
            report.expansion = Some(fit);
        }
        Err(Error::NotApplicable(_)) => {}
        Err(e) => return Err(e),
    }
    report.checks = judge.checks;
    Ok(report)
}
