//! Rotationally symmetric model solutions `u(r) = L - r²/2 + M log r` of
//! `Δu = -2` on annuli, the map between model parameters and the four
//! overdetermined boundary constants, and the auxiliary functions used by
//! the integral checks.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The overdetermined boundary constants: Dirichlet values and outward normal
/// derivatives on the inner and outer boundary components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    #[serde(alias = "a")]
    pub inner_value: f64,
    #[serde(alias = "b")]
    pub outer_value: f64,
    /// `∂u/∂ν` on the inner boundary, `ν` pointing out of the domain (toward the hole).
    #[serde(alias = "alpha")]
    pub inner_flux: f64,
    /// `∂u/∂ν` on the outer boundary, `ν` pointing away from the origin.
    #[serde(alias = "beta")]
    pub outer_flux: f64,
}

impl BoundaryData {
    pub fn new(inner_value: f64, outer_value: f64, inner_flux: f64, outer_flux: f64) -> Self {
        Self {
            inner_value,
            outer_value,
            inner_flux,
            outer_flux,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.inner_value.is_finite()
            && self.outer_value.is_finite()
            && self.inner_flux.is_finite()
            && self.outer_flux.is_finite()
    }

    /// `4a + α²`, the inner Pohozaev weight.
    pub fn inner_pohozaev_weight(&self) -> f64 {
        4.0 * self.inner_value + self.inner_flux * self.inner_flux
    }

    /// `4b + β²`, the outer Pohozaev weight.
    pub fn outer_pohozaev_weight(&self) -> f64 {
        4.0 * self.outer_value + self.outer_flux * self.outer_flux
    }

    /// `4a + α² - 4b - β²`, the large-`M` limit of the compatibility function.
    pub fn pohozaev_gap(&self) -> f64 {
        self.inner_pohozaev_weight() - self.outer_pohozaev_weight()
    }
}

/// Parameters of the model solution `u = offset - r²/2 + log_coeff·log r` on
/// the annulus `r_inner < r < r_outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(alias = "L")]
    pub offset: f64,
    #[serde(alias = "M")]
    pub log_coeff: f64,
    pub r_inner: f64,
    pub r_outer: f64,
}

/// Radial monotonicity of a valid model on its annulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    /// `r_outer <= √M`: `u` increases with `r`.
    Increasing,
    /// `√M <= r_inner`: `u` decreases with `r`.
    Decreasing,
}

// Slack for the `r² = M` comparisons; fitted radii at a degenerate boundary
// land on √M only up to rounding.
const SQRT_M_SLACK: f64 = 1e-12;

impl ModelParams {
    pub fn new(offset: f64, log_coeff: f64, r_inner: f64, r_outer: f64) -> Result<Self> {
        let p = Self {
            offset,
            log_coeff,
            r_inner,
            r_outer,
        };
        p.monotonicity()?;
        Ok(p)
    }

    /// Checks the parameter invariants and reports on which side of `√M` the
    /// annulus lies.
    pub fn monotonicity(&self) -> Result<Monotonicity> {
        let Self {
            offset,
            log_coeff: m,
            r_inner: ri,
            r_outer: ro,
        } = *self;
        if !(offset.is_finite() && m.is_finite() && ri.is_finite() && ro.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite model parameters {self:?}")));
        }
        if m < 0.0 {
            return Err(Error::InvalidInput(format!("log coefficient M = {m} is negative")));
        }
        if !(ri > 0.0 && ro > ri) {
            return Err(Error::InvalidInput(format!(
                "radii must satisfy 0 < r_inner < r_outer (got {ri}, {ro})"
            )));
        }
        if m > 0.0 && ro * ro <= m * (1.0 + SQRT_M_SLACK) {
            Ok(Monotonicity::Increasing)
        } else if m <= ri * ri * (1.0 + SQRT_M_SLACK) {
            Ok(Monotonicity::Decreasing)
        } else {
            Err(Error::InvalidInput(format!(
                "√M = {} lies strictly inside ({ri}, {ro}); M - r² changes sign on the annulus",
                m.sqrt()
            )))
        }
    }

    pub fn sqrt_m(&self) -> f64 {
        self.log_coeff.sqrt()
    }
}

/// Problem regime of a set of boundary constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemCase {
    /// `a < b`, `α < 0`, `β >= 0`, `4a+α² > 4b+β²`.
    Increasing,
    /// `a > b`, `α >= 0`, `β < 0`, `4a+α² > 4b+β²` and `2a+α² <= 2b+β²`.
    DecreasingCovered,
    /// As `DecreasingCovered` but with `2a+α² > 2b+β²`: no comparison model is known.
    DecreasingUncovered,
    /// The necessary sign conditions fail.
    Inadmissible,
}

impl ProblemCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemCase::Increasing => "increasing",
            ProblemCase::DecreasingCovered => "decreasing_covered",
            ProblemCase::DecreasingUncovered => "decreasing_uncovered",
            ProblemCase::Inadmissible => "inadmissible",
        }
    }

    pub fn has_model(&self) -> bool {
        matches!(self, ProblemCase::Increasing | ProblemCase::DecreasingCovered)
    }
}

impl fmt::Display for ProblemCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_case(d: &BoundaryData) -> Result<ProblemCase> {
    if !d.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite boundary data {d:?}")));
    }
    let BoundaryData {
        inner_value: a,
        outer_value: b,
        inner_flux: alpha,
        outer_flux: beta,
    } = *d;
    let pohozaev_ok = d.inner_pohozaev_weight() > d.outer_pohozaev_weight();
    let case = if a < b && alpha < 0.0 && beta >= 0.0 && pohozaev_ok {
        ProblemCase::Increasing
    } else if a > b && alpha >= 0.0 && beta < 0.0 && pohozaev_ok {
        if 2.0 * a + alpha * alpha <= 2.0 * b + beta * beta {
            ProblemCase::DecreasingCovered
        } else {
            ProblemCase::DecreasingUncovered
        }
    } else {
        ProblemCase::Inadmissible
    };
    Ok(case)
}

/// Human-readable account of which condition puts `d` outside the fitted regimes.
pub fn violated_condition(d: &BoundaryData) -> String {
    let BoundaryData {
        inner_value: a,
        outer_value: b,
        inner_flux: alpha,
        outer_flux: beta,
    } = *d;
    if a == b {
        return format!("a = b = {a}: neither a < b nor a > b");
    }
    let (lhs, rhs) = (d.inner_pohozaev_weight(), d.outer_pohozaev_weight());
    if a < b {
        if alpha >= 0.0 {
            return format!("a < b requires alpha < 0 (got {alpha})");
        }
        if beta < 0.0 {
            return format!("a < b requires beta >= 0 (got {beta})");
        }
    } else {
        if alpha < 0.0 {
            return format!("a > b requires alpha >= 0 (got {alpha})");
        }
        if beta >= 0.0 {
            return format!("a > b requires beta < 0 (got {beta})");
        }
    }
    if lhs <= rhs {
        return format!("4a+alpha^2 = {lhs} must exceed 4b+beta^2 = {rhs}");
    }
    let (l2, r2) = (2.0 * a + alpha * alpha, 2.0 * b + beta * beta);
    if a > b && l2 > r2 {
        return format!(
            "2a+alpha^2 = {l2} > 2b+beta^2 = {r2}: unproven regime, no comparison model (M < 0 possible)"
        );
    }
    "all sign conditions hold".to_string()
}

pub fn model_u(p: &ModelParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("model evaluated at r = {r} <= 0")));
    }
    Ok(model_u_unchecked(p, r))
}

#[inline]
pub(crate) fn model_u_unchecked(p: &ModelParams, r: f64) -> f64 {
    p.offset - 0.5 * r * r + p.log_coeff * r.ln()
}

/// Radial derivative `du/dr = -r + M/r`.
#[inline]
pub fn model_du_dr(p: &ModelParams, r: f64) -> f64 {
    -r + p.log_coeff / r
}

pub fn boundary_data_of(p: &ModelParams) -> BoundaryData {
    let (m, ri, ro) = (p.log_coeff, p.r_inner, p.r_outer);
    BoundaryData {
        inner_value: model_u_unchecked(p, ri),
        outer_value: model_u_unchecked(p, ro),
        inner_flux: (ri * ri - m) / ri,
        outer_flux: (m - ro * ro) / ro,
    }
}

/// Twice the plus-sign radii `(α + √(α²+4M), -β + √(β²+4M))`, evaluated in
/// the cancellation-free form for each sign of α and β.
fn doubled_radii(d: &BoundaryData, m: f64) -> (f64, f64) {
    let (alpha, beta) = (d.inner_flux, d.outer_flux);
    let sa = (alpha * alpha + 4.0 * m).sqrt();
    let sb = (beta * beta + 4.0 * m).sqrt();
    let ri2 = if alpha >= 0.0 {
        alpha + sa
    } else {
        4.0 * m / (sa - alpha)
    };
    let ro2 = if beta <= 0.0 {
        sb - beta
    } else {
        4.0 * m / (sb + beta)
    };
    (ri2, ro2)
}

/// `lim_{M→0⁺} F(M) = 4a - 4b + α² - β² + α|α| + β|β|`.
fn compatibility_at_zero(d: &BoundaryData) -> f64 {
    let (alpha, beta) = (d.inner_flux, d.outer_flux);
    4.0 * d.inner_value - 4.0 * d.outer_value + alpha * alpha - beta * beta
        + alpha * alpha.abs()
        + beta * beta.abs()
}

fn compatibility_positive(d: &BoundaryData, m: f64) -> f64 {
    let (alpha, beta) = (d.inner_flux, d.outer_flux);
    let sa = (alpha * alpha + 4.0 * m).sqrt();
    let sb = (beta * beta + 4.0 * m).sqrt();
    let (ri2, ro2) = doubled_radii(d, m);
    d.pohozaev_gap() + alpha * sa + beta * sb + 4.0 * m * (ro2 / ri2).ln()
}

/// The compatibility function whose zero selects the model matching `d`.
///
/// At `M = 0` the closed-form limit `4a+2α²-4b-2β²` is returned instead of
/// the `0·log 0` expression.
pub fn compatibility(d: &BoundaryData, m: f64) -> Result<f64> {
    if !d.is_finite() || !m.is_finite() {
        return Err(Error::InvalidInput("non-finite argument".into()));
    }
    if m < 0.0 {
        return Err(Error::InvalidInput(format!("M = {m} must be >= 0")));
    }
    let (alpha, beta) = (d.inner_flux, d.outer_flux);
    if m == 0.0 {
        if alpha <= 0.0 {
            return Err(Error::DegenerateArgument(format!(
                "alpha + sqrt(alpha^2) = 0 at M = 0 (alpha = {alpha})"
            )));
        }
        if beta >= 0.0 {
            return Err(Error::DegenerateArgument(format!(
                "-beta + sqrt(beta^2) = 0 at M = 0 (beta = {beta})"
            )));
        }
        return Ok(compatibility_at_zero(d));
    }
    let (ri2, ro2) = doubled_radii(d, m);
    if !(ri2 > 0.0) {
        return Err(Error::DegenerateArgument(format!(
            "alpha + sqrt(alpha^2 + 4M) = {ri2} <= 0"
        )));
    }
    if !(ro2 > 0.0) {
        return Err(Error::DegenerateArgument(format!(
            "-beta + sqrt(beta^2 + 4M) = {ro2} <= 0"
        )));
    }
    Ok(compatibility_positive(d, m))
}

/// `dF/dM = 4 log(r_o/r_i) + 4α/√(α²+4M) + 4β/√(β²+4M)` for `M > 0`.
pub fn compatibility_derivative(d: &BoundaryData, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InvalidInput(format!("derivative requires M > 0 (got {m})")));
    }
    let (alpha, beta) = (d.inner_flux, d.outer_flux);
    let sa = (alpha * alpha + 4.0 * m).sqrt();
    let sb = (beta * beta + 4.0 * m).sqrt();
    let (ri2, ro2) = doubled_radii(d, m);
    if !(ri2 > 0.0 && ro2 > 0.0) {
        return Err(Error::DegenerateArgument("non-positive radius".into()));
    }
    Ok(4.0 * (ro2 / ri2).ln() + 4.0 * alpha / sa + 4.0 * beta / sb)
}

/// Result of fitting a model to boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub params: ModelParams,
    pub case: ProblemCase,
    /// `F(M)` at the returned root.
    pub residual: f64,
    /// Further sign changes of `F` seen past the returned (smallest) root.
    pub extra_sign_changes: usize,
}

const SCAN_MIN_EXP: i32 = -60;
const SCAN_MAX_M: f64 = 1e12;
const BISECTION_REL_WIDTH: f64 = 1e-13;
const NEWTON_POLISH_STEPS: usize = 3;

pub fn fit_model(d: &BoundaryData) -> Result<ModelParams> {
    fit_model_detailed(d).map(|fit| fit.params)
}

/// Finds the model whose boundary data reproduce `d`.
///
/// The root of the compatibility function is bracketed on the geometric grid
/// `M₀·2^j`, `M₀ = max(1, α², β²)`, starting from `M = 0`; the smallest sign
/// change is refined by bisection and polished with Newton steps.
pub fn fit_model_detailed(d: &BoundaryData) -> Result<ModelFit> {
    let case = classify_case(d)?;
    match case {
        ProblemCase::Increasing | ProblemCase::DecreasingCovered => {}
        _ => {
            return Err(Error::UnsupportedRegime {
                case,
                reason: violated_condition(d),
            })
        }
    }
    let (alpha, beta) = (d.inner_flux, d.outer_flux);
    let f_zero = compatibility_at_zero(d);
    let noise = |m: f64| {
        1e-12 * (1.0 + d.pohozaev_gap().abs() + (alpha.abs() + beta.abs()) * (1.0 + m.sqrt()))
    };

    let (m, extra_sign_changes) = if f_zero == 0.0 {
        // Only reachable in the decreasing case on the 2a+α² = 2b+β² boundary.
        (0.0, 0)
    } else {
        let m0 = 1f64.max(alpha * alpha).max(beta * beta);
        let mut prev = (0.0, f_zero);
        let mut bracket: Option<((f64, f64), (f64, f64))> = None;
        let mut last_sign = 1.0;
        let mut extra = 0;
        let mut j = SCAN_MIN_EXP;
        loop {
            let m = m0 * 2f64.powi(j);
            if m > SCAN_MAX_M {
                break;
            }
            let f = compatibility_positive(d, m);
            if !f.is_finite() {
                return Err(Error::NoRoot(format!("F({m}) = {f} is not finite")));
            }
            match bracket {
                None if f >= 0.0 => {
                    bracket = Some((prev, (m, f)));
                    last_sign = 1.0;
                }
                None => prev = (m, f),
                Some(_) => {
                    if f.abs() > noise(m) && f.signum() != last_sign {
                        extra += 1;
                        last_sign = f.signum();
                    }
                }
            }
            j += 1;
        }
        let ((mut lo, _), (mut hi, f_hi)) = bracket.ok_or_else(|| {
            Error::NoRoot(format!(
                "no sign change of F on (0, {SCAN_MAX_M:e}] for {d:?} (anomaly: admissible data)"
            ))
        })?;
        let root = if f_hi == 0.0 {
            hi
        } else {
            let mut iter = 0;
            while hi - lo > BISECTION_REL_WIDTH * hi && iter < 400 {
                let mid = 0.5 * (lo + hi);
                if compatibility_positive(d, mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                iter += 1;
            }
            let mut m = 0.5 * (lo + hi);
            let mut fm = compatibility_positive(d, m);
            for _ in 0..NEWTON_POLISH_STEPS {
                if fm == 0.0 {
                    break;
                }
                let Ok(dfm) = compatibility_derivative(d, m) else {
                    break;
                };
                if !(dfm.is_finite() && dfm != 0.0) {
                    break;
                }
                let cand = m - fm / dfm;
                if !(cand > 0.0) {
                    break;
                }
                let fc = compatibility_positive(d, cand);
                if fc.abs() < fm.abs() {
                    m = cand;
                    fm = fc;
                } else {
                    break;
                }
            }
            m
        };
        (root, extra)
    };

    let (ri, ro) = if m == 0.0 {
        (alpha, -beta)
    } else {
        let (ri2, ro2) = doubled_radii(d, m);
        (0.5 * ri2, 0.5 * ro2)
    };
    let offset = d.inner_value + 0.5 * ri * ri - m * ri.ln();
    let params = ModelParams {
        offset,
        log_coeff: m,
        r_inner: ri,
        r_outer: ro,
    };
    params.monotonicity().map_err(|e| {
        Error::NoRoot(format!("root M = {m} gives an invalid model ({e}) for {d:?}"))
    })?;
    let residual = if m == 0.0 {
        f_zero
    } else {
        compatibility_positive(d, m)
    };
    Ok(ModelFit {
        params,
        case,
        residual,
        extra_sign_changes,
    })
}

const PSEUDO_RADIUS_REL_TOL: f64 = 1e-12;

/// Inverts the model on `[r_inner, r_outer]`: the unique `Ψ` with
/// `L - Ψ²/2 + M log Ψ = u_val`.
pub fn pseudo_radius(p: &ModelParams, u_val: f64) -> Result<f64> {
    let (ri, ro) = (p.r_inner, p.r_outer);
    let (ui, uo) = (model_u_unchecked(p, ri), model_u_unchecked(p, ro));
    if u_val == ui {
        return Ok(ri);
    }
    if u_val == uo {
        return Ok(ro);
    }
    let (lo_val, hi_val) = if ui < uo { (ui, uo) } else { (uo, ui) };
    if !(u_val >= lo_val && u_val <= hi_val) {
        return Err(Error::OutOfRange {
            value: u_val,
            lo: lo_val,
            hi: hi_val,
        });
    }
    // g(Ψ) = u(Ψ) - u_val has sign(ui - u_val) at ri and the opposite at ro.
    let inner_sign = (ui - u_val).signum();
    let (mut lo, mut hi) = (ri, ro);
    let mut x = ri + (ro - ri) * (u_val - ui) / (uo - ui);
    for _ in 0..200 {
        let g = model_u_unchecked(p, x) - u_val;
        if g == 0.0 {
            return Ok(x);
        }
        if g.signum() == inner_sign {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= PSEUDO_RADIUS_REL_TOL * x {
            return Ok(0.5 * (lo + hi));
        }
        let dg = model_du_dr(p, x);
        let newton = x - g / dg;
        let next = if dg != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 0.25 * PSEUDO_RADIUS_REL_TOL * x {
            return Ok(next);
        }
        x = next;
    }
    Ok(0.5 * (lo + hi))
}

/// `W₀(Ψ) = ((M - Ψ²)/Ψ)²`, the squared gradient of the model at radius `Ψ`.
pub fn w0_of_psi(p: &ModelParams, psi: f64) -> f64 {
    let t = (p.log_coeff - psi * psi) / psi;
    t * t
}

/// Both closed forms of the refined constant `k`:
/// `4M r_i² - r_i⁴ - 4M² log r_i` and `4LM + M² - 4aM - α² r_i²`.
pub fn refined_k_forms(p: &ModelParams) -> (f64, f64) {
    let (l, m, ri) = (p.offset, p.log_coeff, p.r_inner);
    let d = boundary_data_of(p);
    let first = 4.0 * m * ri * ri - ri.powi(4) - 4.0 * m * m * ri.ln();
    let second = 4.0 * l * m + m * m - 4.0 * d.inner_value * m
        - d.inner_flux * d.inner_flux * ri * ri;
    (first, second)
}

/// The smallest `k` making `φ̇ >= 0` on a decreasing model.
pub fn refined_k(p: &ModelParams) -> Result<f64> {
    if p.monotonicity()? != Monotonicity::Decreasing {
        return Err(Error::UnsupportedRegime {
            case: ProblemCase::Increasing,
            reason: "refined constant k is defined for decreasing models (√M <= r_inner)".into(),
        });
    }
    let (first, second) = refined_k_forms(p);
    let (l, m, ri) = (p.offset, p.log_coeff, p.r_inner);
    let magnitude = (4.0 * m * ri * ri)
        .abs()
        .max(ri.powi(4))
        .max((4.0 * m * m * ri.ln()).abs())
        .max((4.0 * l * m).abs());
    if (first - second).abs() > 1e-10 * (1.0 + magnitude) {
        return Err(Error::InconsistentModel(format!(
            "closed forms of k disagree: {first} vs {second}"
        )));
    }
    Ok(first)
}

pub(crate) fn singular_cutoff(p: &ModelParams) -> f64 {
    1e-9 * p.log_coeff.max(1.0)
}

fn check_regular(p: &ModelParams, psi: f64) -> Result<f64> {
    if !(psi > 0.0) {
        return Err(Error::Domain(format!("psi = {psi} <= 0")));
    }
    let gap = p.log_coeff - psi * psi;
    if gap.abs() < singular_cutoff(p) {
        return Err(Error::Singular {
            psi,
            gap: gap.abs(),
            location: None,
        });
    }
    Ok(gap)
}

/// `4MΨ² - Ψ⁴ - 4M² log Ψ - k`, the bracket shared by `φ` and `φ̇`.
fn phi_bracket(m: f64, k: f64, psi: f64) -> f64 {
    let p2 = psi * psi;
    4.0 * m * p2 - p2 * p2 - 4.0 * m * m * psi.ln() - k
}

/// `φ(Ψ) = 2u - (Ψ⁴ - 4MΨ² + 4M² log Ψ + k) / (2(M - Ψ²))` with `u` the model value at `Ψ`.
pub fn phi(p: &ModelParams, k: f64, psi: f64) -> Result<f64> {
    let gap = check_regular(p, psi)?;
    let u = model_u_unchecked(p, psi);
    Ok(2.0 * u + phi_bracket(p.log_coeff, k, psi) / (2.0 * gap))
}

/// `dφ/du = Ψ²/(M - Ψ²)³ · (4MΨ² - Ψ⁴ - 4M² log Ψ - k)`.
pub fn phi_dot(p: &ModelParams, k: f64, psi: f64) -> Result<f64> {
    let gap = check_regular(p, psi)?;
    Ok(psi * psi / (gap * gap * gap) * phi_bracket(p.log_coeff, k, psi))
}
