//! Scenario documents and their resolution into a concrete problem.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use serrin_core::domain::{Boundary, DomainSpec, Resolution};
use serrin_core::model::{boundary_data_of, fit_model, BoundaryData, ModelParams};
use serrin_core::solver::{ExactField, SolveOptions};

use crate::exit::UsageError;

pub const DEFAULT_RESOLUTION: usize = 129;
pub const DEFAULT_MMS_SIZES: [usize; 3] = [33, 65, 129];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub boundary_data: Option<BoundaryData>,
    #[serde(default)]
    pub model: Option<ModelParams>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
    #[serde(default)]
    pub resolution: Option<Resolution>,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub mms: Option<MmsBlock>,
    #[serde(default)]
    pub output: Outputs,
}

/// `eps·cos(mode·θ)` added to one boundary radius.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub eps: f64,
    #[serde(default = "default_mode")]
    pub mode: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_mode() -> usize {
    3
}

fn default_boundary() -> Boundary {
    Boundary::Inner
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            eps: 0.0,
            mode: default_mode(),
            boundary: default_boundary(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Perturbation amplitude.
    Eps,
    /// Square resolution `Ns = Nθ = n`.
    N,
    Ns,
    Ntheta,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmsBlock {
    #[serde(default)]
    pub exact: Option<ExactField>,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
}

fn default_sizes() -> Vec<usize> {
    DEFAULT_MMS_SIZES.to_vec()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub field: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    /// Directory for the per-scenario reports of a sweep.
    pub reports_dir: Option<PathBuf>,
}

/// Scalar overrides given on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub ns: Option<usize>,
    pub ntheta: Option<usize>,
    pub eps: Option<f64>,
}

/// A fully resolved problem: data, domain and discretization.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub data: BoundaryData,
    pub domain: DomainSpec,
    pub resolution: Resolution,
    pub solver: SolveOptions,
    pub eps: f64,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if ov.ns.is_some() || ov.ntheta.is_some() {
            let mut res = self.resolution();
            res.ns = ov.ns.unwrap_or(res.ns);
            res.ntheta = ov.ntheta.unwrap_or(res.ntheta);
            self.resolution = Some(res);
        }
        if let Some(eps) = ov.eps {
            self.set_eps(eps);
        }
    }

    pub fn set_eps(&mut self, eps: f64) {
        let mut p = self.perturbation.unwrap_or_default();
        p.eps = eps;
        self.perturbation = Some(p);
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
            .unwrap_or(Resolution::square(DEFAULT_RESOLUTION))
    }

    pub fn eps(&self) -> f64 {
        self.perturbation.map_or(0.0, |p| p.eps)
    }

    /// The model given directly, validated.
    pub fn given_model(&self) -> Result<Option<ModelParams>> {
        match self.model {
            None => Ok(None),
            Some(p) => {
                p.monotonicity().context("invalid model parameters")?;
                Ok(Some(p))
            }
        }
    }

    pub fn boundary_data(&self) -> Result<BoundaryData> {
        match (&self.boundary_data, self.given_model()?) {
            (Some(_), Some(_)) => Err(UsageError::new(
                "config gives both boundary_data and model; exactly one is allowed",
            )
            .into()),
            (None, None) => {
                Err(UsageError::new("config needs one of boundary_data or model").into())
            }
            (Some(d), None) => {
                if !d.is_finite() {
                    return Err(UsageError::new(format!("non-finite boundary data {d:?}")).into());
                }
                Ok(*d)
            }
            (None, Some(p)) => Ok(boundary_data_of(&p)),
        }
    }

    /// The model matching the scenario: given directly or fitted to the data.
    pub fn model(&self) -> Result<ModelParams> {
        if let Some(p) = self.given_model()? {
            return Ok(p);
        }
        let d = self.boundary_data()?;
        Ok(fit_model(&d)?)
    }

    /// The explicit domain, or circles at the model radii; the perturbation is applied last.
    pub fn domain(&self) -> Result<DomainSpec> {
        let mut spec = match &self.domain {
            Some(spec) => spec.clone(),
            None => {
                let p = self
                    .model()
                    .context("no domain given, and the data has no model to take radii from")?;
                DomainSpec::annulus(p.r_inner, p.r_outer)
            }
        };
        if let Some(pert) = self.perturbation {
            if !pert.eps.is_finite() {
                return Err(UsageError::new(format!("perturbation eps {} is not finite", pert.eps)).into());
            }
            if pert.eps != 0.0 {
                let curve = match pert.boundary {
                    Boundary::Inner => &mut spec.inner,
                    Boundary::Outer => &mut spec.outer,
                };
                *curve = curve.clone().with_cos_mode(pert.mode, pert.eps);
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let data = self.boundary_data()?;
        self.solver.validate()?;
        Ok(Scenario {
            data,
            domain: self.domain()?,
            resolution: self.resolution(),
            solver: self.solver,
            eps: self.eps(),
        })
    }

    pub fn exact_field(&self) -> Result<ExactField> {
        if let Some(exact) = self.mms.as_ref().and_then(|m| m.exact) {
            return Ok(exact);
        }
        let params = self
            .model()
            .context("mms needs an exact field or a model to manufacture from")?;
        Ok(ExactField::Model { params })
    }

    pub fn mms_sizes(&self) -> Vec<usize> {
        self.mms
            .as_ref()
            .map_or_else(default_sizes, |m| m.sizes.clone())
    }
}
