//! Experiment configuration file: schema, validation and conversion into
//! core types.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use volterra_id_core::assembly::{ExpansionSizes, GridScheme};
use volterra_id_core::signals::{NoiseSpec, SignalPair};
use volterra_id_core::solver::{IdentifyOptions, Method};
use volterra_id_core::QuadratureConfigF64;

use crate::CliError;

/// Which signal pair the experiment runs on.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Model1Printed,
    Model1Corrected,
    Model2,
    UserCsv { x_csv: PathBuf, y_csv: PathBuf },
}

impl ModelChoice {
    pub fn label(&self) -> &'static str {
        match self {
            ModelChoice::Model1Printed => "model1-printed",
            ModelChoice::Model1Corrected => "model1-corrected",
            ModelChoice::Model2 => "model2",
            ModelChoice::UserCsv { .. } => "user-csv",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Collocation,
    Lsm,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GridSchemeChoice {
    IncludingZero,
    ExcludingZero,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub delta: f64,
    pub trials: usize,
}

/// Optional overrides of the quadrature defaults.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    pub points_per_panel: Option<usize>,
    pub min_panels_per_unit: Option<usize>,
    pub refine_factor: Option<usize>,
    pub abs_tol: Option<f64>,
    pub max_refinements: Option<usize>,
}

/// On-disk experiment description (JSON).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelChoice,
    pub method: MethodChoice,
    pub m: usize,
    /// Defaults to `m`.
    pub m1: Option<usize>,
    /// Defaults to `m`.
    pub m2: Option<usize>,
    /// Least-squares node count as a multiple of the unknown count.
    pub lsm_multiplier: Option<usize>,
    /// Least-squares node count given directly.
    pub lsm_node_count: Option<usize>,
    /// Defaults to 1.0; must match the data horizon for `user_csv`.
    pub horizon: Option<f64>,
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub quadrature: QuadratureOverrides,
    /// Relative singular-value cutoff; defaults to 1e-12.
    pub rcond: Option<f64>,
    /// Dense residual grid size; defaults to 1001.
    pub eval_points: Option<usize>,
    pub grid_scheme: Option<GridSchemeChoice>,
    /// RNG seed for noise experiments; defaults to 42. The environment
    /// variable `VOLTERRA_ID_SEED` overrides it.
    pub seed: Option<u64>,
}

/// A validated experiment ready to run.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub sizes: ExpansionSizes,
    pub method: Method,
    /// Node count for the least-squares grid; `None` for collocation.
    pub lsm_nodes: Option<usize>,
    pub quadrature: QuadratureConfigF64,
    pub options: IdentifyOptions<f64>,
    pub seed: u64,
    pub noise: Option<NoiseSpec<f64>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&raw).map_err(|e| {
            CliError::config(anyhow::anyhow!("cannot parse {}: {e}", path.display()))
        })?;
        Ok(config)
    }

    /// Validates every field and resolves defaults. Error messages name the
    /// offending field.
    pub fn validate(self) -> Result<Experiment, CliError> {
        let bad = |msg: String| Err(CliError::config(anyhow::anyhow!(msg)));

        if self.m == 0 {
            return bad("m: must be at least 1".into());
        }
        let m1 = self.m1.unwrap_or(self.m);
        let m2 = self.m2.unwrap_or(self.m);
        if m1 == 0 {
            return bad("m1: must be at least 1".into());
        }
        if m2 == 0 {
            return bad("m2: must be at least 1".into());
        }
        let sizes = ExpansionSizes::new(self.m, m1, m2)
            .map_err(|e| CliError::config(anyhow::anyhow!("sizes: {e}")))?;

        let method = match self.method {
            MethodChoice::Collocation => Method::Collocation,
            MethodChoice::Lsm => Method::LeastSquares,
        };
        let lsm_nodes = match (self.method, self.lsm_multiplier, self.lsm_node_count) {
            (MethodChoice::Collocation, Some(_), _) => {
                return bad("lsm_multiplier: only valid with method \"lsm\"".into());
            }
            (MethodChoice::Collocation, _, Some(_)) => {
                return bad("lsm_node_count: only valid with method \"lsm\"".into());
            }
            (MethodChoice::Collocation, None, None) => None,
            (MethodChoice::Lsm, Some(_), Some(_)) => {
                return bad("lsm_multiplier / lsm_node_count: give exactly one of them".into());
            }
            (MethodChoice::Lsm, Some(mult), None) => {
                if mult == 0 {
                    return bad("lsm_multiplier: must be at least 1".into());
                }
                Some(sizes.column_count() * mult)
            }
            (MethodChoice::Lsm, None, Some(k)) => Some(k),
            (MethodChoice::Lsm, None, None) => {
                return bad(
                    "lsm_multiplier: required with method \"lsm\" (or give lsm_node_count)".into(),
                );
            }
        };
        if let Some(k) = lsm_nodes {
            if k < sizes.column_count() {
                return bad(format!(
                    "lsm_node_count: {} unknowns need at least that many nodes, got {k}",
                    sizes.column_count()
                ));
            }
        }

        let horizon = self.horizon.unwrap_or(1.0);
        if horizon <= 0.0 || !horizon.is_finite() {
            return bad(format!(
                "horizon: must be positive and finite, got {horizon}"
            ));
        }

        let mut quadrature = QuadratureConfigF64::default();
        let q = &self.quadrature;
        if let Some(v) = q.points_per_panel {
            quadrature.points_per_panel = v;
        }
        if let Some(v) = q.min_panels_per_unit {
            quadrature.min_panels_per_unit = v;
        }
        if let Some(v) = q.refine_factor {
            quadrature.refine_factor = v;
        }
        if let Some(v) = q.abs_tol {
            if v <= 0.0 || v.is_nan() {
                return bad(format!("quadrature.abs_tol: must be positive, got {v}"));
            }
            quadrature.abs_tol = v;
        }
        if let Some(v) = q.max_refinements {
            quadrature.max_refinements = v;
        }

        let rcond = self.rcond.unwrap_or(1e-12);
        if !(rcond > 0.0 && rcond < 1.0) {
            return bad(format!("rcond: must lie in (0, 1), got {rcond}"));
        }
        let eval_points = self.eval_points.unwrap_or(1001);
        if eval_points < 2 {
            return bad(format!(
                "eval_points: must be at least 2, got {eval_points}"
            ));
        }
        let grid_scheme = match self.grid_scheme.unwrap_or(GridSchemeChoice::IncludingZero) {
            GridSchemeChoice::IncludingZero => GridScheme::UniformIncludingZero,
            GridSchemeChoice::ExcludingZero => GridScheme::UniformExcludingZero,
        };

        let seed = resolve_seed(self.seed)?;
        let noise = match &self.noise {
            None => None,
            Some(n) => {
                if n.delta < 0.0 || !n.delta.is_finite() {
                    return bad(format!("noise.delta: must be nonnegative, got {}", n.delta));
                }
                if n.trials == 0 {
                    return bad("noise.trials: must be at least 1".into());
                }
                Some(
                    NoiseSpec::new(n.delta, n.trials, seed)
                        .map_err(|e| CliError::config(anyhow::anyhow!("noise: {e}")))?,
                )
            }
        };

        Ok(Experiment {
            sizes,
            method,
            lsm_nodes,
            quadrature,
            options: IdentifyOptions {
                rcond,
                eval_points,
                grid_scheme,
            },
            seed,
            noise,
            config: self,
        })
    }
}

impl Experiment {
    /// Builds the signal pair the experiment runs on.
    pub fn build_pair(&self) -> Result<SignalPair<f64>, CliError> {
        let pair = match &self.config.model {
            ModelChoice::Model1Printed => SignalPair::model1_printed(),
            ModelChoice::Model1Corrected => SignalPair::model1_corrected(),
            ModelChoice::Model2 => SignalPair::model2(&self.quadrature),
            ModelChoice::UserCsv { x_csv, y_csv } => {
                SignalPair::from_csv(x_csv, y_csv).map_err(CliError::from_core)?
            }
        };
        if let Some(h) = self.config.horizon {
            let relative = (pair.horizon() - h).abs() / h.max(1.0);
            if relative > 1e-12 {
                return Err(CliError::config(anyhow::anyhow!(
                    "horizon: configured {h} but the signal pair spans {}",
                    pair.horizon()
                )));
            }
        }
        Ok(pair)
    }
}

/// Seed resolution order: `VOLTERRA_ID_SEED` env var, config value, 42.
pub fn resolve_seed(configured: Option<u64>) -> Result<u64, CliError> {
    match std::env::var("VOLTERRA_ID_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map_err(|_| {
            CliError::config(anyhow::anyhow!(
                "VOLTERRA_ID_SEED: cannot parse {raw:?} as an unsigned integer"
            ))
        }),
        Err(_) => Ok(configured.unwrap_or(42)),
    }
}
