//! Identification of the expansion coefficients and evaluation of the
//! identified model.
//!
//! Both identification routes (square collocation grid, overdetermined
//! least-squares grid) assemble the same kind of system and solve it with the
//! rank-revealing minimum-norm solver: the collocation matrix is structurally
//! rank deficient (zero row at `t = 0`, identical columns for `c_ij`/`c_ji`),
//! so a plain LU solve would be invalid. The report carries the numerical
//! rank so the deficiency stays visible.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::assembly::{
    assemble, beta_coeff, AssembledSystem, ExpansionSizes, GridScheme, NodeGrid,
};
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::linalg::{solve_min_norm, Matrix};
use crate::quadrature::QuadratureConfig;
use crate::scalar::{real, Real};
use crate::signals::{perturb, NoiseSpec, PiecewiseLinear, SignalFn, SignalPair};

/// How the coefficient system is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Square system: as many nodes as unknown coefficients.
    Collocation,
    /// Overdetermined system on a denser grid.
    LeastSquares,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Collocation => "collocation",
            Method::LeastSquares => "least-squares",
        }
    }
}

/// The identified kernel expansion: first-order coefficients, the
/// second-order coefficient matrix and the basis they refer to.
#[derive(Debug, Clone)]
pub struct KernelExpansion<T> {
    first_order: Vec<T>,
    second_order: Matrix<T>,
    basis: BasisSet<T>,
}

impl<T: Real> KernelExpansion<T> {
    /// Unpacks a solution vector laid out as the assembly column map:
    /// first-order coefficients, then the second-order matrix row-major.
    pub fn from_coefficients(
        coefficients: &[T],
        sizes: ExpansionSizes,
        basis: BasisSet<T>,
    ) -> Result<Self> {
        if coefficients.len() != sizes.column_count() {
            return Err(Error::Config(format!(
                "coefficient vector length {} does not match {} columns",
                coefficients.len(),
                sizes.column_count()
            )));
        }
        if basis.count() != sizes.beta_count() {
            return Err(Error::Config(format!(
                "basis count {} does not match required {}",
                basis.count(),
                sizes.beta_count()
            )));
        }
        let first_order = coefficients[..sizes.first].to_vec();
        let mut second_order = Matrix::zeros(sizes.second_rows, sizes.second_cols);
        for i in 0..sizes.second_rows {
            for j in 0..sizes.second_cols {
                second_order.set(i, j, coefficients[sizes.first + i * sizes.second_cols + j]);
            }
        }
        Ok(Self {
            first_order,
            second_order,
            basis,
        })
    }

    pub fn first_order(&self) -> &[T] {
        &self.first_order
    }

    pub fn second_order(&self) -> &Matrix<T> {
        &self.second_order
    }

    pub fn basis(&self) -> &BasisSet<T> {
        &self.basis
    }

    pub fn sizes(&self) -> ExpansionSizes {
        ExpansionSizes {
            first: self.first_order.len(),
            second_rows: self.second_order.rows(),
            second_cols: self.second_order.cols(),
        }
    }

    /// First-order kernel estimate at lag `s`.
    pub fn eval_k1(&self, s: T) -> Result<T> {
        let row = self.basis.row(s)?;
        Ok(self
            .first_order
            .iter()
            .zip(&row)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    }

    /// Second-order kernel estimate at lags `(s1, s2)`.
    pub fn eval_k2(&self, s1: T, s2: T) -> Result<T> {
        let r1 = self.basis.row(s1)?;
        let r2 = self.basis.row(s2)?;
        let mut acc = T::zero();
        for (i, &b1) in r1.iter().take(self.second_order.rows()).enumerate() {
            for (j, &b2) in r2.iter().take(self.second_order.cols()).enumerate() {
                acc = acc + self.second_order.at(i, j) * b1 * b2;
            }
        }
        Ok(acc)
    }

    /// Symmetric part of the second-order coefficients, `(c + c^T) / 2`.
    /// Only this part is observable: predictions are invariant to the
    /// antisymmetric remainder.
    pub fn symmetrized_second_order(&self) -> Matrix<T> {
        let n = self.second_order.rows();
        debug_assert_eq!(n, self.second_order.cols());
        let mut out = Matrix::zeros(n, n);
        let half = real::<T>(0.5);
        for i in 0..n {
            for j in 0..n {
                out.set(
                    i,
                    j,
                    (self.second_order.at(i, j) + self.second_order.at(j, i)) * half,
                );
            }
        }
        out
    }

    /// Copy of the expansion with the second-order coefficients symmetrized.
    pub fn symmetrized(&self) -> Self {
        Self {
            first_order: self.first_order.clone(),
            second_order: self.symmetrized_second_order(),
            basis: self.basis.clone(),
        }
    }

    /// Euclidean norm of the full coefficient vector.
    pub fn coefficient_norm(&self) -> T {
        let mut acc = self
            .first_order
            .iter()
            .fold(T::zero(), |acc, &a| acc + a * a);
        for i in 0..self.second_order.rows() {
            for j in 0..self.second_order.cols() {
                let c = self.second_order.at(i, j);
                acc = acc + c * c;
            }
        }
        acc.sqrt()
    }
}

/// Identification tuning knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyOptions<T> {
    /// Relative singular-value cutoff for the minimum-norm solve.
    pub rcond: T,
    /// Number of points in the dense residual grid (endpoints included).
    pub eval_points: usize,
    /// Node placement for the identification grid.
    pub grid_scheme: GridScheme,
}

impl<T: Real> Default for IdentifyOptions<T> {
    fn default() -> Self {
        Self {
            rcond: real(1e-12),
            eval_points: 1001,
            grid_scheme: GridScheme::UniformIncludingZero,
        }
    }
}

/// Outcome of one identification run.
#[derive(Debug, Clone)]
pub struct IdentificationReport<T> {
    pub expansion: KernelExpansion<T>,
    pub method: Method,
    /// Max absolute prediction error over the dense evaluation grid.
    pub residual_max: T,
    /// Max absolute equation mismatch at the grid nodes.
    pub node_residual_max: T,
    pub numerical_rank: usize,
    /// Absolute singular-value threshold applied by the solver.
    pub truncation_threshold: T,
    pub grid: NodeGrid<T>,
    /// Largest quadrature error estimate seen during assembly.
    pub assembly_error_estimate: T,
    /// Stable fingerprint of everything that determined this run.
    pub config_digest: String,
}

impl<T: Real> IdentificationReport<T> {
    /// Structured JSON form of the report (coefficients, diagnostics,
    /// provenance digest).
    pub fn to_json_value(&self) -> serde_json::Value {
        let to_f64 = |v: T| v.to_f64().unwrap_or(f64::NAN);
        let matrix_json = |m: &Matrix<T>| -> serde_json::Value {
            (0..m.rows())
                .map(|i| {
                    (0..m.cols())
                        .map(|j| to_f64(m.at(i, j)))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
                .into()
        };
        let sizes = self.expansion.sizes();
        serde_json::json!({
            "method": self.method.as_str(),
            "residual_max": to_f64(self.residual_max),
            "node_residual_max": to_f64(self.node_residual_max),
            "numerical_rank": self.numerical_rank,
            "truncation_threshold": to_f64(self.truncation_threshold),
            "assembly_error_estimate": to_f64(self.assembly_error_estimate),
            "grid": {
                "scheme": format!("{:?}", self.grid.scheme()),
                "node_count": self.grid.len(),
            },
            "basis": {
                "kind": format!("{:?}", self.expansion.basis().kind()),
                "count": self.expansion.basis().count(),
                "horizon": to_f64(self.expansion.basis().horizon()),
            },
            "sizes": {
                "first": sizes.first,
                "second_rows": sizes.second_rows,
                "second_cols": sizes.second_cols,
            },
            "first_order": self.expansion.first_order().iter().map(|&a| to_f64(a)).collect::<Vec<_>>(),
            "second_order": matrix_json(self.expansion.second_order()),
            "second_order_symmetrized": matrix_json(&self.expansion.symmetrized_second_order()),
            "config_digest": self.config_digest,
        })
    }
}

/// Response of the identified model to the pair's input at time `t`.
///
/// Evaluates the convolution of every basis function with the input once and
/// combines them with the coefficients.
pub fn predict<T: Real>(
    expansion: &KernelExpansion<T>,
    pair: &SignalPair<T>,
    t: T,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    let count = expansion.basis.count();
    let mut betas = Vec::with_capacity(count);
    for i in 0..count {
        let (v, _) = beta_coeff(&expansion.basis, pair, i, t, cfg)?;
        betas.push(v);
    }
    let mut acc = expansion
        .first_order
        .iter()
        .zip(&betas)
        .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    for i in 0..expansion.second_order.rows() {
        for j in 0..expansion.second_order.cols() {
            acc = acc + expansion.second_order.at(i, j) * betas[i] * betas[j];
        }
    }
    Ok(acc)
}

/// Max absolute prediction error over a uniform grid of `eval_points` points
/// on `[0, horizon]`, endpoints included.
pub fn residual_max<T: Real>(
    expansion: &KernelExpansion<T>,
    pair: &SignalPair<T>,
    eval_points: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    if eval_points < 2 {
        return Err(Error::Config(
            "residual grid needs at least 2 points".into(),
        ));
    }
    let horizon = pair.horizon();
    let last = real::<T>((eval_points - 1) as f64);
    let errors: Vec<T> = (0..eval_points)
        .into_par_iter()
        .map(|k| {
            let t = horizon * real::<T>(k as f64) / last;
            let predicted = predict(expansion, pair, t, cfg)?;
            Ok((pair.y(t) - predicted).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(errors.into_iter().fold(T::zero(), T::max))
}

/// Signal pair whose output is the exact response of `expansion` to `x`,
/// evaluated by [`predict`] and cached per time point. Useful for round-trip
/// experiments with kernels that lie inside the basis span.
pub fn synthesize_pair<T: Real>(
    expansion: KernelExpansion<T>,
    x: SignalFn<T>,
    oscillation_hint: T,
    label: impl Into<String>,
    cfg: &QuadratureConfig<T>,
) -> Result<SignalPair<T>> {
    let horizon = expansion.basis.horizon();
    let x_only = SignalPair::new(
        x.clone(),
        Arc::new(|_| T::zero()),
        horizon,
        oscillation_hint,
        "input-carrier",
    )?;
    let cfg = cfg.clone();
    let cache: Arc<Mutex<std::collections::HashMap<u64, T>>> =
        Arc::new(Mutex::new(std::collections::HashMap::new()));
    let y: SignalFn<T> = Arc::new(move |t: T| {
        let key = t.to_f64().unwrap_or(f64::NAN).to_bits();
        if let Some(&v) = cache.lock().unwrap().get(&key) {
            return v;
        }
        let v = predict(&expansion, &x_only, t, &cfg).expect("finite model response");
        cache.lock().unwrap().insert(key, v);
        v
    });
    SignalPair::new(x, y, horizon, oscillation_hint, label)
}

/// Identification on the square system: as many grid nodes as unknowns.
pub fn identify_collocation<T: Real>(
    pair: &SignalPair<T>,
    sizes: ExpansionSizes,
    cfg: &QuadratureConfig<T>,
    opts: &IdentifyOptions<T>,
) -> Result<IdentificationReport<T>> {
    let grid = NodeGrid::uniform(opts.grid_scheme, sizes.column_count(), pair.horizon())?;
    run_identification(pair, sizes, grid, Method::Collocation, cfg, opts)
}

/// Identification on an overdetermined grid of `node_count` nodes.
pub fn identify_lsm<T: Real>(
    pair: &SignalPair<T>,
    sizes: ExpansionSizes,
    node_count: usize,
    cfg: &QuadratureConfig<T>,
    opts: &IdentifyOptions<T>,
) -> Result<IdentificationReport<T>> {
    if node_count < sizes.column_count() {
        return Err(Error::Config(format!(
            "least squares needs at least {} nodes for {} unknowns, got {node_count}",
            sizes.column_count(),
            sizes.column_count()
        )));
    }
    let grid = NodeGrid::uniform(opts.grid_scheme, node_count, pair.horizon())?;
    run_identification(pair, sizes, grid, Method::LeastSquares, cfg, opts)
}

fn run_identification<T: Real>(
    pair: &SignalPair<T>,
    sizes: ExpansionSizes,
    grid: NodeGrid<T>,
    method: Method,
    cfg: &QuadratureConfig<T>,
    opts: &IdentifyOptions<T>,
) -> Result<IdentificationReport<T>> {
    let system = assemble(sizes, &grid, pair, cfg)?;
    let solution = solve_min_norm(&system.matrix, &system.rhs, opts.rcond)?;
    let basis = BasisSet::chebyshev(sizes.beta_count(), pair.horizon())?;
    let expansion = KernelExpansion::from_coefficients(&solution.coefficients, sizes, basis)?;
    let node_residual_max = node_residual(&system, &solution.coefficients);
    let residual = residual_max(&expansion, pair, opts.eval_points, cfg)?;
    let config_digest = digest_config(pair, method, sizes, &grid, cfg, opts);
    Ok(IdentificationReport {
        expansion,
        method,
        residual_max: residual,
        node_residual_max,
        numerical_rank: solution.rank,
        truncation_threshold: solution.truncation_threshold,
        grid: system.grid,
        assembly_error_estimate: system.worst_error_estimate,
        config_digest,
    })
}

fn node_residual<T: Real>(system: &AssembledSystem<T>, coefficients: &[T]) -> T {
    system
        .matrix
        .mul_vec(coefficients)
        .iter()
        .zip(&system.rhs)
        .map(|(p, b)| (*p - *b).abs())
        .fold(T::zero(), T::max)
}

fn digest_config<T: Real>(
    pair: &SignalPair<T>,
    method: Method,
    sizes: ExpansionSizes,
    grid: &NodeGrid<T>,
    cfg: &QuadratureConfig<T>,
    opts: &IdentifyOptions<T>,
) -> String {
    let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
    let canonical = format!(
        "label={};method={};first={};second_rows={};second_cols={};scheme={:?};nodes={};horizon={:e};rcond={:e};eval_points={};quad={},{},{},{:e},{}",
        pair.label(),
        method.as_str(),
        sizes.first,
        sizes.second_rows,
        sizes.second_cols,
        grid.scheme(),
        grid.len(),
        f(pair.horizon()),
        f(opts.rcond),
        opts.eval_points,
        cfg.points_per_panel,
        cfg.min_panels_per_unit,
        cfg.refine_factor,
        f(cfg.abs_tol),
        cfg.max_refinements,
    );
    let hash = Sha256::digest(canonical.as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Stability-study tuning knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOptions<T> {
    pub identify: IdentifyOptions<T>,
    /// Size of the uniform grid the input is sampled on before perturbation.
    pub input_samples: usize,
}

impl<T: Real> Default for StabilityOptions<T> {
    fn default() -> Self {
        Self {
            identify: IdentifyOptions::default(),
            input_samples: 2048,
        }
    }
}

/// Residuals of a noise-perturbed identification experiment.
#[derive(Debug, Clone)]
pub struct StabilityOutcome<T> {
    /// Arithmetic mean of the per-trial residuals.
    pub mean_residual: T,
    pub trial_residuals: Vec<T>,
}

/// Repeats the identification with noisy data and measures how the
/// identified model degrades.
///
/// Per trial, both the sampled input (on a dense uniform grid, then linearly
/// interpolated) and the output at the grid nodes are perturbed with
/// independent uniform noise; the system is rebuilt and solved, and the
/// residual of the resulting model is computed against the clean pair. With
/// `delta = 0` the result equals the clean run exactly.
pub fn stability_experiment<T: Real>(
    pair: &SignalPair<T>,
    method: Method,
    sizes: ExpansionSizes,
    lsm_node_count: Option<usize>,
    noise: &NoiseSpec<T>,
    cfg: &QuadratureConfig<T>,
    opts: &StabilityOptions<T>,
) -> Result<StabilityOutcome<T>> {
    if opts.input_samples < 2 {
        return Err(Error::Config("input_samples must be at least 2".into()));
    }
    let node_count = match (method, lsm_node_count) {
        (Method::Collocation, None) => sizes.column_count(),
        (Method::Collocation, Some(_)) => {
            return Err(Error::Config(
                "lsm_node_count is only valid with the least-squares method".into(),
            ))
        }
        (Method::LeastSquares, Some(k)) => {
            if k < sizes.column_count() {
                return Err(Error::Config(format!(
                    "least squares needs at least {} nodes, got {k}",
                    sizes.column_count()
                )));
            }
            k
        }
        (Method::LeastSquares, None) => {
            return Err(Error::Config(
                "the least-squares method requires lsm_node_count".into(),
            ))
        }
    };

    if noise.delta == T::zero() {
        let report = match method {
            Method::Collocation => identify_collocation(pair, sizes, cfg, &opts.identify)?,
            Method::LeastSquares => identify_lsm(pair, sizes, node_count, cfg, &opts.identify)?,
        };
        return Ok(StabilityOutcome {
            mean_residual: report.residual_max,
            trial_residuals: vec![report.residual_max; noise.trials],
        });
    }

    let horizon = pair.horizon();
    let grid = NodeGrid::uniform(opts.identify.grid_scheme, node_count, horizon)?;
    let last = real::<T>((opts.input_samples - 1) as f64);
    let sample_times: Vec<T> = (0..opts.input_samples)
        .map(|k| horizon * real::<T>(k as f64) / last)
        .collect();
    let x_clean: Vec<T> = sample_times.iter().map(|&t| pair.x(t)).collect();
    let y_clean: Vec<T> = grid.nodes().iter().map(|&t| pair.y(t)).collect();

    // The interpolated input has derivative kinks at every sample, so panels
    // are laid at sample density and the tolerance is tied to the noise
    // amplitude: integrating noisy data three orders below the noise level
    // leaves the quadrature contribution invisible in the result.
    let sample_hint = T::PI() * last / horizon;
    let delta_f = noise.delta.to_f64().unwrap_or(0.0);
    let assembly_cfg = QuadratureConfig {
        abs_tol: real::<T>((delta_f * 1e-3).clamp(1e-12, 1e-6)),
        max_refinements: 4,
        ..cfg.clone()
    };

    let trial_residuals: Vec<T> = (0..noise.trials)
        .into_par_iter()
        .map(|trial| -> Result<T> {
            let x_noisy = perturb(&x_clean, noise, 2 * trial as u64);
            let y_noisy = perturb(&y_clean, noise, 2 * trial as u64 + 1);
            let noisy_pair = SignalPair::new(
                PiecewiseLinear::new(sample_times.clone(), x_noisy)?.into_signal_fn(),
                PiecewiseLinear::new(grid.nodes().to_vec(), y_noisy)?.into_signal_fn(),
                horizon,
                sample_hint,
                format!("{}-noisy", pair.label()),
            )?;
            let system = assemble(sizes, &grid, &noisy_pair, &assembly_cfg)?;
            let solution = solve_min_norm(&system.matrix, &system.rhs, opts.identify.rcond)?;
            let basis = BasisSet::chebyshev(sizes.beta_count(), horizon)?;
            let expansion =
                KernelExpansion::from_coefficients(&solution.coefficients, sizes, basis)?;
            residual_max(&expansion, pair, opts.identify.eval_points, cfg)
        })
        .collect::<Result<Vec<_>>>()?;

    let mean_residual = trial_residuals.iter().copied().sum::<T>() / real::<T>(noise.trials as f64);
    Ok(StabilityOutcome {
        mean_residual,
        trial_residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::model2_input;
    use std::sync::OnceLock;

    fn cfg() -> QuadratureConfig<f64> {
        QuadratureConfig::default()
    }

    fn model2_pair() -> &'static SignalPair<f64> {
        static PAIR: OnceLock<SignalPair<f64>> = OnceLock::new();
        PAIR.get_or_init(|| SignalPair::model2(&cfg()))
    }

    fn small_options() -> IdentifyOptions<f64> {
        IdentifyOptions {
            eval_points: 101,
            ..Default::default()
        }
    }

    fn in_span_expansion(m: usize) -> KernelExpansion<f64> {
        // K1 = B0 + B1, K2 = B0 (x) B0 in a basis of size m.
        let sizes = ExpansionSizes::cube(m).unwrap();
        let basis = BasisSet::chebyshev(sizes.beta_count(), 1.0).unwrap();
        let mut coefficients = vec![0.0; sizes.column_count()];
        coefficients[0] = 1.0;
        if m > 1 {
            coefficients[1] = 1.0;
        }
        coefficients[sizes.first] = 1.0; // c_00
        KernelExpansion::from_coefficients(&coefficients, sizes, basis).unwrap()
    }

    #[test]
    fn predict_zero_expansion_and_zero_time() {
        let sizes = ExpansionSizes::cube(3).unwrap();
        let basis = BasisSet::chebyshev(3, 1.0).unwrap();
        let zero = KernelExpansion::from_coefficients(&[0.0; 12], sizes, basis.clone()).unwrap();
        assert_eq!(predict(&zero, model2_pair(), 0.7, &cfg()).unwrap(), 0.0);

        let expansion = in_span_expansion(3);
        assert_eq!(
            predict(&expansion, model2_pair(), 0.0, &cfg()).unwrap(),
            0.0
        );
    }

    #[test]
    fn residual_of_zero_expansion_is_output_sup() {
        let sizes = ExpansionSizes::cube(2).unwrap();
        let basis = BasisSet::chebyshev(2, 1.0).unwrap();
        let zero = KernelExpansion::from_coefficients(&[0.0; 6], sizes, basis).unwrap();
        let pair = model2_pair();
        let r = residual_max(&zero, pair, 101, &cfg()).unwrap();
        let sup = (0..101)
            .map(|k| pair.y(k as f64 / 100.0).abs())
            .fold(0.0, f64::max);
        assert_eq!(r, sup);
    }

    #[test]
    fn round_trip_recovers_in_span_kernels() {
        let truth = in_span_expansion(2);
        let pair = synthesize_pair(
            truth,
            Arc::new(|t: f64| model2_input(t)),
            10.0,
            "in-span",
            &cfg(),
        )
        .unwrap();
        let sizes = ExpansionSizes::cube(2).unwrap();
        let report = identify_collocation(&pair, sizes, &cfg(), &small_options()).unwrap();
        assert!(
            report.node_residual_max <= 1e-10,
            "node residual {}",
            report.node_residual_max
        );
        assert!(
            report.residual_max <= 1e-8,
            "residual {}",
            report.residual_max
        );
    }

    #[test]
    fn antisymmetric_perturbation_is_invisible() {
        let sizes = ExpansionSizes::cube(3).unwrap();
        let report = identify_collocation(model2_pair(), sizes, &cfg(), &small_options()).unwrap();
        let base = report.expansion.clone();

        let mut coefficients = Vec::new();
        coefficients.extend_from_slice(base.first_order());
        for i in 0..3 {
            for j in 0..3 {
                coefficients.push(base.second_order().at(i, j));
            }
        }
        let eta = 0.1;
        coefficients[sizes.first + 1] += eta; // c_01
        coefficients[sizes.first + 3] -= eta; // c_10
        let perturbed =
            KernelExpansion::from_coefficients(&coefficients, sizes, base.basis().clone()).unwrap();

        for k in 0..11 {
            let t = k as f64 / 10.0;
            let a = predict(&base, model2_pair(), t, &cfg()).unwrap();
            let b = predict(&perturbed, model2_pair(), t, &cfg()).unwrap();
            assert!((a - b).abs() <= 1e-12, "t={t}: {a} vs {b}");
        }
        assert!(perturbed.coefficient_norm() > base.coefficient_norm());
    }

    #[test]
    fn predict_at_nodes_matches_node_residual() {
        // predict() shares the convolution path with assembly, so at every
        // grid node the prediction error is bounded by the reported node
        // residual (up to summation-order round-off).
        let sizes = ExpansionSizes::cube(3).unwrap();
        let report = identify_collocation(model2_pair(), sizes, &cfg(), &small_options()).unwrap();
        for &t_k in report.grid.nodes() {
            let predicted = predict(&report.expansion, model2_pair(), t_k, &cfg()).unwrap();
            let err = (predicted - model2_pair().y(t_k)).abs();
            assert!(
                err <= report.node_residual_max + 1e-12,
                "t={t_k}: {err} vs node residual {}",
                report.node_residual_max
            );
        }
    }

    #[test]
    fn symmetrized_expansion_predicts_identically() {
        let sizes = ExpansionSizes::cube(3).unwrap();
        let report = identify_collocation(model2_pair(), sizes, &cfg(), &small_options()).unwrap();
        let raw = report.expansion.clone();
        let sym = raw.symmetrized();
        for k in 0..21 {
            let t = k as f64 / 20.0;
            let a = predict(&raw, model2_pair(), t, &cfg()).unwrap();
            let b = predict(&sym, model2_pair(), t, &cfg()).unwrap();
            assert!((a - b).abs() <= 1e-13, "t={t}");
        }
    }

    #[test]
    fn lsm_requires_enough_nodes() {
        let sizes = ExpansionSizes::cube(3).unwrap();
        assert!(identify_lsm(model2_pair(), sizes, 11, &cfg(), &small_options()).is_err());
    }

    #[test]
    fn lsm_solution_minimizes_node_objective() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};

        let sizes = ExpansionSizes::cube(2).unwrap();
        let grid = NodeGrid::uniform(GridScheme::UniformIncludingZero, 13, 1.0).unwrap();
        let system = assemble(sizes, &grid, model2_pair(), &cfg()).unwrap();
        let solution = solve_min_norm(&system.matrix, &system.rhs, 1e-12).unwrap();
        let objective = |x: &[f64]| -> f64 {
            system
                .matrix
                .mul_vec(x)
                .iter()
                .zip(&system.rhs)
                .map(|(p, b)| (p - b) * (p - b))
                .sum()
        };
        let at_solution = objective(&solution.coefficients);
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..50 {
            let perturbed: Vec<f64> = solution
                .coefficients
                .iter()
                .map(|&c| c + rng.gen_range(-1e-3..1e-3))
                .collect();
            let j = objective(&perturbed);
            assert!(
                at_solution <= j * (1.0 + 1e-12) + 1e-30,
                "{at_solution} > {j}"
            );
        }
    }

    #[test]
    fn collocation_report_shape() {
        let sizes = ExpansionSizes::cube(3).unwrap();
        let report = identify_collocation(model2_pair(), sizes, &cfg(), &small_options()).unwrap();
        assert_eq!(report.method, Method::Collocation);
        assert_eq!(report.grid.len(), 12);
        // 12 columns lose one of each duplicate pair c_ij/c_ji, leaving
        // 3 + 6 = 9 distinct columns; the zero row leaves 11 nonzero rows,
        // so the rank is min(11, 9) = 9.
        assert_eq!(report.numerical_rank, 9);
        assert!(report.residual_max >= report.node_residual_max * 0.0);
        assert_eq!(report.config_digest.len(), 16);
        let json = report.to_json_value();
        assert_eq!(json["method"], "collocation");
        assert_eq!(json["first_order"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn digest_is_deterministic_and_config_sensitive() {
        let sizes = ExpansionSizes::cube(2).unwrap();
        let a = identify_collocation(model2_pair(), sizes, &cfg(), &small_options()).unwrap();
        let b = identify_collocation(model2_pair(), sizes, &cfg(), &small_options()).unwrap();
        assert_eq!(a.config_digest, b.config_digest);
        let other_opts = IdentifyOptions {
            rcond: 1e-10,
            ..small_options()
        };
        let c = identify_collocation(model2_pair(), sizes, &cfg(), &other_opts).unwrap();
        assert_ne!(a.config_digest, c.config_digest);
    }

    #[test]
    fn stability_zero_delta_equals_clean_run() {
        let sizes = ExpansionSizes::cube(2).unwrap();
        let noise = NoiseSpec::new(0.0, 3, 99).unwrap();
        let opts = StabilityOptions {
            identify: small_options(),
            input_samples: 256,
        };
        let outcome = stability_experiment(
            model2_pair(),
            Method::Collocation,
            sizes,
            None,
            &noise,
            &cfg(),
            &opts,
        )
        .unwrap();
        let clean = identify_collocation(model2_pair(), sizes, &cfg(), &small_options()).unwrap();
        assert_eq!(outcome.mean_residual, clean.residual_max);
        assert!(outcome
            .trial_residuals
            .iter()
            .all(|&r| r == clean.residual_max));
    }

    #[test]
    fn stability_argument_validation() {
        let sizes = ExpansionSizes::cube(2).unwrap();
        let noise = NoiseSpec::new(1e-3, 2, 1).unwrap();
        let opts = StabilityOptions {
            identify: small_options(),
            input_samples: 256,
        };
        assert!(stability_experiment(
            model2_pair(),
            Method::Collocation,
            sizes,
            Some(30),
            &noise,
            &cfg(),
            &opts
        )
        .is_err());
        assert!(stability_experiment(
            model2_pair(),
            Method::LeastSquares,
            sizes,
            None,
            &noise,
            &cfg(),
            &opts
        )
        .is_err());
    }
}
