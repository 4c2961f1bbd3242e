//! Model signals, ground-truth kernels, the forward-response oracle and the
//! noise model for stability studies.
//!
//! Two built-in signal pairs are provided. The first drives a periodic input
//! `sin(20t)` through kernels `exp(-3s)` and `exp(-s1 - 2s2)`; its output is
//! known in closed form, in two variants (see [`model1_output_printed`] and
//! [`model1_output_corrected`]). The second uses a fading input
//! `exp(-3t) sin(10t)` with kernels `cos(s/2)` and `sin(s1 + 2s2)`; its
//! output has no closed form and is generated by [`forward_response`] with
//! per-point caching.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, integrate_2d_tensor, QuadratureConfig};
use crate::scalar::{real, Real};

/// Shared time-domain function.
pub type SignalFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Shared two-argument kernel function.
pub type KernelFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// An input/output signal pair on `[0, horizon]`.
#[derive(Clone)]
pub struct SignalPair<T> {
    x: SignalFn<T>,
    y: SignalFn<T>,
    horizon: T,
    oscillation_hint: T,
    label: String,
}

impl<T: Real> SignalPair<T> {
    pub fn new(
        x: SignalFn<T>,
        y: SignalFn<T>,
        horizon: T,
        oscillation_hint: T,
        label: impl Into<String>,
    ) -> Result<Self> {
        if horizon <= T::zero() || !horizon.is_finite() {
            return Err(Error::Domain {
                what: "signal horizon",
                value: horizon.to_f64().unwrap_or(f64::NAN),
            });
        }
        if oscillation_hint < T::zero() || !oscillation_hint.is_finite() {
            return Err(Error::Config("oscillation hint must be nonnegative".into()));
        }
        Ok(Self {
            x,
            y,
            horizon,
            oscillation_hint,
            label: label.into(),
        })
    }

    /// Periodic model with the output formula taken verbatim from its
    /// published closed form (offset by `100/40501` at `t = 0`).
    pub fn model1_printed() -> Self {
        Self::new(
            Arc::new(|t| model1_input(t)),
            Arc::new(|t| model1_output_printed(t)),
            T::one(),
            real(20.0),
            "model1-printed",
        )
        .expect("static construction")
    }

    /// Periodic model with the output corrected to be an exact second-order
    /// Volterra response (`y(0) = 0`).
    pub fn model1_corrected() -> Self {
        Self::new(
            Arc::new(|t| model1_input(t)),
            Arc::new(|t| model1_output_corrected(t)),
            T::one(),
            real(20.0),
            "model1-corrected",
        )
        .expect("static construction")
    }

    /// Fading-input model; the output is generated by the forward oracle and
    /// cached per evaluation point.
    pub fn model2(cfg: &QuadratureConfig<T>) -> Self {
        Self::from_kernels(
            GroundTruthKernels::model2(),
            Arc::new(|t| model2_input(t)),
            T::one(),
            real(10.0),
            "model2",
            cfg,
        )
    }

    /// Pair whose output is the exact truncated-series response of `kernels`
    /// to `x`, evaluated on demand by quadrature and cached by time point.
    pub fn from_kernels(
        kernels: GroundTruthKernels<T>,
        x: SignalFn<T>,
        horizon: T,
        oscillation_hint: T,
        label: impl Into<String>,
        cfg: &QuadratureConfig<T>,
    ) -> Self {
        let cfg = cfg.clone().with_oscillation(oscillation_hint);
        let cache: Arc<Mutex<HashMap<u64, T>>> = Arc::new(Mutex::new(HashMap::new()));
        let x_inner = x.clone();
        let y: SignalFn<T> = Arc::new(move |t: T| {
            let key = t.to_f64().unwrap_or(f64::NAN).to_bits();
            if let Some(&v) = cache.lock().unwrap().get(&key) {
                return v;
            }
            let v = forward_response(&kernels, |s| (x_inner)(s), t, &cfg)
                .expect("forward response of a finite model");
            cache.lock().unwrap().insert(key, v);
            v
        });
        Self::new(x, y, horizon, oscillation_hint, label).expect("validated horizon")
    }

    /// Builds a pair from matching sampled grids, linearly interpolated.
    pub fn from_samples(
        times: Vec<T>,
        x_values: Vec<T>,
        y_values: Vec<T>,
        oscillation_hint: T,
        label: impl Into<String>,
    ) -> Result<Self> {
        let x = PiecewiseLinear::new(times.clone(), x_values)?;
        let y = PiecewiseLinear::new(times, y_values)?;
        let horizon = x.end();
        Self::new(
            x.into_signal_fn(),
            y.into_signal_fn(),
            horizon,
            oscillation_hint,
            label,
        )
    }

    /// Reads a pair from two CSV files (`t,value` with a header row). Both
    /// files must carry the same time grid starting at zero.
    pub fn from_csv(x_path: &Path, y_path: &Path) -> Result<Self> {
        let (tx, vx) = read_signal_csv::<T>(x_path)?;
        let (ty, vy) = read_signal_csv::<T>(y_path)?;
        if tx.len() != ty.len() {
            return Err(Error::SignalData(format!(
                "sample grids differ in length: {} vs {}",
                tx.len(),
                ty.len()
            )));
        }
        let tol = real::<T>(1e-12);
        for (k, (&a, &b)) in tx.iter().zip(&ty).enumerate() {
            if (a - b).abs() > tol * (T::one() + a.abs()) {
                return Err(Error::SignalData(format!(
                    "sample grids differ at row {k}: {a} vs {b}"
                )));
            }
        }
        if tx[0].abs() > tol {
            return Err(Error::SignalData(format!(
                "sample grid must start at t = 0, got {}",
                tx[0]
            )));
        }
        let label = format!(
            "csv:{}",
            x_path
                .file_name()
                .map(|s| s.to_string_lossy())
                .unwrap_or_default()
        );
        Self::from_samples(tx, vx, vy, T::zero(), label)
    }

    pub fn x(&self, t: T) -> T {
        (self.x)(t)
    }

    pub fn y(&self, t: T) -> T {
        (self.y)(t)
    }

    pub fn x_fn(&self) -> SignalFn<T> {
        self.x.clone()
    }

    pub fn y_fn(&self) -> SignalFn<T> {
        self.y.clone()
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn oscillation_hint(&self) -> T {
        self.oscillation_hint
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl<T> std::fmt::Debug for SignalPair<T>
where
    T: std::fmt::Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SignalPair")
            .field("label", &self.label)
            .field("horizon", &self.horizon)
            .field("oscillation_hint", &self.oscillation_hint)
            .finish()
    }
}

/// Ground-truth kernels of a second-order model.
#[derive(Clone)]
pub struct GroundTruthKernels<T> {
    pub k1: SignalFn<T>,
    pub k2: KernelFn<T>,
}

impl<T: Real> GroundTruthKernels<T> {
    pub fn new(k1: SignalFn<T>, k2: KernelFn<T>) -> Self {
        Self { k1, k2 }
    }

    /// `K1 = exp(-3s)`, `K2 = exp(-s1 - 2 s2)`: the kernels behind the
    /// periodic model's closed-form output.
    pub fn model1() -> Self {
        Self {
            k1: Arc::new(|s: T| (-real::<T>(3.0) * s).exp()),
            k2: Arc::new(|s1: T, s2: T| (-s1 - real::<T>(2.0) * s2).exp()),
        }
    }

    /// `K1 = cos(s/2)`, `K2 = sin(s1 + 2 s2)`: the fading-input model.
    pub fn model2() -> Self {
        Self {
            k1: Arc::new(|s: T| (s / real::<T>(2.0)).cos()),
            k2: Arc::new(|s1: T, s2: T| (s1 + real::<T>(2.0) * s2).sin()),
        }
    }
}

/// Input of the periodic model: `sin(20t)`.
pub fn model1_input<T: Real>(t: T) -> T {
    (real::<T>(20.0) * t).sin()
}

/// Closed-form output of the periodic model, exactly as published.
///
/// The formula does not vanish at `t = 0` (it equals `100/40501` there), so
/// it cannot be the response of a causal second-order series; see
/// [`model1_output_corrected`].
pub fn model1_output_printed<T: Real>(t: T) -> T {
    let c = (real::<T>(20.0) * t).cos();
    let s = (real::<T>(20.0) * t).sin();
    let e1 = (-t).exp();
    let e2 = (-real::<T>(2.0) * t).exp();
    let e3 = (-real::<T>(3.0) * t).exp();
    let first = (real::<T>(199.0) * c * c
        - real::<T>(15.0) * (real::<T>(40.0) * t).sin()
        - real::<T>(200.0) * c * e2
        + T::one()
        + real::<T>(10.0) * s * e2
        + real::<T>(20.0) * s * e1)
        / real::<T>(81002.0);
    let second = (real::<T>(3.0) * s - real::<T>(20.0) * c
        + real::<T>(850920.0) / real::<T>(40501.0) * e3)
        / real::<T>(409.0);
    first + second
}

/// Output of the periodic model as the exact response of the kernels
/// `exp(-3s)` and `exp(-s1 - 2 s2)` to `sin(20t)`.
///
/// Expanding that response in closed form shows the published formula is
/// missing a `-(100/40501) cos(20t) exp(-t)` term; adding it restores
/// `y(0) = 0` and agreement with the quadrature oracle everywhere.
pub fn model1_output_corrected<T: Real>(t: T) -> T {
    model1_output_printed(t)
        - real::<T>(100.0) / real::<T>(40501.0) * (real::<T>(20.0) * t).cos() * (-t).exp()
}

/// Input of the fading model: `exp(-3t) sin(10t)`.
pub fn model2_input<T: Real>(t: T) -> T {
    (-real::<T>(3.0) * t).exp() * (real::<T>(10.0) * t).sin()
}

/// Response of the truncated second-order series with the given kernels to
/// input `x` at time `t`:
/// first-order convolution plus the double integral over `[0, t]^2`.
pub fn forward_response<T: Real>(
    kernels: &GroundTruthKernels<T>,
    x: impl Fn(T) -> T,
    t: T,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    if t < T::zero() || !t.is_finite() {
        return Err(Error::Domain {
            what: "response time",
            value: t.to_f64().unwrap_or(f64::NAN),
        });
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    let k1 = &kernels.k1;
    let k2 = &kernels.k2;
    let (first, _) = integrate_1d(|s| k1(s) * x(t - s), T::zero(), t, cfg)?;
    let (second, _) = integrate_2d_tensor(|s1, s2| k2(s1, s2) * x(t - s1) * x(t - s2), t, cfg)?;
    Ok(first + second)
}

/// Uniform measurement-noise model: amplitude bound, trial count, RNG seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<T> {
    pub delta: T,
    pub trials: usize,
    pub seed: u64,
}

impl<T: Real> NoiseSpec<T> {
    pub fn new(delta: T, trials: usize, seed: u64) -> Result<Self> {
        if delta < T::zero() || !delta.is_finite() {
            return Err(Error::Config("noise amplitude must be nonnegative".into()));
        }
        if trials == 0 {
            return Err(Error::Config("noise trials must be at least 1".into()));
        }
        Ok(Self {
            delta,
            trials,
            seed,
        })
    }
}

/// Adds i.i.d. uniform noise on `[-delta, delta]` to each sample.
///
/// Deterministic for a given `(seed, stream)`; distinct streams are
/// independent, so one experiment trial can draw separate input and output
/// noise. `delta = 0` returns the samples unchanged.
pub fn perturb<T: Real>(samples: &[T], spec: &NoiseSpec<T>, stream: u64) -> Vec<T> {
    if spec.delta == T::zero() {
        return samples.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let delta = spec.delta.to_f64().unwrap_or(0.0);
    samples
        .iter()
        .map(|&v| {
            let u: f64 = rng.gen();
            v + real::<T>(delta * (2.0 * u - 1.0))
        })
        .collect()
}

/// Piecewise-linear interpolant over a strictly increasing sample grid,
/// clamped outside the grid.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> PiecewiseLinear<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::SignalData(
                "interpolation needs at least two samples".into(),
            ));
        }
        if times.len() != values.len() {
            return Err(Error::SignalData(format!(
                "time and value lengths differ: {} vs {}",
                times.len(),
                values.len()
            )));
        }
        if times
            .windows(2)
            .any(|w| w[0] >= w[1] || w[0].is_nan() || w[1].is_nan())
        {
            return Err(Error::SignalData(
                "sample times must be strictly increasing".into(),
            ));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::SignalData("non-finite sample".into()));
        }
        Ok(Self { times, values })
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn end(&self) -> T {
        *self.times.last().unwrap()
    }

    pub fn eval(&self, t: T) -> T {
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.end() {
            return *self.values.last().unwrap();
        }
        // Index of the first knot strictly greater than t.
        let hi = self.times.partition_point(|&k| k <= t);
        let lo = hi - 1;
        let t0 = self.times[lo];
        let t1 = self.times[hi];
        let v0 = self.values[lo];
        let v1 = self.values[hi];
        v0 + (t - t0) / (t1 - t0) * (v1 - v0)
    }

    pub fn into_signal_fn(self) -> SignalFn<T> {
        Arc::new(move |t| self.eval(t))
    }
}

fn read_signal_csv<T: Real>(path: &Path) -> Result<(Vec<T>, Vec<T>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::SignalData(format!("{}: {e}", path.display())))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::SignalData(format!("{}: {e}", path.display())))?;
        if headers.len() < 2 {
            return Err(Error::SignalData(format!(
                "{}: expected two columns (t, value)",
                path.display()
            )));
        }
        if headers.get(0).is_some_and(|h| h.parse::<f64>().is_ok()) {
            return Err(Error::SignalData(format!(
                "{}: missing header row",
                path.display()
            )));
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::SignalData(format!("{}: {e}", path.display())))?;
        let parse = |field: usize| -> Result<T> {
            let raw = record.get(field).ok_or_else(|| {
                Error::SignalData(format!(
                    "{}: row {row} is missing column {field}",
                    path.display()
                ))
            })?;
            let v: f64 = raw.parse().map_err(|_| {
                Error::SignalData(format!(
                    "{}: row {row} column {field}: cannot parse {raw:?}",
                    path.display()
                ))
            })?;
            Ok(real(v))
        };
        times.push(parse(0)?);
        values.push(parse(1)?);
    }
    if times.len() < 2 {
        return Err(Error::SignalData(format!(
            "{}: expected at least two samples",
            path.display()
        )));
    }
    Ok((times, values))
}
