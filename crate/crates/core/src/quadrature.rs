//! Composite Gauss–Legendre integration.
//!
//! Panels are laid out uniformly and refined by a fixed factor until two
//! successive values agree to `abs_tol`, so results are deterministic across
//! runs. The 2-D tensor rule exists for non-separable kernels and as the
//! brute-force cross-check for the factorized coefficient path.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Largest supported Gauss–Legendre rule order.
pub const MAX_RULE_POINTS: usize = 64;

/// Parameters of the composite rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig<T> {
    /// Gauss–Legendre points per panel.
    pub points_per_panel: usize,
    /// Minimum number of panels per unit of integration length.
    pub min_panels_per_unit: usize,
    /// Panel multiplication factor between refinement levels.
    pub refine_factor: usize,
    /// Agreement target for two successive refinement levels.
    pub abs_tol: T,
    /// Maximum number of refinement levels after the initial evaluation.
    pub max_refinements: usize,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        Self {
            points_per_panel: 16,
            min_panels_per_unit: 1,
            refine_factor: 2,
            abs_tol: real(1e-13),
            max_refinements: 10,
        }
    }
}

impl<T: Real> QuadratureConfig<T> {
    /// Raises the panel density so that an integrand oscillating at `omega`
    /// rad per unit time sees at most half an oscillation period per panel.
    pub fn with_oscillation(mut self, omega: T) -> Self {
        if omega > T::zero() {
            let per_unit = (omega / T::PI()).ceil().to_f64().unwrap_or(1.0) as usize;
            self.min_panels_per_unit = self.min_panels_per_unit.max(per_unit.max(1));
        }
        self
    }

    fn validate(&self) -> Result<()> {
        if self.points_per_panel < 2 || self.points_per_panel > MAX_RULE_POINTS {
            return Err(Error::Config(format!(
                "points_per_panel must be in 2..={MAX_RULE_POINTS}, got {}",
                self.points_per_panel
            )));
        }
        if self.min_panels_per_unit == 0 {
            return Err(Error::Config(
                "min_panels_per_unit must be at least 1".into(),
            ));
        }
        if self.refine_factor < 2 {
            return Err(Error::Config("refine_factor must be at least 2".into()));
        }
        if self.abs_tol <= T::zero() || self.abs_tol.is_nan() {
            return Err(Error::Config("abs_tol must be positive".into()));
        }
        if self.max_refinements == 0 {
            return Err(Error::Config("max_refinements must be at least 1".into()));
        }
        Ok(())
    }

    fn initial_panels(&self, length: T) -> usize {
        let per_unit = real::<T>(self.min_panels_per_unit as f64);
        let wanted = (length * per_unit).ceil().to_f64().unwrap_or(1.0);
        (wanted as usize).max(1)
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Nodes are strictly increasing, weights positive; the rule is exact for
/// polynomials of degree `2n - 1`.
pub fn gauss_legendre_rule<T: Real>(n: usize) -> Result<(Vec<T>, Vec<T>)> {
    if n == 0 || n > MAX_RULE_POINTS {
        return Err(Error::Config(format!(
            "rule order must be in 1..={MAX_RULE_POINTS}, got {n}"
        )));
    }
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = real::<T>(n as f64);
    // Newton iteration from the Chebyshev-like initial guess; roots come in
    // symmetric pairs, so only the upper half is solved for.
    for i in 0..n.div_ceil(2) {
        let theta = T::PI() * (real::<T>(i as f64) + real::<T>(0.75)) / (nf + real::<T>(0.5));
        let mut x = theta.cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / dp;
            x = x - dx;
            if dx.abs() <= T::epsilon() * (x.abs() + T::one()) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        if n % 2 == 1 && i == n / 2 {
            x = T::zero();
            let (_, d) = legendre_with_derivative(n, x);
            dp = d;
        }
        let w = real::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    Ok((nodes, weights))
}

/// Legendre polynomial `P_n(x)` and its derivative, by the Bonnet recurrence.
fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p_prev = T::one();
    let mut p = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = real::<T>(k as f64);
        let next = ((real::<T>(2.0) * kf - T::one()) * x * p - (kf - T::one()) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let nf = real::<T>(n as f64);
    let dp = nf * (x * p - p_prev) / (x * x - T::one());
    (p, dp)
}

/// Integral of `f` over `[a, b]` with successive uniform refinement.
///
/// Returns the value and the last successive difference as error estimate.
/// An estimate above `abs_tol` means the refinement budget ran out; the
/// caller decides whether that is acceptable.
pub fn integrate_1d<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    cfg: &QuadratureConfig<T>,
) -> Result<(T, T)> {
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Config(format!(
            "integration bounds must satisfy a <= b, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok((T::zero(), T::zero()));
    }
    let (nodes, weights) = gauss_legendre_rule(cfg.points_per_panel)?;
    let mut panels = cfg.initial_panels(b - a);
    let mut value = composite_1d(&f, a, b, panels, &nodes, &weights)?;
    let mut estimate = T::infinity();
    for _ in 0..cfg.max_refinements {
        panels *= cfg.refine_factor;
        let refined = composite_1d(&f, a, b, panels, &nodes, &weights)?;
        estimate = (refined - value).abs();
        value = refined;
        if estimate <= cfg.abs_tol {
            break;
        }
    }
    Ok((value, estimate))
}

fn composite_1d<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    panels: usize,
    nodes: &[T],
    weights: &[T],
) -> Result<T> {
    let width = (b - a) / real::<T>(panels as f64);
    let half = width / real::<T>(2.0);
    let mut total = T::zero();
    for p in 0..panels {
        let start = a + width * real::<T>(p as f64);
        let mid = start + half;
        let mut panel_sum = T::zero();
        for (&u, &w) in nodes.iter().zip(weights) {
            let s = mid + half * u;
            let v = f(s);
            if !v.is_finite() {
                return Err(Error::Integrand(format!("non-finite sample at s = {s}")));
            }
            panel_sum = panel_sum + w * v;
        }
        total = total + panel_sum * half;
    }
    Ok(total)
}

/// Tensor-product composite Gauss–Legendre rule for `f` over the square
/// `[0, t] x [0, t]`.
pub fn integrate_2d_tensor<T: Real, F: Fn(T, T) -> T>(
    f: F,
    t: T,
    cfg: &QuadratureConfig<T>,
) -> Result<(T, T)> {
    cfg.validate()?;
    if !t.is_finite() || t < T::zero() {
        return Err(Error::Config(format!(
            "square side must be nonnegative, got {t}"
        )));
    }
    if t == T::zero() {
        return Ok((T::zero(), T::zero()));
    }
    let (nodes, weights) = gauss_legendre_rule(cfg.points_per_panel)?;
    let mut panels = cfg.initial_panels(t);
    let mut value = composite_2d(&f, t, panels, &nodes, &weights)?;
    let mut estimate = T::infinity();
    for _ in 0..cfg.max_refinements {
        panels *= cfg.refine_factor;
        let refined = composite_2d(&f, t, panels, &nodes, &weights)?;
        estimate = (refined - value).abs();
        value = refined;
        if estimate <= cfg.abs_tol {
            break;
        }
    }
    Ok((value, estimate))
}

fn composite_2d<T: Real, F: Fn(T, T) -> T>(
    f: &F,
    t: T,
    panels: usize,
    nodes: &[T],
    weights: &[T],
) -> Result<T> {
    let width = t / real::<T>(panels as f64);
    let half = width / real::<T>(2.0);
    let scale = half * half;
    // Sample coordinates are shared between the two axes.
    let mut coords = Vec::with_capacity(panels * nodes.len());
    for p in 0..panels {
        let mid = width * real::<T>(p as f64) + half;
        for &u in nodes {
            coords.push(mid + half * u);
        }
    }
    let mut total = T::zero();
    for (i1, &s1) in coords.iter().enumerate() {
        let w1 = weights[i1 % nodes.len()];
        let mut line = T::zero();
        for (i2, &s2) in coords.iter().enumerate() {
            let w2 = weights[i2 % nodes.len()];
            let v = f(s1, s2);
            if !v.is_finite() {
                return Err(Error::Integrand(format!(
                    "non-finite sample at (s1, s2) = ({s1}, {s2})"
                )));
            }
            line = line + w2 * v;
        }
        total = total + w1 * line;
    }
    Ok(total * scale)
}
