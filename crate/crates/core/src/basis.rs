//! Chebyshev basis functions on a finite time interval.
//!
//! The working interval `[0, horizon]` is pulled back onto `[-1, 1]` through
//! the affine map `u = 2t/horizon - 1`, where the Chebyshev polynomials of
//! the first kind are evaluated by their three-term recurrence.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Families of basis functions. Only Chebyshev polynomials of the first kind
/// are implemented; the enum leaves room for other orthogonal families
/// without touching the assembly code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    ChebyshevFirstKind,
}

/// Arguments may land just outside the defining interval with round-off
/// (e.g. quadrature nodes at panel endpoints); anything within this distance
/// is clamped instead of rejected.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A finite family of basis functions on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet<T> {
    kind: BasisKind,
    count: usize,
    horizon: T,
}

impl<T: Real> BasisSet<T> {
    /// Chebyshev-first-kind family with `count` functions on `[0, horizon]`.
    pub fn chebyshev(count: usize, horizon: T) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("basis count must be at least 1".into()));
        }
        if horizon <= T::zero() || !horizon.is_finite() {
            return Err(Error::Domain {
                what: "basis horizon",
                value: horizon.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            kind: BasisKind::ChebyshevFirstKind,
            count,
            horizon,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// Evaluates basis function `i` at time `t` in `[0, horizon]`.
    pub fn eval(&self, i: usize, t: T) -> Result<T> {
        if i >= self.count {
            return Err(Error::Config(format!(
                "basis index {i} out of range for count {}",
                self.count
            )));
        }
        let u = self.unit_coord(t)?;
        Ok(chebyshev_recurrence(i, u))
    }

    /// Values of all `count` basis functions at `t`, in one recurrence pass.
    /// Element `i` is bit-identical to `eval(i, t)`.
    pub fn row(&self, t: T) -> Result<Vec<T>> {
        let u = self.unit_coord(t)?;
        let mut out = Vec::with_capacity(self.count);
        let mut prev = T::one();
        out.push(prev);
        if self.count == 1 {
            return Ok(out);
        }
        let mut cur = u;
        out.push(cur);
        let two = real::<T>(2.0);
        for _ in 2..self.count {
            let next = two * u * cur - prev;
            prev = cur;
            cur = next;
            out.push(cur);
        }
        Ok(out)
    }

    /// Like [`eval`](Self::eval) but clamps out-of-interval arguments instead
    /// of failing. Used in quadrature integrands, where sample points stay
    /// inside the interval by construction.
    pub(crate) fn eval_clamped(&self, i: usize, t: T) -> T {
        let u = real::<T>(2.0) * t / self.horizon - T::one();
        chebyshev_recurrence(i, clamp_unit(u))
    }

    fn unit_coord(&self, t: T) -> Result<T> {
        let u = real::<T>(2.0) * t / self.horizon - T::one();
        let tol = real::<T>(BOUNDARY_TOL);
        if u.abs() > T::one() + tol {
            return Err(Error::Domain {
                what: "basis argument",
                value: t.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(clamp_unit(u))
    }
}

/// Chebyshev polynomial of the first kind `T_i(u)` on `[-1, 1]`, by the
/// three-term recurrence. Arguments within [`BOUNDARY_TOL`] of the endpoints
/// are clamped.
pub fn chebyshev_eval<T: Real>(i: usize, u: T) -> Result<T> {
    let tol = real::<T>(BOUNDARY_TOL);
    if u.abs() > T::one() + tol {
        return Err(Error::Domain {
            what: "chebyshev argument",
            value: u.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(chebyshev_recurrence(i, clamp_unit(u)))
}

fn clamp_unit<T: Real>(u: T) -> T {
    if u > T::one() {
        T::one()
    } else if u < -T::one() {
        -T::one()
    } else {
        u
    }
}

fn chebyshev_recurrence<T: Real>(i: usize, u: T) -> T {
    if i == 0 {
        return T::one();
    }
    let mut prev = T::one();
    let mut cur = u;
    let two = real::<T>(2.0);
    for _ in 1..i {
        let next = two * u * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_values() {
        assert_eq!(chebyshev_eval::<f64>(0, 0.37).unwrap(), 1.0);
        assert_eq!(chebyshev_eval::<f64>(1, 0.37).unwrap(), 0.37);
        assert_eq!(chebyshev_eval::<f64>(2, 0.5).unwrap(), -0.5);
        assert_eq!(chebyshev_eval::<f64>(3, 0.5).unwrap(), -1.0);
    }

    #[test]
    fn endpoint_values() {
        for i in 0..8 {
            assert_eq!(chebyshev_eval::<f64>(i, 1.0).unwrap(), 1.0);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(chebyshev_eval::<f64>(i, -1.0).unwrap(), sign);
        }
    }

    #[test]
    fn domain_checks() {
        assert!(chebyshev_eval::<f64>(3, 1.5).is_err());
        assert!(chebyshev_eval::<f64>(3, -1.0 - 1e-11).is_err());
        // A hair past the endpoint is clamped, not rejected.
        assert_eq!(chebyshev_eval::<f64>(4, 1.0 + 1e-13).unwrap(), 1.0);
    }

    #[test]
    fn bounded_on_unit_interval() {
        for i in 0..=12 {
            for k in 0..200 {
                let u = -1.0 + 2.0 * (k as f64) / 199.0;
                let v: f64 = chebyshev_eval(i, u).unwrap();
                assert!(v.abs() <= 1.0 + 1e-12, "T_{i}({u}) = {v}");
            }
        }
    }

    #[test]
    fn matches_trigonometric_form() {
        // T_i(cos θ) = cos(iθ)
        for i in 0..=12 {
            for k in 0..100 {
                let theta = std::f64::consts::PI * (k as f64 + 0.5) / 100.0;
                let v: f64 = chebyshev_eval(i, theta.cos()).unwrap();
                let exact = (i as f64 * theta).cos();
                assert!(
                    (v - exact).abs() <= 1e-10,
                    "i={i} theta={theta}: {v} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn mapped_eval_at_interval_ends() {
        let b = BasisSet::<f64>::chebyshev(6, 2.5).unwrap();
        for i in 0..6 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(b.eval(i, 0.0).unwrap(), sign);
            assert_eq!(b.eval(i, 2.5).unwrap(), 1.0);
        }
        // Midpoint maps to u = 0, where T_1 vanishes.
        assert_eq!(b.eval(1, 1.25).unwrap(), 0.0);
    }

    #[test]
    fn mapped_eval_known_point() {
        // t = 0.75 on [0, 1] maps to u = 0.5, T_2(0.5) = -0.5.
        let b = BasisSet::<f64>::chebyshev(3, 1.0).unwrap();
        assert_eq!(b.eval(2, 0.75).unwrap(), -0.5);
    }

    #[test]
    fn mapped_eval_domain_error() {
        let b = BasisSet::<f64>::chebyshev(3, 1.0).unwrap();
        assert!(b.eval(0, -0.1).is_err());
        assert!(b.eval(0, 1.1).is_err());
        assert!(b.eval(0, 1.0 + 1e-14).is_ok());
    }

    #[test]
    fn row_examples() {
        let b = BasisSet::<f64>::chebyshev(3, 1.0).unwrap();
        assert_eq!(b.row(0.0).unwrap(), vec![1.0, -1.0, 1.0]);

        let b = BasisSet::<f64>::chebyshev(2, 0.7).unwrap();
        assert_eq!(b.row(0.7).unwrap(), vec![1.0, 1.0]);

        let b = BasisSet::<f64>::chebyshev(4, 1.0).unwrap();
        assert_eq!(b.row(0.75).unwrap(), vec![1.0, 0.5, -0.5, -1.0]);
    }

    #[test]
    fn row_matches_eval_bitwise() {
        let b = BasisSet::<f64>::chebyshev(9, 1.3).unwrap();
        for k in 0..40 {
            let t = 1.3 * (k as f64) / 39.0;
            let row = b.row(t).unwrap();
            for (i, &v) in row.iter().enumerate() {
                assert_eq!(v, b.eval(i, t).unwrap(), "i={i} t={t}");
            }
        }
    }

    #[test]
    fn discrete_orthogonality() {
        // Gauss–Chebyshev rule: sum_k T_i(u_k) T_j(u_k) * pi/K approximates
        // the weighted inner product, which vanishes for i != j.
        let points = 64;
        for i in 0..=6usize {
            for j in 0..=6usize {
                if i == j {
                    continue;
                }
                let mut acc = 0.0;
                for k in 0..points {
                    let u = (std::f64::consts::PI * (k as f64 + 0.5) / points as f64).cos();
                    let ti: f64 = chebyshev_eval(i, u).unwrap();
                    let tj: f64 = chebyshev_eval(j, u).unwrap();
                    acc += ti * tj;
                }
                acc *= std::f64::consts::PI / points as f64;
                assert!(acc.abs() <= 1e-8, "i={i} j={j}: {acc}");
            }
        }
    }

    #[test]
    fn works_in_f32() {
        let b = BasisSet::<f32>::chebyshev(4, 1.0).unwrap();
        assert_eq!(b.row(0.75).unwrap(), vec![1.0f32, 0.5, -0.5, -1.0]);
    }

    #[test]
    fn rejects_degenerate_construction() {
        assert!(BasisSet::<f64>::chebyshev(0, 1.0).is_err());
        assert!(BasisSet::<f64>::chebyshev(3, 0.0).is_err());
        assert!(BasisSet::<f64>::chebyshev(3, -1.0).is_err());
    }
}
