//! Assembly of the linear system in the expansion coefficients.
//!
//! At each grid node `t_k` the model contributes one equation
//!
//! ```text
//! y(t_k) = sum_i a_i beta[i][k] + sum_ij c_ij gamma[i][j][k]
//! ```
//!
//! where `beta[i][k]` is the convolution of basis function `i` with the input
//! over `[0, t_k]`. The double integral `gamma[i][j][k]` factorizes into
//! `beta[i][k] * beta[j][k]` because its integrand is a product of functions
//! of the two independent variables, so assembly computes one 1-D integral
//! per (basis function, node) and fills the second-order columns with
//! products. The 2-D tensor rule remains available as a cross-check.

use rayon::prelude::*;

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::quadrature::{integrate_1d, QuadratureConfig};
use crate::scalar::{real, Real};
use crate::signals::SignalPair;

/// Node placement on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScheme {
    /// `t_k = k * horizon / N`, `k = 0..=N`. The first node is 0, which
    /// contributes an all-zero matrix row.
    UniformIncludingZero,
    /// `t_k = (k + 1) * horizon / (N + 1)`, `k = 0..=N`; no zero node.
    UniformExcludingZero,
}

/// An increasing set of time nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGrid<T> {
    nodes: Vec<T>,
    scheme: GridScheme,
}

impl<T: Real> NodeGrid<T> {
    /// Uniform grid with `node_count` nodes on `[0, horizon]`.
    pub fn uniform(scheme: GridScheme, node_count: usize, horizon: T) -> Result<Self> {
        if horizon <= T::zero() || !horizon.is_finite() {
            return Err(Error::Domain {
                what: "grid horizon",
                value: horizon.to_f64().unwrap_or(f64::NAN),
            });
        }
        let nodes = match scheme {
            GridScheme::UniformIncludingZero => {
                if node_count < 2 {
                    return Err(Error::Config(
                        "a grid including zero needs at least 2 nodes".into(),
                    ));
                }
                let last = real::<T>((node_count - 1) as f64);
                (0..node_count)
                    .map(|k| horizon * real::<T>(k as f64) / last)
                    .collect()
            }
            GridScheme::UniformExcludingZero => {
                if node_count == 0 {
                    return Err(Error::Config("grid needs at least 1 node".into()));
                }
                let count = real::<T>(node_count as f64);
                (0..node_count)
                    .map(|k| horizon * real::<T>((k + 1) as f64) / count)
                    .collect()
            }
        };
        Ok(Self { nodes, scheme })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }
}

/// Expansion sizes: `first` coefficients for the first-order kernel and a
/// `second_rows x second_cols` coefficient matrix for the second-order one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionSizes {
    pub first: usize,
    pub second_rows: usize,
    pub second_cols: usize,
}

impl ExpansionSizes {
    pub fn new(first: usize, second_rows: usize, second_cols: usize) -> Result<Self> {
        if first == 0 || second_rows == 0 || second_cols == 0 {
            return Err(Error::Config("expansion sizes must be at least 1".into()));
        }
        Ok(Self {
            first,
            second_rows,
            second_cols,
        })
    }

    /// Equal sizes in every slot, the common experimental setup.
    pub fn cube(m: usize) -> Result<Self> {
        Self::new(m, m, m)
    }

    /// Number of unknown coefficients, i.e. system columns.
    pub fn column_count(&self) -> usize {
        self.first + self.second_rows * self.second_cols
    }

    /// Number of distinct convolution integrals needed per node.
    pub fn beta_count(&self) -> usize {
        self.first.max(self.second_rows).max(self.second_cols)
    }
}

/// Identity of a system column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficient {
    /// First-order coefficient `a_i`.
    FirstOrder(usize),
    /// Second-order coefficient `c_ij`.
    SecondOrder(usize, usize),
}

/// The assembled linear system.
#[derive(Debug, Clone)]
pub struct AssembledSystem<T> {
    pub matrix: Matrix<T>,
    pub rhs: Vec<T>,
    pub column_map: Vec<Coefficient>,
    pub grid: NodeGrid<T>,
    pub sizes: ExpansionSizes,
    /// Largest quadrature error estimate over all assembled entries.
    pub worst_error_estimate: T,
}

/// Convolution of basis function `i` with the input over `[0, node_time]`:
/// the integral of `B_i(s) x(node_time - s)`.
///
/// Returns the value and the quadrature error estimate. The panel density
/// honors the pair's oscillation hint. A zero node time yields `(0, 0)`.
pub fn beta_coeff<T: Real>(
    basis: &BasisSet<T>,
    pair: &SignalPair<T>,
    i: usize,
    node_time: T,
    cfg: &QuadratureConfig<T>,
) -> Result<(T, T)> {
    let cfg = cfg.clone().with_oscillation(pair.oscillation_hint());
    let x = pair.x_fn();
    integrate_1d(
        |s| basis.eval_clamped(i, s) * x(node_time - s),
        T::zero(),
        node_time,
        &cfg,
    )
}

/// Second-order system entry from two first-order entries at the same node.
/// The double integral factorizes exactly into this product.
pub fn gamma_coeff<T: Real>(beta_ik: T, beta_jk: T) -> T {
    beta_ik * beta_jk
}

/// Builds the design matrix and right-hand side over the grid.
///
/// Row `k` holds the `beta` entries for the first-order columns followed by
/// their pairwise products for the second-order columns (row-major in
/// `(i, j)`); the right-hand side is the output sampled at the node. Each
/// `beta[i][k]` is integrated once and reused, so columns `c_ij` and `c_ji`
/// come out bit-identical.
pub fn assemble<T: Real>(
    sizes: ExpansionSizes,
    grid: &NodeGrid<T>,
    pair: &SignalPair<T>,
    cfg: &QuadratureConfig<T>,
) -> Result<AssembledSystem<T>> {
    if grid.is_empty() {
        return Err(Error::Config("node grid is empty".into()));
    }
    let horizon = pair.horizon();
    let tol = real::<T>(crate::basis::BOUNDARY_TOL);
    for &t in grid.nodes() {
        if t < -tol || t > horizon + tol * horizon.max(T::one()) {
            return Err(Error::Domain {
                what: "grid node",
                value: t.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let basis = BasisSet::chebyshev(sizes.beta_count(), horizon)?;

    struct RowData<T> {
        entries: Vec<T>,
        rhs: T,
        worst_estimate: T,
    }

    let rows: Vec<RowData<T>> = grid
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(k, &t_k)| {
            let mut betas = Vec::with_capacity(sizes.beta_count());
            let mut worst = T::zero();
            for i in 0..sizes.beta_count() {
                let (value, estimate) =
                    beta_coeff(&basis, pair, i, t_k, cfg).map_err(|e| Error::Assembly {
                        basis_index: i,
                        node_index: k,
                        source: Box::new(e),
                    })?;
                if estimate > worst {
                    worst = estimate;
                }
                betas.push(value);
            }
            let mut entries = Vec::with_capacity(sizes.column_count());
            entries.extend_from_slice(&betas[..sizes.first]);
            for i in 0..sizes.second_rows {
                for j in 0..sizes.second_cols {
                    entries.push(gamma_coeff(betas[i], betas[j]));
                }
            }
            Ok(RowData {
                entries,
                rhs: pair.y(t_k),
                worst_estimate: worst,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut column_map = Vec::with_capacity(sizes.column_count());
    for i in 0..sizes.first {
        column_map.push(Coefficient::FirstOrder(i));
    }
    for i in 0..sizes.second_rows {
        for j in 0..sizes.second_cols {
            column_map.push(Coefficient::SecondOrder(i, j));
        }
    }

    let mut worst_error_estimate = T::zero();
    let mut rhs = Vec::with_capacity(rows.len());
    let mut matrix_rows = Vec::with_capacity(rows.len());
    for row in rows {
        if row.worst_estimate > worst_error_estimate {
            worst_error_estimate = row.worst_estimate;
        }
        rhs.push(row.rhs);
        matrix_rows.push(row.entries);
    }

    Ok(AssembledSystem {
        matrix: Matrix::from_rows(matrix_rows)?,
        rhs,
        column_map,
        grid: grid.clone(),
        sizes,
        worst_error_estimate,
    })
}
