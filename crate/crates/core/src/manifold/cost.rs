use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Manifold, ManifoldKind};
use crate::error::{Error, Result};

/// Largest number of dense matrix entries the toolkit will allocate
/// (`2^26`, i.e. 8192 vertices squared, 512 MiB of `f64`).
pub const MAX_DENSE_ENTRIES: usize = 1 << 26;

/// Convex transport cost profile `h`, with `c(x, y) = h(d(x, y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum CostSpec {
    /// `t²/2`
    Quadratic,
    /// `tᵖ/p`, `p > 1`
    Power { p: f64 },
    /// `cosh(t) − 1`
    Cosh,
    /// `t`; only meant for Wasserstein-1 computations.
    Linear,
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CostSpec::Power { p } if !(p > 1.0 && p.is_finite()) => {
                Err(Error::Config(format!("power cost needs p > 1, got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            CostSpec::Quadratic => "quadratic".into(),
            CostSpec::Power { p } => format!("power(p={p})"),
            CostSpec::Cosh => "cosh".into(),
            CostSpec::Linear => "linear".into(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, CostSpec::Linear)
    }

    pub fn h(&self, t: f64) -> f64 {
        match *self {
            CostSpec::Quadratic => 0.5 * t * t,
            CostSpec::Power { p } => t.powf(p) / p,
            CostSpec::Cosh => t.cosh() - 1.0,
            CostSpec::Linear => t,
        }
    }

    /// `λ = h′`.
    pub fn h_prime(&self, t: f64) -> f64 {
        match *self {
            CostSpec::Quadratic => t,
            CostSpec::Power { p } => t.powf(p - 1.0),
            CostSpec::Cosh => t.sinh(),
            CostSpec::Linear => 1.0,
        }
    }

    /// `λ⁻¹(y)` for `y ≥ 0`; `None` for the linear family.
    pub fn lambda_inv(&self, y: f64) -> Option<f64> {
        match *self {
            CostSpec::Quadratic => Some(y),
            CostSpec::Power { p } => Some(y.powf(1.0 / (p - 1.0))),
            CostSpec::Cosh => Some(y.asinh()),
            CostSpec::Linear => None,
        }
    }
}

fn check_dense(n: usize) -> Result<()> {
    match n.checked_mul(n) {
        Some(e) if e <= MAX_DENSE_ENTRIES => Ok(()),
        _ => Err(Error::Argument(format!(
            "{n} vertices exceed the dense matrix budget of {MAX_DENSE_ENTRIES} entries"
        ))),
    }
}

/// All-pairs geodesic distances, rows computed in parallel.
pub fn distance_matrix(m: &Manifold) -> Result<Array2<f64>> {
    let n = m.len();
    check_dense(n)?;
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| match m.kind {
        ManifoldKind::Mesh => row.copy_from_slice(&m.dijkstra(i)),
        _ => {
            let p = m.vertices[i];
            for (j, d) in row.iter_mut().enumerate() {
                *d = if i == j { 0.0 } else { m.distance_points(&p, &m.vertices[j]) };
            }
        }
    });
    if matches!(m.kind, ManifoldKind::Mesh) {
        // Dijkstra sums edges in path order, which can differ by an ulp
        // between the two directions.
        for i in 0..n {
            for j in 0..i {
                let v = data[i * n + j].min(data[j * n + i]);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
    }
    Ok(Array2::from_shape_vec((n, n), data).expect("square shape"))
}

/// `C_ij = h(d(i, j))`.
pub fn cost_matrix(m: &Manifold, c: &CostSpec) -> Result<Array2<f64>> {
    c.validate()?;
    Ok(distance_matrix(m)?.mapv(|d| c.h(d)))
}
