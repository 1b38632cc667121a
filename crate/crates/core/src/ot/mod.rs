//! Discrete optimal transport between vertex measures.
//!
//! Masses live on mesh vertices: a [`DensityField`] stores densities with
//! respect to the vertex weights together with the resulting masses. Plans
//! are sparse triplet lists in mass units; potentials are indexed by vertex.

mod duals;
mod map;
mod simplex;
mod sinkhorn;

use std::io::Write;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::manifold::Manifold;

pub use map::recover_map;
pub use simplex::{solve_exact, solve_transport, Pricing, SimplexOptions, TransportSolution};
pub use sinkhorn::{sinkhorn, SinkhornOptions, SinkhornOutput};

/// Tolerance on `Σ mass = 1`.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance on `φ_i + ψ_j ≤ C_ij`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Plan entries at or below this are treated as outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Probability density with respect to the vertex weights of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    rho: Vec<f64>,
    masses: Vec<f64>,
}

impl DensityField {
    /// Wraps an already normalized density.
    pub fn new(m: &Manifold, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != m.len() {
            return Err(Error::Argument(format!(
                "density has {} values for {} vertices",
                rho.len(),
                m.len()
            )));
        }
        if let Some((i, r)) = rho.iter().enumerate().find(|(_, r)| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::Argument(format!("density at vertex {i} is {r}")));
        }
        let masses: Vec<f64> = rho.iter().zip(m.weights()).map(|(r, w)| r * w).collect();
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Argument(format!("density has total mass {total}, expected 1")));
        }
        Ok(DensityField { rho, masses })
    }

    /// Rescales a nonnegative function to unit mass.
    pub fn normalized(m: &Manifold, mut rho: Vec<f64>) -> Result<Self> {
        if rho.len() != m.len() {
            return Err(Error::Argument(format!(
                "density has {} values for {} vertices",
                rho.len(),
                m.len()
            )));
        }
        if rho.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::Argument("density values must be finite and nonnegative".into()));
        }
        let total: f64 = rho.iter().zip(m.weights()).map(|(r, w)| r * w).sum();
        if !(total > 0.0) {
            return Err(Error::Argument("density has zero mass".into()));
        }
        rho.iter_mut().for_each(|r| *r /= total);
        let masses: Vec<f64> = rho.iter().zip(m.weights()).map(|(r, w)| r * w).collect();
        Ok(DensityField { rho, masses })
    }

    /// Normalizes a nonnegative, nonzero density against explicit weights.
    pub(crate) fn normalized_with(weights: &[f64], mut rho: Vec<f64>) -> Self {
        let total: f64 = rho.iter().zip(weights).map(|(r, w)| r * w).sum();
        rho.iter_mut().for_each(|r| *r /= total);
        let masses = rho.iter().zip(weights).map(|(r, w)| r * w).collect();
        DensityField { rho, masses }
    }

    pub fn uniform(m: &Manifold) -> Self {
        let total = m.total_weight();
        DensityField {
            rho: vec![1.0 / total; m.len()],
            masses: m.weights().iter().map(|w| w / total).collect(),
        }
    }

    /// Unit mass at a single vertex.
    pub fn dirac(m: &Manifold, i: usize) -> Result<Self> {
        if i >= m.len() {
            return Err(Error::Argument(format!("vertex {i} out of range")));
        }
        let mut rho = vec![0.0; m.len()];
        rho[i] = 1.0 / m.weights()[i];
        let mut masses = vec![0.0; m.len()];
        masses[i] = 1.0;
        Ok(DensityField { rho, masses })
    }

    /// Builds a density directly from vertex masses summing to one.
    pub fn from_masses(m: &Manifold, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != m.len() {
            return Err(Error::Argument("mass vector length mismatch".into()));
        }
        if masses.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::Argument("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::Argument(format!("masses sum to {total}, expected 1")));
        }
        let rho = masses.iter().zip(m.weights()).map(|(x, w)| x / w).collect();
        Ok(DensityField { rho, masses })
    }

    pub fn values(&self) -> &[f64] {
        &self.rho
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Total-variation distance `½ Σ |m_i − m'_i|`.
    pub fn tv_distance(&self, other: &DensityField) -> f64 {
        0.5 * self
            .masses
            .iter()
            .zip(&other.masses)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Sparse coupling in mass units, entries sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
}

impl TransportPlan {
    /// Builds a plan from triplets; duplicates are summed, zeros dropped.
    pub fn from_entries(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(e) = entries
            .iter()
            .find(|(i, j, g)| *i >= rows || *j >= cols || !(*g >= 0.0 && g.is_finite()))
        {
            return Err(Error::Argument(format!("invalid plan entry {e:?}")));
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (i, j, g) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += g,
                _ => merged.push((i, j, g)),
            }
        }
        merged.retain(|e| e.2 > 0.0);
        let mut row_sums = vec![0.0; rows];
        let mut col_sums = vec![0.0; cols];
        for &(i, j, g) in &merged {
            row_sums[i] += g;
            col_sums[j] += g;
        }
        Ok(TransportPlan {
            rows,
            cols,
            entries: merged,
            row_sums,
            col_sums,
        })
    }

    pub fn from_dense(p: ArrayView2<f64>) -> Result<Self> {
        let (n, m) = p.dim();
        let entries = p
            .indexed_iter()
            .filter(|(_, g)| **g > 0.0)
            .map(|((i, j), g)| (i, j, *g))
            .collect();
        Self::from_entries(n, m, entries)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut p = Array2::zeros((self.rows, self.cols));
        for &(i, j, g) in &self.entries {
            p[[i, j]] += g;
        }
        p
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    /// `⟨C, γ⟩`.
    pub fn cost(&self, c: ArrayView2<f64>) -> f64 {
        self.entries.iter().map(|&(i, j, g)| g * c[[i, j]]).sum()
    }

    /// Largest marginal deviation from the given source and target masses.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.row_sums.iter().zip(a).map(|(x, y)| (x - y).abs());
        let c = self.col_sums.iter().zip(b).map(|(x, y)| (x - y).abs());
        r.chain(c).fold(0.0, f64::max)
    }

    /// Support size (`γ_ij > SUPPORT_TOL`).
    pub fn support_size(&self) -> usize {
        self.entries.iter().filter(|e| e.2 > SUPPORT_TOL).count()
    }

    /// Writes `i,j,mass` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,j,mass")?;
        for &(i, j, g) in &self.entries {
            writeln!(out, "{i},{j},{g:e}")?;
        }
        Ok(())
    }
}

/// Kantorovich potentials, anchored so that `psi[anchor] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub anchor: usize,
}

impl PotentialPair {
    /// Shifts `(φ, ψ) → (φ + ψ[j], ψ − ψ[j])` so that `ψ[j] = 0`.
    pub fn anchored_at(mut self, j: usize) -> Self {
        let s = self.psi[j];
        self.phi.iter_mut().for_each(|x| *x += s);
        self.psi.iter_mut().for_each(|x| *x -= s);
        self.psi[j] = 0.0;
        self.anchor = j;
        self
    }

    /// Largest `φ_i + ψ_j − C_ij` and its location.
    pub fn max_violation(&self, c: ArrayView2<f64>) -> (usize, usize, f64) {
        let mut worst = (0, 0, f64::NEG_INFINITY);
        for (i, p) in self.phi.iter().enumerate() {
            for (j, q) in self.psi.iter().enumerate() {
                let v = p + q - c[[i, j]];
                if v > worst.2 {
                    worst = (i, j, v);
                }
            }
        }
        worst
    }

    /// `Σ φ_i a_i + Σ ψ_j b_j`.
    pub fn dual_value(&self, a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = self.phi.iter().zip(a).map(|(p, m)| p * m).sum();
        let t: f64 = self.psi.iter().zip(b).map(|(p, m)| p * m).sum();
        s + t
    }

    /// Writes `vertex,phi,psi` rows (square problems only).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "vertex,phi,psi")?;
        for (v, (p, q)) in self.phi.iter().zip(&self.psi).enumerate() {
            writeln!(out, "{v},{p:e},{q:e}")?;
        }
        Ok(())
    }
}

/// Index of the first positive entry.
pub(crate) fn first_active(x: &[f64]) -> Option<usize> {
    x.iter().position(|&v| v > 0.0)
}

/// `(χᶜ)_j = min_i (C_ij − χ_i)`.
pub fn c_transform(chi: &[f64], c: ArrayView2<f64>) -> Vec<f64> {
    assert_eq!(chi.len(), c.nrows(), "c_transform: length mismatch");
    (0..c.ncols())
        .map(|j| {
            chi.iter()
                .enumerate()
                .map(|(i, x)| c[[i, j]] - x)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Transform in the other slot: `min_j (C_ij − χ_j)` for each row `i`.
pub fn c_transform_rows(chi: &[f64], c: ArrayView2<f64>) -> Vec<f64> {
    assert_eq!(chi.len(), c.ncols(), "c_transform_rows: length mismatch");
    c.rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(chi)
                .map(|(cij, x)| cij - x)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `⟨C, γ⟩ − (Σ φ a + Σ ψ b)`, after checking `φ_i + ψ_j ≤ C_ij + 1e-9`.
pub fn duality_gap(
    plan: &TransportPlan,
    pot: &PotentialPair,
    c: ArrayView2<f64>,
    mu: &DensityField,
    nu: &DensityField,
) -> Result<f64> {
    let (i, j, v) = pot.max_violation(c);
    if v > FEASIBILITY_TOL {
        return Err(Error::InfeasiblePotentials { i, j, violation: v });
    }
    Ok(plan.cost(c) - pot.dual_value(mu.masses(), nu.masses()))
}

/// Largest `|C_ij − φ_i − ψ_j|` over plan entries above `SUPPORT_TOL`.
pub fn support_slackness(plan: &TransportPlan, pot: &PotentialPair, c: ArrayView2<f64>) -> f64 {
    plan.entries()
        .iter()
        .filter(|e| e.2 > SUPPORT_TOL)
        .map(|&(i, j, _)| (c[[i, j]] - pot.phi[i] - pot.psi[j]).abs())
        .fold(0.0, f64::max)
}
