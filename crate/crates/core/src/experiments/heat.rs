use std::io::Write;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{cost_matrix, CostSpec, Manifold};
use crate::ot::{solve_exact, DensityField};

/// Implicit Euler step of the heat equation with lumped mass and cotangent
/// stiffness.
#[derive(Debug, Clone)]
pub struct HeatOperator {
    mass: Vec<f64>,
    /// Symmetric stiffness rows, diagonal first.
    stiffness: Vec<Vec<(usize, f64)>>,
    dt: f64,
}

impl HeatOperator {
    pub fn new(m: &Manifold, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Argument(format!("time step must be positive, got {dt}")));
        }
        let n = m.len();
        let mut off: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
        for t in m.triangles() {
            let (e1, e2, e3) = m.triangle_edges(t);
            // Corner vectors: at t[0] (e1, e2), at t[1] (−e1, e3), at t[2] (−e2, −e3).
            let corners = [(e1, e2, t[1], t[2]), (-e1, e3, t[0], t[2]), (-e2, -e3, t[0], t[1])];
            for (a, b, i, j) in corners {
                let cross = a.cross(&b).norm();
                if !(cross > 0.0) {
                    return Err(Error::MeshQuality(format!("degenerate triangle {t:?}")));
                }
                let w = 0.5 * a.dot(&b) / cross;
                *off[i].entry(j).or_default() -= w;
                *off[j].entry(i).or_default() -= w;
            }
        }
        let stiffness = off
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let diag: f64 = -row.values().sum::<f64>();
                std::iter::once((i, diag)).chain(row).collect()
            })
            .collect();
        Ok(HeatOperator {
            mass: m.weights().to_vec(),
            stiffness,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Sparse stiffness row `i`; the first entry is the diagonal.
    pub fn stiffness_row(&self, i: usize) -> &[(usize, f64)] {
        &self.stiffness[i]
    }

    fn apply_system(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.stiffness.iter().enumerate() {
            let s: f64 = row.iter().map(|(j, v)| v * x[*j]).sum();
            out[i] = self.mass[i] * x[i] + self.dt * s;
        }
    }

    /// Jacobi-preconditioned conjugate gradients on `(M + dt S) x = b`.
    fn solve(&self, b: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let diag: Vec<f64> = (0..n).map(|i| self.mass[i] + self.dt * self.stiffness[i][0].1).collect();
        let mut x = x0.to_vec();
        let mut ax = vec![0.0; n];
        self.apply_system(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = 1e-15 * bnorm.max(f64::MIN_POSITIVE);
        let mut ap = vec![0.0; n];
        for _ in 0..(10 * n).max(100) {
            if r.iter().map(|v| v * v).sum::<f64>().sqrt() <= target {
                return Ok(x);
            }
            self.apply_system(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] / diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        // Stagnation at rounding level is accepted.
        if res <= 1e-12 * bnorm {
            Ok(x)
        } else {
            Err(Error::Numerical(format!("heat solve did not converge (residual {res:e})")))
        }
    }
}

/// One implicit Euler step. Negative values are clamped to zero and the
/// result renormalized; returns the new density and the clamped mass.
pub fn heat_step_clamped(h: &HeatOperator, rho: &DensityField) -> Result<(DensityField, f64)> {
    if rho.len() != h.mass.len() {
        return Err(Error::Argument("density and operator sizes differ".into()));
    }
    let b: Vec<f64> = rho.masses().to_vec();
    let mut x = h.solve(&b, rho.values())?;
    let mut clamped = 0.0;
    for (v, w) in x.iter_mut().zip(&h.mass) {
        if *v < 0.0 {
            clamped += -*v * w;
            *v = 0.0;
        }
    }
    if clamped > 0.0 {
        debug!("heat step clamped {clamped:e} of negative mass");
    }
    if !x.iter().any(|v| *v > 0.0) {
        return Err(Error::Numerical("heat step produced a vanishing density".into()));
    }
    Ok((DensityField::normalized_with(&h.mass, x), clamped))
}

/// One implicit Euler step `(M + dt S) ρ′ = M ρ`.
pub fn heat_step(h: &HeatOperator, rho: &DensityField) -> Result<DensityField> {
    heat_step_clamped(h, rho).map(|(d, _)| d)
}

/// Samples `(t, W₂(μ_t, ν_t), e^{−Kt} W₂(μ_0, ν_0))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionCurve {
    pub points: Vec<[f64; 3]>,
}

impl ContractionCurve {
    /// `t,w2,bound` CSV, `t` ascending.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,w2,bound")?;
        for [t, w, b] in &self.points {
            writeln!(out, "{t:e},{w:e},{b:e}")?;
        }
        Ok(())
    }

    /// Largest `W₂(t) / bound(t) − 1` over samples with a positive bound.
    pub fn max_excess(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| p[2] > 0.0)
            .map(|p| p[1] / p[2] - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest increase `W₂(t_{k+1}) − W₂(t_k)`.
    pub fn max_increase(&self) -> f64 {
        self.points.windows(2).map(|w| w[1][1] - w[0][1]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evolves both densities by the heat flow and records their quadratic
/// Wasserstein distance, `W₂² = 2 · optimal cost` for `h(t) = t²/2`.
///
/// One warm-up step is applied to both inputs first; the warmed densities
/// are the `t = 0` state and must be strictly positive.
pub fn contraction_experiment(
    m: &Manifold,
    mu0: &DensityField,
    nu0: &DensityField,
    t_final: f64,
    dt: f64,
    c: &CostSpec,
) -> Result<ContractionCurve> {
    if *c != CostSpec::Quadratic {
        return Err(Error::Argument("the contraction experiment uses the quadratic cost".into()));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Argument(format!("final time must be nonnegative, got {t_final}")));
    }
    let h = HeatOperator::new(m, dt)?;
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut mu = heat_step(&h, mu0)?;
    let mut nu = heat_step(&h, nu0)?;
    if mu.values().iter().chain(nu.values()).any(|v| *v <= 0.0) {
        return Err(Error::Argument("densities are not strictly positive after the warm-up step".into()));
    }
    let mut snaps = Vec::with_capacity(steps + 1);
    snaps.push((mu.clone(), nu.clone()));
    for _ in 0..steps {
        mu = heat_step(&h, &mu)?;
        nu = heat_step(&h, &nu)?;
        snaps.push((mu.clone(), nu.clone()));
    }
    let cm = cost_matrix(m, c)?;
    let w2: Vec<f64> = snaps
        .par_iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let s = solve_exact(a, b, cm.view()).map_err(|e| Error::Solver(format!("step {k}: {e}")))?;
            Ok((2.0 * s.cost).max(0.0).sqrt())
        })
        .collect::<Result<_>>()?;
    let kappa = m.curvature().ricci_lower;
    let points = w2
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let t = k as f64 * dt;
            [t, *w, (-kappa * t).exp() * w2[0]]
        })
        .collect();
    Ok(ContractionCurve { points })
}
