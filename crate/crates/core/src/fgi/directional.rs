//! Directional inequality on the flat torus, viewed as the abelian group
//! `R²/(Lx Z × Ly Z)` acting on itself by translations.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::EllSpec;
use crate::error::{Error, Result};
use crate::manifold::{Manifold, ManifoldKind};
use crate::ot::{DensityField, PotentialPair, TransportPlan, SUPPORT_TOL};

/// Coordinate generator of the torus translations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

struct Grid {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
}

impl Grid {
    fn of(m: &Manifold) -> Result<Self> {
        match m.kind() {
            ManifoldKind::FlatTorus { lx, ly, nx, ny } => Ok(Grid {
                nx,
                ny,
                hx: lx / nx as f64,
                hy: ly / ny as f64,
            }),
            _ => Err(Error::Argument("directional checks need the flat torus".into())),
        }
    }

    fn shifted(&self, i: usize, kx: i64, ky: i64) -> usize {
        let x = ((i % self.nx) as i64 + kx).rem_euclid(self.nx as i64) as usize;
        let y = ((i / self.nx) as i64 + ky).rem_euclid(self.ny as i64) as usize;
        y * self.nx + x
    }

    fn step(&self, axis: Axis) -> (f64, i64, i64) {
        match axis {
            Axis::X => (self.hx, 1, 0),
            Axis::Y => (self.hy, 0, 1),
        }
    }

    /// Periodic central difference along `axis`.
    fn derivative(&self, f: &[f64], axis: Axis) -> Vec<f64> {
        let (h, kx, ky) = self.step(axis);
        (0..f.len())
            .map(|i| (f[self.shifted(i, kx, ky)] - f[self.shifted(i, -kx, -ky)]) / (2.0 * h))
            .collect()
    }

    /// Lattice offsets of a physical translation, if it is one.
    fn lattice(&self, v: [f64; 2]) -> Result<(i64, i64)> {
        let kx = v[0] / self.hx;
        let ky = v[1] / self.hy;
        let ok = |k: f64| (k - k.round()).abs() <= 1e-9 * k.abs().max(1.0);
        if ok(kx) && ok(ky) {
            Ok((kx.round() as i64, ky.round() as i64))
        } else {
            Err(Error::Argument(format!("translation {v:?} is not a lattice vector")))
        }
    }
}

/// `−Σ_i w_i [f′(Xφ) Xμ + f′(Xψ) Xν]` with `X` the periodic central
/// difference along `axis` and `f` the even extension of `ell`.
pub fn directional_fgi(
    m: &Manifold,
    axis: Axis,
    f: &EllSpec,
    pot: &PotentialPair,
    mu: &DensityField,
    nu: &DensityField,
) -> Result<f64> {
    let grid = Grid::of(m)?;
    let xphi = grid.derivative(&pot.phi, axis);
    let xpsi = grid.derivative(&pot.psi, axis);
    let xmu = grid.derivative(mu.values(), axis);
    let xnu = grid.derivative(nu.values(), axis);
    let s: f64 = m
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * (f.even_prime(xphi[i]) * xmu[i] + f.even_prime(xpsi[i]) * xnu[i]))
        .sum();
    Ok(-s)
}

/// Residuals of the translation competitors built from optimal potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompetitorDefect {
    /// `E(v) + E(−v) − 2E(0)` for the dual value `E` of translated potentials.
    pub second_diff: f64,
    /// Largest `(φ̃_i + ψ̃_j − C_ij)₊` over the plan's support.
    pub feasibility_residual: f64,
    /// Largest `(f′(t) + f′(s))₊` over sampled `t + s ≤ 0`.
    pub mono_residual: f64,
}

/// Checks the competitor pairs of a lattice translation `v`.
///
/// The linear competitor is `(φ(· + v), ψ(· + v))`; the nonlinear one is
/// `φ̃ = φ + t f′((φ(· + v) − φ)/t)` and likewise for `ψ`, with `t = |v|`.
#[allow(clippy::too_many_arguments)]
pub fn competitor_defect(
    m: &Manifold,
    pot: &PotentialPair,
    plan: &TransportPlan,
    c: ArrayView2<f64>,
    v: [f64; 2],
    f: &EllSpec,
    mu: &DensityField,
    nu: &DensityField,
) -> Result<CompetitorDefect> {
    let grid = Grid::of(m)?;
    let (kx, ky) = grid.lattice(v)?;
    let n = m.len();
    let shift = |x: &[f64], sx: i64, sy: i64| -> Vec<f64> { (0..n).map(|i| x[grid.shifted(i, sx, sy)]).collect() };
    let energy = |phi: &[f64], psi: &[f64]| -> f64 {
        let a: f64 = phi.iter().zip(mu.masses()).map(|(p, w)| p * w).sum();
        let b: f64 = psi.iter().zip(nu.masses()).map(|(p, w)| p * w).sum();
        a + b
    };
    let e0 = energy(&pot.phi, &pot.psi);
    let ep = energy(&shift(&pot.phi, kx, ky), &shift(&pot.psi, kx, ky));
    let em = energy(&shift(&pot.phi, -kx, -ky), &shift(&pot.psi, -kx, -ky));
    let second_diff = if kx == 0 && ky == 0 { 0.0 } else { ep + em - 2.0 * e0 };

    let t = v[0].hypot(v[1]);
    let feasibility_residual = if t == 0.0 {
        0.0
    } else {
        let phi_v = shift(&pot.phi, kx, ky);
        let psi_v = shift(&pot.psi, kx, ky);
        let comp = |x: &[f64], xv: &[f64], i: usize| x[i] + t * f.even_prime((xv[i] - x[i]) / t);
        plan.entries()
            .iter()
            .filter(|e| e.2 > SUPPORT_TOL)
            .map(|&(i, j, _)| (comp(&pot.phi, &phi_v, i) + comp(&pot.psi, &psi_v, j) - c[[i, j]]).max(0.0))
            .fold(0.0, f64::max)
    };
    Ok(CompetitorDefect {
        second_diff,
        feasibility_residual,
        mono_residual: mono_residual(f),
    })
}

/// `max (f′(t) + f′(s))₊` over a 201×201 grid of `[−10, 10]²` restricted to
/// `t + s ≤ 0`.
pub fn mono_residual(f: &EllSpec) -> f64 {
    let pts: Vec<f64> = (-100..=100).map(|k| 0.1 * k as f64).collect();
    let mut worst = 0.0f64;
    for &t in &pts {
        for &s in &pts {
            if t + s <= 0.0 {
                worst = worst.max(f.even_prime(t) + f.even_prime(s));
            }
        }
    }
    worst
}

/// `‖(f(· + t e) − f)/t − Xf‖_{L¹}` for each lattice step `t`, where `xf` is
/// the exact derivative sampled at the vertices.
pub fn difference_quotient_l1(m: &Manifold, f: &[f64], xf: &[f64], axis: Axis, ts: &[f64]) -> Result<Vec<f64>> {
    let grid = Grid::of(m)?;
    if f.len() != m.len() || xf.len() != m.len() {
        return Err(Error::Argument("field length mismatch".into()));
    }
    ts.iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(Error::Argument(format!("step {t} must be positive")));
            }
            let v = match axis {
                Axis::X => [t, 0.0],
                Axis::Y => [0.0, t],
            };
            let (kx, ky) = grid.lattice(v)?;
            Ok(m.weights()
                .iter()
                .enumerate()
                .map(|(i, w)| w * ((f[grid.shifted(i, kx, ky)] - f[i]) / t - xf[i]).abs())
                .sum())
        })
        .collect()
}
