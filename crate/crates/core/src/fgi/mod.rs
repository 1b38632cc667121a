//! Discrete gradients and both sides of the five gradients inequality
//!
//! ```text
//! Σ_i w_i [⟨ℓ′(∇φ), ∇μ⟩ + ⟨ℓ′(∇ψ), ∇ν⟩]  ≥  K Σ_ij γ_ij ℓ′(h′(d_ij)) d_ij
//! ```
//!
//! for optimal potentials `(φ, ψ)` and plan `γ`, plus its directional form
//! on the flat torus and the competitor constructions behind it.

mod directional;
mod ell;
mod gradient;

use std::io::Write;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{cost_matrix, distance_matrix, CostSpec, Manifold, ManifoldKind};
use crate::ot::{self, DensityField, PotentialPair, SinkhornOptions, TransportPlan};

pub use directional::{competitor_defect, difference_quotient_l1, directional_fgi, Axis, CompetitorDefect};
pub use ell::{ell_prime_vec, EllSpec};
pub use gradient::{vertex_gradient, GradientOperator, TangentField};

/// Which transport solver produces the plan and potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SolverChoice {
    #[default]
    Exact,
    Sinkhorn { eps_final: f64 },
}

/// Both sides of the inequality at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgiReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`.
    pub slack: f64,
    /// Vertex count.
    pub n: usize,
    pub cost: String,
    pub ell: String,
    /// Ricci lower bound used on the right-hand side.
    pub k: f64,
    pub solver: String,
    /// Plan mass on antipodal pairs, left out of the right-hand side.
    pub excluded_mass: f64,
    pub excluded_pairs: usize,
}

impl FgiReport {
    /// `N,lhs,rhs,slack` CSV for a refinement ladder.
    pub fn write_ladder_csv<W: Write>(reports: &[FgiReport], mut out: W) -> std::io::Result<()> {
        writeln!(out, "N,lhs,rhs,slack")?;
        for r in reports {
            writeln!(out, "{},{:e},{:e},{:e}", r.n, r.lhs, r.rhs, r.slack)?;
        }
        Ok(())
    }
}

/// Plan, potentials and the matrices they were computed from.
#[derive(Debug, Clone)]
pub struct TransportData {
    pub plan: TransportPlan,
    pub potentials: PotentialPair,
    pub cost_matrix: ndarray::Array2<f64>,
    pub distances: ndarray::Array2<f64>,
}

/// Solves the transport problem between `mu` and `nu` with cost `h∘d`.
pub fn solve_on(m: &Manifold, mu: &DensityField, nu: &DensityField, c: &CostSpec, solver: SolverChoice) -> Result<TransportData> {
    let distances = distance_matrix(m)?;
    let cm = cost_matrix(m, c)?;
    let (plan, potentials) = match solver {
        SolverChoice::Exact => {
            let s = ot::solve_exact(mu, nu, cm.view())?;
            (s.plan, s.potentials)
        }
        SolverChoice::Sinkhorn { eps_final } => {
            let max_c = cm.iter().fold(0.0f64, |a, &b| a.max(b));
            let s = ot::sinkhorn(mu, nu, cm.view(), &SinkhornOptions::full_schedule(eps_final, max_c))?;
            (TransportPlan::from_dense(s.plan.view())?, s.potentials)
        }
    };
    Ok(TransportData {
        plan,
        potentials,
        cost_matrix: cm,
        distances,
    })
}

fn solver_name(s: SolverChoice) -> String {
    match s {
        SolverChoice::Exact => "exact".into(),
        SolverChoice::Sinkhorn { eps_final } => format!("sinkhorn(eps={eps_final})"),
    }
}

/// Left-hand side `Σ_i w_i [⟨ℓ′(∇φ), ∇μ⟩ + ⟨ℓ′(∇ψ), ∇ν⟩]`.
pub fn fgi_lhs(
    m: &Manifold,
    grad: &GradientOperator,
    pot: &PotentialPair,
    mu: &DensityField,
    nu: &DensityField,
    l: &EllSpec,
) -> f64 {
    let gphi = grad.apply(&pot.phi);
    let gpsi = grad.apply(&pot.psi);
    let gmu = grad.apply(mu.values());
    let gnu = grad.apply(nu.values());
    m.weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            w * (ell_prime_vec(l, &gphi.at(i)).dot(&gmu.at(i)) + ell_prime_vec(l, &gpsi.at(i)).dot(&gnu.at(i)))
        })
        .sum()
}

/// Right-hand side `K Σ γ_ij ℓ′(h′(d_ij)) d_ij`, skipping antipodal pairs.
/// Returns `(rhs, excluded_mass, excluded_pairs)`.
pub fn fgi_rhs(m: &Manifold, plan: &TransportPlan, dist: ArrayView2<f64>, c: &CostSpec, l: &EllSpec) -> (f64, f64, usize) {
    let cut = match m.kind() {
        ManifoldKind::Sphere { radius } => std::f64::consts::PI * radius * (1.0 - 1e-9),
        _ => f64::INFINITY,
    };
    let k = m.curvature().ricci_lower;
    let mut sum = 0.0;
    let mut excluded = 0.0;
    let mut pairs = 0;
    for &(i, j, g) in plan.entries() {
        let d = dist[[i, j]];
        if d >= cut {
            excluded += g;
            pairs += 1;
            continue;
        }
        sum += g * l.ell_prime(c.h_prime(d)) * d;
    }
    (k * sum, excluded, pairs)
}

/// Evaluates both sides of the inequality for optimal transport between
/// `mu` and `nu`.
pub fn check_five_gradients(
    m: &Manifold,
    mu: &DensityField,
    nu: &DensityField,
    c: &CostSpec,
    l: &EllSpec,
    solver: SolverChoice,
) -> Result<FgiReport> {
    if c.is_linear() {
        return Err(Error::Argument("the gradient inequality needs a strictly convex cost".into()));
    }
    l.validate()?;
    let data = solve_on(m, mu, nu, c, solver)?;
    let grad = GradientOperator::new(m)?;
    Ok(report_from(m, &grad, &data, mu, nu, c, l, solver))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn report_from(
    m: &Manifold,
    grad: &GradientOperator,
    data: &TransportData,
    mu: &DensityField,
    nu: &DensityField,
    c: &CostSpec,
    l: &EllSpec,
    solver: SolverChoice,
) -> FgiReport {
    let lhs = fgi_lhs(m, grad, &data.potentials, mu, nu, l);
    let (rhs, excluded_mass, excluded_pairs) = fgi_rhs(m, &data.plan, data.distances.view(), c, l);
    FgiReport {
        lhs,
        rhs,
        slack: lhs - rhs,
        n: m.len(),
        cost: c.name(),
        ell: l.name(),
        k: m.curvature().ricci_lower,
        solver: solver_name(solver),
        excluded_mass,
        excluded_pairs,
    }
}
