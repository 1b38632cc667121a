use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgi::vertex_gradient;
use crate::manifold::Manifold;
use crate::ot::{solve_exact, solve_transport, DensityField, PotentialPair, SimplexOptions, TransportPlan};

/// Discrete total variation `Σ_i w_i |∇ρ(i)|`.
pub fn bv_norm(m: &Manifold, rho: &[f64]) -> Result<f64> {
    let g = vertex_gradient(m, rho)?;
    Ok(m.weights().iter().zip(g.vectors()).map(|(w, v)| w * v.norm()).sum())
}

/// Projection of `ν` onto `{μ ≤ f}` in transport cost.
#[derive(Debug, Clone)]
pub struct Projection {
    pub mu_bar: DensityField,
    /// Optimal plan from `μ̄` (rows) to `ν` (columns).
    pub plan: TransportPlan,
    /// Potentials of the capacitated problem: `phi` on sources, `psi` on the
    /// targets followed by the zero-cost slack sink.
    pub potentials: PotentialPair,
    pub cost: f64,
}

/// Minimizes `Σ γ_ij C_ij` over `γ ≥ 0` with column sums `ν_j w_j` and row
/// sums at most `f_i w_i`. The row capacities are met exactly by routing
/// the unused capacity `Σ f w − 1` to a zero-cost sink.
pub fn wasserstein_projection(m: &Manifold, nu: &DensityField, f: &[f64], c: ArrayView2<f64>) -> Result<Projection> {
    let n = m.len();
    if f.len() != n || nu.len() != n || c.dim() != (n, n) {
        return Err(Error::Argument("projection inputs have mismatched sizes".into()));
    }
    if let Some(i) = f.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Argument(format!("cap at vertex {i} is {}", f[i])));
    }
    let supply: Vec<f64> = f.iter().zip(m.weights()).map(|(f, w)| f * w).collect();
    let total: f64 = supply.iter().sum();
    if total < 1.0 - 1e-12 {
        return Err(Error::Infeasible(format!("cap has total mass {total} < 1")));
    }
    if nu.values().iter().zip(f).all(|(v, f)| v <= f) {
        // Already feasible: zero potentials certify the zero-cost diagonal plan.
        let entries = nu.masses().iter().enumerate().filter(|e| *e.1 > 0.0).map(|(i, w)| (i, i, *w)).collect();
        return Ok(Projection {
            mu_bar: nu.clone(),
            plan: TransportPlan::from_entries(n, n, entries)?,
            potentials: PotentialPair { phi: vec![0.0; n], psi: vec![0.0; n + 1], anchor: 0 },
            cost: 0.0,
        });
    }
    let mut demand = nu.masses().to_vec();
    demand.push((total - 1.0).max(0.0));
    // Rebalance so both sides agree to rounding.
    let dsum: f64 = demand.iter().sum();
    demand[n] += total - dsum;
    if demand[n] < 0.0 {
        demand[n] = 0.0;
    }
    let ext = Array2::from_shape_fn((n, n + 1), |(i, j)| if j < n { c[[i, j]] } else { 0.0 });
    let sol = solve_transport(&supply, &demand, ext.view(), &SimplexOptions::default())?;
    let entries: Vec<(usize, usize, f64)> = sol.plan.entries().iter().filter(|e| e.1 < n).copied().collect();
    let plan = TransportPlan::from_entries(n, n, entries)?;
    let mut masses = plan.row_sums().to_vec();
    let s: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|x| *x /= s);
    let rho: Vec<f64> = masses.iter().zip(m.weights()).map(|(x, w)| x / w).collect();
    let mu_bar = DensityField::normalized(m, rho)?;
    Ok(Projection {
        cost: plan.cost(c),
        mu_bar,
        plan,
        potentials: sol.potentials,
    })
}

/// Convex penalty on densities, scaled by `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Penalty {
    /// `weight · t log t`
    Entropy { weight: f64 },
    /// `weight · t²/2`
    Quadratic { weight: f64 },
}

impl Penalty {
    pub fn validate(&self) -> Result<()> {
        let w = match *self {
            Penalty::Entropy { weight } | Penalty::Quadratic { weight } => weight,
        };
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Config(format!("penalty weight must be nonnegative, got {w}")));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Penalty::Entropy { weight } => {
                if t > 0.0 {
                    weight * t * t.ln()
                } else {
                    0.0
                }
            }
            Penalty::Quadratic { weight } => weight * 0.5 * t * t,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Penalty::Entropy { weight } => weight * (t.ln() + 1.0),
            Penalty::Quadratic { weight } => weight * t,
        }
    }

    /// `Σ_i w_i η(ρ_i)`.
    pub fn integral(&self, m: &Manifold, rho: &[f64]) -> f64 {
        rho.iter().zip(m.weights()).map(|(r, w)| w * self.eval(*r)).sum()
    }
}

/// Result of the regularized minimization.
#[derive(Debug, Clone)]
pub struct RegularizedMin {
    pub mu_bar: DensityField,
    /// Optimal plan from `μ̄` to `ν`.
    pub plan: TransportPlan,
    /// Energy after every accepted step, starting with the initial energy.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Transport cost plus penalty, with the optimal plan and potentials.
pub fn regularized_energy(
    m: &Manifold,
    mu: &DensityField,
    nu: &DensityField,
    eta: &Penalty,
    c: ArrayView2<f64>,
) -> Result<(f64, TransportPlan, PotentialPair)> {
    let s = solve_exact(mu, nu, c)?;
    Ok((s.cost + eta.integral(m, mu.values()), s.plan, s.potentials))
}

/// Mirror descent for `min_μ C(μ, ν) + ∫ η(μ)` on the probability simplex.
///
/// The gradient in mass coordinates is `φ + η′(ρ)`, with `φ` the optimal
/// potential of `μ` against `ν`. Step `k` (1-based) has size
/// `1 / (√k · G_k)`, `G_k` the sup norm of the centered gradient; a step that
/// raises the energy is halved until it does not. Iteration starts from
/// `½ν + ½ uniform` and stops when an accepted step lowers the energy by
/// less than `tol` relative to its magnitude.
pub fn regularized_min(
    m: &Manifold,
    nu: &DensityField,
    eta: &Penalty,
    c: ArrayView2<f64>,
    iterations: usize,
    tol: f64,
) -> Result<RegularizedMin> {
    eta.validate()?;
    let u = DensityField::uniform(m);
    let start: Vec<f64> = nu.values().iter().zip(u.values()).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
    let mut mu = DensityField::normalized(m, start)?;
    let (mut energy, mut plan, mut pot) = regularized_energy(m, &mu, nu, eta, c)?;
    let mut trace = vec![energy];
    for k in 1..=iterations {
        let g: Vec<f64> = pot.phi.iter().zip(mu.values()).map(|(p, r)| p + eta.derivative(*r)).collect();
        let mean: f64 = g.iter().zip(mu.masses()).map(|(g, x)| g * x).sum();
        let sup = g.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        if !(sup > 1e-14 * mean.abs().max(1.0)) {
            return Ok(RegularizedMin { mu_bar: mu, plan, trace, iterations: k - 1 });
        }
        let mut step = 1.0 / ((k as f64).sqrt() * sup);
        let mut accepted = None;
        for _ in 0..40 {
            let rho: Vec<f64> = mu
                .values()
                .iter()
                .zip(&g)
                .map(|(r, gi)| r * (-step * (gi - mean)).exp())
                .collect();
            let cand = DensityField::normalized(m, rho)?;
            let (e, p, q) = regularized_energy(m, &cand, nu, eta, c)?;
            if e <= energy {
                accepted = Some((cand, e, p, q));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, e, p, q)) = accepted else {
            // No descent at any step size: stationary to working precision.
            return Ok(RegularizedMin { mu_bar: mu, plan, trace, iterations: k - 1 });
        };
        let decrease = energy - e;
        mu = cand;
        plan = p;
        pot = q;
        energy = e;
        trace.push(energy);
        if decrease <= tol * energy.abs().max(1e-300) {
            return Ok(RegularizedMin { mu_bar: mu, plan, trace, iterations: k });
        }
    }
    Err(Error::NoDescentConvergence { iterations, trace })
}

/// Which inequality a [`BvReport`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BvMode {
    /// `|μ̄|_BV + K Σ γ d ≤ |ν|_BV`
    Contraction,
    /// `|μ̄|_BV + K Σ γ d ≤ |ν|_BV + 2 |f|_BV`
    Projection,
}

/// Terms of the total-variation estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvReport {
    pub mode: BvMode,
    pub n: usize,
    pub bv_mu_bar: f64,
    pub bv_nu: f64,
    pub bv_f: Option<f64>,
    /// `K Σ γ_ij d_ij`.
    pub transport_term: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
}

/// Evaluates the estimate for `μ̄`, `ν` and their optimal plan.
pub fn bv_estimate_report(
    m: &Manifold,
    mu_bar: &DensityField,
    nu: &DensityField,
    plan: &TransportPlan,
    dist: ArrayView2<f64>,
    mode: BvMode,
    f: Option<&[f64]>,
) -> Result<BvReport> {
    let bv_f = match (mode, f) {
        (BvMode::Projection, None) => {
            return Err(Error::Argument("the projection estimate needs the cap f".into()));
        }
        (BvMode::Projection, Some(f)) => Some(bv_norm(m, f)?),
        (BvMode::Contraction, _) => None,
    };
    let bv_mu_bar = bv_norm(m, mu_bar.values())?;
    let bv_nu = bv_norm(m, nu.values())?;
    let k = m.curvature().ricci_lower;
    let transport_term = k * plan.entries().iter().map(|&(i, j, g)| g * dist[[i, j]]).sum::<f64>();
    let lhs = bv_mu_bar + transport_term;
    let rhs = bv_nu + bv_f.map_or(0.0, |b| 2.0 * b);
    Ok(BvReport {
        mode,
        n: m.len(),
        bv_mu_bar,
        bv_nu,
        bv_f,
        transport_term,
        lhs,
        rhs,
        slack: rhs - lhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{cost_matrix, distance_matrix, CostSpec};
    use std::f64::consts::PI;

    #[test]
    fn bv_of_sine_profile() {
        let m = Manifold::flat_torus(64, 64, 1.0, 1.0).unwrap();
        let rho: Vec<f64> = m.vertices().iter().map(|p| 1.0 + 0.5 * (2.0 * PI * p.x).sin()).collect();
        // ∫ |π cos(2πx)| dx = 2
        let v = bv_norm(&m, &rho).unwrap();
        assert!((v - 2.0).abs() < 0.03 * 2.0, "{v}");
        assert_eq!(bv_norm(&m, &vec![1.0; m.len()]).unwrap(), 0.0);
        let twice: Vec<f64> = m.vertices().iter().map(|p| 1.0 + (2.0 * PI * p.x).sin()).collect();
        assert!((bv_norm(&m, &twice).unwrap() - 2.0 * v).abs() < 1e-12);
    }

    #[test]
    fn two_point_projection() {
        // Only vertices 0 and 1 can receive mass: caps ½ and 1 in mass units.
        let m = Manifold::flat_torus(4, 4, 1.0, 1.0).unwrap();
        let w = m.weights()[0];
        let nu = DensityField::dirac(&m, 0).unwrap();
        let mut f = vec![0.0; m.len()];
        f[0] = 0.5 / w;
        f[1] = 1.0 / w;
        let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
        let p = wasserstein_projection(&m, &nu, &f, c.view()).unwrap();
        assert!((p.mu_bar.masses()[0] - 0.5).abs() < 1e-12);
        assert!((p.mu_bar.masses()[1] - 0.5).abs() < 1e-12);
        assert!((p.cost - 0.5 * c[[1, 0]]).abs() < 1e-15);
        f[1] = 0.25 / w;
        assert!(matches!(
            wasserstein_projection(&m, &nu, &f, c.view()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn feasible_target_is_its_own_projection() {
        let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
        let rho: Vec<f64> = m.vertices().iter().map(|p| 1.0 + 0.3 * (2.0 * PI * p.y).cos()).collect();
        let nu = DensityField::normalized(&m, rho).unwrap();
        let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
        let p = wasserstein_projection(&m, &nu, &vec![2.0; m.len()], c.view()).unwrap();
        assert!(p.cost.abs() < 1e-15);
        assert!(p.mu_bar.tv_distance(&nu) < 1e-12);
    }

    #[test]
    fn uniform_target_has_zero_slack() {
        let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
        let nu = DensityField::uniform(&m);
        let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
        let d = distance_matrix(&m).unwrap();
        let f = vec![1.0; m.len()];
        let p = wasserstein_projection(&m, &nu, &f, c.view()).unwrap();
        let r = bv_estimate_report(&m, &p.mu_bar, &nu, &p.plan, d.view(), BvMode::Projection, Some(&f)).unwrap();
        assert_eq!(r.slack, 0.0);
        let reg = regularized_min(&m, &nu, &Penalty::Entropy { weight: 1.0 }, c.view(), 10, 1e-8).unwrap();
        let r = bv_estimate_report(&m, &reg.mu_bar, &nu, &reg.plan, d.view(), BvMode::Contraction, None).unwrap();
        assert_eq!(r.slack, 0.0);
        assert!(bv_estimate_report(&m, &nu, &nu, &reg.plan, d.view(), BvMode::Projection, None).is_err());
    }

    #[test]
    fn dominant_entropy_gives_uniform() {
        let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
        let rho: Vec<f64> = m.vertices().iter().map(|p| 1.0 + 0.8 * (2.0 * PI * p.x).sin()).collect();
        let nu = DensityField::normalized(&m, rho).unwrap();
        let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
        let r = regularized_min(&m, &nu, &Penalty::Entropy { weight: 1e6 }, c.view(), 500, 1e-8).unwrap();
        assert!(r.mu_bar.tv_distance(&DensityField::uniform(&m)) < 1e-3);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    }

    #[test]
    fn vanishing_penalty_recovers_target() {
        let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
        let rho: Vec<f64> = m.vertices().iter().map(|p| 1.0 + 0.8 * (2.0 * PI * p.x).sin()).collect();
        let nu = DensityField::normalized(&m, rho).unwrap();
        let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
        let r = regularized_min(&m, &nu, &Penalty::Quadratic { weight: 1e-9 }, c.view(), 2000, 1e-10).unwrap();
        assert!(r.mu_bar.tv_distance(&nu) < 1e-3, "{}", r.mu_bar.tv_distance(&nu));
    }
}
