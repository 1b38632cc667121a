use crate::error::{Error, Result};
use crate::fgi::vertex_gradient;
use crate::manifold::{CostSpec, Manifold, Vec3};

use super::{DensityField, PotentialPair};

/// Gradients below this norm map a vertex to itself.
const ZERO_GRADIENT: f64 = 1e-10;

/// Transport map `T(x) = exp_x(λ⁻¹(|∇φ|) · (−∇φ/|∇φ|))` at every vertex
/// carrying source mass; `None` elsewhere. Torus targets are wrapped into
/// the fundamental domain.
pub fn recover_map(pot: &PotentialPair, m: &Manifold, c: &CostSpec, mu: &DensityField) -> Result<Vec<Option<Vec3>>> {
    if c.is_linear() {
        return Err(Error::Argument("map recovery needs an invertible h′".into()));
    }
    let grad = vertex_gradient(m, &pot.phi)?;
    let diam = m.diameter();
    let max_slope = c.h_prime(diam);
    mu.masses()
        .iter()
        .enumerate()
        .map(|(i, &mass)| {
            if mass <= 0.0 {
                return Ok(None);
            }
            let x = m.vertex(i);
            let g = grad.at(i);
            let s = g.norm();
            if s <= ZERO_GRADIENT {
                return Ok(Some(x));
            }
            if s > max_slope * (1.0 + 1e-12) {
                return Err(Error::Range(format!(
                    "|grad phi| = {s} at vertex {i} exceeds h'(diam) = {max_slope}"
                )));
            }
            let r = c.lambda_inv(s).expect("nonlinear cost");
            let y = m.exp(&x, &(-g * (r / s)))?;
            Ok(Some(m.wrap(&y)))
        })
        .collect()
}
