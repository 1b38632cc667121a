use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::Vec3;

/// Convex increasing profile `ℓ` acting isotropically on tangent vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum EllSpec {
    /// `t`
    Linear,
    /// `tᵖ/p`, `p > 1`
    Power { p: f64 },
    /// `t²/2`
    Quadratic,
    /// `½ (t − δ)₊²`: a function of `t²` vanishing on `[0, δ]`.
    ShiftedQuadratic { delta: f64 },
}

impl EllSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EllSpec::Power { p } if !(p > 1.0 && p.is_finite()) => {
                Err(Error::Config(format!("power profile needs p > 1, got {p}")))
            }
            EllSpec::ShiftedQuadratic { delta } if !(delta >= 0.0 && delta.is_finite()) => {
                Err(Error::Config(format!("shifted quadratic needs delta >= 0, got {delta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            EllSpec::Linear => "linear".into(),
            EllSpec::Power { p } => format!("power(p={p})"),
            EllSpec::Quadratic => "quadratic".into(),
            EllSpec::ShiftedQuadratic { delta } => format!("shifted-quadratic(delta={delta})"),
        }
    }

    pub fn ell(&self, t: f64) -> f64 {
        match *self {
            EllSpec::Linear => t,
            EllSpec::Power { p } => t.powf(p) / p,
            EllSpec::Quadratic => 0.5 * t * t,
            EllSpec::ShiftedQuadratic { delta } => 0.5 * (t - delta).max(0.0).powi(2),
        }
    }

    /// `ℓ′(t)` for `t ≥ 0`.
    pub fn ell_prime(&self, t: f64) -> f64 {
        match *self {
            EllSpec::Linear => 1.0,
            EllSpec::Power { p } => t.powf(p - 1.0),
            EllSpec::Quadratic => t,
            EllSpec::ShiftedQuadratic { delta } => (t - delta).max(0.0),
        }
    }

    /// Derivative of the even extension `f(t) = ℓ(|t|)`, with `f′(0) = 0`.
    pub fn even_prime(&self, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            t.signum() * self.ell_prime(t.abs())
        }
    }
}

/// `ℓ′(|v|) v / |v|`, and `0` at `v = 0` even when `ℓ′(0) > 0`.
pub fn ell_prime_vec(l: &EllSpec, v: &Vec3) -> Vec3 {
    let n = v.norm();
    if n == 0.0 {
        Vec3::zeros()
    } else {
        v * (l.ell_prime(n) / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_action() {
        let v = Vec3::new(3.0, 4.0, 0.0);
        assert_eq!(ell_prime_vec(&EllSpec::Quadratic, &v), v);
        let u = ell_prime_vec(&EllSpec::Linear, &v);
        assert!((u - Vec3::new(0.6, 0.8, 0.0)).norm() < 1e-15);
        for l in [EllSpec::Linear, EllSpec::Quadratic, EllSpec::Power { p: 1.5 }] {
            assert_eq!(ell_prime_vec(&l, &Vec3::zeros()), Vec3::zeros());
        }
    }

    #[test]
    fn shifted_quadratic_vanishes_near_zero() {
        let l = EllSpec::ShiftedQuadratic { delta: 0.5 };
        assert_eq!(l.ell(0.3), 0.0);
        assert_eq!(l.ell_prime(0.3), 0.0);
        assert_eq!(l.ell_prime(1.5), 1.0);
        assert!(EllSpec::Power { p: 0.5 }.validate().is_err());
    }

    #[test]
    fn even_extension_is_odd() {
        let l = EllSpec::Power { p: 3.0 };
        assert_eq!(l.even_prime(-2.0), -l.even_prime(2.0));
        assert_eq!(EllSpec::Linear.even_prime(0.0), 0.0);
    }
}
