use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Manifold, ManifoldKind, Vec3};

/// Outcome of a randomized algebraic check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub check: String,
    pub trials: usize,
    /// Largest observed `value / scale` over the trials.
    pub max_ratio: f64,
    pub bound: f64,
    pub pass: bool,
    /// Seed of the ChaCha8 generator; trial `k` uses stream `k`.
    pub seed: u64,
}

/// Constant-curvature tensor `R(u, v)w = K(⟨v, w⟩u − ⟨u, w⟩v)`, whose
/// sectional curvature is `K`.
pub fn riemann(k: f64, u: &Vec3, v: &Vec3, w: &Vec3) -> Vec3 {
    (u * v.dot(w) - v * u.dot(w)) * k
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn max_ratio(trials: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    (0..trials).into_par_iter().map(f).reduce(|| 0.0, f64::max)
}

fn random_tangent_frame(m: &Manifold, rng: &mut ChaCha8Rng) -> [Vec3; 2] {
    match m.kind() {
        ManifoldKind::Sphere { radius } => {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let a: f64 = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).max(0.0).sqrt();
            let p = Vec3::new(r * a.cos(), r * a.sin(), z) * radius;
            m.tangent_basis_at(&p).expect("analytic")
        }
        ManifoldKind::FlatTorus { .. } => [Vec3::x(), Vec3::y()],
        ManifoldKind::Mesh => m.tangent_basis(rng.random_range(0..m.len())),
    }
}

/// `|g(R(u,v)w, z)| ≤ 7 K̃ |u||v||w||z|` for random tangent vectors at random
/// points, with the constant-curvature tensor of the manifold's sectional
/// bound.
pub fn berger_check(m: &Manifold, trials: usize, seed: u64) -> Result<GeometryReport> {
    if trials == 0 {
        return Err(Error::Argument("trials must be positive".into()));
    }
    let k = m.curvature().sectional_sup.abs();
    let worst = max_ratio(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let [e1, e2] = random_tangent_frame(m, &mut rng);
        let mut vec = || {
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            (e1 * rng.random_range(-1.0..1.0) + e2 * rng.random_range(-1.0..1.0)) * scale
        };
        let (u, v, w, z) = (vec(), vec(), vec(), vec());
        let scale = k * u.norm() * v.norm() * w.norm() * z.norm();
        if scale == 0.0 {
            return 0.0;
        }
        riemann(k, &u, &v, &w).dot(&z).abs() / scale
    });
    Ok(GeometryReport {
        check: "berger".into(),
        trials,
        max_ratio: worst,
        bound: 7.0,
        pass: worst <= 7.0,
        seed,
    })
}

/// `|tr A − Σ_i ⟨A X_i, X_i⟩|` for the columns `X_i` of `x`.
pub fn trace_defect(a: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let diag: f64 = (0..x.ncols()).map(|i| (a * x.column(i)).dot(&x.column(i))).sum();
    (a.trace() - diag).abs()
}

/// `|tr A − Σ_i g(A X_i, X_i)| ≤ 4n² σ ‖A‖` for random operators `A` and
/// perturbed orthonormal bases `X` of `Rⁿ` whose Gram defect is at most
/// `sigma < 1/(2n)`. The ratio uses each basis's measured defect.
pub fn trace_check(dim: usize, sigma: f64, trials: usize, seed: u64) -> Result<GeometryReport> {
    if dim == 0 || trials == 0 {
        return Err(Error::Argument("dimension and trials must be positive".into()));
    }
    if !(sigma > 0.0 && sigma < 1.0 / (2.0 * dim as f64)) {
        return Err(Error::Argument(format!(
            "frame defect {sigma} must lie in (0, 1/(2n)) = (0, {})",
            1.0 / (2.0 * dim as f64)
        )));
    }
    let n = dim;
    let bound = 4.0 * (n * n) as f64;
    let worst = max_ratio(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = r.qr().q();
        let eps = sigma / (3.0 * n as f64) * rng.random_range(0.0..=1.0);
        let x = q + DMatrix::from_fn(n, n, |_, _| rng.random_range(-eps..=eps));
        let gram = x.transpose() * &x;
        let defect = (gram - DMatrix::identity(n, n)).amax();
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let norm = a.singular_values().max();
        if defect == 0.0 || norm == 0.0 {
            return 0.0;
        }
        trace_defect(&a, &x) / (defect * norm)
    });
    Ok(GeometryReport {
        check: format!("trace(n={n})"),
        trials,
        max_ratio: worst,
        bound,
        pass: worst <= bound,
        seed,
    })
}

/// Berger and trace checks on the tangent planes of `m` (`n = 2`).
pub fn curvature_algebra_checks(m: &Manifold, trials: usize, seed: u64, sigma: f64) -> Result<Vec<GeometryReport>> {
    Ok(vec![berger_check(m, trials, seed)?, trace_check(2, sigma, trials, seed)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sectional_curvature_of_model() {
        let (u, v) = (Vec3::x(), Vec3::y());
        assert_eq!(riemann(2.0, &u, &v, &v).dot(&u), 2.0);
        assert_eq!(riemann(2.0, &u, &u, &v), Vec3::zeros());
    }

    #[test]
    fn checks_pass_and_are_reproducible() {
        let m = Manifold::sphere(1, 1.0).unwrap();
        let a = curvature_algebra_checks(&m, 500, 7, 0.1).unwrap();
        let b = curvature_algebra_checks(&m, 500, 7, 0.1).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.pass), "{a:?}");
        assert!(a[0].max_ratio > 0.0 && a[0].max_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn trace_rejects_large_defect() {
        assert!(trace_check(2, 0.25, 10, 0).is_err());
        assert!(trace_check(3, 0.1, 10, 0).is_ok());
    }

    #[test]
    fn flat_berger_is_zero() {
        let m = Manifold::flat_torus(4, 4, 1.0, 1.0).unwrap();
        let r = berger_check(&m, 100, 1).unwrap();
        assert_eq!(r.max_ratio, 0.0);
        assert!(r.pass);
    }
}
