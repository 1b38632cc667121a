//! Differential geometry along sampled geodesics: parallel transport,
//! variations of arc length, interpolated frames and curvature algebra.

mod curvature;
mod frames;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{CostSpec, GeodesicPath, ManifoldKind, Vec3};

pub use curvature::{berger_check, curvature_algebra_checks, riemann, trace_check, trace_defect, GeometryReport};
pub use frames::{interpolated_frame, smoothstep, FrameField};

/// Tangent vector field along a sampled path, one ambient vector per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationField {
    vectors: Vec<Vec3>,
}

impl VariationField {
    /// Checks length and tangency (to `1e-9`) against the path.
    pub fn new(path: &GeodesicPath, vectors: Vec<Vec3>) -> Result<Self> {
        if vectors.len() != path.samples().len() {
            return Err(Error::Argument(format!(
                "variation field has {} vectors for {} samples",
                vectors.len(),
                path.samples().len()
            )));
        }
        for (k, (v, n)) in vectors.iter().zip(path.normals()).enumerate() {
            if n.dot(v).abs() > 1e-9 * v.norm().max(1.0) {
                return Err(Error::Argument(format!("variation vector {k} is not tangent")));
            }
        }
        Ok(VariationField { vectors })
    }

    /// `ξ(t_k) = Σ_c coeffs_c(t_k) E_c(t_k)` for the parallel frame
    /// `E_0 = γ̇`, `E_1 = n × γ̇`.
    pub fn from_parallel_coeffs(path: &GeodesicPath, coeffs: impl Fn(f64) -> [f64; 2]) -> Result<Self> {
        let frame = parallel_frame(path)?;
        let vectors = path
            .params()
            .iter()
            .zip(frame)
            .map(|(&t, [e0, e1])| {
                let [a, b] = coeffs(t);
                e0 * a + e1 * b
            })
            .collect();
        Ok(VariationField { vectors })
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors
    }

    /// Components in the per-sample orthonormal frame `(γ̇, n × γ̇)`.
    pub fn frame_coords(&self, path: &GeodesicPath) -> Vec<[f64; 2]> {
        self.vectors
            .iter()
            .zip(path.tangents().iter().zip(path.normals()))
            .map(|(v, (t, n))| [v.dot(t), v.dot(&n.cross(t))])
            .collect()
    }
}

/// Parallel orthonormal frame `(γ̇, n × γ̇)` at every sample. Exact for the
/// analytic kinds, where unit-speed geodesics are self-parallel.
fn parallel_frame(path: &GeodesicPath) -> Result<Vec<[Vec3; 2]>> {
    if matches!(path.kind(), ManifoldKind::Mesh) {
        return Err(Error::Unsupported("parallel frames need an analytic surface".into()));
    }
    Ok(path
        .tangents()
        .iter()
        .zip(path.normals())
        .map(|(t, n)| [*t, n.cross(t)])
        .collect())
}

fn check_start_tangent(path: &GeodesicPath, v: &Vec3) -> Result<()> {
    let n = path.normals()[0];
    if n.dot(v).abs() > 1e-9 * v.norm().max(1.0) {
        return Err(Error::Argument("vector is not tangent at the path start".into()));
    }
    Ok(())
}

/// Parallel transport of `v` from the start of `path` to every sample.
///
/// The sphere uses the rotation about the great-circle axis, the torus the
/// identity, and generic meshes [`schild_ladder`] rungs with chord maps.
pub fn transport_along(path: &GeodesicPath, v: &Vec3) -> Result<Vec<Vec3>> {
    check_start_tangent(path, v)?;
    match path.kind() {
        ManifoldKind::Sphere { .. } => {
            let n0 = path.normals()[0];
            let t0 = path.tangents()[0];
            let b = n0.cross(&t0);
            // Coefficients along the parallel frame (γ̇, b) stay constant;
            // b is parallel along a great circle.
            let (a, c) = (v.dot(&t0), v.dot(&b));
            Ok(path.tangents().iter().map(|t| t * a + b * c).collect())
        }
        ManifoldKind::FlatTorus { .. } => Ok(vec![*v; path.samples().len()]),
        ManifoldKind::Mesh => Ok(schild_ladder(path, v)),
    }
}

/// Parallel transport of a start vector to the end of `path`.
pub fn parallel_transport(path: &GeodesicPath, v: &Vec3) -> Result<Vec3> {
    Ok(*transport_along(path, v)?.last().expect("nonempty path"))
}

/// Discrete transport along the samples by Schild's ladder.
///
/// On analytic kinds the rungs use the exact exponential and logarithm, so
/// the result converges to parallel transport at first order in the
/// step size.
/// On generic meshes the chord maps `exp_p(v) = p + v`, `log_p(q) = Π_p(q − p)`
/// are used; each rung then reduces to projecting onto the next tangent plane,
/// rescaled to preserve the norm.
pub fn schild_ladder(path: &GeodesicPath, v: &Vec3) -> Vec<Vec3> {
    let kind = path.kind();
    let xs = path.samples();
    let ns = path.normals();
    let mut out = Vec::with_capacity(xs.len());
    let mut cur = *v;
    out.push(cur);
    for k in 0..xs.len() - 1 {
        let next = match kind {
            ManifoldKind::Mesh => {
                let n = ns[k + 1];
                let p = cur - n * n.dot(&cur);
                let len = p.norm();
                if len == 0.0 {
                    p
                } else {
                    p * (cur.norm() / len)
                }
            }
            _ => {
                // Rungs are built on a copy shrunk to the step size, which
                // makes the ladder consistent; the result is scaled back.
                let (p, q) = (xs[k], xs[k + 1]);
                let norm = cur.norm();
                if norm == 0.0 {
                    cur
                } else {
                    let scale = (kind.distance(&p, &q) / norm).min(1.0);
                    let a = kind.exp(&p, &(cur * scale));
                    let half = kind.log(&a, &q).map(|w| kind.exp(&a, &(w * 0.5)));
                    match half.and_then(|mid| kind.log(&p, &mid)) {
                        Ok(to_mid) => {
                            let b = kind.exp(&p, &(to_mid * 2.0));
                            kind.log(&q, &b).map_or(cur, |w| w / scale)
                        }
                        Err(_) => cur,
                    }
                }
            }
        };
        cur = next;
        out.push(cur);
    }
    out
}

/// `g(ξ(ℓ), γ̇(ℓ)) − g(ξ(0), γ̇(0))`.
pub fn first_variation(path: &GeodesicPath, xi: &VariationField) -> f64 {
    let v = xi.vectors();
    let t = path.tangents();
    let last = v.len() - 1;
    v[last].dot(&t[last]) - v[0].dot(&t[0])
}

/// Covariant derivative `∇_γ̇ ξ` by second-order finite differences, with
/// neighbouring samples transported to the evaluation point.
pub fn covariant_derivative(path: &GeodesicPath, xi: &[Vec3]) -> Result<Vec<Vec3>> {
    let kind = path.kind();
    if matches!(kind, ManifoldKind::Mesh) {
        return Err(Error::Unsupported("covariant derivatives need an analytic surface".into()));
    }
    let xs = path.samples();
    let m = xs.len() - 1;
    let dt = path.spacing();
    let pull = |from: usize, to: usize| kind.transport(&xs[from], &xs[to], &xi[from]);
    (0..=m)
        .map(|k| {
            Ok(if k == 0 {
                (pull(1, 0)? * 4.0 - pull(2, 0)? - xi[0] * 3.0) / (2.0 * dt)
            } else if k == m {
                (xi[m] * 3.0 - pull(m - 1, m)? * 4.0 + pull(m - 2, m)?) / (2.0 * dt)
            } else {
                (pull(k + 1, k)? - pull(k - 1, k)?) / (2.0 * dt)
            })
        })
        .collect()
}

fn trapezoid(dt: f64, f: &[f64]) -> f64 {
    let n = f.len();
    dt * (f[1..n - 1].iter().sum::<f64>() + 0.5 * (f[0] + f[n - 1]))
}

/// `−(first variation)² + ∫₀^ℓ (|∇_γ̇ ξ|² − g(R(ξ, γ̇)γ̇, ξ)) dt` with the
/// constant-curvature tensor `R(u,v)w = K̃(⟨v,w⟩u − ⟨u,w⟩v)` and trapezoid
/// quadrature.
pub fn second_variation_upper(path: &GeodesicPath, xi: &VariationField, sectional: f64) -> Result<f64> {
    let fv = first_variation(path, xi);
    let d = covariant_derivative(path, xi.vectors())?;
    let integrand: Vec<f64> = xi
        .vectors()
        .iter()
        .zip(path.tangents())
        .zip(&d)
        .map(|((x, t), dx)| {
            let r = riemann(sectional, x, t, t).dot(x);
            dx.norm_squared() - r
        })
        .collect();
    Ok(-fv * fv + trapezoid(path.spacing(), &integrand))
}

/// `∫ a′² dt − (a(ℓ) − a(0))²` for the tangential part `a = ⟨ξ, γ̇⟩`: the
/// amount by which [`second_variation_upper`] exceeds the exact second
/// derivative of length for variations with vanishing endpoint
/// accelerations.
pub fn tangential_excess(path: &GeodesicPath, xi: &VariationField) -> f64 {
    let a: Vec<f64> = xi.vectors().iter().zip(path.tangents()).map(|(x, t)| x.dot(t)).collect();
    let m = a.len() - 1;
    let dt = path.spacing();
    let da: Vec<f64> = (0..=m)
        .map(|k| {
            if k == 0 {
                (4.0 * a[1] - a[2] - 3.0 * a[0]) / (2.0 * dt)
            } else if k == m {
                (3.0 * a[m] - 4.0 * a[m - 1] + a[m - 2]) / (2.0 * dt)
            } else {
                (a[k + 1] - a[k - 1]) / (2.0 * dt)
            }
        })
        .collect();
    let sq: Vec<f64> = da.iter().map(|x| x * x).collect();
    trapezoid(dt, &sq) - (a[m] - a[0]).powi(2)
}

/// Finite differences of length along the exponential variation
/// `γ^{±s}(t) = exp_{γ(t)}(±s ξ(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthDifferences {
    /// `(L(γ^s) − L(γ^{−s})) / 2s`
    pub first_fd: f64,
    /// `(h(L(γ^s)) + h(L(γ^{−s})) − 2h(L)) / s²`
    pub second_fd: f64,
}

/// Symmetric finite differences of `h∘L`; `h = None` means the identity.
pub fn finite_difference_length_variation(
    path: &GeodesicPath,
    xi: &VariationField,
    s: f64,
    h: Option<&CostSpec>,
) -> Result<LengthDifferences> {
    if !(s > 0.0) {
        return Err(Error::Argument(format!("finite-difference step must be positive, got {s}")));
    }
    let kind = path.kind();
    if matches!(kind, ManifoldKind::Mesh) {
        return Err(Error::Unsupported("exponential variations need an analytic surface".into()));
    }
    let length = |sign: f64| -> f64 {
        let pts: Vec<Vec3> = path
            .samples()
            .iter()
            .zip(xi.vectors())
            .map(|(p, x)| kind.exp(p, &(x * (sign * s))))
            .collect();
        pts.windows(2).map(|w| kind.distance(&w[0], &w[1])).sum()
    };
    let lp = length(1.0);
    let lm = length(-1.0);
    let l0 = path.polyline_length();
    let hf = |x: f64| h.map_or(x, |c| c.h(x));
    Ok(LengthDifferences {
        first_fd: (lp - lm) / (2.0 * s),
        second_fd: (hf(lp) + hf(lm) - 2.0 * hf(l0)) / (s * s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use std::f64::consts::PI;

    fn quarter_equator(m: &Manifold, steps: usize) -> GeodesicPath {
        m.geodesic_between(&Vec3::x(), &Vec3::y(), steps).unwrap()
    }

    #[test]
    fn torus_transport_is_identity() {
        let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
        let g = m.geodesic_path(0, 10, 8).unwrap();
        let v = Vec3::new(0.3, -0.7, 0.0);
        assert_eq!(parallel_transport(&g, &v).unwrap(), v);
        assert!(parallel_transport(&g, &Vec3::z()).is_err());
    }

    #[test]
    fn geodesic_is_self_parallel() {
        let m = Manifold::sphere(0, 1.0).unwrap();
        let g = m.geodesic_between(&Vec3::x(), &Vec3::new(0.0, 0.6, 0.8), 32).unwrap();
        let out = parallel_transport(&g, &g.tangents()[0]).unwrap();
        assert!((out - g.tangents()[32]).norm() < 1e-12);
    }

    #[test]
    fn octant_holonomy() {
        let m = Manifold::sphere(0, 1.0).unwrap();
        let corners = [Vec3::x(), Vec3::y(), Vec3::z()];
        let v0 = Vec3::y();
        let mut v = v0;
        for k in 0..3 {
            let g = m.geodesic_between(&corners[k], &corners[(k + 1) % 3], 16).unwrap();
            v = parallel_transport(&g, &v).unwrap();
        }
        // Enclosed area 4π/8 = π/2 is the rotation angle.
        assert!(v.dot(&v0).abs() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schild_ladder_converges_on_sphere() {
        let m = Manifold::sphere(0, 1.0).unwrap();
        let p = Vec3::x();
        let q = Vec3::new(0.0, 0.6, 0.8);
        let v = Vec3::new(0.0, 0.3, 0.5);
        let exact = m.transport(&p, &q, &v).unwrap();
        let err = |steps| {
            let g = m.geodesic_between(&p, &q, steps).unwrap();
            (schild_ladder(&g, &v).last().unwrap() - exact).norm()
        };
        let (coarse, fine) = (err(32), err(128));
        assert!(fine < 1e-3 && coarse / fine > 3.5, "{coarse} {fine}");
    }

    #[test]
    fn first_variation_cases() {
        let m = Manifold::sphere(0, 1.0).unwrap();
        let g = quarter_equator(&m, 64);
        let l = g.length();
        let zero_ends = VariationField::from_parallel_coeffs(&g, |t| [0.0, (PI * t / l).sin()]).unwrap();
        assert!(first_variation(&g, &zero_ends).abs() < 1e-15);
        let ramp = VariationField::from_parallel_coeffs(&g, |t| [t / l, 0.0]).unwrap();
        assert!((first_variation(&g, &ramp) - 1.0).abs() < 1e-15);
        let normal = VariationField::from_parallel_coeffs(&g, |_| [0.0, 1.0]).unwrap();
        assert!(first_variation(&g, &normal).abs() < 1e-15);
    }

    #[test]
    fn second_variation_of_normal_parallel_field() {
        let m = Manifold::sphere(0, 1.0).unwrap();
        let g = quarter_equator(&m, 64);
        let xi = VariationField::from_parallel_coeffs(&g, |_| [0.0, 1.0]).unwrap();
        let upper = second_variation_upper(&g, &xi, 1.0).unwrap();
        assert!((upper + PI / 2.0).abs() < 1e-3, "{upper}");
        let fd = finite_difference_length_variation(&g, &xi, 1e-3, None).unwrap();
        assert!((fd.second_fd + PI / 2.0).abs() < 1e-2, "{}", fd.second_fd);
        let along = VariationField::from_parallel_coeffs(&g, |_| [1.0, 0.0]).unwrap();
        assert!(second_variation_upper(&g, &along, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn flat_parallel_variation_is_rigid() {
        let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
        let g = m.geodesic_between(&Vec3::new(0.1, 0.1, 0.0), &Vec3::new(0.4, 0.3, 0.0), 16).unwrap();
        let xi = VariationField::new(&g, vec![Vec3::new(0.2, -0.1, 0.0); 17]).unwrap();
        assert!(second_variation_upper(&g, &xi, 0.0).unwrap().abs() < 1e-12);
        let fd = finite_difference_length_variation(&g, &xi, 1e-2, None).unwrap();
        assert!(fd.second_fd.abs() < 1e-9);
        assert!(finite_difference_length_variation(&g, &xi, 0.0, None).is_err());
    }
}
