use crate::error::{Error, Result};
use crate::manifold::{Manifold, ManifoldKind, Vec3};

/// Per-vertex tangent vectors, stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    vectors: Vec<Vec3>,
}

impl TangentField {
    pub fn new(vectors: Vec<Vec3>) -> Self {
        TangentField { vectors }
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors
    }

    pub fn at(&self, i: usize) -> Vec3 {
        self.vectors[i]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Coordinates of each vector in the manifold's per-vertex tangent basis.
    pub fn coords(&self, m: &Manifold) -> Vec<[f64; 2]> {
        self.vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let [e1, e2] = m.tangent_basis(i);
                [v.dot(&e1), v.dot(&e2)]
            })
            .collect()
    }
}

/// Linear vertex gradient `(∇f)_i = Σ_j W_ij (f_j − f_i)`.
///
/// On the torus grid `W` encodes periodic central differences along the two
/// axes. Elsewhere it is the gradient of a least-squares quadratic fit over
/// the 1-ring (linear when the ring has fewer than five vertices), with
/// neighbours expressed in tangent-plane coordinates via the log map
/// (sphere) or the projected chord (generic meshes).
#[derive(Debug, Clone)]
pub struct GradientOperator {
    rows: Vec<Vec<(usize, Vec3)>>,
}

impl GradientOperator {
    pub fn new(m: &Manifold) -> Result<Self> {
        let rows = match m.kind() {
            ManifoldKind::FlatTorus { .. } => {
                let (hx, hy) = m.torus_spacing().expect("torus");
                let nx = match m.kind() {
                    ManifoldKind::FlatTorus { nx, .. } => nx,
                    _ => unreachable!(),
                };
                (0..m.len())
                    .map(|i| {
                        let (ix, iy) = ((i % nx) as i64, (i / nx) as i64);
                        let ax = Vec3::x() / (2.0 * hx);
                        let ay = Vec3::y() / (2.0 * hy);
                        vec![
                            (m.torus_index(ix + 1, iy).unwrap(), ax),
                            (m.torus_index(ix - 1, iy).unwrap(), -ax),
                            (m.torus_index(ix, iy + 1).unwrap(), ay),
                            (m.torus_index(ix, iy - 1).unwrap(), -ay),
                        ]
                    })
                    .collect()
            }
            _ => (0..m.len()).map(|i| ring_fit(m, i)).collect::<Result<_>>()?,
        };
        Ok(GradientOperator { rows })
    }

    pub fn apply(&self, f: &[f64]) -> TangentField {
        assert_eq!(f.len(), self.rows.len(), "gradient: field length mismatch");
        let vectors = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .fold(Vec3::zeros(), |acc, (j, w)| acc + w * (f[*j] - f[i]))
            })
            .collect();
        TangentField { vectors }
    }

    /// Sparse weights of vertex `i`.
    pub fn row(&self, i: usize) -> &[(usize, Vec3)] {
        &self.rows[i]
    }
}

fn ring_fit(m: &Manifold, i: usize) -> Result<Vec<(usize, Vec3)>> {
    let p = m.vertex(i);
    let [e1, e2] = m.tangent_basis(i);
    let n = e1.cross(&e2);
    let offsets: Vec<(usize, f64, f64)> = m
        .neighbors(i)
        .iter()
        .map(|&j| {
            let q = m.vertex(j);
            let d = match m.kind() {
                ManifoldKind::Mesh => {
                    let c = q - p;
                    c - n * n.dot(&c)
                }
                _ => m.log(&p, &q)?,
            };
            Ok((j, d.dot(&e1), d.dot(&e2)))
        })
        .collect::<Result<_>>()?;
    // Quadratic fit when the ring has enough points, which removes the
    // curvature bias of a plain linear fit; linear otherwise.
    let coeffs = if offsets.len() >= 5 {
        fit::<5>(&offsets, |x, y| [x, y, 0.5 * x * x, x * y, 0.5 * y * y])
    } else {
        None
    };
    let coeffs = match coeffs {
        Some(c) => c,
        None => fit::<2>(&offsets, |x, y| [x, y])
            .ok_or_else(|| Error::MeshQuality(format!("vertex {i} has a rank-deficient 1-ring")))?,
    };
    Ok(offsets
        .iter()
        .zip(coeffs)
        .map(|(&(j, _, _), [cx, cy])| (j, e1 * cx + e2 * cy))
        .collect())
}

/// Least-squares fit of `f_j − f_i ≈ Σ_k a_k b_k(x_j, y_j)`; returns, per
/// neighbour, its weights in the first two coefficients (the gradient).
fn fit<const K: usize>(offsets: &[(usize, f64, f64)], basis: impl Fn(f64, f64) -> [f64; K]) -> Option<Vec<[f64; 2]>> {
    use nalgebra::DMatrix;
    // Scale coordinates to unit ring size for conditioning.
    let h = offsets.iter().map(|o| o.1.hypot(o.2)).sum::<f64>() / offsets.len() as f64;
    if !(h > 0.0) {
        return None;
    }
    let a = DMatrix::from_fn(offsets.len(), K, |r, k| basis(offsets[r].1 / h, offsets[r].2 / h)[k]);
    let ata = a.transpose() * &a;
    let sv = ata.singular_values();
    if !(sv.min() > 1e-10 * sv.max()) {
        return None;
    }
    let w = ata.try_inverse()? * a.transpose();
    Some((0..offsets.len()).map(|r| [w[(0, r)] / h, w[(1, r)] / h]).collect())
}

/// One-off gradient of a vertex field.
pub fn vertex_gradient(m: &Manifold, f: &[f64]) -> Result<TangentField> {
    if f.len() != m.len() {
        return Err(Error::Argument(format!("field has {} values for {} vertices", f.len(), m.len())));
    }
    Ok(GradientOperator::new(m)?.apply(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_linear_patch_is_exact() {
        let m = Manifold::flat_torus(16, 16, 1.0, 1.0).unwrap();
        let f: Vec<f64> = m.vertices().iter().map(|p| 3.0 * p.x).collect();
        let g = vertex_gradient(&m, &f).unwrap();
        for i in 0..m.len() {
            let ix = i % 16;
            if (1..15).contains(&ix) {
                assert!((g.at(i) - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_has_zero_gradient() {
        for m in [Manifold::sphere(2, 1.0).unwrap(), Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap()] {
            let g = vertex_gradient(&m, &vec![2.5; m.len()]).unwrap();
            assert!(g.vectors().iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn sphere_height_function() {
        let m = Manifold::sphere(3, 1.0).unwrap();
        let f: Vec<f64> = m.vertices().iter().map(|p| p.z).collect();
        let g = vertex_gradient(&m, &f).unwrap();
        for (i, p) in m.vertices().iter().enumerate() {
            let sin = (1.0 - p.z * p.z).max(0.0).sqrt();
            assert!((g.at(i).norm() - sin).abs() < 2e-2, "vertex {i}");
            assert!(g.at(i).dot(p).abs() < 1e-12);
        }
    }
}
