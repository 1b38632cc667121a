//! Exponential and logarithm maps, parallel transport and sampled geodesics.
//!
//! Tangent vectors are stored in ambient `R³` coordinates: tangent to the
//! sphere at the base point, or with zero `z` component on the torus.

use nalgebra::{Rotation3, Unit};

use super::{min_image, Manifold, ManifoldKind, Vec3};
use crate::error::{Error, Result};

/// Relative distance to `πr` under which a sphere pair counts as antipodal.
const ANTIPODAL_TOL: f64 = 1e-9;

/// Unit-speed minimizing geodesic sampled on a uniform arc-length grid.
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    pub(crate) kind: ManifoldKind,
    samples: Vec<Vec3>,
    tangents: Vec<Vec3>,
    normals: Vec<Vec3>,
    params: Vec<f64>,
    length: f64,
}

impl GeodesicPath {
    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    /// Sample points. On the torus they are unwrapped into the minimizing
    /// lattice sheet, so consecutive samples are close in `R²`.
    pub fn samples(&self) -> &[Vec3] {
        &self.samples
    }

    /// Unit velocity at each sample.
    pub fn tangents(&self) -> &[Vec3] {
        &self.tangents
    }

    /// Unit surface normal at each sample.
    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    /// Arc-length parameters `t_0 = 0, …, t_M = ℓ`.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of segments `M`.
    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn start(&self) -> Vec3 {
        self.samples[0]
    }

    pub fn end(&self) -> Vec3 {
        *self.samples.last().unwrap()
    }

    /// Arc-length spacing of the grid.
    pub fn spacing(&self) -> f64 {
        self.length / self.steps() as f64
    }

    /// The same geodesic traversed from its end.
    pub fn reversed(&self) -> GeodesicPath {
        GeodesicPath {
            kind: self.kind,
            samples: self.samples.iter().rev().copied().collect(),
            tangents: self.tangents.iter().rev().map(|t| -t).collect(),
            normals: self.normals.iter().rev().copied().collect(),
            params: self.params.iter().rev().map(|t| self.length - t).collect(),
            length: self.length,
        }
    }

    /// Sum of geodesic distances between consecutive samples.
    pub fn polyline_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| self.kind.distance(&w[0], &w[1]))
            .sum()
    }
}

impl ManifoldKind {
    fn require_analytic(&self, what: &str) -> Result<()> {
        match self {
            ManifoldKind::Mesh => Err(Error::Unsupported(format!(
                "{what} is only available on the sphere and the flat torus"
            ))),
            _ => Ok(()),
        }
    }

    /// Distance between points; Euclidean chord on generic meshes.
    pub(crate) fn distance(&self, p: &Vec3, q: &Vec3) -> f64 {
        match *self {
            ManifoldKind::Sphere { radius } => radius * p.cross(q).norm().atan2(p.dot(q)),
            ManifoldKind::FlatTorus { lx, ly, .. } => {
                let d = q - p;
                min_image(d.x, lx).hypot(min_image(d.y, ly))
            }
            ManifoldKind::Mesh => (q - p).norm(),
        }
    }

    /// Unit normal at `p` (analytic kinds).
    pub(crate) fn normal(&self, p: &Vec3) -> Vec3 {
        match self {
            ManifoldKind::Sphere { .. } => p.normalize(),
            _ => Vec3::z(),
        }
    }

    pub(crate) fn exp(&self, p: &Vec3, v: &Vec3) -> Vec3 {
        match *self {
            ManifoldKind::Sphere { radius } => {
                let len = v.norm();
                if len == 0.0 {
                    return *p;
                }
                let a = len / radius;
                p * a.cos() + v * (radius * a.sin() / len)
            }
            _ => p + v,
        }
    }

    pub(crate) fn log(&self, p: &Vec3, q: &Vec3) -> Result<Vec3> {
        match *self {
            ManifoldKind::Sphere { radius } => {
                let n = p / radius;
                let a = p.cross(q).norm().atan2(p.dot(q));
                if a >= std::f64::consts::PI * (1.0 - ANTIPODAL_TOL) {
                    return Err(Error::DegenerateGeodesic {
                        normal: antipodal_plane_normal(&n).into(),
                    });
                }
                let perp = q - n * q.dot(&n);
                let pn = perp.norm();
                if pn == 0.0 {
                    return Ok(Vec3::zeros());
                }
                Ok(perp * (a * radius / pn))
            }
            ManifoldKind::FlatTorus { lx, ly, .. } => {
                let d = q - p;
                Ok(Vec3::new(min_image(d.x, lx), min_image(d.y, ly), 0.0))
            }
            ManifoldKind::Mesh => Ok(q - p),
        }
    }

    /// Transports `v` from `p` along the minimizing geodesic to `q`.
    pub(crate) fn transport(&self, p: &Vec3, q: &Vec3, v: &Vec3) -> Result<Vec3> {
        match self {
            ManifoldKind::Sphere { .. } => {
                let axis = p.cross(q);
                let s = axis.norm();
                if s == 0.0 {
                    if p.dot(q) > 0.0 {
                        return Ok(*v);
                    }
                    return Err(Error::DegenerateGeodesic {
                        normal: antipodal_plane_normal(&p.normalize()).into(),
                    });
                }
                let angle = s.atan2(p.dot(q));
                let rot = Rotation3::from_axis_angle(&Unit::new_unchecked(axis / s), angle);
                Ok(rot * v)
            }
            _ => Ok(*v),
        }
    }

    /// Orthonormal basis of the tangent plane at `p`.
    pub(crate) fn tangent_basis(&self, p: &Vec3) -> [Vec3; 2] {
        match self {
            ManifoldKind::Sphere { .. } => {
                let n = p.normalize();
                let e1 = orthogonal_unit(&n);
                [e1, n.cross(&e1)]
            }
            _ => [Vec3::x(), Vec3::y()],
        }
    }
}

/// Unit vector orthogonal to the unit vector `n`: the first standard basis
/// direction orthogonalized against `n`, falling back to the second when the
/// first is (nearly) parallel.
pub(crate) fn orthogonal_unit(n: &Vec3) -> Vec3 {
    for e in [Vec3::x(), Vec3::y()] {
        let u = e - n * n.dot(&e);
        if u.norm() > 1e-3 {
            return u.normalize();
        }
    }
    unreachable!("x and y cannot both be parallel to a unit vector")
}

/// Normal of the great circle picked for an antipodal pair starting at the
/// unit vector `n`.
fn antipodal_plane_normal(n: &Vec3) -> Vec3 {
    n.cross(&orthogonal_unit(n)).normalize()
}

impl Manifold {
    fn normal_at(&self, p: &Vec3) -> Vec3 {
        self.kind.normal(p)
    }

    /// Area-weighted vertex normal from incident triangles.
    pub fn vertex_normal(&self, i: usize) -> Vec3 {
        match self.kind {
            ManifoldKind::Mesh => {
                let mut acc = Vec3::zeros();
                for t in self.triangles.iter().filter(|t| t.contains(&i)) {
                    let (a, b, _) = self.triangle_edges(t);
                    acc += a.cross(&b);
                }
                acc.normalize()
            }
            _ => self.normal_at(&self.vertices[i]),
        }
    }

    /// Orthonormal tangent basis at vertex `i`.
    pub fn tangent_basis(&self, i: usize) -> [Vec3; 2] {
        match self.kind {
            ManifoldKind::Mesh => {
                let n = self.vertex_normal(i);
                let e1 = orthogonal_unit(&n);
                [e1, n.cross(&e1)]
            }
            _ => self.kind.tangent_basis(&self.vertices[i]),
        }
    }

    /// Orthonormal tangent basis at an arbitrary point of an analytic surface.
    pub fn tangent_basis_at(&self, p: &Vec3) -> Result<[Vec3; 2]> {
        self.kind.require_analytic("tangent_basis_at")?;
        Ok(self.kind.tangent_basis(p))
    }

    /// Whether `v` is tangent at `p` up to `tol` (relative to `|v|`).
    pub fn is_tangent(&self, p: &Vec3, v: &Vec3, tol: f64) -> bool {
        let n = self.normal_at(p);
        n.dot(v).abs() <= tol * v.norm().max(1.0)
    }

    /// `exp_p(v)`. Torus results are not wrapped back into the fundamental
    /// domain.
    pub fn exp(&self, p: &Vec3, v: &Vec3) -> Result<Vec3> {
        self.kind.require_analytic("exp")?;
        Ok(self.kind.exp(p, v))
    }

    /// `log_p(q)`; fails with a degenerate-geodesic error at the cut locus of
    /// the sphere.
    pub fn log(&self, p: &Vec3, q: &Vec3) -> Result<Vec3> {
        self.kind.require_analytic("log")?;
        self.kind.log(p, q)
    }

    /// Parallel transport of `v` along the minimizing geodesic from `p` to `q`.
    pub fn transport(&self, p: &Vec3, q: &Vec3, v: &Vec3) -> Result<Vec3> {
        self.kind.require_analytic("transport")?;
        self.kind.transport(p, q, v)
    }

    /// Wraps a torus point into the fundamental domain; identity otherwise.
    pub fn wrap(&self, p: &Vec3) -> Vec3 {
        match self.kind {
            ManifoldKind::FlatTorus { lx, ly, .. } => {
                Vec3::new(p.x.rem_euclid(lx), p.y.rem_euclid(ly), 0.0)
            }
            _ => *p,
        }
    }

    /// Minimizing geodesic between vertices `i` and `j` with `steps` segments.
    ///
    /// On generic meshes the edge path from Dijkstra is returned (samples are
    /// mesh vertices, not uniformly spaced).
    pub fn geodesic_path(&self, i: usize, j: usize, steps: usize) -> Result<GeodesicPath> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(Error::Argument("geodesic_path needs distinct vertices".into()));
        }
        match self.kind {
            ManifoldKind::Mesh => Ok(self.edge_path(i, j)),
            _ => self.geodesic_between(&self.vertices[i], &self.vertices[j], steps),
        }
    }

    /// Minimizing geodesic between arbitrary points of an analytic surface.
    pub fn geodesic_between(&self, p: &Vec3, q: &Vec3, steps: usize) -> Result<GeodesicPath> {
        self.kind.require_analytic("geodesic_between")?;
        let v = self.kind.log(p, q)?;
        let len = v.norm();
        if len == 0.0 {
            return Err(Error::Argument("geodesic endpoints coincide".into()));
        }
        self.geodesic_from(p, &(v / len), len, steps)
    }

    /// Geodesic leaving `p` with unit direction `dir`, of length `length`.
    /// Lengths beyond `πr` on the sphere are allowed but no longer minimizing.
    pub fn geodesic_from(&self, p: &Vec3, dir: &Vec3, length: f64, steps: usize) -> Result<GeodesicPath> {
        self.kind.require_analytic("geodesic_from")?;
        if steps < 2 {
            return Err(Error::Argument(format!("steps must be >= 2, got {steps}")));
        }
        if !(length > 0.0) {
            return Err(Error::Argument(format!("geodesic length must be positive, got {length}")));
        }
        if !self.is_tangent(p, dir, 1e-9) || (dir.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Argument("direction must be a unit tangent vector".into()));
        }
        let mut samples = Vec::with_capacity(steps + 1);
        let mut tangents = Vec::with_capacity(steps + 1);
        let mut normals = Vec::with_capacity(steps + 1);
        let mut params = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = length * k as f64 / steps as f64;
            let (x, v) = match self.kind {
                ManifoldKind::Sphere { radius } => {
                    let n = p / radius;
                    let a = t / radius;
                    (
                        p * a.cos() + dir * (radius * a.sin()),
                        -n * a.sin() + dir * a.cos(),
                    )
                }
                _ => (p + dir * t, *dir),
            };
            normals.push(self.normal_at(&x));
            samples.push(x);
            tangents.push(v);
            params.push(t);
        }
        Ok(GeodesicPath {
            kind: self.kind,
            samples,
            tangents,
            normals,
            params,
            length,
        })
    }

    fn edge_path(&self, i: usize, j: usize) -> GeodesicPath {
        let idx = self.dijkstra_path(i, j);
        let samples: Vec<Vec3> = idx.iter().map(|&k| self.vertices[k]).collect();
        let normals: Vec<Vec3> = idx.iter().map(|&k| self.vertex_normal(k)).collect();
        let mut params = vec![0.0];
        for w in samples.windows(2) {
            params.push(params.last().unwrap() + (w[1] - w[0]).norm());
        }
        let tangents = (0..samples.len())
            .map(|k| {
                let (a, b) = if k + 1 < samples.len() { (k, k + 1) } else { (k - 1, k) };
                let d = samples[b] - samples[a];
                let n = normals[k];
                (d - n * n.dot(&d)).normalize()
            })
            .collect();
        GeodesicPath {
            kind: ManifoldKind::Mesh,
            length: *params.last().unwrap(),
            samples,
            tangents,
            normals,
            params,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn equator_quarter_arc() {
        let m = Manifold::sphere(0, 1.0).unwrap();
        let p = Vec3::new(1.0, 0.0, 0.0);
        let q = Vec3::new(0.0, 1.0, 0.0);
        let g = m.geodesic_between(&p, &q, 8).unwrap();
        assert_eq!(g.samples().len(), 9);
        for x in g.samples() {
            assert!(x.z.abs() < 1e-15);
        }
        for w in g.samples().windows(2) {
            assert!((m.distance_points(&w[0], &w[1]) - PI / 16.0).abs() < 1e-12);
        }
        assert!((g.polyline_length() - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn torus_path_wraps() {
        let m = Manifold::flat_torus(10, 10, 1.0, 1.0).unwrap();
        let g = m.geodesic_path(0, 9, 4).unwrap();
        assert!((g.length() - 0.1).abs() < 1e-12);
        assert!((g.polyline_length() - 0.1).abs() < 1e-12);
        assert!(g.samples()[2].x < 0.0);
    }

    #[test]
    fn antipodal_pair_is_degenerate() {
        let m = Manifold::sphere(1, 1.0).unwrap();
        match m.geodesic_path(0, 11, 8) {
            Err(Error::DegenerateGeodesic { normal }) => {
                let n = Vec3::from(normal);
                assert!((n.norm() - 1.0).abs() < 1e-12);
                assert!(n.z.abs() < 1e-12);
            }
            other => panic!("expected degenerate geodesic, got {other:?}"),
        }
    }

    #[test]
    fn exp_log_roundtrip() {
        let m = Manifold::sphere(0, 2.0).unwrap();
        let p = Vec3::new(0.0, 0.6, 0.8) * 2.0;
        let q = Vec3::new(0.48, -0.6, 0.64) * 2.0;
        let v = m.log(&p, &q).unwrap();
        assert!(m.is_tangent(&p, &v, 1e-12));
        assert!((v.norm() - m.distance_points(&p, &q)).abs() < 1e-12);
        assert!((m.exp(&p, &v).unwrap() - q).norm() < 1e-12);
    }

    #[test]
    fn transport_carries_velocity() {
        let m = Manifold::sphere(0, 1.0).unwrap();
        let p = Vec3::new(1.0, 0.0, 0.0);
        let q = Vec3::new(0.0, 0.6, 0.8);
        let g = m.geodesic_between(&p, &q, 16).unwrap();
        let out = m.transport(&p, &q, &g.tangents()[0]).unwrap();
        assert!((out - g.tangents()[16]).norm() < 1e-12);
    }

    #[test]
    fn generic_mesh_rejects_analytic_maps() {
        let s = Manifold::sphere(1, 1.0).unwrap();
        let m = Manifold::from_mesh(
            s.vertices().to_vec(),
            s.triangles().to_vec(),
            s.weights().to_vec(),
            s.curvature(),
        )
        .unwrap();
        assert!(matches!(m.exp(&s.vertex(0), &Vec3::x()), Err(Error::Unsupported(_))));
        let g = m.geodesic_path(0, 20, 8).unwrap();
        assert!((g.length() - g.params().last().unwrap()).abs() < 1e-15);
        assert!((m.vertex_normal(0) - Vec3::z()).norm() < 1e-12);
    }
}
