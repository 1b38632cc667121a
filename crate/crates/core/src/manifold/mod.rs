//! Discrete compact surfaces: icosphere, flat torus, and imported meshes.
//!
//! A [`Manifold`] carries vertex positions, a closed triangulation, lumped
//! vertex weights (the discrete volume measure) and the curvature bounds
//! `K` (Ricci lower bound) and `K̃` (sectional supremum) of the surface it
//! discretizes. The sphere and the flat torus keep their analytic metric:
//! distances, exponential/log maps and parallel transport are evaluated in
//! closed form, so discretization only enters through the vertex sampling.

mod cost;
mod geodesic;
mod mesh_io;

use std::collections::{BTreeSet, BinaryHeap, HashMap};

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use cost::{cost_matrix, distance_matrix, CostSpec};
pub use geodesic::GeodesicPath;
pub use mesh_io::{read_mesh, write_mesh};

pub type Vec3 = Vector3<f64>;

/// Largest accepted icosphere subdivision level.
pub const MAX_SUBDIVISIONS: u32 = 7;

/// The continuous surface a mesh stands for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldKind {
    Sphere { radius: f64 },
    /// Periodic `nx × ny` grid on `[0, lx) × [0, ly)`; vertex `(ix, iy)` has
    /// index `iy * nx + ix`.
    FlatTorus { lx: f64, ly: f64, nx: usize, ny: usize },
    /// Arbitrary closed triangle mesh; distances fall back to edge-graph
    /// shortest paths.
    Mesh,
}

impl ManifoldKind {
    pub fn name(&self) -> &'static str {
        match self {
            ManifoldKind::Sphere { .. } => "sphere",
            ManifoldKind::FlatTorus { .. } => "flat-torus",
            ManifoldKind::Mesh => "generic-mesh",
        }
    }
}

/// `K`: lower Ricci bound, `K̃`: uniform bound on sectional curvatures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureBounds {
    pub ricci_lower: f64,
    pub sectional_sup: f64,
}

#[derive(Debug, Clone)]
pub struct Manifold {
    kind: ManifoldKind,
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    weights: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
    curvature: CurvatureBounds,
}

impl Manifold {
    /// Icosphere with `subdivisions` midpoint refinements of an icosahedron
    /// that has vertices at both poles.
    ///
    /// Vertex weights are one third of the incident *spherical* triangle
    /// areas, so they partition `4πr²` exactly; the flat polyhedral area is
    /// available from [`Manifold::polyhedral_area`].
    pub fn sphere(subdivisions: u32, radius: f64) -> Result<Self> {
        if subdivisions > MAX_SUBDIVISIONS {
            return Err(Error::Config(format!(
                "subdivisions must lie in [0, {MAX_SUBDIVISIONS}], got {subdivisions}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        let (mut unit, mut triangles) = icosahedron();
        for _ in 0..subdivisions {
            let (v, t) = subdivide(&unit, &triangles);
            unit = v;
            triangles = t;
        }
        let mut weights = vec![0.0; unit.len()];
        for t in &triangles {
            let area = spherical_triangle_area(&unit[t[0]], &unit[t[1]], &unit[t[2]]) * radius * radius;
            for &v in t {
                weights[v] += area / 3.0;
            }
        }
        let vertices = unit.into_iter().map(|p| p * radius).collect();
        let k = 1.0 / (radius * radius);
        Self::assemble(
            ManifoldKind::Sphere { radius },
            vertices,
            triangles,
            weights,
            CurvatureBounds {
                ricci_lower: k,
                sectional_sup: k,
            },
        )
    }

    /// Regular periodic grid on the flat torus `[0,lx) × [0,ly)`, each cell
    /// split along its `(ix,iy)–(ix+1,iy+1)` diagonal.
    pub fn flat_torus(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Config(format!("torus grid needs nx, ny >= 4, got {nx} x {ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Config(format!("torus side lengths must be positive, got {lx} x {ly}")));
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        let idx = |ix: usize, iy: usize| (iy % ny) * nx + (ix % nx);
        let mut vertices = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                vertices.push(Vec3::new(ix as f64 * hx, iy as f64 * hy, 0.0));
            }
        }
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let v00 = idx(ix, iy);
                let v10 = idx(ix + 1, iy);
                let v01 = idx(ix, iy + 1);
                let v11 = idx(ix + 1, iy + 1);
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let weights = vec![hx * hy; nx * ny];
        Self::assemble(
            ManifoldKind::FlatTorus { lx, ly, nx, ny },
            vertices,
            triangles,
            weights,
            CurvatureBounds {
                ricci_lower: 0.0,
                sectional_sup: 0.0,
            },
        )
    }

    /// Wraps an arbitrary closed mesh. Weights must be positive.
    pub fn from_mesh(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        weights: Vec<f64>,
        curvature: CurvatureBounds,
    ) -> Result<Self> {
        Self::assemble(ManifoldKind::Mesh, vertices, triangles, weights, curvature)
    }

    pub(crate) fn assemble(
        kind: ManifoldKind,
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        weights: Vec<f64>,
        curvature: CurvatureBounds,
    ) -> Result<Self> {
        let n = vertices.len();
        if weights.len() != n {
            return Err(Error::MeshQuality(format!(
                "{} weights for {} vertices",
                weights.len(),
                n
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
            return Err(Error::MeshQuality(format!("vertex {i} has non-positive weight {w}")));
        }
        let mut sets = vec![BTreeSet::new(); n];
        for (ti, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a >= n || b >= n || a == b {
                    return Err(Error::MeshQuality(format!("triangle {ti} has invalid indices {t:?}")));
                }
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        let adjacency = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        Ok(Manifold {
            kind,
            vertices,
            triangles,
            weights,
            adjacency,
            curvature,
        })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Lumped vertex weights (area units).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// 1-ring neighbours, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn curvature(&self) -> CurvatureBounds {
        self.curvature
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Area of the surface being discretized, when known in closed form.
    pub fn analytic_area(&self) -> Option<f64> {
        match self.kind {
            ManifoldKind::Sphere { radius } => Some(4.0 * std::f64::consts::PI * radius * radius),
            ManifoldKind::FlatTorus { lx, ly, .. } => Some(lx * ly),
            ManifoldKind::Mesh => None,
        }
    }

    /// Sum of flat triangle areas of the embedded mesh.
    pub fn polyhedral_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let (a, b, _) = self.triangle_edges(t);
                0.5 * a.cross(&b).norm()
            })
            .sum()
    }

    /// Edge vectors `(p1 - p0, p2 - p0, p2 - p1)` with torus wrap-around
    /// resolved to the minimal image.
    pub(crate) fn triangle_edges(&self, t: &[usize; 3]) -> (Vec3, Vec3, Vec3) {
        let p0 = self.vertices[t[0]];
        let e1 = self.chord(p0, self.vertices[t[1]]);
        let e2 = self.chord(p0, self.vertices[t[2]]);
        (e1, e2, e2 - e1)
    }

    /// Straight-line offset from `p` to `q` (minimal image on the torus).
    pub(crate) fn chord(&self, p: Vec3, q: Vec3) -> Vec3 {
        match self.kind {
            ManifoldKind::FlatTorus { lx, ly, .. } => {
                let d = q - p;
                Vec3::new(min_image(d.x, lx), min_image(d.y, ly), 0.0)
            }
            _ => q - p,
        }
    }

    /// Checks the closed-surface invariant: every edge lies in exactly two
    /// triangles.
    pub fn check_closed(&self) -> Result<()> {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        match count.into_iter().find(|(_, c)| *c != 2) {
            Some((e, c)) => Err(Error::MeshQuality(format!("edge {e:?} belongs to {c} triangles"))),
            None => Ok(()),
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::Argument(format!("vertex index {i} out of range (n = {})", self.len())))
        }
    }

    /// Geodesic distance between vertices `i` and `j`.
    ///
    /// Analytic on the sphere and torus; edge-graph Dijkstra on generic
    /// meshes, which only approximates the surface distance to first order.
    pub fn geodesic_distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i)?;
        self.check_index(j)?;
        match self.kind {
            ManifoldKind::Mesh => Ok(self.dijkstra(i)[j]),
            _ => Ok(self.distance_points(&self.vertices[i], &self.vertices[j])),
        }
    }

    /// Distance between arbitrary points of an analytic surface. On generic
    /// meshes this is the Euclidean chord.
    pub fn distance_points(&self, p: &Vec3, q: &Vec3) -> f64 {
        match self.kind {
            ManifoldKind::Sphere { radius } => radius * p.cross(q).norm().atan2(p.dot(q)),
            ManifoldKind::FlatTorus { lx, ly, .. } => {
                // Minimum over the 9 nearest lattice translates.
                let d = q - p;
                let mut best = f64::INFINITY;
                for a in -1..=1 {
                    for b in -1..=1 {
                        let dx = d.x - (d.x / lx).round() * lx + a as f64 * lx;
                        let dy = d.y - (d.y / ly).round() * ly + b as f64 * ly;
                        best = best.min(dx.hypot(dy));
                    }
                }
                best
            }
            ManifoldKind::Mesh => (q - p).norm(),
        }
    }

    /// Single-source shortest paths over the edge graph.
    pub(crate) fn dijkstra(&self, source: usize) -> Vec<f64> {
        #[derive(PartialEq)]
        struct State(f64, usize);
        impl Eq for State {}
        impl PartialOrd for State {
            fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for State {
            fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
            }
        }
        let mut dist = vec![f64::INFINITY; self.len()];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(State(0.0, source));
        while let Some(State(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &v in &self.adjacency[u] {
                let nd = d + self.chord(self.vertices[u], self.vertices[v]).norm();
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(State(nd, v));
                }
            }
        }
        dist
    }

    /// Edge path from the Dijkstra tree, `source` first.
    pub(crate) fn dijkstra_path(&self, source: usize, target: usize) -> Vec<usize> {
        let dist = self.dijkstra(source);
        let mut path = vec![target];
        let mut u = target;
        while u != source {
            let prev = self.adjacency[u]
                .iter()
                .copied()
                .filter(|&v| {
                    let step = self.chord(self.vertices[v], self.vertices[u]).norm();
                    (dist[v] + step - dist[u]).abs() <= 1e-12 * (1.0 + dist[u])
                })
                .min_by(|a, b| dist[*a].total_cmp(&dist[*b]))
                .expect("dijkstra predecessor");
            path.push(prev);
            u = prev;
        }
        path.reverse();
        path
    }

    /// Diameter of the analytic surface (largest possible distance).
    pub fn diameter(&self) -> f64 {
        match self.kind {
            ManifoldKind::Sphere { radius } => std::f64::consts::PI * radius,
            ManifoldKind::FlatTorus { lx, ly, .. } => 0.5 * lx.hypot(ly),
            ManifoldKind::Mesh => (0..self.len())
                .map(|i| self.dijkstra(i).into_iter().fold(0.0, f64::max))
                .fold(0.0, f64::max),
        }
    }

    /// Grid spacing `(hx, hy)` on the torus.
    pub fn torus_spacing(&self) -> Option<(f64, f64)> {
        match self.kind {
            ManifoldKind::FlatTorus { lx, ly, nx, ny } => Some((lx / nx as f64, ly / ny as f64)),
            _ => None,
        }
    }

    /// Vertex index of torus grid node `(ix, iy)`, taken periodically.
    pub fn torus_index(&self, ix: i64, iy: i64) -> Option<usize> {
        match self.kind {
            ManifoldKind::FlatTorus { nx, ny, .. } => {
                let x = ix.rem_euclid(nx as i64) as usize;
                let y = iy.rem_euclid(ny as i64) as usize;
                Some(y * nx + x)
            }
            _ => None,
        }
    }

    /// Mean edge length, a resolution proxy for refinement ladders.
    pub fn mean_edge_length(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (i, nb) in self.adjacency.iter().enumerate() {
            for &j in nb.iter().filter(|&&j| j > i) {
                total += self.chord(self.vertices[i], self.vertices[j]).norm();
                count += 1;
            }
        }
        total / count.max(1) as f64
    }
}

pub(crate) fn min_image(d: f64, l: f64) -> f64 {
    d - (d / l).round() * l
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    use std::f64::consts::PI;
    let z = 1.0 / 5f64.sqrt();
    let rho = 2.0 / 5f64.sqrt();
    let mut v = vec![Vec3::new(0.0, 0.0, 1.0)];
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0;
        v.push(Vec3::new(rho * a.cos(), rho * a.sin(), z));
    }
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0 + PI / 5.0;
        v.push(Vec3::new(rho * a.cos(), rho * a.sin(), -z));
    }
    v.push(Vec3::new(0.0, 0.0, -1.0));
    let mut t = Vec::with_capacity(20);
    for k in 0..5 {
        let u0 = 1 + k;
        let u1 = 1 + (k + 1) % 5;
        let l0 = 6 + k;
        let l1 = 6 + (k + 1) % 5;
        t.push([0, u0, u1]);
        t.push([u0, l0, u1]);
        t.push([u1, l0, l1]);
        t.push([11, l1, l0]);
    }
    (v, t)
}

fn subdivide(v: &[Vec3], t: &[[usize; 3]]) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut verts = v.to_vec();
    let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
        let key = (a.min(b), a.max(b));
        *cache.entry(key).or_insert_with(|| {
            verts.push((verts[a] + verts[b]).normalize());
            verts.len() - 1
        })
    };
    let mut tris = Vec::with_capacity(4 * t.len());
    for &[a, b, c] in t {
        let ab = mid(a, b, &mut verts);
        let bc = mid(b, c, &mut verts);
        let ca = mid(c, a, &mut verts);
        tris.push([a, ab, ca]);
        tris.push([ab, b, bc]);
        tris.push([ca, bc, c]);
        tris.push([ab, bc, ca]);
    }
    (verts, tris)
}

/// Spherical excess of the unit-sphere triangle `abc`.
fn spherical_triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let num = a.dot(&b.cross(c)).abs();
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}
