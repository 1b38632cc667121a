use std::collections::BTreeMap;

use super::config::DensitySpec;
use crate::error::{Error, Result};
use crate::manifold::{Manifold, ManifoldKind, Vec3};
use crate::ot::DensityField;

fn center_point(m: &Manifold, c: &[f64]) -> Vec3 {
    match m.kind() {
        ManifoldKind::Sphere { radius } => Vec3::new(c[0], c[1], c[2]).normalize() * radius,
        ManifoldKind::FlatTorus { .. } => Vec3::new(c[0], c[1], 0.0),
        ManifoldKind::Mesh => Vec3::new(c[0], c[1], c[2]),
    }
}

/// Unnormalized generator value at `p`.
pub(crate) fn value_at(specs: &BTreeMap<String, DensitySpec>, name: &str, m: &Manifold, p: &Vec3) -> Result<f64> {
    let spec = specs
        .get(name)
        .ok_or_else(|| Error::Config(format!("unknown density `{name}`")))?;
    Ok(match spec {
        DensitySpec::Uniform => 1.0,
        DensitySpec::GaussianBump { center, width, floor } => {
            let d = m.distance_points(p, &center_point(m, center));
            floor + (-d * d / (2.0 * width * width)).exp()
        }
        DensitySpec::CompactBump { center, radius, power, floor } => {
            let d = m.distance_points(p, &center_point(m, center));
            floor + (1.0 - d * d / (radius * radius)).max(0.0).powf(*power)
        }
        DensitySpec::Cap { axis, angle, floor, power } => {
            let a = Vec3::new(axis[0], axis[1], axis[2]).normalize();
            let ca = angle.cos();
            let s = ((p.normalize().dot(&a) - ca) / (1.0 - ca)).max(0.0);
            floor + s.powf(*power)
        }
        DensitySpec::TranslateOf { base, v } => {
            let q = m.wrap(&(p - Vec3::new(v[0], v[1], 0.0)));
            value_at(specs, base, m, &q)?
        }
    })
}

/// Evaluates the named generator at the vertices and normalizes to unit mass.
pub fn build_density(specs: &BTreeMap<String, DensitySpec>, name: &str, m: &Manifold) -> Result<DensityField> {
    let rho = m
        .vertices()
        .iter()
        .map(|p| value_at(specs, name, m, p))
        .collect::<Result<Vec<f64>>>()?;
    DensityField::normalized(m, rho).map_err(|e| Error::Config(format!("density `{name}`: {e}")))
}
