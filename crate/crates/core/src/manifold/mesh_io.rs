//! Plain-text mesh format:
//!
//! ```text
//! fgi-mesh v1
//! meta kind=sphere radius=1 K=1 Ktilde=1
//! v x y z w
//! f i j k
//! ```
//!
//! The `meta` line may appear anywhere after the header. Analytic kinds carry
//! their shape parameters (`radius`, or `lx ly nx ny`) so that a round trip
//! restores analytic distances.

use std::io::{BufRead, Write};

use super::{CurvatureBounds, Manifold, ManifoldKind, Vec3};
use crate::error::{Error, Result};

pub const HEADER: &str = "fgi-mesh v1";

pub fn write_mesh<W: Write>(m: &Manifold, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    let c = m.curvature();
    let shape = match m.kind() {
        ManifoldKind::Sphere { radius } => format!("kind=sphere radius={radius}"),
        ManifoldKind::FlatTorus { lx, ly, nx, ny } => {
            format!("kind=flat-torus lx={lx} ly={ly} nx={nx} ny={ny}")
        }
        ManifoldKind::Mesh => "kind=generic-mesh".to_string(),
    };
    writeln!(out, "meta {shape} K={} Ktilde={}", c.ricci_lower, c.sectional_sup)?;
    for (p, w) in m.vertices().iter().zip(m.weights()) {
        writeln!(out, "v {} {} {} {}", p.x, p.y, p.z, w)?;
    }
    for t in m.triangles() {
        writeln!(out, "f {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Manifold> {
    let mut vertices = Vec::new();
    let mut weights = Vec::new();
    let mut triangles = Vec::new();
    let mut meta: Option<(usize, Vec<(String, String)>)> = None;
    let mut seen_header = false;
    for (k, line) in input.lines().enumerate() {
        let ln = k + 1;
        let line = line.map_err(|e| parse_err(ln, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != HEADER {
                return Err(parse_err(ln, format!("expected header `{HEADER}`")));
            }
            seen_header = true;
            continue;
        }
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = num(ln, toks.next(), "x")?;
                let y = num(ln, toks.next(), "y")?;
                let z = num(ln, toks.next(), "z")?;
                weights.push(num::<f64>(ln, toks.next(), "weight")?);
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let t = [
                    num(ln, toks.next(), "index")?,
                    num(ln, toks.next(), "index")?,
                    num(ln, toks.next(), "index")?,
                ];
                triangles.push(t);
            }
            Some("meta") => {
                let mut kv = Vec::new();
                for tok in toks.by_ref() {
                    let (a, b) = tok
                        .split_once('=')
                        .ok_or_else(|| parse_err(ln, format!("meta entry `{tok}` is not key=value")))?;
                    kv.push((a.to_string(), b.to_string()));
                }
                meta = Some((ln, kv));
            }
            Some(other) => return Err(parse_err(ln, format!("unknown record `{other}`"))),
            None => unreachable!(),
        }
        if let Some(extra) = toks.next() {
            return Err(parse_err(ln, format!("trailing token `{extra}`")));
        }
    }
    if !seen_header {
        return Err(parse_err(1, "empty mesh file"));
    }
    let (ln, kv) = meta.ok_or_else(|| parse_err(1, "missing meta line"))?;
    let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let curvature = CurvatureBounds {
        ricci_lower: num(ln, get("K"), "K")?,
        sectional_sup: num(ln, get("Ktilde"), "Ktilde")?,
    };
    let kind = match get("kind") {
        Some("sphere") => ManifoldKind::Sphere {
            radius: num(ln, get("radius"), "radius")?,
        },
        Some("flat-torus") => ManifoldKind::FlatTorus {
            lx: num(ln, get("lx"), "lx")?,
            ly: num(ln, get("ly"), "ly")?,
            nx: num(ln, get("nx"), "nx")?,
            ny: num(ln, get("ny"), "ny")?,
        },
        Some("generic-mesh") => ManifoldKind::Mesh,
        Some(k) => return Err(parse_err(ln, format!("unknown kind `{k}`"))),
        None => return Err(parse_err(ln, "meta line lacks kind")),
    };
    if let ManifoldKind::FlatTorus { nx, ny, .. } = kind {
        if nx * ny != vertices.len() {
            return Err(parse_err(ln, format!("torus grid {nx}x{ny} does not match {} vertices", vertices.len())));
        }
    }
    Manifold::assemble(kind, vertices, triangles, weights, curvature)
}
