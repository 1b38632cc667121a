//! Hand-rolled schema walk over `serde_json::Value`, so that every violation
//! is reported with its JSON pointer instead of stopping at the first one.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::experiments::Penalty;
use crate::fgi::{EllSpec, SolverChoice};
use crate::manifold::{CostSpec, MAX_SUBDIVISIONS};

/// One schema violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// JSON pointer of the offending location.
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{p}: {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ManifoldSpec {
    Sphere { subdivisions: u32, radius: f64 },
    Torus { nx: usize, ny: usize, lx: f64, ly: f64 },
    Mesh { path: String },
}

/// Named density generators. Values are normalized to unit mass when built.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DensitySpec {
    Uniform,
    /// `floor + exp(−d²/(2 width²))`
    GaussianBump { center: Vec<f64>, width: f64, floor: f64 },
    /// `floor + ((x̂·â − cos α)/(1 − cos α))₊^power`
    Cap { axis: [f64; 3], angle: f64, floor: f64, power: f64 },
    /// `floor + (1 − d²/R²)₊^power`, compactly supported.
    CompactBump { center: Vec<f64>, radius: f64, power: f64, floor: f64 },
    /// `base(x − v)` on the torus.
    TranslateOf { base: String, v: [f64; 2] },
}

/// What the `fgi` experiment asserts at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FgiCheck {
    /// `slack ≥ −τ(N)`.
    Inequality,
    /// `|lhs|, |rhs|, |slack| ≤ identity` (for `μ = ν`).
    Identity,
    /// `|lhs|` below `translate_lhs` at the finest level and shrinking by
    /// `translate_shrink` per level.
    Translate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    Fgi { mu: String, nu: String, ladder: Vec<u32>, check: FgiCheck },
    Directional { mu: String, nu: String, ladder: Vec<u32>, f: Option<EllSpec> },
    Competitor { instances: usize, v: Option<[f64; 2]>, f: Option<EllSpec> },
    Heatflow { mu: String, nu: String, t_final: f64, dt: f64 },
    BvProjection { nu: String, cap: f64, ladder: Vec<u32> },
    BvRegularized { nu: String, penalty: Penalty, iterations: usize, tol: f64, ladder: Vec<u32> },
    GeometryLab {
        trials: usize,
        sigma: f64,
        geodesics: usize,
        steps: usize,
        fd_step: f64,
        min_length: f64,
        max_length: f64,
    },
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSpec::Fgi { .. } => "fgi",
            ExperimentSpec::Directional { .. } => "directional",
            ExperimentSpec::Competitor { .. } => "competitor",
            ExperimentSpec::Heatflow { .. } => "heatflow",
            ExperimentSpec::BvProjection { .. } => "bv-projection",
            ExperimentSpec::BvRegularized { .. } => "bv-regularized",
            ExperimentSpec::GeometryLab { .. } => "geometry-lab",
        }
    }
}

/// Pass/fail thresholds. `τ(N) = tau_scale · mean edge length`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub tau_scale: f64,
    pub identity: f64,
    pub translate_lhs: f64,
    pub translate_shrink: f64,
    pub contraction_budget: f64,
    pub flat_increase: f64,
    pub second_diff: f64,
    pub feasibility: f64,
    pub variation: f64,
    pub parallel_case: f64,
    pub summed_identity: f64,
    pub cap_excess: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tau_scale: 0.5,
            identity: 1e-10,
            translate_lhs: 5e-3,
            translate_shrink: 1.5,
            contraction_budget: 0.05,
            flat_increase: 5e-3,
            second_diff: 1e-10,
            feasibility: 1e-8,
            variation: 5e-3,
            parallel_case: 1e-2,
            summed_identity: 1e-10,
            cap_excess: 1e-10,
        }
    }
}

const TOLERANCE_KEYS: [&str; 12] = [
    "tau_scale",
    "identity",
    "translate_lhs",
    "translate_shrink",
    "contraction_budget",
    "flat_increase",
    "second_diff",
    "feasibility",
    "variation",
    "parallel_case",
    "summed_identity",
    "cap_excess",
];

impl Tolerances {
    fn slot(&mut self, key: &str) -> &mut f64 {
        match key {
            "tau_scale" => &mut self.tau_scale,
            "identity" => &mut self.identity,
            "translate_lhs" => &mut self.translate_lhs,
            "translate_shrink" => &mut self.translate_shrink,
            "contraction_budget" => &mut self.contraction_budget,
            "flat_increase" => &mut self.flat_increase,
            "second_diff" => &mut self.second_diff,
            "feasibility" => &mut self.feasibility,
            "variation" => &mut self.variation,
            "parallel_case" => &mut self.parallel_case,
            "summed_identity" => &mut self.summed_identity,
            "cap_excess" => &mut self.cap_excess,
            _ => unreachable!("tolerance keys are validated"),
        }
    }
}

/// A validated scenario with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub manifold: ManifoldSpec,
    pub densities: BTreeMap<String, DensitySpec>,
    pub cost: CostSpec,
    pub ell: EllSpec,
    pub solver: SolverChoice,
    pub experiment: ExperimentSpec,
    pub tolerances: Tolerances,
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

struct Walker {
    errs: Vec<Violation>,
}

impl Walker {
    fn err(&mut self, pointer: &str, message: impl Into<String>) {
        self.errs.push(Violation {
            pointer: pointer.to_string(),
            message: message.into(),
        });
    }

    fn object<'v>(&mut self, v: &'v Value, path: &str, allowed: &[&str]) -> Option<&'v Map<String, Value>> {
        let Some(map) = v.as_object() else {
            self.err(path, "expected an object");
            return None;
        };
        for k in map.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(&format!("{path}/{}", escape(k)), format!("unknown key `{k}`"));
            }
        }
        Some(map)
    }

    fn number(&mut self, map: &Map<String, Value>, path: &str, key: &str, default: Option<f64>, check: impl Fn(f64) -> Option<&'static str>) -> Option<f64> {
        let p = format!("{path}/{key}");
        match map.get(key) {
            None => {
                if default.is_none() {
                    self.err(&p, format!("missing required field `{key}`"));
                }
                default
            }
            Some(v) => match v.as_f64() {
                None => {
                    self.err(&p, "expected a number");
                    None
                }
                Some(x) => match check(x) {
                    Some(msg) => {
                        self.err(&p, msg);
                        None
                    }
                    None => Some(x),
                },
            },
        }
    }

    fn integer(&mut self, map: &Map<String, Value>, path: &str, key: &str, default: Option<u64>, min: u64, max: u64) -> Option<u64> {
        let p = format!("{path}/{key}");
        match map.get(key) {
            None => {
                if default.is_none() {
                    self.err(&p, format!("missing required field `{key}`"));
                }
                default
            }
            Some(v) => match v.as_u64() {
                Some(x) if (min..=max).contains(&x) => Some(x),
                Some(x) => {
                    self.err(&p, format!("must lie in [{min}, {max}], got {x}"));
                    None
                }
                None if v.as_i64().is_some() => {
                    self.err(&p, "must be a nonnegative integer");
                    None
                }
                None => {
                    self.err(&p, "expected an integer");
                    None
                }
            },
        }
    }

    fn string(&mut self, map: &Map<String, Value>, path: &str, key: &str, default: Option<&str>) -> Option<String> {
        let p = format!("{path}/{key}");
        match map.get(key) {
            None => {
                if default.is_none() {
                    self.err(&p, format!("missing required field `{key}`"));
                }
                default.map(str::to_string)
            }
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.err(&p, "expected a string");
                None
            }
        }
    }

    fn numbers(&mut self, map: &Map<String, Value>, path: &str, key: &str, lens: &[usize]) -> Option<Vec<f64>> {
        let p = format!("{path}/{key}");
        let Some(v) = map.get(key) else {
            self.err(&p, format!("missing required field `{key}`"));
            return None;
        };
        let xs: Option<Vec<f64>> = v.as_array().and_then(|a| a.iter().map(Value::as_f64).collect());
        match xs {
            Some(xs) if lens.contains(&xs.len()) => Some(xs),
            _ => {
                let want: Vec<String> = lens.iter().map(|l| l.to_string()).collect();
                self.err(&p, format!("expected an array of {} numbers", want.join(" or ")));
                None
            }
        }
    }

    fn ladder(&mut self, map: &Map<String, Value>, path: &str) -> Option<Vec<u32>> {
        let p = format!("{path}/ladder");
        let Some(v) = map.get("ladder") else {
            return Some(Vec::new());
        };
        let Some(a) = v.as_array() else {
            self.err(&p, "expected an array of resolutions");
            return None;
        };
        let mut out = Vec::new();
        let mut ok = true;
        for (k, x) in a.iter().enumerate() {
            match x.as_u64() {
                Some(n) if n <= u32::MAX as u64 => out.push(n as u32),
                _ => {
                    self.err(&format!("{p}/{k}"), "expected a nonnegative integer");
                    ok = false;
                }
            }
        }
        if ok && out.windows(2).any(|w| w[1] <= w[0]) {
            self.err(&p, "resolutions must be strictly increasing");
            ok = false;
        }
        ok.then_some(out)
    }

    fn manifold(&mut self, v: Option<&Value>) -> Option<ManifoldSpec> {
        let path = "/manifold";
        let Some(v) = v else {
            self.err(path, "missing required field `manifold`");
            return None;
        };
        let kind = v.get("kind").and_then(Value::as_str).unwrap_or("");
        let positive = |x: f64| (!(x > 0.0 && x.is_finite())).then_some("must be positive");
        match kind {
            "sphere" => {
                let map = self.object(v, path, &["kind", "subdivisions", "radius"])?;
                let s = self.integer(map, path, "subdivisions", Some(3), 0, MAX_SUBDIVISIONS as u64);
                let r = self.number(map, path, "radius", Some(1.0), positive);
                Some(ManifoldSpec::Sphere { subdivisions: s? as u32, radius: r? })
            }
            "torus" => {
                let map = self.object(v, path, &["kind", "n", "nx", "ny", "lx", "ly"])?;
                let n = self.integer(map, path, "n", Some(32), 4, 4096);
                // An invalid `n` is already reported; keep defaults quiet.
                let nx = self.integer(map, path, "nx", n.or(Some(32)), 4, 4096);
                let ny = self.integer(map, path, "ny", n.or(Some(32)), 4, 4096);
                let lx = self.number(map, path, "lx", Some(1.0), positive);
                let ly = self.number(map, path, "ly", Some(1.0), positive);
                n?;
                Some(ManifoldSpec::Torus { nx: nx? as usize, ny: ny? as usize, lx: lx?, ly: ly? })
            }
            "mesh" => {
                let map = self.object(v, path, &["kind", "path"])?;
                Some(ManifoldSpec::Mesh { path: self.string(map, path, "path", None)? })
            }
            _ => {
                self.err(&format!("{path}/kind"), "expected one of `sphere`, `torus`, `mesh`");
                None
            }
        }
    }

    fn density(&mut self, v: &Value, path: &str, manifold: Option<&ManifoldSpec>) -> Option<DensitySpec> {
        let ty = v.get("type").and_then(Value::as_str).unwrap_or("");
        let center_lens: &[usize] = match manifold {
            Some(ManifoldSpec::Torus { .. }) => &[2],
            Some(_) => &[3],
            None => &[2, 3],
        };
        let nonneg = |x: f64| (!(x >= 0.0 && x.is_finite())).then_some("must be nonnegative");
        let positive = |x: f64| (!(x > 0.0 && x.is_finite())).then_some("must be positive");
        let is_torus = matches!(manifold, Some(ManifoldSpec::Torus { .. }));
        match ty {
            "uniform" => {
                self.object(v, path, &["type"])?;
                Some(DensitySpec::Uniform)
            }
            "gaussian-bump" => {
                let map = self.object(v, path, &["type", "center", "width", "floor"])?;
                let center = self.numbers(map, path, "center", center_lens);
                let width = self.number(map, path, "width", None, positive);
                let floor = self.number(map, path, "floor", Some(0.0), nonneg);
                Some(DensitySpec::GaussianBump { center: center?, width: width?, floor: floor? })
            }
            "compact-bump" => {
                let map = self.object(v, path, &["type", "center", "radius", "power", "floor"])?;
                let center = self.numbers(map, path, "center", center_lens);
                let radius = self.number(map, path, "radius", None, positive);
                let power = self.number(map, path, "power", Some(4.0), positive);
                let floor = self.number(map, path, "floor", Some(0.0), nonneg);
                Some(DensitySpec::CompactBump { center: center?, radius: radius?, power: power?, floor: floor? })
            }
            "cap" => {
                let map = self.object(v, path, &["type", "axis", "angle", "floor", "power"])?;
                if is_torus {
                    self.err(&format!("{path}/type"), "cap densities need a sphere or mesh");
                }
                let axis = self.numbers(map, path, "axis", &[3]);
                if let Some(a) = &axis {
                    if a.iter().all(|x| *x == 0.0) {
                        self.err(&format!("{path}/axis"), "axis must be nonzero");
                    }
                }
                let angle = self.number(map, path, "angle", None, |x| {
                    (!(x > 0.0 && x < std::f64::consts::PI)).then_some("must lie in (0, π)")
                });
                let floor = self.number(map, path, "floor", Some(0.0), nonneg);
                let power = self.number(map, path, "power", Some(3.0), positive);
                let axis = axis?;
                Some(DensitySpec::Cap { axis: [axis[0], axis[1], axis[2]], angle: angle?, floor: floor?, power: power? })
            }
            "translate-of" => {
                let map = self.object(v, path, &["type", "base", "v"])?;
                if manifold.is_some() && !is_torus {
                    self.err(&format!("{path}/type"), "translate-of densities need the torus");
                }
                let base = self.string(map, path, "base", None);
                let t = self.numbers(map, path, "v", &[2]);
                let t = t?;
                Some(DensitySpec::TranslateOf { base: base?, v: [t[0], t[1]] })
            }
            _ => {
                self.err(
                    &format!("{path}/type"),
                    "expected one of `uniform`, `gaussian-bump`, `compact-bump`, `cap`, `translate-of`",
                );
                None
            }
        }
    }

    fn cost(&mut self, v: Option<&Value>) -> Option<CostSpec> {
        let path = "/cost";
        let Some(v) = v else { return Some(CostSpec::Quadratic) };
        let family = v.get("family").and_then(Value::as_str).unwrap_or("");
        match family {
            "quadratic" | "cosh" | "linear" => {
                self.object(v, path, &["family"])?;
                Some(match family {
                    "quadratic" => CostSpec::Quadratic,
                    "cosh" => CostSpec::Cosh,
                    _ => CostSpec::Linear,
                })
            }
            "power" => {
                let map = self.object(v, path, &["family", "p"])?;
                let p = self.number(map, path, "p", None, |p| (!(p > 1.0 && p.is_finite())).then_some("must exceed 1"));
                Some(CostSpec::Power { p: p? })
            }
            _ => {
                self.err(&format!("{path}/family"), "expected one of `quadratic`, `power`, `cosh`, `linear`");
                None
            }
        }
    }

    fn ell(&mut self, v: Option<&Value>, path: &str) -> Option<EllSpec> {
        let Some(v) = v else { return Some(EllSpec::Quadratic) };
        let family = v.get("family").and_then(Value::as_str).unwrap_or("");
        match family {
            "quadratic" | "linear" => {
                self.object(v, path, &["family"])?;
                Some(if family == "linear" { EllSpec::Linear } else { EllSpec::Quadratic })
            }
            "power" => {
                let map = self.object(v, path, &["family", "p"])?;
                let p = self.number(map, path, "p", None, |p| (!(p > 1.0 && p.is_finite())).then_some("must exceed 1"));
                Some(EllSpec::Power { p: p? })
            }
            "shifted-quadratic" => {
                let map = self.object(v, path, &["family", "delta"])?;
                let d = self.number(map, path, "delta", None, |d| (!(d >= 0.0 && d.is_finite())).then_some("must be nonnegative"));
                Some(EllSpec::ShiftedQuadratic { delta: d? })
            }
            _ => {
                self.err(&format!("{path}/family"), "expected one of `linear`, `power`, `quadratic`, `shifted-quadratic`");
                None
            }
        }
    }

    fn solver(&mut self, v: Option<&Value>) -> Option<SolverChoice> {
        let path = "/solver";
        let Some(v) = v else { return Some(SolverChoice::Exact) };
        match v.get("kind").and_then(Value::as_str).unwrap_or("") {
            "exact" => {
                self.object(v, path, &["kind"])?;
                Some(SolverChoice::Exact)
            }
            "sinkhorn" => {
                let map = self.object(v, path, &["kind", "eps_final"])?;
                let e = self.number(map, path, "eps_final", Some(1e-3), |e| (!(e > 0.0 && e.is_finite())).then_some("must be positive"));
                Some(SolverChoice::Sinkhorn { eps_final: e? })
            }
            _ => {
                self.err(&format!("{path}/kind"), "expected `exact` or `sinkhorn`");
                None
            }
        }
    }

    fn penalty(&mut self, v: Option<&Value>, path: &str) -> Option<Penalty> {
        let Some(v) = v else {
            return Some(Penalty::Entropy { weight: 0.1 });
        };
        let family = v.get("family").and_then(Value::as_str).unwrap_or("");
        let map = self.object(v, path, &["family", "weight"])?;
        let w = self.number(map, path, "weight", Some(0.1), |w| (!(w >= 0.0 && w.is_finite())).then_some("must be nonnegative"));
        match family {
            "entropy" => Some(Penalty::Entropy { weight: w? }),
            "quadratic" => Some(Penalty::Quadratic { weight: w? }),
            _ => {
                self.err(&format!("{path}/family"), "expected `entropy` or `quadratic`");
                None
            }
        }
    }

    fn experiment(&mut self, v: Option<&Value>, manifold: Option<&ManifoldSpec>) -> Option<ExperimentSpec> {
        let path = "/experiment";
        let Some(v) = v else {
            self.err(path, "missing required field `experiment`");
            return None;
        };
        let ty = v.get("type").and_then(Value::as_str).unwrap_or("");
        let positive = |x: f64| (!(x > 0.0 && x.is_finite())).then_some("must be positive");
        let is_torus = matches!(manifold, Some(ManifoldSpec::Torus { .. }));
        let needs_torus = |w: &mut Walker| {
            if manifold.is_some() && !is_torus {
                w.err(&format!("{path}/type"), format!("`{ty}` needs a torus manifold"));
            }
        };
        match ty {
            "fgi" => {
                let map = self.object(v, path, &["type", "mu", "nu", "ladder", "check"])?;
                let mu = self.string(map, path, "mu", Some("mu"));
                let nu = self.string(map, path, "nu", Some("nu"));
                let ladder = self.ladder(map, path);
                let check = match self.string(map, path, "check", Some("inequality")).as_deref() {
                    Some("inequality") => Some(FgiCheck::Inequality),
                    Some("identity") => Some(FgiCheck::Identity),
                    Some("translate") => Some(FgiCheck::Translate),
                    Some(_) => {
                        self.err(&format!("{path}/check"), "expected `inequality`, `identity` or `translate`");
                        None
                    }
                    None => None,
                };
                Some(ExperimentSpec::Fgi { mu: mu?, nu: nu?, ladder: ladder?, check: check? })
            }
            "directional" => {
                let map = self.object(v, path, &["type", "mu", "nu", "ladder", "f"])?;
                needs_torus(self);
                let mu = self.string(map, path, "mu", Some("mu"));
                let nu = self.string(map, path, "nu", Some("nu"));
                let ladder = self.ladder(map, path);
                let f = match map.get("f") {
                    Some(f) => self.ell(Some(f), &format!("{path}/f")).map(Some),
                    None => Some(None),
                };
                Some(ExperimentSpec::Directional { mu: mu?, nu: nu?, ladder: ladder?, f: f? })
            }
            "competitor" => {
                let map = self.object(v, path, &["type", "instances", "v", "f"])?;
                needs_torus(self);
                let instances = self.integer(map, path, "instances", Some(20), 1, 10_000);
                let t = if map.contains_key("v") {
                    self.numbers(map, path, "v", &[2]).map(|t| Some([t[0], t[1]]))
                } else {
                    Some(None)
                };
                let f = match map.get("f") {
                    Some(f) => self.ell(Some(f), &format!("{path}/f")).map(Some),
                    None => Some(None),
                };
                Some(ExperimentSpec::Competitor { instances: instances? as usize, v: t?, f: f? })
            }
            "heatflow" => {
                let map = self.object(v, path, &["type", "mu", "nu", "t_final", "dt"])?;
                let mu = self.string(map, path, "mu", Some("mu"));
                let nu = self.string(map, path, "nu", Some("nu"));
                let t_final = self.number(map, path, "t_final", Some(0.5), |x| (!(x >= 0.0 && x.is_finite())).then_some("must be nonnegative"));
                let dt = self.number(map, path, "dt", Some(0.01), positive);
                Some(ExperimentSpec::Heatflow { mu: mu?, nu: nu?, t_final: t_final?, dt: dt? })
            }
            "bv-projection" => {
                let map = self.object(v, path, &["type", "nu", "cap", "ladder"])?;
                let nu = self.string(map, path, "nu", Some("nu"));
                let cap = self.number(map, path, "cap", Some(1.0), positive);
                let ladder = self.ladder(map, path);
                Some(ExperimentSpec::BvProjection { nu: nu?, cap: cap?, ladder: ladder? })
            }
            "bv-regularized" => {
                let map = self.object(v, path, &["type", "nu", "penalty", "iterations", "tol", "ladder"])?;
                let nu = self.string(map, path, "nu", Some("nu"));
                let penalty = self.penalty(map.get("penalty"), &format!("{path}/penalty"));
                let iterations = self.integer(map, path, "iterations", Some(500), 1, 1_000_000);
                let tol = self.number(map, path, "tol", Some(1e-8), positive);
                let ladder = self.ladder(map, path);
                Some(ExperimentSpec::BvRegularized {
                    nu: nu?,
                    penalty: penalty?,
                    iterations: iterations? as usize,
                    tol: tol?,
                    ladder: ladder?,
                })
            }
            "geometry-lab" => {
                let map = self.object(
                    v,
                    path,
                    &["type", "trials", "sigma", "geodesics", "steps", "fd_step", "min_length", "max_length"],
                )?;
                let trials = self.integer(map, path, "trials", Some(10_000), 1, 100_000_000);
                let sigma = self.number(map, path, "sigma", Some(0.1), |s| (!(s > 0.0 && s < 0.25)).then_some("must lie in (0, 1/4)"));
                let geodesics = self.integer(map, path, "geodesics", Some(50), 1, 1_000_000);
                let steps = self.integer(map, path, "steps", Some(64), 2, 1_000_000);
                let fd_step = self.number(map, path, "fd_step", Some(1e-2), positive);
                let lo = self.number(map, path, "min_length", Some(0.3), positive);
                let hi = self.number(map, path, "max_length", Some(2.5), positive);
                if let (Some(a), Some(b)) = (lo, hi) {
                    if a > b {
                        self.err(&format!("{path}/max_length"), "must be at least `min_length`");
                    }
                    if b >= std::f64::consts::PI {
                        self.err(&format!("{path}/max_length"), "must stay below π");
                    }
                }
                Some(ExperimentSpec::GeometryLab {
                    trials: trials? as usize,
                    sigma: sigma?,
                    geodesics: geodesics? as usize,
                    steps: steps? as usize,
                    fd_step: fd_step?,
                    min_length: lo?,
                    max_length: hi?,
                })
            }
            _ => {
                self.err(
                    &format!("{path}/type"),
                    "expected one of `fgi`, `directional`, `competitor`, `heatflow`, `bv-projection`, `bv-regularized`, `geometry-lab`",
                );
                None
            }
        }
    }

    fn tolerances(&mut self, v: Option<&Value>) -> Option<Tolerances> {
        let mut t = Tolerances::default();
        let Some(v) = v else { return Some(t) };
        let map = self.object(v, "/tolerances", &TOLERANCE_KEYS)?;
        let mut ok = true;
        for key in TOLERANCE_KEYS {
            if map.contains_key(key) {
                match self.number(map, "/tolerances", key, None, |x| (!(x > 0.0 && x.is_finite())).then_some("must be positive")) {
                    Some(x) => *t.slot(key) = x,
                    None => ok = false,
                }
            }
        }
        ok.then_some(t)
    }
}

fn referenced(exp: &ExperimentSpec) -> Vec<(&'static str, &str)> {
    match exp {
        ExperimentSpec::Fgi { mu, nu, .. }
        | ExperimentSpec::Directional { mu, nu, .. }
        | ExperimentSpec::Heatflow { mu, nu, .. } => vec![("mu", mu), ("nu", nu)],
        ExperimentSpec::BvProjection { nu, .. } | ExperimentSpec::BvRegularized { nu, .. } => vec![("nu", nu)],
        _ => Vec::new(),
    }
}

/// Parses and validates a scenario, returning every violation found.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, Vec<Violation>> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        vec![Violation {
            pointer: String::new(),
            message: format!("invalid JSON: {e}"),
        }]
    })?;
    let mut w = Walker { errs: Vec::new() };
    let keys = ["name", "seed", "manifold", "densities", "cost", "ell", "solver", "experiment", "tolerances"];
    let Some(map) = w.object(&root, "", &keys) else {
        return Err(w.errs);
    };
    let name = w.string(map, "", "name", Some("scenario"));
    let seed = w.integer(map, "", "seed", Some(0), 0, u64::MAX);
    let manifold = w.manifold(map.get("manifold"));
    let mut densities = BTreeMap::new();
    let mut dens_ok = true;
    match map.get("densities") {
        None => {}
        Some(Value::Object(d)) => {
            for (k, v) in d {
                match w.density(v, &format!("/densities/{}", escape(k)), manifold.as_ref()) {
                    Some(spec) => {
                        densities.insert(k.clone(), spec);
                    }
                    None => dens_ok = false,
                }
            }
        }
        Some(_) => {
            w.err("/densities", "expected an object of named densities");
            dens_ok = false;
        }
    }
    let cost = w.cost(map.get("cost"));
    let ell = w.ell(map.get("ell"), "/ell");
    let solver = w.solver(map.get("solver"));
    let experiment = w.experiment(map.get("experiment"), manifold.as_ref());
    let tolerances = w.tolerances(map.get("tolerances"));

    if dens_ok {
        for (k, spec) in &densities {
            if let DensitySpec::TranslateOf { base, .. } = spec {
                let p = format!("/densities/{}/base", escape(k));
                let mut seen = vec![k.as_str()];
                let mut cur = base.as_str();
                loop {
                    match densities.get(cur) {
                        None => {
                            w.err(&p, format!("unknown density `{cur}`"));
                            break;
                        }
                        Some(_) if seen.contains(&cur) => {
                            w.err(&p, "translation chain is cyclic");
                            break;
                        }
                        Some(DensitySpec::TranslateOf { base, .. }) => {
                            seen.push(cur);
                            cur = base;
                        }
                        Some(_) => break,
                    }
                }
            }
        }
        if let Some(exp) = &experiment {
            for (field, name) in referenced(exp) {
                if !densities.contains_key(name) {
                    w.err(&format!("/experiment/{field}"), format!("unknown density `{name}`"));
                }
            }
        }
    }
    if let (Some(ExperimentSpec::Fgi { .. }), Some(c)) = (&experiment, &cost) {
        if c.is_linear() {
            w.err("/cost/family", "the gradient inequality needs a strictly convex cost");
        }
    }
    if let (Some(ExperimentSpec::Heatflow { .. }), Some(c)) = (&experiment, &cost) {
        if *c != CostSpec::Quadratic {
            w.err("/cost/family", "the heat-flow experiment uses the quadratic cost");
        }
    }
    if let (Some(ManifoldSpec::Mesh { .. }), Some(exp)) = (&manifold, &experiment) {
        if !ladder_of(exp).is_empty() {
            w.err("/experiment/ladder", "refinement ladders need an analytic manifold");
        }
    }

    if !w.errs.is_empty() {
        return Err(w.errs);
    }
    Ok(ScenarioConfig {
        name: name.expect("validated"),
        seed: seed.expect("validated"),
        manifold: manifold.expect("validated"),
        densities,
        cost: cost.expect("validated"),
        ell: ell.expect("validated"),
        solver: solver.expect("validated"),
        experiment: experiment.expect("validated"),
        tolerances: tolerances.expect("validated"),
    })
}

pub(crate) fn ladder_of(exp: &ExperimentSpec) -> &[u32] {
    match exp {
        ExperimentSpec::Fgi { ladder, .. }
        | ExperimentSpec::Directional { ladder, .. }
        | ExperimentSpec::BvProjection { ladder, .. }
        | ExperimentSpec::BvRegularized { ladder, .. } => ladder,
        _ => &[],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "manifold": {"kind": "torus", "n": 16},
        "densities": {"mu": {"type": "uniform"}, "nu": {"type": "uniform"}},
        "experiment": {"type": "fgi"}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.name, "scenario");
        assert_eq!(c.seed, 0);
        assert_eq!(c.manifold, ManifoldSpec::Torus { nx: 16, ny: 16, lx: 1.0, ly: 1.0 });
        assert_eq!(c.cost, CostSpec::Quadratic);
        assert_eq!(c.ell, EllSpec::Quadratic);
        assert_eq!(c.solver, SolverChoice::Exact);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(
            c.experiment,
            ExperimentSpec::Fgi { mu: "mu".into(), nu: "nu".into(), ladder: vec![], check: FgiCheck::Inequality }
        );
    }

    #[test]
    fn negative_subdivision_is_located() {
        let e = parse_config(r#"{"manifold": {"kind": "sphere", "subdivisions": -1}, "experiment": {"type": "geometry-lab"}}"#)
            .unwrap_err();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].pointer, "/manifold/subdivisions");
    }

    #[test]
    fn missing_cap_axis_is_named() {
        let e = parse_config(
            r#"{"manifold": {"kind": "sphere"}, "densities": {"mu": {"type": "cap", "angle": 1.0}},
                "experiment": {"type": "heatflow", "nu": "mu"}}"#,
        )
        .unwrap_err();
        assert!(e.iter().any(|v| v.pointer == "/densities/mu/axis" && v.message.contains("`axis`")));
    }

    #[test]
    fn all_violations_are_reported() {
        let e = parse_config(
            r#"{"bogus": 1, "manifold": {"kind": "torus", "n": 2, "lx": -1},
                "densities": {"a/b": {"type": "gaussian-bump", "center": [0.5]}},
                "tolerances": {"tau_scale": 0},
                "experiment": {"type": "fgi", "mu": "x", "ladder": [32, 16]}}"#,
        )
        .unwrap_err();
        let pointers: Vec<&str> = e.iter().map(|v| v.pointer.as_str()).collect();
        for p in [
            "/bogus",
            "/manifold/n",
            "/manifold/lx",
            "/densities/a~1b/center",
            "/densities/a~1b/width",
            "/tolerances/tau_scale",
            "/experiment/ladder",
        ] {
            assert!(pointers.contains(&p), "{p} missing from {pointers:?}");
        }
    }

    #[test]
    fn dangling_and_cyclic_references() {
        let e = parse_config(
            r#"{"manifold": {"kind": "torus"},
                "densities": {"a": {"type": "translate-of", "base": "b", "v": [0.1, 0]},
                              "b": {"type": "translate-of", "base": "a", "v": [0.1, 0]}},
                "experiment": {"type": "fgi", "mu": "a", "nu": "c"}}"#,
        )
        .unwrap_err();
        assert!(e.iter().any(|v| v.message.contains("cyclic")));
        assert!(e.iter().any(|v| v.pointer == "/experiment/nu"));
    }

    #[test]
    fn invalid_json() {
        let e = parse_config("{").unwrap_err();
        assert_eq!(e[0].pointer, "");
    }
}
