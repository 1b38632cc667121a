use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{ladder_of, ExperimentSpec, FgiCheck, ManifoldSpec, ScenarioConfig};
use super::density::build_density;
use crate::error::{Error, Result};
use crate::experiments::{
    bv_estimate_report, contraction_experiment, regularized_min, wasserstein_projection, BvMode,
};
use crate::fgi::{
    competitor_defect, difference_quotient_l1, directional_fgi, fgi_lhs, report_from, solve_on, Axis, EllSpec,
    FgiReport, GradientOperator,
};
use crate::geometry::{
    curvature_algebra_checks, finite_difference_length_variation, first_variation, second_variation_upper,
    tangential_excess, GeometryReport, VariationField,
};
use crate::manifold::{cost_matrix, distance_matrix, read_mesh, Manifold, ManifoldKind, Vec3};
use crate::ot::{solve_exact, DensityField};

/// Process exit codes of a scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExitStatus {
    Pass = 0,
    ToleranceFailure = 2,
    RuntimeError = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// One pass/fail assertion of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value <= bound }
    }

    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, pass: value >= bound }
    }
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Everything an experiment produced, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub experiment: String,
    pub checks: Vec<Check>,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn artifact(&self, name: &str) -> Option<&[u8]> {
        self.artifacts.iter().find(|a| a.name == name).map(|a| a.bytes.as_slice())
    }
}

/// Options of [`run_scenario`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub seed_override: Option<u64>,
    /// Extra entries for the manifest's `versions` map.
    pub versions: BTreeMap<String, String>,
}

/// Result of [`run_scenario`].
#[derive(Debug)]
pub struct RunResult {
    pub status: ExitStatus,
    pub outcome: Option<Outcome>,
    pub error: Option<Error>,
    /// Files written, manifest included.
    pub written: Vec<PathBuf>,
}

/// Pretty-printed JSON with sorted keys and a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let v = serde_json::to_value(value).map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// SHA-256 of the canonical JSON form of the effective configuration.
pub fn config_hash(cfg: &ScenarioConfig) -> Result<String> {
    Ok(hex::encode(Sha256::digest(to_json_bytes(cfg)?)))
}

/// Writes artifacts into `dir`; on failure, files already written are removed.
pub fn write_outputs(artifacts: &[Artifact], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for a in artifacts {
        let p = dir.join(&a.name);
        if let Err(e) = std::fs::write(&p, &a.bytes) {
            remove_all(&written);
            return Err(Error::io(p, e));
        }
        written.push(p);
    }
    Ok(written)
}

fn remove_all(paths: &[PathBuf]) {
    for p in paths {
        let _ = std::fs::remove_file(p);
    }
}

/// Runs a validated scenario: computes, writes artifacts and the manifest,
/// and maps the result onto an exit status. Nothing is left on disk when the
/// run fails with an error.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> RunResult {
    let start = Instant::now();
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed_override {
        cfg.seed = s;
    }
    let computed = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Argument(format!("cannot build thread pool: {e}")))
            .and_then(|pool| pool.install(|| execute(&cfg))),
        None => execute(&cfg),
    };
    let fail = |e: Error| RunResult { status: ExitStatus::RuntimeError, outcome: None, error: Some(e), written: vec![] };
    let outcome = match computed {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let status = if outcome.pass() { ExitStatus::Pass } else { ExitStatus::ToleranceFailure };
    let mut versions = opts.versions.clone();
    versions.insert("fgi-core".into(), env!("CARGO_PKG_VERSION").into());
    let manifest = |hash: String| {
        json!({
            "config_hash": hash,
            "experiment": outcome.experiment,
            "exit_code": status.code(),
            "name": cfg.name,
            "seed": cfg.seed,
            "versions": versions,
            "wall_time_s": start.elapsed().as_secs_f64(),
        })
    };
    let mut artifacts = outcome.artifacts.clone();
    match config_hash(&cfg).and_then(|h| to_json_bytes(&manifest(h))) {
        Ok(bytes) => artifacts.push(Artifact { name: "manifest.json".into(), bytes }),
        Err(e) => return fail(e),
    }
    match write_outputs(&artifacts, &opts.out_dir) {
        Ok(written) => RunResult { status, outcome: Some(outcome), error: None, written },
        Err(e) => fail(e),
    }
}

/// Builds the manifold of a ladder level (`None`: as configured).
pub fn manifold_at(spec: &ManifoldSpec, level: Option<u32>) -> Result<Manifold> {
    match (spec, level) {
        (ManifoldSpec::Sphere { radius, .. }, Some(s)) => Manifold::sphere(s, *radius),
        (ManifoldSpec::Sphere { subdivisions, radius }, None) => Manifold::sphere(*subdivisions, *radius),
        (ManifoldSpec::Torus { lx, ly, .. }, Some(n)) => Manifold::flat_torus(n as usize, n as usize, *lx, *ly),
        (ManifoldSpec::Torus { nx, ny, lx, ly }, None) => Manifold::flat_torus(*nx, *ny, *lx, *ly),
        (ManifoldSpec::Mesh { path }, _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            read_mesh(text.as_bytes())
        }
    }
}

fn levels(cfg: &ScenarioConfig) -> Vec<Option<u32>> {
    let l = ladder_of(&cfg.experiment);
    if l.is_empty() {
        vec![None]
    } else {
        l.iter().map(|&n| Some(n)).collect()
    }
}

fn json_artifact<T: Serialize>(name: &str, value: &T) -> Result<Artifact> {
    Ok(Artifact { name: name.into(), bytes: to_json_bytes(value)? })
}

fn csv_artifact(name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Artifact> {
    let mut bytes = Vec::new();
    write(&mut bytes).map_err(|e| Error::io(name, e))?;
    Ok(Artifact { name: name.into(), bytes })
}

fn tau(cfg: &ScenarioConfig, m: &Manifold) -> f64 {
    cfg.tolerances.tau_scale * m.mean_edge_length()
}

/// Computes an experiment without writing anything.
pub fn execute(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = match &cfg.experiment {
        ExperimentSpec::Fgi { mu, nu, check, .. } => run_fgi(cfg, mu, nu, *check)?,
        ExperimentSpec::Directional { mu, nu, f, .. } => run_directional(cfg, mu, nu, f.unwrap_or(cfg.ell))?,
        ExperimentSpec::Competitor { instances, v, f } => run_competitor(cfg, *instances, *v, f.unwrap_or(cfg.ell))?,
        ExperimentSpec::Heatflow { mu, nu, t_final, dt } => run_heatflow(cfg, mu, nu, *t_final, *dt)?,
        ExperimentSpec::BvProjection { nu, cap, .. } => run_bv_projection(cfg, nu, *cap)?,
        ExperimentSpec::BvRegularized { nu, penalty, iterations, tol, .. } => {
            let mut checks = Vec::new();
            let mut reports = Vec::new();
            for level in levels(cfg) {
                let m = manifold_at(&cfg.manifold, level)?;
                let target = build_density(&cfg.densities, nu, &m)?;
                let c = cost_matrix(&m, &cfg.cost)?;
                let d = distance_matrix(&m)?;
                let r = regularized_min(&m, &target, penalty, c.view(), *iterations, *tol)?;
                let rep = bv_estimate_report(&m, &r.mu_bar, &target, &r.plan, d.view(), BvMode::Contraction, None)?;
                let t = tau(cfg, &m);
                checks.push(Check::at_least(format!("slack >= -tau (N={})", m.len()), rep.slack, -t));
                let mut v = serde_json::to_value(&rep).expect("plain data");
                v["tau"] = json!(t);
                v["iterations"] = json!(r.iterations);
                v["energy"] = json!(r.trace.last().copied().unwrap_or(f64::NAN));
                reports.push(v);
            }
            Outcome { experiment: String::new(), checks, artifacts: vec![json_artifact("bv_report.json", &reports)?] }
        }
        ExperimentSpec::GeometryLab { .. } => run_geometry_lab(cfg)?,
    };
    out.experiment = cfg.experiment.name().into();
    let summary = json!({
        "checks": out.checks,
        "experiment": out.experiment,
        "name": cfg.name,
        "pass": out.pass(),
    });
    out.artifacts.push(json_artifact("summary.json", &summary)?);
    out.artifacts.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

fn run_fgi(cfg: &ScenarioConfig, mu: &str, nu: &str, check: FgiCheck) -> Result<Outcome> {
    let mut reports: Vec<FgiReport> = Vec::new();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut finest = None;
    for level in levels(cfg) {
        let m = manifold_at(&cfg.manifold, level)?;
        let a = build_density(&cfg.densities, mu, &m)?;
        let b = build_density(&cfg.densities, nu, &m)?;
        let data = solve_on(&m, &a, &b, &cfg.cost, cfg.solver)?;
        let grad = GradientOperator::new(&m)?;
        let r = report_from(&m, &grad, &data, &a, &b, &cfg.cost, &cfg.ell, cfg.solver);
        let t = tau(cfg, &m);
        let n = m.len();
        match check {
            FgiCheck::Inequality => checks.push(Check::at_least(format!("slack >= -tau (N={n})"), r.slack, -t)),
            FgiCheck::Identity => {
                let worst = r.lhs.abs().max(r.rhs.abs()).max(r.slack.abs());
                checks.push(Check::at_most(format!("|slack| (N={n})"), worst, cfg.tolerances.identity));
            }
            FgiCheck::Translate => {}
        }
        let mut v = serde_json::to_value(&r).expect("plain data");
        v["tau"] = json!(t);
        rows.push(v);
        reports.push(r);
        finest = Some(data);
    }
    if check == FgiCheck::Translate {
        let last = reports.last().expect("nonempty ladder");
        checks.push(Check::at_most(format!("|lhs| (N={})", last.n), last.lhs.abs(), cfg.tolerances.translate_lhs));
        for w in reports.windows(2) {
            let ratio = w[0].lhs.abs() / w[1].lhs.abs();
            checks.push(Check::at_least(
                format!("|lhs| shrink (N={} -> {})", w[0].n, w[1].n),
                ratio,
                cfg.tolerances.translate_shrink,
            ));
        }
    }
    let data = finest.expect("nonempty ladder");
    let artifacts = vec![
        json_artifact("fgi_report.json", &rows)?,
        csv_artifact("ladder.csv", |w| FgiReport::write_ladder_csv(&reports, w))?,
        csv_artifact("plan.csv", |w| data.plan.write_csv(w))?,
        csv_artifact("potentials.csv", |w| data.potentials.write_csv(w))?,
    ];
    Ok(Outcome { experiment: String::new(), checks, artifacts })
}

fn run_directional(cfg: &ScenarioConfig, mu: &str, nu: &str, f: EllSpec) -> Result<Outcome> {
    f.validate()?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for level in levels(cfg) {
        let m = manifold_at(&cfg.manifold, level)?;
        let a = build_density(&cfg.densities, mu, &m)?;
        let b = build_density(&cfg.densities, nu, &m)?;
        let data = solve_on(&m, &a, &b, &cfg.cost, cfg.solver)?;
        let pot = &data.potentials;
        let vx = directional_fgi(&m, Axis::X, &f, pot, &a, &b)?;
        let vy = directional_fgi(&m, Axis::Y, &f, pot, &a, &b)?;
        let q = EllSpec::Quadratic;
        let summed = directional_fgi(&m, Axis::X, &q, pot, &a, &b)? + directional_fgi(&m, Axis::Y, &q, pot, &a, &b)?;
        let lhs = fgi_lhs(&m, &GradientOperator::new(&m)?, pot, &a, &b, &q);
        let residual = (summed + lhs).abs();
        let t = tau(cfg, &m);
        let n = m.len();
        checks.push(Check::at_most(format!("value x <= tau (N={n})"), vx, t));
        checks.push(Check::at_most(format!("value y <= tau (N={n})"), vy, t));
        checks.push(Check::at_most(format!("summed identity (N={n})"), residual, cfg.tolerances.summed_identity));
        rows.push(json!({
            "n": n,
            "f": f.name(),
            "value_x": vx,
            "value_y": vy,
            "tau": t,
            "quadratic_lhs": lhs,
            "summed_identity_residual": residual,
        }));
    }
    Ok(Outcome { experiment: String::new(), checks, artifacts: vec![json_artifact("directional.json", &rows)?] })
}

fn bump_with_derivative(m: &Manifold, c: [f64; 2], r: f64, floor: f64, lx: f64) -> (Vec<f64>, Vec<f64>) {
    let k = 4;
    let mut rho = Vec::with_capacity(m.len());
    let mut dx = Vec::with_capacity(m.len());
    for p in m.vertices() {
        let d = m.distance_points(p, &Vec3::new(c[0], c[1], 0.0));
        let g = (1.0 - d * d / (r * r)).max(0.0);
        let ox = crate::manifold::min_image(p.x - c[0], lx);
        rho.push(floor + g.powi(k));
        dx.push(if g > 0.0 { k as f64 * g.powi(k - 1) * (-2.0 * ox / (r * r)) } else { 0.0 });
    }
    (rho, dx)
}

fn run_competitor(cfg: &ScenarioConfig, instances: usize, v: Option<[f64; 2]>, f: EllSpec) -> Result<Outcome> {
    f.validate()?;
    let m = manifold_at(&cfg.manifold, None)?;
    let (lx, ly, hx) = match m.kind() {
        ManifoldKind::FlatTorus { lx, ly, nx, .. } => (lx, ly, lx / nx as f64),
        _ => return Err(Error::Config("the competitor experiment needs a torus".into())),
    };
    let v = v.unwrap_or([4.0 * hx, 0.0]);
    let c = cost_matrix(&m, &cfg.cost)?;
    let ts = [4.0 * hx, 2.0 * hx, hx];
    let results = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let mut draw = || {
                let c = [rng.random_range(0.0..lx), rng.random_range(0.0..ly)];
                let r = rng.random_range(0.15..0.3) * lx.min(ly);
                (c, r)
            };
            let ((ca, ra), (cb, rb)) = (draw(), draw());
            let (rho_a, dx_a) = bump_with_derivative(&m, ca, ra, 0.2, lx);
            let (rho_b, _) = bump_with_derivative(&m, cb, rb, 0.2, lx);
            let a = DensityField::normalized(&m, rho_a.clone())?;
            let b = DensityField::normalized(&m, rho_b)?;
            let s = solve_exact(&a, &b, c.view())?;
            let d = competitor_defect(&m, &s.potentials, &s.plan, c.view(), v, &f, &a, &b)?;
            let scale = a.values()[0] / rho_a[0];
            let xf: Vec<f64> = dx_a.iter().map(|x| x * scale).collect();
            let q = difference_quotient_l1(&m, a.values(), &xf, Axis::X, &ts)?;
            Ok((d, q))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let (mut worst_sd, mut worst_feas, mut worst_mono, mut worst_q) = (f64::NEG_INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for (k, (d, q)) in results.into_iter().enumerate() {
        let ratio = q.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        worst_sd = worst_sd.max(d.second_diff);
        worst_feas = worst_feas.max(d.feasibility_residual);
        worst_mono = worst_mono.max(d.mono_residual);
        worst_q = worst_q.max(ratio);
        rows.push(json!({
            "instance": k,
            "second_diff": d.second_diff,
            "feasibility_residual": d.feasibility_residual,
            "mono_residual": d.mono_residual,
            "quotient_errors": q,
        }));
    }
    let tol = &cfg.tolerances;
    let checks = vec![
        Check::at_most("second_diff", worst_sd, tol.second_diff),
        Check::at_most("feasibility_residual", worst_feas, tol.feasibility),
        Check::at_most("mono_residual", worst_mono, 0.0),
        Check { name: "quotient error ratio".into(), value: worst_q, bound: 1.0, pass: worst_q < 1.0 },
    ];
    let report = json!({ "f": f.name(), "v": v, "steps": ts, "instances": rows });
    Ok(Outcome { experiment: String::new(), checks, artifacts: vec![json_artifact("competitor.json", &report)?] })
}

fn run_heatflow(cfg: &ScenarioConfig, mu: &str, nu: &str, t_final: f64, dt: f64) -> Result<Outcome> {
    let m = manifold_at(&cfg.manifold, None)?;
    let a = build_density(&cfg.densities, mu, &m)?;
    let b = build_density(&cfg.densities, nu, &m)?;
    let curve = contraction_experiment(&m, &a, &b, t_final, dt, &cfg.cost)?;
    let k = m.curvature().ricci_lower;
    let check = if k > 0.0 {
        Check::at_most("W2 / bound - 1", curve.max_excess(), cfg.tolerances.contraction_budget)
    } else {
        Check::at_most("max W2 increase", curve.max_increase(), cfg.tolerances.flat_increase)
    };
    Ok(Outcome {
        experiment: String::new(),
        checks: vec![check],
        artifacts: vec![csv_artifact("contraction.csv", |w| curve.write_csv(w))?],
    })
}

fn run_bv_projection(cfg: &ScenarioConfig, nu: &str, cap: f64) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for level in levels(cfg) {
        let m = manifold_at(&cfg.manifold, level)?;
        let target = build_density(&cfg.densities, nu, &m)?;
        let f = vec![cap; m.len()];
        let c = cost_matrix(&m, &cfg.cost)?;
        let d = distance_matrix(&m)?;
        let p = wasserstein_projection(&m, &target, &f, c.view())?;
        let rep = bv_estimate_report(&m, &p.mu_bar, &target, &p.plan, d.view(), BvMode::Projection, Some(&f))?;
        let excess = p.mu_bar.values().iter().map(|x| x - cap).fold(f64::NEG_INFINITY, f64::max);
        let t = tau(cfg, &m);
        let n = m.len();
        checks.push(Check::at_least(format!("slack >= -tau (N={n})"), rep.slack, -t));
        checks.push(Check::at_most(format!("mu_bar - f (N={n})"), excess, cfg.tolerances.cap_excess));
        let mut v = serde_json::to_value(&rep).expect("plain data");
        v["tau"] = json!(t);
        v["cap_excess"] = json!(excess);
        v["cost"] = json!(p.cost);
        rows.push(v);
    }
    Ok(Outcome { experiment: String::new(), checks, artifacts: vec![json_artifact("bv_report.json", &rows)?] })
}

/// Random geodesic and variation field for the variation checks.
fn random_variation(k: usize, seed: u64, steps: usize, len: (f64, f64)) -> Result<(crate::manifold::GeodesicPath, VariationField, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((1u64 << 32) + k as u64);
    let sphere = k.is_multiple_of(2);
    let m = if sphere { Manifold::sphere(0, 1.0)? } else { Manifold::flat_torus(4, 4, 1.0, 1.0)? };
    let p = if sphere {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        Vec3::new(r * a.cos(), r * a.sin(), z)
    } else {
        Vec3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), 0.0)
    };
    let [e1, e2] = m.tangent_basis_at(&p)?;
    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let dir = e1 * th.cos() + e2 * th.sin();
    let l = rng.random_range(len.0..=len.1);
    let path = m.geodesic_from(&p, &dir, l, steps)?;
    let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let xi = VariationField::from_parallel_coeffs(&path, |t| {
        let s = t / l;
        [c[0] + c[1] * s + c[2] * s * s, c[3] + c[4] * s + c[5] * s * s]
    })?;
    Ok((path, xi, if sphere { 1.0 } else { 0.0 }))
}

fn run_geometry_lab(cfg: &ScenarioConfig) -> Result<Outcome> {
    let ExperimentSpec::GeometryLab { trials, sigma, geodesics, steps, fd_step, min_length, max_length } = cfg.experiment
    else {
        unreachable!()
    };
    let m = manifold_at(&cfg.manifold, None)?;
    let mut reports = curvature_algebra_checks(&m, trials, cfg.seed, sigma)?;
    let tol = &cfg.tolerances;
    let (mut first, mut bound, mut exact) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    for k in 0..geodesics {
        let (path, xi, curv) = random_variation(k, cfg.seed, steps, (min_length, max_length))?;
        let fd = finite_difference_length_variation(&path, &xi, fd_step, None)?;
        let upper = second_variation_upper(&path, &xi, curv)?;
        let excess = tangential_excess(&path, &xi);
        first = first.max((first_variation(&path, &xi) - fd.first_fd).abs());
        if excess >= 0.0 {
            bound = bound.max(fd.second_fd - upper);
        }
        let second = upper - excess;
        exact = exact.max((fd.second_fd - second).abs() / second.abs().max(1.0));
    }
    let unit = Manifold::sphere(0, 1.0)?;
    let g = unit.geodesic_between(&Vec3::x(), &Vec3::y(), steps)?;
    let normal = VariationField::from_parallel_coeffs(&g, |_| [0.0, 1.0])?;
    let target = -std::f64::consts::FRAC_PI_2;
    let upper = second_variation_upper(&g, &normal, 1.0)?;
    let fd = finite_difference_length_variation(&g, &normal, fd_step, None)?;
    let parallel = (upper - target).abs().max((fd.second_fd - target).abs());
    let report = |check: &str, trials: usize, value: f64, b: f64| GeometryReport {
        check: check.into(),
        trials,
        max_ratio: value,
        bound: b,
        pass: value <= b,
        seed: cfg.seed,
    };
    let bound = if bound.is_finite() { bound } else { 0.0 };
    reports.push(report("first-variation", geodesics, first, tol.variation));
    reports.push(report("second-variation-bound", geodesics, bound, tol.variation));
    reports.push(report("second-variation-exact", geodesics, exact, tol.variation));
    reports.push(report("normal-parallel-case", 1, parallel, tol.parallel_case));
    let checks = reports
        .iter()
        .map(|r| Check { name: r.check.clone(), value: r.max_ratio, bound: r.bound, pass: r.pass })
        .collect();
    Ok(Outcome { experiment: String::new(), checks, artifacts: vec![json_artifact("geometry.json", &reports)?] })
}
