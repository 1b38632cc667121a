use std::f64::consts::PI;

use fgi_core::experiments::{
    bv_estimate_report, bv_norm, contraction_experiment, heat_step, regularized_energy, regularized_min,
    wasserstein_projection, BvMode, HeatOperator, Penalty,
};
use fgi_core::manifold::{cost_matrix, distance_matrix, CostSpec, Manifold, Vec3};
use fgi_core::ot::{support_slackness, DensityField};
use fgi_core::Error;
use ndarray::Array2;
use proptest::prelude::*;

fn cap(m: &Manifold, axis: Vec3) -> DensityField {
    let a = axis.normalize();
    let rho = m
        .vertices()
        .iter()
        .map(|p| 0.2 + ((p.normalize().dot(&a) - 1f64.cos()) / (1.0 - 1f64.cos())).max(0.0).powi(3))
        .collect();
    DensityField::normalized(m, rho).unwrap()
}

fn tall_bump(m: &Manifold, l: f64) -> DensityField {
    let r = 1.0 / PI.sqrt();
    let rho = m
        .vertices()
        .iter()
        .map(|p| {
            let d = m.distance_points(p, &Vec3::new(l / 2.0, l / 2.0, 0.0));
            (1.0 - d * d / (r * r)).max(0.0).powi(2)
        })
        .collect();
    DensityField::normalized(m, rho).unwrap()
}

#[test]
fn heat_step_examples() {
    let m = Manifold::sphere(2, 1.0).unwrap();
    let h = HeatOperator::new(&m, 0.01).unwrap();
    let u = DensityField::uniform(&m);
    let next = heat_step(&h, &u).unwrap();
    assert!(next.values().iter().zip(u.values()).all(|(a, b)| (a - b).abs() < 1e-12));

    let mut rho = cap(&m, Vec3::z());
    let mut sup = rho.values().iter().cloned().fold(0.0, f64::max);
    for _ in 0..10 {
        rho = heat_step(&h, &rho).unwrap();
        let mass: f64 = rho.masses().iter().sum();
        assert!((mass - 1.0).abs() <= 1e-12);
        let s = rho.values().iter().cloned().fold(0.0, f64::max);
        assert!(s < sup);
        sup = s;
    }
}

#[test]
fn identical_flows_stay_together() {
    let m = Manifold::sphere(1, 1.0).unwrap();
    let mu = cap(&m, Vec3::z());
    let curve = contraction_experiment(&m, &mu, &mu, 0.1, 0.02, &CostSpec::Quadratic).unwrap();
    assert!(curve.points.iter().all(|p| p[1] == 0.0));
    let mut csv = Vec::new();
    curve.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,w2,bound\n"));
    let ts: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn flat_flow_is_non_expansive() {
    let m = Manifold::flat_torus(16, 16, 1.0, 1.0).unwrap();
    let bump = |cx: f64, cy: f64| {
        let rho = m
            .vertices()
            .iter()
            .map(|p| {
                let d = m.distance_points(p, &Vec3::new(cx, cy, 0.0));
                0.2 + (1.0 - d * d / 0.04).max(0.0).powi(4)
            })
            .collect();
        DensityField::normalized(&m, rho).unwrap()
    };
    let curve = contraction_experiment(&m, &bump(0.5, 0.5), &bump(0.7, 0.4), 0.1, 0.01, &CostSpec::Quadratic).unwrap();
    assert!(curve.max_increase() <= 1e-6 + 5e-3);
}

#[test]
fn bv_norm_examples() {
    let m = Manifold::flat_torus(64, 64, 1.0, 1.0).unwrap();
    assert_eq!(bv_norm(&m, &vec![1.0; m.len()]).unwrap(), 0.0);
    let wave = |amp: f64| -> Vec<f64> { m.vertices().iter().map(|p| 1.0 + amp * (2.0 * PI * p.x).sin()).collect() };
    // ∫|∂ₓ(1 + ½ sin 2πx)| = π ∫₀¹ |cos 2πx| dx = 2.
    let v = bv_norm(&m, &wave(0.5)).unwrap();
    assert!((v - 2.0).abs() / 2.0 < 0.03, "{v}");
    let v2 = bv_norm(&m, &wave(1.0)).unwrap();
    assert!((v2 - 2.0 * v).abs() < 1e-12);
}

#[test]
fn projection_of_feasible_target_is_itself() {
    let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let nu = DensityField::normalized(&m, (0..64).map(|i| 1.0 + (i % 3) as f64).collect()).unwrap();
    let f: Vec<f64> = nu.values().iter().map(|x| x + 0.1).collect();
    let p = wasserstein_projection(&m, &nu, &f, c.view()).unwrap();
    assert_eq!(p.cost, 0.0);
    assert!(p.mu_bar.tv_distance(&nu) < 1e-12);
}

#[test]
fn tall_bump_projection_saturates_the_cap() {
    let m = Manifold::flat_torus(16, 16, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let nu = tall_bump(&m, 1.0);
    let f = vec![1.0; m.len()];
    let p = wasserstein_projection(&m, &nu, &f, c.view()).unwrap();
    assert!(p.mu_bar.values().iter().all(|x| *x <= 1.0 + 1e-10));
    let saturated = p.mu_bar.values().iter().filter(|x| **x > 1.0 - 1e-10).count();
    assert!(saturated > 0);
    // Complementary slackness on the capacitated flow, with the slack sink as
    // the extra zero-cost column.
    let n = m.len();
    let ext = Array2::from_shape_fn((n, n + 1), |(i, j)| if j < n { c[[i, j]] } else { 0.0 });
    assert!(support_slackness(&p.plan, &p.potentials, ext.view()) <= 1e-8);
    assert!(p.potentials.max_violation(ext.view()).2 <= 1e-9);
    let supply: f64 = p.potentials.phi.iter().zip(m.weights()).map(|(x, w)| x * w).sum();
    let mut demand: f64 = p.potentials.psi[..n].iter().zip(nu.masses()).map(|(x, w)| x * w).sum();
    demand += p.potentials.psi[n] * (f.iter().zip(m.weights()).map(|(f, w)| f * w).sum::<f64>() - 1.0);
    assert!((p.cost - supply - demand).abs() <= 1e-9 * p.cost.max(1e-12));
}

#[test]
fn insufficient_cap_is_infeasible() {
    let m = Manifold::flat_torus(4, 4, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let r = wasserstein_projection(&m, &DensityField::uniform(&m), &[0.5; 16], c.view());
    assert!(matches!(r, Err(Error::Infeasible(_))));
}

#[test]
fn uniform_target_has_zero_slack() {
    for m in [Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap(), Manifold::sphere(1, 1.0).unwrap()] {
        let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
        let d = distance_matrix(&m).unwrap();
        let nu = DensityField::uniform(&m);
        let f = vec![2.0 / m.total_weight(); m.len()];
        let p = wasserstein_projection(&m, &nu, &f, c.view()).unwrap();
        let r = bv_estimate_report(&m, &p.mu_bar, &nu, &p.plan, d.view(), BvMode::Projection, Some(&f)).unwrap();
        assert_eq!(r.slack, 0.0);
        let g = regularized_min(&m, &nu, &Penalty::Entropy { weight: 0.1 }, c.view(), 50, 1e-10).unwrap();
        let r = bv_estimate_report(&m, &g.mu_bar, &nu, &g.plan, d.view(), BvMode::Contraction, None).unwrap();
        assert_eq!(r.slack, 0.0);
    }
}

#[test]
fn regularized_minimizer_beats_the_interpolation_family() {
    let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let nu = tall_bump(&m, 1.0);
    let eta = Penalty::Quadratic { weight: 0.05 };
    let r = regularized_min(&m, &nu, &eta, c.view(), 2000, 1e-12).unwrap();
    let final_energy = *r.trace.last().unwrap();
    for w in r.trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-10);
    }
    let u = DensityField::uniform(&m);
    let best = (0..=100)
        .map(|k| {
            let lam = k as f64 / 100.0;
            let rho = nu.values().iter().zip(u.values()).map(|(a, b)| (1.0 - lam) * a + lam * b).collect();
            let mu = DensityField::normalized(&m, rho).unwrap();
            regularized_energy(&m, &mu, &nu, &eta, c.view()).unwrap().0
        })
        .fold(f64::INFINITY, f64::min);
    assert!(final_energy <= best + 1e-4, "minimizer {final_energy} vs family {best}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heat_operator_invariants(n in 4usize..12, dt in 0.001f64..0.1, seed in 0u64..1000) {
        let m = Manifold::flat_torus(n, n + 1, 1.0, 1.3).unwrap();
        let h = HeatOperator::new(&m, dt).unwrap();
        for i in 0..m.len() {
            let s: f64 = h.stiffness_row(i).iter().map(|e| e.1).sum();
            prop_assert!(s.abs() <= 1e-12);
        }
        let rho: Vec<f64> = (0..m.len()).map(|i| 1.0 + ((i as u64 * 2654435761 + seed) % 97) as f64 / 10.0).collect();
        let mu = DensityField::normalized(&m, rho).unwrap();
        let next = heat_step(&h, &mu).unwrap();
        let mass: f64 = next.masses().iter().sum();
        prop_assert!((mass - 1.0).abs() <= 1e-12);
    }
}
