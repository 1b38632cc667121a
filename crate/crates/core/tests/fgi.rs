use std::f64::consts::PI;

use fgi_core::fgi::{
    check_five_gradients, competitor_defect, difference_quotient_l1, directional_fgi, ell_prime_vec, fgi_lhs,
    solve_on, vertex_gradient, Axis, EllSpec, GradientOperator, SolverChoice,
};
use fgi_core::manifold::{cost_matrix, CostSpec, Manifold, Vec3};
use fgi_core::ot::{solve_exact, DensityField};
use proptest::prelude::*;

fn bump(m: &Manifold, cx: f64, cy: f64, r: f64) -> DensityField {
    let rho = m
        .vertices()
        .iter()
        .map(|p| {
            let d = m.distance_points(p, &Vec3::new(cx, cy, 0.0));
            0.2 + (1.0 - d * d / (r * r)).max(0.0).powi(4)
        })
        .collect();
    DensityField::normalized(m, rho).unwrap()
}

#[test]
fn gradient_of_linear_patch_is_exact() {
    let m = Manifold::flat_torus(16, 16, 1.0, 1.0).unwrap();
    let f: Vec<f64> = m.vertices().iter().map(|p| 3.0 * p.x).collect();
    let g = vertex_gradient(&m, &f).unwrap().coords(&m);
    // Interior of the fundamental domain, away from the periodic seam.
    for iy in 0..16 {
        for ix in 2..14 {
            let i = m.torus_index(ix, iy).unwrap();
            assert!((g[i][0] - 3.0).abs() < 1e-12 && g[i][1].abs() < 1e-12);
        }
    }
    let zero = vertex_gradient(&m, &vec![2.5; m.len()]).unwrap();
    assert!(zero.vectors().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn sphere_height_gradient() {
    let m = Manifold::sphere(3, 1.0).unwrap();
    let f: Vec<f64> = m.vertices().iter().map(|p| p.z).collect();
    let g = vertex_gradient(&m, &f).unwrap();
    for (p, v) in m.vertices().iter().zip(g.vectors()) {
        let sin_theta = (1.0 - p.z * p.z).max(0.0).sqrt();
        assert!((v.norm() - sin_theta).abs() < 2e-2, "at {p:?}: {} vs {sin_theta}", v.norm());
    }
}

#[test]
fn ell_prime_examples() {
    let v = Vec3::new(3.0, 4.0, 0.0);
    assert_eq!(ell_prime_vec(&EllSpec::Quadratic, &v), v);
    let unit = ell_prime_vec(&EllSpec::Linear, &v);
    assert!((unit - Vec3::new(0.6, 0.8, 0.0)).norm() < 1e-15);
    for l in [EllSpec::Quadratic, EllSpec::Linear, EllSpec::Power { p: 3.0 }, EllSpec::ShiftedQuadratic { delta: 0.1 }] {
        assert_eq!(ell_prime_vec(&l, &Vec3::zeros()), Vec3::zeros());
        assert_eq!(l.ell(0.0), 0.0);
    }
}

#[test]
fn identical_measures_give_zero_on_both_sides() {
    let m = Manifold::sphere(2, 1.0).unwrap();
    let mu = DensityField::normalized(&m, m.vertices().iter().map(|p| 1.5 + p.z * p.x).collect()).unwrap();
    for l in [EllSpec::Quadratic, EllSpec::Linear] {
        let r = check_five_gradients(&m, &mu, &mu, &CostSpec::Quadratic, &l, SolverChoice::Exact).unwrap();
        assert!(r.lhs.abs() <= 1e-10 && r.rhs.abs() <= 1e-10 && r.slack.abs() <= 1e-10, "{r:?}");
        assert_eq!(r.slack, r.lhs - r.rhs);
    }
}

#[test]
fn linear_cost_is_rejected() {
    let m = Manifold::flat_torus(4, 4, 1.0, 1.0).unwrap();
    let u = DensityField::uniform(&m);
    assert!(check_five_gradients(&m, &u, &u, &CostSpec::Linear, &EllSpec::Quadratic, SolverChoice::Exact).is_err());
}

#[test]
fn flat_translate_has_zero_right_side() {
    let m = Manifold::flat_torus(16, 16, 1.0, 1.0).unwrap();
    let mu = bump(&m, 0.5, 0.5, 0.25);
    let nu = bump(&m, 0.5625, 0.5, 0.25);
    let r = check_five_gradients(&m, &mu, &nu, &CostSpec::Quadratic, &EllSpec::Quadratic, SolverChoice::Exact).unwrap();
    assert_eq!(r.rhs, 0.0);
    assert_eq!(r.k, 0.0);
}

#[test]
fn directional_examples() {
    let m = Manifold::flat_torus(16, 16, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let mu = bump(&m, 0.4, 0.5, 0.25);
    let s = solve_exact(&mu, &mu, c.view()).unwrap();
    for axis in [Axis::X, Axis::Y] {
        assert_eq!(directional_fgi(&m, axis, &EllSpec::Quadratic, &s.potentials, &mu, &mu).unwrap(), 0.0);
    }

    let nu = bump(&m, 0.6, 0.55, 0.2);
    let data = solve_on(&m, &mu, &nu, &CostSpec::Quadratic, SolverChoice::Exact).unwrap();
    let q = EllSpec::Quadratic;
    let summed = directional_fgi(&m, Axis::X, &q, &data.potentials, &mu, &nu).unwrap()
        + directional_fgi(&m, Axis::Y, &q, &data.potentials, &mu, &nu).unwrap();
    let lhs = fgi_lhs(&m, &GradientOperator::new(&m).unwrap(), &data.potentials, &mu, &nu, &q);
    assert!((summed + lhs).abs() <= 1e-10);
}

#[test]
fn competitor_examples() {
    let m = Manifold::flat_torus(12, 12, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let mu = bump(&m, 0.3, 0.4, 0.3);
    let nu = bump(&m, 0.7, 0.6, 0.25);
    let s = solve_exact(&mu, &nu, c.view()).unwrap();
    let q = EllSpec::Quadratic;
    let zero = competitor_defect(&m, &s.potentials, &s.plan, c.view(), [0.0, 0.0], &q, &mu, &nu).unwrap();
    assert_eq!(zero.second_diff, 0.0);
    assert_eq!(zero.mono_residual, 0.0);
    for k in 1..4 {
        let v = [k as f64 / 12.0, 1.0 / 12.0];
        let d = competitor_defect(&m, &s.potentials, &s.plan, c.view(), v, &q, &mu, &nu).unwrap();
        assert!(d.second_diff <= 1e-10 && d.feasibility_residual <= 1e-8, "{d:?}");
    }
}

#[test]
fn difference_quotient_examples() {
    let m = Manifold::flat_torus(64, 8, 1.0, 1.0).unwrap();
    let h = 1.0 / 64.0;
    let f: Vec<f64> = m.vertices().iter().map(|p| (2.0 * PI * p.x).sin()).collect();
    let xf: Vec<f64> = m.vertices().iter().map(|p| 2.0 * PI * (2.0 * PI * p.x).cos()).collect();
    let e = difference_quotient_l1(&m, &f, &xf, Axis::X, &[4.0 * h, 2.0 * h, h]).unwrap();
    for w in e.windows(2) {
        let r = w[1] / w[0];
        assert!((r - 0.5).abs() < 0.05, "{e:?}");
    }
    let across = difference_quotient_l1(&m, &f, &vec![0.0; m.len()], Axis::Y, &[4.0 / 8.0, 1.0 / 8.0]).unwrap();
    assert_eq!(across, vec![0.0, 0.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lhs_ignores_joint_potential_shift(shift in -5.0f64..5.0, cx in 0.0f64..1.0, cy in 0.0f64..1.0) {
        let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
        let mu = bump(&m, 0.5, 0.5, 0.3);
        let nu = bump(&m, cx, cy, 0.3);
        let data = solve_on(&m, &mu, &nu, &CostSpec::Quadratic, SolverChoice::Exact).unwrap();
        let grad = GradientOperator::new(&m).unwrap();
        let l = EllSpec::Power { p: 3.0 };
        let base = fgi_lhs(&m, &grad, &data.potentials, &mu, &nu, &l);
        let mut moved = data.potentials.clone();
        moved.phi.iter_mut().for_each(|x| *x += shift);
        moved.psi.iter_mut().for_each(|x| *x -= shift);
        let again = fgi_lhs(&m, &grad, &moved, &mu, &nu, &l);
        prop_assert!((base - again).abs() <= 1e-12);
    }

    #[test]
    fn ell_prime_is_directionally_homogeneous(
        x in -3.0f64..3.0, y in -3.0f64..3.0, c in 0.01f64..10.0, p in 1.1f64..4.0, delta in 0.0f64..1.0,
    ) {
        let v = Vec3::new(x, y, 0.0);
        prop_assume!(v.norm() > 1e-6);
        for l in [EllSpec::Quadratic, EllSpec::Linear, EllSpec::Power { p }, EllSpec::ShiftedQuadratic { delta }] {
            let a = ell_prime_vec(&l, &v);
            let b = ell_prime_vec(&l, &(v * c));
            prop_assert!(a.cross(&v).norm() <= 1e-12 * (1.0 + a.norm() * v.norm()));
            prop_assert!(b.cross(&v).norm() <= 1e-12 * (1.0 + b.norm() * v.norm()) * c);
            prop_assert!(a.dot(&v) >= 0.0);
        }
    }

    #[test]
    fn profile_derivative_is_monotone(p in 1.1f64..4.0, delta in 0.0f64..1.0, s in 0.0f64..5.0, t in 0.0f64..5.0) {
        for l in [EllSpec::Quadratic, EllSpec::Linear, EllSpec::Power { p }, EllSpec::ShiftedQuadratic { delta }] {
            let (lo, hi) = if s < t { (s, t) } else { (t, s) };
            prop_assert!(l.ell_prime(lo) >= 0.0);
            prop_assert!(l.ell_prime(lo) <= l.ell_prime(hi));
        }
    }
}
