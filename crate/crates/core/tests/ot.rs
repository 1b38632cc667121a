use fgi_core::manifold::{cost_matrix, CostSpec, Manifold};
use fgi_core::ot::{
    c_transform, c_transform_rows, duality_gap, recover_map, sinkhorn, solve_exact, solve_transport, support_slackness,
    DensityField, SimplexOptions, SinkhornOptions, TransportPlan,
};
use nalgebra::{DMatrix, DVector};
use ndarray::{array, Array2};
use proptest::prelude::*;

/// Minimum cost over the basic feasible solutions of the transportation
/// polytope, found by trying every choice of `n + m − 1` basic cells.
fn brute_force_cost(a: &[f64], b: &[f64], c: &Array2<f64>) -> f64 {
    let (n, m) = c.dim();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let k = n + m - 1;
    let mut best = f64::INFINITY;
    let mut pick = (0..k).collect::<Vec<_>>();
    loop {
        // Row constraints plus all but the last column constraint.
        let mut sys = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for (col, &cell) in pick.iter().enumerate() {
            let (i, j) = cells[cell];
            sys[(i, col)] = 1.0;
            if j < m - 1 {
                sys[(n + j, col)] = 1.0;
            }
        }
        for i in 0..n {
            rhs[i] = a[i];
        }
        for j in 0..m - 1 {
            rhs[n + j] = b[j];
        }
        if let Some(x) = sys.clone().lu().solve(&rhs) {
            if (&sys * &x - &rhs).norm() < 1e-12 && x.iter().all(|v| *v >= -1e-12) {
                let cost: f64 = pick.iter().zip(x.iter()).map(|(&cell, v)| v * c[cells[cell]]).sum();
                best = best.min(cost);
            }
        }
        // Next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < cells.len() - k + i {
                pick[i] += 1;
                for t in i + 1..k {
                    pick[t] = pick[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn line_instance() -> (Vec<f64>, Vec<f64>, Array2<f64>) {
    (vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], array![[0.0, 1.0, 4.0], [1.0, 0.0, 1.0], [4.0, 1.0, 0.0]])
}

#[test]
fn three_point_line_matches_brute_force() {
    let (a, b, c) = line_instance();
    let oracle = brute_force_cost(&a, &b, &c);
    assert!((oracle - 1.0).abs() < 1e-12);
    let s = solve_transport(&a, &b, c.view(), &SimplexOptions::default()).unwrap();
    assert!((s.cost - oracle).abs() < 1e-12);
    let p = s.plan.to_dense();
    assert!((p[[0, 1]] - 0.5).abs() < 1e-12 && (p[[1, 2]] - 0.5).abs() < 1e-12);
}

#[test]
fn identical_measures_cost_nothing() {
    let m = Manifold::flat_torus(4, 4, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let rho: Vec<f64> = (0..16).map(|i| 1.0 + (i % 3) as f64).collect();
    let mu = DensityField::normalized(&m, rho).unwrap();
    let s = solve_exact(&mu, &mu, c.view()).unwrap();
    assert_eq!(s.cost, 0.0);
    for &(i, j, _) in s.plan.entries() {
        assert_eq!(i, j);
    }
    for i in 0..16 {
        assert!((s.potentials.phi[i] + s.potentials.psi[i]).abs() < 1e-12);
    }
}

#[test]
fn single_pair_is_forced() {
    let c = array![[2.5]];
    let s = solve_transport(&[1.0], &[1.0], c.view(), &SimplexOptions::default()).unwrap();
    assert_eq!(s.cost, 2.5);
    assert_eq!(s.plan.entries(), &[(0, 0, 1.0)]);
}

#[test]
fn sinkhorn_large_eps_gives_product_plan() {
    let m = Manifold::flat_torus(4, 4, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let mu = DensityField::normalized(&m, (0..16).map(|i| 1.0 + i as f64).collect()).unwrap();
    let nu = DensityField::normalized(&m, (0..16).map(|i| 17.0 - i as f64).collect()).unwrap();
    let max_c = c.iter().cloned().fold(0.0, f64::max);
    let out = sinkhorn(&mu, &nu, c.view(), &SinkhornOptions::new(1e4 * max_c, 0)).unwrap();
    let mut tv = 0.0;
    for i in 0..16 {
        for j in 0..16 {
            tv += (out.plan[[i, j]] - mu.masses()[i] * nu.masses()[j]).abs();
        }
    }
    assert!(0.5 * tv < 1e-3, "tv {tv}");
}

#[test]
fn sinkhorn_three_point_cost() {
    let (a, b, c) = line_instance();
    let m = Manifold::flat_torus(4, 4, 1.0, 1.0).unwrap();
    // Sinkhorn takes densities; embed the instance in the first three vertices.
    let pad = |x: &[f64]| {
        let mut v = vec![0.0; 16];
        v[..3].copy_from_slice(x);
        DensityField::from_masses(&m, v).unwrap()
    };
    let mut big = Array2::from_elem((16, 16), 10.0);
    for i in 0..3 {
        for j in 0..3 {
            big[[i, j]] = c[[i, j]];
        }
    }
    let out = sinkhorn(&pad(&a), &pad(&b), big.view(), &SinkhornOptions::full_schedule(1e-4, 4.0)).unwrap();
    let cost: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| out.plan[[i, j]] * c[[i, j]]).sum();
    assert!((cost - 1.0).abs() < 1e-3, "cost {cost}");
}

#[test]
fn sinkhorn_symmetric_input_gives_symmetric_plan() {
    let m = Manifold::flat_torus(4, 4, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let mu = DensityField::normalized(&m, (0..16).map(|i| 1.0 + (i % 5) as f64).collect()).unwrap();
    let out = sinkhorn(&mu, &mu, c.view(), &SinkhornOptions::new(1e-2, 4)).unwrap();
    for i in 0..16 {
        for j in 0..16 {
            assert!((out.plan[[i, j]] - out.plan[[j, i]]).abs() < 1e-9);
        }
    }
    let shift = out.potentials.phi[0] - out.potentials.psi[0];
    for i in 0..16 {
        assert!((out.potentials.phi[i] - out.potentials.psi[i] - shift).abs() < 1e-6);
    }
}

#[test]
fn sinkhorn_slackness_shrinks_with_eps() {
    let m = Manifold::flat_torus(6, 6, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let mu = DensityField::normalized(&m, (0..36).map(|i| 1.0 + (i % 7) as f64).collect()).unwrap();
    let nu = DensityField::normalized(&m, (0..36).map(|i| 1.0 + (i % 4) as f64).collect()).unwrap();
    let exact = solve_exact(&mu, &nu, c.view()).unwrap();
    let mut costs = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let out = sinkhorn(&mu, &nu, c.view(), &SinkhornOptions::full_schedule(eps, 0.5)).unwrap();
        let plan = TransportPlan::from_dense(out.plan.view()).unwrap();
        costs.push(plan.cost(c.view()) - exact.cost);
    }
    assert!(costs[0] > costs[1] && costs[1] > costs[2] && costs[2] >= -1e-12, "{costs:?}");
}

#[test]
fn c_transform_examples() {
    let (_, _, c) = line_instance();
    assert_eq!(c_transform(&[0.0; 3], c.view()), vec![0.0; 3]);
    let chi = [0.3, -1.2, 2.0];
    let once = c_transform(&chi, c.view());
    let back = c_transform_rows(&once, c.view());
    let again = c_transform(&back, c.view());
    assert_eq!(again, once);
}

#[test]
fn exact_potentials_are_c_transforms_on_support() {
    let m = Manifold::sphere(1, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let mu = DensityField::normalized(&m, m.vertices().iter().map(|p| 1.5 + p.z).collect()).unwrap();
    let nu = DensityField::normalized(&m, m.vertices().iter().map(|p| 1.5 + p.x).collect()).unwrap();
    let s = solve_exact(&mu, &nu, c.view()).unwrap();
    let psi_c = c_transform(&s.potentials.phi, c.view());
    for ((pc, psi), mass) in psi_c.iter().zip(&s.potentials.psi).zip(nu.masses()) {
        if *mass > 0.0 {
            assert!((pc - psi).abs() < 1e-8);
        }
    }
}

#[test]
fn duality_gap_examples() {
    let m = Manifold::flat_torus(5, 5, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let mu = DensityField::normalized(&m, (0..25).map(|i| 1.0 + (i % 3) as f64).collect()).unwrap();
    let nu = DensityField::normalized(&m, (0..25).map(|i| 1.0 + (i % 4) as f64).collect()).unwrap();
    let s = solve_exact(&mu, &nu, c.view()).unwrap();
    let gap = duality_gap(&s.plan, &s.potentials, c.view(), &mu, &nu).unwrap();
    assert!(gap.abs() <= 1e-9 * s.cost.abs().max(1.0));

    let mut shifted = s.potentials.clone();
    shifted.phi.iter_mut().for_each(|x| *x += 0.7);
    shifted.psi.iter_mut().for_each(|x| *x -= 0.7);
    let g2 = duality_gap(&s.plan, &shifted, c.view(), &mu, &nu).unwrap();
    assert!((g2 - gap).abs() < 1e-12);

    let mut lowered = s.potentials.clone();
    for j in 0..25 {
        if nu.masses()[j] > 0.0 {
            lowered.psi[j] -= 1.0;
        }
    }
    let g3 = duality_gap(&s.plan, &lowered, c.view(), &mu, &nu).unwrap();
    let expected: f64 = nu.masses().iter().sum();
    assert!((g3 - gap - expected).abs() < 1e-12);

    assert!(support_slackness(&s.plan, &s.potentials, c.view()) <= 1e-8);
    let bad = TransportPlan::from_entries(25, 25, vec![(0, 12, 1.0)]).unwrap();
    assert!(support_slackness(&bad, &s.potentials, c.view()) > 0.0);
}

#[test]
fn identical_measures_recover_identity_map() {
    let m = Manifold::flat_torus(8, 8, 1.0, 1.0).unwrap();
    let c = cost_matrix(&m, &CostSpec::Quadratic).unwrap();
    let mu = DensityField::normalized(&m, (0..64).map(|i| 1.0 + (i % 5) as f64).collect()).unwrap();
    let s = solve_exact(&mu, &mu, c.view()).unwrap();
    let map = recover_map(&s.potentials, &m, &CostSpec::Quadratic, &mu).unwrap();
    for (i, t) in map.iter().enumerate() {
        let t = t.expect("defined on the support");
        assert!(m.distance_points(&t, &m.vertex(i)) < 1e-9);
    }
}

fn random_instance(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Array2<f64>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let mut a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    a.iter_mut().for_each(|x| *x /= sa);
    b.iter_mut().for_each(|x| *x /= sb);
    let d = b.iter().sum::<f64>() - 1.0;
    b[0] -= d;
    let d = a.iter().sum::<f64>() - 1.0;
    a[0] -= d;
    let c = Array2::from_shape_fn((n, n), |(i, j)| {
        let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
        0.5 * (dx * dx + dy * dy)
    });
    (a, b, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strong_duality_and_exact_marginals(n in 2usize..40, seed in any::<u64>()) {
        let (a, b, c) = random_instance(n, seed);
        let s = solve_transport(&a, &b, c.view(), &SimplexOptions::default()).unwrap();
        prop_assert!(s.plan.marginal_error(&a, &b) <= 1e-10);
        let dual = s.potentials.dual_value(&a, &b);
        prop_assert!((s.cost - dual).abs() <= 1e-9 * s.cost.abs().max(1e-12) + 1e-15);
        prop_assert!(s.potentials.max_violation(c.view()).2 <= 1e-9);
    }

    #[test]
    fn small_instances_match_brute_force(n in 2usize..4, seed in any::<u64>()) {
        let (a, b, c) = random_instance(n, seed);
        let s = solve_transport(&a, &b, c.view(), &SimplexOptions::default()).unwrap();
        let oracle = brute_force_cost(&a, &b, &c);
        prop_assert!((s.cost - oracle).abs() <= 1e-12);
    }

    #[test]
    fn c_transform_is_idempotent(chi in proptest::collection::vec(-2.0f64..2.0, 3)) {
        let (_, _, c) = line_instance();
        let once = c_transform(&chi, c.view());
        let again = c_transform(&c_transform_rows(&once, c.view()), c.view());
        // Exact up to the rounding of `C − (C − x)`.
        for (x, y) in again.iter().zip(&once) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}
