//! Basis-independent dual potentials for an optimal transport plan.

use ndarray::ArrayView2;

use super::PotentialPair;

/// Plan entries below this are treated as rounding residue when building
/// the residual graph.
const POSITIVE_FLOW: f64 = 1e-14;

/// Shortest-path potentials of the residual graph of an optimal plan.
///
/// The residual graph has a forward arc `i → j` of length `C_ij` for every
/// pair and a backward arc `j → i` of length `−C_ij` wherever the plan is
/// positive. With a virtual source joined to every node by zero-length arcs,
/// the distances `p` give `φ_i = −p_i`, `ψ_j = p_j`: feasible, tight on the
/// support, and determined by the support alone rather than by the simplex
/// basis. Dijkstra runs on lengths reduced by the simplex potentials `pi`.
pub(crate) fn canonical_duals(
    ns: usize,
    nt: usize,
    cost: &[f64],
    arcs: &[(usize, usize, f64)],
    pi: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let nodes = ns + nt;
    let mut back: Vec<Vec<usize>> = vec![Vec::new(); nt];
    for &(i, j, f) in arcs {
        if f > POSITIVE_FLOW {
            back[j].push(i);
        }
    }
    let top = pi[..nodes].iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let mut dist: Vec<f64> = pi[..nodes].iter().map(|&p| top - p).collect();
    let mut done = vec![false; nodes];
    for _ in 0..nodes {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for (v, &d) in dist.iter().enumerate() {
            if !done[v] && d < best {
                best = d;
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        if u < ns {
            let row = &cost[u * nt..(u + 1) * nt];
            for (j, &c) in row.iter().enumerate() {
                let v = ns + j;
                if !done[v] {
                    let w = (c + pi[u] - pi[v]).max(0.0);
                    if best + w < dist[v] {
                        dist[v] = best + w;
                    }
                }
            }
        } else {
            let j = u - ns;
            for &i in &back[j] {
                if !done[i] {
                    let w = (-cost[i * nt + j] + pi[u] - pi[i]).max(0.0);
                    if best + w < dist[i] {
                        dist[i] = best + w;
                    }
                }
            }
        }
    }
    let p: Vec<f64> = dist.iter().zip(pi).map(|(d, q)| d - top + q).collect();
    let phi = p[..ns].iter().map(|x| -x).collect();
    let psi = p[ns..].to_vec();
    (phi, psi)
}

/// Extends potentials known on active columns to the full index sets:
/// `φ = (ψ_active)ᶜ` over every row, then `ψ = φᶜ` over every column. On
/// active rows and columns this reproduces the input values, since every
/// active index carries a tight support pair.
pub(crate) fn extend_potentials(psi_act: &[f64], tgt: &[usize], c: ArrayView2<f64>) -> PotentialPair {
    let (n, m) = c.dim();
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            tgt.iter()
                .zip(psi_act)
                .map(|(&j, q)| c[[i, j]] - q)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let psi: Vec<f64> = (0..m)
        .map(|j| {
            phi.iter()
                .enumerate()
                .map(|(i, p)| c[[i, j]] - p)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    PotentialPair { phi, psi, anchor: 0 }
}
