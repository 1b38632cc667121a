//! Log-domain Sinkhorn iterations with ε-scaling.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::{first_active, DensityField, PotentialPair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    /// Final regularization strength (cost units).
    pub eps_final: f64,
    /// Maximum number of halvings of `ε₀ = max C / 4` before the final level.
    pub schedule: u32,
    /// Iteration cap per ε level.
    pub max_iter: usize,
    /// Stop when `max_i |log(row_i / a_i)| ≤ tol`.
    pub tol: f64,
}

impl SinkhornOptions {
    pub fn new(eps_final: f64, schedule: u32) -> Self {
        SinkhornOptions {
            eps_final,
            schedule,
            max_iter: 50_000,
            tol: 1e-10,
        }
    }

    /// Enough halvings to reach `eps_final` from `max C / 4`.
    pub fn full_schedule(eps_final: f64, max_cost: f64) -> Self {
        let ratio = (max_cost / 4.0 / eps_final).max(1.0);
        Self::new(eps_final, ratio.log2().ceil() as u32)
    }
}

#[derive(Debug, Clone)]
pub struct SinkhornOutput {
    /// Dense plan, rounded onto the exact marginals.
    pub plan: Array2<f64>,
    /// Potentials shifted to be feasible, anchored at the first column with
    /// mass. Inactive vertices get c-transform extensions.
    pub potentials: PotentialPair,
    /// ε levels actually used.
    pub levels: Vec<f64>,
    pub iterations: usize,
}

/// Entropic transport between `mu` and `nu`.
pub fn sinkhorn(mu: &DensityField, nu: &DensityField, c: ArrayView2<f64>, opts: &SinkhornOptions) -> Result<SinkhornOutput> {
    sinkhorn_masses(mu.masses(), nu.masses(), c, opts)
}

pub(crate) fn sinkhorn_masses(a: &[f64], b: &[f64], c: ArrayView2<f64>, opts: &SinkhornOptions) -> Result<SinkhornOutput> {
    let (n, m) = c.dim();
    if a.len() != n || b.len() != m {
        return Err(Error::Argument("sinkhorn: dimension mismatch".into()));
    }
    if !(opts.eps_final > 0.0) {
        return Err(Error::Argument(format!("eps_final must be positive, got {}", opts.eps_final)));
    }
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    if (sa - sb).abs() > super::simplex::BALANCE_TOL {
        return Err(Error::Unbalanced {
            source_mass: sa,
            target_mass: sb,
        });
    }
    let src: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let tgt: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::Argument("transport problem has no mass".into()));
    }
    let (ns, nt) = (src.len(), tgt.len());
    let mut cost = Array2::zeros((ns, nt));
    for (ii, &i) in src.iter().enumerate() {
        for (jj, &j) in tgt.iter().enumerate() {
            cost[[ii, jj]] = c[[i, j]];
        }
    }
    let cost_t = cost.t().as_standard_layout().into_owned();
    let la: Vec<f64> = src.iter().map(|&i| a[i].ln()).collect();
    let lb: Vec<f64> = tgt.iter().map(|&j| b[j].ln()).collect();

    let max_c = cost.iter().fold(0.0f64, |x, &y| x.max(y));
    let eps0 = max_c / 4.0;
    let mut levels = Vec::new();
    for k in 0..opts.schedule {
        let e = eps0 / 2f64.powi(k as i32);
        if e <= opts.eps_final {
            break;
        }
        levels.push(e);
    }
    levels.push(opts.eps_final);

    let mut f = vec![0.0; ns];
    let mut g = vec![0.0; nt];
    let mut total_iter = 0;
    for &eps in &levels {
        let mut converged = false;
        let mut err = f64::INFINITY;
        for _ in 0..opts.max_iter {
            // f_i = −ε log Σ_j b_j exp((g_j − C_ij)/ε), then the same for g.
            f = soft_min(cost.view(), &g, &lb, eps);
            g = soft_min(cost_t.view(), &f, &la, eps);
            total_iter += 1;
            // Columns are exact after the g update; measure the rows.
            let rows = log_marginals(cost.view(), &f, &g, &lb, eps);
            err = rows.iter().fold(0.0, |e, r| e.max(r.abs()));
            if err <= opts.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                eps,
                iterations: opts.max_iter,
                residual: err,
            });
        }
    }
    let eps = opts.eps_final;

    let mut p = Array2::<f64>::zeros((ns, nt));
    p.as_slice_mut()
        .unwrap()
        .par_chunks_mut(nt)
        .enumerate()
        .for_each(|(i, row)| {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (la[i] + lb[j] + (f[i] + g[j] - cost[[i, j]]) / eps).exp();
            }
        });
    let pa: Vec<f64> = src.iter().map(|&i| a[i]).collect();
    let pb: Vec<f64> = tgt.iter().map(|&j| b[j]).collect();
    round_to_marginals(&mut p, &pa, &pb);

    // Feasible shift: u ← u − max violation.
    let viol = (0..ns)
        .into_par_iter()
        .map(|i| {
            (0..nt)
                .map(|j| f[i] + g[j] - cost[[i, j]])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let f: Vec<f64> = f.iter().map(|x| x - viol).collect();
    // Active entries keep the solver's potentials; inactive rows and
    // columns get c-transform extensions.
    let mut phi = super::duals::extend_potentials(&g, &tgt, c).phi;
    for (ii, &i) in src.iter().enumerate() {
        phi[i] = f[ii];
    }
    let mut psi = super::c_transform(&phi, c);
    for (jj, &j) in tgt.iter().enumerate() {
        psi[j] = g[jj];
    }
    let potentials = PotentialPair { phi, psi, anchor: 0 }.anchored_at(first_active(b).expect("mass"));

    let mut plan = Array2::zeros((n, m));
    for (ii, &i) in src.iter().enumerate() {
        for (jj, &j) in tgt.iter().enumerate() {
            plan[[i, j]] = p[[ii, jj]];
        }
    }
    Ok(SinkhornOutput {
        plan,
        potentials,
        levels,
        iterations: total_iter,
    })
}

/// `out_i = −ε log Σ_j exp(lw_j + (h_j − C_ij)/ε)`, rows in parallel, each
/// row reduced sequentially.
fn soft_min(c: ArrayView2<f64>, h: &[f64], lw: &[f64], eps: f64) -> Vec<f64> {
    let (rows, cols) = c.dim();
    let cs = c.as_slice().expect("standard layout");
    (0..rows)
        .into_par_iter()
        .map(|i| {
            let row = &cs[i * cols..(i + 1) * cols];
            let mut mx = f64::NEG_INFINITY;
            for j in 0..cols {
                mx = mx.max(lw[j] + (h[j] - row[j]) / eps);
            }
            let mut s = 0.0;
            for j in 0..cols {
                s += (lw[j] + (h[j] - row[j]) / eps - mx).exp();
            }
            -eps * (mx + s.ln())
        })
        .collect()
}

/// `log Σ_j exp(lb_j + (f_i + g_j − C_ij)/ε)`, i.e. `log(row_i / a_i)`.
fn log_marginals(c: ArrayView2<f64>, f: &[f64], g: &[f64], lb: &[f64], eps: f64) -> Vec<f64> {
    let s = soft_min(c, g, lb, eps);
    s.iter().zip(f).map(|(si, fi)| (fi - si) / eps).collect()
}

/// Two-sided marginal correction: scale rows and columns down to their
/// targets, then add the rank-one deficit `err_r err_cᵀ / |err_r|₁`.
pub(crate) fn round_to_marginals(p: &mut Array2<f64>, a: &[f64], b: &[f64]) {
    let (n, m) = p.dim();
    for i in 0..n {
        let r: f64 = p.row(i).sum();
        if r > a[i] {
            let s = a[i] / r;
            p.row_mut(i).mapv_inplace(|x| x * s);
        }
    }
    for j in 0..m {
        let col: f64 = p.column(j).sum();
        if col > b[j] {
            let s = b[j] / col;
            p.column_mut(j).mapv_inplace(|x| x * s);
        }
    }
    let er: Vec<f64> = (0..n).map(|i| (a[i] - p.row(i).sum()).max(0.0)).collect();
    let ec: Vec<f64> = (0..m).map(|j| (b[j] - p.column(j).sum()).max(0.0)).collect();
    let tot: f64 = er.iter().sum();
    if tot > 0.0 {
        for i in 0..n {
            for j in 0..m {
                p[[i, j]] += er[i] * ec[j] / tot;
            }
        }
    }
}
