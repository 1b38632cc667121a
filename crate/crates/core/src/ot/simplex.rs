//! Exact transportation solver: primal network simplex on the complete
//! bipartite graph, with an artificial root and strongly feasible spanning
//! trees.

use ndarray::ArrayView2;

use super::duals::{canonical_duals, extend_potentials};
use super::{first_active, DensityField, PotentialPair, TransportPlan};
use crate::error::{Error, Result};

/// Tolerance on `Σ a − Σ b`.
pub const BALANCE_TOL: f64 = 1e-10;

/// Entering-arc rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pricing {
    /// Most negative reduced cost within consecutive blocks of about
    /// `√(arcs)` arcs, resuming where the last search stopped.
    #[default]
    BlockSearch,
    /// Lowest-index arc with negative reduced cost.
    Bland,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimplexOptions {
    pub pricing: Pricing,
    /// Pivot budget; defaults to `50 · arcs + 10⁶`.
    pub max_pivots: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub plan: TransportPlan,
    pub potentials: PotentialPair,
    /// `⟨C, γ⟩`.
    pub cost: f64,
    pub pivots: usize,
}

/// Solves the transport problem between two vertex measures.
pub fn solve_exact(mu: &DensityField, nu: &DensityField, c: ArrayView2<f64>) -> Result<TransportSolution> {
    solve_transport(mu.masses(), nu.masses(), c, &SimplexOptions::default())
}

/// Solves `min ⟨C, γ⟩` over couplings of the masses `a` (rows) and `b`
/// (columns).
///
/// Zero-mass rows and columns are removed before solving. Returned
/// potentials are defined on every row and column: on the active set they
/// are the largest-`ψ` dual solution compatible with the optimal plan's
/// support, and they are extended to inactive vertices by c-transforms, so
/// `φ_i + ψ_j ≤ C_ij` holds for all pairs. `ψ` is anchored to zero at the
/// first column with mass.
pub fn solve_transport(a: &[f64], b: &[f64], c: ArrayView2<f64>, opts: &SimplexOptions) -> Result<TransportSolution> {
    let (n, m) = c.dim();
    if a.len() != n || b.len() != m {
        return Err(Error::Argument(format!(
            "cost matrix is {n}x{m} but masses have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if let Some(x) = a.iter().chain(b).find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::Argument(format!("masses must be finite and nonnegative, found {x}")));
    }
    if let Some(x) = c.iter().find(|x| !x.is_finite()) {
        return Err(Error::Argument(format!("cost matrix has non-finite entry {x}")));
    }
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    if (sa - sb).abs() > BALANCE_TOL {
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
    let ns = src.len();
    let nt = tgt.len();
    let mut cost = Vec::with_capacity(ns * nt);
    for &i in &src {
        cost.extend(tgt.iter().map(|&j| c[[i, j]]));
    }
    let supply: Vec<f64> = src.iter().map(|&i| a[i]).chain(tgt.iter().map(|&j| -b[j])).collect();

    let mut net = Network::new(ns, nt, cost, supply);
    let budget = opts.max_pivots.unwrap_or(50 * ns * nt + 1_000_000);
    net.run(opts.pricing, budget)?;

    let mut entries = Vec::new();
    let mut active_arcs = Vec::new();
    for (e, &f) in net.flow[..ns * nt].iter().enumerate() {
        if f > 0.0 {
            let (i, j) = (e / nt, e % nt);
            entries.push((src[i], tgt[j], f));
            active_arcs.push((i, j, f));
        }
    }
    let plan = TransportPlan::from_entries(n, m, entries)?;
    let (_, psi_act) = canonical_duals(ns, nt, &net.cost, &active_arcs, &net.pi);
    let pot = extend_potentials(&psi_act, &tgt, c);
    let anchor = first_active(b).expect("active column");
    let potentials = pot.anchored_at(anchor);
    Ok(TransportSolution {
        cost: plan.cost(c),
        plan,
        potentials,
        pivots: net.pivots,
    })
}

/// Spanning-tree state of the network simplex.
///
/// Nodes `0..ns` are sources, `ns..ns+nt` targets, `ns+nt` the root. Real
/// arc `e = i·nt + j` goes from source `i` to target `ns + j`; artificial arc
/// `A + u` joins node `u` with the root.
struct Network {
    ns: usize,
    nt: usize,
    cost: Vec<f64>,
    art_cost: f64,
    /// Whether the artificial arc of `u` points towards the root.
    art_up: Vec<bool>,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    /// Whether `pred[u]` is oriented from `u` to `parent[u]`.
    up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
    next_arc: usize,
    tol: f64,
    pivots: usize,
    stack: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Network {
    fn new(ns: usize, nt: usize, cost: Vec<f64>, supply: Vec<f64>) -> Self {
        let nodes = ns + nt;
        let root = nodes;
        let arcs = ns * nt;
        let max_c = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let art_cost = (max_c + 1.0) * (nodes + 1) as f64;
        let art_up: Vec<bool> = supply.iter().map(|&s| s >= 0.0).collect();
        let mut flow = vec![0.0; arcs + nodes];
        let mut pi = vec![0.0; nodes + 1];
        for u in 0..nodes {
            if art_up[u] {
                flow[arcs + u] = supply[u];
            } else {
                flow[arcs + u] = -supply[u];
                pi[u] = art_cost;
            }
        }
        let mut next_sib = vec![NONE; nodes + 1];
        let mut prev_sib = vec![NONE; nodes + 1];
        for u in 0..nodes {
            next_sib[u] = if u + 1 < nodes { u + 1 } else { NONE };
            prev_sib[u] = if u > 0 { u - 1 } else { NONE };
        }
        let mut first_child = vec![NONE; nodes + 1];
        first_child[root] = if nodes > 0 { 0 } else { NONE };
        Network {
            ns,
            nt,
            cost,
            art_cost,
            up: art_up.clone(),
            art_up,
            flow,
            in_tree: vec![false; arcs],
            parent: (0..=nodes).map(|u| if u == root { NONE } else { root }).collect(),
            pred: (0..=nodes).map(|u| if u == root { NONE } else { arcs + u }).collect(),
            depth: (0..=nodes).map(|u| usize::from(u != root)).collect(),
            pi,
            first_child,
            next_sib,
            prev_sib,
            next_arc: 0,
            tol: 1e-12 * (max_c + 1.0) * ((nodes as f64) / 1000.0).max(1.0),
            pivots: 0,
            stack: Vec::new(),
        }
    }

    fn arcs(&self) -> usize {
        self.ns * self.nt
    }

    fn ends(&self, e: usize) -> (usize, usize) {
        let a = self.arcs();
        if e < a {
            (e / self.nt, self.ns + e % self.nt)
        } else {
            let u = e - a;
            let root = self.ns + self.nt;
            if self.art_up[u] {
                (u, root)
            } else {
                (root, u)
            }
        }
    }

    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.arcs() {
            self.cost[e]
        } else if self.art_up[e - self.arcs()] {
            0.0
        } else {
            self.art_cost
        }
    }

    fn run(&mut self, pricing: Pricing, budget: usize) -> Result<()> {
        loop {
            let entering = match pricing {
                Pricing::BlockSearch => self.block_search(),
                Pricing::Bland => self.first_eligible(),
            };
            let Some(e) = entering else { break };
            if self.pivots >= budget {
                return Err(Error::Solver(format!("pivot budget of {budget} exhausted")));
            }
            self.pivot(e)?;
            self.pivots += 1;
        }
        let total: f64 = self.flow[..self.arcs()].iter().sum::<f64>().max(1.0);
        if let Some(u) = (0..self.ns + self.nt).find(|&u| self.flow[self.arcs() + u] > 1e-9 * total) {
            return Err(Error::Solver(format!(
                "artificial arc of node {u} still carries {:e} at optimum",
                self.flow[self.arcs() + u]
            )));
        }
        Ok(())
    }

    fn block_search(&mut self) -> Option<usize> {
        let a = self.arcs();
        let block = ((a as f64).sqrt().ceil() as usize).max(10).min(a);
        let (ns, nt) = (self.ns, self.nt);
        let mut best = None;
        let mut min = -self.tol;
        let mut cnt = block;
        let mut e = self.next_arc;
        let (mut i, mut j) = (e / nt, e % nt);
        for _ in 0..a {
            if !self.in_tree[e] {
                let rc = self.cost[e] + self.pi[i] - self.pi[ns + j];
                if rc < min {
                    min = rc;
                    best = Some(e);
                }
            }
            e += 1;
            j += 1;
            if j == nt {
                j = 0;
                i += 1;
                if i == ns {
                    i = 0;
                    e = 0;
                }
            }
            cnt -= 1;
            if cnt == 0 {
                if best.is_some() {
                    self.next_arc = e;
                    return best;
                }
                cnt = block;
            }
        }
        self.next_arc = e;
        best
    }

    fn first_eligible(&self) -> Option<usize> {
        let (ns, nt) = (self.ns, self.nt);
        for i in 0..ns {
            for j in 0..nt {
                let e = i * nt + j;
                if !self.in_tree[e] && self.cost[e] + self.pi[i] - self.pi[ns + j] < -self.tol {
                    return Some(e);
                }
            }
        }
        None
    }

    fn join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] > self.depth[v] {
                u = self.parent[u];
            } else if self.depth[v] > self.depth[u] {
                v = self.parent[v];
            } else {
                u = self.parent[u];
                v = self.parent[v];
            }
        }
        u
    }

    fn pivot(&mut self, e_in: usize) -> Result<()> {
        let (s, t) = self.ends(e_in);
        let join = self.join(s, t);
        // Leaving arc: strict comparison on the source side, non-strict on
        // the target side keeps the tree strongly feasible.
        let mut delta = f64::INFINITY;
        let mut u_out = NONE;
        let mut side = 0;
        let mut u = s;
        while u != join {
            if self.up[u] {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    u_out = u;
                    side = 1;
                }
            }
            u = self.parent[u];
        }
        u = t;
        while u != join {
            if !self.up[u] {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    u_out = u;
                    side = 2;
                }
            }
            u = self.parent[u];
        }
        if side == 0 {
            return Err(Error::Solver("unbounded pivot cycle".into()));
        }
        if delta > 0.0 {
            self.flow[e_in] += delta;
            u = s;
            while u != join {
                let e = self.pred[u];
                self.flow[e] += if self.up[u] { -delta } else { delta };
                u = self.parent[u];
            }
            u = t;
            while u != join {
                let e = self.pred[u];
                self.flow[e] += if self.up[u] { delta } else { -delta };
                u = self.parent[u];
            }
        }
        let e_out = self.pred[u_out];
        self.flow[e_out] = 0.0;
        if e_out < self.arcs() {
            self.in_tree[e_out] = false;
        }
        self.in_tree[e_in] = true;

        let (u_in, v_in) = if side == 1 { (s, t) } else { (t, s) };
        let mut u = u_in;
        let mut new_parent = v_in;
        let mut new_pred = e_in;
        let mut new_up = u_in == s;
        loop {
            let old_parent = self.parent[u];
            let old_pred = self.pred[u];
            let old_up = self.up[u];
            self.detach(u);
            self.parent[u] = new_parent;
            self.pred[u] = new_pred;
            self.up[u] = new_up;
            self.attach(u, new_parent);
            if u == u_out {
                break;
            }
            new_parent = u;
            new_pred = old_pred;
            new_up = !old_up;
            u = old_parent;
        }
        self.refresh_subtree(u_in);
        Ok(())
    }

    fn detach(&mut self, u: usize) {
        let p = self.parent[u];
        let (prev, next) = (self.prev_sib[u], self.next_sib[u]);
        if prev == NONE {
            self.first_child[p] = next;
        } else {
            self.next_sib[prev] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
        self.prev_sib[u] = NONE;
        self.next_sib[u] = NONE;
    }

    fn attach(&mut self, u: usize, p: usize) {
        let head = self.first_child[p];
        self.next_sib[u] = head;
        self.prev_sib[u] = NONE;
        if head != NONE {
            self.prev_sib[head] = u;
        }
        self.first_child[p] = u;
    }

    /// Recomputes depth and potentials below (and including) `top`.
    fn refresh_subtree(&mut self, top: usize) {
        let mut stack = std::mem::take(&mut self.stack);
        stack.clear();
        stack.push(top);
        while let Some(u) = stack.pop() {
            let p = self.parent[u];
            self.depth[u] = self.depth[p] + 1;
            let c = self.arc_cost(self.pred[u]);
            self.pi[u] = if self.up[u] { self.pi[p] - c } else { self.pi[p] + c };
            let mut ch = self.first_child[u];
            while ch != NONE {
                stack.push(ch);
                ch = self.next_sib[ch];
            }
        }
        self.stack = stack;
    }
}
