//! Exact discrete optimal transport by the transportation simplex:
//! northwest-corner start, stepping-stone pivots, Bland's rule during
//! degenerate stretches for cycling safety.

use super::{check_weights, TransportPlan};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Hard guard on `rows * cols` for the dense solver.
pub const EXACT_CELL_LIMIT: usize = 1_000_000;

/// Solves `min <sigma, costs>` over couplings of `(mu, nu)` exactly,
/// returning an optimal basic plan (at most `rows + cols - 1` nonzeros) and
/// its cost.
pub fn ot_exact(
    costs: &DMatrix<f64>,
    mu: &DVector<f64>,
    nu: &DVector<f64>,
) -> Result<(TransportPlan, f64)> {
    let (m, n) = costs.shape();
    if m != mu.len() || n != nu.len() {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix is {m}x{n}, weights are {} and {}",
            mu.len(),
            nu.len()
        )));
    }
    if m * n > EXACT_CELL_LIMIT {
        return Err(Error::SizeLimitExceeded(format!(
            "{m}x{n} = {} cells exceeds the exact-solver guard of {EXACT_CELL_LIMIT}",
            m * n
        )));
    }
    check_weights(mu, "source")?;
    check_weights(nu, "target")?;
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(Error::DegenerateInput("non-finite cost entry".into()));
    }

    let mut state = Simplex::northwest(costs, mu, nu);
    state.run()?;

    let entries: Vec<(usize, usize, f64)> = state
        .cells
        .iter()
        .zip(&state.flow)
        .filter(|&(_, &f)| f > 0.0)
        .map(|(&(i, j), &f)| (i, j, f))
        .collect();
    let cost = entries.iter().map(|&(i, j, v)| v * costs[(i, j)]).sum();
    let plan = TransportPlan::new(entries, mu.clone(), nu.clone())?;
    Ok((plan, cost))
}

struct Simplex<'a> {
    costs: &'a DMatrix<f64>,
    m: usize,
    n: usize,
    /// Basic cells; always a spanning tree of the bipartite supply/demand
    /// graph (m + n - 1 cells).
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    tol: f64,
}

impl<'a> Simplex<'a> {
    /// Northwest-corner initial basic feasible solution.
    fn northwest(costs: &'a DMatrix<f64>, mu: &DVector<f64>, nu: &DVector<f64>) -> Self {
        let (m, n) = costs.shape();
        let mut a = mu.clone();
        let mut b = nu.clone();
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let q = a[i].min(b[j]);
            cells.push((i, j));
            flow.push(q);
            a[i] -= q;
            b[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 {
                i += 1;
            } else if a[i] == 0.0 {
                i += 1;
            } else {
                j += 1;
            }
        }
        let max_cost = costs.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        Simplex {
            costs,
            m,
            n,
            cells,
            flow,
            tol: 1e-12 * max_cost.max(1.0),
        }
    }

    fn run(&mut self) -> Result<()> {
        let pivot_cap = 1000 + 200 * (self.m + self.n);
        let mut bland = false;
        for _ in 0..pivot_cap {
            let (u, v) = self.duals();
            let entering = if bland {
                self.entering_bland(&u, &v)
            } else {
                self.entering_dantzig(&u, &v)
            };
            let Some((ei, ej)) = entering else {
                return Ok(());
            };
            let degenerate = self.pivot(ei, ej)?;
            // Degenerate pivots keep the cost constant; Bland's smallest-index
            // rule guarantees the stretch terminates.
            bland = degenerate;
        }
        Err(Error::ConvergenceFailure(format!(
            "transportation simplex exceeded {pivot_cap} pivots"
        )))
    }

    /// Dual potentials from the basis tree, anchored at u[0] = 0.
    fn duals(&self) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
        for (e, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((m + j, e));
            adj[m + j].push((i, e));
        }
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut stack = vec![0usize];
        let mut seen = vec![false; m + n];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &(next, e) in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let (i, j) = self.cells[e];
                if next >= m {
                    v[next - m] = self.costs[(i, j)] - u[i];
                } else {
                    u[next] = self.costs[(i, j)] - v[j];
                }
                stack.push(next);
            }
        }
        (u, v)
    }

    /// Most negative reduced cost.
    fn entering_dantzig(&self, u: &[f64], v: &[f64]) -> Option<(usize, usize)> {
        let mut best = None;
        let mut best_r = -self.tol;
        for i in 0..self.m {
            for j in 0..self.n {
                let r = self.costs[(i, j)] - u[i] - v[j];
                if r < best_r {
                    best_r = r;
                    best = Some((i, j));
                }
            }
        }
        best
    }

    /// Smallest linear index with negative reduced cost (Bland's rule).
    fn entering_bland(&self, u: &[f64], v: &[f64]) -> Option<(usize, usize)> {
        for i in 0..self.m {
            for j in 0..self.n {
                if self.costs[(i, j)] - u[i] - v[j] < -self.tol {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Stepping-stone pivot: pushes mass around the unique cycle the entering
    /// cell closes with the basis tree. Returns whether the pivot was
    /// degenerate (zero mass moved).
    fn pivot(&mut self, ei: usize, ej: usize) -> Result<bool> {
        let path = self.tree_path(ei, ej)?;
        // Signs alternate starting with minus for the edge incident to the
        // entering cell's column.
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let f = self.flow[e];
                let idx = self.cells[e].0 * self.n + self.cells[e].1;
                let better = match leaving {
                    None => true,
                    Some(cur) => {
                        let cur_idx = self.cells[cur].0 * self.n + self.cells[cur].1;
                        f < theta || (f == theta && idx < cur_idx)
                    }
                };
                if better {
                    theta = f;
                    leaving = Some(e);
                }
            }
        }
        let leaving = leaving.ok_or_else(|| {
            Error::ConvergenceFailure("pivot cycle without a leaving cell".into())
        })?;
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                self.flow[e] -= theta;
            } else {
                self.flow[e] += theta;
            }
        }
        self.cells[leaving] = (ei, ej);
        self.flow[leaving] = theta;
        Ok(theta <= 0.0)
    }

    /// Basic cells along the tree path from column node `ej` to row node
    /// `ei`, in traversal order.
    fn tree_path(&self, ei: usize, ej: usize) -> Result<Vec<usize>> {
        let (m, n) = (self.m, self.n);
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
        for (e, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((m + j, e));
            adj[m + j].push((i, e));
        }
        let start = m + ej;
        let goal = ei;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
        let mut seen = vec![false; m + n];
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == goal {
                break;
            }
            for &(next, e) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, e));
                    queue.push_back(next);
                }
            }
        }
        if !seen[goal] {
            return Err(Error::ConvergenceFailure(
                "basis lost spanning-tree structure".into(),
            ));
        }
        let mut path = Vec::new();
        let mut node = goal;
        while let Some((prev, e)) = parent[node] {
            path.push(e);
            node = prev;
        }
        path.reverse();
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::ot_1d;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn one_by_one_is_forced() {
        let c = DMatrix::from_row_slice(1, 1, &[3.5]);
        let w = DVector::from_vec(vec![1.0]);
        let (plan, cost) = ot_exact(&c, &w, &w).unwrap();
        assert_eq!(plan.entries(), &[(0, 0, 1.0)]);
        assert_eq!(cost, 3.5);
    }

    #[test]
    fn dominant_zero_diagonal_gives_identity_plan() {
        let n = 5;
        let c = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 10.0 });
        let w = DVector::from_element(n, 1.0 / n as f64);
        let (plan, cost) = ot_exact(&c, &w, &w).unwrap();
        assert_relative_eq!(cost, 0.0, epsilon = 1e-15);
        let d = plan.to_dense();
        for i in 0..n {
            assert_relative_eq!(d[(i, i)], 1.0 / n as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn matches_1d_solver_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..40 {
            let lx = rng.gen_range(2..=12);
            let ly = rng.gen_range(2..=12);
            let x: Vec<f64> = (0..lx).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..ly).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut mu = DVector::from_fn(lx, |_, _| rng.gen_range(0.05..1.0));
            let mut nu = DVector::from_fn(ly, |_, _| rng.gen_range(0.05..1.0));
            mu /= mu.sum();
            nu /= nu.sum();
            let (_, c1) = ot_1d(&x, &mu, &y, &nu).unwrap();
            let costs = DMatrix::from_fn(lx, ly, |i, j| (x[i] - y[j]) * (x[i] - y[j]));
            let (plan, c2) = ot_exact(&costs, &mu, &nu).unwrap();
            assert!((c1 - c2).abs() <= 1e-10, "1d {c1} vs exact {c2}");
            assert!(plan.nnz() <= lx + ly - 1);
        }
    }

    #[test]
    fn size_guard_trips() {
        let c = DMatrix::zeros(1001, 1001);
        let w = DVector::from_element(1001, 1.0 / 1001.0);
        assert!(matches!(
            ot_exact(&c, &w, &w),
            Err(Error::SizeLimitExceeded(_))
        ));
    }
}
