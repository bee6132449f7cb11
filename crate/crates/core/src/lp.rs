//! Small exact linear programs over rationals: two-phase tableau simplex
//! with Bland's rule, for problems of the form
//!
//! ```text
//! minimize c·x  subject to  A x = b,  x ≥ 0
//! ```
//!
//! Redundant equality rows are detected after phase 1 and dropped.

use num_traits::{One, Signed, Zero};

use crate::scalar::Q;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, objective: Q },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `rows[i]` holds the coefficients followed by the right-hand side.
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    /// Number of structural columns (excluding the right-hand side).
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Q {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = &*v - &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Reduced costs of `cost` (length `width`) for the current basis.
    fn reduced_costs(&self, cost: &[Q]) -> Vec<Q> {
        let mut d = cost.to_vec();
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = &cost[bj];
            if cb.is_zero() {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                *dj = &*dj - cb * &self.rows[i][j];
            }
        }
        d
    }

    /// Runs simplex iterations over the columns in `allowed`. Returns false
    /// when unbounded.
    fn optimize(&mut self, cost: &[Q], allowed: &[bool]) -> bool {
        loop {
            let d = self.reduced_costs(cost);
            // Bland: smallest index with negative reduced cost enters.
            let Some(enter) = (0..self.width).find(|&j| allowed[j] && d[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

/// Solve `min c·x s.t. A x = b, x ≥ 0` exactly.
pub fn minimize(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "row count mismatch");
    assert!(a.iter().all(|r| r.len() == n), "column count mismatch");

    // Phase 1: artificials n..n+m, right-hand sides made non-negative.
    let width = n + m;
    let rows = (0..m)
        .map(|i| {
            let flip = b[i].is_negative();
            let mut row: Vec<Q> = a[i].iter().map(|v| if flip { -v } else { v.clone() }).collect();
            row.extend((0..m).map(|k| if k == i { Q::one() } else { Q::zero() }));
            row.push(if flip { -&b[i] } else { b[i].clone() });
            row
        })
        .collect();
    let mut t = Tableau { rows, basis: (n..n + m).collect(), width };
    let phase1_cost: Vec<Q> = (0..width).map(|j| if j >= n { Q::one() } else { Q::zero() }).collect();
    let all = vec![true; width];
    t.optimize(&phase1_cost, &all);
    let infeasibility: Q = (0..m).filter(|&i| t.basis[i] >= n).map(|i| t.rhs(i).clone()).sum();
    if !infeasibility.is_zero() {
        return LpOutcome::Infeasible;
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linear combinations of the others.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    let mut cost = c.to_vec();
    cost.extend((0..m).map(|_| Q::zero()));
    let structural: Vec<bool> = (0..width).map(|j| j < n).collect();
    if !t.optimize(&cost, &structural) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Q::zero(); n];
    for (row, &bj) in t.basis.iter().enumerate() {
        if bj < n {
            x[bj] = t.rhs(row).clone();
        }
    }
    let objective = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { x, objective }
}

/// A non-negative solution of `A x = b`, if one exists.
pub fn feasible(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = a.first().map_or(0, Vec::len);
    match minimize(a, b, &vec![Q::zero(); n]) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

/// Rank of a rational matrix by Gaussian elimination.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r].clone();
        for row in m.iter_mut().skip(r + 1) {
            if row[c].is_zero() {
                continue;
            }
            let f = &row[c] / &pivot[c];
            for (v, pv) in row.iter_mut().zip(&pivot) {
                *v = &*v - &f * pv;
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn qs(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| q(x, 1)).collect()
    }

    #[test]
    fn simple_minimum() {
        // min x0 + 2 x1  s.t. x0 + x1 = 1, x ≥ 0  →  x = (1, 0).
        let out = minimize(&[qs(&[1, 1])], &qs(&[1]), &qs(&[1, 2]));
        assert_eq!(out, LpOutcome::Optimal { x: qs(&[1, 0]), objective: q(1, 1) });
    }

    #[test]
    fn infeasible_detected() {
        // x0 + x1 = -1 has no non-negative solution.
        assert_eq!(minimize(&[qs(&[1, 1])], &qs(&[-1]), &qs(&[0, 0])), LpOutcome::Infeasible);
        assert_eq!(feasible(&[qs(&[1, 0]), qs(&[1, 0])], &qs(&[1, 2])), None);
    }

    #[test]
    fn unbounded_detected() {
        // min -x0 s.t. x0 - x1 = 0.
        assert_eq!(minimize(&[qs(&[1, -1])], &qs(&[0]), &qs(&[-1, 0])), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_dropped() {
        let a = vec![qs(&[1, 1, 0]), qs(&[0, 1, 1]), qs(&[1, 2, 1])];
        let b = qs(&[1, 1, 2]);
        match minimize(&a, &b, &qs(&[0, 1, 0])) {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(objective, q(0, 1));
                assert_eq!(x, qs(&[1, 0, 1]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fractional_vertex() {
        // min -x0 - x1 s.t. 2x0 + x1 + s0 = 2, x0 + 3x1 + s1 = 3.
        let a = vec![qs(&[2, 1, 1, 0]), qs(&[1, 3, 0, 1])];
        match minimize(&a, &qs(&[2, 3]), &qs(&[-1, -1, 0, 0])) {
            LpOutcome::Optimal { x, objective } => {
                assert_eq!(&x[..2], &[q(3, 5), q(4, 5)]);
                assert_eq!(objective, q(-7, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rank_counts_independent_rows() {
        assert_eq!(rank(&[qs(&[1, 2]), qs(&[2, 4])]), 1);
        assert_eq!(rank(&[qs(&[1, 0, 0]), qs(&[0, 1, 0]), qs(&[1, 1, 0])]), 2);
        assert_eq!(rank(&[]), 0);
    }
}
