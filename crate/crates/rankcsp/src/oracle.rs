//! Exact optimum solvers for small instances: ground truth for tests and
//! ratio measurement.

use crate::csp::ConstraintSystem;
use crate::error::{Error, Result};
use crate::order::{Ranking, Vertex};
use crate::MAX_ARITY;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleOutcome {
    pub opt_cost: u64,
    /// Lexicographically smallest ranking attaining `opt_cost`.
    pub witness: Ranking,
    /// Search nodes visited (prefixes for branch-and-bound, leaves for full
    /// enumeration).
    pub explored: u64,
}

struct Search<'a> {
    c: &'a ConstraintSystem,
    prefix: Vec<Vertex>,
    used: u64,
    best_cost: u64,
    best: Vec<Vertex>,
    explored: u64,
}

impl Search<'_> {
    /// Violations added by appending `v`: constraints on k-subsets consisting
    /// of `v` and k-1 prefix vertices, evaluated in prefix order with `v`
    /// last. Admissible because placed prefixes never change.
    fn added_violations(&self, v: Vertex) -> u64 {
        let k = self.c.k();
        let d = self.prefix.len();
        if d + 1 < k {
            return 0;
        }
        let mut total = 0u64;
        let mut order = [0usize; MAX_ARITY];
        crate::combin::for_each_combination(d, k - 1, |idx| {
            for (t, &i) in idx.iter().enumerate() {
                order[t] = self.prefix[i];
            }
            order[k - 1] = v;
            total += self.c.eval_unchecked(&order[..k]);
        });
        total
    }

    fn dfs(&mut self, bound: u64) {
        let n = self.c.n();
        if self.prefix.len() == n {
            // bound is the exact cost of this complete ranking.
            if bound < self.best_cost {
                self.best_cost = bound;
                self.best = self.prefix.clone();
            }
            return;
        }
        for v in 0..n {
            if self.used & (1 << v) != 0 {
                continue;
            }
            let next = bound + self.added_violations(v);
            if next >= self.best_cost {
                continue;
            }
            self.explored += 1;
            self.used |= 1 << v;
            self.prefix.push(v);
            self.dfs(next);
            self.prefix.pop();
            self.used &= !(1 << v);
        }
    }
}

/// Exact optimum by branch-and-bound over prefix extensions, expanding
/// vertices in increasing id at every level. The identity ranking seeds the
/// incumbent, so the witness is the lexicographically smallest optimal
/// ranking.
pub fn exact_opt(c: &ConstraintSystem, cap_n: usize) -> Result<OracleOutcome> {
    let n = c.n();
    if n > cap_n || n > 24 {
        return Err(Error::SizeCap {
            limit: cap_n.min(24),
            actual: n,
        });
    }
    let identity = Ranking::identity(n);
    let mut search = Search {
        c,
        prefix: Vec::with_capacity(n),
        used: 0,
        best_cost: c.cost_ranking(&identity)?,
        best: identity.order().to_vec(),
        explored: 0,
    };
    search.dfs(0);
    Ok(OracleOutcome {
        opt_cost: search.best_cost,
        witness: Ranking::from_order(search.best).unwrap(),
        explored: search.explored,
    })
}

/// Exact optimum by evaluating every ranking in lexicographic order.
/// Independent of the branch-and-bound path, hence usable as its cross-check.
pub fn enumerate_opt(c: &ConstraintSystem) -> Result<OracleOutcome> {
    let n = c.n();
    if n > 8 {
        return Err(Error::SizeCap { limit: 8, actual: n });
    }
    let mut best_cost = u64::MAX;
    let mut best: Vec<Vertex> = Vec::new();
    let mut explored = 0u64;
    let mut current: Vec<Vertex> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(
        c: &ConstraintSystem,
        n: usize,
        current: &mut Vec<Vertex>,
        used: &mut [bool],
        best_cost: &mut u64,
        best: &mut Vec<Vertex>,
        explored: &mut u64,
    ) {
        if current.len() == n {
            *explored += 1;
            let cost = c.cost_ranking(&Ranking::from_order(current.clone()).unwrap()).unwrap();
            if cost < *best_cost {
                *best_cost = cost;
                *best = current.clone();
            }
            return;
        }
        for v in 0..n {
            if used[v] {
                continue;
            }
            used[v] = true;
            current.push(v);
            rec(c, n, current, used, best_cost, best, explored);
            current.pop();
            used[v] = false;
        }
    }
    rec(c, n, &mut current, &mut used, &mut best_cost, &mut best, &mut explored);
    if best_cost == u64::MAX {
        // n = 0: the empty ranking.
        best_cost = 0;
    }
    Ok(OracleOutcome {
        opt_cost: best_cost,
        witness: Ranking::from_order(best).unwrap(),
        explored,
    })
}
