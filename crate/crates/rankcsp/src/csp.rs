//! Fully dense ranking constraint systems.
//!
//! A system of arity `k` places one constraint on every k-subset of the
//! vertex set 0..n. A constraint inspects only the relative order its subset
//! receives and charges 0 or 1; [`ConstraintSystem::cost`] counts the charged
//! (violated) subsets under an ordering. Four families are supported:
//!
//! * `Betweenness3` (k = 3): a designated vertex must sit between the other
//!   two.
//! * `KFast` (2 <= k <= 4): exactly one relative order of the subset is
//!   satisfying; k = 2 is the classic weighted-tournament special case.
//! * `KBetweenness` (k = 4): two designated vertices must occupy the two ends,
//!   in either order.
//! * `ExplicitTable`: an arbitrary 0/1 charge per relative order, mainly for
//!   adversarial tests.

use std::collections::BTreeMap;

use crate::combin::{binomial, colex_rank, factorial, for_each_combination, permutation_by_lex_rank, permutation_lex_rank};
use crate::error::{Error, Result};
use crate::order::{format_pos, Pos, Ranking, Vertex, VertexOrdering};
use crate::MAX_ARITY;

/// Hard cap on stored constraints; keeps accidental huge `n` from exhausting
/// memory, since storage is Theta(C(n, k)).
const MAX_CONSTRAINTS: u64 = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Betweenness3,
    KFast,
    KBetweenness,
    ExplicitTable,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Betweenness3 => "betweenness",
            Family::KFast => "kfast",
            Family::KBetweenness => "kbetweenness",
            Family::ExplicitTable => "table",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        match s {
            "betweenness" => Ok(Family::Betweenness3),
            "kfast" => Ok(Family::KFast),
            "kbetweenness" => Ok(Family::KBetweenness),
            "table" => Ok(Family::ExplicitTable),
            _ => Err(Error::Parse {
                message: format!("unknown family {s:?}"),
            }),
        }
    }

    /// Whether reversing any ordering preserves cost for this family.
    pub fn reversal_symmetric(&self) -> bool {
        matches!(self, Family::Betweenness3 | Family::KBetweenness)
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FragilityMode {
    /// Every single-vertex move of a satisfied constraint must break it.
    Fragile,
    /// Only the four end moves (first vertex behind the second or to the back,
    /// last vertex ahead of the second-to-last or to the front) must break it.
    Weak,
}

/// Per-subset payload, indexed by the colex rank of the sorted subset.
#[derive(Clone, Debug, PartialEq, Eq)]
enum PayloadStore {
    Betweenness3(Vec<Vertex>),
    KFast(Vec<Vertex>),
    KBetweenness(Vec<[Vertex; 2]>),
    /// k! charges per subset, one per lex-ranked relative order.
    ExplicitTable(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSystem {
    n: usize,
    k: usize,
    store: PayloadStore,
}

/// Total violations plus the number touching each vertex. Each violated
/// subset contributes to exactly k per-vertex entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostStats {
    pub total: u64,
    pub per_vertex: Vec<(Vertex, u64)>,
}

fn validate_shape(n: usize, k: usize) -> Result<()> {
    if !(2..=MAX_ARITY).contains(&k) {
        return Err(Error::InvalidArity { k });
    }
    if n < k {
        return Err(Error::DomainTooSmall { n, k });
    }
    if binomial(n, k) > MAX_CONSTRAINTS {
        return Err(Error::SizeCap {
            limit: MAX_CONSTRAINTS as usize,
            actual: binomial(n, k) as usize,
        });
    }
    Ok(())
}

impl ConstraintSystem {
    /// Betweenness system: `designated(s)` names the vertex of `s` that must
    /// be ranked between the other two.
    pub fn betweenness3(n: usize, mut designated: impl FnMut(&[Vertex]) -> Vertex) -> Result<Self> {
        validate_shape(n, 3)?;
        let count = binomial(n, 3) as usize;
        let mut store = vec![0; count];
        let mut bad = None;
        for_each_combination(n, 3, |s| {
            let d = designated(s);
            if !s.contains(&d) {
                bad.get_or_insert(d);
            } else {
                store[colex_rank(s)] = d;
            }
        });
        if let Some(v) = bad {
            return Err(Error::PayloadOutOfSubset { v });
        }
        Ok(ConstraintSystem {
            n,
            k: 3,
            store: PayloadStore::Betweenness3(store),
        })
    }

    /// One-satisfying-order system: `satisfying(s)` returns the unique
    /// relative order of `s` (as a sequence) that is not charged.
    pub fn k_fast(
        n: usize,
        k: usize,
        mut satisfying: impl FnMut(&[Vertex]) -> Vec<Vertex>,
    ) -> Result<Self> {
        validate_shape(n, k)?;
        let count = binomial(n, k) as usize;
        let mut store = vec![0; count * k];
        let mut bad = None;
        for_each_combination(n, k, |s| {
            let perm = satisfying(s);
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            if sorted != s {
                bad.get_or_insert_with(|| format!("{perm:?} is not an order of {s:?}"));
            } else {
                let r = colex_rank(s);
                store[r * k..(r + 1) * k].copy_from_slice(&perm);
            }
        });
        if let Some(detail) = bad {
            return Err(Error::InvalidPayload { detail });
        }
        Ok(ConstraintSystem {
            n,
            k,
            store: PayloadStore::KFast(store),
        })
    }

    /// Endpoint system (k = 4): `endpoints(s)` returns the two vertices of `s`
    /// required to occupy the first and last place, in either order.
    pub fn k_betweenness(
        n: usize,
        k: usize,
        mut endpoints: impl FnMut(&[Vertex]) -> (Vertex, Vertex),
    ) -> Result<Self> {
        if k < 4 {
            return Err(Error::IncompatibleFamily {
                family: Family::KBetweenness.as_str().into(),
                k,
            });
        }
        validate_shape(n, k)?;
        let count = binomial(n, k) as usize;
        let mut store = vec![[0, 0]; count];
        let mut bad = None;
        for_each_combination(n, k, |s| {
            let (a, b) = endpoints(s);
            if a == b || !s.contains(&a) || !s.contains(&b) {
                bad.get_or_insert_with(|| format!("endpoints ({a}, {b}) invalid for {s:?}"));
            } else {
                store[colex_rank(s)] = [a.min(b), a.max(b)];
            }
        });
        if let Some(detail) = bad {
            return Err(Error::InvalidPayload { detail });
        }
        Ok(ConstraintSystem {
            n,
            k,
            store: PayloadStore::KBetweenness(store),
        })
    }

    /// Arbitrary system: `table(s)` returns k! charges in {0, 1}, indexed by
    /// the lex rank of the relative order (as a permutation of the sorted
    /// subset).
    pub fn explicit_table(
        n: usize,
        k: usize,
        mut table: impl FnMut(&[Vertex]) -> Vec<u8>,
    ) -> Result<Self> {
        validate_shape(n, k)?;
        let f = factorial(k) as usize;
        let count = binomial(n, k) as usize;
        let mut store = vec![0u8; count * f];
        let mut bad = None;
        for_each_combination(n, k, |s| {
            let t = table(s);
            if t.len() != f || t.iter().any(|&x| x > 1) {
                bad.get_or_insert_with(|| format!("table for {s:?} must be {f} charges in {{0, 1}}"));
            } else {
                let r = colex_rank(s);
                store[r * f..(r + 1) * f].copy_from_slice(&t);
            }
        });
        if let Some(detail) = bad {
            return Err(Error::InvalidPayload { detail });
        }
        Ok(ConstraintSystem {
            n,
            k,
            store: PayloadStore::ExplicitTable(store),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn family(&self) -> Family {
        match self.store {
            PayloadStore::Betweenness3(_) => Family::Betweenness3,
            PayloadStore::KFast(_) => Family::KFast,
            PayloadStore::KBetweenness(_) => Family::KBetweenness,
            PayloadStore::ExplicitTable(_) => Family::ExplicitTable,
        }
    }

    pub fn constraint_count(&self) -> u64 {
        binomial(self.n, self.k)
    }

    /// Payload of the constraint on `subset` (sorted ascending), rendered for
    /// serialization: designated vertex, satisfying order, endpoint pair, or
    /// charge table.
    pub(crate) fn payload_tokens(&self, subset: &[Vertex]) -> Vec<u64> {
        let r = colex_rank(subset);
        match &self.store {
            PayloadStore::Betweenness3(d) => vec![d[r] as u64],
            PayloadStore::KFast(sat) => sat[r * self.k..(r + 1) * self.k]
                .iter()
                .map(|&v| v as u64)
                .collect(),
            PayloadStore::KBetweenness(e) => e[r].iter().map(|&v| v as u64).collect(),
            PayloadStore::ExplicitTable(t) => {
                let f = factorial(self.k) as usize;
                t[r * f..(r + 1) * f].iter().map(|&x| x as u64).collect()
            }
        }
    }

    /// Charge of the constraint on the vertices of `order` when they appear
    /// in exactly this relative order: 1 if violated, 0 if satisfied.
    pub fn evaluate(&self, order: &[Vertex]) -> Result<u64> {
        if order.len() != self.k {
            return Err(Error::DomainMismatch {
                detail: format!("expected {} vertices, got {}", self.k, order.len()),
            });
        }
        for (i, &v) in order.iter().enumerate() {
            if v >= self.n {
                return Err(Error::VertexOutOfRange { v, n: self.n });
            }
            if order[..i].contains(&v) {
                return Err(Error::DuplicateVertex { v });
            }
        }
        Ok(self.eval_unchecked(order))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, order: &[Vertex]) -> u64 {
        let k = self.k;
        debug_assert_eq!(order.len(), k);
        let mut sorted = [0usize; MAX_ARITY];
        sorted[..k].copy_from_slice(order);
        sorted[..k].sort_unstable();
        let r = colex_rank(&sorted[..k]);
        match &self.store {
            PayloadStore::Betweenness3(d) => (order[1] != d[r]) as u64,
            PayloadStore::KFast(sat) => (order != &sat[r * k..(r + 1) * k]) as u64,
            PayloadStore::KBetweenness(e) => {
                let [a, b] = e[r];
                let (x, y) = (order[0], order[k - 1]);
                (!((x == a && y == b) || (x == b && y == a))) as u64
            }
            PayloadStore::ExplicitTable(t) => {
                let f = factorial(k) as usize;
                let mut q = [0usize; MAX_ARITY];
                for i in 0..k {
                    q[i] = sorted[..k].iter().position(|&s| s == order[i]).unwrap();
                }
                t[r * f + permutation_lex_rank(&q[..k])] as u64
            }
        }
    }

    fn validate_domain(&self, sigma: &VertexOrdering) -> Result<()> {
        for v in sigma.domain() {
            if v >= self.n {
                return Err(Error::VertexOutOfRange { v, n: self.n });
            }
        }
        Ok(())
    }

    /// Number of violated constraints among the subsets fully inside the
    /// sequence, which must list vertices in position order.
    pub(crate) fn cost_of_sequence(&self, seq: &[Vertex]) -> u64 {
        let mut total = 0u64;
        let mut order = [0usize; MAX_ARITY];
        for_each_combination(seq.len(), self.k, |idx| {
            for (t, &i) in idx.iter().enumerate() {
                order[t] = seq[i];
            }
            total += self.eval_unchecked(&order[..self.k]);
        });
        total
    }

    /// Violated constraints under `sigma`. Subsets not fully contained in the
    /// domain of `sigma` are not charged.
    pub fn cost(&self, sigma: &VertexOrdering) -> Result<u64> {
        self.validate_domain(sigma)?;
        Ok(self.cost_of_sequence(&sigma.by_position()))
    }

    /// Violated constraints under a full ranking. A ranking is always a
    /// permutation of a prefix, so anything shorter than the whole domain
    /// must be a caller mistake; partial pricing goes through `cost`.
    pub fn cost_ranking(&self, pi: &Ranking) -> Result<u64> {
        if pi.len() != self.n {
            return Err(Error::DomainMismatch {
                detail: format!("ranking covers {} of {} vertices", pi.len(), self.n),
            });
        }
        Ok(self.cost_of_sequence(pi.order()))
    }

    /// Total violations plus per-vertex counts (ascending vertex id, zero
    /// entries included for every domain vertex).
    pub fn cost_stats(&self, sigma: &VertexOrdering) -> Result<CostStats> {
        self.validate_domain(sigma)?;
        let seq = sigma.by_position();
        let mut by_vertex: BTreeMap<Vertex, u64> = sigma.domain().map(|v| (v, 0)).collect();
        let mut total = 0u64;
        let mut order = [0usize; MAX_ARITY];
        for_each_combination(seq.len(), self.k, |idx| {
            for (t, &i) in idx.iter().enumerate() {
                order[t] = seq[i];
            }
            if self.eval_unchecked(&order[..self.k]) == 1 {
                total += 1;
                for &v in &order[..self.k] {
                    *by_vertex.get_mut(&v).unwrap() += 1;
                }
            }
        });
        Ok(CostStats {
            total,
            per_vertex: by_vertex.into_iter().collect(),
        })
    }

    /// Cost charged to `v` when placed at position `p` against the rest of
    /// `sigma`: violated constraints among subsets consisting of `v` plus
    /// k - 1 vertices of the domain minus `v`. The current position of `v`
    /// in `sigma`, if any, is ignored.
    pub fn move_cost(&self, sigma: &VertexOrdering, v: Vertex, p: Pos) -> Result<u64> {
        self.validate_domain(sigma)?;
        if v >= self.n {
            return Err(Error::VertexOutOfRange { v, n: self.n });
        }
        let mut others: Vec<(Pos, Vertex)> = sigma
            .iter()
            .filter(|&(u, _)| u != v)
            .map(|(u, q)| (q, u))
            .collect();
        if others.iter().any(|&(q, _)| q == p) {
            return Err(Error::PositionCollision { p: format_pos(&p) });
        }
        others.sort();
        let insert_at = others.iter().filter(|&&(q, _)| q < p).count();
        let seq: Vec<Vertex> = others.into_iter().map(|(_, u)| u).collect();
        let mut total = 0u64;
        let mut order = [0usize; MAX_ARITY];
        for_each_combination(seq.len(), self.k - 1, |idx| {
            let mut t = 0;
            let mut placed = false;
            for &i in idx {
                if !placed && i >= insert_at {
                    order[t] = v;
                    t += 1;
                    placed = true;
                }
                order[t] = seq[i];
                t += 1;
            }
            if !placed {
                order[t] = v;
            }
            total += self.eval_unchecked(&order[..self.k]);
        });
        Ok(total)
    }

    /// Check the constraint on one subset against every required move: for
    /// each relative order and each move in the mode's move set, the order and
    /// its moved variant may not both be satisfied.
    pub fn check_fragility(&self, subset: &[Vertex], mode: FragilityMode) -> Result<bool> {
        if subset.len() != self.k {
            return Err(Error::DomainMismatch {
                detail: format!("expected {} vertices, got {}", self.k, subset.len()),
            });
        }
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateVertex { v: w[0] });
            }
        }
        if let Some(&v) = sorted.iter().find(|&&v| v >= self.n) {
            return Err(Error::VertexOutOfRange { v, n: self.n });
        }
        let k = self.k;
        // Moves as (index of moved vertex, insertion slot among the rest).
        let moves: Vec<(usize, usize)> = match mode {
            FragilityMode::Fragile => (0..k)
                .flat_map(|vi| (0..k).map(move |g| (vi, g)))
                .filter(|&(vi, g)| vi != g)
                .collect(),
            FragilityMode::Weak => {
                let mut m = vec![(0, 1), (0, k - 1), (k - 1, k - 2), (k - 1, 0)];
                m.sort_unstable();
                m.dedup();
                m.retain(|&(vi, g)| vi != g);
                m
            }
        };
        let fact = factorial(k) as usize;
        for r in 0..fact {
            let perm = permutation_by_lex_rank(k, r);
            let order: Vec<Vertex> = perm.iter().map(|&i| sorted[i]).collect();
            let base = self.eval_unchecked(&order);
            if base == 1 {
                continue;
            }
            for &(vi, g) in &moves {
                let mut moved = order.clone();
                let v = moved.remove(vi);
                moved.insert(g, v);
                if self.eval_unchecked(&moved) == 0 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// First subset (in lex order) whose constraint violates the mode's
    /// fragility requirement, or None if every constraint complies.
    pub fn fragility_counterexample(&self, mode: FragilityMode) -> Option<Vec<Vertex>> {
        let mut found = None;
        for_each_combination(self.n, self.k, |s| {
            if found.is_none() && !self.check_fragility(s, mode).unwrap() {
                found = Some(s.to_vec());
            }
        });
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::pos_int;

    fn b3_middle_of_sorted(n: usize) -> ConstraintSystem {
        ConstraintSystem::betweenness3(n, |s| s[1]).unwrap()
    }

    #[test]
    fn betweenness_charges_non_middle_orders() {
        let c = b3_middle_of_sorted(3);
        assert_eq!(c.evaluate(&[0, 1, 2]).unwrap(), 0);
        assert_eq!(c.evaluate(&[2, 1, 0]).unwrap(), 0);
        for bad in [[1, 0, 2], [0, 2, 1], [1, 2, 0], [2, 0, 1]] {
            assert_eq!(c.evaluate(&bad).unwrap(), 1);
        }
        assert!(c.evaluate(&[0, 1]).is_err());
        assert!(c.evaluate(&[0, 1, 1]).is_err());
        assert!(c.evaluate(&[0, 1, 9]).is_err());
    }

    #[test]
    fn kfast_single_satisfying_order() {
        let c = ConstraintSystem::k_fast(4, 2, |s| s.to_vec()).unwrap();
        assert_eq!(c.evaluate(&[1, 3]).unwrap(), 0);
        assert_eq!(c.evaluate(&[3, 1]).unwrap(), 1);
        // Identity ordering satisfies everything.
        assert_eq!(c.cost_ranking(&Ranking::identity(4)).unwrap(), 0);
        assert_eq!(c.cost_ranking(&Ranking::identity(4).reversed()).unwrap(), 6);
    }

    #[test]
    fn kbetweenness_endpoints_either_way() {
        let c = ConstraintSystem::k_betweenness(4, 4, |s| (s[0], s[3])).unwrap();
        assert_eq!(c.evaluate(&[0, 1, 2, 3]).unwrap(), 0);
        assert_eq!(c.evaluate(&[0, 2, 1, 3]).unwrap(), 0);
        assert_eq!(c.evaluate(&[3, 1, 2, 0]).unwrap(), 0);
        assert_eq!(c.evaluate(&[1, 0, 2, 3]).unwrap(), 1);
        assert!(ConstraintSystem::k_betweenness(5, 3, |s| (s[0], s[2])).is_err());
    }

    #[test]
    fn explicit_table_matches_kfast_encoding() {
        // Table charging everything except the sorted order behaves like
        // k_fast with the sorted order satisfying.
        let k = 3;
        let f = factorial(k) as usize;
        let table = ConstraintSystem::explicit_table(5, k, |_| {
            let mut t = vec![1u8; f];
            t[0] = 0; // lex rank 0 is the identity relative order
            t
        })
        .unwrap();
        let fast = ConstraintSystem::k_fast(5, k, |s| s.to_vec()).unwrap();
        let orders = [[0, 2, 4], [4, 2, 0], [2, 0, 4], [1, 2, 3], [3, 1, 2]];
        for o in orders {
            assert_eq!(table.evaluate(&o).unwrap(), fast.evaluate(&o).unwrap());
        }
    }

    #[test]
    fn cost_counts_contained_subsets_only() {
        let c = b3_middle_of_sorted(5);
        // Ordering of a 2-vertex subset: no 3-subset fits, cost 0.
        let sigma = VertexOrdering::from_pairs([(0, pos_int(1)), (4, pos_int(2))]).unwrap();
        assert_eq!(c.cost(&sigma).unwrap(), 0);
        // Full identity: every sorted triple has its middle in the middle.
        assert_eq!(c.cost_ranking(&Ranking::identity(5)).unwrap(), 0);
    }

    #[test]
    fn cost_stats_sum_is_k_times_total() {
        let c = b3_middle_of_sorted(5);
        let pi = Ranking::from_order(vec![2, 0, 4, 1, 3]).unwrap();
        let stats = c.cost_stats(&pi.to_ordering()).unwrap();
        assert_eq!(stats.total, c.cost_ranking(&pi).unwrap());
        let sum: u64 = stats.per_vertex.iter().map(|&(_, x)| x).sum();
        assert_eq!(sum, 3 * stats.total);
        assert_eq!(stats.per_vertex.len(), 5);
    }

    #[test]
    fn move_cost_at_own_position_is_per_vertex_count() {
        let c = b3_middle_of_sorted(5);
        let pi = Ranking::from_order(vec![2, 0, 4, 1, 3]).unwrap();
        let sigma = pi.to_ordering();
        let stats = c.cost_stats(&sigma).unwrap();
        for (v, count) in stats.per_vertex {
            let b = c.move_cost(&sigma, v, sigma.position(v).unwrap()).unwrap();
            assert_eq!(b, count, "vertex {v}");
        }
    }

    #[test]
    fn move_cost_rejects_collisions() {
        let c = b3_middle_of_sorted(5);
        let sigma = Ranking::identity(5).to_ordering();
        assert!(c.move_cost(&sigma, 0, pos_int(3)).is_err());
        // A vertex's own slot is not a collision.
        assert!(c.move_cost(&sigma, 2, pos_int(3)).is_ok());
    }

    #[test]
    fn fragility_of_the_stock_families() {
        let b3 = b3_middle_of_sorted(4);
        assert!(b3.check_fragility(&[0, 1, 3], FragilityMode::Fragile).unwrap());
        assert!(b3.check_fragility(&[0, 1, 3], FragilityMode::Weak).unwrap());

        let fast = ConstraintSystem::k_fast(5, 4, |s| s.to_vec()).unwrap();
        assert!(fast.check_fragility(&[0, 1, 2, 4], FragilityMode::Fragile).unwrap());
        assert!(fast.check_fragility(&[0, 1, 2, 4], FragilityMode::Weak).unwrap());

        // Endpoint constraints survive interior moves, so they are only
        // weakly fragile.
        let kbw = ConstraintSystem::k_betweenness(5, 4, |s| (s[0], s[3])).unwrap();
        assert!(!kbw.check_fragility(&[0, 1, 2, 3], FragilityMode::Fragile).unwrap());
        assert!(kbw.check_fragility(&[0, 1, 2, 3], FragilityMode::Weak).unwrap());
        assert!(kbw.fragility_counterexample(FragilityMode::Weak).is_none());
        assert!(kbw.fragility_counterexample(FragilityMode::Fragile).is_some());
    }

    #[test]
    fn always_satisfied_table_is_not_fragile() {
        let c = ConstraintSystem::explicit_table(3, 3, |_| vec![0; 6]).unwrap();
        assert!(!c.check_fragility(&[0, 1, 2], FragilityMode::Weak).unwrap());
        // Always violated is vacuously fragile.
        let c = ConstraintSystem::explicit_table(3, 3, |_| vec![1; 6]).unwrap();
        assert!(c.check_fragility(&[0, 1, 2], FragilityMode::Fragile).unwrap());
    }
}
