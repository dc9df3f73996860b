//! Feedback-arc-set instances and solvers.
//!
//! A [`FasInstance`] is a complete weighted digraph on a vertex subset; the
//! cost of an ordering is the total weight of backward arcs. Constraint
//! systems reduce to FAS locally around a fixed ordering via [`derive_fas`]:
//! the arc weight u -> v counts the constraints through {u, v} that are
//! violated once v is moved directly in front of u (orderings already placing
//! v first are charged as they stand). Cancelling opposite arcs by a capped
//! common amount ([`FasInstance::cancel`]) shifts every ranking's cost by the
//! same constant, so optimizers may work on the cancelled instance.
//!
//! Weights are exact rationals stored as integer numerators over one
//! per-instance denominator, keeping solver tie-breaking stable.

use num_integer::Integer;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::combin::{binomial, for_each_combination};
use crate::csp::ConstraintSystem;
use crate::error::{Error, Result};
use crate::order::{format_pos, Pos, Ranking, Vertex, VertexOrdering};
use crate::MAX_ARITY;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FasInstance {
    /// Ascending vertex ids.
    verts: Vec<Vertex>,
    /// Arity of the originating constraint system; drives the cancellation cap.
    k: usize,
    den: u64,
    /// Row-major numerators: `num[i * m + j]` backs w(verts[i], verts[j]),
    /// the weight charged when verts[i] is ordered after verts[j].
    num: Vec<u64>,
}

/// Output of [`FasInstance::solve_local`].
#[derive(Clone, Debug)]
pub struct LocalSearchOutcome {
    pub ranking: Ranking,
    /// True iff the search stopped because no single-vertex move improves.
    pub certified: bool,
    pub passes: u64,
}

impl FasInstance {
    /// Build from explicit weights. `weight(u, v)` is charged when u is
    /// ordered after v; it must be nonnegative and zero on the diagonal.
    pub fn from_weights(
        mut verts: Vec<Vertex>,
        k: usize,
        mut weight: impl FnMut(Vertex, Vertex) -> Pos,
    ) -> Result<Self> {
        verts.sort_unstable();
        for w in verts.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateVertex { v: w[0] });
            }
        }
        if !(2..=MAX_ARITY).contains(&k) {
            return Err(Error::InvalidArity { k });
        }
        let m = verts.len();
        let mut values = vec![Pos::from_integer(0); m * m];
        let mut den: u64 = 1;
        for (i, &u) in verts.iter().enumerate() {
            for (j, &v) in verts.iter().enumerate() {
                let w = weight(u, v);
                if i == j {
                    if w != Pos::from_integer(0) {
                        return Err(Error::NonzeroDiagonal { v: u });
                    }
                    continue;
                }
                if w < Pos::from_integer(0) {
                    return Err(Error::NegativeWeight { u, v });
                }
                den = den.lcm(&(*w.denom() as u64));
                values[i * m + j] = w;
            }
        }
        let num = values
            .iter()
            .map(|w| (*w.numer() as u64) * (den / *w.denom() as u64))
            .collect();
        Ok(FasInstance { verts, k, den, num })
    }

    pub fn verts(&self) -> &[Vertex] {
        &self.verts
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    fn idx(&self, v: Vertex) -> Result<usize> {
        self.verts.binary_search(&v).map_err(|_| Error::DomainMismatch {
            detail: format!("vertex {v} not in this FAS instance"),
        })
    }

    fn ratio(&self, numerator: u128) -> Pos {
        let n = i64::try_from(numerator).expect("FAS cost numerator fits i64");
        Pos::new(n, self.den as i64)
    }

    pub fn weight(&self, u: Vertex, v: Vertex) -> Result<Pos> {
        let (i, j) = (self.idx(u)?, self.idx(v)?);
        Ok(self.ratio(self.num[i * self.len() + j] as u128))
    }

    fn require_domain(&self, domain: &[Vertex]) -> Result<()> {
        let mut sorted = domain.to_vec();
        sorted.sort_unstable();
        if sorted != self.verts {
            return Err(Error::DomainMismatch {
                detail: "ordering domain must equal the instance vertex set".into(),
            });
        }
        Ok(())
    }

    fn cost_of_sequence(&self, seq: &[Vertex]) -> Result<Pos> {
        self.require_domain(seq)?;
        let m = self.len();
        let mut sum: u128 = 0;
        for j in 0..seq.len() {
            let ij = self.idx(seq[j])?;
            for &earlier in &seq[..j] {
                sum += self.num[ij * m + self.idx(earlier)?] as u128;
            }
        }
        Ok(self.ratio(sum))
    }

    /// Total weight of backward arcs: sum of w(u, v) over pairs ordered v
    /// before u.
    pub fn cost(&self, sigma: &VertexOrdering) -> Result<Pos> {
        self.cost_of_sequence(&sigma.by_position())
    }

    pub fn cost_ranking(&self, pi: &Ranking) -> Result<Pos> {
        self.cost_of_sequence(pi.order())
    }

    /// Cost charged to `v` at position `p` against the rest of `sigma`:
    /// w(u, v) for vertices after `p`, w(v, u) for vertices before it.
    pub fn move_cost(&self, sigma: &VertexOrdering, v: Vertex, p: Pos) -> Result<Pos> {
        let iv = self.idx(v)?;
        let m = self.len();
        let mut sum: u128 = 0;
        for (u, q) in sigma.iter() {
            if u == v {
                continue;
            }
            let iu = self.idx(u)?;
            if q == p {
                return Err(Error::PositionCollision { p: format_pos(&p) });
            }
            sum += if q > p {
                self.num[iu * m + iv]
            } else {
                self.num[iv * m + iu]
            } as u128;
        }
        Ok(self.ratio(sum))
    }

    /// Reduce every opposite-arc pair by min(cap, w(u,v), w(v,u)) where
    /// cap = C(m-2, k-2) / (10 * 3^(k-1)). Ranking costs all drop by the same
    /// constant, so differences (and optima) are preserved.
    pub fn cancel(&self) -> FasInstance {
        let m = self.len();
        let scale: u64 = 10 * 3u64.pow(self.k as u32 - 1);
        let cap_num = binomial(m.saturating_sub(2), self.k - 2) * self.den; // over den * scale
        let mut num = vec![0u64; m * m];
        for i in 0..m {
            for j in 0..i {
                let a = self.num[i * m + j] * scale;
                let b = self.num[j * m + i] * scale;
                let reduce = cap_num.min(a).min(b);
                num[i * m + j] = a - reduce;
                num[j * m + i] = b - reduce;
            }
        }
        let mut out = FasInstance {
            verts: self.verts.clone(),
            k: self.k,
            den: self.den * scale,
            num,
        };
        out.normalize();
        out
    }

    /// Divide out the gcd of all numerators and the denominator.
    fn normalize(&mut self) {
        let mut g = self.den;
        for &x in &self.num {
            g = g.gcd(&x);
        }
        if g > 1 {
            self.den /= g;
            for x in &mut self.num {
                *x /= g;
            }
        }
    }

    /// Smallest and largest w(u,v) + w(v,u) over unordered pairs. None when
    /// fewer than two vertices.
    pub fn pair_sum_range(&self) -> Option<(Pos, Pos)> {
        let m = self.len();
        if m < 2 {
            return None;
        }
        let mut lo = u64::MAX;
        let mut hi = 0u64;
        for i in 0..m {
            for j in 0..i {
                let s = self.num[i * m + j] + self.num[j * m + i];
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        Some((self.ratio(lo as u128), self.ratio(hi as u128)))
    }

    /// Exact minimizer by subset dynamic programming over the 2^m placement
    /// states; ties resolve toward placing the smaller vertex id last.
    pub fn solve_exact(&self, cap: usize) -> Result<Ranking> {
        let m = self.len();
        if m > cap || m > 24 {
            return Err(Error::SizeCap {
                limit: cap.min(24),
                actual: m,
            });
        }
        if m == 0 {
            return Ok(Ranking::from_order(vec![]).unwrap());
        }
        let full: usize = (1usize << m) - 1;
        let mut dp = vec![u64::MAX; full + 1];
        let mut last = vec![u8::MAX; full + 1];
        dp[0] = 0;
        for mask in 1..=full {
            let mut best = u64::MAX;
            let mut best_v = u8::MAX;
            for i in 0..m {
                if mask & (1 << i) == 0 {
                    continue;
                }
                // Place verts[i] last among `mask`: pay its backward arcs to
                // the rest of the set.
                let rest = mask & !(1 << i);
                let mut added = 0u64;
                let row = i * m;
                let mut bits = rest;
                while bits != 0 {
                    let j = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    added += self.num[row + j];
                }
                let total = dp[rest] + added;
                if total < best {
                    best = total;
                    best_v = i as u8;
                }
            }
            dp[mask] = best;
            last[mask] = best_v;
        }
        let mut order = Vec::with_capacity(m);
        let mut mask = full;
        while mask != 0 {
            let i = last[mask] as usize;
            order.push(self.verts[i]);
            mask &= !(1 << i);
        }
        order.reverse();
        Ok(Ranking::from_order(order).unwrap())
    }

    /// Best-improving single-vertex moves until local optimality or the pass
    /// budget runs out. Move candidates scan in (vertex id, target slot)
    /// lexicographic order; only strictly improving moves are taken, so the
    /// result never costs more than the start.
    pub fn solve_local(&self, start: &Ranking, max_passes: u64) -> Result<LocalSearchOutcome> {
        self.require_domain(start.order())?;
        let m = self.len();
        let mut order: Vec<Vertex> = start.order().to_vec();
        let mut passes = 0u64;
        let mut certified = false;
        while passes < max_passes {
            passes += 1;
            // Best move this pass: (gain, vertex id, slot), first maximal kept.
            let mut best: Option<(u64, Vertex, usize)> = None;
            for &v in &self.verts {
                let cur_slot = order.iter().position(|&u| u == v).unwrap();
                let iv = self.idx(v)?;
                // b(j): v's move cost when reinserted at slot j; sweep j
                // left to right, flipping one arc pair per step.
                let mut b: u64 = order
                    .iter()
                    .filter(|&&u| u != v)
                    .map(|&u| self.num[self.idx(u).unwrap() * m + iv])
                    .sum();
                let mut best_here: (u64, usize) = (b, 0);
                let mut j = 0usize;
                for &u in order.iter().filter(|&&u| u != v) {
                    let iu = self.idx(u)?;
                    b = b - self.num[iu * m + iv] + self.num[iv * m + iu];
                    j += 1;
                    if b < best_here.0 {
                        best_here = (b, j);
                    }
                }
                let cur_b = {
                    // Recover b(cur_slot) without a second sweep: cost of v
                    // where it currently stands.
                    let mut s = 0u64;
                    for (t, &u) in order.iter().enumerate() {
                        if u == v {
                            continue;
                        }
                        let iu = self.idx(u)?;
                        s += if t > cur_slot {
                            self.num[iu * m + iv]
                        } else {
                            self.num[iv * m + iu]
                        };
                    }
                    s
                };
                if best_here.0 < cur_b {
                    let gain = cur_b - best_here.0;
                    let better = match best {
                        None => true,
                        Some((g, _, _)) => gain > g,
                    };
                    if better {
                        best = Some((gain, v, best_here.1));
                    }
                }
            }
            match best {
                None => {
                    certified = true;
                    break;
                }
                Some((_, v, slot)) => {
                    let from = order.iter().position(|&u| u == v).unwrap();
                    order.remove(from);
                    order.insert(slot, v);
                }
            }
        }
        Ok(LocalSearchOutcome {
            ranking: Ranking::from_order(order).unwrap(),
            certified,
            passes,
        })
    }

    /// Randomized quicksort ordering: recursively pick a pivot, send u left
    /// of it iff w(u, pivot) >= w(pivot, u) (so keeping u in front is at
    /// least as well supported), ties left. Deterministic given the seed.
    pub fn solve_pivot(&self, seed: u64) -> Ranking {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start: Vec<usize> = (0..self.len()).collect();
        let mut out = Vec::with_capacity(self.len());
        self.pivot_rec(start, &mut rng, &mut out);
        let order = out.into_iter().map(|i| self.verts[i]).collect();
        Ranking::from_order(order).unwrap()
    }

    fn pivot_rec(&self, items: Vec<usize>, rng: &mut ChaCha8Rng, out: &mut Vec<usize>) {
        if items.len() <= 1 {
            out.extend(items);
            return;
        }
        let m = self.len();
        let pivot = items[rng.random_range(0..items.len())];
        let mut left = Vec::new();
        let mut right = Vec::new();
        for &i in &items {
            if i == pivot {
                continue;
            }
            // Arc weights here are numerators over the shared denominator.
            if self.num[i * m + pivot] >= self.num[pivot * m + i] {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        self.pivot_rec(left, rng, out);
        out.push(pivot);
        self.pivot_rec(right, rng, out);
    }
}

/// Local FAS view of `c` around `sigma`: arc u -> v counts the constraints
/// through {u, v} violated in the ordering that differs from `sigma` only by
/// placing v directly in front of u (no change when v is already in front).
pub fn derive_fas(c: &ConstraintSystem, sigma: &VertexOrdering) -> Result<FasInstance> {
    for v in sigma.domain() {
        if v >= c.n() {
            return Err(Error::VertexOutOfRange { v, n: c.n() });
        }
    }
    let m = sigma.len();
    let k = c.k();
    if m < k {
        return Err(Error::DomainTooSmall { n: m, k });
    }
    let seq = sigma.by_position();
    let verts: Vec<Vertex> = sigma.domain().collect();
    let pos_in_verts = |v: Vertex| verts.binary_search(&v).unwrap();
    let mut num = vec![0u64; m * m];
    for iu in 0..m {
        for iv in 0..m {
            if iu == iv {
                continue;
            }
            let (u, v) = (seq[iu], seq[iv]);
            let count = if iv > iu {
                // v currently behind u: evaluate with v pulled directly in
                // front of u.
                let mut moved = Vec::with_capacity(m);
                for (i, &x) in seq.iter().enumerate() {
                    if i == iv {
                        continue;
                    }
                    if i == iu {
                        moved.push(v);
                    }
                    moved.push(x);
                }
                count_pair_violations(c, &moved, iu + 1, iu)
            } else {
                count_pair_violations(c, &seq, iu, iv)
            };
            num[pos_in_verts(u) * m + pos_in_verts(v)] = count;
        }
    }
    Ok(FasInstance {
        verts,
        k,
        den: 1,
        num,
    })
}

/// Violated constraints among k-subsets containing both distinguished
/// sequence slots.
fn count_pair_violations(c: &ConstraintSystem, seq: &[Vertex], iu: usize, iv: usize) -> u64 {
    let k = c.k();
    let others: Vec<usize> = (0..seq.len()).filter(|&i| i != iu && i != iv).collect();
    let mut total = 0u64;
    let mut order = [0usize; MAX_ARITY];
    for_each_combination(others.len(), k - 2, |combo| {
        let mut indices = [0usize; MAX_ARITY];
        for (t, &ci) in combo.iter().enumerate() {
            indices[t] = others[ci];
        }
        indices[k - 2] = iu;
        indices[k - 1] = iv;
        indices[..k].sort_unstable();
        for t in 0..k {
            order[t] = seq[indices[t]];
        }
        total += c.eval_unchecked(&order[..k]);
    });
    total
}
