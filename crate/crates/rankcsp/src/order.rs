//! Rankings and vertex orderings.
//!
//! A [`Ranking`] is a total order of a finite vertex set, stored as the
//! sequence of vertices from first to last; rank values are 1-based. A
//! [`VertexOrdering`] generalizes this to an injective map from vertices to
//! rational positions. Orderings are what the approximation pipeline
//! manipulates: positions come from per-vertex grids whose fractional tails
//! keep distinct vertices from ever sharing a position.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;

use crate::error::{Error, Result};

pub type Vertex = usize;

/// Exact rational position. All position arithmetic in this crate is exact;
/// floats appear only in reporting.
pub type Pos = Rational64;

pub fn pos_int(x: i64) -> Pos {
    Pos::from_integer(x)
}

pub fn format_pos(p: &Pos) -> String {
    if *p.denom() == 1 {
        format!("{}", p.numer())
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

/// Parse a nonnegative rational from `"a/b"`, a decimal with at most six
/// fractional digits, or a plain integer. Denominators stay at most 10^6 so
/// downstream exact arithmetic cannot overflow.
pub fn parse_ratio(s: &str) -> Result<Pos> {
    let bad = |reason: &str| Error::BadRational {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    let s = s.trim();
    if s.is_empty() {
        return Err(bad("empty"));
    }
    if let Some((a, b)) = s.split_once('/') {
        let num: i64 = a.trim().parse().map_err(|_| bad("numerator not an integer"))?;
        let den: i64 = b.trim().parse().map_err(|_| bad("denominator not an integer"))?;
        if den <= 0 {
            return Err(bad("denominator must be positive"));
        }
        if num < 0 {
            return Err(bad("must be nonnegative"));
        }
        if den > 1_000_000 {
            return Err(bad("denominator larger than 10^6"));
        }
        return Ok(Pos::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.len() > 6 {
            return Err(bad("more than six decimal places"));
        }
        let whole_val: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| bad("integer part not a number"))?
        };
        if whole_val < 0 {
            return Err(bad("must be nonnegative"));
        }
        if frac.is_empty() {
            return Ok(Pos::from_integer(whole_val));
        }
        let frac_val: i64 = frac.parse().map_err(|_| bad("fractional part not a number"))?;
        let den = 10i64.pow(frac.len() as u32);
        return Ok(Pos::from_integer(whole_val) + Pos::new(frac_val, den));
    }
    let v: i64 = s.parse().map_err(|_| bad("not a number"))?;
    if v < 0 {
        return Err(bad("must be nonnegative"));
    }
    Ok(Pos::from_integer(v))
}

pub(crate) fn validate_eps(eps: Pos) -> Result<()> {
    if eps <= pos_int(0) || eps > pos_int(1) {
        return Err(Error::InvalidEpsilon {
            eps: format_pos(&eps),
            reason: "must satisfy 0 < eps <= 1".into(),
        });
    }
    if *eps.denom() > 1_000_000 {
        return Err(Error::InvalidEpsilon {
            eps: format_pos(&eps),
            reason: "denominator larger than 10^6".into(),
        });
    }
    Ok(())
}

/// Total order on a vertex set, first to last. Rank of `order()[i]` is `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ranking {
    order: Vec<Vertex>,
}

impl Ranking {
    /// Build from an explicit first-to-last sequence. Vertices must be
    /// distinct.
    pub fn from_order(order: Vec<Vertex>) -> Result<Self> {
        let mut seen = order.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateVertex { v: w[0] });
            }
        }
        Ok(Ranking { order })
    }

    /// Identity ranking of 0..n.
    pub fn identity(n: usize) -> Self {
        Ranking {
            order: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[Vertex] {
        &self.order
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.order.contains(&v)
    }

    /// 1-based rank of `v`, if present.
    pub fn rank_of(&self, v: Vertex) -> Option<usize> {
        self.order.iter().position(|&u| u == v).map(|i| i + 1)
    }

    /// Vertex -> 1-based rank for every vertex.
    pub fn ranks(&self) -> BTreeMap<Vertex, usize> {
        self.order
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i + 1))
            .collect()
    }

    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order.reverse();
        Ranking { order }
    }

    /// True iff this ranks exactly the vertex set 0..n.
    pub fn is_ranking_of_range(&self, n: usize) -> bool {
        if self.order.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &v in &self.order {
            if v >= n || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        true
    }

    /// Ordering that places each vertex at its integer rank.
    pub fn to_ordering(&self) -> VertexOrdering {
        let mut o = VertexOrdering::new();
        for (i, &v) in self.order.iter().enumerate() {
            o.insert(v, pos_int(i as i64 + 1))
                .expect("integer ranks are distinct");
        }
        o
    }
}

/// Injective map from vertices to rational positions.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct VertexOrdering {
    pos: BTreeMap<Vertex, Pos>,
    occupied: BTreeSet<Pos>,
}

impl VertexOrdering {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Vertex, Pos)>) -> Result<Self> {
        let mut o = Self::new();
        for (v, p) in pairs {
            if o.pos.contains_key(&v) {
                return Err(Error::DuplicateVertex { v });
            }
            o.insert(v, p)?;
        }
        Ok(o)
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.pos.contains_key(&v)
    }

    pub fn position(&self, v: Vertex) -> Option<Pos> {
        self.pos.get(&v).copied()
    }

    /// Place or move `v` to position `p`. Fails if another vertex already
    /// occupies `p`.
    pub fn insert(&mut self, v: Vertex, p: Pos) -> Result<()> {
        match self.pos.get(&v) {
            Some(old) if *old == p => return Ok(()),
            _ => {}
        }
        if self.occupied.contains(&p) {
            return Err(Error::PositionCollision { p: format_pos(&p) });
        }
        if let Some(old) = self.pos.insert(v, p) {
            self.occupied.remove(&old);
        }
        self.occupied.insert(p);
        Ok(())
    }

    pub fn remove(&mut self, v: Vertex) -> Option<Pos> {
        let old = self.pos.remove(&v);
        if let Some(p) = old {
            self.occupied.remove(&p);
        }
        old
    }

    /// Domain in ascending vertex id.
    pub fn domain(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.pos.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, Pos)> + '_ {
        self.pos.iter().map(|(&v, &p)| (v, p))
    }

    /// Vertices sorted by position, first to last.
    pub fn by_position(&self) -> Vec<Vertex> {
        let mut pairs: Vec<(Pos, Vertex)> = self.pos.iter().map(|(&v, &p)| (p, v)).collect();
        pairs.sort();
        pairs.into_iter().map(|(_, v)| v).collect()
    }

    /// Collapse to the ranking induced by position order.
    pub fn ranking(&self) -> Ranking {
        Ranking {
            order: self.by_position(),
        }
    }

    /// Keep only the vertices in `keep`.
    pub fn restrict(&self, keep: &BTreeSet<Vertex>) -> Self {
        let mut o = Self::new();
        for (&v, &p) in &self.pos {
            if keep.contains(&v) {
                o.insert(v, p).expect("subset of an injective map");
            }
        }
        o
    }
}

impl FromIterator<(Vertex, Pos)> for VertexOrdering {
    /// Panics on duplicate vertices or position collisions; use
    /// [`VertexOrdering::from_pairs`] for fallible construction.
    fn from_iter<T: IntoIterator<Item = (Vertex, Pos)>>(iter: T) -> Self {
        Self::from_pairs(iter).expect("collision-free pairs")
    }
}

/// The candidate positions for vertex `u` in an ambient set of size `n` at
/// resolution `eps`: `j*eps*n + u/(n+1)` for `0 <= j <= floor(1/eps)`,
/// ascending. Grids of distinct vertices are disjoint whenever `eps*n >= 1`.
pub fn position_grid(u: Vertex, n: usize, eps: Pos) -> Result<Vec<Pos>> {
    validate_eps(eps)?;
    if n == 0 {
        return Err(Error::InvalidConfig {
            message: "ambient size n must be positive".into(),
        });
    }
    if u >= n {
        return Err(Error::VertexOutOfRange { v: u, n });
    }
    let step = eps * pos_int(n as i64);
    let tail = Pos::new(u as i64, n as i64 + 1);
    let jmax = (pos_int(1) / eps).floor().to_integer();
    let mut grid = Vec::with_capacity(jmax as usize + 1);
    for j in 0..=jmax {
        grid.push(step * pos_int(j) + tail);
    }
    Ok(grid)
}

/// Snap every vertex of `pi` to the grid point at the bottom of its rank's
/// bucket: position `eps*n*floor(rank/(eps*n)) + u/(n+1)`. `n` is the ambient
/// vertex-set size; `pi` may rank a subset of it.
pub fn round_ordering(pi: &Ranking, eps: Pos, n: usize) -> Result<VertexOrdering> {
    validate_eps(eps)?;
    if n == 0 {
        return Err(Error::InvalidConfig {
            message: "ambient size n must be positive".into(),
        });
    }
    let step = eps * pos_int(n as i64);
    let mut out = VertexOrdering::new();
    for (i, &u) in pi.order().iter().enumerate() {
        if u >= n {
            return Err(Error::VertexOutOfRange { v: u, n });
        }
        let rank = pos_int(i as i64 + 1);
        let bucket = (rank / step).floor();
        let p = step * bucket + Pos::new(u as i64, n as i64 + 1);
        out.insert(u, p)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_basics() {
        let r = Ranking::from_order(vec![2, 0, 1]).unwrap();
        assert_eq!(r.rank_of(2), Some(1));
        assert_eq!(r.rank_of(1), Some(3));
        assert_eq!(r.rank_of(7), None);
        assert_eq!(r.reversed().order(), &[1, 0, 2]);
        assert!(r.is_ranking_of_range(3));
        assert!(!r.is_ranking_of_range(4));
        assert!(Ranking::from_order(vec![1, 1]).is_err());
    }

    #[test]
    fn ordering_insert_and_collision() {
        let mut o = VertexOrdering::new();
        o.insert(0, Pos::new(1, 2)).unwrap();
        o.insert(1, Pos::new(3, 2)).unwrap();
        assert!(matches!(
            o.insert(2, Pos::new(1, 2)),
            Err(Error::PositionCollision { .. })
        ));
        // Moving a vertex frees its old slot.
        o.insert(0, Pos::new(5, 2)).unwrap();
        o.insert(2, Pos::new(1, 2)).unwrap();
        assert_eq!(o.by_position(), vec![2, 1, 0]);
        assert_eq!(o.ranking().order(), &[2, 1, 0]);
    }

    #[test]
    fn ranking_ordering_roundtrip() {
        let r = Ranking::from_order(vec![4, 1, 3]).unwrap();
        assert_eq!(r.to_ordering().ranking(), r);
    }

    #[test]
    fn grid_matches_known_values() {
        // u = 3, n = 10, eps = 1/2: three positions, tails 3/11.
        let g = position_grid(3, 10, Pos::new(1, 2)).unwrap();
        assert_eq!(
            g,
            vec![
                Pos::new(3, 11),
                pos_int(5) + Pos::new(3, 11),
                pos_int(10) + Pos::new(3, 11),
            ]
        );
        assert!(position_grid(3, 10, pos_int(0)).is_err());
        assert!(position_grid(3, 10, pos_int(2)).is_err());
        assert!(position_grid(10, 10, Pos::new(1, 2)).is_err());
    }

    #[test]
    fn round_snaps_to_bucket_floor() {
        // n = 10, eps = 1/2: vertex 3 at rank 7 lands at 5 + 3/11.
        let pi = Ranking::from_order(vec![0, 1, 2, 4, 5, 6, 3, 7, 8, 9]).unwrap();
        let rounded = round_ordering(&pi, Pos::new(1, 2), 10).unwrap();
        assert_eq!(rounded.position(3), Some(pos_int(5) + Pos::new(3, 11)));
        // Every rounded position lies on that vertex's grid.
        for (v, p) in rounded.iter() {
            let grid = position_grid(v, 10, Pos::new(1, 2)).unwrap();
            assert!(grid.contains(&p), "vertex {v} off-grid at {p}");
        }
    }

    #[test]
    fn round_keeps_full_resolution_order() {
        // eps = 1/n: buckets have width 1, so rounding preserves the ranking.
        let pi = Ranking::from_order(vec![3, 0, 4, 1, 2]).unwrap();
        let rounded = round_ordering(&pi, Pos::new(1, 5), 5).unwrap();
        assert_eq!(rounded.ranking(), pi);
    }

    #[test]
    fn parse_ratio_forms() {
        assert_eq!(parse_ratio("1/4").unwrap(), Pos::new(1, 4));
        assert_eq!(parse_ratio("0.25").unwrap(), Pos::new(1, 4));
        assert_eq!(parse_ratio("2").unwrap(), pos_int(2));
        assert_eq!(parse_ratio(".5").unwrap(), Pos::new(1, 2));
        assert_eq!(parse_ratio("0.050").unwrap(), Pos::new(1, 20));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("-1/2").is_err());
        assert!(parse_ratio("0.1234567").is_err());
        assert!(parse_ratio("x").is_err());
    }
}
