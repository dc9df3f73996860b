//! Distances and displacement statistics between orderings.

use crate::error::{Error, Result};
use crate::order::{Pos, Ranking, VertexOrdering};

fn require_same_domain(a: &VertexOrdering, b: &VertexOrdering) -> Result<()> {
    if a.len() != b.len() || a.domain().any(|v| !b.contains(v)) {
        return Err(Error::DomainMismatch {
            detail: "orderings must cover the same vertex set".into(),
        });
    }
    Ok(())
}

/// Merge-sort inversion count.
fn count_inversions<T: Ord + Copy>(v: &mut [T]) -> u64 {
    let len = v.len();
    if len < 2 {
        return 0;
    }
    let mid = len / 2;
    let (left, right) = v.split_at_mut(mid);
    let mut inv = count_inversions(left) + count_inversions(right);
    let mut merged = Vec::with_capacity(len);
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            merged.push(left[i]);
            i += 1;
        } else {
            // right[j] jumps ahead of everything left of i..mid.
            inv += (left.len() - i) as u64;
            merged.push(right[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&left[i..]);
    merged.extend_from_slice(&right[j..]);
    v.copy_from_slice(&merged);
    inv
}

/// Number of vertex pairs that `a` and `b` order differently. Runs in
/// O(m log m).
pub fn kendall_tau(a: &VertexOrdering, b: &VertexOrdering) -> Result<u64> {
    require_same_domain(a, b)?;
    let mut b_positions: Vec<Pos> = a
        .by_position()
        .iter()
        .map(|&v| b.position(v).unwrap())
        .collect();
    Ok(count_inversions(&mut b_positions))
}

pub fn kendall_tau_rankings(a: &Ranking, b: &Ranking) -> Result<u64> {
    let ranks_b = b.ranks();
    if a.len() != b.len() {
        return Err(Error::DomainMismatch {
            detail: "rankings must cover the same vertex set".into(),
        });
    }
    let mut seq: Vec<usize> = Vec::with_capacity(a.len());
    for &v in a.order() {
        match ranks_b.get(&v) {
            Some(&r) => seq.push(r),
            None => {
                return Err(Error::DomainMismatch {
                    detail: format!("vertex {v} missing from second ranking"),
                })
            }
        }
    }
    Ok(count_inversions(&mut seq))
}

/// Kendall-Tau to `b` or its reversal, whichever is smaller. Appropriate for
/// families whose cost is reversal-invariant.
pub fn kendall_tau_mod_reversal(a: &Ranking, b: &Ranking) -> Result<u64> {
    Ok(kendall_tau_rankings(a, b)?.min(kendall_tau_rankings(a, &b.reversed())?))
}

/// Vertex flow across a pair of cut positions when moving from `a` to `b`:
/// `left_to_right` counts vertices strictly left of `p` in `a` and strictly
/// right of `q` in `b`, `right_to_left` the opposite, and `net_flow` is the
/// change in the size of the strict right side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossingStats {
    pub left_to_right: u64,
    pub right_to_left: u64,
    pub net_flow: i64,
}

/// Counts satisfy `left_to_right - right_to_left = net_flow` whenever no
/// vertex sits exactly on a cut.
pub fn crossing_stats(a: &VertexOrdering, p: Pos, b: &VertexOrdering, q: Pos) -> Result<CrossingStats> {
    require_same_domain(a, b)?;
    let mut ltr = 0u64;
    let mut rtl = 0u64;
    let mut right_a = 0i64;
    let mut right_b = 0i64;
    for (v, pa) in a.iter() {
        let pb = b.position(v).unwrap();
        if pa < p && pb > q {
            ltr += 1;
        }
        if pa > p && pb < q {
            rtl += 1;
        }
        if pa > p {
            right_a += 1;
        }
        if pb > q {
            right_b += 1;
        }
    }
    Ok(CrossingStats {
        left_to_right: ltr,
        right_to_left: rtl,
        net_flow: right_b - right_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::pos_int;

    fn ordering_of(order: &[usize]) -> VertexOrdering {
        Ranking::from_order(order.to_vec()).unwrap().to_ordering()
    }

    #[test]
    fn kendall_basics() {
        let id = Ranking::identity(4);
        assert_eq!(kendall_tau_rankings(&id, &id).unwrap(), 0);
        assert_eq!(kendall_tau_rankings(&id, &id.reversed()).unwrap(), 6);
        let swapped = Ranking::from_order(vec![0, 2, 1, 3]).unwrap();
        assert_eq!(kendall_tau_rankings(&id, &swapped).unwrap(), 1);
        assert_eq!(kendall_tau_mod_reversal(&id.reversed(), &id).unwrap(), 0);
        let other = Ranking::from_order(vec![4, 5, 6]).unwrap();
        assert!(kendall_tau_rankings(&id, &other).is_err());
    }

    #[test]
    fn kendall_on_orderings_matches_rankings() {
        let a = Ranking::from_order(vec![3, 1, 0, 2]).unwrap();
        let b = Ranking::from_order(vec![0, 1, 2, 3]).unwrap();
        assert_eq!(
            kendall_tau(&a.to_ordering(), &b.to_ordering()).unwrap(),
            kendall_tau_rankings(&a, &b).unwrap()
        );
    }

    #[test]
    fn crossing_identity_and_example() {
        let a = ordering_of(&[0, 1, 2, 3]);
        let same = crossing_stats(&a, pos_int(2), &a, pos_int(2)).unwrap();
        assert_eq!(
            same,
            CrossingStats { left_to_right: 0, right_to_left: 0, net_flow: 0 }
        );
        // Vertex 1 moves above the cut, which pushes vertex 2 below it:
        // equal cuts conserve side sizes, so the flows cancel.
        let b = ordering_of(&[0, 2, 3, 1]);
        let cut = Pos::new(5, 2);
        let s = crossing_stats(&a, cut, &b, cut).unwrap();
        assert_eq!(
            s,
            CrossingStats { left_to_right: 1, right_to_left: 1, net_flow: 0 }
        );
        assert_eq!(s.left_to_right as i64 - s.right_to_left as i64, s.net_flow);
        // Different cuts in the same ordering: vertex 2 sits right of the
        // first cut but left of the second.
        let s = crossing_stats(&a, cut, &a, Pos::new(7, 2)).unwrap();
        assert_eq!(
            s,
            CrossingStats { left_to_right: 0, right_to_left: 1, net_flow: -1 }
        );
        assert_eq!(s.left_to_right as i64 - s.right_to_left as i64, s.net_flow);
    }
}
