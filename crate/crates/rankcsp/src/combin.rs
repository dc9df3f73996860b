//! Small combinatorial helpers: binomials, lexicographic subset walks, and
//! permutation ranking. Everything here is exact integer arithmetic.

/// C(n, k) as u64. Returns 0 when k > n. Exact for every size used in this
/// crate (k never exceeds [`crate::MAX_ARITY`] in hot paths, n stays far below
/// overflow territory for the diagnostic uses).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 1..=k {
        // Multiply before dividing; the running product is always divisible.
        r = r * (n - k + i) as u64 / i as u64;
    }
    r
}

pub fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

/// Colexicographic rank of a strictly increasing index set: sum of C(s_i, i+1).
/// Ranks all k-subsets of any ground set 0..n into 0..C(n,k) densely.
pub fn colex_rank(sorted: &[usize]) -> usize {
    sorted
        .iter()
        .enumerate()
        .map(|(i, &s)| binomial(s, i + 1) as usize)
        .sum()
}

/// Visit all k-element index combinations of 0..m in lexicographic order.
/// The slice passed to `f` is strictly increasing. `k == 0` yields one empty
/// combination.
pub fn for_each_combination(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        if k == 0 {
            return;
        }
        // Find the rightmost index that can still advance.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != m - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Lexicographic rank of a permutation of 0..len via its Lehmer code.
pub fn permutation_lex_rank(q: &[usize]) -> usize {
    let k = q.len();
    let mut rank = 0usize;
    for i in 0..k {
        let smaller_later = q[i + 1..].iter().filter(|&&x| x < q[i]).count();
        rank += smaller_later * factorial(k - 1 - i) as usize;
    }
    rank
}

/// Inverse of [`permutation_lex_rank`]: the rank-th permutation of 0..k in
/// lexicographic order.
pub fn permutation_by_lex_rank(k: usize, mut rank: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..k).collect();
    let mut out = Vec::with_capacity(k);
    for i in (0..k).rev() {
        let f = factorial(i) as usize;
        let j = rank / f;
        rank %= f;
        out.push(pool.remove(j));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_table() {
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(4, 5), 0);
        assert_eq!(binomial(60, 3), 34220);
        assert_eq!(binomial(199, 3), 1_293_699);
    }

    #[test]
    fn combinations_are_lex_and_complete() {
        let mut seen = Vec::new();
        for_each_combination(5, 3, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[0], vec![0, 1, 2]);
        assert_eq!(seen[9], vec![2, 3, 4]);
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(seen, sorted, "lex order");
        // Colex rank is a bijection onto 0..C(5,3).
        let mut ranks: Vec<usize> = seen.iter().map(|c| colex_rank(c)).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn empty_combination_visited_once() {
        let mut count = 0;
        for_each_combination(4, 0, |c| {
            assert!(c.is_empty());
            count += 1;
        });
        assert_eq!(count, 1);
    }

    #[test]
    fn permutation_rank_roundtrip() {
        for k in 0..=4 {
            for r in 0..factorial(k) as usize {
                let p = permutation_by_lex_rank(k, r);
                assert_eq!(permutation_lex_rank(&p), r);
            }
        }
        assert_eq!(permutation_lex_rank(&[0, 1, 2]), 0);
        assert_eq!(permutation_lex_rank(&[2, 1, 0]), 5);
    }
}
