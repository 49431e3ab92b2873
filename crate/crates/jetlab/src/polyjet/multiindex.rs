//! Multi-index combinatorics for truncated polynomials in `m` variables.
//!
//! The single canonical ordering used across the crate is graded
//! lexicographic: indices are sorted by total order first, and within a
//! fixed order lexicographically with the first exponent largest, so for
//! `m = 2, r = 2` the sequence is
//! `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)`.

use serde::{Deserialize, Serialize};

/// Exponent vector of a monomial `X_1^{a_1} ... X_m^{a_m}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(m: usize) -> Self {
        MultiIndex(vec![0; m])
    }

    /// Unit index `e_i`.
    pub fn unit(m: usize, axis: usize) -> Self {
        let mut e = vec![0; m];
        e[axis] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total order `|alpha|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn bump(&self, axis: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[axis] += 1;
        MultiIndex(e)
    }

    /// `alpha!` as an `i64`; desk-scale orders keep this well inside range.
    pub fn factorial(&self) -> i64 {
        self.0.iter().map(|&a| factorial(a as i64)).product()
    }
}

pub fn factorial(n: i64) -> i64 {
    (2..=n).product::<i64>().max(1)
}

/// Binomial coefficient as `usize`; inputs stay desk-scale.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of exponent vectors in `m` variables with order exactly `d`.
fn count_of_order(m: usize, d: usize) -> usize {
    binomial(m + d - 1, d)
}

/// Number of exponent vectors in `m` variables with order at most `r`, i.e.
/// the coefficient length `C(m+r, r)` of a truncated polynomial.
pub fn basis_len(m: usize, r: usize) -> usize {
    binomial(m + r, r)
}

/// All multi-indices of order `<= r` in graded-lex order.
pub fn enumerate_multiindices(m: usize, r: usize) -> Vec<MultiIndex> {
    assert!(m >= 1, "dimension must be at least 1");
    let mut out = Vec::with_capacity(basis_len(m, r));
    let mut current = vec![0u32; m];
    for d in 0..=r {
        emit_of_order(&mut out, &mut current, 0, d as u32);
    }
    out
}

fn emit_of_order(out: &mut Vec<MultiIndex>, current: &mut [u32], pos: usize, rem: u32) {
    if pos + 1 == current.len() {
        current[pos] = rem;
        out.push(MultiIndex(current.to_vec()));
        return;
    }
    // First exponent largest comes first within a degree block.
    for e in (0..=rem).rev() {
        current[pos] = e;
        emit_of_order(out, current, pos + 1, rem - e);
    }
}

/// Position of `alpha` in the graded-lex enumeration for its dimension.
pub fn rank(alpha: &MultiIndex) -> usize {
    let m = alpha.dim();
    let d = alpha.order() as usize;
    // Offset of the degree-d block.
    let mut pos = if d == 0 { 0 } else { basis_len(m, d - 1) };
    // Rank within the block: count vectors with a larger leading exponent,
    // then recurse on the tail.
    let mut rem = d;
    for (axis, &e) in alpha.0.iter().enumerate() {
        let vars_left = m - axis - 1;
        if vars_left == 0 {
            break;
        }
        for larger in (e as usize + 1)..=rem {
            pos += count_of_order(vars_left, rem - larger);
        }
        rem -= e as usize;
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_m2_r2_matches_graded_lex() {
        let idx = enumerate_multiindices(2, 2);
        let expected: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![0, 1],
            vec![2, 0],
            vec![1, 1],
            vec![0, 2],
        ];
        assert_eq!(idx.len(), 6);
        assert_eq!(binomial(4, 2), 6);
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(&idx[i].0, e);
        }
    }

    #[test]
    fn enumeration_m1_r3() {
        let idx = enumerate_multiindices(1, 3);
        let got: Vec<u32> = idx.iter().map(|a| a.0[0]).collect();
        assert_eq!(got, vec![0, 1, 2, 3]);
    }

    #[test]
    fn enumeration_m3_r4_length_against_brute_force() {
        // Independent oracle: enumerate exponent triples directly.
        let mut count = 0usize;
        for a in 0..=4u32 {
            for b in 0..=4u32 {
                for c in 0..=4u32 {
                    if a + b + c <= 4 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, 35);
        assert_eq!(enumerate_multiindices(3, 4).len(), 35);
    }

    #[test]
    fn rank_is_inverse_of_enumeration() {
        for m in 1..=4 {
            for r in 0..=5 {
                let idx = enumerate_multiindices(m, r);
                for (i, a) in idx.iter().enumerate() {
                    assert_eq!(rank(a), i, "m={m} r={r} alpha={:?}", a.0);
                }
            }
        }
    }

    #[test]
    fn factorials() {
        assert_eq!(MultiIndex(vec![3, 2, 0]).factorial(), 12);
        assert_eq!(MultiIndex(vec![0, 0]).factorial(), 1);
    }
}
