//! Exact maximum-weight assignment and permutations.
//!
//! The Hungarian method below runs on any [`Scalar`], so weights stay exact
//! rationals end to end. A lexicographic refinement on top picks a canonical
//! optimum when several assignments tie.

use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};

/// A bijection on `0..n`, stored as `sigma[i] = image of i`.
///
/// Applied to an allocation it produces the rearrangement whose bundle `i`
/// is the original bundle `sigma(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(Error::InvalidPermutation(format!(
                    "{map:?} is not a bijection on 0..{n}"
                )));
            }
            seen[v] = true;
        }
        Ok(Permutation(map))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> usize {
        self.0[index]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0usize; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Permutation(inv)
    }
}

/// One maximum-weight perfect assignment of rows to columns with its total.
///
/// Hungarian method with potentials, minimizing the negated weights; `O(n^3)`
/// scalar operations.
pub fn max_assignment<S: Scalar>(weights: &[Vec<S>]) -> (Vec<usize>, S) {
    let n = weights.len();
    if n == 0 {
        return (Vec::new(), S::zero());
    }
    debug_assert!(weights.iter().all(|row| row.len() == n));
    // 1-based arrays; row/column 0 are sentinels.
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1].clone();
    let mut u = vec![S::zero(); n + 1];
    let mut v = vec![S::zero(); n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<S>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta: Option<S> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0].clone() - v[j].clone();
                if minv[j].as_ref().is_none_or(|m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let m = minv[j].as_ref().unwrap();
                if delta.as_ref().is_none_or(|d| m < d) {
                    delta = Some(m.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("augmenting path always reaches a free column");
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] = u[row_of_col[j]].clone() + delta.clone();
                    v[j] = v[j].clone() - delta.clone();
                } else if let Some(m) = minv[j].as_mut() {
                    *m = m.clone() - delta.clone();
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[row_of_col[j] - 1] = j - 1;
    }
    let total = sum((0..n).map(|i| weights[i][assign[i]].clone()));
    (assign, total)
}

/// The lexicographically smallest assignment among those of maximum total
/// weight.
///
/// Fixes rows in order, keeping the smallest column that still completes to
/// the optimum; each candidate is verified with a fresh assignment solve on
/// the remaining submatrix.
pub fn lex_max_assignment<S: Scalar>(weights: &[Vec<S>]) -> (Vec<usize>, S) {
    let n = weights.len();
    let (_, best) = max_assignment(weights);
    let mut free_cols: Vec<usize> = (0..n).collect();
    let mut fixed = Vec::with_capacity(n);
    let mut fixed_total = S::zero();
    for row in 0..n {
        let mut chosen = None;
        for (slot, &col) in free_cols.iter().enumerate() {
            let mut rest_cols = free_cols.clone();
            rest_cols.remove(slot);
            let rest = best_over(weights, row + 1, &rest_cols);
            if fixed_total.clone() + weights[row][col].clone() + rest == best {
                chosen = Some(slot);
                break;
            }
        }
        let slot = chosen.expect("a maximum assignment extends every optimal prefix");
        let col = free_cols.remove(slot);
        fixed_total = fixed_total + weights[row][col].clone();
        fixed.push(col);
    }
    (fixed, best)
}

fn best_over<S: Scalar>(weights: &[Vec<S>], from_row: usize, cols: &[usize]) -> S {
    if cols.is_empty() {
        return S::zero();
    }
    let sub: Vec<Vec<S>> = (from_row..weights.len())
        .map(|i| cols.iter().map(|&j| weights[i][j].clone()).collect())
        .collect();
    max_assignment(&sub).1
}
