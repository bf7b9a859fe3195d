//! Brute-force ground truth.
//!
//! Everything here is computed by plain enumeration and shares only the data
//! model with the solvers: permutations by lexicographic listing, subsidies
//! by walking every simple path of the envy graph, global optima by listing
//! every allocation. Deliberately independent of the Hungarian method and the
//! all-pairs path sweep so it can serve as their oracle.

use crate::error::{Error, Result};
use crate::fairness::is_ef1;
use crate::matching::Permutation;
use crate::model::{Allocation, Instance, SubsidyVector};
use crate::scalar::Scalar;
use crate::subsidy::WeightMatrix;

/// Enumeration limits for the brute-force routines.
#[derive(Clone, Debug)]
pub struct OracleBudget {
    /// Cap on `n^m` for allocation enumeration.
    pub max_allocations: u64,
    /// Cap on `n!` for permutation enumeration.
    pub max_permutations: u64,
    /// Cap on the number of simple paths walked per envy graph.
    pub max_simple_paths: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_allocations: 1_000_000,
            max_permutations: 40_320, // 8!
            max_simple_paths: 1_000_000,
        }
    }
}

/// Maximum-weight permutation by full enumeration in lexicographic order;
/// the first maximum found is returned, so ties resolve lexicographically.
pub fn brute_max_weight_perm<S: Scalar>(
    w: &WeightMatrix<S>,
    budget: &OracleBudget,
) -> Result<(Permutation, S)> {
    let n = w.n();
    let mut count = 1u128;
    for k in 2..=n as u128 {
        count = count.saturating_mul(k);
    }
    if count > budget.max_permutations as u128 {
        return Err(Error::BudgetExceeded(format!(
            "{n}! permutations exceed the cap of {}",
            budget.max_permutations
        )));
    }
    let mut used = vec![false; n];
    let mut current = Vec::with_capacity(n);
    let mut best: Option<(Vec<usize>, S)> = None;
    enumerate_perms(w, &mut used, &mut current, S::zero(), &mut best);
    let (map, total) = best.expect("at least one permutation");
    Ok((Permutation::new(map)?, total))
}

fn enumerate_perms<S: Scalar>(
    w: &WeightMatrix<S>,
    used: &mut [bool],
    current: &mut Vec<usize>,
    acc: S,
    best: &mut Option<(Vec<usize>, S)>,
) {
    let n = w.n();
    if current.len() == n {
        if best.as_ref().is_none_or(|(_, t)| acc > *t) {
            *best = Some((current.clone(), acc));
        }
        return;
    }
    let row = current.len();
    for col in 0..n {
        if used[col] {
            continue;
        }
        used[col] = true;
        current.push(col);
        enumerate_perms(w, used, current, acc.clone() + w.at(row, col).clone(), best);
        current.pop();
        used[col] = false;
    }
}

/// Minimum subsidies by enumerating every simple path of the envy graph.
///
/// `sigma` must be maximum weight (verified against [`brute_max_weight_perm`]).
/// A simple path that closes into a positive-weight cycle makes the
/// arrangement non-envy-freeable and is reported as an error.
pub fn brute_min_subsidy<S: Scalar>(
    w: &WeightMatrix<S>,
    sigma: &Permutation,
    budget: &OracleBudget,
) -> Result<SubsidyVector<S>> {
    let n = w.n();
    if n > 8 {
        return Err(Error::BudgetExceeded(format!(
            "path enumeration supports at most 8 agents, got {n}"
        )));
    }
    if sigma.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "permutation length {} for {n} bundles",
            sigma.len()
        )));
    }
    let (_, best_total) = brute_max_weight_perm(w, budget)?;
    if w.total_under(sigma) != best_total {
        return Err(Error::Precondition(
            "sigma is not a maximum-weight permutation".into(),
        ));
    }
    brute_min_subsidy_unchecked(w, sigma, budget)
}

fn brute_min_subsidy_unchecked<S: Scalar>(
    w: &WeightMatrix<S>,
    sigma: &Permutation,
    budget: &OracleBudget,
) -> Result<SubsidyVector<S>> {
    let n = w.n();
    let gamma: Vec<Vec<S>> = (0..n)
        .map(|i| {
            let own = w.at(i, sigma.get(i)).clone();
            (0..n)
                .map(|j| w.at(i, sigma.get(j)).clone() - own.clone())
                .collect()
        })
        .collect();
    let mut p = vec![S::zero(); n];
    for start in 0..n {
        let mut visited = vec![false; n];
        visited[start] = true;
        let mut best = S::zero();
        let mut walked = 0u64;
        walk_paths(
            &gamma,
            start,
            start,
            S::zero(),
            &mut visited,
            &mut best,
            &mut walked,
            budget.max_simple_paths,
        )?;
        p[sigma.get(start)] = best;
    }
    SubsidyVector::new(p)
}

#[allow(clippy::too_many_arguments)]
fn walk_paths<S: Scalar>(
    gamma: &[Vec<S>],
    start: usize,
    at: usize,
    length: S,
    visited: &mut [bool],
    best: &mut S,
    walked: &mut u64,
    cap: u64,
) -> Result<()> {
    *walked += 1;
    if *walked > cap {
        return Err(Error::BudgetExceeded(format!(
            "more than {cap} simple paths from one vertex"
        )));
    }
    if length > *best {
        *best = length.clone();
    }
    if at != start {
        let closing = length.clone() + gamma[at][start].clone();
        if closing > S::zero() {
            return Err(Error::NotEnvyFreeable);
        }
    }
    let n = gamma.len();
    for next in 0..n {
        if visited[next] {
            continue;
        }
        visited[next] = true;
        walk_paths(
            gamma,
            start,
            next,
            length.clone() + gamma[at][next].clone(),
            visited,
            best,
            walked,
            cap,
        )?;
        visited[next] = false;
    }
    Ok(())
}

/// Global minimum-total-subsidy baseline: enumerates every ordered allocation,
/// rearranges each by its maximum-weight permutation, and keeps the one whose
/// minimum subsidies have the smallest total (first hit wins ties, so the
/// result is the lexicographically first such allocation).
///
/// Returns the rearranged (envy-freeable) allocation with agent-indexed
/// payments.
pub fn brute_min_total_subsidy<S: Scalar>(
    inst: &Instance<S>,
    budget: &OracleBudget,
) -> Result<(Allocation, SubsidyVector<S>)> {
    let n = inst.n();
    let m = inst.m();
    let space = (n as u128).checked_pow(m as u32);
    match space {
        Some(count) if count <= budget.max_allocations as u128 => {}
        _ => {
            return Err(Error::BudgetExceeded(format!(
                "{n}^{m} allocations exceed the cap of {}",
                budget.max_allocations
            )))
        }
    }
    let mut best: Option<(Allocation, SubsidyVector<S>, S)> = None;
    for_each_allocation(n, m, |alloc| {
        let w = weight_matrix_direct(inst, alloc)?;
        let (sigma, _) = brute_max_weight_perm(&w, budget)?;
        let p = brute_min_subsidy_unchecked(&w, &sigma, budget)?;
        let total = p.total();
        if best.as_ref().is_none_or(|(_, _, t)| total < *t) {
            let arranged = alloc.permuted(&sigma);
            let agent_p = p.permuted(&sigma);
            best = Some((arranged, agent_p, total));
        }
        Ok(())
    })?;
    let (alloc, p, _) = best.expect("at least one allocation");
    Ok((alloc, p))
}

/// Whether any allocation of the instance is EF1, by enumeration.
pub fn brute_is_ef1_exists<S: Scalar>(inst: &Instance<S>, budget: &OracleBudget) -> Result<bool> {
    let n = inst.n();
    let m = inst.m();
    let space = (n as u128).checked_pow(m as u32);
    match space {
        Some(count) if count <= budget.max_allocations as u128 => {}
        _ => {
            return Err(Error::BudgetExceeded(format!(
                "{n}^{m} allocations exceed the cap of {}",
                budget.max_allocations
            )))
        }
    }
    let mut found = false;
    for_each_allocation(n, m, |alloc| {
        if !found && is_ef1(inst, alloc)? {
            found = true;
        }
        Ok(())
    })?;
    Ok(found)
}

/// Calls `f` on every ordered allocation, in lexicographic order of the
/// item-to-agent assignment vector (item 0 most significant).
fn for_each_allocation<F>(n: usize, m: usize, mut f: F) -> Result<()>
where
    F: FnMut(&Allocation) -> Result<()>,
{
    let mut assignment = vec![0usize; m];
    loop {
        let mut bundles: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (item, &agent) in assignment.iter().enumerate() {
            bundles[agent].push(item);
        }
        let alloc = Allocation::from_parts_unchecked(bundles);
        f(&alloc)?;
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < n {
                break;
            }
            assignment[pos] = 0;
        }
    }
}

fn weight_matrix_direct<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
) -> Result<WeightMatrix<S>> {
    let n = inst.n();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(inst.value(i, alloc.bundle(j))?);
        }
        rows.push(row);
    }
    WeightMatrix::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{frac, int, Rat};

    fn matrix(rows: &[&[Rat]]) -> WeightMatrix<Rat> {
        WeightMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn example1_matrix() -> WeightMatrix<Rat> {
        matrix(&[
            &[int(3), int(0), int(0)],
            &[int(4), int(3), int(0)],
            &[int(0), int(4), int(3)],
        ])
    }

    #[test]
    fn brute_permutation_examples() {
        let budget = OracleBudget::default();
        let (sigma, total) = brute_max_weight_perm(&example1_matrix(), &budget).unwrap();
        assert!(sigma.is_identity());
        assert_eq!(total, int::<Rat>(9));

        let (sigma, total) =
            brute_max_weight_perm(&matrix(&[&[frac(5, 3)]]), &budget).unwrap();
        assert!(sigma.is_identity());
        assert_eq!(total, frac::<Rat>(5, 3));

        let (sigma, total) =
            brute_max_weight_perm(&matrix(&[&[int(0), int(1)], &[int(1), int(0)]]), &budget)
                .unwrap();
        assert_eq!(sigma.as_slice(), &[1, 0]);
        assert_eq!(total, int::<Rat>(2));
    }

    #[test]
    fn brute_permutation_budget() {
        let rows: Vec<Vec<Rat>> = (0..9).map(|_| vec![int(0); 9]).collect();
        let w = WeightMatrix::new(rows).unwrap();
        let tight = OracleBudget {
            max_permutations: 1000,
            ..OracleBudget::default()
        };
        assert!(matches!(
            brute_max_weight_perm(&w, &tight),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn brute_subsidy_examples() {
        let budget = OracleBudget::default();
        let p = brute_min_subsidy(&example1_matrix(), &Permutation::identity(3), &budget).unwrap();
        assert_eq!(p.as_slice(), &[int::<Rat>(0), int(1), int(2)]);

        let zero = matrix(&[&[int(0), int(0)], &[int(0), int(0)]]);
        let p = brute_min_subsidy(&zero, &Permutation::identity(2), &budget).unwrap();
        assert_eq!(p.as_slice(), &[int::<Rat>(0), int(0)]);
    }

    #[test]
    fn brute_subsidy_rejects_non_maximum_sigma() {
        let budget = OracleBudget::default();
        let swap = matrix(&[&[int(0), int(1)], &[int(1), int(0)]]);
        assert!(matches!(
            brute_min_subsidy(&swap, &Permutation::identity(2), &budget),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn global_minimum_single_contested_item() {
        let inst = crate::Instance::<Rat>::additive(vec![vec![int(1)], vec![int(1)]]).unwrap();
        let (alloc, p) = brute_min_total_subsidy(&inst, &OracleBudget::default()).unwrap();
        assert_eq!(p.total(), int::<Rat>(1));
        assert!(crate::subsidy::is_envy_freeable(
            &crate::subsidy::weight_matrix(&inst, &alloc).unwrap()
        ));
    }

    #[test]
    fn global_minimum_no_items() {
        let inst = crate::Instance::<Rat>::additive(vec![vec![], vec![], vec![]]).unwrap();
        let (_, p) = brute_min_total_subsidy(&inst, &OracleBudget::default()).unwrap();
        assert_eq!(p.total(), int::<Rat>(0));
    }

    #[test]
    fn ef1_always_exists_for_doubly_monotone_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(41);
        let budget = OracleBudget::default();
        for _ in 0..100 {
            let n = rng.gen_range(2..=3);
            let m = rng.gen_range(0..=5);
            let values: Vec<Vec<Rat>> = (0..n)
                .map(|_| (0..m).map(|_| frac(rng.gen_range(-10..=10), 10)).collect())
                .collect();
            let inst = crate::Instance::additive(values).unwrap();
            assert!(brute_is_ef1_exists(&inst, &budget).unwrap());
        }
    }

    #[test]
    fn ef1_exists_trivially_with_no_items() {
        let inst = crate::Instance::<Rat>::additive(vec![vec![], vec![]]).unwrap();
        assert!(brute_is_ef1_exists(&inst, &OracleBudget::default()).unwrap());
    }

    #[test]
    fn ef1_always_exists_for_two_agent_tables() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(43);
        let budget = OracleBudget::default();
        for _ in 0..60 {
            let m = rng.gen_range(0..=5usize);
            let tables: Vec<Vec<Rat>> = (0..2)
                .map(|_| {
                    // Difference of two capped weight sums: marginals of both
                    // signs, all within the unit bound.
                    let gains: Vec<Rat> =
                        (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect();
                    let losses: Vec<Rat> =
                        (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect();
                    let gain_cap = frac::<Rat>(rng.gen_range(0..=10 * m as i64), 10);
                    let loss_cap = frac::<Rat>(rng.gen_range(0..=10 * m as i64), 10);
                    (0..1usize << m)
                        .map(|mask| {
                            let capped = |weights: &[Rat], cap: &Rat| -> Rat {
                                let sum = weights
                                    .iter()
                                    .enumerate()
                                    .filter(|(e, _)| mask & (1 << e) != 0)
                                    .fold(int::<Rat>(0), |acc, (_, w)| acc + w.clone());
                                if sum > *cap {
                                    cap.clone()
                                } else {
                                    sum
                                }
                            };
                            capped(&gains, &gain_cap) - capped(&losses, &loss_cap)
                        })
                        .collect()
                })
                .collect();
            let inst = crate::Instance::table(tables).unwrap();
            assert!(brute_is_ef1_exists(&inst, &budget).unwrap());
        }
    }
}
