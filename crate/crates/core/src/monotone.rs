//! Improved solution for monotone valuations with three or more agents.
//!
//! The direct pipeline can be forced to pay some agent `n-1`; for monotone
//! valuations a single item move avoids that. The pipeline here: rearrange an
//! EF1 allocation to maximize welfare among EF1 rearrangements, solve it, and
//! if some payment still exceeds `n - 3/2`, relabel agents along the spanning
//! longest envy path, move one admissible item from the head bundle of the
//! chain to its tail, and solve the modified allocation. Every inequality the
//! correctness argument relies on is asserted at runtime; a violation is
//! reported as an internal error.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::fairness::{ef1_witness, is_ef1, is_envy_free_with_subsidy};
use crate::matching::{lex_max_assignment, Permutation};
use crate::model::{Allocation, Instance, InstanceClass, SubsidyVector};
use crate::scalar::{frac, int, sum, Scalar};
use crate::subsidy::{
    arrange_and_verify, diagnostic_view, max_weight_permutation, min_subsidy, weight_matrix,
    DiagnosticView, SubsidizedAllocation, WeightMatrix,
};

/// Cap on agents for the modification step (it reconstructs a spanning path
/// by subset dynamic programming).
pub const MAX_CHAIN_AGENTS: usize = 16;

/// Which payment analysis certified the returned solution.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Branch {
    /// No modification was needed; the direct solution already meets the
    /// improved bounds.
    Direct,
    /// The modified allocation in chain order certifies the bounds.
    Prime,
    /// The rotated modified allocation certifies the bounds.
    DoublePrime,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Direct => "direct",
            Branch::Prime => "prime",
            Branch::DoublePrime => "double-prime",
        }
    }
}

/// Everything the improved pipeline produced on the way to its answer.
///
/// `a_prime`, `a_double_prime`, `s` and `r` are expressed in the relabeled
/// agent order (`relabeling` maps new indices to original agents).
#[derive(Clone, Debug)]
pub struct ImprovementTrace<S> {
    pub base_allocation: Allocation,
    /// Bundle-indexed minimum subsidies of the base allocation.
    pub base_subsidy: SubsidyVector<S>,
    pub base_sigma: Permutation,
    pub triggered: bool,
    /// Spanning longest envy path, original agent labels, start first.
    pub longest_path: Option<Vec<usize>>,
    /// New index -> original agent.
    pub relabeling: Option<Permutation>,
    pub e_star: Option<usize>,
    pub a_prime: Option<Allocation>,
    pub a_double_prime: Option<Allocation>,
    /// Chain slacks `s_2..s_n` of the relabeled allocation.
    pub s: Option<Vec<S>>,
    /// Maximum-envy slacks of the relabeled allocation.
    pub r: Option<Vec<S>>,
    /// Maximum-weight permutation of the modified allocation.
    pub tau: Option<Permutation>,
    pub chosen: Branch,
}

/// Rearranges an EF1 allocation to maximize utilitarian welfare over all
/// bundle permutations that keep it EF1.
///
/// Agent `i` may take bundle `X_j` iff `v_i(X_j)` is at least what every
/// other bundle is worth to `i` after removing one item; the maximum-weight
/// perfect matching over these admissible pairs yields the result.
pub fn welfare_max_ef1_rearrange<S: Scalar>(
    inst: &Instance<S>,
    x: &Allocation,
) -> Result<Allocation> {
    if inst.class() != InstanceClass::Monotone {
        return Err(Error::Precondition(
            "welfare rearrangement requires a monotone instance".into(),
        ));
    }
    if let Some((i, j)) = ef1_witness(inst, x)? {
        return Err(Error::Precondition(format!(
            "input allocation is not EF1 (agent {i} envies bundle {j} by more than one item)"
        )));
    }
    let n = inst.n();
    let w = weight_matrix(inst, x)?;
    // Threshold per agent: the best it could demand from any bundle after
    // removing one item.
    let mut thresholds = Vec::with_capacity(n);
    for i in 0..n {
        let mut t: Option<S> = None;
        for k in 0..n {
            let mut low = w.at(i, k).clone();
            for &e in x.bundle(k) {
                let reduced: Vec<usize> =
                    x.bundle(k).iter().copied().filter(|&y| y != e).collect();
                let v = inst.value(i, &reduced)?;
                if v < low {
                    low = v;
                }
            }
            if t.as_ref().is_none_or(|cur| low > *cur) {
                t = Some(low);
            }
        }
        thresholds.push(t.expect("at least one bundle"));
    }
    // Inadmissible pairs get a weight low enough that no maximum matching
    // ever uses one while an admissible perfect matching exists.
    let abs_total = sum(
        w.rows()
            .iter()
            .flat_map(|row| row.iter().map(|v| v.abs())),
    );
    let forbidden = -(S::one() + int::<S>(2) * abs_total);
    let admissible = |i: usize, j: usize| *w.at(i, j) >= thresholds[i];
    let grid: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if admissible(i, j) {
                        w.at(i, j).clone()
                    } else {
                        forbidden.clone()
                    }
                })
                .collect()
        })
        .collect();
    let (assign, _) = lex_max_assignment(&grid);
    for (i, &j) in assign.iter().enumerate() {
        if !admissible(i, j) {
            return Err(Error::Internal(
                "no EF1-preserving perfect matching exists".into(),
            ));
        }
    }
    let sigma = Permutation::new(assign)?;
    let rearranged = x.permuted(&sigma);
    if !is_ef1(inst, &rearranged)? {
        return Err(Error::Internal(
            "welfare rearrangement broke the EF1 property".into(),
        ));
    }
    Ok(rearranged)
}

/// The allocation relabeled so that the spanning longest envy path runs from
/// the last agent down to the first, together with the chain slack values.
#[derive(Clone, Debug)]
pub struct Relabeled<S> {
    pub instance: Instance<S>,
    pub allocation: Allocation,
    /// New index -> original agent.
    pub to_original: Permutation,
    /// The longest path in original labels, start (largest payment) first.
    pub path: Vec<usize>,
    /// Relabeled bundle-indexed minimum subsidies.
    pub subsidy: SubsidyVector<S>,
    /// Relabeled maximum-envy slacks.
    pub r: Vec<S>,
    /// Chain slacks `s_2..s_n`: `s[t]` belongs to the edge from relabeled
    /// agent `t+1` down to `t`.
    pub s: Vec<S>,
    /// Dual view of the relabeled matrix, with `s` populated.
    pub diagnostics: DiagnosticView<S>,
}

/// Relabels agents along the longest path of the slack-augmented envy graph.
///
/// Returns `None` when no payment exceeds `n - 3/2` (no modification is
/// needed). Otherwise the longest path from the most-subsidized agent must
/// span all agents; agents are renamed so the path reads `n-1, n-2, ..., 0`
/// and the slack values `s` are reported. `p_star` must be the minimum
/// subsidy vector of `alloc`.
pub fn relabel_along_longest_path<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
    p_star: &SubsidyVector<S>,
) -> Result<Option<Relabeled<S>>> {
    let n = inst.n();
    let w = weight_matrix(inst, alloc)?;
    let sigma = max_weight_permutation(&w);
    let expected = min_subsidy(&w, &sigma)?;
    if *p_star != expected {
        return Err(Error::Precondition(
            "p_star is not the minimum subsidy vector of the allocation".into(),
        ));
    }
    let threshold = frac::<S>(2 * n as i64 - 3, 2);
    if p_star.max() <= threshold {
        return Ok(None);
    }
    if n > MAX_CHAIN_AGENTS {
        return Err(Error::BudgetExceeded(format!(
            "modification step supports at most {MAX_CHAIN_AGENTS} agents, got {n}"
        )));
    }

    let dv = diagnostic_view(&w, p_star)?;
    let hat = &dv.hat_w;
    let gamma: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| hat.at(i, j).clone() - hat.at(i, i).clone())
                .collect()
        })
        .collect();
    let start = argmax_index(p_star.as_slice());
    let table = subset_longest(&gamma, n);
    let overall = (0..1usize << n)
        .filter(|mask| mask & (1 << start) != 0)
        .filter_map(|mask| table[start][mask].clone())
        .max()
        .expect("start vertex has at least the empty path");
    if overall != *p_star.get(start) {
        return Err(Error::Internal(
            "longest-path recomputation disagrees with the subsidy vector".into(),
        ));
    }
    let full = (1usize << n) - 1;
    if table[start][full] != Some(overall.clone()) {
        return Err(Error::Internal(
            "longest envy path does not span all agents despite a large payment".into(),
        ));
    }
    let path = reconstruct_lex_path(&gamma, &table, start, full);

    // Relabel so the path reads n-1, n-2, ..., 0.
    let to_original: Vec<usize> = (0..n).map(|k| path[n - 1 - k]).collect();
    let to_original = Permutation::new(to_original)?;
    let instance = inst.relabel_agents(to_original.as_slice())?;
    let allocation = alloc.permuted(&to_original);
    let subsidy = p_star.permuted(&to_original);
    let r: Vec<S> = to_original.iter().map(|old| dv.r[old].clone()).collect();
    let w_rel = weight_matrix(&instance, &allocation)?;

    let one = S::one();
    let mut s = Vec::with_capacity(n - 1);
    for k in 1..n {
        s.push(
            one.clone() + r[k].clone() + w_rel.at(k, k).clone() - w_rel.at(k, k - 1).clone(),
        );
    }

    // Chain slack identities the downstream argument relies on.
    for k in 1..n {
        let sk = &s[k - 1];
        if !(S::zero() <= r[k] && r[k] <= *sk && *sk <= one) {
            return Err(Error::Internal(format!(
                "chain slack out of range at position {k}"
            )));
        }
    }
    let s_total = sum(s.iter().cloned());
    if s_total >= frac::<S>(1, 2) {
        return Err(Error::Internal(
            "chain slacks sum to at least one half".into(),
        ));
    }
    let mut acc = S::zero();
    for k in 0..n {
        if *subsidy.get(k) != acc {
            return Err(Error::Internal(
                "payments do not telescope along the chain".into(),
            ));
        }
        if k + 1 < n {
            acc = acc + (one.clone() - s[k].clone());
        }
    }
    // Upper bound on forward edges: going from a lower to a higher relabeled
    // index costs at least the skipped chain weight.
    for a in 0..n {
        for b in (a + 1)..n {
            let lhs = w_rel.at(a, b).clone() - w_rel.at(a, a).clone() - r[a].clone();
            let skipped = sum((a..b).map(|t| one.clone() - s[t].clone()));
            if lhs > -skipped {
                return Err(Error::Internal(format!(
                    "forward envy edge ({a}, {b}) exceeds its chain bound"
                )));
            }
        }
    }
    // The head agent cannot value any other bundle much more than its own.
    if n >= 2 {
        let head = allocation.bundle(0);
        if head.is_empty() {
            return Err(Error::Internal(
                "chain head bundle is empty despite a positive chain edge".into(),
            ));
        }
        let mut min_drop: Option<S> = None;
        for &e in head {
            let reduced: Vec<usize> = head.iter().copied().filter(|&y| y != e).collect();
            let v = instance.value(0, &reduced)?;
            if min_drop.as_ref().is_none_or(|cur| v < *cur) {
                min_drop = Some(v);
            }
        }
        let min_drop = min_drop.expect("head bundle non-empty");
        let alt = w_rel.at(0, 0).clone() - (one.clone() - s[0].clone());
        let cap = if alt > min_drop { alt } else { min_drop };
        for b in 1..n {
            if *w_rel.at(0, b) > cap {
                return Err(Error::Internal(format!(
                    "head agent values bundle {b} above its replacement bound"
                )));
            }
        }
    }

    let mut diagnostics = diagnostic_view(&w_rel, &subsidy)?;
    diagnostics.s = Some(s.clone());

    Ok(Some(Relabeled {
        instance,
        allocation,
        to_original,
        path,
        subsidy,
        r,
        s,
        diagnostics,
    }))
}

fn argmax_index<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0usize;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// `table[v][mask]` is the maximum weight of a path starting at `v` and
/// visiting exactly the vertices of `mask` (None when `v` is outside `mask`).
fn subset_longest<S: Scalar>(gamma: &[Vec<S>], n: usize) -> Vec<Vec<Option<S>>> {
    let size = 1usize << n;
    let mut table: Vec<Vec<Option<S>>> = vec![vec![None; size]; n];
    for (v, row) in table.iter_mut().enumerate() {
        row[1 << v] = Some(S::zero());
    }
    for mask in 1..size {
        for v in 0..n {
            if mask & (1 << v) == 0 || mask == 1 << v {
                continue;
            }
            let rest = mask & !(1 << v);
            let mut best: Option<S> = None;
            for u in 0..n {
                if rest & (1 << u) == 0 {
                    continue;
                }
                if let Some(tail) = &table[u][rest] {
                    let candidate = gamma[v][u].clone() + tail.clone();
                    if best.as_ref().is_none_or(|b| candidate > *b) {
                        best = Some(candidate);
                    }
                }
            }
            table[v][mask] = best;
        }
    }
    table
}

/// Lexicographically smallest optimal path starting at `start` and visiting
/// exactly `mask`.
fn reconstruct_lex_path<S: Scalar>(
    gamma: &[Vec<S>],
    table: &[Vec<Option<S>>],
    start: usize,
    mask: usize,
) -> Vec<usize> {
    let n = gamma.len();
    let mut seq = vec![start];
    let mut cur = start;
    let mut mask = mask;
    while mask != 1 << cur {
        let target = table[cur][mask].clone().expect("path exists");
        let rest = mask & !(1 << cur);
        let mut next = None;
        for u in 0..n {
            if rest & (1 << u) == 0 {
                continue;
            }
            if let Some(tail) = &table[u][rest] {
                if gamma[cur][u].clone() + tail.clone() == target {
                    next = Some(u);
                    break;
                }
            }
        }
        let next = next.expect("optimal continuation exists");
        seq.push(next);
        mask = rest;
        cur = next;
    }
    seq
}

/// Lowest-indexed item of the first bundle whose removal the second agent
/// does not mind: `v_2(A_2) >= v_2(A_1 \ {e})`.
///
/// Returns `None` when the first bundle is empty. For a monotone EF1
/// allocation an admissible item always exists otherwise.
pub fn select_estar<S: Scalar>(inst: &Instance<S>, alloc: &Allocation) -> Result<Option<usize>> {
    inst.validate_allocation(alloc)?;
    if inst.n() < 2 {
        return Err(Error::Precondition(
            "item selection needs at least two agents".into(),
        ));
    }
    let head = alloc.bundle(0);
    if head.is_empty() {
        return Ok(None);
    }
    let second_own = inst.value(1, alloc.bundle(1))?;
    for &e in head {
        let reduced: Vec<usize> = head.iter().copied().filter(|&x| x != e).collect();
        if second_own >= inst.value(1, &reduced)? {
            return Ok(Some(e));
        }
    }
    Err(Error::Internal(
        "no admissible item in the head bundle despite EF1".into(),
    ))
}

/// Single right rotation of the bundle list: `(B_n, B_1, ..., B_{n-1})`.
pub fn build_a_double_prime(a_prime: &Allocation) -> Allocation {
    a_prime.rotated_right()
}

/// Improved envy-free solution for a monotone instance with `n >= 3`:
/// maximum payment at most `n - 3/2`, total at most `(n^2 - n - 1)/2`.
///
/// Starts from the envy-cycles EF1 allocation. Use
/// [`improved_solve_from`] to supply a different EF1 starting allocation
/// (experimental; the bound argument is agnostic to the starting point).
pub fn improved_solve<S: Scalar>(
    inst: &Instance<S>,
) -> Result<(SubsidizedAllocation<S>, ImprovementTrace<S>)> {
    check_improved_preconditions(inst)?;
    let start = crate::ef1::envy_cycles(inst)?;
    improved_solve_from(inst, start)
}

pub fn improved_solve_from<S: Scalar>(
    inst: &Instance<S>,
    start: Allocation,
) -> Result<(SubsidizedAllocation<S>, ImprovementTrace<S>)> {
    check_improved_preconditions(inst)?;
    if let Some((i, j)) = ef1_witness(inst, &start)? {
        return Err(Error::Precondition(format!(
            "starting allocation is not EF1 (witness pair ({i}, {j}))"
        )));
    }
    let n = inst.n();
    let base = welfare_max_ef1_rearrange(inst, &start)?;
    let w = weight_matrix(inst, &base)?;
    let sigma = max_weight_permutation(&w);
    let p_star = min_subsidy(&w, &sigma)?;
    let threshold = frac::<S>(2 * n as i64 - 3, 2);
    let total_bound = frac::<S>((n * n - n) as i64 - 1, 2);

    if p_star.max() <= threshold {
        let solution = arrange_and_verify(inst, &base, sigma.clone(), &p_star)?;
        check_improved_bounds(&solution, &threshold, &total_bound)?;
        let trace = ImprovementTrace {
            base_allocation: base,
            base_subsidy: p_star,
            base_sigma: sigma,
            triggered: false,
            longest_path: None,
            relabeling: None,
            e_star: None,
            a_prime: None,
            a_double_prime: None,
            s: None,
            r: None,
            tau: None,
            chosen: Branch::Direct,
        };
        return Ok((solution, trace));
    }

    let rel = relabel_along_longest_path(inst, &base, &p_star)?.ok_or_else(|| {
        Error::Internal("relabeling reported no need despite a payment above threshold".into())
    })?;
    let e_star = select_estar(&rel.instance, &rel.allocation)?;
    let mut bundles = rel.allocation.bundles().to_vec();
    if let Some(e) = e_star {
        bundles[0].retain(|&x| x != e);
        bundles[n - 1].push(e);
    }
    let a_prime = Allocation::new(n, inst.m(), bundles)?;
    let w_prime = weight_matrix(&rel.instance, &a_prime)?;

    let half = frac::<S>(1, 2);
    let one = S::one();
    let head_gap = w_prime.at(0, n - 1).clone() - w_prime.at(0, 0).clone();
    let row_bound_prime = |i: usize| -> S {
        if i == 0 {
            if head_gap > half {
                head_gap.clone()
            } else {
                half.clone()
            }
        } else if i == 1 {
            half.clone()
        } else {
            one.clone()
        }
    };
    assert_edge_bounds(&w_prime, &row_bound_prime, "modified allocation")?;

    let a_double_prime = build_a_double_prime(&a_prime);
    let w_dprime = weight_matrix(&rel.instance, &a_double_prime)?;
    let reverse_gap = w_prime.at(0, 0).clone() - w_prime.at(0, n - 1).clone();
    let s = &rel.s;
    let row_bound_dprime = |i: usize| -> S {
        if i == 0 {
            let extra = if reverse_gap > S::zero() {
                reverse_gap.clone()
            } else {
                S::zero()
            };
            half.clone() + extra
        } else if i == 1 {
            s[0].clone() + s[1].clone()
        } else {
            s[i - 1].clone()
        }
    };
    assert_edge_bounds(&w_dprime, &row_bound_dprime, "rotated modified allocation")?;

    let tau = max_weight_permutation(&w_prime);
    let p_prime = min_subsidy(&w_prime, &tau)?;

    // The rotated allocation's bundle payments are the rotation of the
    // modified allocation's payments.
    let sigma_dp = max_weight_permutation(&w_dprime);
    let p_dprime = min_subsidy(&w_dprime, &sigma_dp)?;
    let rotated: Vec<S> = (0..n)
        .map(|i| p_prime.get((i + n - 1) % n).clone())
        .collect();
    if p_dprime.as_slice() != rotated.as_slice() {
        return Err(Error::Internal(
            "rotated payments disagree with the rotated allocation".into(),
        ));
    }

    let chosen = if w_prime.at(0, n - 1) <= w_prime.at(0, 0) {
        Branch::Prime
    } else {
        Branch::DoublePrime
    };

    // Map back to original agent labels; agent to_original[k] ends up with
    // bundle tau(k) of the modified allocation.
    let mut final_bundles = vec![Vec::new(); n];
    let mut final_p = vec![S::zero(); n];
    let mut sigma_map = vec![0usize; n];
    for k in 0..n {
        let orig = rel.to_original.get(k);
        final_bundles[orig] = a_prime.bundle(tau.get(k)).to_vec();
        final_p[orig] = p_prime.get(tau.get(k)).clone();
        sigma_map[orig] = rel.to_original.get(tau.get(k));
    }
    let allocation = Allocation::new(n, inst.m(), final_bundles)?;
    let subsidy = SubsidyVector::new(final_p)?;
    if !is_envy_free_with_subsidy(inst, &allocation, &subsidy)? {
        return Err(Error::Internal(
            "modified solution does not eliminate envy".into(),
        ));
    }
    if subsidy.min() != S::zero() {
        return Err(Error::Internal(
            "modified payments have no zero entry".into(),
        ));
    }
    let solution = SubsidizedAllocation {
        allocation,
        subsidy,
        sigma: Permutation::new(sigma_map)?,
    };
    check_improved_bounds(&solution, &threshold, &total_bound)?;

    let trace = ImprovementTrace {
        base_allocation: base,
        base_subsidy: p_star,
        base_sigma: sigma,
        triggered: true,
        longest_path: Some(rel.path.clone()),
        relabeling: Some(rel.to_original.clone()),
        e_star,
        a_prime: Some(a_prime),
        a_double_prime: Some(a_double_prime),
        s: Some(rel.s.clone()),
        r: Some(rel.r.clone()),
        tau: Some(tau),
        chosen,
    };
    Ok((solution, trace))
}

fn check_improved_preconditions<S: Scalar>(inst: &Instance<S>) -> Result<()> {
    if inst.class() != InstanceClass::Monotone {
        return Err(Error::Precondition(
            "improved pipeline requires a monotone instance".into(),
        ));
    }
    if inst.n() < 3 {
        return Err(Error::Precondition(
            "improved pipeline requires at least three agents; use the direct solver for fewer"
                .into(),
        ));
    }
    Ok(())
}

fn check_improved_bounds<S: Scalar>(
    solution: &SubsidizedAllocation<S>,
    max_bound: &S,
    total_bound: &S,
) -> Result<()> {
    if solution.max_subsidy() > *max_bound {
        return Err(Error::Internal(format!(
            "maximum payment {} exceeds the improved bound {max_bound}",
            solution.max_subsidy()
        )));
    }
    if solution.total_subsidy() > *total_bound {
        return Err(Error::Internal(format!(
            "total payment {} exceeds the improved bound {total_bound}",
            solution.total_subsidy()
        )));
    }
    Ok(())
}

fn assert_edge_bounds<S: Scalar>(
    w: &WeightMatrix<S>,
    row_bound: &dyn Fn(usize) -> S,
    label: &str,
) -> Result<()> {
    let n = w.n();
    for i in 0..n {
        let bound = row_bound(i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let edge = w.at(i, j).clone() - w.at(i, i).clone();
            if edge > bound {
                return Err(Error::Internal(format!(
                    "envy edge ({i}, {j}) of the {label} exceeds its bound"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsidy::solve_given_allocation;
    use crate::{frac, int, Rat};
    use rand::{Rng, SeedableRng};

    fn example1(n: usize) -> (Instance<Rat>, Allocation) {
        let m = n * (n + 1);
        let mut values = vec![vec![int::<Rat>(0); m]; n];
        for agent in 0..n {
            for j in 0..=n {
                values[agent][agent * (n + 1) + j] = frac(n as i64, n as i64 + 1);
                if agent > 0 {
                    values[agent][(agent - 1) * (n + 1) + j] = int(1);
                }
            }
        }
        let inst = Instance::additive(values).unwrap();
        let bundles = (0..n).map(|i| (i * (n + 1)..(i + 1) * (n + 1)).collect()).collect();
        let alloc = Allocation::new(n, m, bundles).unwrap();
        (inst, alloc)
    }

    fn random_monotone(rng: &mut impl Rng, n: usize, m: usize) -> Instance<Rat> {
        let values: Vec<Vec<Rat>> = (0..n)
            .map(|_| (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect())
            .collect();
        Instance::additive(values).unwrap()
    }

    #[test]
    fn welfare_rearrange_keeps_canonical_allocation() {
        let (inst, alloc) = example1(3);
        let rearranged = welfare_max_ef1_rearrange(&inst, &alloc).unwrap();
        assert_eq!(rearranged, alloc);
    }

    #[test]
    fn welfare_rearrange_zero_values() {
        let inst = Instance::<Rat>::additive(vec![vec![int(0); 3]; 3]).unwrap();
        let alloc = Allocation::new(3, 3, vec![vec![0], vec![1], vec![2]]).unwrap();
        let rearranged = welfare_max_ef1_rearrange(&inst, &alloc).unwrap();
        assert!(is_ef1(&inst, &rearranged).unwrap());
    }

    #[test]
    fn welfare_rearrange_beats_every_ef1_permutation() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(17);
        for _ in 0..200 {
            let inst = random_monotone(&mut rng, 3, 6);
            let x = crate::ef1::envy_cycles(&inst).unwrap();
            let a = welfare_max_ef1_rearrange(&inst, &x).unwrap();
            let w = weight_matrix(&inst, &x).unwrap();
            let welfare_of = |perm: &[usize]| -> Rat {
                perm.iter()
                    .enumerate()
                    .map(|(i, &j)| w.at(i, j).clone())
                    .sum()
            };
            let achieved: Rat = (0..3)
                .map(|i| inst.value(i, a.bundle(i)).unwrap())
                .sum();
            // Enumerate all 3! rearrangements of x.
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let sigma = Permutation::new(perm.to_vec()).unwrap();
                let candidate = x.permuted(&sigma);
                if is_ef1(&inst, &candidate).unwrap() {
                    assert!(achieved >= welfare_of(&perm));
                }
            }
        }
    }

    #[test]
    fn relabel_on_canonical_three_agents() {
        let (inst, alloc) = example1(3);
        let sol_w = weight_matrix(&inst, &alloc).unwrap();
        let sigma = max_weight_permutation(&sol_w);
        let p = min_subsidy(&sol_w, &sigma).unwrap();
        let rel = relabel_along_longest_path(&inst, &alloc, &p)
            .unwrap()
            .expect("payment 2 exceeds 3/2");
        assert_eq!(rel.path, vec![2, 1, 0]);
        assert!(rel.to_original.is_identity());
        assert_eq!(rel.s, vec![int::<Rat>(0), int(0)]);
        assert_eq!(rel.r, vec![int::<Rat>(0), int(0), int(0)]);
        assert_eq!(rel.diagnostics.s, Some(rel.s.clone()));
    }

    #[test]
    fn relabel_not_needed_below_threshold() {
        // One contested unit item among three agents: payments (0, ...) stay
        // at 1 <= 3/2.
        let inst =
            Instance::<Rat>::additive(vec![vec![int(1)], vec![int(1)], vec![int(1)]]).unwrap();
        let alloc = Allocation::new(3, 1, vec![vec![0], vec![], vec![]]).unwrap();
        let w = weight_matrix(&inst, &alloc).unwrap();
        let sigma = max_weight_permutation(&w);
        let p = min_subsidy(&w, &sigma).unwrap();
        assert!(relabel_along_longest_path(&inst, &alloc, &p)
            .unwrap()
            .is_none());
    }

    #[test]
    fn estar_picks_first_admissible_item() {
        let (inst, alloc) = example1(3);
        // Canonical allocation is already in chain order.
        assert_eq!(select_estar(&inst, &alloc).unwrap(), Some(0));
    }

    #[test]
    fn estar_empty_head_bundle() {
        let inst = Instance::<Rat>::additive(vec![vec![int(1)], vec![int(1)]]).unwrap();
        let alloc = Allocation::new(2, 1, vec![vec![], vec![0]]).unwrap();
        assert_eq!(select_estar(&inst, &alloc).unwrap(), None);
    }

    #[test]
    fn estar_satisfies_defining_inequality_on_random_inputs() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(23);
        for _ in 0..300 {
            let inst = random_monotone(&mut rng, 3, 7);
            let alloc = crate::ef1::envy_cycles(&inst).unwrap();
            match select_estar(&inst, &alloc).unwrap() {
                Some(e) => {
                    let reduced: Vec<usize> = alloc
                        .bundle(0)
                        .iter()
                        .copied()
                        .filter(|&x| x != e)
                        .collect();
                    assert!(
                        inst.value(1, alloc.bundle(1)).unwrap()
                            >= inst.value(1, &reduced).unwrap()
                    );
                }
                None => assert!(alloc.bundle(0).is_empty()),
            }
        }
    }

    #[test]
    fn double_prime_is_right_rotation() {
        let a = Allocation::new(3, 3, vec![vec![0], vec![1], vec![2]]).unwrap();
        assert_eq!(
            build_a_double_prime(&a).bundles(),
            &[vec![2], vec![0], vec![1]]
        );
        let single = Allocation::new(1, 2, vec![vec![0, 1]]).unwrap();
        assert_eq!(build_a_double_prime(&single), single);
    }

    #[test]
    fn improved_on_canonical_three_agents() {
        let (inst, alloc) = example1(3);
        let (solution, trace) = improved_solve_from(&inst, alloc).unwrap();
        let mut sorted = solution.subsidy.sorted_desc();
        sorted.reverse();
        assert_eq!(sorted, vec![int::<Rat>(0), int(0), int(1)]);
        assert_eq!(solution.total_subsidy(), int::<Rat>(1));
        assert!(solution.max_subsidy() <= frac::<Rat>(3, 2));
        assert!(trace.triggered);
        assert_eq!(trace.e_star, Some(0));
        assert_eq!(trace.chosen, Branch::Prime);
        // Item 0 moves from the head bundle to the tail one; the rotated
        // variant shifts every bundle right.
        let a_prime = trace.a_prime.as_ref().unwrap();
        assert_eq!(
            a_prime.bundles(),
            &[vec![1, 2, 3], vec![4, 5, 6, 7], vec![0, 8, 9, 10, 11]]
        );
        let a_dp = trace.a_double_prime.as_ref().unwrap();
        assert_eq!(
            a_dp.bundles(),
            &[vec![0, 8, 9, 10, 11], vec![1, 2, 3], vec![4, 5, 6, 7]]
        );
    }

    #[test]
    fn improved_rejects_small_or_mixed_instances() {
        let inst = Instance::<Rat>::additive(vec![vec![int(1)], vec![int(1)]]).unwrap();
        assert!(matches!(
            improved_solve(&inst),
            Err(Error::Precondition(_))
        ));
        let mixed = Instance::<Rat>::additive(vec![
            vec![int(1), int(-1)],
            vec![int(1), int(-1)],
            vec![int(1), int(-1)],
        ])
        .unwrap();
        assert!(matches!(improved_solve(&mixed), Err(Error::Precondition(_))));
    }

    #[test]
    fn improved_no_items() {
        let inst = Instance::<Rat>::additive(vec![vec![], vec![], vec![]]).unwrap();
        let (solution, trace) = improved_solve(&inst).unwrap();
        assert_eq!(solution.total_subsidy(), int::<Rat>(0));
        assert!(!trace.triggered);
        assert_eq!(trace.chosen, Branch::Direct);
    }

    #[test]
    fn improved_bounds_hold_on_random_monotone_instances() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(31);
        for _ in 0..300 {
            let n = rng.gen_range(3..=5);
            let m = rng.gen_range(0..=9);
            let inst = random_monotone(&mut rng, n, m);
            let (solution, _) = improved_solve(&inst).unwrap();
            let n_i = n as i64;
            assert!(solution.max_subsidy() <= frac::<Rat>(2 * n_i - 3, 2));
            assert!(solution.total_subsidy() <= frac::<Rat>(n_i * n_i - n_i - 1, 2));
            assert!(
                is_envy_free_with_subsidy(&inst, &solution.allocation, &solution.subsidy).unwrap()
            );
        }
    }

    #[test]
    fn improved_pipeline_identical_for_table_representation() {
        // The same chain instance written as a full value table must drive
        // the whole pipeline to the same payments as its additive form.
        let (additive, alloc) = example1(3);
        let m = additive.m();
        let tables: Vec<Vec<Rat>> = (0..3)
            .map(|agent| {
                (0..1usize << m)
                    .map(|mask| {
                        let bundle: Vec<usize> = (0..m).filter(|&e| mask & (1 << e) != 0).collect();
                        additive.value(agent, &bundle).unwrap()
                    })
                    .collect()
            })
            .collect();
        let tabular = Instance::table(tables).unwrap();
        assert_eq!(tabular.class(), InstanceClass::Monotone);
        let (sol_additive, trace_additive) = improved_solve_from(&additive, alloc.clone()).unwrap();
        let (sol_table, trace_table) = improved_solve_from(&tabular, alloc).unwrap();
        assert_eq!(sol_additive.allocation, sol_table.allocation);
        assert_eq!(sol_additive.subsidy, sol_table.subsidy);
        assert_eq!(trace_additive.triggered, trace_table.triggered);
        assert_eq!(trace_additive.e_star, trace_table.e_star);
    }

    #[test]
    fn improved_never_worse_than_direct_bound_on_tight_family() {
        for n in [3usize, 4, 5, 6] {
            let (inst, alloc) = example1(n);
            let direct = solve_given_allocation(&inst, &alloc).unwrap();
            assert_eq!(direct.max_subsidy(), int::<Rat>(n as i64 - 1));
            let (improved, trace) = improved_solve_from(&inst, alloc).unwrap();
            assert!(trace.triggered);
            assert!(improved.max_subsidy() <= frac::<Rat>(2 * n as i64 - 3, 2));
            let expected: Vec<Rat> = std::iter::once(int(0))
                .chain((0..n - 1).map(|k| int(k as i64)))
                .collect();
            let mut sorted = improved.subsidy.sorted_desc();
            sorted.reverse();
            assert_eq!(sorted, expected);
        }
    }
}
