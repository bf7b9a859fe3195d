//! Fairness checkers: EF1, EFk, and envy-freeness with payments.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, SubsidyVector, Valuation};
use crate::scalar::Scalar;

/// First pair `(envious, envied)` violating EF1, scanned in index order, or
/// `None` when the allocation is EF1.
///
/// For each pair the removal candidates are tried as: the empty set, then
/// singletons of the envious agent's own bundle, then singletons of the
/// envied bundle, each in item-index order.
pub fn ef1_witness<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
) -> Result<Option<(usize, usize)>> {
    inst.validate_allocation(alloc)?;
    let n = inst.n();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if !pair_ef1(inst, i, alloc.bundle(i), alloc.bundle(j))? {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

fn pair_ef1<S: Scalar>(
    inst: &Instance<S>,
    agent: usize,
    own: &[usize],
    other: &[usize],
) -> Result<bool> {
    let own_value = inst.value(agent, own)?;
    let other_value = inst.value(agent, other)?;
    if own_value >= other_value {
        return Ok(true);
    }
    for &drop in own {
        let reduced = without(own, drop);
        if inst.value(agent, &reduced)? >= other_value {
            return Ok(true);
        }
    }
    for &drop in other {
        let reduced = without(other, drop);
        if own_value >= inst.value(agent, &reduced)? {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn is_ef1<S: Scalar>(inst: &Instance<S>, alloc: &Allocation) -> Result<bool> {
    Ok(ef1_witness(inst, alloc)?.is_none())
}

/// Envy-freeness up to `k` items: for every pair some set of at most `k`
/// items drawn from the two bundles, once removed, eliminates the envy.
/// `k = 0` is plain envy-freeness of the allocation.
pub fn is_efk<S: Scalar>(inst: &Instance<S>, alloc: &Allocation, k: usize) -> Result<bool> {
    inst.validate_allocation(alloc)?;
    let n = inst.n();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if !pair_efk(inst, i, alloc.bundle(i), alloc.bundle(j), k)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn pair_efk<S: Scalar>(
    inst: &Instance<S>,
    agent: usize,
    own: &[usize],
    other: &[usize],
    k: usize,
) -> Result<bool> {
    let own_value = inst.value(agent, own)?;
    let other_value = inst.value(agent, other)?;
    if own_value >= other_value {
        return Ok(true);
    }
    if k == 0 {
        return Ok(false);
    }
    if k >= own.len() + other.len() {
        // Everything removable on both sides; 0 >= 0.
        return Ok(true);
    }
    match inst.valuation(agent)? {
        Valuation::Additive(values) => {
            // Removing item x from the own bundle gains -v(x); removing y from
            // the other bundle gains v(y). Take the k best positive gains.
            let mut gains: Vec<S> = Vec::new();
            for &x in own {
                let g = -values[x].clone();
                if g > S::zero() {
                    gains.push(g);
                }
            }
            for &y in other {
                let g = values[y].clone();
                if g > S::zero() {
                    gains.push(g);
                }
            }
            gains.sort_by(|a, b| b.cmp(a));
            let mut slack = own_value - other_value;
            for g in gains.into_iter().take(k) {
                slack = slack + g;
            }
            Ok(slack >= S::zero())
        }
        Valuation::Table(_) => {
            // Best achievable own value removing exactly a items, and best
            // (lowest) other value removing at most c items.
            let max_own = best_values(inst, agent, own, k, true)?;
            let min_other = best_values(inst, agent, other, k, false)?;
            let mut prefix_min = min_other[0].clone();
            let mut lowest_by_budget = Vec::with_capacity(min_other.len());
            for v in &min_other {
                if *v < prefix_min {
                    prefix_min = v.clone();
                }
                lowest_by_budget.push(prefix_min.clone());
            }
            for (removed_own, own_v) in max_own.iter().enumerate() {
                let budget = k - removed_own;
                let other_idx = budget.min(lowest_by_budget.len() - 1);
                if *own_v >= lowest_by_budget[other_idx] {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// For each removal count `r = 0..=min(k, len)`, the extreme value of the
/// bundle with exactly `r` items removed (maximum if `maximize`, else
/// minimum).
fn best_values<S: Scalar>(
    inst: &Instance<S>,
    agent: usize,
    bundle: &[usize],
    k: usize,
    maximize: bool,
) -> Result<Vec<S>> {
    let limit = k.min(bundle.len());
    let mut out: Vec<Option<S>> = vec![None; limit + 1];
    let mut kept: Vec<usize> = Vec::with_capacity(bundle.len());
    enumerate_removals(inst, agent, bundle, 0, 0, limit, &mut kept, maximize, &mut out)?;
    Ok(out.into_iter().map(|v| v.expect("every count reached")).collect())
}

#[allow(clippy::too_many_arguments)]
fn enumerate_removals<S: Scalar>(
    inst: &Instance<S>,
    agent: usize,
    bundle: &[usize],
    pos: usize,
    removed: usize,
    limit: usize,
    kept: &mut Vec<usize>,
    maximize: bool,
    out: &mut Vec<Option<S>>,
) -> Result<()> {
    if pos == bundle.len() {
        let v = inst.value(agent, kept)?;
        let slot = &mut out[removed];
        let replace = match slot {
            None => true,
            Some(best) => {
                if maximize {
                    v > *best
                } else {
                    v < *best
                }
            }
        };
        if replace {
            *slot = Some(v);
        }
        return Ok(());
    }
    if removed < limit {
        enumerate_removals(inst, agent, bundle, pos + 1, removed + 1, limit, kept, maximize, out)?;
    }
    kept.push(bundle[pos]);
    enumerate_removals(inst, agent, bundle, pos + 1, removed, limit, kept, maximize, out)?;
    kept.pop();
    Ok(())
}

/// One envy inequality violation under payments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsidyViolation<S> {
    pub envious: usize,
    pub envied: usize,
    pub amount: S,
}

/// Every ordered pair violating `v_i(A_i) + p_i >= v_i(A_j) + p_j`, with the
/// exact violation amount, in index order.
pub fn envy_violations<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
    p: &SubsidyVector<S>,
) -> Result<Vec<SubsidyViolation<S>>> {
    inst.validate_allocation(alloc)?;
    let n = inst.n();
    if p.len() != n {
        return Err(Error::Precondition(format!(
            "subsidy vector has {} entries for {n} agents",
            p.len()
        )));
    }
    let mut values = vec![vec![S::zero(); n]; n];
    for (i, row) in values.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = inst.value(i, alloc.bundle(j))?;
        }
    }
    let mut out = Vec::new();
    for i in 0..n {
        let own = values[i][i].clone() + p.get(i).clone();
        for j in 0..n {
            if i == j {
                continue;
            }
            let other = values[i][j].clone() + p.get(j).clone();
            if other > own {
                out.push(SubsidyViolation {
                    envious: i,
                    envied: j,
                    amount: other.clone() - own.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// The largest violation (first such pair on ties), or `None` when
/// `(alloc, p)` is envy-free.
pub fn max_envy_violation<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
    p: &SubsidyVector<S>,
) -> Result<Option<SubsidyViolation<S>>> {
    let mut worst: Option<SubsidyViolation<S>> = None;
    for violation in envy_violations(inst, alloc, p)? {
        if worst.as_ref().is_none_or(|w| violation.amount > w.amount) {
            worst = Some(violation);
        }
    }
    Ok(worst)
}

pub fn is_envy_free_with_subsidy<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
    p: &SubsidyVector<S>,
) -> Result<bool> {
    Ok(envy_violations(inst, alloc, p)?.is_empty())
}

fn without(bundle: &[usize], item: usize) -> Vec<usize> {
    bundle.iter().copied().filter(|&x| x != item).collect()
}
