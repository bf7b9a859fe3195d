//! EF1 allocation construction.
//!
//! Three constructors cover the valuation classes for which EF1 existence is
//! known: envy cycles for monotone valuations, double round robin for
//! additive doubly monotone valuations, and exhaustive search as a small-scale
//! fallback. All tie-breaking is by lowest index, so identical inputs yield
//! identical allocations.

use crate::error::{Error, Result};
use crate::fairness::is_ef1;
use crate::model::{Allocation, Instance, InstanceClass, Valuation};
use crate::scalar::{sum, Scalar};

/// Cap on `n^m` for the exhaustive fallback.
pub const DEFAULT_EXHAUSTIVE_CAP: u64 = 1_000_000;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Ef1Method {
    EnvyCycles,
    DoubleRoundRobin,
    Exhaustive,
    Auto,
}

/// Envy-cycles construction for monotone instances.
///
/// Items are handed out in index order, each to an agent nobody envies; when
/// every agent is envied, bundles rotate along an envy cycle (which strictly
/// raises total welfare) until an unenvied agent appears.
pub fn envy_cycles<S: Scalar>(inst: &Instance<S>) -> Result<Allocation> {
    if inst.class() != InstanceClass::Monotone {
        return Err(Error::Precondition(
            "envy-cycles construction requires a monotone instance".into(),
        ));
    }
    let n = inst.n();
    let mut bundles: Vec<Vec<usize>> = vec![Vec::new(); n];
    for item in 0..inst.m() {
        let receiver = loop {
            let values = bundle_values(inst, &bundles)?;
            if let Some(agent) = unenvied_agent(&values) {
                break agent;
            }
            let cycle = find_envy_cycle(&values)
                .ok_or_else(|| Error::Internal("all agents envied but no envy cycle".into()))?;
            let before = welfare(&values);
            rotate(&mut bundles, &cycle);
            let after = welfare(&bundle_values(inst, &bundles)?);
            if after <= before {
                return Err(Error::Internal(
                    "envy-cycle rotation did not increase welfare".into(),
                ));
            }
        };
        bundles[receiver].push(item);
    }
    let alloc = Allocation::new(n, inst.m(), bundles)?;
    if !is_ef1(inst, &alloc)? {
        return Err(Error::Internal("envy-cycles output is not EF1".into()));
    }
    Ok(alloc)
}

fn bundle_values<S: Scalar>(inst: &Instance<S>, bundles: &[Vec<usize>]) -> Result<Vec<Vec<S>>> {
    let n = bundles.len();
    let mut values = Vec::with_capacity(n);
    for agent in 0..n {
        let mut row = Vec::with_capacity(n);
        for bundle in bundles {
            row.push(inst.value(agent, bundle)?);
        }
        values.push(row);
    }
    Ok(values)
}

fn welfare<S: Scalar>(values: &[Vec<S>]) -> S {
    sum(values.iter().enumerate().map(|(i, row)| row[i].clone()))
}

/// Lowest-index agent that no one envies.
fn unenvied_agent<S: Scalar>(values: &[Vec<S>]) -> Option<usize> {
    let n = values.len();
    (0..n).find(|&candidate| {
        (0..n).all(|agent| agent == candidate || values[agent][candidate] <= values[agent][agent])
    })
}

/// First envy cycle found by depth-first search from the lowest-index vertex,
/// following envy edges in ascending target order.
fn find_envy_cycle<S: Scalar>(values: &[Vec<S>]) -> Option<Vec<usize>> {
    let n = values.len();
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|agent| {
            (0..n)
                .filter(|&other| other != agent && values[agent][other] > values[agent][agent])
                .collect()
        })
        .collect();
    let mut color = vec![0u8; n];
    let mut stack = Vec::new();
    for start in 0..n {
        if color[start] == 0 {
            if let Some(cycle) = dfs_cycle(start, &adjacency, &mut color, &mut stack) {
                return Some(cycle);
            }
        }
    }
    None
}

fn dfs_cycle(
    vertex: usize,
    adjacency: &[Vec<usize>],
    color: &mut [u8],
    stack: &mut Vec<usize>,
) -> Option<Vec<usize>> {
    color[vertex] = 1;
    stack.push(vertex);
    for &next in &adjacency[vertex] {
        if color[next] == 1 {
            let pos = stack.iter().position(|&v| v == next).expect("on stack");
            return Some(stack[pos..].to_vec());
        }
        if color[next] == 0 {
            if let Some(cycle) = dfs_cycle(next, adjacency, color, stack) {
                return Some(cycle);
            }
        }
    }
    stack.pop();
    color[vertex] = 2;
    None
}

/// Each agent on the cycle takes the bundle of the agent it envies.
fn rotate(bundles: &mut [Vec<usize>], cycle: &[usize]) {
    let replacement: Vec<Vec<usize>> = cycle
        .iter()
        .enumerate()
        .map(|(pos, _)| bundles[cycle[(pos + 1) % cycle.len()]].clone())
        .collect();
    for (pos, &agent) in cycle.iter().enumerate() {
        bundles[agent] = replacement[pos].clone();
    }
}

/// Double round robin for additive doubly monotone instances.
///
/// Phase one deals the commonly non-positive items over `ceil(c/n)` full
/// rounds in reverse agent order, padded with worthless dummy slots: a picker
/// takes the chore it dislikes least, or burns a dummy slot when every
/// remaining chore is strictly negative for it and dummies remain. Phase two
/// deals the rest in forward agent order, each picker taking its favorite
/// remaining item or passing when everything left has negative value to it.
/// The agent holding the final phase-one slot opens phase two, which is what
/// makes the output EF1.
pub fn double_round_robin<S: Scalar>(inst: &Instance<S>) -> Result<Allocation> {
    if !inst.is_additive() || inst.class() == InstanceClass::General {
        return Err(Error::Precondition(
            "double round robin requires an additive doubly monotone instance".into(),
        ));
    }
    let n = inst.n();
    let m = inst.m();
    let values: Vec<&[S]> = (0..n)
        .map(|agent| match inst.valuation(agent) {
            Ok(Valuation::Additive(v)) => v.as_slice(),
            _ => unreachable!("additivity checked above"),
        })
        .collect();

    // An item nobody values positively goes to the chore phase unless it is
    // worthless to everyone (a zero marginal still counts as a good).
    let mut chores = Vec::new();
    let mut goods = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for item in 0..m {
        let none_positive = (0..n).all(|a| values[a][item] <= S::zero());
        let some_negative = (0..n).any(|a| values[a][item] < S::zero());
        if none_positive && some_negative {
            chores.push(item);
        } else {
            goods.push(item);
        }
    }

    let mut bundles: Vec<Vec<usize>> = vec![Vec::new(); n];
    let rounds = chores.len().div_ceil(n);
    let mut dummies = rounds * n - chores.len();
    let mut remaining = chores;
    for _ in 0..rounds {
        for agent in (0..n).rev() {
            if remaining.is_empty() {
                continue;
            }
            let pick = argmax_item(values[agent], &remaining);
            if dummies > 0 && values[agent][remaining[pick]] < S::zero() {
                dummies -= 1;
                continue;
            }
            bundles[agent].push(remaining.remove(pick));
        }
    }
    if !remaining.is_empty() {
        return Err(Error::Internal(
            "chore phase ended with items remaining".into(),
        ));
    }
    let mut remaining = goods;
    while !remaining.is_empty() {
        let mut picked_any = false;
        for agent in 0..n {
            if remaining.is_empty() {
                break;
            }
            let pick = argmax_item(values[agent], &remaining);
            if values[agent][remaining[pick]] >= S::zero() {
                bundles[agent].push(remaining.remove(pick));
                picked_any = true;
            }
        }
        if !picked_any && !remaining.is_empty() {
            return Err(Error::Internal(
                "good phase stalled with items remaining".into(),
            ));
        }
    }

    let alloc = Allocation::new(n, m, bundles)?;
    if !is_ef1(inst, &alloc)? {
        return Err(Error::Internal("double round robin output is not EF1".into()));
    }
    Ok(alloc)
}

/// Position (in `remaining`) of the highest-value item, lowest index on ties.
fn argmax_item<S: Scalar>(values: &[S], remaining: &[usize]) -> usize {
    let mut best = 0usize;
    for (pos, &item) in remaining.iter().enumerate().skip(1) {
        if values[item] > values[remaining[best]] {
            best = pos;
        }
    }
    best
}

/// First EF1 allocation in lexicographic assignment order (item 0 is the most
/// significant digit), or `None` when no EF1 allocation exists.
pub fn exhaustive_ef1<S: Scalar>(inst: &Instance<S>) -> Result<Option<Allocation>> {
    exhaustive_ef1_capped(inst, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn exhaustive_ef1_capped<S: Scalar>(
    inst: &Instance<S>,
    cap: u64,
) -> Result<Option<Allocation>> {
    let n = inst.n();
    let m = inst.m();
    let space = (n as u128)
        .checked_pow(m as u32)
        .filter(|&count| count <= cap as u128)
        .ok_or_else(|| {
            Error::BudgetExceeded(format!("{n}^{m} allocations exceed the cap of {cap}"))
        })?;
    debug_assert!(space >= 1);
    let mut assignment = vec![0usize; m];
    loop {
        let mut bundles: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (item, &agent) in assignment.iter().enumerate() {
            bundles[agent].push(item);
        }
        let alloc = Allocation::from_parts_unchecked(bundles);
        if is_ef1(inst, &alloc)? {
            return Ok(Some(alloc));
        }
        // Odometer with the last item fastest keeps the order lexicographic.
        let mut pos = m;
        loop {
            if pos == 0 {
                return Ok(None);
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

/// Dispatch to an EF1 constructor, checking preconditions.
///
/// `Auto` picks envy cycles for monotone instances, double round robin for
/// additive doubly monotone ones, and exhaustive search otherwise.
pub fn find_ef1<S: Scalar>(inst: &Instance<S>, method: Ef1Method) -> Result<Allocation> {
    let resolved = match method {
        Ef1Method::Auto => match inst.class() {
            InstanceClass::Monotone => Ef1Method::EnvyCycles,
            InstanceClass::DoublyMonotone if inst.is_additive() => Ef1Method::DoubleRoundRobin,
            _ => Ef1Method::Exhaustive,
        },
        other => other,
    };
    match resolved {
        Ef1Method::EnvyCycles => envy_cycles(inst),
        Ef1Method::DoubleRoundRobin => double_round_robin(inst),
        Ef1Method::Exhaustive => match exhaustive_ef1(inst) {
            Ok(Some(alloc)) => Ok(alloc),
            Ok(None) => Err(Error::UnsupportedInstance(
                "no EF1 allocation exists for this instance".into(),
            )),
            Err(Error::BudgetExceeded(msg)) => Err(Error::UnsupportedInstance(format!(
                "no polynomial EF1 method applies and exhaustive search is too large ({msg})"
            ))),
            Err(e) => Err(e),
        },
        Ef1Method::Auto => unreachable!("resolved above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{frac, int, Rat};
    use rand::{Rng, SeedableRng};

    fn example1(n: usize) -> Instance<Rat> {
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
        Instance::additive(values).unwrap()
    }

    #[test]
    fn envy_cycles_single_agent_takes_everything() {
        let inst = Instance::<Rat>::additive(vec![vec![int(1), frac(1, 2), int(0)]]).unwrap();
        let alloc = envy_cycles(&inst).unwrap();
        assert_eq!(alloc.bundles(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn envy_cycles_all_zero_values() {
        let inst = Instance::<Rat>::additive(vec![vec![int(0); 3]; 3]).unwrap();
        let alloc = envy_cycles(&inst).unwrap();
        assert!(is_ef1(&inst, &alloc).unwrap());
        let total: usize = alloc.bundles().iter().map(Vec::len).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn envy_cycles_handles_tight_instance() {
        for n in [3usize, 4, 5] {
            let inst = example1(n);
            let alloc = envy_cycles(&inst).unwrap();
            assert!(is_ef1(&inst, &alloc).unwrap());
        }
    }

    #[test]
    fn envy_cycles_rejects_chores() {
        let inst = Instance::<Rat>::additive(vec![vec![int(-1)], vec![int(0)]]).unwrap();
        assert!(matches!(
            envy_cycles(&inst),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn double_round_robin_symmetric_goods_and_chores() {
        let goods =
            Instance::<Rat>::additive(vec![vec![int(1), int(1)], vec![int(1), int(1)]]).unwrap();
        let alloc = double_round_robin(&goods).unwrap();
        assert_eq!(alloc.bundles(), &[vec![0], vec![1]]);

        let chores =
            Instance::<Rat>::additive(vec![vec![int(-1), int(-1)], vec![int(-1), int(-1)]])
                .unwrap();
        let alloc = double_round_robin(&chores).unwrap();
        assert_eq!(alloc.bundles(), &[vec![1], vec![0]]);
    }

    #[test]
    fn double_round_robin_random_mixed_instances_are_ef1() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=4);
            let m = rng.gen_range(0..=6);
            let values: Vec<Vec<Rat>> = (0..n)
                .map(|_| (0..m).map(|_| frac(rng.gen_range(-10..=10), 10)).collect())
                .collect();
            let inst = Instance::additive(values).unwrap();
            let alloc = double_round_robin(&inst).unwrap();
            assert!(is_ef1(&inst, &alloc).unwrap());
        }
    }

    #[test]
    fn exhaustive_prefers_lexicographically_first() {
        let inst = Instance::<Rat>::additive(vec![vec![int(1)], vec![int(1)]]).unwrap();
        let alloc = exhaustive_ef1(&inst).unwrap().unwrap();
        assert_eq!(alloc.bundles(), &[vec![0], vec![]]);
    }

    #[test]
    fn exhaustive_single_agent() {
        let inst = Instance::<Rat>::additive(vec![vec![int(1), int(0)]]).unwrap();
        let alloc = exhaustive_ef1(&inst).unwrap().unwrap();
        assert_eq!(alloc.bundles(), &[vec![0, 1]]);
    }

    #[test]
    fn exhaustive_respects_cap() {
        let inst = Instance::<Rat>::additive(vec![vec![int(0); 30]; 3]).unwrap();
        assert!(matches!(
            exhaustive_ef1(&inst),
            Err(Error::BudgetExceeded(_))
        ));
    }

    /// Random table with unit-bounded marginals of both signs.
    fn random_mixed_table(rng: &mut impl Rng, m: usize) -> Vec<Rat> {
        let gains: Vec<Rat> = (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect();
        let losses: Vec<Rat> = (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect();
        let gain_cap = frac::<Rat>(rng.gen_range(0..=10 * m as i64), 10);
        let loss_cap = frac::<Rat>(rng.gen_range(0..=10 * m as i64), 10);
        (0..1usize << m)
            .map(|mask| {
                let total = |weights: &[Rat], cap: &Rat| -> Rat {
                    let sum: Rat = (0..m)
                        .filter(|&e| mask & (1 << e) != 0)
                        .map(|e| weights[e].clone())
                        .sum();
                    if sum > *cap {
                        cap.clone()
                    } else {
                        sum
                    }
                };
                total(&gains, &gain_cap) - total(&losses, &loss_cap)
            })
            .collect()
    }

    #[test]
    fn two_agent_tables_always_have_ef1() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(9);
        for _ in 0..150 {
            let m = rng.gen_range(0..=5usize);
            let tables: Vec<Vec<Rat>> = (0..2).map(|_| random_mixed_table(&mut rng, m)).collect();
            let inst = Instance::table(tables).unwrap();
            assert!(exhaustive_ef1(&inst).unwrap().is_some());
        }
    }

    #[test]
    fn dispatcher_routes_by_class() {
        let monotone = example1(3);
        assert!(is_ef1(&monotone, &find_ef1(&monotone, Ef1Method::Auto).unwrap()).unwrap());

        let mixed =
            Instance::<Rat>::additive(vec![vec![int(1), int(-1)], vec![int(-1), int(1)]]).unwrap();
        let alloc = find_ef1(&mixed, Ef1Method::Auto).unwrap();
        assert_eq!(alloc, double_round_robin(&mixed).unwrap());

        // Mixed-marginal table: only exhaustive search applies.
        let table = vec![
            int::<Rat>(0),
            frac(1, 2),
            frac(1, 2),
            int(0),
        ];
        let general = Instance::table(vec![table.clone(), table]).unwrap();
        let alloc = find_ef1(&general, Ef1Method::Auto).unwrap();
        assert!(is_ef1(&general, &alloc).unwrap());
    }

    #[test]
    fn dispatcher_reports_unsupported_when_cap_exceeded() {
        let values: Vec<Vec<Rat>> = (0..3).map(|_| vec![int(0); 25]).collect();
        let inst = Instance::additive(values).unwrap();
        assert!(matches!(
            find_ef1(&inst, Ef1Method::Exhaustive),
            Err(Error::UnsupportedInstance(_))
        ));
    }
}
