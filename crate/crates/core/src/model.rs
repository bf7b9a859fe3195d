//! Instance model: agents, items, valuations, allocations, subsidy vectors.
//!
//! All valuations are normalized so that the empty set is worth zero and the
//! marginal contribution of any single item has magnitude at most one.
//! Constructors reject anything else, so downstream code can rely on the
//! bounds unconditionally.

use crate::error::{Error, Result};
use crate::matching::Permutation;
use crate::scalar::{sum, Scalar};

/// Hard cap on `m` for table valuations (each agent stores 2^m values).
pub const MAX_TABLE_ITEMS: usize = 16;

/// One agent's valuation over item subsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation<S> {
    /// Per-item values; a bundle is worth the sum of its items.
    Additive(Vec<S>),
    /// Complete value table indexed by item bitmask (entry 0 is the empty set).
    Table(Vec<S>),
}

/// How an item behaves for one agent, quantified over all contexts.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ItemClass {
    /// Every marginal contribution is non-negative.
    Good,
    /// Every marginal contribution is non-positive, at least one strictly so.
    Chore,
    /// Marginals of both signs exist.
    Mixed,
}

/// Classification of a whole instance.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum InstanceClass {
    /// Every item is a good for every agent.
    Monotone,
    /// Every item is a good or a chore for every agent.
    DoublyMonotone,
    /// Some item is mixed for some agent.
    General,
}

impl InstanceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceClass::Monotone => "monotone",
            InstanceClass::DoublyMonotone => "doubly-monotone",
            InstanceClass::General => "general",
        }
    }
}

/// A fair-division instance: `n` agents, `m` items, one valuation per agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance<S> {
    n: usize,
    m: usize,
    valuations: Vec<Valuation<S>>,
    classes: Vec<Vec<ItemClass>>,
}

impl<S: Scalar> Instance<S> {
    /// Builds an additive instance from an `n x m` value grid.
    pub fn additive(values: Vec<Vec<S>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInstance("at least one agent required".into()));
        }
        let n = values.len();
        let m = values[0].len();
        let mut classes = Vec::with_capacity(n);
        for (agent, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInstance(format!(
                    "agent {agent} has {} item values, expected {m}",
                    row.len()
                )));
            }
            let mut agent_classes = Vec::with_capacity(m);
            for (item, v) in row.iter().enumerate() {
                if v.abs() > S::one() {
                    return Err(Error::NormalizationViolated {
                        agent,
                        item,
                        magnitude: v.abs().to_string(),
                    });
                }
                agent_classes.push(if *v >= S::zero() {
                    ItemClass::Good
                } else {
                    ItemClass::Chore
                });
            }
            classes.push(agent_classes);
        }
        let valuations = values.into_iter().map(Valuation::Additive).collect();
        Ok(Instance {
            n,
            m,
            valuations,
            classes,
        })
    }

    /// Builds a table instance from complete per-agent value tables.
    ///
    /// Each table has 2^m entries indexed by item bitmask. Tables are
    /// normalized at load time by subtracting the empty-set value.
    pub fn table(tables: Vec<Vec<S>>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::InvalidInstance("at least one agent required".into()));
        }
        let n = tables.len();
        let size = tables[0].len();
        if size == 0 || !size.is_power_of_two() {
            return Err(Error::InvalidInstance(format!(
                "table length {size} is not a power of two"
            )));
        }
        let m = size.trailing_zeros() as usize;
        if m > MAX_TABLE_ITEMS {
            return Err(Error::InvalidInstance(format!(
                "table valuations support at most {MAX_TABLE_ITEMS} items, got {m}"
            )));
        }
        let mut normalized = Vec::with_capacity(n);
        let mut classes = Vec::with_capacity(n);
        for (agent, table) in tables.into_iter().enumerate() {
            if table.len() != size {
                return Err(Error::InvalidInstance(format!(
                    "agent {agent} table has {} entries, expected {size}",
                    table.len()
                )));
            }
            let offset = table[0].clone();
            let table: Vec<S> = table.into_iter().map(|v| v - offset.clone()).collect();
            let mut agent_classes = Vec::with_capacity(m);
            for item in 0..m {
                let bit = 1usize << item;
                let mut has_pos = false;
                let mut has_neg = false;
                for mask in 0..size {
                    if mask & bit != 0 {
                        continue;
                    }
                    let marginal = table[mask | bit].clone() - table[mask].clone();
                    if marginal.abs() > S::one() {
                        return Err(Error::NormalizationViolated {
                            agent,
                            item,
                            magnitude: marginal.abs().to_string(),
                        });
                    }
                    if marginal > S::zero() {
                        has_pos = true;
                    } else if marginal < S::zero() {
                        has_neg = true;
                    }
                }
                agent_classes.push(match (has_pos, has_neg) {
                    (_, false) => ItemClass::Good,
                    (false, true) => ItemClass::Chore,
                    (true, true) => ItemClass::Mixed,
                });
            }
            normalized.push(Valuation::Table(table));
            classes.push(agent_classes);
        }
        Ok(Instance {
            n,
            m,
            valuations: normalized,
            classes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_additive(&self) -> bool {
        matches!(self.valuations[0], Valuation::Additive(_))
    }

    pub fn valuation(&self, agent: usize) -> Result<&Valuation<S>> {
        self.check_agent(agent)?;
        Ok(&self.valuations[agent])
    }

    fn check_agent(&self, agent: usize) -> Result<()> {
        if agent >= self.n {
            return Err(Error::AgentIndex {
                index: agent,
                n: self.n,
            });
        }
        Ok(())
    }

    /// The value of `bundle` (a set of item indices) to `agent`.
    pub fn value(&self, agent: usize, bundle: &[usize]) -> Result<S> {
        self.check_agent(agent)?;
        match &self.valuations[agent] {
            Valuation::Additive(values) => {
                let mut seen = vec![false; self.m];
                let mut acc = S::zero();
                for &item in bundle {
                    if item >= self.m {
                        return Err(Error::ItemIndex {
                            index: item,
                            m: self.m,
                        });
                    }
                    if seen[item] {
                        return Err(Error::InvalidBundle(format!(
                            "item {item} appears twice"
                        )));
                    }
                    seen[item] = true;
                    acc = acc + values[item].clone();
                }
                Ok(acc)
            }
            Valuation::Table(table) => {
                let mut mask = 0usize;
                for &item in bundle {
                    if item >= self.m {
                        return Err(Error::ItemIndex {
                            index: item,
                            m: self.m,
                        });
                    }
                    let bit = 1usize << item;
                    if mask & bit != 0 {
                        return Err(Error::InvalidBundle(format!(
                            "item {item} appears twice"
                        )));
                    }
                    mask |= bit;
                }
                Ok(table[mask].clone())
            }
        }
    }

    /// Whether `item` is a good, a chore, or mixed for `agent`.
    pub fn classify_item(&self, agent: usize, item: usize) -> Result<ItemClass> {
        self.check_agent(agent)?;
        if item >= self.m {
            return Err(Error::ItemIndex {
                index: item,
                m: self.m,
            });
        }
        Ok(self.classes[agent][item])
    }

    pub fn class(&self) -> InstanceClass {
        let mut all_good = true;
        for agent_classes in &self.classes {
            for class in agent_classes {
                match class {
                    ItemClass::Good => {}
                    ItemClass::Chore => all_good = false,
                    ItemClass::Mixed => return InstanceClass::General,
                }
            }
        }
        if all_good {
            InstanceClass::Monotone
        } else {
            InstanceClass::DoublyMonotone
        }
    }

    /// The same instance with agents renamed: new agent `k` is old agent
    /// `new_to_old[k]`.
    pub fn relabel_agents(&self, new_to_old: &[usize]) -> Result<Instance<S>> {
        let perm = Permutation::new(new_to_old.to_vec())?;
        if perm.len() != self.n {
            return Err(Error::InvalidPermutation(format!(
                "expected length {}, got {}",
                self.n,
                perm.len()
            )));
        }
        let valuations = perm
            .iter()
            .map(|old| self.valuations[old].clone())
            .collect();
        let classes = perm.iter().map(|old| self.classes[old].clone()).collect();
        Ok(Instance {
            n: self.n,
            m: self.m,
            valuations,
            classes,
        })
    }

    /// Checks that `alloc` is a valid allocation of this instance.
    pub fn validate_allocation(&self, alloc: &Allocation) -> Result<()> {
        if alloc.bundles.len() != self.n {
            return Err(Error::InvalidAllocation(format!(
                "{} bundles for {} agents",
                alloc.bundles.len(),
                self.n
            )));
        }
        let mut seen = vec![false; self.m];
        let mut count = 0usize;
        for bundle in &alloc.bundles {
            for &item in bundle {
                if item >= self.m {
                    return Err(Error::ItemIndex {
                        index: item,
                        m: self.m,
                    });
                }
                if seen[item] {
                    return Err(Error::InvalidAllocation(format!(
                        "item {item} allocated twice"
                    )));
                }
                seen[item] = true;
                count += 1;
            }
        }
        if count != self.m {
            return Err(Error::InvalidAllocation(format!(
                "{count} of {} items allocated",
                self.m
            )));
        }
        Ok(())
    }
}

/// An ordered partition of the items into one bundle per agent.
///
/// Bundles are kept sorted by item index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    bundles: Vec<Vec<usize>>,
}

impl Allocation {
    /// Validates that `bundles` partitions `0..m` into `n` parts.
    pub fn new(n: usize, m: usize, mut bundles: Vec<Vec<usize>>) -> Result<Self> {
        if bundles.len() != n {
            return Err(Error::InvalidAllocation(format!(
                "{} bundles for {n} agents",
                bundles.len()
            )));
        }
        let mut seen = vec![false; m];
        let mut count = 0usize;
        for bundle in &mut bundles {
            bundle.sort_unstable();
            for &item in bundle.iter() {
                if item >= m {
                    return Err(Error::ItemIndex { index: item, m });
                }
                if seen[item] {
                    return Err(Error::InvalidAllocation(format!(
                        "item {item} allocated twice"
                    )));
                }
                seen[item] = true;
                count += 1;
            }
        }
        if count != m {
            return Err(Error::InvalidAllocation(format!(
                "{count} of {m} items allocated"
            )));
        }
        Ok(Allocation { bundles })
    }

    /// `n` empty bundles (valid only for `m = 0` instances).
    pub fn empty(n: usize) -> Self {
        Allocation {
            bundles: vec![Vec::new(); n],
        }
    }

    pub(crate) fn from_parts_unchecked(bundles: Vec<Vec<usize>>) -> Self {
        Allocation { bundles }
    }

    pub fn n_bundles(&self) -> usize {
        self.bundles.len()
    }

    pub fn bundles(&self) -> &[Vec<usize>] {
        &self.bundles
    }

    pub fn bundle(&self, index: usize) -> &[usize] {
        &self.bundles[index]
    }

    pub fn into_bundles(self) -> Vec<Vec<usize>> {
        self.bundles
    }

    /// The rearrangement under `sigma`: bundle `i` of the result is bundle
    /// `sigma(i)` of `self`.
    pub fn permuted(&self, sigma: &Permutation) -> Allocation {
        let bundles = sigma.iter().map(|j| self.bundles[j].clone()).collect();
        Allocation { bundles }
    }

    /// Single right rotation of the bundle list: `(B_n, B_1, ..., B_{n-1})`.
    pub fn rotated_right(&self) -> Allocation {
        let n = self.bundles.len();
        let bundles = (0..n)
            .map(|i| self.bundles[(i + n - 1) % n].clone())
            .collect();
        Allocation { bundles }
    }
}

/// Non-negative payments, one per position. Whether positions are agents or
/// bundles depends on context: solvers compute bundle-indexed vectors and
/// rearrange them to agent-indexed ones at the boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsidyVector<S>(Vec<S>);

impl<S: Scalar> SubsidyVector<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        for (i, v) in values.iter().enumerate() {
            if *v < S::zero() {
                return Err(Error::NegativeSubsidy(i));
            }
        }
        Ok(SubsidyVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        SubsidyVector(vec![S::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> &S {
        &self.0[index]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    pub fn total(&self) -> S {
        sum(self.0.iter().cloned())
    }

    /// Largest entry; zero for the empty vector.
    pub fn max(&self) -> S {
        self.0.iter().max().cloned().unwrap_or_else(S::zero)
    }

    /// Smallest entry; zero for the empty vector.
    pub fn min(&self) -> S {
        self.0.iter().min().cloned().unwrap_or_else(S::zero)
    }

    /// Entries sorted in descending order.
    pub fn sorted_desc(&self) -> Vec<S> {
        let mut out = self.0.clone();
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    /// The rearrangement under `sigma`: entry `i` of the result is entry
    /// `sigma(i)` of `self`.
    pub fn permuted(&self, sigma: &Permutation) -> SubsidyVector<S> {
        SubsidyVector(sigma.iter().map(|j| self.0[j].clone()).collect())
    }
}
