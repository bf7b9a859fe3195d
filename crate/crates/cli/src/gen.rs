//! Instance generators for the named CLI families.
//!
//! All randomness comes from a seeded ChaCha stream, so files are
//! byte-identical across runs with the same seed.

use envy_subsidy::{frac, int, Allocation, Instance, Rat, MAX_TABLE_ITEMS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{CliError, CliResult};

/// The tight chain family (`example1`): `n` rows of `n+1` items; each agent
/// values its own row at `n/(n+1)` per item and the previous agent's row at 1
/// per item. Solved row-by-row, the payments climb 0, 1, ..., n-1, which is
/// the worst case for the direct pipeline.
///
/// Returns the instance with its canonical row allocation.
pub fn tight_chain(n: usize) -> CliResult<(Instance<Rat>, Allocation)> {
    if n < 2 {
        return Err(CliError::Input("example1 requires n >= 2".into()));
    }
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
    let inst = Instance::additive(values).map_err(CliError::from)?;
    let bundles = (0..n)
        .map(|i| (i * (n + 1)..(i + 1) * (n + 1)).collect())
        .collect();
    let alloc = Allocation::new(n, m, bundles).map_err(CliError::from)?;
    Ok((inst, alloc))
}

/// One item valued 1 by every agent; whoever gets it is envied by all.
pub fn single_item(n: usize) -> CliResult<(Instance<Rat>, Allocation)> {
    if n < 1 {
        return Err(CliError::Input("single-item requires n >= 1".into()));
    }
    let values = vec![vec![int::<Rat>(1)]; n];
    let inst = Instance::additive(values).map_err(CliError::from)?;
    let mut bundles = vec![Vec::new(); n];
    bundles[0].push(0);
    let alloc = Allocation::new(n, 1, bundles).map_err(CliError::from)?;
    Ok((inst, alloc))
}

/// Additive values drawn uniformly from {0, 1/10, ..., 1}.
pub fn random_additive_goods(n: usize, m: usize, seed: u64) -> CliResult<Instance<Rat>> {
    check_random_params(n)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values: Vec<Vec<Rat>> = (0..n)
        .map(|_| (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect())
        .collect();
    Instance::additive(values).map_err(CliError::from)
}

/// Additive values drawn uniformly from {-1, ..., -1/10, 0, 1/10, ..., 1};
/// doubly monotone by construction.
pub fn random_mixed(n: usize, m: usize, seed: u64) -> CliResult<Instance<Rat>> {
    check_random_params(n)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values: Vec<Vec<Rat>> = (0..n)
        .map(|_| (0..m).map(|_| frac(rng.gen_range(-10..=10), 10)).collect())
        .collect();
    Instance::additive(values).map_err(CliError::from)
}

/// Monotone non-additive tables: capped sums of random item weights
/// (`v(X) = min(sum of weights in X, cap)`), so every marginal lies in
/// [0, 1].
pub fn random_table(n: usize, m: usize, seed: u64) -> CliResult<Instance<Rat>> {
    check_random_params(n)?;
    if m > MAX_TABLE_ITEMS {
        return Err(CliError::Input(format!(
            "random-table supports at most {MAX_TABLE_ITEMS} items, got {m}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut tables = Vec::with_capacity(n);
    for _ in 0..n {
        let weights: Vec<Rat> = (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect();
        let weight_sum_tenths: i64 = weights
            .iter()
            .map(|w| (w.clone() * int::<Rat>(10)).to_integer())
            .map(|b| i64::try_from(b).expect("small"))
            .sum();
        let cap = frac::<Rat>(rng.gen_range(0..=weight_sum_tenths.max(1)), 10);
        let table: Vec<Rat> = (0..1usize << m)
            .map(|mask| {
                let sum: Rat = (0..m)
                    .filter(|&e| mask & (1 << e) != 0)
                    .map(|e| weights[e].clone())
                    .sum();
                if sum > cap {
                    cap.clone()
                } else {
                    sum
                }
            })
            .collect();
        tables.push(table);
    }
    Instance::table(tables).map_err(CliError::from)
}

fn check_random_params(n: usize) -> CliResult<()> {
    if n < 1 {
        return Err(CliError::Input("at least one agent required".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use envy_subsidy::{weight_matrix, InstanceClass};

    #[test]
    fn tight_chain_matches_expected_matrix() {
        let (inst, alloc) = tight_chain(3).unwrap();
        assert_eq!(inst.m(), 12);
        let w = weight_matrix(&inst, &alloc).unwrap();
        let expect = |v: i64| int::<Rat>(v);
        assert_eq!(*w.at(0, 0), expect(3));
        assert_eq!(*w.at(1, 0), expect(4));
        assert_eq!(*w.at(1, 1), expect(3));
        assert_eq!(*w.at(2, 1), expect(4));
        assert_eq!(*w.at(0, 1), expect(0));
        assert_eq!(*w.at(2, 0), expect(0));
    }

    #[test]
    fn tight_chain_rejects_tiny_n() {
        assert!(tight_chain(1).is_err());
    }

    #[test]
    fn single_item_instance() {
        let (inst, alloc) = single_item(2).unwrap();
        assert_eq!(inst.m(), 1);
        assert_eq!(alloc.bundle(0), &[0]);
        assert_eq!(inst.value(1, &[0]).unwrap(), int::<Rat>(1));
    }

    #[test]
    fn random_families_are_deterministic_and_classified() {
        let a = random_additive_goods(3, 6, 7).unwrap();
        let b = random_additive_goods(3, 6, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class(), InstanceClass::Monotone);

        let t = random_table(2, 4, 11).unwrap();
        assert_eq!(t, random_table(2, 4, 11).unwrap());
        assert_eq!(t.class(), InstanceClass::Monotone);
        assert!(!t.is_additive());

        let m = random_mixed(3, 6, 5).unwrap();
        assert_ne!(m.class(), InstanceClass::General);
    }
}
