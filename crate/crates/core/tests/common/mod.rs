#![allow(dead_code)]

use envy_subsidy::{frac, int, Allocation, Instance, Rat, WeightMatrix};
use rand::Rng;

/// Random weight matrix with entries `k/d`, `k` in `-20..=20`, `d` in `1..=4`.
pub fn random_matrix(rng: &mut impl Rng, n: usize) -> WeightMatrix<Rat> {
    let rows: Vec<Vec<Rat>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| frac(rng.gen_range(-20..=20), rng.gen_range(1..=4)))
                .collect()
        })
        .collect();
    WeightMatrix::new(rows).unwrap()
}

/// Random matrix whose columns are permuted so the identity arrangement is
/// maximum weight (hence envy-freeable).
pub fn random_envy_freeable_matrix(rng: &mut impl Rng, n: usize) -> WeightMatrix<Rat> {
    let w = random_matrix(rng, n);
    let sigma = envy_subsidy::max_weight_permutation(&w);
    let rows: Vec<Vec<Rat>> = (0..n)
        .map(|i| (0..n).map(|j| w.at(i, sigma.get(j)).clone()).collect())
        .collect();
    WeightMatrix::new(rows).unwrap()
}

pub fn random_additive_goods(rng: &mut impl Rng, n: usize, m: usize) -> Instance<Rat> {
    let values: Vec<Vec<Rat>> = (0..n)
        .map(|_| (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect())
        .collect();
    Instance::additive(values).unwrap()
}

pub fn random_additive_mixed(rng: &mut impl Rng, n: usize, m: usize) -> Instance<Rat> {
    let values: Vec<Vec<Rat>> = (0..n)
        .map(|_| (0..m).map(|_| frac(rng.gen_range(-10..=10), 10)).collect())
        .collect();
    Instance::additive(values).unwrap()
}

pub fn random_allocation(rng: &mut impl Rng, n: usize, m: usize) -> Allocation {
    let mut bundles = vec![Vec::new(); n];
    for item in 0..m {
        bundles[rng.gen_range(0..n)].push(item);
    }
    Allocation::new(n, m, bundles).unwrap()
}

/// The tight chain family: `n` rows of `n+1` items; each agent values its own
/// row at `n/(n+1)` per item and the previous row at 1 per item.
pub fn tight_chain_instance(n: usize) -> (Instance<Rat>, Allocation) {
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
    let bundles = (0..n)
        .map(|i| (i * (n + 1)..(i + 1) * (n + 1)).collect())
        .collect();
    let alloc = Allocation::new(n, m, bundles).unwrap();
    (inst, alloc)
}

/// Random table with unit-bounded marginals of both signs: the difference of
/// two capped sums of item weights.
pub fn random_mixed_table(rng: &mut impl Rng, m: usize) -> Vec<Rat> {
    let gains: Vec<Rat> = (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect();
    let losses: Vec<Rat> = (0..m).map(|_| frac(rng.gen_range(0..=10), 10)).collect();
    let gain_cap = frac::<Rat>(rng.gen_range(0..=10 * m as i64), 10);
    let loss_cap = frac::<Rat>(rng.gen_range(0..=10 * m as i64), 10);
    (0..1usize << m)
        .map(|mask| {
            let capped = |weights: &[Rat], cap: &Rat| -> Rat {
                let sum: Rat = weights
                    .iter()
                    .enumerate()
                    .filter(|(e, _)| mask & (1 << e) != 0)
                    .map(|(_, w)| w.clone())
                    .sum();
                if sum > *cap {
                    cap.clone()
                } else {
                    sum
                }
            };
            capped(&gains, &gain_cap) - capped(&losses, &loss_cap)
        })
        .collect()
}
