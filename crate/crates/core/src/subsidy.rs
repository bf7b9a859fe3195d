//! Envy-freeability, minimum subsidies, and bound certificates.
//!
//! For a fixed allocation the weight matrix `w[i][j] = v_i(A_j)` determines
//! everything: the arrangement maximizing the diagonal total is exactly the
//! one that admits envy-eliminating payments, and the minimal payments are
//! longest-path lengths in the induced envy graph. Subsidies are attached to
//! bundles internally and rearranged to agents at the API boundary.

use crate::error::{Error, Result};
use crate::fairness::is_envy_free_with_subsidy;
use crate::matching::{lex_max_assignment, max_assignment, Permutation};
use crate::model::{Allocation, Instance, SubsidyVector};
use crate::scalar::{sum, Scalar};

/// Square matrix of bundle values, `w[i][j] = v_i(A_j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightMatrix<S> {
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> WeightMatrix<S> {
    pub fn new(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidInstance("empty weight matrix".into()));
        }
        if rows.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInstance("weight matrix is not square".into()));
        }
        Ok(WeightMatrix { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn diagonal_total(&self) -> S {
        sum((0..self.n()).map(|i| self.rows[i][i].clone()))
    }

    pub fn total_under(&self, sigma: &Permutation) -> S {
        sum((0..self.n()).map(|i| self.rows[i][sigma.get(i)].clone()))
    }
}

/// The weight matrix of an allocation.
pub fn weight_matrix<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
) -> Result<WeightMatrix<S>> {
    inst.validate_allocation(alloc)?;
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

/// A permutation maximizing the assigned total; ties resolve to the
/// lexicographically smallest permutation.
pub fn max_weight_permutation<S: Scalar>(w: &WeightMatrix<S>) -> Permutation {
    let (assign, _) = lex_max_assignment(w.rows());
    Permutation::new(assign).expect("assignment is a bijection")
}

/// Whether the arrangement as given admits envy-eliminating payments, i.e.
/// whether the identity already maximizes the assigned total.
pub fn is_envy_freeable<S: Scalar>(w: &WeightMatrix<S>) -> bool {
    let (_, best) = max_assignment(w.rows());
    w.diagonal_total() == best
}

/// Complete digraph of pairwise envy under an arrangement:
/// `gamma[i][j] = w[i][sigma(j)] - w[i][sigma(i)]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvyGraph<S> {
    gamma: Vec<Vec<S>>,
    positive_cycle: bool,
}

impl<S: Scalar> EnvyGraph<S> {
    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn weight(&self, from: usize, to: usize) -> &S {
        &self.gamma[from][to]
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.gamma
    }

    /// True when some directed cycle has strictly positive total weight,
    /// which happens exactly when `sigma` fails to maximize the total.
    pub fn has_positive_cycle(&self) -> bool {
        self.positive_cycle
    }
}

pub fn envy_graph<S: Scalar>(w: &WeightMatrix<S>, sigma: &Permutation) -> Result<EnvyGraph<S>> {
    let n = w.n();
    if sigma.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "permutation length {} for {n} bundles",
            sigma.len()
        )));
    }
    let gamma = gamma_of(w, sigma);
    let positive_cycle = longest_path_lengths(&gamma).is_err();
    Ok(EnvyGraph {
        gamma,
        positive_cycle,
    })
}

pub(crate) fn gamma_of<S: Scalar>(w: &WeightMatrix<S>, sigma: &Permutation) -> Vec<Vec<S>> {
    let n = w.n();
    (0..n)
        .map(|i| {
            let own = w.at(i, sigma.get(i)).clone();
            (0..n)
                .map(|j| w.at(i, sigma.get(j)).clone() - own.clone())
                .collect()
        })
        .collect()
}

/// All-pairs longest path lengths, or an error if a positive-weight cycle
/// exists. Runs a shortest-path sweep over the negated weights with cycle
/// detection on the diagonal.
pub(crate) fn longest_path_lengths<S: Scalar>(gamma: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
    let n = gamma.len();
    let mut dist: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { S::zero() } else { -gamma[i][j].clone() })
                .collect()
        })
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k].clone() + dist[k][j].clone();
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    if (0..n).any(|i| dist[i][i] < S::zero()) {
        return Err(Error::NotEnvyFreeable);
    }
    Ok(dist
        .into_iter()
        .map(|row| row.into_iter().map(|d| -d).collect())
        .collect())
}

/// The minimum envy-eliminating payment vector for `w` under `sigma`,
/// indexed by bundle: `p[sigma(i)]` is the longest path length from vertex
/// `i` in the envy graph (the empty path counts as zero).
///
/// `sigma` must maximize the assigned total; equivalently the envy graph must
/// have no positive-weight cycle, which is what is actually checked.
pub fn min_subsidy<S: Scalar>(
    w: &WeightMatrix<S>,
    sigma: &Permutation,
) -> Result<SubsidyVector<S>> {
    let n = w.n();
    if sigma.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "permutation length {} for {n} bundles",
            sigma.len()
        )));
    }
    let gamma = gamma_of(w, sigma);
    let longest = longest_path_lengths(&gamma)?;
    let mut p = vec![S::zero(); n];
    for i in 0..n {
        let best = longest[i]
            .iter()
            .max()
            .cloned()
            .expect("non-empty row");
        // The empty path keeps every entry at least zero.
        p[sigma.get(i)] = if best > S::zero() { best } else { S::zero() };
    }
    let p = SubsidyVector::new(p)?;
    if p.min() != S::zero() {
        return Err(Error::Internal(
            "minimum subsidy vector has no zero entry".into(),
        ));
    }
    Ok(p)
}

/// An envy-free solution: a (re)arranged allocation, agent-indexed payments,
/// and the permutation that produced the arrangement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsidizedAllocation<S> {
    /// Final arrangement; bundle `i` belongs to agent `i`.
    pub allocation: Allocation,
    /// Agent-indexed payments aligned with `allocation`.
    pub subsidy: SubsidyVector<S>,
    /// Agent `i` holds bundle `sigma(i)` of the arrangement this solution was
    /// derived from.
    pub sigma: Permutation,
}

impl<S: Scalar> SubsidizedAllocation<S> {
    pub fn total_subsidy(&self) -> S {
        self.subsidy.total()
    }

    pub fn max_subsidy(&self) -> S {
        self.subsidy.max()
    }
}

pub(crate) fn arrange_and_verify<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
    sigma: Permutation,
    bundle_subsidy: &SubsidyVector<S>,
) -> Result<SubsidizedAllocation<S>> {
    let allocation = alloc.permuted(&sigma);
    let subsidy = bundle_subsidy.permuted(&sigma);
    if !is_envy_free_with_subsidy(inst, &allocation, &subsidy)? {
        return Err(Error::Internal(
            "computed subsidy vector does not eliminate envy".into(),
        ));
    }
    Ok(SubsidizedAllocation {
        allocation,
        subsidy,
        sigma,
    })
}

/// Envy-free solution for a given allocation: rearrange its bundles by a
/// maximum-weight permutation and pay the minimum subsidies.
pub fn solve_given_allocation<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
) -> Result<SubsidizedAllocation<S>> {
    let w = weight_matrix(inst, alloc)?;
    let sigma = max_weight_permutation(&w);
    let p = min_subsidy(&w, &sigma)?;
    arrange_and_verify(inst, alloc, sigma, &p)
}

/// Per-rank subsidy bounds derived from each agent's largest own-vs-other
/// value gap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BetaBounds<S> {
    /// The gaps `max_j w[i][j] - w[i][i]`, sorted in descending order.
    pub beta: Vec<S>,
    /// `rank_bounds[r-1]` bounds the r-th largest minimum subsidy: the sum of
    /// the `n - r` largest non-negative gaps.
    pub rank_bounds: Vec<S>,
}

pub fn beta_bounds<S: Scalar>(w: &WeightMatrix<S>) -> BetaBounds<S> {
    let n = w.n();
    let mut beta: Vec<S> = (0..n)
        .map(|i| {
            let best = (0..n).map(|j| w.at(i, j).clone()).max().expect("row");
            best - w.at(i, i).clone()
        })
        .collect();
    beta.sort_by(|a, b| b.cmp(a));
    let clamped: Vec<S> = beta
        .iter()
        .map(|b| if *b > S::zero() { b.clone() } else { S::zero() })
        .collect();
    let mut rank_bounds = Vec::with_capacity(n);
    for r in 1..=n {
        rank_bounds.push(sum(clamped.iter().take(n - r).cloned()));
    }
    BetaBounds { beta, rank_bounds }
}

/// Whether the solved subsidies for an EFk allocation respect the k-scaled
/// bounds: max at most `k(n-1)` and total at most `k n(n-1)/2`.
pub fn efk_bound_check<S: Scalar>(
    inst: &Instance<S>,
    alloc: &Allocation,
    k: usize,
) -> Result<bool> {
    if !crate::fairness::is_efk(inst, alloc, k)? {
        return Err(Error::Precondition(format!(
            "allocation is not EF{k}"
        )));
    }
    let n = inst.n() as i64;
    let k = k as i64;
    let sol = solve_given_allocation(inst, alloc)?;
    let max_bound = crate::scalar::int::<S>(k * (n - 1));
    let total_bound = crate::scalar::frac::<S>(k * n * (n - 1), 2);
    Ok(sol.max_subsidy() <= max_bound && sol.total_subsidy() <= total_bound)
}

/// Dual-style view of a solved matrix: per-agent best attainable utility,
/// residual envy slack, the slack-augmented matrix, and certificate data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagnosticView<S> {
    /// `q[i] = max_j (w[i][j] + p[j])`, the best utility agent `i` sees.
    pub q: Vec<S>,
    /// `r[i] = q[i] - w[i][i] - p[i]`, agent `i`'s maximum envy.
    pub r: Vec<S>,
    /// `w` with `r` added on the diagonal; the identity maximizes its total
    /// and it has the same minimum subsidy vector as `w`.
    pub hat_w: WeightMatrix<S>,
    /// Descending value gaps of `w` (see [`beta_bounds`]).
    pub beta: Vec<S>,
    /// Envy-chain slacks, present only after a spanning longest-path
    /// relabeling.
    pub s: Option<Vec<S>>,
}

/// Builds the dual view of `(w, p)` and verifies its defining identities.
///
/// `p` must be the minimum subsidy vector for `w`; the checks (identity
/// maximality for the augmented matrix, equality of the two minimum subsidy
/// vectors, and complementary slackness on the matched pairs) hold for every
/// correct solver output, so a failure signals a solver bug.
pub fn diagnostic_view<S: Scalar>(
    w: &WeightMatrix<S>,
    p: &SubsidyVector<S>,
) -> Result<DiagnosticView<S>> {
    let n = w.n();
    if p.len() != n {
        return Err(Error::Precondition(format!(
            "subsidy vector has {} entries for {n} bundles",
            p.len()
        )));
    }
    let q: Vec<S> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| w.at(i, j).clone() + p.get(j).clone())
                .max()
                .expect("row")
        })
        .collect();
    let r: Vec<S> = (0..n)
        .map(|i| q[i].clone() - w.at(i, i).clone() - p.get(i).clone())
        .collect();
    let hat_rows: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        w.at(i, i).clone() + r[i].clone()
                    } else {
                        w.at(i, j).clone()
                    }
                })
                .collect()
        })
        .collect();
    let hat_w = WeightMatrix::new(hat_rows)?;

    if !is_envy_freeable(&hat_w) {
        return Err(Error::Internal(
            "identity is not a maximum-weight arrangement of the augmented matrix".into(),
        ));
    }
    let hat_p = min_subsidy(&hat_w, &Permutation::identity(n)).map_err(|_| {
        Error::Internal("augmented matrix has a positive-weight envy cycle".into())
    })?;
    if hat_p != *p {
        return Err(Error::Internal(
            "augmented matrix disagrees on the minimum subsidy vector".into(),
        ));
    }
    let sigma = max_weight_permutation(w);
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        let matched = w.at(i, sigma.get(i)).clone() + p.get(sigma.get(i)).clone();
        if matched != q[i] {
            return Err(Error::Internal(
                "complementary slackness fails on a matched pair".into(),
            ));
        }
    }

    let beta = beta_bounds(w).beta;
    Ok(DiagnosticView {
        q,
        r,
        hat_w,
        beta,
        s: None,
    })
}
