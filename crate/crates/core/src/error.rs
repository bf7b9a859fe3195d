use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("agent index {index} out of range for {n} agents")]
    AgentIndex { index: usize, n: usize },
    #[error("item index {index} out of range for {m} items")]
    ItemIndex { index: usize, m: usize },
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("valuation of agent {agent} violates the unit-marginal bound at item {item} (|marginal| = {magnitude})")]
    NormalizationViolated {
        agent: usize,
        item: usize,
        magnitude: String,
    },
    #[error("negative subsidy at index {0}")]
    NegativeSubsidy(usize),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported instance: {0}")]
    UnsupportedInstance(String),
    #[error("arrangement is not envy-freeable: the envy graph has a positive-weight directed cycle")]
    NotEnvyFreeable,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}
