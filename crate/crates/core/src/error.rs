use thiserror::Error;

/// Library-wide error type.
///
/// Budget and feasibility failures are deliberately loud: the exactness
/// contract of the moment machinery forbids silent approximation, so running
/// out of enumeration budget is an error, never a degraded answer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spec parse error: {0}")]
    SpecParse(String),

    #[error("enumeration budget exceeded: visited {visited} nodes (budget {budget}); {hint}")]
    BudgetExceeded {
        visited: u64,
        budget: u64,
        hint: String,
    },

    #[error("infeasible at desk scale: {0}")]
    Infeasible(String),

    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    #[error("rho undetermined: cumulants 3..={m_max} of X1 all vanish")]
    RhoUndetermined { m_max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
