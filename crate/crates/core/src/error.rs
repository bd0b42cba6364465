use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mass must be nonnegative, got {0}")]
    NegativeMass(f64),
    #[error("friction is undefined at zero mass")]
    ZeroMass,
    #[error("invalid transportation cost: {0}")]
    InvalidCost(String),

    #[error("measure has no atoms")]
    EmptyMeasure,
    #[error("atom masses must be positive and finite, got {0}")]
    NonPositiveMass(f64),
    #[error("total mass {0} is not 1")]
    UnnormalizedMass(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("transport plan violates its marginals by {0}")]
    MarginalViolation(f64),

    #[error("invalid street network: {0}")]
    InvalidNetwork(String),
    #[error("refinement {0} exceeds the limit of 16")]
    RefinementTooLarge(usize),
    #[error("point is not a node of the routing graph")]
    UnknownNode,
    #[error("polyline needs at least two points")]
    DegeneratePolyline,

    #[error("flux edge {0} is partially on the network and must be split first")]
    UnclassifiableEdge(usize),
    #[error("flux contains a directed cycle")]
    CyclicFlux,
    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    #[error("{0} atoms exceed the enumeration limit of 8")]
    TooManyAtoms(usize),
    #[error("vertex carries source or sink mass")]
    TerminalVertex,
    #[error("point is not a vertex of the flux")]
    UnknownVertex,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("flux has infinite energy")]
    InfiniteEnergy,
    #[error("ambient cost {network} differs from tau'(0) = {cost}")]
    AmbientCostMismatch { network: String, cost: String },
    #[error("no finite-cost flux moves the source onto the target")]
    Infeasible,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
