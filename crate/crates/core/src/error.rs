use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid kinematic chain: {0}")]
    InvalidChain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("timestamps must be strictly increasing (sample {index})")]
    NonMonotonicTime { index: usize },
    #[error("demonstration {index} has fewer than 2 samples")]
    EmptyDemonstration { index: usize },
    #[error("demonstration set is empty")]
    EmptySet,
    #[error("degenerate data: {distinct} distinct points for {components} components")]
    DegenerateData { distinct: usize, components: usize },
    #[error("covariance of component {component} is not positive definite")]
    SingularCovariance { component: usize },
    #[error("J J^T is singular and no damping was given")]
    SingularSystem,
    #[error("unknown face `{0}`")]
    UnknownFace(String),
    #[error("no feasible reference plan: {0}")]
    NoFeasiblePlan(String),
    #[error("no outcomes to score")]
    EmptyOutcomes,
    #[error("demonstrator {demonstrator} lacks session-1 results for face {face}")]
    MissingSession { demonstrator: String, face: String },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dataset is empty")]
    EmptyDataset,
}
