use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ray {0} is not a primitive integer vector")]
    NonPrimitiveRay(usize),
    #[error("cone {0:?} is not strongly convex")]
    NotStronglyConvex(Vec<usize>),
    #[error("not a fan: {0}")]
    NotAFan(String),
    #[error("duplicate cone {0:?}")]
    DuplicateCone(Vec<usize>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("cone {0} is not a facet of cone {1}")]
    NotFacet(usize, usize),
    #[error("cone set is not locally star closed")]
    NotLocallyStarClosed,
    #[error("cone set is not 1-complete")]
    NotOneComplete,
    #[error("input columns are linearly dependent")]
    DependentColumns,
    #[error("cone {0} is not a face of cone {1}")]
    NotAFace(usize, usize),
    #[error("source/target mismatch: {0}")]
    SourceTargetMismatch(String),
    #[error("cone {0} is not in the fan")]
    ConeNotInFan(usize),
    #[error("cone {0} is not maximal")]
    NotMaximal(usize),
    #[error("fan is not complete")]
    FanNotComplete,
    #[error("fan is not simplicial")]
    NotSimplicial,
    #[error("j = {j} is outside 0..={rank}")]
    JOutOfRange { j: i64, rank: usize },
    #[error("invalid perversity: {0}")]
    InvalidPerversity(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
