//! Approximate variational symmetries and conservation laws of perturbed
//! Lagrangians.

pub mod expr;
pub mod jet;
pub mod perturb;
pub mod symmetry;
pub mod linalg;
pub mod noether;
pub mod determine;
pub mod models;
pub mod numverify;

use determine::DetermineError;
use linalg::LinalgError;
use models::ModelError;
use noether::NoetherError;
use numverify::NumError;

/// Any error raised by the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] expr::ExprError),
    #[error(transparent)]
    Jet(#[from] jet::JetError),
    #[error(transparent)]
    Perturb(#[from] perturb::PerturbError),
    #[error(transparent)]
    Symmetry(#[from] symmetry::SymmetryError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Noether(#[from] NoetherError),
    #[error(transparent)]
    Determine(#[from] DetermineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

impl Error {
    /// Process exit code: 2 model errors, 3 pivot ambiguity, 4 failed
    /// symmetry or flux check, 5 non-finite numeric state, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        fn noether(e: &NoetherError) -> Option<i32> {
            match e {
                NoetherError::NotAVariationalSymmetry { .. } | NoetherError::FormulaMismatch { .. } => Some(4),
                NoetherError::Linalg(LinalgError::SymbolicPivotAmbiguity(_)) => Some(3),
                _ => None,
            }
        }
        fn determine(e: &DetermineError) -> Option<i32> {
            match e {
                DetermineError::Linalg(LinalgError::SymbolicPivotAmbiguity(_)) => Some(3),
                DetermineError::Noether(n) => noether(n),
                _ => None,
            }
        }
        let specific = match self {
            Error::Linalg(LinalgError::SymbolicPivotAmbiguity(_)) => Some(3),
            Error::Noether(e) => noether(e),
            Error::Determine(e) => determine(e).or(Some(2)),
            Error::Model(ModelError::Noether(e)) => noether(e).or(Some(2)),
            Error::Model(ModelError::Determine(e)) => determine(e).or(Some(2)),
            Error::Model(_) | Error::Expr(_) => Some(2),
            Error::Numeric(NumError::NonFiniteState { .. }) => Some(5),
            Error::Numeric(NumError::Noether(e)) => noether(e),
            _ => None,
        };
        specific.unwrap_or(1)
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/jets.md")]
    mod jets {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
    #[doc = include_str!("../../../book/src/noether.md")]
    mod noether {}
    #[doc = include_str!("../../../book/src/determine.md")]
    mod determine {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
}
