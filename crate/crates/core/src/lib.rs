//! Semi-free differential graded algebras over ℚ: cohomology, tangent and
//! cotangent complexes, homotopies between morphisms, and descent along
//! localization covers.

pub mod algebra;
pub mod cohomology;
pub mod complex;
pub mod forms;
pub mod descent;
pub mod homotopy;

pub use algebra::{Algebra, Element, Generator, Morphism};
pub use dgs_commalg as commalg;
pub use forms::Forms;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DgaError {
    #[error("generator {0} has positive degree")]
    PositiveDegree(String),
    #[error("duplicate generator name {0}")]
    DuplicateName(String),
    #[error("expected {expected} entries, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("d({gen}) has degree {got}, expected {expected}")]
    DegreeMismatch { gen: String, expected: i32, got: i32 },
    #[error("not homogeneous: {0}")]
    NotHomogeneous(String),
    #[error("odd generator squared in d({0})")]
    OddSquare(String),
    #[error("d² ≠ 0 on generator {0}")]
    DSquared(String),
    #[error("elements or maps over different algebras")]
    MismatchedAlgebras,
    #[error("neither leg is a free extension of the base")]
    NotFreeExtension,
    #[error("element has degree {0}, expected 0")]
    NotDegreeZero(i32),
    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),
    #[error("budget {0} exhausted")]
    BudgetExhausted(i32),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Alg(#[from] dgs_commalg::AlgError),
}
