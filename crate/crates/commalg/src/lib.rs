//! Exact commutative algebra over the rationals: Gröbner bases for ideals and
//! submodules of free modules, presented rings and finitely presented modules.

pub mod engine;
pub mod module;
pub mod mono;
pub mod poly;
pub mod ring;
pub mod span;

pub use module::{ModuleMap, ModulePresentation};
pub use mono::{Mono, MonoOrder};
pub use poly::{q, qf, Poly, Q};
pub use ring::{PresentedRing, RingMap};
pub use span::{Span, Vector};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum AlgError {
    #[error("expected {expected} images, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("ring map does not respect relation {0}")]
    RelationNotRespected(String),
    #[error("matrix shape does not match source and target")]
    Shape,
    #[error("module map does not carry relations into relations")]
    NotWellDefined,
    #[error("module and ring map live over different rings")]
    RingMismatch,
}

/// Reduced Gröbner basis of an ideal in the fixed order.
pub fn groebner_ideal(gens: &[Poly]) -> Vec<Poly> {
    let n = gens.first().map(|p| p.nvars()).unwrap_or(0);
    ring::ideal_groebner(MonoOrder::Grevlex, n, gens)
}

/// Reduced Gröbner basis of a submodule of `P^rank`.
pub fn groebner_module(rank: usize, nvars: usize, gens: &[Vector]) -> Vec<Vector> {
    span::module_groebner(gens).into_iter().map(|e| e.to_polys(rank, nvars)).collect()
}
