//! Infinitary term rewriting at desk scale.
//!
//! The crate implements the machinery needed to experiment with weakly
//! orthogonal rewrite systems on finite and rational (cyclic) terms:
//!
//! * [`term`] — signatures, positions, finite/rational terms, the term
//!   metric and decidable bisimulation equality;
//! * [`trs`] — rules, critical pairs via first-order unification,
//!   orthogonality classification, redexes and (parallel) steps;
//! * [`reductions`] — strongly convergent staged reductions with explicit
//!   depth certificates, refined compression, projection of parallel
//!   steps, the parallel moves lemma and bounded confluence joining;
//! * [`clusters`] — the overlap relation, redex clusters, complete
//!   developments, the full multi-redex / triangle construction and the
//!   effective orthogonalization algorithm;
//! * [`spwords`] — finitely described infinite {P,S}-words with
//!   closed-form sum/norm analysis and reduction witnesses;
//! * [`lambda`] — the translation of {P,S}-words into lambda terms with
//!   beta/eta stepping and commuting-square checks.

pub mod clusters;
pub mod lambda;
pub mod reductions;
pub mod spwords;
pub mod term;
pub mod testgen;
pub mod trs;

pub use term::{Position, Signature, Substitution, Term, TermError};
pub use trs::{CriticalPair, MultiRedex, OrthoClass, Redex, Rule, Trs, TrsError};
