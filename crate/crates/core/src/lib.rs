//! Sampled-time safety checking for energy grids.
//!
//! Real-time safety requirements written in MTL are strengthened into LTL
//! formulas over the controller's sampling instants. A sampled trace that
//! satisfies the strengthened formula guarantees the dense-time trace satisfies
//! the original requirement. The crate provides the formula layer, the
//! strengthening itself, trace semantics, compiled monitors, a DC power-flow
//! grid simulator with pluggable controllers and a shield, and statistical
//! model checking on top.

pub mod control;
pub mod corpus;
pub mod fixtures;
pub mod grid;
pub mod logic;
pub mod monitor;
pub mod semantics;
pub mod smc;
pub mod strengthen;

pub use logic::{Atom, AtomKind, Duration, Literal, LtlFormula, MtlFormula};
