//! Combinatorial optimization under weighted fuzzy constraints, driven by
//! repair-based local search.
//!
//! Layers, bottom up:
//!
//! - [`fuzzy`]: membership functions, linguistic variables, rule firing,
//!   aggregation and defuzzification.
//! - [`constraint`]: compare/concat constraint trees with importance,
//!   dilatation and hard barriers.
//! - [`dynamic`]: template constraints specialized at runtime, generation
//!   rules, and the incrementally updated evaluation tree.
//! - [`domain`]: the domain abstraction plus two bundled domains, shift
//!   scheduling and n-queens.
//! - [`optimizer`]: conflict-guided repair heuristics.
//! - [`consistency`]: reference-ranking-pair consistency checks for
//!   configuration changes.

pub mod bench;
pub mod consistency;
pub mod constraint;
pub mod domain;
pub mod dynamic;
pub mod fuzzy;
pub mod kb;
pub mod optimizer;
