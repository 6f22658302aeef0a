//! Exact superhedging on finite scenario trees.
//!
//! All computations run in arbitrary precision rational arithmetic so that
//! prices, hedges, supports and dual measures are exact identities, never
//! approximations.

pub mod casebook;
pub mod cli;
pub mod dual;
pub mod lp;
pub mod market;
pub mod polar;
pub mod primal;
pub mod rational;
pub mod schema;
pub mod semistatic;
