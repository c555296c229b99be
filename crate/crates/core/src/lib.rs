//! Finite gluing engine.
//!
//! Computes glued-up objects of gluing functors indexed by (split) truncated
//! power-set categories, in finite sets and finite topological spaces, and
//! checks effectiveness, covering, sheaf and refinement conditions on
//! explicit finite data.

pub mod cli;
pub mod error;
pub mod fincat;
pub mod gluing;
pub mod indexcat;
pub mod presheaf;
pub mod refine;
pub mod site;

pub use error::{GlueError, Result};
