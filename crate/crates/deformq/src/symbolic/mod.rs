//! Symbolic scalar fields on coordinate charts.

pub mod atom;
pub mod chart;
pub mod expr;
pub mod poly;

pub use atom::{Atom, AtomId};
pub use chart::{Chart, NumericCheck};
pub use expr::Expr;
pub use poly::{cos_of, exp_of, sin_of, Mono, Poly};
