//! Truncated λ-series, abelian twist star products, noncommutative geometry
//! in a nice basis, deformed wave and Green operators, and FRW toy-model numerics.

pub mod error;
pub mod exec;
pub mod frwnum;
pub mod green;
pub mod ncgeo;
pub mod scalar;
pub mod series;
pub mod symred;
pub mod symbolic;
pub mod twist;
pub mod waveop;

pub use error::{Error, Result};
pub use scalar::{Cq, Q};
pub use series::{CoefficientDomain, LambdaSeries};
