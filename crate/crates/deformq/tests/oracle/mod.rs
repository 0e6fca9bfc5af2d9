//! Hand-written reference formulas shared by several test targets.
#![allow(dead_code)]

pub mod commutators;
pub mod conformal;
