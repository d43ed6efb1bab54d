//! Slow, obviously-correct reference computations used to cross-check the
//! `vhmpc` solvers and set operations. Nothing here depends on `vhmpc`.

pub mod hcw;
pub mod hull;
pub mod lp;
