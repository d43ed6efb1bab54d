//! Robust variable-horizon tube MPC for intercepting a moving reference under
//! bounded disturbances.
//!
//! The adaptive controller grows its terminal set only when the exact
//! terminal constraint stops delivering a guaranteed cost decrease, which lets
//! it finish much closer to the reference than the classical fixed terminal
//! sequence. The crate ships its own simplex solver, zonotope set algebra,
//! two example scenarios and a Monte Carlo harness.

pub mod cli;
pub mod controller;
pub mod error;
pub mod lp;
pub mod matrix;
pub mod scenario;
pub mod sets;
pub mod sim;
pub mod tube;

pub use controller::{Controller, Mode, MpcConfig, SolveResult, TerminalSpec};
pub use error::{Error, Result};
pub use scenario::{make_default_rendezvous, make_double_integrator, Scenario};
pub use sim::{simulate, DisturbanceSource, SimOptions, SimTrace};
