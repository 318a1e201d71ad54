//! Model-based RL workbench: the Shooter benchmark, a factored context-tree
//! pixel dynamics model, a linear reward model, a one-ply Monte Carlo
//! planner, and the DAgger-MC / Hallucinated DAgger-MC training loops.
//!
//! The [`mdp`] module also carries the exact tabular machinery (finite-horizon
//! action values, t-step distributions, discounted occupancies) that the
//! bound-verification crate builds on.

pub mod dagger;
pub mod dynamics;
pub mod grid;
pub mod mdp;
pub mod planner;
pub mod reward;
pub mod seed;
pub mod shooter;

pub use grid::PixelGrid;
pub use mdp::ActionId;
