//! Exact solvers, filters and oracles for finite sequential team decision
//! problems under delayed, periodic and partial information sharing.
//!
//! The pieces fit together as follows:
//!
//! * [`model`] holds the dynamics, costs and information structures and cuts
//!   per-member views out of realized histories.
//! * [`filter`] computes the team information state and each member's
//!   information state given the other members' strategies.
//! * [`dp`] runs the manager's belief-space dynamic program and the per-member
//!   dynamic program, and compares the two.
//! * [`oracle`] enumerates outcomes and strategies exhaustively; everything
//!   else is tested against it.
//! * [`sim`] estimates costs by seeded Monte Carlo.
//! * [`gaussian`] is the two-member linear-Gaussian example with delay two,
//!   solved in closed form.

pub mod dp;
pub mod filter;
pub mod gaussian;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod random;
pub mod sim;
pub mod strategy;

pub use filter::{Belief, FilterError};
pub use model::{validate_model, InformationStructure, JointHistory, TeamModel};
pub use strategy::{Policy, Strategy, StrategyError};
