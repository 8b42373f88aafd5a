//! Solver for endogenous games with goals.
//!
//! A strategic game carries a monetary payoff layer and, on top of it, a set
//! of goal profiles per player. Boost factors turn the pair into an ordinary
//! utility game in which goal profiles beat every non-goal profile. Games can
//! be updated by pre-play side-payments or by taxes, and the [`endogenous`]
//! module asks which equilibria of the base game survive once players may
//! negotiate such payments first.
//!
//! Boolean games ([`boolean`]) are translated into the same machinery with
//! the regret boost.

pub mod boolean;
pub mod boost;
pub mod endogenous;
pub mod equilibria;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod formula;
pub mod game;
mod par;
pub use par::Exec;
pub mod transfers;

/// Tolerance used for every real-valued equality and strictness test.
pub const TOL: f64 = 1e-9;

pub use boolean::BooleanGame;
pub use boost::{instantiate, penalized_utility, BoostSpec, Boosts, Penalized, Punishment};
pub use error::GameError;
pub use formula::Formula;
pub use game::{
    affine_transform, expected_utility, BudgetConstraints, GoalAssignment, MixedProfile,
    StrategicGame,
};
pub use transfers::{TaxationMechanism, TransferFunction};
