//! Finite normal-form games, incentive functions and the dynamics and
//! equilibria they induce.
//!
//! An incentive assigns every player and pure strategy a real propensity
//! `φ_iα(x)`. The revision map `T(x)_i = (x_i + φ_i) / (1 + Σφ_i)` and the
//! incentive dynamics `ẋ = φ − x Σφ` share their rest points: the profiles
//! where each `φ_i(x)` is parallel to `x_i`.
//!
//! ```
//! use incentive_games::{catalog, incentive::Nash, search, Profile};
//!
//! let pd = catalog::prisoners_dilemma();
//! let dd = Profile::pure(&[2, 2], &[1, 1]).unwrap();
//! assert_eq!(search::equilibrium_residual(&pd, &Nash, &dd).unwrap(), 0.0);
//! ```

pub mod catalog;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod incentive;
pub mod io;
pub mod search;
pub mod symmetry;

pub use error::{Error, Result};
pub use game::{Game, OpponentIndexCodec, Profile};
pub use incentive::{Incentive, StrategyField};
