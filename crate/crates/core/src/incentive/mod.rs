//! Incentive functions: maps from a mixed profile to one real value per
//! player and pure strategy, read as the propensity to move toward that
//! strategy.
//!
//! Every catalog incentive satisfies the boundary condition
//! `x_iα = 0 ⇒ φ_iα(x) ≥ 0`. Whether the discrete revision map may be driven
//! by an incentive on a given game is reported separately by
//! [`Incentive::check_map_admissible`].

mod canonical;
mod mean;
mod other;
mod spec;

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{Game, Profile};

pub use canonical::{BestReply, Logit, Nash, Projection, Replicator, Smith, Translation};
pub use mean::{MeanDynamics, SwitchRateTable, SwitchRule, SWITCH_RATE_TOL};
pub use other::{
    Altruism, BenefitRule, Coalition, EpsilonNash, MarginOfVictory, Pareto, Rival,
    RivalVariant, SimultaneousUpdate, StrategicUpdate, Zero, COALITION_MAX_PLAYERS,
};
pub use spec::{parse_spec, SPEC_GRAMMAR};

/// One real value per player and pure strategy. Used for incentive values
/// and for tangent vectors of the dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyField(Vec<Vec<f64>>);

impl StrategyField {
    pub fn new(parts: Vec<Vec<f64>>) -> Self {
        StrategyField(parts)
    }

    pub fn zeros(strategy_counts: &[usize]) -> Self {
        StrategyField(strategy_counts.iter().map(|&s| vec![0.0; s]).collect())
    }

    pub fn player(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn player_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.0[i]
    }

    pub fn parts(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn into_parts(self) -> Vec<Vec<f64>> {
        self.0
    }

    pub fn n_players(&self) -> usize {
        self.0.len()
    }

    /// `Σ_β φ_iβ` for each player.
    pub fn totals(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.iter().sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &StrategyField) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.0.iter()
    }
}

impl Index<usize> for StrategyField {
    type Output = [f64];

    fn index(&self, i: usize) -> &[f64] {
        &self.0[i]
    }
}

pub trait Incentive: Send + Sync {
    /// A spec string that reproduces this incentive where one exists,
    /// otherwise a descriptive name.
    fn spec(&self) -> String;

    fn is_continuous(&self) -> bool {
        true
    }

    /// True when `Σ_β φ_iβ(x) = 0` identically.
    fn zero_total(&self) -> bool {
        false
    }

    /// Evaluates the incentive without checking `x` against the game.
    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField>;

    fn evaluate(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        game.check_profile(x)?;
        self.values(game, x)
    }

    /// Static check that the revision map driven by this incentive keeps
    /// the product of simplices invariant on `game`. Incentives that are
    /// nonnegative everywhere pass trivially.
    fn check_map_admissible(&self, _game: &Game) -> Result<()> {
        Ok(())
    }
}

impl<T: Incentive + ?Sized> Incentive for Box<T> {
    fn spec(&self) -> String {
        (**self).spec()
    }
    fn is_continuous(&self) -> bool {
        (**self).is_continuous()
    }
    fn zero_total(&self) -> bool {
        (**self).zero_total()
    }
    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        (**self).values(game, x)
    }
    fn evaluate(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        (**self).evaluate(game, x)
    }
    fn check_map_admissible(&self, game: &Game) -> Result<()> {
        (**self).check_map_admissible(game)
    }
}

impl<T: Incentive + ?Sized> Incentive for &T {
    fn spec(&self) -> String {
        (**self).spec()
    }
    fn is_continuous(&self) -> bool {
        (**self).is_continuous()
    }
    fn zero_total(&self) -> bool {
        (**self).zero_total()
    }
    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        (**self).values(game, x)
    }
    fn evaluate(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        (**self).evaluate(game, x)
    }
    fn check_map_admissible(&self, game: &Game) -> Result<()> {
        (**self).check_map_admissible(game)
    }
}

/// An incentive given by an arbitrary closure. Admissibility for the
/// revision map is left to the runtime checks in `t_map`.
pub struct FnIncentive<F> {
    name: String,
    continuous: bool,
    zero_total: bool,
    f: F,
}

impl<F> FnIncentive<F>
where
    F: Fn(&Game, &Profile) -> StrategyField + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnIncentive {
            name: name.into(),
            continuous: true,
            zero_total: false,
            f,
        }
    }

    pub fn continuous(mut self, yes: bool) -> Self {
        self.continuous = yes;
        self
    }

    pub fn with_zero_total(mut self, yes: bool) -> Self {
        self.zero_total = yes;
        self
    }
}

impl<F> fmt::Debug for FnIncentive<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnIncentive").field("name", &self.name).finish()
    }
}

impl<F> Incentive for FnIncentive<F>
where
    F: Fn(&Game, &Profile) -> StrategyField + Send + Sync,
{
    fn spec(&self) -> String {
        self.name.clone()
    }
    fn is_continuous(&self) -> bool {
        self.continuous
    }
    fn zero_total(&self) -> bool {
        self.zero_total
    }
    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        Ok((self.f)(game, x))
    }
}

/// `φ̃_iα = φ_iα − x_iα Σ_β φ_iβ`: same incentive dynamics, zero total.
#[derive(Debug, Clone)]
pub struct DynamicallyEquivalent<I> {
    inner: I,
}

pub fn dyn_equivalent<I: Incentive>(inner: I) -> DynamicallyEquivalent<I> {
    DynamicallyEquivalent { inner }
}

impl<I: Incentive> DynamicallyEquivalent<I> {
    pub fn inner(&self) -> &I {
        &self.inner
    }
}

impl<I: Incentive> Incentive for DynamicallyEquivalent<I> {
    fn spec(&self) -> String {
        format!("dyn-equiv:{}", self.inner.spec())
    }
    fn is_continuous(&self) -> bool {
        self.inner.is_continuous()
    }
    fn zero_total(&self) -> bool {
        true
    }
    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let phi = self.inner.values(game, x)?;
        if self.inner.zero_total() {
            return Ok(phi);
        }
        Ok(tangent_part(&phi, x))
    }
    fn check_map_admissible(&self, game: &Game) -> Result<()> {
        if self.inner.zero_total() {
            self.inner.check_map_admissible(game)
        } else {
            Err(crate::Error::Config(format!(
                "{} takes negative values off the boundary; use it with the incentive dynamics",
                self.spec()
            )))
        }
    }
}

/// `φ_iα − x_iα Σ_β φ_iβ` per player.
pub(crate) fn tangent_part(phi: &StrategyField, x: &Profile) -> StrategyField {
    StrategyField(
        phi.0
            .iter()
            .zip(x.parts())
            .map(|(p, xi)| {
                let total: f64 = p.iter().sum();
                p.iter().zip(xi).map(|(v, xa)| v - xa * total).collect()
            })
            .collect(),
    )
}

#[inline]
pub(crate) fn positive_part(v: f64) -> f64 {
    v.max(0.0)
}
