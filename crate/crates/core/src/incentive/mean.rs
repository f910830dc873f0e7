//! Mean dynamics expressed as an incentive.
//!
//! A switch-rate table gives, for one population, the conditional rate
//! `ρ_ij(π, x)` of moving from strategy `i` to strategy `j` given the
//! payoff vector `π` and the population state `x`. Every row must sum to
//! the same constant `R`. The incentive `φ_i = Σ_j x_j ρ_ji` then drives the
//! incentive dynamics to exactly the inflow-minus-outflow mean dynamic.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Incentive, StrategyField};
use crate::error::{Error, Result};
use crate::game::{Game, Profile};

/// Allowed deviation of a row sum from the declared rate, and of an entry
/// below zero.
pub const SWITCH_RATE_TOL: f64 = 1e-10;

type RateFn = dyn Fn(&[f64], &[f64]) -> Vec<Vec<f64>> + Send + Sync;

#[derive(Clone)]
pub enum SwitchRule {
    /// A fixed matrix.
    Constant(Vec<Vec<f64>>),
    /// `ρ_ij = (π_j − π_i)_+` off the diagonal; the diagonal absorbs the
    /// remainder of the rate `R`.
    Pairwise,
    Custom(Arc<RateFn>),
}

impl fmt::Debug for SwitchRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwitchRule::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            SwitchRule::Pairwise => write!(f, "Pairwise"),
            SwitchRule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SwitchRateTable {
    strategies: usize,
    rate: f64,
    rule: SwitchRule,
}

/// On-disk form of a switch-rate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
enum SwitchRateFile {
    Constant {
        strategies: usize,
        rate: f64,
        matrix: Vec<Vec<f64>>,
    },
    Pairwise {
        strategies: usize,
        rate: f64,
    },
}

impl SwitchRateTable {
    pub fn new(strategies: usize, rate: f64, rule: SwitchRule) -> Result<Self> {
        if strategies == 0 {
            return Err(Error::Config("switch-rate table needs at least one strategy".into()));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Config(format!("switch rate must be positive, got {rate}")));
        }
        let table = SwitchRateTable {
            strategies,
            rate,
            rule,
        };
        if let SwitchRule::Constant(m) = &table.rule {
            table.validate(m.clone())?;
        }
        Ok(table)
    }

    /// A constant table; the rate is taken from the first row.
    pub fn constant(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rate = matrix.first().map_or(0.0, |r| r.iter().sum());
        SwitchRateTable::new(matrix.len(), rate, SwitchRule::Constant(matrix))
    }

    pub fn pairwise(strategies: usize, rate: f64) -> Result<Self> {
        SwitchRateTable::new(strategies, rate, SwitchRule::Pairwise)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str::<SwitchRateFile>(text)? {
            SwitchRateFile::Constant {
                strategies,
                rate,
                matrix,
            } => SwitchRateTable::new(strategies, rate, SwitchRule::Constant(matrix)),
            SwitchRateFile::Pairwise { strategies, rate } => {
                SwitchRateTable::pairwise(strategies, rate)
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        SwitchRateTable::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn strategies(&self) -> usize {
        self.strategies
    }

    /// The common row sum `R`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn rule(&self) -> &SwitchRule {
        &self.rule
    }

    /// Evaluates `ρ(π, x)` and checks nonnegativity and row sums.
    pub fn matrix(&self, payoffs: &[f64], state: &[f64]) -> Result<Vec<Vec<f64>>> {
        let s = self.strategies;
        if payoffs.len() != s || state.len() != s {
            return Err(Error::Shape(format!(
                "switch-rate table for {s} strategies evaluated on {} payoffs",
                payoffs.len()
            )));
        }
        let m = match &self.rule {
            SwitchRule::Constant(m) => m.clone(),
            SwitchRule::Pairwise => (0..s)
                .map(|i| {
                    let mut row: Vec<f64> =
                        (0..s).map(|j| (payoffs[j] - payoffs[i]).max(0.0)).collect();
                    row[i] = 0.0;
                    let off: f64 = row.iter().sum();
                    row[i] = self.rate - off;
                    row
                })
                .collect(),
            SwitchRule::Custom(f) => f(payoffs, state),
        };
        self.validate(m)
    }

    fn validate(&self, m: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
        let s = self.strategies;
        if m.len() != s || m.iter().any(|r| r.len() != s) {
            return Err(Error::Config(format!("switch-rate matrix must be {s}x{s}")));
        }
        for (i, row) in m.iter().enumerate() {
            if let Some(j) = row.iter().position(|&v| !(v >= -SWITCH_RATE_TOL)) {
                return Err(Error::Config(format!(
                    "switch rate rho[{i}][{j}] = {} is negative",
                    row[j]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - self.rate).abs() > SWITCH_RATE_TOL {
                return Err(Error::Config(format!(
                    "switch-rate row {i} sums to {sum}, not the common rate {}",
                    self.rate
                )));
            }
        }
        Ok(m)
    }
}

/// `φ_i = Σ_j x_j ρ_ji(π(x), x)`, applied to each player's own population.
/// A one-player game is the single-population case.
#[derive(Debug, Clone)]
pub struct MeanDynamics {
    table: SwitchRateTable,
    source: Option<String>,
}

impl MeanDynamics {
    pub fn new(table: SwitchRateTable) -> Self {
        MeanDynamics {
            table,
            source: None,
        }
    }

    /// Remembers the file the table came from, for the spec string.
    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn table(&self) -> &SwitchRateTable {
        &self.table
    }
}

impl Incentive for MeanDynamics {
    fn spec(&self) -> String {
        match &self.source {
            Some(path) => format!("mean:rho={path}"),
            None => "mean".into(),
        }
    }

    fn is_continuous(&self) -> bool {
        !matches!(self.table.rule, SwitchRule::Custom(_))
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        if let Some(i) = game
            .strategy_counts()
            .iter()
            .position(|&s| s != self.table.strategies)
        {
            return Err(Error::Config(format!(
                "mean: player {i} has {} strategies, the switch-rate table has {}",
                game.strategy_counts()[i],
                self.table.strategies
            )));
        }
        let cp = game.conditional_payoffs(x);
        let parts = cp
            .own
            .iter()
            .zip(x.parts())
            .map(|(p, xi)| {
                let rho = self.table.matrix(p, xi)?;
                Ok((0..xi.len())
                    .map(|a| xi.iter().zip(&rho).map(|(xj, row)| xj * row[a]).sum())
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(StrategyField::new(parts))
    }
}
