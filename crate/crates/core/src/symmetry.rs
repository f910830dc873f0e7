//! Symmetric regions `U = {x : x_{1σ_i(α)} = x_{iα}}` of the profile space.

use crate::error::{Error, Result};
use crate::game::Profile;

/// Per-player strategy permutations tying every player to player 0.
/// `sigma[0]` must be the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryMap {
    strategies: usize,
    sigma: Vec<Vec<usize>>,
}

impl SymmetryMap {
    pub fn new(strategy_counts: &[usize], sigma: Vec<Vec<usize>>) -> Result<Self> {
        let s = strategy_counts[0];
        if strategy_counts.iter().any(|&c| c != s) {
            return Err(Error::Config(format!(
                "symmetric region needs equal strategy counts, got {strategy_counts:?}"
            )));
        }
        if sigma.len() != strategy_counts.len() {
            return Err(Error::Config(format!(
                "{} permutations for {} players",
                sigma.len(),
                strategy_counts.len()
            )));
        }
        for (i, perm) in sigma.iter().enumerate() {
            let mut seen = vec![false; s];
            if perm.len() != s || perm.iter().any(|&b| b >= s || std::mem::replace(&mut seen[b], true)) {
                return Err(Error::Config(format!("sigma[{i}] = {perm:?} is not a permutation")));
            }
        }
        if sigma[0].iter().enumerate().any(|(a, &b)| a != b) {
            return Err(Error::Config("sigma[0] must be the identity".into()));
        }
        Ok(SymmetryMap { strategies: s, sigma })
    }

    /// Every player mapped by the identity.
    pub fn identity(strategy_counts: &[usize]) -> Result<Self> {
        let s = strategy_counts[0];
        SymmetryMap::new(strategy_counts, vec![(0..s).collect(); strategy_counts.len()])
    }

    pub fn strategies(&self) -> usize {
        self.strategies
    }

    pub fn sigma(&self) -> &[Vec<usize>] {
        &self.sigma
    }

    /// The point of `U` whose player-0 component is `base`.
    pub fn embed(&self, base: &[f64]) -> Profile {
        Profile::from_parts_unchecked(
            self.sigma
                .iter()
                .map(|perm| perm.iter().map(|&b| base[b]).collect())
                .collect(),
        )
    }

    /// Orthogonal projection onto `U`, returned as the player-0 component:
    /// the average of `x_{iα}` over all `(i, α)` with `σ_i(α) = β`.
    pub fn project(&self, parts: &[Vec<f64>]) -> Vec<f64> {
        let mut base = vec![0.0; self.strategies];
        for (perm, xi) in self.sigma.iter().zip(parts) {
            for (a, &b) in perm.iter().enumerate() {
                base[b] += xi[a];
            }
        }
        let n = self.sigma.len() as f64;
        base.iter_mut().for_each(|v| *v /= n);
        base
    }

    /// `max_{i,α} |v_{0,σ_i(α)} − v_{iα}|`.
    pub fn defect(&self, parts: &[Vec<f64>]) -> f64 {
        self.sigma
            .iter()
            .zip(parts)
            .flat_map(|(perm, vi)| {
                perm.iter()
                    .zip(vi)
                    .map(|(&b, &v)| (parts[0][b] - v).abs())
            })
            .fold(0.0, f64::max)
    }
}
