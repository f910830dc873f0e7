//! Non-canonical incentives: zero, ε-Nash, simultaneous updating, altruism,
//! Pareto improvement, coalitions, margin of victory and rivalry.

use super::{positive_part, Incentive, StrategyField};
use crate::error::{Error, Result};
use crate::game::{Game, Profile};

/// Largest player count accepted by [`Coalition`].
pub const COALITION_MAX_PLAYERS: usize = 12;

#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl Incentive for Zero {
    fn spec(&self) -> String {
        "zero".into()
    }

    fn zero_total(&self) -> bool {
        true
    }

    fn values(&self, game: &Game, _x: &Profile) -> Result<StrategyField> {
        Ok(StrategyField::zeros(game.strategy_counts()))
    }
}

/// `φ_iα = (u_i(e_iα, x_{-i}) − u_i(x) − ε)_+`. Without an explicit ε the
/// tenth of the game's global payoff spread is used.
#[derive(Debug, Clone, Copy, Default)]
pub struct EpsilonNash {
    epsilon: Option<f64>,
}

impl EpsilonNash {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("eps-nash: eps must be positive, got {epsilon}")));
        }
        Ok(EpsilonNash {
            epsilon: Some(epsilon),
        })
    }

    pub fn with_default_epsilon() -> Self {
        EpsilonNash { epsilon: None }
    }

    pub fn epsilon_for(&self, game: &Game) -> f64 {
        self.epsilon.unwrap_or_else(|| 0.1 * game.global_spread())
    }
}

impl Incentive for EpsilonNash {
    fn spec(&self) -> String {
        match self.epsilon {
            Some(e) => format!("eps-nash:eps={e}"),
            None => "eps-nash".into(),
        }
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let eps = self.epsilon_for(game);
        let cp = game.conditional_payoffs(x);
        Ok(StrategyField::new(
            cp.own
                .iter()
                .zip(&cp.utilities)
                .map(|(p, &u)| p.iter().map(|&v| positive_part(v - u - eps)).collect())
                .collect(),
        ))
    }
}

/// `φ_iα = Σ_γ (a_iαγ − u_i(x))_+` over opponent pure profiles γ.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimultaneousUpdate;

impl Incentive for SimultaneousUpdate {
    fn spec(&self) -> String {
        "su".into()
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let u = game.conditional_payoffs(x).utilities;
        let mut out = StrategyField::zeros(game.strategy_counts());
        game.for_each_profile(|flat, pure| {
            for (i, &ui) in u.iter().enumerate() {
                out.player_mut(i)[pure[i]] += positive_part(game.payoffs(i)[flat] - ui);
            }
        });
        Ok(out)
    }
}

/// Which `(α, γ)` terms the strategic variant of simultaneous updating
/// keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BenefitRule {
    /// Keep `α` when some other player gains at `(e_iα, x_{-i})` over
    /// `u_j(x)`; independent of γ.
    #[default]
    MixedProfile,
    /// Keep `(α, γ)` when some other player gains at the pure profile
    /// `(α, γ)` over `u_j(x)`.
    PureProfile,
    Always,
    Never,
}

/// `φ_iα = Σ_γ δ_iαγ(x) (a_iαγ − u_i(x))_+` with δ from a [`BenefitRule`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StrategicUpdate {
    pub rule: BenefitRule,
}

impl StrategicUpdate {
    pub fn new(rule: BenefitRule) -> Self {
        StrategicUpdate { rule }
    }
}

impl Incentive for StrategicUpdate {
    fn spec(&self) -> String {
        match self.rule {
            BenefitRule::MixedProfile => "ssu".into(),
            BenefitRule::PureProfile => "ssu:gamma-dependent".into(),
            BenefitRule::Always => "ssu:always".into(),
            BenefitRule::Never => "ssu:never".into(),
        }
    }

    fn is_continuous(&self) -> bool {
        false
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let n = game.n_players();
        let u = game.conditional_payoffs(x).utilities;
        // helps[i][α]: some j ≠ i gains at (e_iα, x_{-i}).
        let helps: Vec<Vec<bool>> = match self.rule {
            BenefitRule::MixedProfile => (0..n)
                .map(|i| {
                    let mut h = vec![false; game.strategy_counts()[i]];
                    for j in (0..n).filter(|&j| j != i) {
                        for (slot, v) in h.iter_mut().zip(game.deviation_payoffs(j, i, x)) {
                            *slot |= v > u[j];
                        }
                    }
                    h
                })
                .collect(),
            _ => Vec::new(),
        };
        let mut out = StrategyField::zeros(game.strategy_counts());
        game.for_each_profile(|flat, pure| {
            for i in 0..n {
                let keep = match self.rule {
                    BenefitRule::MixedProfile => helps[i][pure[i]],
                    BenefitRule::PureProfile => {
                        (0..n).any(|j| j != i && game.payoffs(j)[flat] > u[j])
                    }
                    BenefitRule::Always => true,
                    BenefitRule::Never => false,
                };
                if keep {
                    out.player_mut(i)[pure[i]] += positive_part(game.payoffs(i)[flat] - u[i]);
                }
            }
        });
        Ok(out)
    }
}

fn require_opponents(game: &Game, name: &str) -> Result<()> {
    if game.n_players() < 2 {
        return Err(Error::Config(format!("{name} needs at least two players")));
    }
    Ok(())
}

/// `φ_iα = (min_{j≠i} (u_j(e_iα, x_{-i}) − u_j(x)))_+`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Altruism;

impl Incentive for Altruism {
    fn spec(&self) -> String {
        "altruism".into()
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        require_opponents(game, "altruism")?;
        let n = game.n_players();
        let u = game.conditional_payoffs(x).utilities;
        Ok(StrategyField::new(
            (0..n)
                .map(|i| {
                    let mut worst = vec![f64::INFINITY; game.strategy_counts()[i]];
                    for j in (0..n).filter(|&j| j != i) {
                        for (w, v) in worst.iter_mut().zip(game.deviation_payoffs(j, i, x)) {
                            *w = w.min(v - u[j]);
                        }
                    }
                    worst.into_iter().map(positive_part).collect()
                })
                .collect(),
        ))
    }
}

/// `φ_iα = Σ_{π: π_i = α} Π_j (a_jπ − u_j(x))_+`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Pareto;

impl Incentive for Pareto {
    fn spec(&self) -> String {
        "pareto".into()
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let n = game.n_players();
        let u = game.conditional_payoffs(x).utilities;
        let mut out = StrategyField::zeros(game.strategy_counts());
        game.for_each_profile(|flat, pure| {
            let gain: f64 = (0..n)
                .map(|j| positive_part(game.payoffs(j)[flat] - u[j]))
                .product();
            if gain > 0.0 {
                for (i, &p) in pure.iter().enumerate() {
                    out.player_mut(i)[p] += gain;
                }
            }
        });
        Ok(out)
    }
}

/// `φ_iα = Σ_{π: π_i = α} Σ_{Ω ∋ i} Π_{j∈Ω} (a_jπ − u_j(x))_+`, unweighted
/// over coalitions. The coalition sum factors as
/// `d_i Π_{j≠i} (1 + d_j)` with `d_j = (a_jπ − u_j(x))_+`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Coalition;

impl Incentive for Coalition {
    fn spec(&self) -> String {
        "coalition".into()
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let n = game.n_players();
        if n > COALITION_MAX_PLAYERS {
            return Err(Error::Config(format!(
                "coalition: {n} players exceeds the bound of {COALITION_MAX_PLAYERS}"
            )));
        }
        let u = game.conditional_payoffs(x).utilities;
        let mut out = StrategyField::zeros(game.strategy_counts());
        let mut gains = vec![0.0; n];
        game.for_each_profile(|flat, pure| {
            for (j, g) in gains.iter_mut().enumerate() {
                *g = positive_part(game.payoffs(j)[flat] - u[j]);
            }
            for (i, &p) in pure.iter().enumerate() {
                if gains[i] == 0.0 {
                    continue;
                }
                let others: f64 = gains
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, g)| 1.0 + g)
                    .product();
                out.player_mut(i)[p] += gains[i] * others;
            }
        });
        Ok(out)
    }
}

/// `φ_iα = (u_i(e_iα, x_{-i}) − max_{j≠i} u_j(e_iα, x_{-i}))_+`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MarginOfVictory;

impl Incentive for MarginOfVictory {
    fn spec(&self) -> String {
        "margin".into()
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        require_opponents(game, "margin")?;
        let n = game.n_players();
        Ok(StrategyField::new(
            (0..n)
                .map(|i| {
                    let own = game.deviation_payoffs(i, i, x);
                    let mut best_other = vec![f64::NEG_INFINITY; own.len()];
                    for j in (0..n).filter(|&j| j != i) {
                        for (b, v) in best_other.iter_mut().zip(game.deviation_payoffs(j, i, x)) {
                            *b = b.max(v);
                        }
                    }
                    own.iter()
                        .zip(best_other)
                        .map(|(o, b)| positive_part(o - b))
                        .collect()
                })
                .collect(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RivalVariant {
    /// `(u_σ(i)(x) − u_σ(i)(e_iα, x_{-i}))_+`.
    #[default]
    Hurt,
    /// `(u_i(e_iα, x_{-i}) − u_σ(i)(e_iα, x_{-i}))_+`.
    Margin,
}

/// Rivalry against `σ(i)` for a fixed-point-free permutation σ of the
/// players. Defaults to the cyclic shift `i ↦ i + 1 mod n`.
#[derive(Debug, Clone, Default)]
pub struct Rival {
    permutation: Option<Vec<usize>>,
    pub variant: RivalVariant,
}

impl Rival {
    pub fn new(permutation: Option<Vec<usize>>, variant: RivalVariant) -> Result<Self> {
        if let Some(p) = &permutation {
            validate_rival_permutation(p)?;
        }
        Ok(Rival {
            permutation,
            variant,
        })
    }

    pub fn permutation_for(&self, n: usize) -> Result<Vec<usize>> {
        let perm = match &self.permutation {
            Some(p) => p.clone(),
            None => (0..n).map(|i| (i + 1) % n).collect(),
        };
        if perm.len() != n {
            return Err(Error::Config(format!(
                "rival: permutation has {} entries for {n} players",
                perm.len()
            )));
        }
        validate_rival_permutation(&perm)?;
        Ok(perm)
    }
}

fn validate_rival_permutation(perm: &[usize]) -> Result<()> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for (i, &j) in perm.iter().enumerate() {
        if j >= n || seen[j] {
            return Err(Error::Config(format!("rival: {perm:?} is not a permutation")));
        }
        if j == i {
            return Err(Error::Config(format!("rival: player {i} would be its own rival")));
        }
        seen[j] = true;
    }
    Ok(())
}

impl Incentive for Rival {
    fn spec(&self) -> String {
        let mut s = String::from("rival");
        if let Some(p) = &self.permutation {
            let images: Vec<String> = p.iter().map(|j| (j + 1).to_string()).collect();
            s.push_str(&format!(":perm={}", images.join(",")));
        }
        if self.variant == RivalVariant::Margin {
            s.push_str(":variant=margin");
        }
        s
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        require_opponents(game, "rival")?;
        let n = game.n_players();
        let perm = self.permutation_for(n)?;
        let u = game.conditional_payoffs(x).utilities;
        Ok(StrategyField::new(
            (0..n)
                .map(|i| {
                    let r = perm[i];
                    let rival = game.deviation_payoffs(r, i, x);
                    match self.variant {
                        RivalVariant::Hurt => {
                            rival.iter().map(|v| positive_part(u[r] - v)).collect()
                        }
                        RivalVariant::Margin => game
                            .deviation_payoffs(i, i, x)
                            .iter()
                            .zip(&rival)
                            .map(|(o, v)| positive_part(o - v))
                            .collect(),
                    }
                })
                .collect(),
        ))
    }
}
