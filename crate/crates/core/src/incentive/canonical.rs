//! Incentives behind the canonical game dynamics: Nash (BNN), replicator,
//! projection, best reply, logit and Smith.

use std::fmt;
use std::sync::Arc;

use super::{positive_part, Incentive, StrategyField};
use crate::error::{Error, Result};
use crate::game::{Game, Profile};

/// `φ_iα = (u_i(e_iα, x_{-i}) − u_i(x))_+`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Nash;

impl Incentive for Nash {
    fn spec(&self) -> String {
        "nash".into()
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let cp = game.conditional_payoffs(x);
        Ok(StrategyField::new(
            cp.own
                .iter()
                .zip(&cp.utilities)
                .map(|(p, &u)| p.iter().map(|&v| positive_part(v - u)).collect())
                .collect(),
        ))
    }
}

type TranslationFn = dyn Fn(&Game, &Profile, usize) -> f64 + Send + Sync;

/// The per-player payoff translation `g_i` of the replicator incentive.
#[derive(Clone, Default)]
pub enum Translation {
    /// `g_i(x) = −u_i(x)`; the incentive then has zero total.
    #[default]
    NegUtility,
    Constant(f64),
    /// `g_i = −min(A_i)`, moving every player's smallest payoff to zero.
    ShiftMin,
    /// Arbitrary `g_i(x)` with a declared range, used for the revision-map
    /// guard.
    Custom {
        label: String,
        range: (f64, f64),
        f: Arc<TranslationFn>,
    },
}

impl fmt::Debug for Translation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Translation::NegUtility => write!(f, "NegUtility"),
            Translation::Constant(c) => write!(f, "Constant({c})"),
            Translation::ShiftMin => write!(f, "ShiftMin"),
            Translation::Custom { label, range, .. } => {
                write!(f, "Custom({label}, {range:?})")
            }
        }
    }
}

impl Translation {
    fn value(&self, game: &Game, x: &Profile, i: usize, utility: f64) -> f64 {
        match self {
            Translation::NegUtility => -utility,
            Translation::Constant(c) => *c,
            Translation::ShiftMin => -game.payoff_range(i).0,
            Translation::Custom { f, .. } => f(game, x, i),
        }
    }

    /// Range of the translated payoffs `u_i(e_iα, x_{-i}) + g_i(x)` over
    /// the whole strategy space, bounded through the payoff range.
    fn translated_range(&self, game: &Game, i: usize) -> (f64, f64) {
        let (lo, hi) = game.payoff_range(i);
        match self {
            Translation::NegUtility => (lo - hi, hi - lo),
            Translation::Constant(c) => (lo + c, hi + c),
            Translation::ShiftMin => (0.0, hi - lo),
            Translation::Custom { range, .. } => (lo + range.0, hi + range.1),
        }
    }
}

/// `φ_iα = x_iα (u_i(e_iα, x_{-i}) + g_i(x))`.
#[derive(Debug, Clone, Default)]
pub struct Replicator {
    pub translation: Translation,
}

impl Replicator {
    pub fn new(translation: Translation) -> Self {
        Replicator { translation }
    }
}

impl Incentive for Replicator {
    fn spec(&self) -> String {
        match &self.translation {
            Translation::NegUtility => "replicator".into(),
            Translation::Constant(c) => format!("replicator:g=const:{c}"),
            Translation::ShiftMin => "replicator:g=shift".into(),
            Translation::Custom { label, .. } => format!("replicator:g={label}"),
        }
    }

    fn zero_total(&self) -> bool {
        matches!(self.translation, Translation::NegUtility)
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let cp = game.conditional_payoffs(x);
        Ok(StrategyField::new(
            (0..game.n_players())
                .map(|i| {
                    let g = self.translation.value(game, x, i, cp.utilities[i]);
                    x.player(i)
                        .iter()
                        .zip(&cp.own[i])
                        .map(|(&xa, &p)| xa * (p + g))
                        .collect()
                })
                .collect(),
        ))
    }

    /// The revision map stays on the simplex when every translated payoff
    /// stays on one side of −1: either all above it or all below it.
    fn check_map_admissible(&self, game: &Game) -> Result<()> {
        for i in 0..game.n_players() {
            let (lo, hi) = self.translation.translated_range(game, i);
            if !(lo > -1.0 || hi < -1.0) {
                return Err(Error::Config(format!(
                    "{}: translated payoffs of player {i} span [{lo}, {hi}], which reaches -1",
                    self.spec()
                )));
            }
        }
        Ok(())
    }
}

/// Projection of the conditional payoffs onto the tangent cone of the
/// simplex at `x`, applied per player.
#[derive(Debug, Clone, Copy, Default)]
pub struct Projection;

impl Projection {
    /// Projects `payoffs` onto the tangent cone at `x`: the selected set
    /// starts as the support of `x` and absorbs outside strategies in order
    /// of decreasing payoff while each one beats the running average.
    pub fn project(payoffs: &[f64], x: &[f64]) -> Vec<f64> {
        let mut selected: Vec<bool> = x.iter().map(|&v| v > 0.0).collect();
        let mut count = selected.iter().filter(|&&s| s).count();
        let mut sum: f64 = payoffs
            .iter()
            .zip(&selected)
            .filter(|(_, &s)| s)
            .map(|(p, _)| p)
            .sum();
        let mut outside: Vec<usize> = (0..x.len()).filter(|&a| !selected[a]).collect();
        outside.sort_by(|&a, &b| payoffs[b].total_cmp(&payoffs[a]).then(a.cmp(&b)));
        for a in outside {
            if count > 0 && payoffs[a] <= sum / count as f64 {
                break;
            }
            selected[a] = true;
            count += 1;
            sum += payoffs[a];
        }
        let mean = sum / count as f64;
        payoffs
            .iter()
            .zip(&selected)
            .map(|(&p, &s)| if s { p - mean } else { 0.0 })
            .collect()
    }
}

impl Incentive for Projection {
    fn spec(&self) -> String {
        "projection".into()
    }

    fn is_continuous(&self) -> bool {
        false
    }

    fn zero_total(&self) -> bool {
        true
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let cp = game.conditional_payoffs(x);
        Ok(StrategyField::new(
            cp.own
                .iter()
                .zip(x.parts())
                .map(|(p, xi)| Projection::project(p, xi))
                .collect(),
        ))
    }

    /// `x_iα + F_iα` is not bounded below by zero, so the revision map can
    /// leave the simplex whenever conditional payoffs differ.
    fn check_map_admissible(&self, game: &Game) -> Result<()> {
        for i in 0..game.n_players() {
            let (lo, hi) = game.payoff_range(i);
            if hi > lo {
                return Err(Error::Config(
                    "projection: the revision map can leave the simplex; use the incentive dynamics"
                        .into(),
                ));
            }
        }
        Ok(())
    }
}

/// Relative tolerance under which conditional payoffs count as tied.
pub(crate) const TIE_TOL: f64 = 1e-12;

/// Index of the best conditional payoff, lowest index among ties.
pub(crate) fn best_reply_index(payoffs: &[f64]) -> usize {
    let max = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = max - TIE_TOL * (1.0 + max.abs());
    payoffs.iter().position(|&p| p >= cutoff).unwrap_or(0)
}

/// Indicator of one pure best reply per player; ties go to the lowest
/// strategy index.
#[derive(Debug, Clone, Copy, Default)]
pub struct BestReply;

impl Incentive for BestReply {
    fn spec(&self) -> String {
        "best-reply".into()
    }

    fn is_continuous(&self) -> bool {
        false
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let cp = game.conditional_payoffs(x);
        Ok(StrategyField::new(
            cp.own
                .iter()
                .map(|p| {
                    let mut v = vec![0.0; p.len()];
                    v[best_reply_index(p)] = 1.0;
                    v
                })
                .collect(),
        ))
    }
}

/// Softmax of conditional payoffs at noise level `eta`.
#[derive(Debug, Clone, Copy)]
pub struct Logit {
    eta: f64,
}

impl Logit {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("logit: eta must be positive, got {eta}")));
        }
        Ok(Logit { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl Incentive for Logit {
    fn spec(&self) -> String {
        format!("logit:eta={}", self.eta)
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let cp = game.conditional_payoffs(x);
        Ok(StrategyField::new(
            cp.own
                .iter()
                .map(|p| {
                    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = p.iter().map(|&v| ((v - max) / self.eta).exp()).collect();
                    let total: f64 = w.iter().sum();
                    w.into_iter().map(|v| v / total).collect()
                })
                .collect(),
        ))
    }
}

/// `φ_iα = Σ_γ x_iγ (u_i(e_iα, x_{-i}) − u_i(e_iγ, x_{-i}))_+`: mass on each
/// strategy γ weighted by the payoff gained by switching from γ to α.
#[derive(Debug, Clone, Copy, Default)]
pub struct Smith;

impl Incentive for Smith {
    fn spec(&self) -> String {
        "smith".into()
    }

    fn values(&self, game: &Game, x: &Profile) -> Result<StrategyField> {
        let cp = game.conditional_payoffs(x);
        Ok(StrategyField::new(
            cp.own
                .iter()
                .zip(x.parts())
                .map(|(p, xi)| {
                    p.iter()
                        .map(|&pa| {
                            xi.iter()
                                .zip(p)
                                .map(|(&xg, &pg)| xg * positive_part(pa - pg))
                                .sum()
                        })
                        .collect()
                })
                .collect(),
        ))
    }
}
