//! Finite n-player games in normal form.
//!
//! Payoffs are stored as one dense tensor per player, flattened row-major
//! over pure profiles `(k_0, ..., k_{n-1})` with the last player varying
//! fastest. Mixed profiles live on the product of per-player simplices and
//! utilities are the unique multilinear extension of the pure payoffs.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum tolerance accepted (and then normalized away) by [`Profile::new`].
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;
/// Negative coordinates down to this value are clipped to zero.
pub const SIMPLEX_CLIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    strategy_counts: Vec<usize>,
    strides: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
    labels: Option<Vec<Vec<String>>>,
}

impl Game {
    pub fn new(strategy_counts: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if strategy_counts.is_empty() {
            return Err(Error::Shape("a game needs at least one player".into()));
        }
        if let Some(i) = strategy_counts.iter().position(|&s| s == 0) {
            return Err(Error::Shape(format!("player {i} has no strategies")));
        }
        if payoffs.len() != strategy_counts.len() {
            return Err(Error::Shape(format!(
                "{} payoff tensors for {} players",
                payoffs.len(),
                strategy_counts.len()
            )));
        }
        let total: usize = strategy_counts.iter().product();
        for (player, tensor) in payoffs.iter().enumerate() {
            if tensor.len() != total {
                return Err(Error::Shape(format!(
                    "player {player} has {} payoff entries, expected {total}",
                    tensor.len()
                )));
            }
            if let Some(index) = tensor.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { player, index });
            }
        }
        let mut strides = vec![1; strategy_counts.len()];
        for k in (0..strategy_counts.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * strategy_counts[k + 1];
        }
        Ok(Game {
            strategy_counts,
            strides,
            payoffs,
            labels: None,
        })
    }

    /// Builds a game by evaluating `payoff(player, pure_profile)` on every
    /// pure profile.
    pub fn from_fn(
        strategy_counts: Vec<usize>,
        mut payoff: impl FnMut(usize, &[usize]) -> f64,
    ) -> Result<Self> {
        let n = strategy_counts.len();
        let total: usize = strategy_counts.iter().product();
        let mut payoffs = vec![Vec::with_capacity(total); n];
        for_each_index(&strategy_counts, |_, pure| {
            for (i, tensor) in payoffs.iter_mut().enumerate() {
                tensor.push(payoff(i, pure));
            }
        });
        Game::new(strategy_counts, payoffs)
    }

    /// Two-player game from row-player and column-player matrices.
    pub fn bimatrix(row: &[Vec<f64>], col: &[Vec<f64>]) -> Result<Self> {
        let rows = row.len();
        let cols = row.first().map_or(0, Vec::len);
        if col.len() != rows || row.iter().chain(col).any(|r| r.len() != cols) {
            return Err(Error::Shape("bimatrix payoffs must share one rectangular shape".into()));
        }
        Game::new(
            vec![rows, cols],
            vec![row.concat(), col.concat()],
        )
    }

    /// Independent uniform payoffs on `[lo, hi)`.
    pub fn random_uniform<R: Rng + ?Sized>(
        strategy_counts: Vec<usize>,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Game::from_fn(strategy_counts, |_, _| rng.random_range(lo..hi))
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self> {
        if labels.len() != self.n_players()
            || labels
                .iter()
                .zip(&self.strategy_counts)
                .any(|(l, &s)| l.len() != s)
        {
            return Err(Error::Shape("strategy labels do not match strategy counts".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[Vec<String>]> {
        self.labels.as_deref()
    }

    pub fn n_players(&self) -> usize {
        self.strategy_counts.len()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    /// Number of pure profiles, `|S|`.
    pub fn num_profiles(&self) -> usize {
        self.payoffs[0].len()
    }

    /// Player `i`'s flattened payoff tensor.
    pub fn payoffs(&self, i: usize) -> &[f64] {
        &self.payoffs[i]
    }

    pub fn flat_index(&self, pure: &[usize]) -> Result<usize> {
        if pure.len() != self.n_players() {
            return Err(Error::Shape(format!(
                "pure profile has {} entries for {} players",
                pure.len(),
                self.n_players()
            )));
        }
        let mut flat = 0;
        for (k, (&p, &s)) in pure.iter().zip(&self.strategy_counts).enumerate() {
            if p >= s {
                return Err(Error::Index {
                    what: "strategy",
                    index: p,
                    bound: s,
                });
            }
            flat += p * self.strides[k];
        }
        Ok(flat)
    }

    pub fn pure_profile(&self, flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.strategy_counts)
            .map(|(&stride, &s)| (flat / stride) % s)
            .collect()
    }

    pub fn payoff(&self, i: usize, pure: &[usize]) -> Result<f64> {
        Ok(self.payoffs[i][self.flat_index(pure)?])
    }

    /// Visits every pure profile in flat-index order.
    pub fn for_each_profile(&self, f: impl FnMut(usize, &[usize])) {
        for_each_index(&self.strategy_counts, f);
    }

    pub fn check_player(&self, i: usize) -> Result<()> {
        if i >= self.n_players() {
            return Err(Error::Index {
                what: "player",
                index: i,
                bound: self.n_players(),
            });
        }
        Ok(())
    }

    pub fn check_profile(&self, x: &Profile) -> Result<()> {
        let dims: Vec<usize> = x.parts.iter().map(Vec::len).collect();
        if dims != self.strategy_counts {
            return Err(Error::Shape(format!(
                "profile dimensions {dims:?} do not match strategy counts {:?}",
                self.strategy_counts
            )));
        }
        Ok(())
    }

    /// `u_i(x)`, summed directly over all pure profiles.
    pub fn utility(&self, i: usize, x: &Profile) -> Result<f64> {
        self.check_player(i)?;
        self.check_profile(x)?;
        let tensor = &self.payoffs[i];
        let mut total = 0.0;
        self.for_each_profile(|flat, pure| {
            let weight: f64 = pure.iter().enumerate().map(|(k, &p)| x.parts[k][p]).product();
            total += tensor[flat] * weight;
        });
        Ok(total)
    }

    /// `u_i(e_{iα}, x_{-i})`.
    pub fn utility_replace(&self, i: usize, alpha: usize, x: &Profile) -> Result<f64> {
        self.check_player(i)?;
        self.check_profile(x)?;
        if alpha >= self.strategy_counts[i] {
            return Err(Error::Index {
                what: "strategy",
                index: alpha,
                bound: self.strategy_counts[i],
            });
        }
        Ok(self.deviation_payoffs(i, i, x)[alpha])
    }

    /// Smallest and largest entry of player `i`'s payoff tensor. These bound
    /// `u_i` on the whole of the mixed strategy space.
    pub fn payoff_range(&self, i: usize) -> (f64, f64) {
        self.payoffs[i]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Largest entry minus smallest entry across all players' tensors.
    pub fn global_spread(&self) -> f64 {
        let (lo, hi) = (0..self.n_players())
            .map(|i| self.payoff_range(i))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            });
        hi - lo
    }

    /// `u_payee(e_{deviator,α}, x_{-deviator})` for every strategy α of the
    /// deviating player. Assumes `x` matches the game's shape.
    pub fn deviation_payoffs(&self, payee: usize, deviator: usize, x: &Profile) -> Vec<f64> {
        let tensor = &self.payoffs[payee];
        let mut out = vec![0.0; self.strategy_counts[deviator]];
        self.for_each_profile(|flat, pure| {
            let weight: f64 = pure
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != deviator)
                .map(|(k, &p)| x.parts[k][p])
                .product();
            out[pure[deviator]] += tensor[flat] * weight;
        });
        out
    }

    /// Every player's own conditional payoff vector in one sweep, plus the
    /// utilities obtained from them.
    pub fn conditional_payoffs(&self, x: &Profile) -> ConditionalPayoffs {
        let n = self.n_players();
        let mut own: Vec<Vec<f64>> = self.strategy_counts.iter().map(|&s| vec![0.0; s]).collect();
        let mut prefix = vec![1.0; n + 1];
        self.for_each_profile(|flat, pure| {
            for k in 0..n {
                prefix[k + 1] = prefix[k] * x.parts[k][pure[k]];
            }
            let mut suffix = 1.0;
            for i in (0..n).rev() {
                own[i][pure[i]] += self.payoffs[i][flat] * prefix[i] * suffix;
                suffix *= x.parts[i][pure[i]];
            }
        });
        let utilities = own
            .iter()
            .zip(&x.parts)
            .map(|(c, xi)| dot(c, xi))
            .collect();
        ConditionalPayoffs { own, utilities }
    }

    pub fn opponent_codec(&self, i: usize) -> Result<OpponentIndexCodec> {
        OpponentIndexCodec::new(&self.strategy_counts, i)
    }
}

/// Cached `u_i(e_{iα}, x_{-i})` and `u_i(x)` for one profile.
#[derive(Debug, Clone)]
pub struct ConditionalPayoffs {
    pub own: Vec<Vec<f64>>,
    pub utilities: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn for_each_index(counts: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = counts.iter().product();
    let mut idx = vec![0usize; counts.len()];
    for flat in 0..total {
        f(flat, &idx);
        for k in (0..counts.len()).rev() {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Identification of opponent multi-indices `S_{-i}` with flat indices:
/// opponents in increasing player order, last opponent fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpponentIndexCodec {
    player: usize,
    opponent_counts: Vec<usize>,
}

impl OpponentIndexCodec {
    pub const ORDERING: &'static str = "row-major";

    pub fn new(strategy_counts: &[usize], player: usize) -> Result<Self> {
        if player >= strategy_counts.len() {
            return Err(Error::Index {
                what: "player",
                index: player,
                bound: strategy_counts.len(),
            });
        }
        let opponent_counts = strategy_counts
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != player)
            .map(|(_, &s)| s)
            .collect();
        Ok(OpponentIndexCodec {
            player,
            opponent_counts,
        })
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn opponent_counts(&self) -> &[usize] {
        &self.opponent_counts
    }

    /// `s_{-i}`.
    pub fn len(&self) -> usize {
        self.opponent_counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encode(&self, k: &[usize]) -> Result<usize> {
        if k.len() != self.opponent_counts.len() {
            return Err(Error::Shape(format!(
                "opponent multi-index has {} components, expected {}",
                k.len(),
                self.opponent_counts.len()
            )));
        }
        k.iter().zip(&self.opponent_counts).try_fold(0, |acc, (&kj, &sj)| {
            if kj >= sj {
                Err(Error::Index {
                    what: "opponent strategy",
                    index: kj,
                    bound: sj,
                })
            } else {
                Ok(acc * sj + kj)
            }
        })
    }

    pub fn decode(&self, flat: usize) -> Result<Vec<usize>> {
        let len = self.len();
        if flat >= len {
            return Err(Error::Index {
                what: "opponent flat index",
                index: flat,
                bound: len,
            });
        }
        let mut rest = flat;
        let mut k = vec![0; self.opponent_counts.len()];
        for (slot, &s) in k.iter_mut().zip(&self.opponent_counts).rev() {
            *slot = rest % s;
            rest /= s;
        }
        Ok(k)
    }
}

/// A mixed strategy profile: one probability vector per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Profile {
    parts: Vec<Vec<f64>>,
}

impl Profile {
    /// Validates each part against the simplex. Sums within
    /// [`SIMPLEX_SUM_TOL`] of one are renormalized, unless already within
    /// rounding error, and negatives above
    /// `-SIMPLEX_CLIP_TOL` are clipped to zero; anything else is rejected.
    pub fn new(parts: Vec<Vec<f64>>) -> Result<Self> {
        let mut parts = parts;
        for (i, part) in parts.iter_mut().enumerate() {
            if part.is_empty() {
                return Err(Error::Simplex(format!("player {i} has an empty strategy vector")));
            }
            for (a, v) in part.iter_mut().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Simplex(format!("x[{i}][{a}] is not finite")));
                }
                if *v < 0.0 {
                    if *v < -SIMPLEX_CLIP_TOL {
                        return Err(Error::Simplex(format!("x[{i}][{a}] = {v:e} is negative")));
                    }
                    *v = 0.0;
                }
            }
            let sum: f64 = part.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
                return Err(Error::Simplex(format!("player {i} coordinates sum to {sum}")));
            }
            if (sum - 1.0).abs() > part.len() as f64 * f64::EPSILON {
                part.iter_mut().for_each(|v| *v /= sum);
            }
        }
        Ok(Profile { parts })
    }

    /// No validation; for evaluation points that may sit slightly off the
    /// simplex (finite differences, raw revision-map output).
    pub(crate) fn from_parts_unchecked(parts: Vec<Vec<f64>>) -> Self {
        Profile { parts }
    }

    pub fn uniform(strategy_counts: &[usize]) -> Self {
        Profile {
            parts: strategy_counts
                .iter()
                .map(|&s| vec![1.0 / s as f64; s])
                .collect(),
        }
    }

    pub fn pure(strategy_counts: &[usize], pure: &[usize]) -> Result<Self> {
        if pure.len() != strategy_counts.len() {
            return Err(Error::Shape("pure profile length does not match player count".into()));
        }
        let parts = strategy_counts
            .iter()
            .zip(pure)
            .map(|(&s, &p)| {
                if p >= s {
                    return Err(Error::Index {
                        what: "strategy",
                        index: p,
                        bound: s,
                    });
                }
                let mut v = vec![0.0; s];
                v[p] = 1.0;
                Ok(v)
            })
            .collect::<Result<_>>()?;
        Ok(Profile { parts })
    }

    /// Independent flat Dirichlet draws, one per player.
    pub fn random_dirichlet<R: Rng + ?Sized>(strategy_counts: &[usize], rng: &mut R) -> Self {
        let parts = strategy_counts
            .iter()
            .map(|&s| {
                let draws: Vec<f64> = (0..s).map(|_| Exp1.sample(rng)).collect();
                let sum: f64 = draws.iter().sum();
                draws.into_iter().map(|v| v / sum).collect()
            })
            .collect();
        Profile { parts }
    }

    pub fn n_players(&self) -> usize {
        self.parts.len()
    }

    pub fn player(&self, i: usize) -> &[f64] {
        &self.parts[i]
    }

    pub fn parts(&self) -> &[Vec<f64>] {
        &self.parts
    }

    pub fn into_parts(self) -> Vec<Vec<f64>> {
        self.parts
    }

    pub fn strategy_counts(&self) -> Vec<usize> {
        self.parts.iter().map(Vec::len).collect()
    }

    /// `(e_{iα}, x_{-i})`.
    pub fn with_pure(&self, i: usize, alpha: usize) -> Profile {
        let mut parts = self.parts.clone();
        parts[i].iter_mut().for_each(|v| *v = 0.0);
        parts[i][alpha] = 1.0;
        Profile { parts }
    }

    /// Max-norm distance over concatenated coordinates.
    pub fn max_distance(&self, other: &Profile) -> f64 {
        self.parts
            .iter()
            .flatten()
            .zip(other.parts.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_coordinate(&self) -> f64 {
        self.parts.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// The pure profile this is a vertex of, if every coordinate is within
    /// `tol` of 0 or 1.
    pub fn as_pure(&self, tol: f64) -> Option<Vec<usize>> {
        self.parts
            .iter()
            .map(|part| {
                let mut hit = None;
                for (a, &v) in part.iter().enumerate() {
                    if (v - 1.0).abs() <= tol {
                        if hit.is_some() {
                            return None;
                        }
                        hit = Some(a);
                    } else if v.abs() > tol {
                        return None;
                    }
                }
                hit
            })
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Profile {
    type Error = Error;

    fn try_from(parts: Vec<Vec<f64>>) -> Result<Self> {
        Profile::new(parts)
    }
}

impl From<Profile> for Vec<Vec<f64>> {
    fn from(p: Profile) -> Self {
        p.parts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matching_pennies() -> Game {
        Game::bimatrix(
            &[vec![1.0, -1.0], vec![-1.0, 1.0]],
            &[vec![-1.0, 1.0], vec![1.0, -1.0]],
        )
        .unwrap()
    }

    fn prisoners_dilemma() -> Game {
        Game::bimatrix(
            &[vec![3.0, 0.0], vec![5.0, 1.0]],
            &[vec![3.0, 5.0], vec![0.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn codec_examples() {
        // 1-based (k_1, k_3) = (2, 1) for player 2 of a 2x2x2 game.
        let c = OpponentIndexCodec::new(&[2, 2, 2], 1).unwrap();
        assert_eq!(c.encode(&[1, 0]).unwrap(), 2);
        let c = OpponentIndexCodec::new(&[4, 3], 0).unwrap();
        for k in 0..3 {
            assert_eq!(c.encode(&[k]).unwrap(), k);
        }
        let c = OpponentIndexCodec::new(&[2, 3, 2], 0).unwrap();
        assert_eq!(c.encode(&[2, 1]).unwrap(), 5);
        assert!(matches!(c.encode(&[3, 0]), Err(Error::Index { .. })));
        assert!(matches!(c.decode(6), Err(Error::Index { .. })));
    }

    #[test]
    fn codec_round_trip_exhaustive() {
        for counts in [vec![2, 3, 4], vec![3, 1, 2, 2], vec![5]] {
            for i in 0..counts.len() {
                let c = OpponentIndexCodec::new(&counts, i).unwrap();
                let mut seen = vec![false; c.len()];
                for flat in 0..c.len() {
                    let k = c.decode(flat).unwrap();
                    assert_eq!(c.encode(&k).unwrap(), flat);
                    seen[flat] = true;
                }
                assert!(seen.into_iter().all(|s| s));
            }
        }
    }

    #[test]
    fn utility_examples() {
        let mp = matching_pennies();
        let uniform = Profile::uniform(&[2, 2]);
        assert_eq!(mp.utility(0, &uniform).unwrap(), 0.0);
        assert_eq!(mp.utility_replace(0, 0, &uniform).unwrap(), 0.0);

        let pd = prisoners_dilemma();
        let x = Profile::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        assert_eq!(pd.utility(0, &x).unwrap(), 4.0);
        assert_eq!(pd.utility_replace(0, 1, &x).unwrap(), 5.0);
        assert!(matches!(pd.utility_replace(0, 2, &x), Err(Error::Index { .. })));
        let wrong = Profile::uniform(&[3, 2]);
        assert!(matches!(pd.utility(0, &wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn vertices_read_tensor_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Game::random_uniform(vec![2, 3, 2], -1.0, 1.0, &mut rng).unwrap();
        g.for_each_profile(|flat, pure| {
            let x = Profile::pure(g.strategy_counts(), pure).unwrap();
            for i in 0..3 {
                assert_eq!(g.utility(i, &x).unwrap(), g.payoffs(i)[flat]);
            }
        });
    }

    #[test]
    fn payoff_range_examples() {
        assert_eq!(matching_pennies().payoff_range(0), (-1.0, 1.0));
        assert_eq!(prisoners_dilemma().payoff_range(0), (0.0, 5.0));
        let constant = Game::from_fn(vec![2, 3], |_, _| 7.0).unwrap();
        assert_eq!(constant.payoff_range(1), (7.0, 7.0));
    }

    #[test]
    fn conditional_payoffs_agree_with_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let g = Game::random_uniform(vec![3, 2, 4], -2.0, 2.0, &mut rng).unwrap();
            let x = Profile::random_dirichlet(g.strategy_counts(), &mut rng);
            let cp = g.conditional_payoffs(&x);
            for i in 0..3 {
                let direct = g.utility(i, &x).unwrap();
                assert!((cp.utilities[i] - direct).abs() <= 1e-12);
                let dev = g.deviation_payoffs(i, i, &x);
                for (a, b) in dev.iter().zip(&cp.own[i]) {
                    assert!((a - b).abs() <= 1e-12);
                }
                for alpha in 0..g.strategy_counts()[i] {
                    let replaced = g.utility(i, &x.with_pure(i, alpha)).unwrap();
                    assert!((replaced - dev[alpha]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn profile_validation() {
        let p = Profile::new(vec![vec![0.5, 0.5 + 5e-10]]).unwrap();
        assert_eq!(p.player(0).iter().sum::<f64>(), 1.0);
        let p = Profile::new(vec![vec![-1e-13, 1.0]]).unwrap();
        assert_eq!(p.player(0)[0], 0.0);
        assert!(Profile::new(vec![vec![-1e-6, 1.0 + 1e-6]]).is_err());
        assert!(Profile::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(Profile::new(vec![vec![f64::NAN, 1.0]]).is_err());
        assert!(Profile::new(vec![vec![]]).is_err());
    }

    #[test]
    fn game_rejects_bad_shapes() {
        assert!(matches!(
            Game::new(vec![2, 2], vec![vec![0.0; 4], vec![0.0; 3]]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Game::new(vec![2], vec![vec![0.0, f64::INFINITY]]),
            Err(Error::NonFinite { player: 0, index: 1 })
        ));
        assert!(Game::new(vec![2, 0], vec![vec![], vec![]]).is_err());
    }

    #[test]
    fn as_pure_detects_vertices() {
        let x = Profile::pure(&[2, 3], &[1, 2]).unwrap();
        assert_eq!(x.as_pure(1e-9), Some(vec![1, 2]));
        assert_eq!(Profile::uniform(&[2, 3]).as_pure(1e-9), None);
    }
}
