//! The discrete revision map `T`, the continuous incentive dynamics and
//! trajectory generation.
//!
//! `T(x)_i = (x_i + φ_i(x)) / (1 + Σ_β φ_iβ(x))` and
//! `ẋ_iα = φ_iα(x) − x_iα Σ_β φ_iβ(x)`. Fixed points of both are exactly the
//! profiles where `φ_i` is parallel to `x_i` for every player.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, Profile};
use crate::incentive::{tangent_part, Incentive, StrategyField};
use crate::symmetry::SymmetryMap;

/// `|1 + Σφ|` at or below this is treated as a zero denominator.
pub const DENOMINATOR_TOL: f64 = 1e-12;

/// Revision map applied to precomputed incentive values, without any
/// simplex checks on the result.
pub fn revision_step(phi: &StrategyField, x: &Profile, scale: f64) -> Result<Vec<Vec<f64>>> {
    x.parts()
        .iter()
        .zip(phi.iter())
        .enumerate()
        .map(|(i, (xi, p))| {
            let denom = 1.0 + scale * p.iter().sum::<f64>();
            if !(denom.abs() > DENOMINATOR_TOL) {
                return Err(Error::Evaluation(format!(
                    "player {i}: 1 + total incentive = {denom:e}; the incentive must keep its total away from -1"
                )));
            }
            Ok(xi.iter().zip(p).map(|(xa, pa)| (xa + scale * pa) / denom).collect())
        })
        .collect()
}

/// `T(x)` as raw coordinates. Skips the static admissibility check so the
/// caller can inspect how far off the simplex the result lands.
pub fn t_map_raw(game: &Game, incentive: &dyn Incentive, x: &Profile) -> Result<Vec<Vec<f64>>> {
    let phi = incentive.evaluate(game, x)?;
    revision_step(&phi, x, 1.0)
}

pub fn t_map(game: &Game, incentive: &dyn Incentive, x: &Profile) -> Result<Profile> {
    incentive.check_map_admissible(game)?;
    Profile::new(t_map_raw(game, incentive, x)?)
}

/// `‖T(x) − x‖_∞`.
pub fn map_residual(game: &Game, incentive: &dyn Incentive, x: &Profile) -> Result<f64> {
    let tx = t_map_raw(game, incentive, x)?;
    Ok(max_abs_diff(&tx, x.parts()))
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

/// `φ − xΣφ`; zero-total incentives are returned as they are.
pub fn dynamics_rhs(game: &Game, incentive: &dyn Incentive, x: &Profile) -> Result<StrategyField> {
    let phi = incentive.evaluate(game, x)?;
    if incentive.zero_total() {
        return Ok(phi);
    }
    Ok(tangent_part(&phi, x))
}

/// Max-norm distance between the difference quotient `(T(x, t) − x) / t`
/// of the time-scaled revision map and the incentive dynamics at `x`.
pub fn derivative_limit_check(
    game: &Game,
    incentive: &dyn Incentive,
    x: &Profile,
    t: f64,
) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {t}")));
    }
    let phi = incentive.evaluate(game, x)?;
    let scaled = revision_step(&phi, x, t)?;
    let rhs = tangent_part(&phi, x);
    Ok(scaled
        .iter()
        .zip(x.parts())
        .zip(rhs.iter())
        .flat_map(|((ti, xi), ri)| {
            ti.iter()
                .zip(xi)
                .zip(ri)
                .map(move |((tv, xv), rv)| ((tv - xv) / t - rv).abs())
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Iterates the revision map; "time" counts iterations.
    DiscreteMap,
    Euler,
    Rk4,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "map" | "discrete-map" => Ok(Method::DiscreteMap),
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            _ => Err(Error::Parse(format!("unknown method `{s}` (map, euler, rk4)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftPolicy {
    /// Clip negative coordinates to zero and rescale each player's sum.
    Renormalize,
    /// Stop with a simplex violation when a coordinate drops below
    /// `-drift_tolerance`.
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub max_steps: usize,
    /// Convergence threshold on `‖ẋ‖_∞` (or `‖T(x) − x‖_∞` for the map).
    pub tolerance: f64,
    pub drift_tolerance: f64,
    pub drift_policy: DriftPolicy,
    /// Store every k-th state; the first and last are always stored.
    pub record_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            dt: 0.01,
            max_steps: 100_000,
            tolerance: 1e-9,
            drift_tolerance: 1e-9,
            drift_policy: DriftPolicy::Renormalize,
            record_every: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tolerance > 0.0 && self.drift_tolerance > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TerminalStatus {
    MaxSteps,
    Converged { residual: f64 },
    SimplexViolation { detail: String },
    /// The incentive could not be evaluated or its total hit −1.
    EvaluationError { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub method: Method,
    pub dt: f64,
    pub incentive: String,
    pub steps: usize,
    pub status: TerminalStatus,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn last(&self) -> &Profile {
        &self.points.last().expect("trajectories hold their start").profile
    }

    /// Long-format CSV with header `t,player,strategy,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,player,strategy,value\n");
        for p in &self.points {
            for (i, xi) in p.profile.parts().iter().enumerate() {
                for (a, v) in xi.iter().enumerate() {
                    out.push_str(&format!("{},{},{},{}\n", p.t, i, a, v));
                }
            }
        }
        out
    }
}

struct Recorder {
    every: usize,
    points: Vec<TrajectoryPoint>,
    last_recorded: usize,
}

impl Recorder {
    fn new(every: usize, x0: &Profile) -> Self {
        Recorder {
            every,
            points: vec![TrajectoryPoint {
                t: 0.0,
                profile: x0.clone(),
            }],
            last_recorded: 0,
        }
    }

    fn record(&mut self, step: usize, t: f64, x: &Profile, force: bool) {
        if step != self.last_recorded && (force || step % self.every == 0) {
            self.points.push(TrajectoryPoint {
                t,
                profile: x.clone(),
            });
            self.last_recorded = step;
        }
    }
}

/// Iterates `x ← T(x)` until `‖T(x) − x‖_∞ ≤ cfg.tolerance` or the step
/// budget runs out.
pub fn iterate_map(
    game: &Game,
    incentive: &dyn Incentive,
    x0: &Profile,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    game.check_profile(x0)?;
    incentive.check_map_admissible(game)?;
    let mut rec = Recorder::new(cfg.record_every, x0);
    let mut x = x0.clone();
    let mut step = 0;
    let status = loop {
        let tx = match t_map_raw(game, incentive, &x) {
            Ok(v) => v,
            Err(e) => break TerminalStatus::EvaluationError { detail: e.to_string() },
        };
        let residual = max_abs_diff(&tx, x.parts());
        if residual <= cfg.tolerance {
            break TerminalStatus::Converged { residual };
        }
        if step == cfg.max_steps {
            break TerminalStatus::MaxSteps;
        }
        x = match Profile::new(tx) {
            Ok(p) => p,
            Err(e) => break TerminalStatus::SimplexViolation { detail: e.to_string() },
        };
        step += 1;
        rec.record(step, step as f64, &x, false);
    };
    rec.record(step, step as f64, &x, true);
    Ok(Trajectory {
        method: Method::DiscreteMap,
        dt: 1.0,
        incentive: incentive.spec(),
        steps: step,
        status,
        points: rec.points,
    })
}

fn axpy(x: &Profile, h: f64, k: &StrategyField) -> Profile {
    Profile::from_parts_unchecked(
        x.parts()
            .iter()
            .zip(k.iter())
            .map(|(xi, ki)| xi.iter().zip(ki).map(|(a, b)| a + h * b).collect())
            .collect(),
    )
}

fn rk4_increment(
    game: &Game,
    incentive: &dyn Incentive,
    x: &Profile,
    k1: StrategyField,
    dt: f64,
) -> Result<StrategyField> {
    let k2 = dynamics_rhs(game, incentive, &axpy(x, dt / 2.0, &k1))?;
    let k3 = dynamics_rhs(game, incentive, &axpy(x, dt / 2.0, &k2))?;
    let k4 = dynamics_rhs(game, incentive, &axpy(x, dt, &k3))?;
    Ok(StrategyField::new(
        (0..x.n_players())
            .map(|i| {
                (0..k1[i].len())
                    .map(|a| (k1[i][a] + 2.0 * k2[i][a] + 2.0 * k3[i][a] + k4[i][a]) / 6.0)
                    .collect()
            })
            .collect(),
    ))
}

/// Applies the drift policy to a freshly stepped state.
fn correct_drift(raw: Profile, cfg: &IntegratorConfig) -> std::result::Result<Profile, String> {
    let mut parts = raw.into_parts();
    for (i, xi) in parts.iter_mut().enumerate() {
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(format!("player {i} has non-finite coordinates"));
        }
        let sum: f64 = xi.iter().sum();
        if (sum - 1.0).abs() > cfg.drift_tolerance {
            return Err(format!("player {i} coordinates sum to {sum}"));
        }
        let min = xi.iter().copied().fold(f64::INFINITY, f64::min);
        if cfg.drift_policy == DriftPolicy::Reject && min < -cfg.drift_tolerance {
            return Err(format!("player {i} has coordinate {min:e}"));
        }
        xi.iter_mut().for_each(|v| *v = v.max(0.0));
        let sum: f64 = xi.iter().sum();
        if !(sum > 0.0) {
            return Err(format!("player {i} lost all mass"));
        }
        xi.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(Profile::from_parts_unchecked(parts))
}

/// Fixed-step integration of the incentive dynamics (or iteration of the
/// revision map for [`Method::DiscreteMap`]).
pub fn integrate(
    game: &Game,
    incentive: &dyn Incentive,
    x0: &Profile,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if cfg.method == Method::DiscreteMap {
        return iterate_map(game, incentive, x0, cfg);
    }
    cfg.validate()?;
    game.check_profile(x0)?;
    // Surface configuration problems before the loop.
    incentive.evaluate(game, x0)?;
    let mut rec = Recorder::new(cfg.record_every, x0);
    let mut x = x0.clone();
    let mut step = 0;
    let t_at = |k: usize| k as f64 * cfg.dt;
    let status = loop {
        let k1 = match dynamics_rhs(game, incentive, &x) {
            Ok(v) => v,
            Err(e) => break TerminalStatus::EvaluationError { detail: e.to_string() },
        };
        let residual = k1.max_abs();
        if residual <= cfg.tolerance {
            break TerminalStatus::Converged { residual };
        }
        if step == cfg.max_steps {
            break TerminalStatus::MaxSteps;
        }
        let increment = match cfg.method {
            Method::Euler => Ok(k1),
            _ => rk4_increment(game, incentive, &x, k1, cfg.dt),
        };
        let increment = match increment {
            Ok(v) => v,
            Err(e) => break TerminalStatus::EvaluationError { detail: e.to_string() },
        };
        x = match correct_drift(axpy(&x, cfg.dt, &increment), cfg) {
            Ok(p) => p,
            Err(detail) => break TerminalStatus::SimplexViolation { detail },
        };
        step += 1;
        rec.record(step, t_at(step), &x, false);
    };
    rec.record(step, t_at(step), &x, true);
    Ok(Trajectory {
        method: cfg.method,
        dt: cfg.dt,
        incentive: incentive.spec(),
        steps: step,
        status,
        points: rec.points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub samples: usize,
    pub max_defect: f64,
}

/// Samples profiles in the symmetric region `U` and measures how far
/// `T(x)` lands from `U`.
pub fn check_invariant_region(
    game: &Game,
    incentive: &dyn Incentive,
    symmetry: &SymmetryMap,
    samples: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    let symmetry = SymmetryMap::new(game.strategy_counts(), symmetry.sigma().to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_defect: f64 = 0.0;
    for _ in 0..samples {
        let base = Profile::random_dirichlet(&[symmetry.strategies()], &mut rng);
        let x = symmetry.embed(base.player(0));
        let tx = t_map_raw(game, incentive, &x)?;
        max_defect = max_defect.max(symmetry.defect(&tx));
    }
    Ok(InvarianceReport {
        samples,
        max_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incentive::{Logit, Nash, Replicator, Translation, Zero};

    fn pd() -> Game {
        Game::bimatrix(
            &[vec![3.0, 0.0], vec![5.0, 1.0]],
            &[vec![3.0, 5.0], vec![0.0, 1.0]],
        )
        .unwrap()
    }

    fn mp() -> Game {
        Game::bimatrix(
            &[vec![1.0, -1.0], vec![-1.0, 1.0]],
            &[vec![-1.0, 1.0], vec![1.0, -1.0]],
        )
        .unwrap()
    }

    fn rps() -> Game {
        let a = vec![
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 1.0, 0.0],
        ];
        let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
        Game::bimatrix(&a, &b).unwrap()
    }

    fn cc() -> Profile {
        Profile::pure(&[2, 2], &[0, 0]).unwrap()
    }

    #[test]
    fn t_map_examples() {
        let x = Profile::new(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        assert_eq!(t_map(&pd(), &Zero, &x).unwrap(), x);
        let u = Profile::uniform(&[2, 2]);
        assert_eq!(t_map(&mp(), &Nash, &u).unwrap(), u);
        let tx = t_map(&pd(), &Nash, &cc()).unwrap();
        assert!((tx.player(0)[0] - 1.0 / 3.0).abs() <= 1e-15);
        assert!((tx.player(0)[1] - 2.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn t_map_rejects_minus_one_total() {
        let g = Game::new(vec![2], vec![vec![-1.0, -1.0]]).unwrap();
        let r = Replicator::new(Translation::Constant(0.0));
        let x = Profile::uniform(&[2]);
        assert!(matches!(t_map_raw(&g, &r, &x), Err(Error::Evaluation(_))));
        assert!(matches!(t_map(&g, &r, &x), Err(Error::Config(_))));
    }

    #[test]
    fn rhs_examples() {
        let x = Profile::new(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        let rhs = dynamics_rhs(&pd(), &Replicator::default(), &x).unwrap();
        let phi = Replicator::default().evaluate(&pd(), &x).unwrap();
        assert_eq!(rhs, phi);
        for t in dynamics_rhs(&pd(), &Nash, &x).unwrap().totals() {
            assert!(t.abs() <= 1e-12);
        }
    }

    #[test]
    fn derivative_limit_examples() {
        let x = Profile::new(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        assert_eq!(derivative_limit_check(&pd(), &Zero, &x, 0.1).unwrap(), 0.0);
        let d = derivative_limit_check(&pd(), &Nash, &x, 1e-6).unwrap();
        assert!(d <= 1e-4, "{d}");
        let d = derivative_limit_check(&pd(), &Replicator::default(), &x, 0.3).unwrap();
        assert!(d <= 1e-14, "{d}");
        assert!(derivative_limit_check(&pd(), &Nash, &x, 0.0).is_err());
    }

    #[test]
    fn iterate_zero_converges_immediately() {
        let x = Profile::new(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        let tr = iterate_map(&pd(), &Zero, &x, &IntegratorConfig::default()).unwrap();
        assert_eq!(tr.steps, 0);
        assert_eq!(tr.points.len(), 1);
        assert!(matches!(tr.status, TerminalStatus::Converged { .. }));
    }

    #[test]
    fn iterate_nash_on_pd_reaches_defection() {
        let cfg = IntegratorConfig {
            max_steps: 10_000,
            tolerance: 1e-8,
            ..Default::default()
        };
        let tr = iterate_map(&pd(), &Nash, &cc(), &cfg).unwrap();
        assert!(matches!(tr.status, TerminalStatus::Converged { .. }), "{:?}", tr.status);
        let dd = Profile::pure(&[2, 2], &[1, 1]).unwrap();
        assert!(tr.last().max_distance(&dd) <= 1e-3);
        let u = Profile::uniform(&[2, 2]);
        let tr = iterate_map(&mp(), &Nash, &u, &cfg).unwrap();
        assert_eq!(tr.steps, 0);
    }

    #[test]
    fn iterate_refuses_unguarded_replicator() {
        let r = Replicator::default();
        let err = iterate_map(&pd(), &r, &cc(), &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn replicator_on_rps_stays_put() {
        let u = Profile::uniform(&[3, 3]);
        let tr = integrate(&rps(), &Replicator::default(), &u, &IntegratorConfig::default()).unwrap();
        assert_eq!(tr.steps, 0);
        assert_eq!(tr.last(), &u);
    }

    #[test]
    fn replicator_on_pd_defects() {
        let x0 = Profile::new(vec![vec![0.9, 0.1], vec![0.9, 0.1]]).unwrap();
        let cfg = |dt: f64| IntegratorConfig {
            dt,
            max_steps: (50.0 / dt).round() as usize,
            tolerance: 1e-300,
            ..Default::default()
        };
        let coarse = integrate(&pd(), &Replicator::default(), &x0, &cfg(0.01)).unwrap();
        let fine = integrate(&pd(), &Replicator::default(), &x0, &cfg(0.001)).unwrap();
        assert!(1.0 - coarse.last().player(0)[1] <= 1e-3);
        assert!(coarse.last().max_distance(fine.last()) <= 1e-6);
        let d: Vec<f64> = coarse.points.iter().map(|p| p.profile.player(0)[1]).collect();
        assert!(d.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    }

    #[test]
    fn logit_on_matching_pennies_converges_to_uniform() {
        let x0 = Profile::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let tr = integrate(&mp(), &Logit::new(1.0).unwrap(), &x0, &IntegratorConfig::default())
            .unwrap();
        assert!(matches!(tr.status, TerminalStatus::Converged { .. }), "{:?}", tr.status);
        assert!(tr.last().max_distance(&Profile::uniform(&[2, 2])) <= 1e-8);
    }

    #[test]
    fn reject_policy_stops_on_negative_coordinates() {
        let g = Game::bimatrix(&[vec![0.0], vec![10.0]], &[vec![0.0], vec![0.0]]).unwrap();
        let x0 = Profile::new(vec![vec![0.5, 0.5], vec![1.0]]).unwrap();
        let mut cfg = IntegratorConfig {
            method: Method::Euler,
            dt: 1.0,
            drift_policy: DriftPolicy::Reject,
            ..Default::default()
        };
        let tr = integrate(&g, &crate::incentive::BestReply, &x0, &cfg).unwrap();
        assert!(matches!(tr.status, TerminalStatus::Converged { .. }));
        let tr = integrate(&g, &crate::incentive::Projection, &x0, &cfg).unwrap();
        assert!(matches!(tr.status, TerminalStatus::SimplexViolation { .. }), "{:?}", tr.status);
        cfg.drift_policy = DriftPolicy::Renormalize;
        let tr = integrate(&g, &crate::incentive::Projection, &x0, &cfg).unwrap();
        assert!(matches!(tr.status, TerminalStatus::Converged { .. }), "{:?}", tr.status);
    }

    #[test]
    fn invariant_region_examples() {
        let a = vec![vec![2.0, 0.0], vec![3.0, 1.0]];
        let at: Vec<Vec<f64>> = (0..2).map(|r| (0..2).map(|c| a[c][r]).collect()).collect();
        let g = Game::bimatrix(&a, &at).unwrap();
        let id = SymmetryMap::identity(&[2, 2]).unwrap();
        let rep = check_invariant_region(&g, &Nash, &id, 256, 1).unwrap();
        assert!(rep.max_defect <= 1e-10);
        assert_eq!(check_invariant_region(&g, &Zero, &id, 64, 1).unwrap().max_defect, 0.0);
        let mut b = at.clone();
        b[0][1] += 0.5;
        let skew = Game::bimatrix(&a, &b).unwrap();
        assert!(check_invariant_region(&skew, &Nash, &id, 256, 1).unwrap().max_defect > 1e-3);
        let g3 = Game::bimatrix(&vec![vec![0.0; 3]; 2], &vec![vec![0.0; 3]; 2]).unwrap();
        assert!(SymmetryMap::identity(g3.strategy_counts()).is_err());
    }

    #[test]
    fn csv_layout() {
        let x = Profile::new(vec![vec![0.25, 0.75], vec![1.0, 0.0]]).unwrap();
        let tr = iterate_map(&pd(), &Zero, &x, &IntegratorConfig::default()).unwrap();
        assert_eq!(tr.to_csv(), "t,player,strategy,value\n0,0,0,0.25\n0,0,1,0.75\n0,1,0,1\n0,1,1,0\n");
    }
}
