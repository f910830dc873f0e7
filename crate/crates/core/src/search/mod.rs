//! Incentive equilibria: residuals, multistart search, pure-profile scans and
//! search restricted to a symmetric region.

mod engine;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::map_residual;
use crate::error::{Error, Result};
use crate::game::{Game, Profile};
use crate::incentive::{tangent_part, Incentive};
use crate::symmetry::SymmetryMap;

/// Largest number of pure profiles [`enumerate_pure`] will scan.
pub const MAX_PURE_PROFILES: usize = 1_000_000;
/// Vertices are used as starts only when there are at most this many.
pub const MAX_VERTEX_STARTS: usize = 256;
/// Coordinates above this make a profile interior.
pub const INTERIOR_TOL: f64 = 1e-6;
/// Distance to a vertex under which a profile counts as pure.
pub const PURE_TOL: f64 = 1e-9;
pub const HYPOTHESIS_SAMPLES: usize = 256;
pub const HYPOTHESIS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub profile: Profile,
    pub parallel_residual: f64,
    /// `‖T(x) − x‖_∞`, present when the revision map is admissible.
    pub map_residual: Option<f64>,
    pub is_interior: bool,
    pub is_pure: bool,
    pub nash_residual: f64,
    /// For pure profiles: every player receives the largest payoff in
    /// their tensor.
    pub win_win: Option<bool>,
    pub start: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl EquilibriumReport {
    /// Evaluates every field at `x`.
    pub fn at(
        game: &Game,
        incentive: &dyn Incentive,
        x: Profile,
        start: usize,
        iterations: usize,
        tolerance: f64,
    ) -> Result<Self> {
        let parallel_residual = equilibrium_residual(game, incentive, &x)?;
        let map_residual = match incentive.check_map_admissible(game) {
            Ok(()) => map_residual(game, incentive, &x).ok(),
            Err(_) => None,
        };
        let pure = x.as_pure(PURE_TOL);
        let win_win = pure.as_ref().map(|p| is_win_win(game, p));
        Ok(EquilibriumReport {
            is_interior: x.min_coordinate() > INTERIOR_TOL,
            is_pure: pure.is_some(),
            nash_residual: nash_residual(game, &x)?,
            map_residual,
            win_win,
            profile: x,
            parallel_residual,
            start,
            iterations,
            converged: parallel_residual <= tolerance,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Dirichlet(1) starts drawn after the vertices and the barycenter.
    pub random_starts: usize,
    /// Include every vertex (up to [`MAX_VERTEX_STARTS`]) as a start.
    pub vertex_starts: bool,
    pub seed: u64,
    /// Flow steps per start.
    pub max_iterations: usize,
    pub tolerance: f64,
    pub dedup_radius: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            random_starts: 32,
            vertex_starts: true,
            seed: 0,
            max_iterations: 20_000,
            tolerance: 1e-9,
            dedup_radius: 1e-6,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !(self.dedup_radius >= 0.0) {
            return Err(Error::Config("tolerance must be positive and dedup radius nonnegative".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("iteration budget must be positive".into()));
        }
        Ok(())
    }

    fn starts(&self, counts: &[usize]) -> Vec<Vec<Vec<f64>>> {
        let mut out = Vec::new();
        let vertices: usize = counts.iter().product();
        if self.vertex_starts && vertices <= MAX_VERTEX_STARTS {
            crate::game::for_each_index(counts, |_, pure| {
                out.push(
                    Profile::pure(counts, pure)
                        .expect("indices come from the counts")
                        .into_parts(),
                );
            });
        }
        out.push(Profile::uniform(counts).into_parts());
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        out.extend(
            (0..self.random_starts).map(|_| Profile::random_dirichlet(counts, &mut rng).into_parts()),
        );
        out
    }
}

/// `max_{i,α} |φ_iα(x) − x_iα Σ_β φ_iβ(x)|`. Zero exactly at incentive
/// equilibria, including on the boundary.
pub fn equilibrium_residual(game: &Game, incentive: &dyn Incentive, x: &Profile) -> Result<f64> {
    let phi = incentive.evaluate(game, x)?;
    Ok(tangent_part(&phi, x).max_abs())
}

/// `max_i (max_α u_i(e_iα, x_{−i}) − u_i(x))`, clamped at zero.
pub fn nash_residual(game: &Game, x: &Profile) -> Result<f64> {
    game.check_profile(x)?;
    let cp = game.conditional_payoffs(x);
    Ok(cp
        .own
        .iter()
        .zip(&cp.utilities)
        .map(|(p, u)| p.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - u)
        .fold(0.0, f64::max))
}

fn is_win_win(game: &Game, pure: &[usize]) -> bool {
    let flat = game.flat_index(pure).expect("pure profile matches the game");
    (0..game.n_players()).all(|i| game.payoffs(i)[flat] >= game.payoff_range(i).1)
}

/// Multistart search for incentive equilibria. Returns deduplicated reports,
/// converged ones first, each group sorted by residual and then by start.
pub fn find_equilibria(
    game: &Game,
    incentive: &dyn Incentive,
    cfg: &SearchConfig,
) -> Result<Vec<EquilibriumReport>> {
    cfg.validate()?;
    let counts = game.strategy_counts().to_vec();
    incentive.evaluate(game, &Profile::uniform(&counts))?;
    let embed = |b: &[Vec<f64>]| Profile::from_parts_unchecked(b.to_vec());
    let reduce = |v: &[Vec<f64>]| v.to_vec();
    let problem = engine::Problem {
        game,
        incentive,
        embed: &embed,
        reduce: &reduce,
        map_admissible: incentive.check_map_admissible(game).is_ok(),
    };
    let reports = cfg
        .starts(&counts)
        .into_par_iter()
        .enumerate()
        .map(|(k, start)| {
            let out = problem.solve(start, cfg.tolerance, cfg.max_iterations);
            EquilibriumReport::at(
                game,
                incentive,
                Profile::from_parts_unchecked(out.base),
                k,
                out.iterations,
                cfg.tolerance,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dedup(reports, cfg.dedup_radius))
}

fn rank(a: &EquilibriumReport, b: &EquilibriumReport) -> std::cmp::Ordering {
    b.converged
        .cmp(&a.converged)
        .then(a.parallel_residual.total_cmp(&b.parallel_residual))
        .then(a.start.cmp(&b.start))
}

fn dedup(mut reports: Vec<EquilibriumReport>, radius: f64) -> Vec<EquilibriumReport> {
    reports.sort_by(rank);
    let mut kept: Vec<EquilibriumReport> = Vec::new();
    for r in reports {
        if !kept.iter().any(|k| k.profile.max_distance(&r.profile) <= radius) {
            kept.push(r);
        }
    }
    kept
}

/// One report per pure profile, in row-major order; `start` holds the flat
/// index of the profile.
pub fn enumerate_pure(
    game: &Game,
    incentive: &dyn Incentive,
    tolerance: f64,
) -> Result<Vec<EquilibriumReport>> {
    if game.num_profiles() > MAX_PURE_PROFILES {
        return Err(Error::Config(format!(
            "{} pure profiles exceed the scan limit of {MAX_PURE_PROFILES}",
            game.num_profiles()
        )));
    }
    let counts = game.strategy_counts().to_vec();
    (0..game.num_profiles())
        .into_par_iter()
        .map(|flat| {
            let x = Profile::pure(&counts, &game.pure_profile(flat))?;
            EquilibriumReport::at(game, incentive, x, flat, 0, tolerance)
        })
        .collect()
}

/// Largest `|φ_{0σ_i(α)}(x) − φ_iα(x)|` over sampled profiles of the
/// symmetric region.
pub fn symmetry_hypothesis_defect(
    game: &Game,
    incentive: &dyn Incentive,
    symmetry: &SymmetryMap,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let symmetry = SymmetryMap::new(game.strategy_counts(), symmetry.sigma().to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let base = Profile::random_dirichlet(&[symmetry.strategies()], &mut rng);
        let phi = incentive.evaluate(game, &symmetry.embed(base.player(0)))?;
        worst = worst.max(symmetry.defect(phi.parts()));
    }
    Ok(worst)
}

/// Searches the symmetric region `U` only. Refuses with
/// [`Error::Hypothesis`] when the incentive is not symmetric on `U`.
pub fn find_symmetric_equilibrium(
    game: &Game,
    incentive: &dyn Incentive,
    symmetry: &SymmetryMap,
    cfg: &SearchConfig,
) -> Result<EquilibriumReport> {
    cfg.validate()?;
    let symmetry = SymmetryMap::new(game.strategy_counts(), symmetry.sigma().to_vec())?;
    let max_defect =
        symmetry_hypothesis_defect(game, incentive, &symmetry, HYPOTHESIS_SAMPLES, cfg.seed)?;
    if max_defect > HYPOTHESIS_TOL {
        return Err(Error::Hypothesis { max_defect });
    }
    let embed = |b: &[Vec<f64>]| symmetry.embed(&b[0]);
    let reduce = |v: &[Vec<f64>]| vec![symmetry.project(v)];
    let problem = engine::Problem {
        game,
        incentive,
        embed: &embed,
        reduce: &reduce,
        map_admissible: incentive.check_map_admissible(game).is_ok(),
    };
    let reports = cfg
        .starts(&[symmetry.strategies()])
        .into_par_iter()
        .enumerate()
        .map(|(k, start)| {
            let out = problem.solve(start, cfg.tolerance, cfg.max_iterations);
            EquilibriumReport::at(
                game,
                incentive,
                symmetry.embed(&out.base[0]),
                k,
                out.iterations,
                cfg.tolerance,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(reports
        .into_iter()
        .min_by(rank)
        .expect("the barycenter is always a start"))
}

/// Summary table with header `start,converged,residual,nash_residual,interior,pure,win_win`.
pub fn reports_to_csv(reports: &[EquilibriumReport]) -> String {
    let mut out = String::from("start,converged,residual,nash_residual,interior,pure,win_win\n");
    for r in reports {
        let ww = r.win_win.map_or(String::new(), |w| w.to_string());
        out.push_str(&format!(
            "{},{},{:e},{:e},{},{},{}\n",
            r.start, r.converged, r.parallel_residual, r.nash_residual, r.is_interior, r.is_pure, ww
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incentive::{Nash, Replicator, SimultaneousUpdate, Zero};

    fn pd() -> Game {
        Game::bimatrix(
            &[vec![3.0, 0.0], vec![5.0, 1.0]],
            &[vec![3.0, 5.0], vec![0.0, 1.0]],
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

    #[test]
    fn residual_examples() {
        let x = Profile::new(vec![vec![0.3, 0.7], vec![0.9, 0.1]]).unwrap();
        assert_eq!(equilibrium_residual(&pd(), &Zero, &x).unwrap(), 0.0);
        let cc = Profile::pure(&[2, 2], &[0, 0]).unwrap();
        assert_eq!(equilibrium_residual(&pd(), &Nash, &cc).unwrap(), 2.0);
        assert_eq!(nash_residual(&pd(), &cc).unwrap(), 2.0);
        let dd = Profile::pure(&[2, 2], &[1, 1]).unwrap();
        assert_eq!(nash_residual(&pd(), &dd).unwrap(), 0.0);
    }

    #[test]
    fn pd_nash_has_one_equilibrium() {
        let reps = find_equilibria(&pd(), &Nash, &SearchConfig::default()).unwrap();
        let conv: Vec<_> = reps.iter().filter(|r| r.converged).collect();
        assert_eq!(conv.len(), 1, "{reps:#?}");
        assert_eq!(conv[0].profile.as_pure(1e-9), Some(vec![1, 1]));
        assert!(conv[0].is_pure && !conv[0].is_interior);
    }

    #[test]
    fn rps_replicator_finds_uniform_and_vertices() {
        let reps = find_equilibria(&rps(), &Replicator::default(), &SearchConfig::default()).unwrap();
        let u = Profile::uniform(&[3, 3]);
        assert!(reps
            .iter()
            .any(|r| r.converged && r.is_interior && r.profile.max_distance(&u) <= 1e-6));
        let pure = enumerate_pure(&rps(), &Replicator::default(), 1e-9).unwrap();
        assert_eq!(pure.len(), 9);
        assert!(pure.iter().all(|r| r.converged && r.parallel_residual == 0.0));
    }

    #[test]
    fn zero_incentive_keeps_every_start() {
        let cfg = SearchConfig {
            random_starts: 5,
            ..Default::default()
        };
        let reps = find_equilibria(&pd(), &Zero, &cfg).unwrap();
        assert_eq!(reps.len(), 4 + 1 + 5);
        assert!(reps.iter().all(|r| r.converged && r.iterations == 0));
    }

    #[test]
    fn su_pure_scan() {
        let reps = enumerate_pure(&pd(), &SimultaneousUpdate, 1e-10).unwrap();
        assert!(reps.iter().all(|r| r.win_win == Some(false)));
        let coord = Game::bimatrix(
            &[vec![1.0, 0.0], vec![0.0, 2.0]],
            &[vec![1.0, 0.0], vec![0.0, 2.0]],
        )
        .unwrap();
        let reps = enumerate_pure(&coord, &SimultaneousUpdate, 1e-10).unwrap();
        let eq: Vec<_> = reps.iter().filter(|r| r.converged).map(|r| r.start).collect();
        assert_eq!(eq, vec![3]);
        assert_eq!(reps[3].win_win, Some(true));
    }

    #[test]
    fn symmetric_search() {
        let id = SymmetryMap::identity(&[3, 3]).unwrap();
        let r = find_symmetric_equilibrium(&rps(), &Replicator::default(), &id, &SearchConfig::default())
            .unwrap();
        assert!(r.converged && r.parallel_residual <= 1e-10);
        let a = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
        let coord = Game::bimatrix(&a, &a).unwrap();
        let id2 = SymmetryMap::identity(&[2, 2]).unwrap();
        let r = find_symmetric_equilibrium(&coord, &Nash, &id2, &SearchConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.profile.player(0), r.profile.player(1));
        let skew = Game::bimatrix(&a, &[vec![2.0, 0.5], vec![0.0, 1.0]]).unwrap();
        match find_symmetric_equilibrium(&skew, &Nash, &id2, &SearchConfig::default()) {
            Err(Error::Hypothesis { max_defect }) => assert!(max_defect > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn boundary_equilibrium_is_reported_once() {
        // Column strategy 0 is unused at the only equilibrium; the Nash
        // residual vanishes quadratically next to that face.
        let g = Game::new(
            vec![2, 3],
            vec![
                vec![0.70773, 0.07863, 0.56110, 0.56560, 0.15868, 0.03978],
                vec![-0.56370, 0.46962, 0.16060, 0.88928, -0.03646, 0.65360],
            ],
        )
        .unwrap();
        let found: Vec<_> = find_equilibria(&g, &Nash, &SearchConfig::default())
            .unwrap()
            .into_iter()
            .filter(|r| r.converged)
            .collect();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].profile.player(1)[0], 0.0);
        assert!(found[0].nash_residual <= 1e-9);
    }

    #[test]
    fn csv_summary() {
        let reps = enumerate_pure(&pd(), &Nash, 1e-9).unwrap();
        let csv = reports_to_csv(&reps);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("start,converged,residual,nash_residual,interior,pure,win_win"));
        assert_eq!(lines.next(), Some("0,false,2e0,2e0,false,true,false"));
    }

    #[test]
    fn rejects_huge_scans() {
        let g = Game::new(vec![1000, 1001], vec![vec![0.0; 1_001_000]; 2]).unwrap();
        assert!(matches!(enumerate_pure(&g, &Zero, 1e-9), Err(Error::Config(_))));
    }
}
