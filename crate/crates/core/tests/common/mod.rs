//! Reference implementations used only by the tests. Nothing here calls the
//! library's payoff or incentive code; every quantity is recomputed from the
//! payoff tensor by brute force.

#![allow(dead_code)]

use incentive_games::{Game, Profile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every pure profile, last player fastest.
pub fn pure_profiles(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &s in counts {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..s).map(move |a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

fn weight(x: &Profile, pure: &[usize], skip: Option<usize>) -> f64 {
    pure.iter()
        .enumerate()
        .filter(|&(k, _)| Some(k) != skip)
        .map(|(k, &p)| x.player(k)[p])
        .product()
}

/// `u_j(x)` by summing over every pure profile.
pub fn utility(g: &Game, j: usize, x: &Profile) -> f64 {
    pure_profiles(g.strategy_counts())
        .iter()
        .map(|p| g.payoff(j, p).unwrap() * weight(x, p, None))
        .sum()
}

/// `u_j(e_iα, x_{-i})`.
pub fn deviation(g: &Game, j: usize, i: usize, a: usize, x: &Profile) -> f64 {
    pure_profiles(g.strategy_counts())
        .iter()
        .filter(|p| p[i] == a)
        .map(|p| g.payoff(j, p).unwrap() * weight(x, p, Some(i)))
        .sum()
}

pub fn field<F: FnMut(usize, usize) -> f64>(counts: &[usize], mut f: F) -> Vec<Vec<f64>> {
    counts
        .iter()
        .enumerate()
        .map(|(i, &s)| (0..s).map(|a| f(i, a)).collect())
        .collect()
}

/// Brown–von Neumann–Nash: `ẋ_iα = k_iα − x_iα Σ_β k_iβ` with
/// `k_iα = (u_i(e_iα) − u_i(x))_+`.
pub fn bnn_rhs(g: &Game, x: &Profile) -> Vec<Vec<f64>> {
    let counts = g.strategy_counts().to_vec();
    let k = field(&counts, |i, a| (deviation(g, i, i, a, x) - utility(g, i, x)).max(0.0));
    field(&counts, |i, a| k[i][a] - x.player(i)[a] * k[i].iter().sum::<f64>())
}

/// `ẋ_iα = x_iα (u_i(e_iα) − u_i(x))`.
pub fn replicator_rhs(g: &Game, x: &Profile) -> Vec<Vec<f64>> {
    let counts = g.strategy_counts().to_vec();
    field(&counts, |i, a| x.player(i)[a] * (deviation(g, i, i, a, x) - utility(g, i, x)))
}

/// `max_i (max_α u_i(e_iα) − u_i(x))`.
pub fn nash_gap(g: &Game, x: &Profile) -> f64 {
    (0..g.n_players())
        .map(|i| {
            let u = utility(g, i, x);
            (0..g.strategy_counts()[i])
                .map(|a| deviation(g, i, i, a, x) - u)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Inflow minus outflow for one population:
/// `Σ_j x_j ρ_ji − x_i Σ_j ρ_ij`.
pub fn mean_rhs(rho: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let s = x.len();
    (0..s)
        .map(|i| {
            let inflow: f64 = (0..s).map(|j| x[j] * rho[j][i]).sum();
            let outflow: f64 = x[i] * rho[i].iter().sum::<f64>();
            inflow - outflow
        })
        .collect()
}

/// Random nonnegative `s × s` matrix whose rows all sum to `rate`.
pub fn random_rate_table(r: &mut impl Rng, s: usize, rate: f64) -> Vec<Vec<f64>> {
    (0..s)
        .map(|_| {
            let row: Vec<f64> = (0..s).map(|_| r.random::<f64>() + 1e-3).collect();
            let sum: f64 = row.iter().sum();
            row.iter().map(|v| v * rate / sum).collect()
        })
        .collect()
}

/// `F_iα = Σ_β (x_iβ K_iβα − x_iα K_iαβ)` for nonnegative `K_i`: tangent
/// to the simplex and nonnegative wherever `x_iα = 0`.
pub fn simplex_field(k: &[Vec<Vec<f64>>], x: &Profile) -> Vec<Vec<f64>> {
    k.iter()
        .enumerate()
        .map(|(i, ki)| {
            let xi = x.player(i);
            (0..xi.len())
                .map(|a| (0..xi.len()).map(|b| xi[b] * ki[b][a] - xi[a] * ki[a][b]).sum())
                .collect()
        })
        .collect()
}

/// Dirichlet(1) sample without the library's sampler.
pub fn dirichlet(r: &mut impl Rng, counts: &[usize]) -> Profile {
    Profile::new(
        counts
            .iter()
            .map(|&s| {
                let e: Vec<f64> = (0..s).map(|_| -(1.0 - r.random::<f64>()).ln()).collect();
                let t: f64 = e.iter().sum();
                e.iter().map(|v| v / t).collect()
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_game(r: &mut impl Rng, counts: &[usize], lo: f64, hi: f64) -> Game {
    let n: usize = counts.iter().product();
    Game::new(
        counts.to_vec(),
        (0..counts.len())
            .map(|_| (0..n).map(|_| r.random_range(lo..hi)).collect())
            .collect(),
    )
    .unwrap()
}

/// Random symmetric two-player game: `B = Aᵀ`.
pub fn random_symmetric_game(r: &mut impl Rng, s: usize) -> Game {
    let a: Vec<Vec<f64>> = (0..s).map(|_| (0..s).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let b: Vec<Vec<f64>> = (0..s).map(|i| (0..s).map(|j| a[j][i]).collect()).collect();
    Game::bimatrix(&a, &b).unwrap()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

/// Solves `m z = rhs` by Gaussian elimination with partial pivoting.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut z = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| m[c][k] * z[k]).sum();
        z[c] = (rhs[c] - s) / m[c][c];
    }
    Some(z)
}

/// Mixed strategy on `support` (of size k) making the opponent indifferent
/// across `their_support` under `payoff(their, mine)`.
fn indifference(
    payoff: impl Fn(usize, usize) -> f64,
    support: &[usize],
    their_support: &[usize],
    size: usize,
) -> Option<(Vec<f64>, f64)> {
    let k = support.len();
    let mut m = vec![vec![0.0; k + 1]; k + 1];
    let mut rhs = vec![0.0; k + 1];
    for (row, &t) in their_support.iter().enumerate() {
        for (col, &s) in support.iter().enumerate() {
            m[row][col] = payoff(t, s);
        }
        m[row][k] = -1.0;
    }
    for col in 0..k {
        m[k][col] = 1.0;
    }
    rhs[k] = 1.0;
    let z = solve(m, rhs)?;
    if z[..k].iter().any(|&v| v < -1e-12) {
        return None;
    }
    let mut full = vec![0.0; size];
    for (col, &s) in support.iter().enumerate() {
        full[s] = z[col].max(0.0);
    }
    Some((full, z[k]))
}

/// All Nash equilibria of a nondegenerate bimatrix game by support
/// enumeration over equal-size supports.
pub fn support_enumeration(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Profile> {
    let (m, n) = (a.len(), a[0].len());
    let mut out: Vec<Profile> = Vec::new();
    for k in 1..=m.min(n) {
        for s1 in subsets(m, k) {
            for s2 in subsets(n, k) {
                // y makes the row player indifferent over s1.
                let Some((y, v)) = indifference(|r, c| a[r][c], &s2, &s1, n) else { continue };
                let Some((x, w)) = indifference(|c, r| b[r][c], &s1, &s2, m) else { continue };
                let row_ok = (0..m).all(|r| (0..n).map(|c| a[r][c] * y[c]).sum::<f64>() <= v + 1e-9);
                let col_ok = (0..n).all(|c| (0..m).map(|r| b[r][c] * x[r]).sum::<f64>() <= w + 1e-9);
                if row_ok && col_ok {
                    let p = Profile::new(vec![x, y]).unwrap();
                    if !out.iter().any(|q| q.max_distance(&p) <= 1e-9) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

pub fn bimatrix_of(g: &Game) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (m, n) = (g.strategy_counts()[0], g.strategy_counts()[1]);
    let t = |i: usize| -> Vec<Vec<f64>> {
        (0..m).map(|r| (0..n).map(|c| g.payoff(i, &[r, c]).unwrap()).collect()).collect()
    };
    (t(0), t(1))
}

pub fn nash_points(g: &Game) -> Vec<Profile> {
    let (a, b) = bimatrix_of(g);
    support_enumeration(&a, &b)
}

/// Pure profiles where nobody gains by deviating.
pub fn pure_nash(g: &Game) -> Vec<Vec<usize>> {
    pure_profiles(g.strategy_counts())
        .into_iter()
        .filter(|p| {
            (0..g.n_players()).all(|i| {
                let here = g.payoff(i, p).unwrap();
                (0..g.strategy_counts()[i]).all(|a| {
                    let mut q = p.clone();
                    q[i] = a;
                    g.payoff(i, &q).unwrap() <= here
                })
            })
        })
        .collect()
}

/// Pure profiles that pay every player the largest entry of their tensor.
pub fn win_win(g: &Game) -> Vec<Vec<usize>> {
    let all = pure_profiles(g.strategy_counts());
    let best: Vec<f64> = (0..g.n_players())
        .map(|i| all.iter().map(|p| g.payoff(i, p).unwrap()).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    all.into_iter()
        .filter(|p| (0..g.n_players()).all(|i| g.payoff(i, p).unwrap() == best[i]))
        .collect()
}

/// Iterated elimination of strictly dominated pure strategies in a
/// two-player game; returns the surviving strategies of each player.
pub fn iterated_dominance(g: &Game) -> (Vec<usize>, Vec<usize>) {
    let (a, b) = bimatrix_of(g);
    let mut rows: Vec<usize> = (0..a.len()).collect();
    let mut cols: Vec<usize> = (0..a[0].len()).collect();
    loop {
        let before = rows.len() + cols.len();
        rows = rows
            .iter()
            .copied()
            .filter(|&r| !rows.iter().any(|&s| cols.iter().all(|&c| a[s][c] > a[r][c])))
            .collect();
        cols = cols
            .iter()
            .copied()
            .filter(|&c| !cols.iter().any(|&d| rows.iter().all(|&r| b[r][d] > b[r][c])))
            .collect();
        if rows.len() + cols.len() == before {
            return (rows, cols);
        }
    }
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

/// Like [`iterated_dominance`] but removes weakly dominated strategies,
/// all of them at once in each round.
pub fn iterated_weak_dominance(g: &Game) -> (Vec<usize>, Vec<usize>) {
    let (a, b) = bimatrix_of(g);
    let weakly = |better: &dyn Fn(usize) -> f64, worse: &dyn Fn(usize) -> f64, over: &[usize]| {
        over.iter().all(|&k| better(k) >= worse(k)) && over.iter().any(|&k| better(k) > worse(k))
    };
    let mut rows: Vec<usize> = (0..a.len()).collect();
    let mut cols: Vec<usize> = (0..a[0].len()).collect();
    loop {
        let before = rows.len() + cols.len();
        let keep_rows: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&r| !rows.iter().any(|&s| weakly(&|c| a[s][c], &|c| a[r][c], &cols)))
            .collect();
        let keep_cols: Vec<usize> = cols
            .iter()
            .copied()
            .filter(|&c| !cols.iter().any(|&d| weakly(&|r| b[r][d], &|r| b[r][c], &rows)))
            .collect();
        rows = keep_rows;
        cols = keep_cols;
        if rows.len() + cols.len() == before {
            return (rows, cols);
        }
    }
}
