//! Single-start solver shared by the full and the symmetric search.
//!
//! Works in "base" coordinates: a list of simplex blocks that `embed` maps to
//! a full profile. Each start first tries a Levenberg–Marquardt polish of the
//! parallel residual; if that stalls it follows the revision map (or a damped
//! step along the incentive dynamics when the map is not admissible) and
//! hands back to the polish once the residual is small.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::revision_step;
use crate::game::{Game, Profile};
use crate::incentive::{tangent_part, Incentive, StrategyField};

/// Residual at which the flow hands over to the polish.
const HANDOFF: f64 = 1e-6;
/// Coordinates below this are tried at exactly zero after convergence.
const SNAP: f64 = 1e-6;
/// Bounds of the face check radius after convergence. Residuals of
/// incentives like `nash` vanish quadratically near a face, so a converged
/// point can sit about `sqrt(residual)` off the boundary equilibrium it
/// approximates.
const FACE_SNAP: (f64, f64) = (1e-4, 1e-2);
const LM_MAX_ITER: usize = 100;
const STALL_WINDOW: usize = 500;
const FD_STEP: f64 = 1e-7;

pub(crate) type Embed<'a> = dyn Fn(&[Vec<f64>]) -> Profile + Sync + 'a;
pub(crate) type Reduce<'a> = dyn Fn(&[Vec<f64>]) -> Vec<Vec<f64>> + Sync + 'a;

pub(crate) struct Problem<'a> {
    pub game: &'a Game,
    pub incentive: &'a dyn Incentive,
    pub embed: &'a Embed<'a>,
    /// Pulls a full-space profile or tangent vector back to base coordinates.
    pub reduce: &'a Reduce<'a>,
    pub map_admissible: bool,
}

pub(crate) struct Outcome {
    pub base: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl Problem<'_> {
    fn field(&self, base: &[Vec<f64>]) -> Option<(Profile, StrategyField)> {
        let x = (self.embed)(base);
        let phi = self.incentive.evaluate(self.game, &x).ok()?;
        if phi.iter().flatten().all(|v| v.is_finite()) {
            Some((x, phi))
        } else {
            None
        }
    }

    fn residual_vec(&self, base: &[Vec<f64>]) -> Option<Vec<f64>> {
        let (x, phi) = self.field(base)?;
        Some(tangent_part(&phi, &x).into_parts().into_iter().flatten().collect())
    }

    fn residual(&self, base: &[Vec<f64>]) -> f64 {
        self.residual_vec(base)
            .map_or(f64::INFINITY, |r| r.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub fn solve(&self, start: Vec<Vec<f64>>, tol: f64, budget: usize) -> Outcome {
        let mut base = start;
        let mut residual = self.residual(&base);
        let mut iterations = 0;
        if residual > tol {
            let (b, r, k) = self.polish(base.clone(), tol * 1e-3, false);
            iterations += k;
            if r < residual {
                base = b;
                residual = r;
            }
        }
        let mut use_map = self.map_admissible;
        let mut last_polish = 0;
        let mut checkpoint = (iterations, residual);
        while residual > tol && iterations < budget {
            iterations += 1;
            if iterations - checkpoint.0 >= STALL_WINDOW {
                if residual > 0.9 * checkpoint.1 {
                    if use_map {
                        // The map can cycle around a mixed equilibrium.
                        use_map = false;
                    } else {
                        // The flow can spiral slowly into one.
                        let (b, r, k) = self.polish(base.clone(), tol * 1e-3, false);
                        iterations += k;
                        if r < residual {
                            base = b;
                            residual = r;
                        }
                        let (face, k) = self.face(&base, residual, tol);
                        iterations += k;
                        if let Some(face) = face {
                            base = face;
                            residual = self.residual(&base);
                        }
                        if residual <= tol {
                            break;
                        }
                    }
                }
                checkpoint = (iterations, residual);
            }
            let next = if use_map {
                match self.map_step(&base) {
                    Some(b) => b,
                    None => {
                        use_map = false;
                        continue;
                    }
                }
            } else {
                match self.damped_step(&base) {
                    Some(b) => b,
                    None => break,
                }
            };
            base = next;
            residual = self.residual(&base);
            if residual <= HANDOFF && residual > tol && iterations - last_polish >= 100 {
                last_polish = iterations;
                let (b, r, k) = self.polish(base.clone(), tol * 1e-3, false);
                iterations += k;
                if r < residual {
                    base = b;
                    residual = r;
                }
                if residual > tol {
                    let (face, k) = self.face(&base, residual, tol);
                    iterations += k;
                    if let Some(face) = face {
                        base = face;
                        residual = self.residual(&base);
                    }
                }
            }
        }
        if residual <= tol {
            let snapped = snap(&base);
            let r = self.residual(&snapped);
            if r <= residual.max(tol * 1e-6) {
                base = snapped;
                residual = r;
            }
            if residual > tol * 1e-6 {
                let (b, r, k) = self.polish(base.clone(), tol * 1e-6, false);
                iterations += k;
                if r <= residual {
                    base = b;
                    residual = r;
                }
                let snapped = snap(&base);
                let r = self.residual(&snapped);
                if r <= residual.max(tol * 1e-3) {
                    base = snapped;
                    residual = r;
                }
            }
            let (face, k) = self.face(&base, residual, tol);
            iterations += k;
            if let Some(face) = face {
                base = face;
            }
        }
        Outcome { base, iterations }
    }

    /// Drops coordinates within the face radius and polishes on that face;
    /// returns the face point if its residual is at most `tol`.
    fn face(&self, base: &[Vec<f64>], residual: f64, tol: f64) -> (Option<Vec<Vec<f64>>>, usize) {
        let radius = (1e3 * residual.sqrt()).clamp(FACE_SNAP.0, FACE_SNAP.1);
        if !base.iter().flatten().any(|&c| c > 0.0 && c < radius) {
            return (None, 0);
        }
        let (b, _, k) = self.polish(snap_below(base, radius), tol * 1e-3, true);
        let face = snap_below(&b, radius);
        let ok = self.residual(&face) <= tol;
        (ok.then_some(face), k)
    }

    fn map_step(&self, base: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
        let (x, phi) = self.field(base)?;
        let tx = revision_step(&phi, &x, 1.0).ok()?;
        let next = (self.reduce)(&tx);
        let off = next.iter().any(|blk| {
            let s: f64 = blk.iter().sum();
            (s - 1.0).abs() > 1e-9 || blk.iter().any(|&c| c < -1e-12 || !c.is_finite())
        });
        if off {
            return None;
        }
        Some(next.into_iter().map(|b| project_simplex(&b)).collect())
    }

    fn damped_step(&self, base: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
        let (x, phi) = self.field(base)?;
        let d = (self.reduce)(tangent_part(&phi, &x).parts());
        let scale = d.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()));
        let lambda = 0.5 / (1.0 + scale);
        Some(
            base.iter()
                .zip(&d)
                .map(|(b, db)| {
                    let moved: Vec<f64> = b.iter().zip(db).map(|(c, v)| c + lambda * v).collect();
                    project_simplex(&moved)
                })
                .collect(),
        )
    }

    /// Levenberg–Marquardt on the parallel residual in reduced coordinates.
    /// In each block the largest coordinate is eliminated.
    /// Stops once the max-norm residual is at most `target`. With
    /// `hold_zeros` the search stays on the face of the starting point.
    fn polish(&self, mut base: Vec<Vec<f64>>, target: f64, hold_zeros: bool) -> (Vec<Vec<f64>>, f64, usize) {
        let Some(mut r) = self.residual_vec(&base) else {
            return (base, f64::INFINITY, 0);
        };
        let mut cost = norm2(&r);
        let mut mu = 1e-3;
        let mut k = 0;
        while k < LM_MAX_ITER {
            let max = r.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if max <= target {
                break;
            }
            k += 1;
            let free = free_coordinates(&base, hold_zeros);
            let Some(jac) = self.jacobian(&base, &free, r.len()) else {
                break;
            };
            let jt = jac.transpose();
            let jtj = &jt * &jac;
            let g = &jt * DVector::from_column_slice(&r);
            let mut improved = false;
            while mu < 1e12 {
                let mut a = jtj.clone();
                for d in 0..a.nrows() {
                    a[(d, d)] += mu * (jtj[(d, d)] + 1e-12);
                }
                let Some(delta) = a.lu().solve(&(-&g)) else {
                    mu *= 10.0;
                    continue;
                };
                let mut trial = apply_step(&base, &free, delta.as_slice());
                if hold_zeros {
                    trial = restore_zeros(&base, trial);
                }
                if let Some(rt) = self.residual_vec(&trial) {
                    let ct = norm2(&rt);
                    if ct < cost {
                        base = trial;
                        r = rt;
                        cost = ct;
                        mu = (mu / 10.0).max(1e-12);
                        improved = true;
                        break;
                    }
                }
                mu *= 10.0;
            }
            if !improved {
                break;
            }
        }
        let max = r.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        (base, max, k)
    }

    fn jacobian(&self, base: &[Vec<f64>], free: &[(usize, usize, usize)], m: usize) -> Option<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(m, free.len());
        for (col, &(b, a, elim)) in free.iter().enumerate() {
            let up = shifted(base, b, a, elim, FD_STEP);
            let r_up = self.residual_vec(&up)?;
            let (r_dn, h) = if base[b][a] >= FD_STEP {
                (self.residual_vec(&shifted(base, b, a, elim, -FD_STEP))?, 2.0 * FD_STEP)
            } else {
                (self.residual_vec(base)?, FD_STEP)
            };
            for row in 0..m {
                jac[(row, col)] = (r_up[row] - r_dn[row]) / h;
            }
        }
        Some(jac)
    }
}

/// Sets coordinates below [`SNAP`] to zero and rescales each block.
fn snap(base: &[Vec<f64>]) -> Vec<Vec<f64>> {
    snap_below(base, SNAP)
}

fn snap_below(base: &[Vec<f64>], radius: f64) -> Vec<Vec<f64>> {
    base.iter()
        .map(|blk| {
            let mut v: Vec<f64> = blk.iter().map(|&c| if c < radius { 0.0 } else { c }).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|c| *c /= s);
            v
        })
        .collect()
}

/// `(block, coordinate, eliminated coordinate)` for every free variable.
fn free_coordinates(base: &[Vec<f64>], hold_zeros: bool) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (b, blk) in base.iter().enumerate() {
        let elim = (0..blk.len())
            .fold(0, |best, a| if blk[a] > blk[best] { a } else { best });
        out.extend(
            (0..blk.len())
                .filter(|&a| a != elim && !(hold_zeros && blk[a] == 0.0))
                .map(|a| (b, a, elim)),
        );
    }
    out
}

fn shifted(base: &[Vec<f64>], b: usize, a: usize, elim: usize, h: f64) -> Vec<Vec<f64>> {
    let mut out = base.to_vec();
    out[b][a] += h;
    out[b][elim] -= h;
    out
}

fn apply_step(base: &[Vec<f64>], free: &[(usize, usize, usize)], delta: &[f64]) -> Vec<Vec<f64>> {
    let mut out = base.to_vec();
    for (&(b, a, elim), &d) in free.iter().zip(delta) {
        out[b][a] += d;
        out[b][elim] -= d;
    }
    out.iter().map(|blk| project_simplex(blk)).collect()
}

/// Zeroes the coordinates that are zero in `base` and rescales.
fn restore_zeros(base: &[Vec<f64>], mut trial: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for (blk, t) in base.iter().zip(trial.iter_mut()) {
        for (c, v) in blk.iter().zip(t.iter_mut()) {
            if *c == 0.0 {
                *v = 0.0;
            }
        }
        let s: f64 = t.iter().sum();
        t.iter_mut().for_each(|v| *v /= s);
    }
    trial
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&c| (c - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|&c| (c - 1.0 / 3.0).abs() <= 1e-15));
        let q = project_simplex(&[-1.0, 0.5, 0.7]);
        assert!(q[0] == 0.0 && (q[1] - 0.4).abs() <= 1e-15 && (q[2] - 0.6).abs() <= 1e-15);
    }
}
