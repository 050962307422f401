//! Proper client equilibrium of the continuous market.
//!
//! The equilibrium borders are the minimiser of the potential over the
//! ordered set `0 <= beta[1] <= ... <= beta[n-1] <= 1`. The potential is
//! convex and piecewise quadratic in the borders, and its partial derivative
//! with respect to `beta[i]` is exactly the indifference residual
//!
//! ```text
//! (1-a)(|s_i - beta_i| - |s_{i+1} - beta_i|) + a(l_i - l_{i+1})
//! ```
//!
//! For `a > 0` the minimiser is found by a Newton iteration on the active
//! quadratic piece (one tridiagonal solve per step, exact once the piece is
//! right). If the piece pattern cycles or the result leaves the ordered set,
//! cyclic coordinate descent with exact scalar minimisation takes over.
//!
//! For `a = 0` the potential is not strictly convex: co-located facilities can
//! split their common interval arbitrarily. The solver returns the limit
//! `a -> 0+`, i.e. nearest-facility borders with co-located groups sharing
//! their interval equally.

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, check_tol, Error, Result};
use crate::model::{Borders, Placement};

/// Residual tolerance used when callers have no preference.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Coordinate-descent sweep budget.
pub const MAX_SWEEPS: usize = 100_000;

const MAX_NEWTON_STEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub borders: Borders,
    /// Indifference residual at each interior border (`n - 1` entries).
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl EquilibriumSolution {
    pub fn loads(&self) -> Vec<f64> {
        self.borders.loads()
    }

    /// Largest residual over borders whose two adjacent intervals are nonempty.
    pub fn max_residual(&self) -> f64 {
        max_active_residual(self.borders.as_slice(), &self.residuals)
    }
}

/// Solves for the unique proper client equilibrium of `placement`.
pub fn solve_client_equilibrium(
    placement: &Placement,
    alpha: f64,
    tol: f64,
) -> Result<EquilibriumSolution> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    Ok(finish(
        placement.positions(),
        alpha,
        tol,
        solve_sorted(placement.positions(), alpha, tol, None),
    ))
}

/// Same as [`solve_client_equilibrium`] but starting from the given borders.
pub fn solve_client_equilibrium_from(
    placement: &Placement,
    alpha: f64,
    tol: f64,
    start: &Borders,
) -> Result<EquilibriumSolution> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    if start.intervals() != placement.len() {
        return Err(Error::LengthMismatch {
            expected: placement.len() + 1,
            got: start.as_slice().len(),
        });
    }
    Ok(finish(
        placement.positions(),
        alpha,
        tol,
        solve_sorted(placement.positions(), alpha, tol, Some(start.as_slice())),
    ))
}

fn finish(positions: &[f64], alpha: f64, _tol: f64, raw: RawSolution) -> EquilibriumSolution {
    let residuals = indifference_residuals(positions, &raw.beta, alpha);
    EquilibriumSolution {
        borders: Borders::from_vec_unchecked(raw.beta),
        residuals,
        iterations: raw.iterations,
        converged: raw.converged,
    }
}

/// Indifference residual at every interior border; equals the gradient of
/// the potential with respect to that border.
pub fn indifference_residuals(positions: &[f64], beta: &[f64], alpha: f64) -> Vec<f64> {
    (1..positions.len())
        .map(|i| residual_at(positions, beta, alpha, i))
        .collect()
}

#[inline]
fn residual_at(positions: &[f64], beta: &[f64], alpha: f64, i: usize) -> f64 {
    let b = beta[i];
    let left_load = b - beta[i - 1];
    let right_load = beta[i + 1] - b;
    (1.0 - alpha) * ((positions[i - 1] - b).abs() - (positions[i] - b).abs())
        + alpha * (left_load - right_load)
}

pub(crate) fn max_active_residual(beta: &[f64], residuals: &[f64]) -> f64 {
    residuals
        .iter()
        .enumerate()
        .filter(|(k, _)| beta[k + 1] > beta[*k] && beta[k + 2] > beta[k + 1])
        .map(|(_, r)| r.abs())
        .fold(0.0, f64::max)
}

pub(crate) struct RawSolution {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Core solver on a sorted position slice. Never fails; non-convergence is
/// reported through the flag.
pub(crate) fn solve_sorted(
    positions: &[f64],
    alpha: f64,
    tol: f64,
    start: Option<&[f64]>,
) -> RawSolution {
    let n = positions.len();
    if n == 1 {
        return RawSolution {
            beta: vec![0.0, 1.0],
            iterations: 0,
            converged: true,
        };
    }
    if alpha == 0.0 {
        return RawSolution {
            beta: nearest_borders(positions),
            iterations: 0,
            converged: true,
        };
    }

    let mut beta = match start {
        Some(s) => s.to_vec(),
        None => uniform_beta(n),
    };
    let mut work = Workspace::new(n);
    let mut iterations = 0;

    let (steps, ok) = newton(positions, alpha, tol, &mut beta, &mut work);
    iterations += steps;
    if ok {
        return RawSolution {
            beta,
            iterations,
            converged: true,
        };
    }

    // Newton failed: repair ordering and fall back to coordinate descent.
    project_ordered(&mut beta);
    let sweeps = coordinate_descent(positions, alpha, tol, &mut beta, MAX_SWEEPS);
    iterations += sweeps;
    let mut polished = beta.clone();
    let (steps, ok) = newton(positions, alpha, tol, &mut polished, &mut work);
    iterations += steps;
    if ok {
        return RawSolution {
            beta: polished,
            iterations,
            converged: true,
        };
    }
    let converged = is_optimal(positions, alpha, tol, &beta);
    RawSolution {
        beta,
        iterations,
        converged,
    }
}

fn uniform_beta(n: usize) -> Vec<f64> {
    let mut beta: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    beta[n] = 1.0;
    beta
}

/// Nearest-facility borders; co-located groups share their interval equally.
fn nearest_borders(positions: &[f64]) -> Vec<f64> {
    let n = positions.len();
    let mut beta = vec![0.0; n + 1];
    beta[n] = 1.0;
    let mut start = 0;
    let mut left_edge = 0.0;
    while start < n {
        let mut end = start + 1;
        while end < n && positions[end] == positions[start] {
            end += 1;
        }
        let right_edge = if end < n {
            0.5 * (positions[start] + positions[end])
        } else {
            1.0
        };
        let size = (end - start) as f64;
        for k in 1..(end - start) {
            beta[start + k] = left_edge + (right_edge - left_edge) * k as f64 / size;
        }
        if end < n {
            beta[end] = right_edge;
        }
        left_edge = right_edge;
        start = end;
    }
    beta
}

fn project_ordered(beta: &mut [f64]) {
    let n = beta.len() - 1;
    beta[0] = 0.0;
    beta[n] = 1.0;
    for b in beta.iter_mut() {
        *b = b.clamp(0.0, 1.0);
    }
    for i in 1..n {
        if beta[i] < beta[i - 1] {
            beta[i] = beta[i - 1];
        }
    }
}

struct Workspace {
    lower: Vec<f64>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
    pieces: Vec<Piece>,
    next: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            rhs: vec![0.0; n],
            pieces: vec![Piece::Flat; n],
            next: vec![0.0; n + 1],
        }
    }
}

/// Which linear piece of `|s_a - b| - |s_b - b|` a border sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Below,
    Between,
    Above,
    /// `s_a == s_b`: the distance difference vanishes identically.
    Flat,
}

fn piece_of(b: f64, sa: f64, sb: f64) -> Piece {
    if sa == sb {
        Piece::Flat
    } else if b < sa {
        Piece::Below
    } else if b > sb {
        Piece::Above
    } else {
        Piece::Between
    }
}

/// Semismooth Newton on the gradient. Returns (steps, success).
fn newton(
    positions: &[f64],
    alpha: f64,
    tol: f64,
    beta: &mut [f64],
    work: &mut Workspace,
) -> (usize, bool) {
    let n = positions.len();
    let m = n - 1;
    let w = 1.0 - alpha;
    for step in 1..=MAX_NEWTON_STEPS {
        for i in 1..n {
            work.pieces[i - 1] = piece_of(beta[i], positions[i - 1], positions[i]);
        }
        // Row k corresponds to border k + 1.
        for k in 0..m {
            let (sa, sb) = (positions[k], positions[k + 1]);
            let gap = sb - sa;
            let (d, r) = match work.pieces[k] {
                Piece::Between => (2.0 * alpha + 2.0 * w, w * (sa + sb)),
                Piece::Below => (2.0 * alpha, w * gap),
                Piece::Above => (2.0 * alpha, -w * gap),
                Piece::Flat => (2.0 * alpha, 0.0),
            };
            work.diag[k] = d;
            work.rhs[k] = r;
        }
        work.rhs[m - 1] += alpha;
        solve_tridiagonal(-alpha, &mut work.diag[..m], &mut work.rhs[..m], &mut work.lower[..m]);

        work.next[0] = 0.0;
        work.next[n] = 1.0;
        work.next[1..n].copy_from_slice(&work.rhs[..m]);
        let same_pattern = (1..n)
            .all(|i| piece_of(work.next[i], positions[i - 1], positions[i]) == work.pieces[i - 1]);
        beta.copy_from_slice(&work.next);
        if same_pattern || is_optimal(positions, alpha, tol, beta) {
            let ordered = beta.windows(2).all(|p| p[0] <= p[1]);
            return (step, ordered && is_optimal(positions, alpha, tol, beta));
        }
    }
    (MAX_NEWTON_STEPS, false)
}

/// Thomas algorithm for a symmetric tridiagonal system with constant
/// off-diagonal `off`. The solution overwrites `rhs`.
fn solve_tridiagonal(off: f64, diag: &mut [f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let m = diag.len();
    scratch[0] = diag[0];
    for k in 1..m {
        let factor = off / scratch[k - 1];
        scratch[k] = diag[k] - factor * off;
        rhs[k] -= factor * rhs[k - 1];
    }
    rhs[m - 1] /= scratch[m - 1];
    for k in (0..m - 1).rev() {
        rhs[k] = (rhs[k] - off * rhs[k + 1]) / scratch[k];
    }
}

/// Optimality test: indifference at nondegenerate borders, and coordinate-wise
/// optimality (the exact scalar minimiser does not move) everywhere.
fn is_optimal(positions: &[f64], alpha: f64, tol: f64, beta: &[f64]) -> bool {
    let n = positions.len();
    for i in 1..n {
        let lo = beta[i - 1];
        let hi = beta[i + 1];
        if !(lo <= beta[i] && beta[i] <= hi) {
            return false;
        }
        if beta[i] > lo && beta[i] < hi {
            if residual_at(positions, beta, alpha, i).abs() > tol {
                return false;
            }
        } else {
            let best = coordinate_minimizer(positions, alpha, beta, i);
            if (best - beta[i]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Exact minimiser of the potential in `beta[i]` with all other borders fixed.
fn coordinate_minimizer(positions: &[f64], alpha: f64, beta: &[f64], i: usize) -> f64 {
    let lo = beta[i - 1];
    let hi = beta[i + 1];
    let (sa, sb) = (positions[i - 1], positions[i]);
    let w = 1.0 - alpha;
    let centre = 0.5 * (lo + hi);
    if alpha == 0.0 {
        let target = if sa == sb { centre } else { 0.5 * (sa + sb) };
        return target.clamp(lo, hi);
    }
    let gap = sb - sa;
    // Derivative is strictly increasing; locate its root by its sign at the kinks.
    let slope_at = |x: f64| w * ((x - sa).abs() - (x - sb).abs()) + alpha * (2.0 * x - lo - hi);
    let root = if slope_at(sa) >= 0.0 {
        centre + w * gap / (2.0 * alpha)
    } else if slope_at(sb) <= 0.0 {
        centre - w * gap / (2.0 * alpha)
    } else {
        0.5 * (w * (sa + sb) + alpha * (lo + hi))
    };
    root.clamp(lo, hi)
}

/// Cyclic coordinate descent with exact scalar steps. Returns sweeps used.
fn coordinate_descent(
    positions: &[f64],
    alpha: f64,
    tol: f64,
    beta: &mut [f64],
    max_sweeps: usize,
) -> usize {
    let n = positions.len();
    for sweep in 1..=max_sweeps {
        let mut max_step: f64 = 0.0;
        for i in 1..n {
            let next = coordinate_minimizer(positions, alpha, beta, i);
            max_step = max_step.max((next - beta[i]).abs());
            beta[i] = next;
        }
        if max_step <= tol * 1e-3 && is_optimal(positions, alpha, tol, beta) {
            return sweep;
        }
    }
    max_sweeps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::potential;
    use approx::assert_abs_diff_eq;

    fn solve(pos: &[f64], alpha: f64) -> EquilibriumSolution {
        let p = Placement::new(pos.to_vec()).unwrap();
        solve_client_equilibrium(&p, alpha, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn s_opt_borders_are_uniform() {
        for n in 1..=9 {
            let pos: Vec<f64> = (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect();
            for &alpha in &[0.0, 0.2, 0.5, 0.9, 1.0] {
                let sol = solve(&pos, alpha);
                assert!(sol.converged);
                for (i, b) in sol.borders.as_slice().iter().enumerate() {
                    assert_abs_diff_eq!(*b, i as f64 / n as f64, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn alpha_one_equalises_loads() {
        let sol = solve(&[0.05, 0.1, 0.12, 0.9], 1.0);
        for l in sol.loads() {
            assert_abs_diff_eq!(l, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn three_facility_borders_match_closed_form() {
        let sol = solve(&[0.25, 0.5, 0.75], 0.0);
        assert_abs_diff_eq!(sol.borders.as_slice()[1], 0.375);
        assert_abs_diff_eq!(sol.borders.as_slice()[2], 0.625);
        for &alpha in &[0.1, 0.4, 0.8] {
            let s1 = 0.3;
            let sol = solve(&[s1, 0.5, 1.0 - s1], alpha);
            let expected = (1.0 + alpha + 2.0 * s1 - 2.0 * alpha * s1) / (4.0 + 2.0 * alpha);
            assert_abs_diff_eq!(sol.borders.as_slice()[1], expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn co_located_facilities_share_equally() {
        let sol = solve(&[0.25, 0.25, 0.75, 0.75], 0.0);
        for l in sol.loads() {
            assert_abs_diff_eq!(l, 0.25, epsilon = 1e-15);
        }
        let sol = solve(&[0.3, 0.3, 0.3], 0.0);
        for l in sol.loads() {
            assert_abs_diff_eq!(l, 1.0 / 3.0, epsilon = 1e-15);
        }
        let sol = solve(&[0.1, 0.1, 0.8], 0.4);
        let l = sol.loads();
        assert_abs_diff_eq!(l[0], l[1], epsilon = 1e-12);
    }

    #[test]
    fn newton_and_coordinate_descent_agree() {
        let pos = [0.02, 0.3, 0.31, 0.6, 0.61, 0.95];
        for &alpha in &[0.05, 0.5, 0.95] {
            let sol = solve(&pos, alpha);
            let mut beta = uniform_beta(pos.len());
            coordinate_descent(&pos, alpha, 1e-13, &mut beta, MAX_SWEEPS);
            for (a, b) in sol.borders.as_slice().iter().zip(&beta) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn start_point_does_not_matter() {
        let p = Placement::new(vec![0.1, 0.2, 0.7, 0.75, 0.76]).unwrap();
        let a = solve_client_equilibrium(&p, 0.3, DEFAULT_TOL).unwrap();
        let start = Borders::new(vec![0.0, 0.01, 0.02, 0.03, 0.5, 1.0]).unwrap();
        let b = solve_client_equilibrium_from(&p, 0.3, DEFAULT_TOL, &start).unwrap();
        for (x, y) in a.borders.as_slice().iter().zip(b.borders.as_slice()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-9);
        }
    }

    #[test]
    fn solution_is_a_local_minimum() {
        let p = Placement::new(vec![0.0, 0.15, 0.4, 0.42, 1.0]).unwrap();
        let alpha = 0.35;
        let sol = solve_client_equilibrium(&p, alpha, DEFAULT_TOL).unwrap();
        let phi = potential(&p, &sol.borders, alpha).unwrap();
        let base = sol.borders.as_slice().to_vec();
        for i in 1..base.len() - 1 {
            for &d in &[-1e-6, 1e-6] {
                let mut b = base.clone();
                b[i] = (b[i] + d).clamp(b[i - 1], b[i + 1]);
                let phi2 = potential(&p, &Borders::new(b).unwrap(), alpha).unwrap();
                assert!(phi <= phi2 + 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = Placement::new(vec![0.5]).unwrap();
        assert!(solve_client_equilibrium(&p, -0.1, DEFAULT_TOL).is_err());
        assert!(solve_client_equilibrium(&p, 0.5, 0.0).is_err());
        let sol = solve_client_equilibrium(&p, 0.5, DEFAULT_TOL).unwrap();
        assert_eq!(sol.loads(), vec![1.0]);
        assert!(sol.residuals.is_empty());
    }
}
