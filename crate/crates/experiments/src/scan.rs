//! Exhaustive search over three-facility placements.

use hotelling_core::deviation::MIN_GRID;
use hotelling_core::{approximation_factor, Placement, DEFAULT_TOL};
use rayon::prelude::*;
use serde::Serialize;

use crate::sweep::SweepError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct N3Scan {
    pub step: f64,
    pub alpha: f64,
    pub min_rho: f64,
    pub argmin: [f64; 3],
    /// Placements evaluated after folding mirror images together.
    pub evaluated: usize,
}

/// Lattice points `i <= j <= k` in `0..=m`, keeping one of each mirror pair
/// `(i, j, k) ~ (m - k, m - j, m - i)`.
fn canonical_triples(m: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..=m {
        for j in i..=m {
            for k in j..=m {
                if [i, j, k] <= [m - k, m - j, m - i] {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Coarsest lattice accepted.
pub const MAX_STEP: f64 = 0.02;

/// Smallest approximation factor over all placements `0 <= s1 <= s2 <= s3 <= 1`
/// on a lattice of spacing `step`.
///
/// Mirror images share their factor, so only one of each is evaluated. Ties
/// go to the lexicographically smallest placement.
pub fn scan_n3_lower_bound(step: f64, alpha: f64, workers: usize) -> Result<N3Scan, SweepError> {
    if !(step > 0.0 && step <= MAX_STEP) {
        return Err(SweepError::Invalid(format!("step must lie in (0, {MAX_STEP}], got {step}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SweepError::Invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    let m = (1.0 / step).round() as usize;
    if ((m as f64) * step - 1.0).abs() > 1e-9 {
        return Err(SweepError::Invalid(format!("1 / step must be an integer, got step {step}")));
    }
    let triples = canonical_triples(m);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let mf = m as f64;
    let rhos: Vec<f64> = pool.install(|| {
        triples
            .par_iter()
            .map(|t| {
                let pos: Vec<f64> = t.iter().map(|&v| v as f64 / mf).collect();
                Placement::new(pos)
                    .and_then(|p| approximation_factor(&p, alpha, MIN_GRID, DEFAULT_TOL))
                    .unwrap_or(f64::INFINITY)
            })
            .collect()
    });
    let (best, min_rho) = rhos
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &r)| if r < acc.1 { (i, r) } else { acc });
    let t = triples[best];
    Ok(N3Scan {
        step,
        alpha,
        min_rho,
        argmin: [t[0] as f64 / mf, t[1] as f64 / mf, t[2] as f64 / mf],
        evaluated: triples.len(),
    })
}
