//! Parameter sweeps over `(n, alpha)` cells.

use std::time::Instant;

use hotelling_core::closed_form::placement_positions;
use hotelling_core::discrete::facility_improvement_empirical;
use hotelling_core::{
    build_grid, improvement_factors, rho_general, rho_small, DiscretePlacement, Placement,
    PlacementKind, SimConfig, DEFAULT_GRID, DEFAULT_TOL,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::values::{EngineKind, PrecisionRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_values: Vec<usize>,
    pub alphas: Vec<f64>,
    pub precision: PrecisionRule,
    pub kind: PlacementKind,
    pub engine: EngineKind,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Record wall-clock time per cell.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Invalid(String),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(SweepError::Invalid("facility counts must be at least 1".into()));
        }
        if self.alphas.is_empty() {
            return Err(SweepError::Invalid("no alpha values".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(SweepError::Invalid(format!("alpha {a} outside [0, 1]")));
        }
        self.precision.validate().map_err(SweepError::Invalid)
    }
}

/// One output line: a facility's factor, or the cell summary when
/// `facility_index` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub alpha: f64,
    /// Grid size; only set for the discrete engine.
    pub precision: Option<usize>,
    /// 1-based facility index in sorted order.
    pub facility_index: Option<usize>,
    pub improvement_factor: Option<f64>,
    pub rho: Option<f64>,
    pub engine: EngineKind,
    pub status: String,
    pub runtime_ms: Option<f64>,
}

pub const STATUS_OK: &str = "ok";

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    pub fn is_summary(&self) -> bool {
        self.facility_index.is_none()
    }
}

/// Factors of one cell, in sorted facility order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub rho: f64,
    pub factors: Vec<f64>,
    pub precision: Option<usize>,
}

/// Largest factor; for a closed-form cell the single value.
fn max_factor(factors: &[f64]) -> f64 {
    factors.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn closed_form_rho(kind: PlacementKind, n: usize, alpha: f64) -> hotelling_core::Result<f64> {
    match (kind, n) {
        (_, 1) => Ok(1.0),
        (_, 4..=10) => rho_small(kind, n, alpha),
        _ => rho_general(kind, n, alpha),
    }
}

/// Factors of an arbitrary placement: continuous when `grid_size` is `None`,
/// otherwise on a grid of that many clients.
pub fn evaluate_positions(
    positions: &[f64],
    alpha: f64,
    grid_size: Option<usize>,
) -> hotelling_core::Result<CellOutcome> {
    let factors: Vec<f64> = match grid_size {
        None => {
            let report =
                improvement_factors(&Placement::new(positions.to_vec())?, alpha, DEFAULT_GRID, DEFAULT_TOL)?;
            report.per_facility.iter().map(|f| f.improvement_factor).collect()
        }
        Some(p) => {
            let grid = build_grid(p)?;
            let dp = DiscretePlacement::from_positions(positions, &grid)?;
            let cfg = SimConfig::default();
            (0..dp.len())
                .into_par_iter()
                .map(|j| {
                    facility_improvement_empirical(&dp, j, &grid, alpha, &cfg)
                        .map(|f| f.improvement_factor)
                })
                .collect::<hotelling_core::Result<Vec<_>>>()?
        }
    };
    Ok(CellOutcome {
        rho: max_factor(&factors),
        factors,
        precision: grid_size,
    })
}

/// Evaluates one cell of a canonical placement.
pub fn evaluate_cell(
    kind: PlacementKind,
    n: usize,
    alpha: f64,
    engine: EngineKind,
    precision: PrecisionRule,
) -> hotelling_core::Result<CellOutcome> {
    let grid_size = match engine {
        EngineKind::ClosedForm => {
            return Ok(CellOutcome {
                rho: closed_form_rho(kind, n, alpha)?,
                factors: Vec::new(),
                precision: None,
            })
        }
        EngineKind::Continuous => None,
        EngineKind::Discrete => Some(precision.precision(n)),
    };
    evaluate_positions(&placement_positions(kind, n)?, alpha, grid_size)
}

fn cell_rows(spec: &SweepSpec, n: usize, alpha: f64) -> Vec<ResultRow> {
    let start = Instant::now();
    let outcome = evaluate_cell(spec.kind, n, alpha, spec.engine, spec.precision);
    let runtime_ms = spec
        .timing
        .then(|| start.elapsed().as_secs_f64() * 1e3);
    let base = ResultRow {
        n,
        alpha,
        precision: (spec.engine == EngineKind::Discrete).then(|| spec.precision.precision(n)),
        facility_index: None,
        improvement_factor: None,
        rho: None,
        engine: spec.engine,
        status: STATUS_OK.to_string(),
        runtime_ms,
    };
    match outcome {
        Err(e) => vec![ResultRow {
            status: format!("error: {e}"),
            ..base
        }],
        Ok(cell) => {
            let mut rows = vec![ResultRow {
                rho: Some(cell.rho),
                ..base.clone()
            }];
            rows.extend(cell.factors.iter().enumerate().map(|(i, &f)| ResultRow {
                facility_index: Some(i + 1),
                improvement_factor: Some(f),
                rho: Some(cell.rho),
                ..base.clone()
            }));
            rows
        }
    }
}

/// Runs every `(n, alpha)` cell on a pool of `spec.workers` threads.
///
/// Rows come out ordered by `n`, then `alpha` in the given order, then
/// facility, with each cell's summary row first. Failed cells produce a
/// single row carrying the error in `status`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>, SweepError> {
    spec.validate()?;
    let cells: Vec<(usize, f64)> = spec
        .n_values
        .iter()
        .flat_map(|&n| spec.alphas.iter().map(move |&a| (n, a)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let nested: Vec<Vec<ResultRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, a)| cell_rows(spec, n, a))
            .collect()
    });
    Ok(nested.into_iter().flatten().collect())
}

/// Per facility count: the largest summary `rho` and the first alpha
/// attaining it.
pub fn peak_by_n(rows: &[ResultRow]) -> Vec<(usize, f64, f64)> {
    let mut out: Vec<(usize, f64, f64)> = Vec::new();
    for r in rows.iter().filter(|r| r.is_summary() && r.is_ok()) {
        let Some(rho) = r.rho else { continue };
        match out.last_mut() {
            Some(last) if last.0 == r.n => {
                if rho > last.2 {
                    *last = (r.n, r.alpha, rho);
                }
            }
            _ => out.push((r.n, r.alpha, rho)),
        }
    }
    out
}
