//! Which facility gains most by deviating, on the grid.

use hotelling_core::closed_form::placement_positions;
use hotelling_core::discrete::facility_improvement_empirical;
use hotelling_core::{
    build_grid, empirical_client_equilibrium, ClientGrid, DiscretePlacement, PlacementKind,
    SimConfig,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::export::{Cell, Table};
use crate::sweep::SweepError;
use crate::values::PrecisionRule;

/// Factors this close to the maximum count as attaining it.
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureCell {
    pub n: usize,
    pub alpha: f64,
    pub precision: usize,
    /// Per facility, sorted order.
    pub factors: Vec<f64>,
    pub best_slots: Vec<usize>,
    /// 1-based facilities attaining the largest factor.
    pub argmax: Vec<usize>,
    /// 1-based facilities the prediction allows.
    pub allowed: Vec<usize>,
    /// No facility gains anything, so any facility is consistent.
    pub vacuous: bool,
    pub pass: bool,
    /// For the first argmax facility after its best move: the new slot minus
    /// the slot of its own client closest to the market centre.
    pub inner_border_offset: Option<i64>,
    pub error: Option<String>,
}

impl ConjectureCell {
    /// Best slot within one slot of the inner border of the deviator's new
    /// client interval.
    pub fn at_inner_border(&self) -> Option<bool> {
        self.inner_border_offset.map(|d| d.abs() <= 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub kind: PlacementKind,
    pub cells: Vec<ConjectureCell>,
    pub passed: usize,
    pub failed: usize,
}

impl ConjectureReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }

    /// One row per facility and cell. The inner-border flag describes the
    /// cell's first argmax facility.
    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "n",
            "alpha",
            "P",
            "facility_index",
            "improvement_factor",
            "best_slot",
            "is_argmax",
            "allowed",
            "cell_pass",
            "best_at_inner_border",
        ]);
        for c in &self.cells {
            for (i, (&f, &slot)) in c.factors.iter().zip(&c.best_slots).enumerate() {
                let idx = i + 1;
                t.push(vec![
                    c.n.into(),
                    c.alpha.into(),
                    c.precision.into(),
                    idx.into(),
                    f.into(),
                    (slot + 1).into(),
                    Cell::Int(c.argmax.contains(&idx) as i64),
                    Cell::Int(c.allowed.contains(&idx) as i64),
                    Cell::Int(c.pass as i64),
                    c.at_inner_border().map(|b| b as i64).into(),
                ]);
            }
        }
        t
    }
}

/// Facilities predicted to gain most: the two outermost for the spread
/// placement, the four outermost for the paired one (1-based).
pub fn allowed_facilities(kind: PlacementKind, n: usize) -> Vec<usize> {
    let mut v = match kind {
        PlacementKind::Opt => vec![1, n],
        PlacementKind::Pair => vec![1, 2, n.saturating_sub(1).max(1), n],
    };
    v.sort_unstable();
    v.dedup();
    v
}

fn inner_border_slot(choice: &[usize], slots: &[usize], at: usize, grid: &ClientGrid) -> Option<usize> {
    choice
        .iter()
        .enumerate()
        .filter(|&(_, &f)| slots[f] == at)
        .map(|(c, _)| c)
        .min_by(|&a, &b| {
            let da = (grid.position(a) - 0.5).abs();
            let db = (grid.position(b) - 0.5).abs();
            da.total_cmp(&db)
        })
}

fn check_cell(
    kind: PlacementKind,
    n: usize,
    alpha: f64,
    precision: usize,
) -> hotelling_core::Result<ConjectureCell> {
    let grid = build_grid(precision)?;
    let dp = DiscretePlacement::from_positions(&placement_positions(kind, n)?, &grid)?;
    let cfg = SimConfig::default();
    let results = (0..n)
        .into_par_iter()
        .map(|j| facility_improvement_empirical(&dp, j, &grid, alpha, &cfg))
        .collect::<hotelling_core::Result<Vec<_>>>()?;
    let factors: Vec<f64> = results.iter().map(|r| r.improvement_factor).collect();
    let best_slots: Vec<usize> = results
        .iter()
        .map(|r| r.best_slot.expect("discrete scans report a slot"))
        .collect();
    let top = factors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax: Vec<usize> = factors
        .iter()
        .enumerate()
        .filter(|&(_, &f)| f >= top - TIE)
        .map(|(i, _)| i + 1)
        .collect();
    let allowed = allowed_facilities(kind, n);
    let vacuous = top <= 1.0 + TIE;
    let pass = vacuous || argmax.iter().all(|i| allowed.contains(i));

    let j = argmax[0] - 1;
    let best = best_slots[j];
    let mut moved = dp.slots().to_vec();
    moved[j] = best;
    let after = DiscretePlacement::new(moved, &grid)?;
    let assignment = empirical_client_equilibrium(&after, &grid, alpha, &cfg)?;
    let inner_border_offset = inner_border_slot(&assignment.choice, after.slots(), best, &grid)
        .map(|inner| best as i64 - inner as i64);

    Ok(ConjectureCell {
        n,
        alpha,
        precision,
        factors,
        best_slots,
        argmax,
        allowed,
        vacuous,
        pass,
        inner_border_offset,
        error: None,
    })
}

/// Scans every facility of the canonical placement in each `(n, alpha)` cell
/// and checks that the largest factor belongs to an outermost facility.
pub fn verify_conjectures(
    kind: PlacementKind,
    n_values: &[usize],
    alphas: &[f64],
    precision: PrecisionRule,
    workers: usize,
) -> Result<ConjectureReport, SweepError> {
    precision.validate().map_err(SweepError::Invalid)?;
    if n_values.is_empty() || alphas.is_empty() {
        return Err(SweepError::Invalid("nothing to verify".into()));
    }
    let cells: Vec<(usize, f64)> = n_values
        .iter()
        .flat_map(|&n| alphas.iter().map(move |&a| (n, a)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let cells: Vec<ConjectureCell> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, alpha)| {
                let p = precision.precision(n);
                check_cell(kind, n, alpha, p).unwrap_or_else(|e| ConjectureCell {
                    n,
                    alpha,
                    precision: p,
                    factors: Vec::new(),
                    best_slots: Vec::new(),
                    argmax: Vec::new(),
                    allowed: allowed_facilities(kind, n),
                    vacuous: false,
                    pass: false,
                    inner_border_offset: None,
                    error: Some(e.to_string()),
                })
            })
            .collect()
    });
    let passed = cells.iter().filter(|c| c.pass).count();
    Ok(ConjectureReport {
        kind,
        failed: cells.len() - passed,
        passed,
        cells,
    })
}
