//! Checks the tabulated small-`n` factors against the numeric solver.

use hotelling_core::closed_form::{rho_small_printed, small_formula, FormulaStatus};
use hotelling_core::{approximation_factor, placement, rho_small, PlacementKind, DEFAULT_GRID, DEFAULT_TOL};
use serde::Serialize;

use crate::export::{Cell, Table};

/// Largest accepted gap between a formula and the solver.
pub const AGREEMENT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormulaCheck {
    pub kind: PlacementKind,
    pub n: usize,
    pub printed: &'static str,
    /// Published text unusable as printed; the repaired form is evaluated.
    pub corrupted: bool,
    pub repair: Option<&'static str>,
    /// Largest `|formula - solver|` over the alpha grid.
    pub max_error: f64,
    /// Same for the literal text, when it parses at all.
    pub literal_max_error: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormReport {
    pub alphas: Vec<f64>,
    pub checks: Vec<FormulaCheck>,
}

impl ClosedFormReport {
    pub fn corrupted(&self) -> impl Iterator<Item = &FormulaCheck> {
        self.checks.iter().filter(|c| c.corrupted)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new([
            "kind",
            "n",
            "status",
            "max_error",
            "literal_max_error",
            "pass",
            "repair",
            "printed",
        ]);
        for c in &self.checks {
            t.push(vec![
                c.kind.name().into(),
                c.n.into(),
                if c.corrupted { "corrupted" } else { "verbatim" }.into(),
                c.max_error.into(),
                match (c.literal_max_error, c.corrupted) {
                    (Some(e), _) => Cell::Float(e),
                    (None, true) => "unparseable".into(),
                    (None, false) => Cell::Empty,
                },
                Cell::Int(c.pass as i64),
                c.repair.into(),
                c.printed.into(),
            ]);
        }
        t
    }
}

/// Compares every tabulated formula, `4 <= n <= 10`, with the solver's
/// approximation factor of the same placement.
pub fn validate_closed_forms(alphas: &[f64]) -> hotelling_core::Result<ClosedFormReport> {
    let mut checks = Vec::new();
    for kind in [PlacementKind::Opt, PlacementKind::Pair] {
        for n in 4..=10 {
            let info = small_formula(kind, n)?;
            let p = placement(kind, n)?;
            let mut max_error: f64 = 0.0;
            let mut literal: Option<f64> = Some(0.0);
            for &a in alphas {
                let numeric = approximation_factor(&p, a, DEFAULT_GRID, DEFAULT_TOL)?;
                max_error = max_error.max((rho_small(kind, n, a)? - numeric).abs());
                literal = match (literal, rho_small_printed(kind, n, a)?) {
                    (Some(m), Some(v)) => Some(m.max((v - numeric).abs())),
                    _ => None,
                };
            }
            checks.push(FormulaCheck {
                kind,
                n,
                printed: info.printed,
                corrupted: info.status == FormulaStatus::Repaired,
                repair: info.repair,
                max_error,
                literal_max_error: literal,
                pass: max_error <= AGREEMENT_TOL,
            });
        }
    }
    Ok(ClosedFormReport {
        alphas: alphas.to_vec(),
        checks,
    })
}
