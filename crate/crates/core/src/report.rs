use serde::{Deserialize, Serialize};

use crate::deviation::BestResponse;

/// One facility's best unilateral deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityImprovement {
    /// Position in sorted order (0-based).
    pub facility: usize,
    pub current_utility: f64,
    pub best_response: BestResponse,
    /// `sup_utility / current_utility`; `+inf` for a stranded facility that
    /// can gain load.
    pub improvement_factor: f64,
    /// Winning grid slot when produced by the discrete engine.
    pub best_slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub per_facility: Vec<FacilityImprovement>,
    pub rho: f64,
}

impl ImprovementReport {
    pub(crate) fn from_facilities(per_facility: Vec<FacilityImprovement>) -> Self {
        let rho = per_facility
            .iter()
            .map(|f| f.improvement_factor)
            .fold(1.0, f64::max);
        Self { per_facility, rho }
    }

    /// Facility with the largest factor; lowest index wins ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for f in &self.per_facility {
            match best {
                Some((_, v)) if f.improvement_factor <= v => {}
                _ => best = Some((f.facility, f.improvement_factor)),
            }
        }
        best.map(|(i, _)| i)
    }

    /// All facilities whose factor is within `tol` of the maximum.
    pub fn argmax_set(&self, tol: f64) -> Vec<usize> {
        let top = self
            .per_facility
            .iter()
            .map(|f| f.improvement_factor)
            .fold(f64::NEG_INFINITY, f64::max);
        self.per_facility
            .iter()
            .filter(|f| {
                if top.is_infinite() {
                    f.improvement_factor.is_infinite()
                } else {
                    f.improvement_factor >= top - tol
                }
            })
            .map(|f| f.facility)
            .collect()
    }
}

/// Ratio of best achievable to current utility.
pub(crate) fn improvement_ratio(sup_utility: f64, current: f64) -> f64 {
    if current > 0.0 {
        sup_utility / current
    } else if sup_utility > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}
