//! Agent-based discretisation of the market.
//!
//! `P` clients sit at the slot centres `z_k = (k + 1/2) / P`, `k = 0..P`, and
//! facilities may only occupy slots. Clients reach an empirical client
//! equilibrium through round-robin best responses; a facility's best response
//! is found by trying every slot.

mod engine;

pub use engine::ActivationOrder;

use serde::{Deserialize, Serialize};

use crate::deviation::{BestResponse, ResponseSide};
use crate::error::{check_alpha, Error, Result};
use crate::report::{improvement_ratio, FacilityImprovement, ImprovementReport};
use engine::Engine;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientGrid {
    precision: usize,
    positions: Vec<f64>,
}

impl ClientGrid {
    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, slot: usize) -> f64 {
        self.positions[slot]
    }

    /// Nearest slot to a market coordinate. Exact halfway cases round
    /// towards the market centre, and to the lower slot at the centre itself,
    /// so snapping commutes with reflection away from the centre.
    pub fn nearest_slot(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::PositionOutOfRange(x));
        }
        let t = x * self.precision as f64 - 0.5;
        let lower = t.floor();
        let slot = if (t - lower - 0.5).abs() < 1e-9 {
            if x < 0.5 {
                lower + 1.0
            } else {
                lower
            }
        } else {
            t.round()
        };
        Ok((slot.max(0.0) as usize).min(self.precision - 1))
    }
}

pub fn build_grid(precision: usize) -> Result<ClientGrid> {
    if precision == 0 {
        return Err(Error::EmptyGrid);
    }
    let p = precision as f64;
    Ok(ClientGrid {
        precision,
        positions: (0..precision).map(|k| (2 * k + 1) as f64 / (2.0 * p)).collect(),
    })
}

/// Facilities on grid slots, sorted by slot (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscretePlacement {
    slots: Vec<usize>,
}

impl DiscretePlacement {
    pub fn new(mut slots: Vec<usize>, grid: &ClientGrid) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::NoFacilities);
        }
        if let Some(&bad) = slots.iter().find(|&&s| s >= grid.precision) {
            return Err(Error::SlotOutOfRange {
                slot: bad,
                precision: grid.precision,
            });
        }
        if slots.len() > grid.precision {
            return Err(Error::LengthMismatch {
                expected: grid.precision,
                got: slots.len(),
            });
        }
        slots.sort_unstable();
        Ok(Self { slots })
    }

    /// Snaps continuous positions to their nearest slots.
    pub fn from_positions(positions: &[f64], grid: &ClientGrid) -> Result<Self> {
        let slots = positions
            .iter()
            .map(|&x| grid.nearest_slot(x))
            .collect::<Result<Vec<_>>>()?;
        Self::new(slots, grid)
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// Facility index chosen by each client.
    pub choice: Vec<usize>,
    pub counts: Vec<usize>,
}

impl Assignment {
    pub fn loads(&self) -> Vec<f64> {
        let p = self.choice.len() as f64;
        self.counts.iter().map(|&c| c as f64 / p).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    /// Round budget per equilibration; `None` means `50 * P`.
    pub max_rounds: Option<usize>,
    pub order: ActivationOrder,
    /// Visit only clients that would switch. Does not change results.
    pub skip_inactive: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            max_rounds: None,
            order: ActivationOrder::Ascending,
            skip_inactive: true,
        }
    }
}

impl SimConfig {
    fn rounds_for(&self, precision: usize) -> usize {
        self.max_rounds.unwrap_or(50 * precision).max(1)
    }
}

fn check_inputs(placement: &DiscretePlacement, grid: &ClientGrid, alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    if let Some(&bad) = placement.slots.iter().find(|&&s| s >= grid.precision) {
        return Err(Error::SlotOutOfRange {
            slot: bad,
            precision: grid.precision,
        });
    }
    Ok(())
}

fn settled_engine(
    placement: &DiscretePlacement,
    grid: &ClientGrid,
    alpha: f64,
    cfg: &SimConfig,
) -> Result<Engine> {
    check_inputs(placement, grid, alpha)?;
    let mut engine = Engine::new(
        placement.slots.clone(),
        grid.precision,
        alpha,
        cfg.order,
        !cfg.skip_inactive,
    );
    engine.settle(cfg.rounds_for(grid.precision))?;
    Ok(engine)
}

/// Fixed point of the round-robin client dynamics from the nearest-facility
/// assignment.
pub fn empirical_client_equilibrium(
    placement: &DiscretePlacement,
    grid: &ClientGrid,
    alpha: f64,
    cfg: &SimConfig,
) -> Result<Assignment> {
    let engine = settled_engine(placement, grid, alpha, cfg)?;
    Ok(Assignment {
        choice: engine.choice,
        counts: engine.counts,
    })
}

/// Discrete potential after every switch of the dynamics, starting with the
/// initial assignment.
pub fn potential_trace(
    placement: &DiscretePlacement,
    grid: &ClientGrid,
    alpha: f64,
    cfg: &SimConfig,
) -> Result<(Assignment, Vec<f64>)> {
    check_inputs(placement, grid, alpha)?;
    let mut engine = Engine::new(
        placement.slots.clone(),
        grid.precision,
        alpha,
        cfg.order,
        !cfg.skip_inactive,
    );
    let p = grid.precision as f64;
    let slots = placement.slots.clone();
    let mut counts = engine.counts.clone();
    let mut dist: usize = engine
        .choice
        .iter()
        .enumerate()
        .map(|(c, &f)| slots[f].abs_diff(c))
        .sum();
    let value = |dist: usize, counts: &[usize]| {
        let sq: f64 = counts.iter().map(|&k| (k as f64 / p).powi(2)).sum();
        (1.0 - alpha) * dist as f64 / (p * p) + alpha * sq / 2.0
    };
    let mut trace = vec![value(dist, &counts)];
    engine.settle_observed(cfg.rounds_for(grid.precision), |c, from, to| {
        dist = dist - slots[from].abs_diff(c) + slots[to].abs_diff(c);
        counts[from] -= 1;
        counts[to] += 1;
        trace.push(value(dist, &counts));
    })?;
    Ok((
        Assignment {
            choice: engine.choice,
            counts: engine.counts,
        },
        trace,
    ))
}

/// `(1 - a) * sum_k |s_choice(k) - z_k| / P + a * sum_i (count_i / P)^2 / 2`.
pub fn discrete_potential(
    placement: &DiscretePlacement,
    assignment: &Assignment,
    grid: &ClientGrid,
    alpha: f64,
) -> Result<f64> {
    check_inputs(placement, grid, alpha)?;
    if assignment.choice.len() != grid.precision {
        return Err(Error::LengthMismatch {
            expected: grid.precision,
            got: assignment.choice.len(),
        });
    }
    if assignment.counts.len() != placement.len() {
        return Err(Error::LengthMismatch {
            expected: placement.len(),
            got: assignment.counts.len(),
        });
    }
    let p = grid.precision as f64;
    let mut dist = 0.0;
    for (k, &f) in assignment.choice.iter().enumerate() {
        let s = *placement.slots.get(f).ok_or(Error::IndexOutOfRange {
            index: f,
            len: placement.len(),
        })?;
        dist += (grid.positions[s] - grid.positions[k]).abs();
    }
    let sq: f64 = assignment
        .counts
        .iter()
        .map(|&c| (c as f64 / p).powi(2))
        .sum();
    Ok((1.0 - alpha) * dist / p + alpha * sq / 2.0)
}

/// Whether no client can strictly lower its cost by switching, with the
/// target facility's load counted after the move.
pub fn is_client_equilibrium(
    placement: &DiscretePlacement,
    assignment: &Assignment,
    alpha: f64,
) -> bool {
    let w = 1.0 - alpha;
    assignment.choice.iter().enumerate().all(|(c, &a)| {
        let da = placement.slots[a].abs_diff(c) as f64;
        let la = assignment.counts[a] as f64;
        placement.slots.iter().enumerate().all(|(j, &s)| {
            j == a
                || w * (s.abs_diff(c) as f64 - da)
                    + alpha * (assignment.counts[j] as f64 + 1.0 - la)
                    >= -engine::EPS
        })
    })
}

/// Best slot for facility `j` (sorted index) and the load it achieves there.
///
/// Candidate slots are tried in ascending order, each re-equilibration warm
/// started from the previous one; the first candidate starts from the
/// equilibrium of the unchanged placement. Ties go to the lowest slot.
pub fn facility_best_response_scan(
    placement: &DiscretePlacement,
    j: usize,
    grid: &ClientGrid,
    alpha: f64,
    cfg: &SimConfig,
) -> Result<(usize, f64)> {
    if j >= placement.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: placement.len(),
        });
    }
    let engine = settled_engine(placement, grid, alpha, cfg)?;
    scan_from(engine, j, grid, cfg)
}

fn scan_from(mut engine: Engine, j: usize, grid: &ClientGrid, cfg: &SimConfig) -> Result<(usize, f64)> {
    let rounds = cfg.rounds_for(grid.precision);
    let mut best = (0, 0usize);
    for slot in 0..grid.precision {
        engine.move_facility(j, slot);
        engine.settle(rounds)?;
        if slot == 0 || engine.counts[j] > best.1 {
            best = (slot, engine.counts[j]);
        }
    }
    Ok((best.0, best.1 as f64 / grid.precision as f64))
}

/// Improvement factor of one facility against the given settled state.
fn facility_improvement(engine: &Engine, j: usize, grid: &ClientGrid, cfg: &SimConfig) -> Result<FacilityImprovement> {
    let p = grid.precision as f64;
    let current = engine.counts[j] as f64 / p;
    let (slot, utility) = scan_from(engine.clone(), j, grid, cfg)?;
    Ok(FacilityImprovement {
        facility: j,
        current_utility: current,
        best_response: BestResponse {
            location: grid.positions[slot],
            sup_utility: utility,
            attained: true,
            side: ResponseSide::Interior,
        },
        improvement_factor: improvement_ratio(utility, current),
        best_slot: Some(slot),
    })
}

/// Scan result for a single facility, as used by
/// [`improvement_factors_empirical`].
pub fn facility_improvement_empirical(
    placement: &DiscretePlacement,
    j: usize,
    grid: &ClientGrid,
    alpha: f64,
    cfg: &SimConfig,
) -> Result<FacilityImprovement> {
    if j >= placement.len() {
        return Err(Error::IndexOutOfRange {
            index: j,
            len: placement.len(),
        });
    }
    let engine = settled_engine(placement, grid, alpha, cfg)?;
    facility_improvement(&engine, j, grid, cfg)
}

/// Assembles a report from per-facility results, e.g. computed concurrently.
pub fn report_from_facilities(per_facility: Vec<FacilityImprovement>) -> ImprovementReport {
    ImprovementReport::from_facilities(per_facility)
}

pub fn improvement_factors_empirical(
    placement: &DiscretePlacement,
    grid: &ClientGrid,
    alpha: f64,
    cfg: &SimConfig,
) -> Result<ImprovementReport> {
    let engine = settled_engine(placement, grid, alpha, cfg)?;
    let per_facility = (0..placement.len())
        .map(|j| facility_improvement(&engine, j, grid, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImprovementReport::from_facilities(per_facility))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_positions() {
        assert_eq!(build_grid(2).unwrap().positions(), &[0.25, 0.75]);
        assert_eq!(build_grid(4).unwrap().positions(), &[0.125, 0.375, 0.625, 0.875]);
        assert_eq!(build_grid(0), Err(Error::EmptyGrid));
    }

    #[test]
    fn snapping_rounds_towards_the_centre() {
        let g = build_grid(2000).unwrap();
        assert_eq!(g.nearest_slot(0.25).unwrap(), 500);
        assert_eq!(g.nearest_slot(0.75).unwrap(), 1499);
        assert_eq!(g.nearest_slot(0.5).unwrap(), 999);
        assert_eq!(g.nearest_slot(0.0).unwrap(), 0);
        assert_eq!(g.nearest_slot(1.0).unwrap(), 1999);
        assert_eq!(g.nearest_slot(0.2503).unwrap(), 500);
        let g = build_grid(3000).unwrap();
        assert_eq!(g.nearest_slot(1.0 / 6.0).unwrap(), 500);
        assert_eq!(g.nearest_slot(5.0 / 6.0).unwrap(), 2499);
        assert_eq!(g.nearest_slot(g.position(1234)).unwrap(), 1234);
    }

    #[test]
    fn monopolist_takes_everyone() {
        let g = build_grid(17).unwrap();
        let p = DiscretePlacement::new(vec![3], &g).unwrap();
        let a = empirical_client_equilibrium(&p, &g, 0.4, &SimConfig::default()).unwrap();
        assert_eq!(a.counts, vec![17]);
        let phi = discrete_potential(&p, &a, &g, 0.4).unwrap();
        let direct: f64 = g.positions().iter().map(|z| (z - g.position(3)).abs()).sum::<f64>() / 17.0;
        assert_abs_diff_eq!(phi, 0.6 * direct + 0.2, epsilon = 1e-15);
    }

    #[test]
    fn evenly_spread_facilities_split_evenly() {
        for &alpha in &[0.0, 0.3, 0.7, 1.0] {
            let g = build_grid(40).unwrap();
            let p = DiscretePlacement::from_positions(&[0.125, 0.375, 0.625, 0.875], &g).unwrap();
            let a = empirical_client_equilibrium(&p, &g, alpha, &SimConfig::default()).unwrap();
            assert_eq!(a.counts, vec![10; 4]);
        }
    }

    #[test]
    fn co_located_pair_splits_at_alpha_zero() {
        let g = build_grid(20).unwrap();
        let p = DiscretePlacement::new(vec![5, 5, 14, 14], &g).unwrap();
        let a = empirical_client_equilibrium(&p, &g, 0.0, &SimConfig::default()).unwrap();
        assert_eq!(a.counts, vec![5; 4]);
        assert!(is_client_equilibrium(&p, &a, 0.0));
    }

    #[test]
    fn skipping_matches_plain_round_robin() {
        let g = build_grid(120).unwrap();
        let p = DiscretePlacement::new(vec![2, 30, 31, 80, 119], &g).unwrap();
        for &alpha in &[0.0, 0.25, 0.55, 0.9] {
            for order in [ActivationOrder::Ascending, ActivationOrder::Descending] {
                let fast = SimConfig { order, ..SimConfig::default() };
                let slow = SimConfig { order, skip_inactive: false, ..SimConfig::default() };
                let a = empirical_client_equilibrium(&p, &g, alpha, &fast).unwrap();
                let b = empirical_client_equilibrium(&p, &g, alpha, &slow).unwrap();
                assert_eq!(a, b);
                let sa = facility_best_response_scan(&p, 1, &g, alpha, &fast).unwrap();
                let sb = facility_best_response_scan(&p, 1, &g, alpha, &slow).unwrap();
                assert_eq!(sa, sb);
            }
        }
    }

    #[test]
    fn skipping_matches_plain_round_robin_on_crowded_markets() {
        let g = build_grid(60).unwrap();
        let layouts: [&[usize]; 4] = [
            &[10, 10, 30, 30, 50, 50],
            &[0, 0, 0, 59],
            &[5, 6, 7, 40, 41, 58, 59],
            &[29, 30, 30, 31],
        ];
        for slots in layouts {
            let p = DiscretePlacement::new(slots.to_vec(), &g).unwrap();
            for k in 0..=10 {
                let alpha = k as f64 / 10.0;
                for order in [ActivationOrder::Ascending, ActivationOrder::Descending] {
                    let fast = SimConfig { order, ..SimConfig::default() };
                    let slow = SimConfig { order, skip_inactive: false, ..SimConfig::default() };
                    let (a, ta) = potential_trace(&p, &g, alpha, &fast).unwrap();
                    let (b, tb) = potential_trace(&p, &g, alpha, &slow).unwrap();
                    assert_eq!(a, b);
                    assert_eq!(ta, tb);
                    for j in 0..p.len() {
                        assert_eq!(
                            facility_best_response_scan(&p, j, &g, alpha, &fast).unwrap(),
                            facility_best_response_scan(&p, j, &g, alpha, &slow).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn potential_drops_at_every_switch() {
        let g = build_grid(90).unwrap();
        let p = DiscretePlacement::new(vec![0, 1, 45, 46, 89], &g).unwrap();
        for &alpha in &[0.1, 0.5, 0.95] {
            let (a, trace) = potential_trace(&p, &g, alpha, &SimConfig::default()).unwrap();
            assert!(trace.len() > 1);
            for w in trace.windows(2) {
                assert!(w[1] < w[0]);
            }
            let phi = discrete_potential(&p, &a, &g, alpha).unwrap();
            assert_abs_diff_eq!(phi, *trace.last().unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn round_budget_is_enforced() {
        let g = build_grid(50).unwrap();
        let p = DiscretePlacement::new(vec![0, 1], &g).unwrap();
        let cfg = SimConfig { max_rounds: Some(1), ..SimConfig::default() };
        assert_eq!(
            empirical_client_equilibrium(&p, &g, 0.9, &cfg),
            Err(Error::RoundLimit { rounds: 1 })
        );
    }

    #[test]
    fn rejects_bad_slots() {
        let g = build_grid(10).unwrap();
        assert!(DiscretePlacement::new(vec![10], &g).is_err());
        assert!(DiscretePlacement::new(vec![], &g).is_err());
        let p = DiscretePlacement::new(vec![1, 2], &g).unwrap();
        assert!(facility_best_response_scan(&p, 2, &g, 0.5, &SimConfig::default()).is_err());
    }
}
