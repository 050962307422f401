//! Unilateral facility deviations in the continuous market.
//!
//! A deviating facility's utility is continuous in its location except where
//! it meets a competitor, so the supremum can be a one-sided limit. The
//! search combines a uniform grid, every competitor location together with
//! extrapolated one-sided limits there, and golden-section refinement of each
//! sampled local maximum inside its continuity piece.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{indifference_residuals, max_active_residual, solve_sorted};
use crate::error::{check_alpha, check_tol, Error, Result};
use crate::model::Placement;
use crate::report::{improvement_ratio, FacilityImprovement, ImprovementReport};

/// Coarsest scan grid accepted by [`best_response`].
pub const MIN_GRID: usize = 64;

/// Grid used by callers that do not pick one.
pub const DEFAULT_GRID: usize = 256;

const GOLDEN_STEPS: usize = 48;
const MAX_REFINED: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseSide {
    /// The supremum is attained at `location`.
    Interior,
    /// Approached as the location tends to `location` from below.
    LeftLimit,
    /// Approached as the location tends to `location` from above.
    RightLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub location: f64,
    pub sup_utility: f64,
    pub attained: bool,
    pub side: ResponseSide,
}

/// Load of facility `i` (sorted index) after it moves to `new_location`.
pub fn deviation_utility(
    placement: &Placement,
    i: usize,
    new_location: f64,
    alpha: f64,
    tol: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    placement.check_index(i)?;
    if !(0.0..=1.0).contains(&new_location) {
        return Err(Error::PositionOutOfRange(new_location));
    }
    Deviator::new(placement.positions(), i, alpha, tol).utility(new_location)
}

/// Supremum of the deviation utility of facility `i` over the whole market.
pub fn best_response(
    placement: &Placement,
    i: usize,
    alpha: f64,
    grid: usize,
    tol: f64,
) -> Result<BestResponse> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    placement.check_index(i)?;
    if grid < MIN_GRID {
        return Err(Error::GridTooCoarse {
            got: grid,
            min: MIN_GRID,
        });
    }
    let mut dev = Deviator::new(placement.positions(), i, alpha, tol);
    let stay = placement.positions()[i];
    let current = dev.utility(stay)?;
    dev.search(stay, current, grid)
}

/// Per-facility improvement factors and the placement's factor `rho`.
pub fn improvement_factors(
    placement: &Placement,
    alpha: f64,
    grid: usize,
    tol: f64,
) -> Result<ImprovementReport> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    if grid < MIN_GRID {
        return Err(Error::GridTooCoarse {
            got: grid,
            min: MIN_GRID,
        });
    }
    let positions = placement.positions();
    let base = solve_checked(positions, alpha, tol)?;
    let mut per_facility = Vec::with_capacity(positions.len());
    for i in 0..positions.len() {
        let current = base[i + 1] - base[i];
        let mut dev = Deviator::new(positions, i, alpha, tol);
        let best = dev.search(positions[i], current, grid)?;
        per_facility.push(FacilityImprovement {
            facility: i,
            current_utility: current,
            improvement_factor: improvement_ratio(best.sup_utility, current),
            best_response: best,
            best_slot: None,
        });
    }
    Ok(ImprovementReport::from_facilities(per_facility))
}

/// Largest improvement factor over all facilities.
pub fn approximation_factor(placement: &Placement, alpha: f64, grid: usize, tol: f64) -> Result<f64> {
    Ok(improvement_factors(placement, alpha, grid, tol)?.rho)
}

fn solve_checked(positions: &[f64], alpha: f64, tol: f64) -> Result<Vec<f64>> {
    let raw = solve_sorted(positions, alpha, tol, None);
    if raw.converged {
        Ok(raw.beta)
    } else {
        let res = indifference_residuals(positions, &raw.beta, alpha);
        Err(Error::NotConverged {
            iterations: raw.iterations,
            residual: max_active_residual(&raw.beta, &res),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    x: f64,
    u: f64,
}

fn better(a: Candidate, b: Candidate) -> bool {
    a.u > b.u || (a.u == b.u && a.x < b.x)
}

struct Deviator {
    others: Vec<f64>,
    alpha: f64,
    tol: f64,
    buf: Vec<f64>,
}

impl Deviator {
    fn new(positions: &[f64], i: usize, alpha: f64, tol: f64) -> Self {
        let mut others = positions.to_vec();
        others.remove(i);
        Self {
            buf: Vec::with_capacity(positions.len()),
            others,
            alpha,
            tol,
        }
    }

    fn utility(&mut self, x: f64) -> Result<f64> {
        let k = self.others.partition_point(|&p| p < x);
        self.buf.clear();
        self.buf.extend_from_slice(&self.others[..k]);
        self.buf.push(x);
        self.buf.extend_from_slice(&self.others[k..]);
        let beta = solve_checked(&self.buf, self.alpha, self.tol)?;
        Ok(beta[k + 1] - beta[k])
    }

    fn search(&mut self, stay: f64, current: f64, grid: usize) -> Result<BestResponse> {
        if self.others.is_empty() {
            return Ok(BestResponse {
                location: stay,
                sup_utility: 1.0,
                attained: true,
                side: ResponseSide::Interior,
            });
        }
        let mut competitors = self.others.clone();
        competitors.dedup();

        // Attained samples, kept sorted by location.
        let mut samples: Vec<Candidate> = Vec::with_capacity(grid + 1 + 3 * competitors.len());
        for j in 0..=grid {
            let x = j as f64 / grid as f64;
            samples.push(Candidate { x, u: self.utility(x)? });
        }

        let mut best_limit: Option<(Candidate, ResponseSide, f64)> = None;
        for (k, &c) in competitors.iter().enumerate() {
            let at_point = self.utility(c)?;
            samples.push(Candidate { x: c, u: at_point });
            let below = if k == 0 { 0.0 } else { competitors[k - 1] };
            let above = competitors.get(k + 1).copied().unwrap_or(1.0);
            for (gap, sign, side) in [
                (c - below, -1.0, ResponseSide::LeftLimit),
                (above - c, 1.0, ResponseSide::RightLimit),
            ] {
                if gap <= 0.0 {
                    continue;
                }
                let e1 = (gap / 4.0).min(1e-6);
                let e2 = e1 / 100.0;
                let p1 = Candidate { x: c + sign * e1, u: self.utility(c + sign * e1)? };
                let p2 = Candidate { x: c + sign * e2, u: self.utility(c + sign * e2)? };
                samples.push(p1);
                samples.push(p2);
                let limit = p2.u + (p2.u - p1.u) * e2 / (e1 - e2);
                let cand = Candidate { x: c, u: limit };
                match best_limit {
                    Some((b, _, _)) if !better(cand, b) => {}
                    _ => best_limit = Some((cand, side, at_point)),
                }
            }
        }
        samples.sort_by(|a, b| a.x.total_cmp(&b.x));
        samples.dedup_by(|a, b| a.x == b.x);

        let mut best = Candidate { x: stay, u: current };
        for &s in &samples {
            if better(s, best) {
                best = s;
            }
        }

        // Local maxima of the sampled profile, refined inside their bracket.
        let mut peaks: Vec<usize> = (0..samples.len())
            .filter(|&j| {
                let left = j == 0 || samples[j - 1].u <= samples[j].u;
                let right = j + 1 == samples.len() || samples[j + 1].u <= samples[j].u;
                left && right
            })
            .collect();
        peaks.sort_by(|&a, &b| samples[b].u.total_cmp(&samples[a].u).then(a.cmp(&b)));
        peaks.truncate(MAX_REFINED);
        for j in peaks {
            let lo = if j == 0 { samples[j].x } else { samples[j - 1].x };
            let hi = if j + 1 == samples.len() { samples[j].x } else { samples[j + 1].x };
            for (a, b) in [(lo, samples[j].x), (samples[j].x, hi)] {
                if b > a {
                    let cand = self.golden(a, b)?;
                    if better(cand, best) {
                        best = cand;
                    }
                }
            }
        }

        if let Some((limit, side, at_point)) = best_limit {
            let slack = 10.0 * self.tol;
            // Refinement may creep up on a limit; it is still a limit if the
            // value at the competitor itself falls short.
            let creeping = limit.u >= best.u - slack
                && (best.x - limit.x).abs() <= 1e-6
                && at_point < limit.u - slack;
            if limit.u > best.u + slack || creeping {
                return Ok(BestResponse {
                    location: limit.x,
                    sup_utility: limit.u.max(best.u),
                    attained: false,
                    side,
                });
            }
        }
        Ok(BestResponse {
            location: best.x,
            sup_utility: best.u,
            attained: true,
            side: ResponseSide::Interior,
        })
    }

    /// Golden-section maximisation on the open interval `(a, b)`.
    fn golden(&mut self, mut a: f64, mut b: f64) -> Result<Candidate> {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut u1 = self.utility(x1)?;
        let mut u2 = self.utility(x2)?;
        for _ in 0..GOLDEN_STEPS {
            if b - a <= 1e-13 {
                break;
            }
            if u1 >= u2 {
                b = x2;
                x2 = x1;
                u2 = u1;
                x1 = b - INV_PHI * (b - a);
                u1 = self.utility(x1)?;
            } else {
                a = x1;
                x1 = x2;
                u1 = u2;
                x2 = a + INV_PHI * (b - a);
                u2 = self.utility(x2)?;
            }
        }
        Ok(if u2 > u1 {
            Candidate { x: x2, u: u2 }
        } else {
            Candidate { x: x1, u: u1 }
        })
    }
}
