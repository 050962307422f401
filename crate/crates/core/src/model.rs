//! Market primitives: facility placements, proper client mappings (borders),
//! and the client-cost, potential and social-cost functionals.
//!
//! Clients are spread uniformly over `[0, 1]`. Under a proper mapping the
//! clients of facility `i` (in sorted order) occupy `[beta[i], beta[i + 1]]`,
//! so every integral below is evaluated in closed form one interval at a time.

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};

/// Number of facilities and the distance/congestion trade-off weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: usize,
    alpha: f64,
}

impl ModelParams {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoFacilities);
        }
        check_alpha(alpha)?;
        Ok(Self { n, alpha })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Facility locations in nondecreasing order.
///
/// Constructing from an unsorted list sorts it (stably) and keeps the
/// permutation, so `original_index(k)` names the input entry that ended up
/// at sorted position `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    positions: Vec<f64>,
    order: Vec<usize>,
}

impl Placement {
    pub fn new(positions: impl Into<Vec<f64>>) -> Result<Self> {
        let raw: Vec<f64> = positions.into();
        if raw.is_empty() {
            return Err(Error::NoFacilities);
        }
        if let Some(&bad) = raw.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::PositionOutOfRange(bad));
        }
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
        let positions = order.iter().map(|&k| raw[k]).collect();
        Ok(Self { positions, order })
    }

    /// Builds a placement from positions the caller guarantees to be sorted
    /// and inside the market.
    pub(crate) fn from_sorted_unchecked(positions: Vec<f64>) -> Self {
        debug_assert!(positions.windows(2).all(|w| w[0] <= w[1]));
        let order = (0..positions.len()).collect();
        Self { positions, order }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `permutation()[k]` is the input index of the facility at sorted position `k`.
    pub fn permutation(&self) -> &[usize] {
        &self.order
    }

    pub fn original_index(&self, sorted: usize) -> Option<usize> {
        self.order.get(sorted).copied()
    }

    pub fn sorted_index(&self, original: usize) -> Option<usize> {
        self.order.iter().position(|&o| o == original)
    }

    /// Mirror image `s -> 1 - s`, re-sorted.
    pub fn reflect(&self) -> Self {
        let positions = self.positions.iter().rev().map(|p| 1.0 - p).collect();
        Self::from_sorted_unchecked(positions)
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                len: self.len(),
            })
        }
    }
}

/// Interval breakpoints `0 = beta[0] <= beta[1] <= ... <= beta[n] = 1` of a
/// proper client mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Borders {
    beta: Vec<f64>,
}

impl Borders {
    pub fn new(beta: impl Into<Vec<f64>>) -> Result<Self> {
        let beta: Vec<f64> = beta.into();
        if beta.len() < 2 {
            return Err(Error::InvalidBorders(format!(
                "need at least 2 breakpoints, got {}",
                beta.len()
            )));
        }
        if beta[0] != 0.0 || beta[beta.len() - 1] != 1.0 {
            return Err(Error::InvalidBorders(
                "first border must be 0 and last border 1".into(),
            ));
        }
        if let Some(w) = beta.windows(2).find(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt())) {
            return Err(Error::InvalidBorders(format!(
                "borders decrease from {} to {}",
                w[0], w[1]
            )));
        }
        Ok(Self { beta })
    }

    pub(crate) fn from_vec_unchecked(beta: Vec<f64>) -> Self {
        Self { beta }
    }

    /// Equal shares `beta[i] = i / n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoFacilities);
        }
        let mut beta: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        beta[n] = 1.0;
        Ok(Self { beta })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.beta
    }

    /// Number of client intervals (= number of facilities).
    pub fn intervals(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn loads(&self) -> Vec<f64> {
        loads_from_borders(self)
    }

    pub fn reflect(&self) -> Self {
        let beta = self.beta.iter().rev().map(|b| 1.0 - b).collect();
        Self { beta }
    }
}

/// A client's cost split into its weighted distance and congestion parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// `(1 - alpha) * |s_i - z|`
    pub distance_term: f64,
    /// `alpha * load_i`
    pub congestion_term: f64,
    pub total: f64,
}

/// Consecutive differences of the borders.
pub fn loads_from_borders(borders: &Borders) -> Vec<f64> {
    borders.beta.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Cost of the client at `z` when it uses `facility`, given the current loads.
pub fn client_cost(
    z: f64,
    facility: usize,
    placement: &Placement,
    loads: &[f64],
    alpha: f64,
) -> Result<CostBreakdown> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::PositionOutOfRange(z));
    }
    placement.check_index(facility)?;
    if loads.len() != placement.len() {
        return Err(Error::LengthMismatch {
            expected: placement.len(),
            got: loads.len(),
        });
    }
    let distance_term = (1.0 - alpha) * (placement.positions[facility] - z).abs();
    let congestion_term = alpha * loads[facility];
    Ok(CostBreakdown {
        distance_term,
        congestion_term,
        total: distance_term + congestion_term,
    })
}

/// `int_a^b |x - s| dx` for `a <= b`; antisymmetric in `(a, b)` otherwise.
pub fn interval_distance(s: f64, a: f64, b: f64) -> f64 {
    fn antiderivative(u: f64) -> f64 {
        0.5 * u * u.abs()
    }
    antiderivative(b - s) - antiderivative(a - s)
}

fn check_pair(placement: &Placement, borders: &Borders, alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    if borders.intervals() != placement.len() {
        return Err(Error::LengthMismatch {
            expected: placement.len() + 1,
            got: borders.beta.len(),
        });
    }
    Ok(())
}

pub(crate) fn total_distance(positions: &[f64], beta: &[f64]) -> f64 {
    positions
        .iter()
        .zip(beta.windows(2))
        .map(|(&s, w)| interval_distance(s, w[0], w[1]))
        .sum()
}

pub(crate) fn potential_raw(positions: &[f64], beta: &[f64], alpha: f64) -> f64 {
    let congestion: f64 = beta.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() * 0.5;
    (1.0 - alpha) * total_distance(positions, beta) + alpha * congestion
}

/// Exact potential `(1-a) * int |s_f(x) - x| dx + a * sum(l_i^2) / 2` of a
/// proper mapping.
pub fn potential(placement: &Placement, borders: &Borders, alpha: f64) -> Result<f64> {
    check_pair(placement, borders, alpha)?;
    Ok(potential_raw(&placement.positions, &borders.beta, alpha))
}

/// Total client cost `int C_z dz` under the given proper mapping.
pub fn social_cost(placement: &Placement, borders: &Borders, alpha: f64) -> Result<f64> {
    check_pair(placement, borders, alpha)?;
    let congestion: f64 = borders.beta.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok((1.0 - alpha) * total_distance(&placement.positions, &borders.beta) + alpha * congestion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn loads_examples() {
        let b = Borders::new(vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert_eq!(b.loads(), vec![0.25; 4]);
        assert_eq!(Borders::new(vec![0.0, 1.0]).unwrap().loads(), vec![1.0]);
        let b = Borders::new(vec![0.0, 0.3, 0.3, 1.0]).unwrap();
        let l = b.loads();
        assert_abs_diff_eq!(l[0], 0.3);
        assert_eq!(l[1], 0.0);
        assert_abs_diff_eq!(l[2], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn borders_reject_bad_input() {
        assert!(Borders::new(vec![0.0, 0.6, 0.4, 1.0]).is_err());
        assert!(Borders::new(vec![0.1, 1.0]).is_err());
        assert!(Borders::new(vec![0.0, 0.9]).is_err());
        assert!(Borders::new(vec![0.0]).is_err());
    }

    #[test]
    fn placement_sorts_and_keeps_permutation() {
        let p = Placement::new(vec![0.7, 0.1, 0.4]).unwrap();
        assert_eq!(p.positions(), &[0.1, 0.4, 0.7]);
        assert_eq!(p.permutation(), &[1, 2, 0]);
        assert_eq!(p.original_index(0), Some(1));
        assert_eq!(p.sorted_index(0), Some(2));
        assert!(Placement::new(vec![0.5, 1.2]).is_err());
        assert!(Placement::new(Vec::<f64>::new()).is_err());
        assert!(Placement::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn model_params_validate() {
        assert!(ModelParams::new(3, 0.5).is_ok());
        assert!(ModelParams::new(0, 0.5).is_err());
        assert!(ModelParams::new(2, 1.5).is_err());
    }

    #[test]
    fn client_cost_examples() {
        let p = Placement::new(vec![0.0, 0.25, 0.8]).unwrap();
        let loads = [0.1, 0.375, 0.525];
        let c = client_cost(0.375, 1, &p, &loads, 0.0).unwrap();
        assert_abs_diff_eq!(c.total, 0.125);
        let c = client_cost(0.375, 1, &p, &loads, 1.0).unwrap();
        assert_abs_diff_eq!(c.total, 0.375);
        assert!(client_cost(0.5, 3, &p, &loads, 0.5).is_err());
        assert!(client_cost(1.5, 0, &p, &loads, 0.5).is_err());
    }

    #[test]
    fn boundary_client_of_three_facility_construction_is_indifferent() {
        for &alpha in &[0.0, 0.3, 0.7] {
            let s1 = 0.27;
            let beta1 = (1.0 + alpha + 2.0 * s1 - 2.0 * alpha * s1) / (4.0 + 2.0 * alpha);
            let p = Placement::new(vec![s1, 0.5, 1.0 - s1]).unwrap();
            let loads = [beta1, 1.0 - 2.0 * beta1, beta1];
            let left = client_cost(beta1, 0, &p, &loads, alpha).unwrap().total;
            let mid = client_cost(beta1, 1, &p, &loads, alpha).unwrap().total;
            assert_abs_diff_eq!(left, mid, epsilon = 1e-14);
        }
    }

    #[test]
    fn potential_single_facility() {
        let p = Placement::new(vec![0.5]).unwrap();
        let b = Borders::uniform(1).unwrap();
        assert_abs_diff_eq!(potential(&p, &b, 0.0).unwrap(), 0.25);
        assert_abs_diff_eq!(potential(&p, &b, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn social_cost_single_facility() {
        let p = Placement::new(vec![0.5]).unwrap();
        let b = Borders::uniform(1).unwrap();
        assert_abs_diff_eq!(social_cost(&p, &b, 0.5).unwrap(), 0.625);
    }

    #[test]
    fn interval_distance_is_antisymmetric() {
        assert_abs_diff_eq!(interval_distance(0.3, 0.0, 1.0), 0.29);
        assert_abs_diff_eq!(
            interval_distance(0.3, 0.9, 0.2),
            -interval_distance(0.3, 0.2, 0.9)
        );
    }
}
