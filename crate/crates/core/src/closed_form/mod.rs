//! Analytic placements and approximation factors.

mod contfrac;
mod tables;

pub use contfrac::{cont_frac, rho_general, ContFracKind};
pub use tables::{rho_small, rho_small_printed, small_formula, FormulaStatus, SmallFormula};

use serde::{Deserialize, Serialize};

use crate::error::{check_alpha, Error, Result};
use crate::model::Placement;

/// The two canonical placements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlacementKind {
    /// Evenly spread, `s_i = (2i - 1) / 2n`.
    Opt,
    /// Co-located pairs at `(2i - 1) / 2k`; odd `n` drops one member of the
    /// middle pair.
    Pair,
}

impl PlacementKind {
    pub fn name(self) -> &'static str {
        match self {
            PlacementKind::Opt => "opt",
            PlacementKind::Pair => "pair",
        }
    }

    pub fn min_n(self) -> usize {
        1
    }
}

impl std::fmt::Display for PlacementKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PlacementKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "opt" => Ok(PlacementKind::Opt),
            "pair" => Ok(PlacementKind::Pair),
            other => Err(format!("unknown placement kind `{other}` (expected opt or pair)")),
        }
    }
}

/// Canonical sorted positions for `kind` with `n` facilities.
pub fn placement_positions(kind: PlacementKind, n: usize) -> Result<Vec<f64>> {
    if n < kind.min_n() {
        return Err(Error::UnsupportedSize {
            kind: kind.name(),
            n,
        });
    }
    Ok(match kind {
        PlacementKind::Opt => (1..=n)
            .map(|i| (2 * i - 1) as f64 / (2 * n) as f64)
            .collect(),
        PlacementKind::Pair => {
            let k = n.div_ceil(2);
            let mut full: Vec<f64> = (1..=2 * k)
                .map(|j| (2 * j.div_ceil(2) - 1) as f64 / (2 * k) as f64)
                .collect();
            if n % 2 == 1 {
                // Keep s_1..s_k and s_{k+2}..s_{2k}.
                full.remove(k);
            }
            full
        }
    })
}

pub fn placement(kind: PlacementKind, n: usize) -> Result<Placement> {
    placement_positions(kind, n).map(Placement::from_sorted_unchecked)
}

/// Social cost of the evenly spread placement, which is the social optimum.
pub fn sc_opt(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(Error::NoFacilities);
    }
    Ok((1.0 + 3.0 * alpha) / (4.0 * n as f64))
}

/// Quality of the paired placement: the exact ratio for even `n`, an upper
/// bound (flag `false`) for odd `n`.
pub fn quality_pair(n: usize, alpha: f64) -> Result<(f64, bool)> {
    check_alpha(alpha)?;
    if n < 2 {
        return Err(Error::UnsupportedSize { kind: "pair", n });
    }
    if n.is_multiple_of(2) {
        Ok(((2.0 * alpha + 2.0) / (3.0 * alpha + 1.0), true))
    } else {
        let nf = n as f64;
        Ok((
            8.0 * (1.0 + alpha) * nf * nf / ((1.0 + 3.0 * alpha) * (1.0 + nf) * (1.0 + nf)),
            false,
        ))
    }
}

/// Which printed radicand to use for the three-facility construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadicandVariant {
    /// `17 + a(16 + 2a + a^2)`
    Square,
    /// `17 + a(16 + 2a + a^3)`
    Cube,
}

/// Variant validated against the numeric solver.
pub const RHO_THREE_VARIANT: RadicandVariant = RadicandVariant::Cube;

/// Approximation factor and first position `s1` of the symmetric
/// three-facility placement `(s1, 1/2, 1 - s1)`.
pub fn rho_three(alpha: f64) -> Result<(f64, f64)> {
    rho_three_variant(alpha, RHO_THREE_VARIANT)
}

pub fn rho_three_variant(alpha: f64, variant: RadicandVariant) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let a = alpha;
    if a == 1.0 {
        return Ok((1.0, 0.5));
    }
    let tail = match variant {
        RadicandVariant::Square => a * a,
        RadicandVariant::Cube => a * a * a,
    };
    let root = (17.0 + a * (16.0 + 2.0 * a + tail)).sqrt();
    let rho = (1.0 - a * a + root) / (4.0 - 2.0 * (a - 2.0) * a);
    let s1 = (-3.0 + (a - 4.0) * a + root) / (4.0 * (a - 1.0) * (a - 1.0));
    Ok((rho, s1))
}
