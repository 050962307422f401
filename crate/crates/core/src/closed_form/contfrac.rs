use serde::{Deserialize, Serialize};

use super::PlacementKind;
use crate::error::{check_alpha, Error, Result};

/// Constant partial numerator of the continued fraction `t / (1 + t / (1 + ...))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContFracKind {
    /// `t = -alpha^2 / 4`
    Tilde,
    /// `t = -alpha / 4`
    Hat,
}

impl ContFracKind {
    fn term(self, alpha: f64) -> f64 {
        match self {
            ContFracKind::Tilde => -alpha * alpha / 4.0,
            ContFracKind::Hat => -alpha / 4.0,
        }
    }
}

const SINGULAR: f64 = 1e-14;

/// Depth-`m` fraction, evaluated bottom-up: `K^1 = t`, `K^m = t / (1 + K^{m-1})`.
///
/// Depth 0 is the empty fraction, `0`.
pub fn cont_frac(kind: ContFracKind, m: usize, alpha: f64) -> Result<f64> {
    let t = kind.term(alpha);
    let mut k: f64 = 0.0;
    for depth in 1..=m {
        let den = 1.0 + k;
        if den.abs() < SINGULAR {
            return Err(Error::Singularity { depth });
        }
        k = t / den;
    }
    Ok(k)
}

/// `1 / (1 + K^{j-1})` for `j = 1..=m`, the factors of `K^j / t`.
fn unit_factors(kind: ContFracKind, m: usize, alpha: f64) -> Result<Vec<f64>> {
    let t = kind.term(alpha);
    let mut out = Vec::with_capacity(m);
    let mut k: f64 = 0.0;
    for depth in 1..=m {
        let den = 1.0 + k;
        if den.abs() < SINGULAR {
            return Err(Error::Singularity { depth });
        }
        out.push(1.0 / den);
        k = t / den;
    }
    Ok(out)
}

/// Approximation factor of the canonical placement for general `n`, assuming
/// the outermost facility (Opt) or the outer pair (Pair) has the best
/// deviation.
///
/// Products of fraction depths are divided by powers of `alpha` analytically,
/// so `alpha = 0` evaluates without a `0 / 0`.
pub fn rho_general(kind: PlacementKind, n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    match kind {
        PlacementKind::Opt if n >= 4 => rho_opt(n, alpha),
        PlacementKind::Pair if n >= 4 && n.is_multiple_of(2) => rho_pair(n, alpha),
        _ => Err(Error::UnsupportedSize {
            kind: kind.name(),
            n,
        }),
    }
}

fn rho_opt(n: usize, a: f64) -> Result<f64> {
    let nf = n as f64;
    // q[j] = -(2 / a) K~^j = (a / 2) / (1 + K~^{j-1})
    let u = unit_factors(ContFracKind::Tilde, n - 2, a)?;
    let q = |j: usize| 0.5 * a * u[j - 1];
    let prod = |lo: usize, hi: usize| (lo..=hi).map(q).product::<f64>();
    let w = (1.0 - a) / (1.0 + a);

    let mut sum = w * 3.0 / (2.0 * nf);
    for k in 2..n {
        sum += w * 2.0 * k as f64 / nf * prod(n - k, n - 2);
    }
    sum += a / (1.0 + a) * prod(1, n - 2);

    let k_top = cont_frac(ContFracKind::Tilde, n - 2, a)?;
    Ok(nf / (1.0 + 2.0 / (1.0 + a) * k_top) * sum)
}

fn rho_pair(n: usize, a: f64) -> Result<f64> {
    let nf = n as f64;
    let u = unit_factors(ContFracKind::Hat, n - 3, a)?;
    // prod_{j=lo..hi} K^^j / a^p, with K^^j = (-a / 4) u_j.
    let scaled = |lo: usize, hi: usize, p: usize| {
        let count = hi + 1 - lo;
        let base: f64 = (lo..=hi).map(|j| -0.25 * u[j - 1]).product();
        base * a.powi((count - p) as i32)
    };
    let k_top = cont_frac(ContFracKind::Hat, n - 3, a)?;
    let damp = 1.0 / (1.0 + 2.0 / (1.0 + a) * k_top);

    let mut inner = 0.0;
    for k in 2..n / 2 {
        let sign = (-2.0f64).powi(2 * k as i32 - 3);
        inner += sign * 2.0 * (1.0 - a) * k as f64 / nf * scaled(n - 2 * k, n - 3, k - 1);
    }
    let tail = (-2.0f64).powi(n as i32 - 4) * scaled(1, n - 3, (n - 4) / 2);

    let beta1 = 1.0 / (1.0 - a / (2.0 * (a + 1.0 + 2.0 * k_top)))
        * ((1.0 - a) / (2.0 * nf) + (1.0 - a) / (2.0 * (a + 1.0)) * damp * 3.0 / nf
            - 2.0 / (a + 1.0) * damp * (inner + 0.5 * tail));
    let beta2 = damp
        * (a / (1.0 + a) * beta1 + (1.0 - a) / (1.0 + a) * 3.0 / nf - 4.0 / (1.0 + a) * inner
            - 2.0 / (1.0 + a) * tail);
    Ok(nf * (beta2 - beta1))
}
