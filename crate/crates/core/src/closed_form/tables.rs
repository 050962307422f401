//! Tabulated approximation factors for `4 <= n <= 10`.
//!
//! Three of the published expressions cannot be used verbatim: two carry an
//! unmatched closing parenthesis in the denominator, and one has a dropped
//! `+` inside a nested product. Each is evaluated in its minimally repaired
//! form; the literal reading (where one exists) stays available through
//! [`rho_small_printed`] for validation reports.

use serde::Serialize;

use super::PlacementKind;
use crate::error::{check_alpha, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormulaStatus {
    /// Evaluated exactly as published.
    Verbatim,
    /// Published text is unbalanced or garbled; a minimal repair is used.
    Repaired,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallFormula {
    pub kind: PlacementKind,
    pub n: usize,
    pub printed: &'static str,
    pub status: FormulaStatus,
    /// What was changed, for repaired formulas.
    pub repair: Option<&'static str>,
}

type Eval = fn(f64) -> f64;

struct Entry {
    kind: PlacementKind,
    n: usize,
    printed: &'static str,
    used: Eval,
    literal: Option<Eval>,
    repair: Option<&'static str>,
}

const TABLE: &[Entry] = &[
    Entry {
        kind: PlacementKind::Opt,
        n: 4,
        printed: "1/2 + 2(a^2-2)/((a-1)a(4+a)-4)",
        used: opt4,
        literal: Some(opt4),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Opt,
        n: 5,
        printed: "(12+a(4+a(a(a-2)-10)))/(8+a(2+a)(4+(a-6)a))",
        used: opt5,
        literal: Some(opt5),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Opt,
        n: 6,
        printed: "1/2 + (16-16a^2+3a^4)/(16+a(16+a(a(a(5+a)-12)-20)))",
        used: opt6,
        literal: Some(opt6),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Opt,
        n: 7,
        printed: "(a(a(64+a(16+a(a(a-3)-21)))-16)-48)/(a(a(48+a(32+a((a-6)a-18))))-32)-32)",
        used: opt7,
        literal: None,
        repair: Some("denominator has one unmatched ')'; removed the fourth closing parenthesis after -18"),
    },
    Entry {
        kind: PlacementKind::Opt,
        n: 8,
        printed: "1/2 + 4(a^2-2)(8-8a^2+a^4)/(a((a-2)a(2+a)(a(a(7+a)-20)-28)-64)-64)",
        used: opt8,
        literal: Some(opt8),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Opt,
        n: 9,
        printed: "(192+a(64+a(a(4+a)(a(56+a((a-8)a-4))-24)-352)))/(128+(a-2)a(a(2+a)(48+a(48+a((a-8)a-28)))-64))",
        used: opt9,
        literal: Some(opt9),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Opt,
        n: 10,
        printed: "1/2 + (256-512a^2+336a^4-80a^6+5a^8)/(256+a(256+a(a(a(432+a(240+a(a(9a+a^2-40)-120))))-448)-576)))",
        used: opt10,
        literal: None,
        repair: Some("denominator has one unmatched ')'; removed the fourth closing parenthesis after -120"),
    },
    Entry {
        kind: PlacementKind::Pair,
        n: 4,
        printed: "(4+a-a^2)/4",
        used: pair4,
        literal: Some(pair4),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Pair,
        n: 5,
        printed: "(4+a)(a(a(3+a)-3)-4)/((2+a)(a(5a-2)-8))",
        used: pair5,
        literal: Some(pair5),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Pair,
        n: 6,
        printed: "(a(4-a(a-7))-16)/(2(a(4+a)-8))",
        used: pair6,
        literal: Some(pair6),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Pair,
        n: 7,
        printed: "(64-64a+7a^3)(16+a(2+a)(a(a-3)-2))/(2(32+a(a(a-10)-16))(16+a(a-16+a^2)))",
        used: pair7,
        literal: Some(pair7),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Pair,
        n: 8,
        printed: "(64-a(48+a(24+(a-17)a)))/(4(16+a(a-16+a^2)))",
        used: pair8,
        literal: Some(pair8),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Pair,
        n: 9,
        printed: "(32+(a-4)a(2+a)(1+2a))(a(4+3a)-16)/((a-2)(4+a)(64+a(a(a-24)-32)))",
        used: pair9,
        literal: Some(pair9),
        repair: None,
    },
    Entry {
        kind: PlacementKind::Pair,
        n: 10,
        printed: "(a(320-a(a(120(a-31)a)-16))-256)/(2(a(a-4)(a(4+3a)-48)-128))",
        used: pair10,
        literal: Some(pair10_literal),
        repair: Some("read a(120(a-31)a) as a(120+(a-31)a); the literal product fails rho(1) = 1"),
    },
];

fn lookup(kind: PlacementKind, n: usize) -> Result<&'static Entry> {
    TABLE
        .iter()
        .find(|e| e.kind == kind && e.n == n)
        .ok_or(Error::UnsupportedSize {
            kind: kind.name(),
            n,
        })
}

/// Tabulated factor for `4 <= n <= 10`, using repaired forms where needed.
pub fn rho_small(kind: PlacementKind, n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((lookup(kind, n)?.used)(alpha))
}

/// The literal published expression, or `None` when it does not parse.
pub fn rho_small_printed(kind: PlacementKind, n: usize, alpha: f64) -> Result<Option<f64>> {
    check_alpha(alpha)?;
    Ok(lookup(kind, n)?.literal.map(|f| f(alpha)))
}

pub fn small_formula(kind: PlacementKind, n: usize) -> Result<SmallFormula> {
    let e = lookup(kind, n)?;
    Ok(SmallFormula {
        kind: e.kind,
        n: e.n,
        printed: e.printed,
        status: if e.repair.is_some() {
            FormulaStatus::Repaired
        } else {
            FormulaStatus::Verbatim
        },
        repair: e.repair,
    })
}

fn opt4(a: f64) -> f64 {
    0.5 + 2.0 * (a * a - 2.0) / ((a - 1.0) * a * (4.0 + a) - 4.0)
}

fn opt5(a: f64) -> f64 {
    (12.0 + a * (4.0 + a * (a * (a - 2.0) - 10.0)))
        / (8.0 + a * (2.0 + a) * (4.0 + (a - 6.0) * a))
}

fn opt6(a: f64) -> f64 {
    let a2 = a * a;
    0.5 + (16.0 - 16.0 * a2 + 3.0 * a2 * a2)
        / (16.0 + a * (16.0 + a * (a * (a * (5.0 + a) - 12.0) - 20.0)))
}

fn opt7(a: f64) -> f64 {
    (a * (a * (64.0 + a * (16.0 + a * (a * (a - 3.0) - 21.0))) - 16.0) - 48.0)
        / (a * (a * (48.0 + a * (32.0 + a * ((a - 6.0) * a - 18.0))) - 32.0) - 32.0)
}

fn opt8(a: f64) -> f64 {
    let a2 = a * a;
    0.5 + 4.0 * (a2 - 2.0) * (8.0 - 8.0 * a2 + a2 * a2)
        / (a * ((a - 2.0) * a * (2.0 + a) * (a * (a * (7.0 + a) - 20.0) - 28.0) - 64.0) - 64.0)
}

fn opt9(a: f64) -> f64 {
    (192.0
        + a * (64.0
            + a * (a * (4.0 + a) * (a * (56.0 + a * ((a - 8.0) * a - 4.0)) - 24.0) - 352.0)))
        / (128.0
            + (a - 2.0)
                * a
                * (a * (2.0 + a) * (48.0 + a * (48.0 + a * ((a - 8.0) * a - 28.0))) - 64.0))
}

fn opt10(a: f64) -> f64 {
    let a2 = a * a;
    let num = 256.0 - 512.0 * a2 + 336.0 * a2 * a2 - 80.0 * a2 * a2 * a2 + 5.0 * a2 * a2 * a2 * a2;
    let den = 256.0
        + a * (256.0
            + a * (a
                * (a * (432.0 + a * (240.0 + a * (a * (9.0 * a + a2 - 40.0) - 120.0)))
                    - 448.0)
                - 576.0));
    0.5 + num / den
}

fn pair4(a: f64) -> f64 {
    (4.0 + a - a * a) / 4.0
}

fn pair5(a: f64) -> f64 {
    (4.0 + a) * (a * (a * (3.0 + a) - 3.0) - 4.0) / ((2.0 + a) * (a * (5.0 * a - 2.0) - 8.0))
}

fn pair6(a: f64) -> f64 {
    (a * (4.0 - a * (a - 7.0)) - 16.0) / (2.0 * (a * (4.0 + a) - 8.0))
}

fn pair7(a: f64) -> f64 {
    (64.0 - 64.0 * a + 7.0 * a * a * a) * (16.0 + a * (2.0 + a) * (a * (a - 3.0) - 2.0))
        / (2.0
            * (32.0 + a * (a * (a - 10.0) - 16.0))
            * (16.0 + a * (a - 16.0 + a * a)))
}

fn pair8(a: f64) -> f64 {
    (64.0 - a * (48.0 + a * (24.0 + (a - 17.0) * a))) / (4.0 * (16.0 + a * (a - 16.0 + a * a)))
}

fn pair9(a: f64) -> f64 {
    (32.0 + (a - 4.0) * a * (2.0 + a) * (1.0 + 2.0 * a)) * (a * (4.0 + 3.0 * a) - 16.0)
        / ((a - 2.0) * (4.0 + a) * (64.0 + a * (a * (a - 24.0) - 32.0)))
}

fn pair10_den(a: f64) -> f64 {
    2.0 * (a * (a - 4.0) * (a * (4.0 + 3.0 * a) - 48.0) - 128.0)
}

fn pair10(a: f64) -> f64 {
    (a * (320.0 - a * (a * (120.0 + (a - 31.0) * a) - 16.0)) - 256.0) / pair10_den(a)
}

fn pair10_literal(a: f64) -> f64 {
    (a * (320.0 - a * (a * (120.0 * (a - 31.0) * a) - 16.0)) - 256.0) / pair10_den(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::rho_general;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quoted_values() {
        assert_eq!(rho_small(PlacementKind::Pair, 4, 0.5).unwrap(), 1.0625);
        assert_abs_diff_eq!(rho_small(PlacementKind::Opt, 4, 0.0).unwrap(), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho_small(PlacementKind::Pair, 6, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho_small(PlacementKind::Pair, 6, 1.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn every_entry_is_exact_at_the_endpoints() {
        for e in TABLE {
            assert_abs_diff_eq!((e.used)(1.0), 1.0, epsilon = 1e-12);
            let at0 = (e.used)(0.0);
            let want = if e.kind == PlacementKind::Opt { 1.5 } else { 1.0 };
            assert_abs_diff_eq!(at0, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn garbled_pair_ten_fails_endpoint_literally() {
        assert!((pair10_literal(1.0) - 1.0).abs() > 1.0);
    }

    #[test]
    fn even_entries_agree_with_general_formula() {
        for e in TABLE {
            if e.kind == PlacementKind::Pair && e.n % 2 == 1 {
                continue;
            }
            for k in 0..=20 {
                let a = k as f64 / 20.0;
                let general = rho_general(e.kind, e.n, a).unwrap();
                assert_abs_diff_eq!((e.used)(a), general, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn opt_four_matches_its_plotted_curve() {
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            let curve = (x * x * x + 7.0 * x * x - 4.0 * x - 12.0)
                / (2.0 * (x * x * x + 3.0 * x * x - 4.0 * x - 4.0));
            assert_abs_diff_eq!(opt4(x), curve, epsilon = 1e-12);
        }
    }

    #[test]
    fn lookup_bounds() {
        assert!(rho_small(PlacementKind::Opt, 3, 0.5).is_err());
        assert!(rho_small(PlacementKind::Pair, 11, 0.5).is_err());
        assert_eq!(rho_small_printed(PlacementKind::Opt, 7, 0.5).unwrap(), None);
        assert_eq!(small_formula(PlacementKind::Pair, 10).unwrap().status, FormulaStatus::Repaired);
        assert_eq!(small_formula(PlacementKind::Opt, 9).unwrap().status, FormulaStatus::Verbatim);
    }
}
