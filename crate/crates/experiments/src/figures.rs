//! Plot-ready datasets, each with its own sanity bounds.

use std::fmt;
use std::str::FromStr;

use hotelling_core::{quality_pair, PlacementKind};

use crate::conjectures::verify_conjectures;
use crate::export::{Cell, Table};
use crate::sweep::{closed_form_rho, evaluate_cell, peak_by_n, run_sweep, SweepError, SweepSpec};
use crate::values::{AlphaGrid, EngineKind, PrecisionRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    OptRho,
    PairRho,
    Quality,
    Precision,
    Conjecture,
    Peak,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::OptRho,
        Figure::PairRho,
        Figure::Quality,
        Figure::Precision,
        Figure::Conjecture,
        Figure::Peak,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::OptRho => "opt-rho",
            Figure::PairRho => "pair-rho",
            Figure::Quality => "quality",
            Figure::Precision => "precision",
            Figure::Conjecture => "conjecture",
            Figure::Peak => "peak",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<&str> = Figure::ALL.iter().map(|f| f.name()).collect();
                format!("unknown figure `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Overrides for the desk-scale defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FigureOptions {
    pub n_values: Option<Vec<usize>>,
    pub alphas: Option<Vec<f64>>,
    pub precision: Option<PrecisionRule>,
    pub kind: Option<PlacementKind>,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SanityCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl SanityCheck {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOutput {
    pub figure: Figure,
    pub table: Table,
    pub checks: Vec<SanityCheck>,
}

impl FigureOutput {
    pub fn failures(&self) -> impl Iterator<Item = &SanityCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn sane(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    AlphaGrid::new(start, stop, step).expect("valid grid").values()
}

pub fn reproduce_figure(figure: Figure, opts: &FigureOptions) -> Result<FigureOutput, SweepError> {
    let (table, checks) = match figure {
        Figure::OptRho => closed_form_curves(PlacementKind::Opt, opts)?,
        Figure::PairRho => closed_form_curves(PlacementKind::Pair, opts)?,
        Figure::Quality => quality_curves(opts)?,
        Figure::Precision => precision_study(opts)?,
        Figure::Conjecture => conjecture_factors(opts)?,
        Figure::Peak => peak_sweep(opts)?,
    };
    Ok(FigureOutput {
        figure,
        table,
        checks,
    })
}

type Dataset = (Table, Vec<SanityCheck>);

fn closed_form_curves(kind: PlacementKind, opts: &FigureOptions) -> Result<Dataset, SweepError> {
    let ns = opts.n_values.clone().unwrap_or_else(|| (4..=10).collect());
    let alphas = opts.alphas.clone().unwrap_or_else(|| grid(0.0, 1.0, 0.01));
    let (low, high) = match kind {
        PlacementKind::Opt => (1.5, 1.0),
        PlacementKind::Pair => (1.0, 1.0),
    };
    let ceiling = match kind {
        PlacementKind::Opt => 1.5,
        PlacementKind::Pair => 1.1,
    };
    let mut t = Table::new(["n", "alpha", "rho"]);
    let mut checks = Vec::new();
    for &n in &ns {
        let mut worst: Option<String> = None;
        for &a in &alphas {
            let rho = closed_form_rho(kind, n, a)
                .map_err(|e| SweepError::Invalid(format!("n = {n}: {e}")))?;
            t.push(vec![n.into(), a.into(), rho.into()]);
            let endpoint = if a == 0.0 {
                Some(low)
            } else if a == 1.0 {
                Some(high)
            } else {
                None
            };
            if let Some(want) = endpoint {
                if (rho - want).abs() > 1e-8 {
                    worst.get_or_insert(format!("rho({a}) = {rho}, expected {want}"));
                }
            }
            if !(1.0 - 1e-9..=ceiling + 1e-9).contains(&rho) {
                worst.get_or_insert(format!("rho({a}) = {rho} outside [1, {ceiling}]"));
            }
        }
        checks.push(SanityCheck::new(
            format!("{kind} n={n} endpoints and range"),
            worst.is_none(),
            worst.unwrap_or_else(|| "ok".into()),
        ));
    }
    Ok((t, checks))
}

fn quality_curves(opts: &FigureOptions) -> Result<Dataset, SweepError> {
    let alphas = opts.alphas.clone().unwrap_or_else(|| grid(0.0, 1.0, 0.01));
    let odd = opts
        .n_values
        .clone()
        .unwrap_or_else(|| vec![5, 7, 9, 101, 1001]);
    let mut t = Table::new(["series", "n", "alpha", "quality", "exact"]);
    let q = |n: usize, a: f64| quality_pair(n, a).map_err(|e| SweepError::Invalid(e.to_string()));
    for &a in &alphas {
        let (v, exact) = q(2, a)?;
        t.push(vec!["n even".into(), Cell::Empty, a.into(), v.into(), Cell::Int(exact as i64)]);
    }
    for &n in &odd {
        for &a in &alphas {
            let (v, exact) = q(n, a)?;
            t.push(vec![format!("n={n}").into(), n.into(), a.into(), v.into(), Cell::Int(exact as i64)]);
        }
    }
    let mut checks = vec![
        SanityCheck::new("even n at alpha 0", q(2, 0.0)?.0 == 2.0, format!("{}", q(2, 0.0)?.0)),
        SanityCheck::new("even n at alpha 1", q(2, 1.0)?.0 == 1.0, format!("{}", q(2, 1.0)?.0)),
        SanityCheck::new(
            "odd bound n=5 at alpha 0",
            (q(5, 0.0)?.0 - 50.0 / 9.0).abs() <= 1e-12,
            format!("{}", q(5, 0.0)?.0),
        ),
    ];
    let mut above = true;
    for &n in odd.iter().filter(|&&n| n % 2 == 1) {
        for &a in &alphas {
            above &= q(n, a)?.0 >= q(2, a)?.0 - 1e-12;
        }
    }
    checks.push(SanityCheck::new("odd bounds lie above the even curve", above, ""));
    Ok((t, checks))
}

/// Scale factors of the precision study.
pub const PRECISION_SCALES: [usize; 4] = [50, 100, 250, 500];
/// Largest error accepted at the finest grid.
pub const PRECISION_TOL: f64 = 5e-3;
/// Allowed increase between consecutive grid sizes.
pub const PRECISION_NOISE: f64 = 1e-3;

fn precision_study(opts: &FigureOptions) -> Result<Dataset, SweepError> {
    let kind = opts.kind.unwrap_or(PlacementKind::Pair);
    let ns = opts.n_values.clone().unwrap_or_else(|| vec![10]);
    let alphas = opts.alphas.clone().unwrap_or_else(|| vec![0.1, 0.5, 0.9]);
    let scales: Vec<usize> = match opts.precision {
        Some(PrecisionRule::Scaled(c)) => PRECISION_SCALES.iter().copied().filter(|&s| s <= c).collect(),
        _ => PRECISION_SCALES.to_vec(),
    };
    let mut t = Table::new(["n", "alpha", "P", "rho_discrete", "rho_continuous", "abs_error"]);
    let mut checks = Vec::new();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    for &n in &ns {
        for &a in &alphas {
            let cell = |engine, rule| {
                pool.install(|| evaluate_cell(kind, n, a, engine, rule))
                    .map_err(|e| SweepError::Invalid(format!("n = {n}, alpha = {a}: {e}")))
            };
            let exact = cell(EngineKind::Continuous, PrecisionRule::Scaled(50))?.rho;
            let mut errors = Vec::new();
            for &c in &scales {
                let rho = cell(EngineKind::Discrete, PrecisionRule::Scaled(c))?.rho;
                let err = (rho - exact).abs();
                errors.push(err);
                t.push(vec![n.into(), a.into(), (c * n).into(), rho.into(), exact.into(), err.into()]);
            }
            let last = *errors.last().expect("at least one scale");
            checks.push(SanityCheck::new(
                format!("n={n} alpha={a} error at P={}", scales.last().unwrap() * n),
                last <= PRECISION_TOL,
                format!("{last:.3e} (bound {PRECISION_TOL})"),
            ));
            let monotone = errors.windows(2).all(|w| w[1] <= w[0] + PRECISION_NOISE);
            checks.push(SanityCheck::new(
                format!("n={n} alpha={a} error non-increasing in P"),
                monotone,
                errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" "),
            ));
        }
    }
    Ok((t, checks))
}

fn conjecture_factors(opts: &FigureOptions) -> Result<Dataset, SweepError> {
    let kind = opts.kind.unwrap_or(PlacementKind::Pair);
    let ns = opts.n_values.clone().unwrap_or_else(|| vec![9, 10, 11]);
    let alphas = opts.alphas.clone().unwrap_or_else(|| vec![0.1, 0.5, 0.9]);
    let precision = opts.precision.unwrap_or(PrecisionRule::Scaled(500));
    let report = verify_conjectures(kind, &ns, &alphas, precision, opts.workers)?;
    let checks = report
        .cells
        .iter()
        .map(|c| {
            SanityCheck::new(
                format!("{kind} n={} alpha={} argmax", c.n, c.alpha),
                c.pass,
                match &c.error {
                    Some(e) => e.clone(),
                    None => format!("argmax {:?}, allowed {:?}", c.argmax, c.allowed),
                },
            )
        })
        .collect();
    Ok((report.table(), checks))
}

/// Band the peak factor must fall in for `n >= 10`.
pub const PEAK_RHO: (f64, f64) = (1.06, 1.09);
/// Band for the alpha attaining the peak.
pub const PEAK_ALPHA: (f64, f64) = (0.45, 0.65);

fn peak_sweep(opts: &FigureOptions) -> Result<Dataset, SweepError> {
    let spec = SweepSpec {
        n_values: opts.n_values.clone().unwrap_or_else(|| (4..=30).collect()),
        alphas: opts.alphas.clone().unwrap_or_else(|| grid(0.0, 1.0, 0.05)),
        precision: opts.precision.unwrap_or(PrecisionRule::Scaled(250)),
        kind: opts.kind.unwrap_or(PlacementKind::Pair),
        engine: EngineKind::Discrete,
        workers: opts.workers,
        timing: false,
    };
    let rows = run_sweep(&spec)?;
    let mut checks = Vec::new();
    if let Some(bad) = rows.iter().find(|r| !r.is_ok()) {
        checks.push(SanityCheck::new(
            format!("n={} alpha={} evaluated", bad.n, bad.alpha),
            false,
            bad.status.clone(),
        ));
    }
    let mut t = Table::new(["n", "P", "alpha_peak", "rho_peak"]);
    for (n, alpha, rho) in peak_by_n(&rows) {
        t.push(vec![n.into(), spec.precision.precision(n).into(), alpha.into(), rho.into()]);
        if n >= 10 {
            let ok = (PEAK_RHO.0..=PEAK_RHO.1).contains(&rho)
                && (PEAK_ALPHA.0..=PEAK_ALPHA.1).contains(&alpha);
            checks.push(SanityCheck::new(
                format!("n={n} peak"),
                ok,
                format!("rho {rho:.5} at alpha {alpha}"),
            ));
        }
    }
    Ok((t, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.name().parse::<Figure>().unwrap(), f);
        }
        assert!("nope".parse::<Figure>().is_err());
    }

    #[test]
    fn closed_form_figures_are_sane() {
        for f in [Figure::OptRho, Figure::PairRho, Figure::Quality] {
            let out = reproduce_figure(f, &FigureOptions::default()).unwrap();
            assert!(out.sane(), "{f}: {:?}", out.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn pair_curves_start_and_end_at_one() {
        let out = reproduce_figure(Figure::PairRho, &FigureOptions::default()).unwrap();
        for row in &out.table.rows {
            if let [_, Cell::Float(a), Cell::Float(rho)] = row.as_slice() {
                if *a == 0.0 || *a == 1.0 {
                    assert!((rho - 1.0).abs() < 1e-9);
                }
            }
        }
        assert_eq!(out.table.rows.len(), 7 * 101);
    }

    #[test]
    fn broken_bounds_are_reported() {
        let opts = FigureOptions {
            n_values: Some(vec![4]),
            alphas: Some(vec![0.5]),
            precision: Some(PrecisionRule::Scaled(50)),
            ..FigureOptions::default()
        };
        let out = reproduce_figure(Figure::Peak, &opts).unwrap();
        assert_eq!(out.table.rows.len(), 1);
        assert!(out.sane());
    }
}
