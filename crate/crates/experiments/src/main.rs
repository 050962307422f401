use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hotelling_core::closed_form::placement_positions;
use hotelling_core::{
    build_grid, discrete_potential, empirical_client_equilibrium, potential, social_cost,
    solve_client_equilibrium, DiscretePlacement, Placement, PlacementKind, SimConfig, DEFAULT_TOL,
};

use hotelling_experiments::sweep::{evaluate_positions, STATUS_OK};
use hotelling_experiments::{
    parse_alphas, parse_counts, reproduce_figure, results_table, run_sweep, scan_n3_lower_bound,
    validate_closed_forms, verify_conjectures, Cell, Config, EngineKind, Figure, FigureOptions,
    FigureOutput, Format, PrecisionRule, ResultRow, SweepSpec, Table,
};

#[derive(Parser)]
#[command(name = "hotelling", version, about = "Facility location games with congestion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Client equilibrium of a placement.
    Solve(Common),
    /// Improvement factors of a single placement.
    Rho(Common),
    /// Improvement factors over a grid of (n, alpha) cells.
    Sweep(Common),
    /// Dataset behind one of the standard plots.
    Reproduce {
        /// opt-rho, pair-rho, quality, precision, conjecture or peak.
        figure: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check which facility gains most by deviating.
    VerifyConjectures(Common),
    /// Smallest approximation factor over all three-facility placements.
    ScanN3(Common),
    /// Compare the tabulated small-n factors with the numeric solver.
    CheckClosedForms(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Single value, list `0.1,0.5` or grid `start:stop:step`.
    #[arg(long)]
    alpha: Option<String>,
    /// Facility counts: `10`, `4..30`, `3..=5`, `9,10,11`.
    #[arg(long)]
    n: Option<String>,
    /// Grid size: fixed `5000` or scaled `500n`.
    #[arg(long)]
    precision: Option<String>,
    /// continuous, discrete or closed-form.
    #[arg(long)]
    engine: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    workers: Option<String>,
    /// Leave runtime_ms empty so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// opt or pair.
    #[arg(long)]
    kind: Option<String>,
    /// Explicit facility positions, comma separated.
    #[arg(long)]
    positions: Option<String>,
    /// Lattice spacing for scan-n3.
    #[arg(long)]
    step: Option<String>,
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Flags, then the config file, then defaults.
struct Settings {
    flags: Common,
    file: Config,
}

impl Settings {
    fn new(flags: Common) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        Ok(Self { flags, file })
    }

    fn raw(&self, key: &str) -> Option<String> {
        let f = &self.flags;
        let flag = match key {
            "alpha" => f.alpha.clone(),
            "n" => f.n.clone(),
            "precision" => f.precision.clone(),
            "engine" => f.engine.clone(),
            "out" => f.out.as_ref().map(|p| p.display().to_string()),
            "format" => f.format.clone(),
            "workers" => f.workers.clone(),
            "kind" => f.kind.clone(),
            "positions" => f.positions.clone(),
            "step" => f.step.clone(),
            _ => None,
        };
        flag.or_else(|| self.file.get(key).map(str::to_string))
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|e| anyhow!("--{key}: {e}")),
            None => Ok(default),
        }
    }

    fn alphas(&self, default: &str) -> Result<Vec<f64>> {
        parse_alphas(&self.raw("alpha").unwrap_or_else(|| default.into())).context("--alpha")
    }

    fn counts(&self, default: &str) -> Result<Vec<usize>> {
        parse_counts(&self.raw("n").unwrap_or_else(|| default.into())).context("--n")
    }

    fn counts_opt(&self) -> Result<Option<Vec<usize>>> {
        self.raw("n").map(|s| parse_counts(&s).context("--n")).transpose()
    }

    fn alphas_opt(&self) -> Result<Option<Vec<f64>>> {
        self.raw("alpha").map(|s| parse_alphas(&s).context("--alpha")).transpose()
    }

    fn positions(&self) -> Result<Option<Vec<f64>>> {
        self.raw("positions")
            .map(|s| {
                s.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("--positions: `{v}`: {e}")))
                    .collect()
            })
            .transpose()
    }

    fn timing(&self) -> Result<bool> {
        if self.flags.no_timing {
            return Ok(false);
        }
        Ok(!self.file.flag("no-timing").map_err(|e| anyhow!(e))?.unwrap_or(false))
    }

    fn workers(&self) -> Result<usize> {
        self.parsed("workers", 0)
    }

    fn format(&self) -> Result<Format> {
        self.parsed("format", Format::Csv)
    }

    fn out(&self) -> Option<PathBuf> {
        self.raw("out").map(PathBuf::from)
    }

    /// Writes the table to `--out`, or stdout.
    fn emit(&self, table: &Table) -> Result<()> {
        let format = self.format()?;
        match self.out() {
            Some(path) => table.export(format, &path)?,
            None => {
                let stdout = std::io::stdout();
                table.write(format, stdout.lock())?;
            }
        }
        Ok(())
    }
}

/// What the process exit code reports.
#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Ok,
    SanityFailure,
}

fn single<T: Copy + std::fmt::Debug>(values: &[T], what: &str) -> Result<T> {
    match values {
        [v] => Ok(*v),
        _ => bail!("{what} needs a single value here, got {values:?}"),
    }
}

/// Placement from `--positions`, or the canonical one for `--kind`/`--n`.
fn target_placement(s: &Settings) -> Result<(Vec<f64>, Option<PlacementKind>)> {
    if let Some(p) = s.positions()? {
        return Ok((p, None));
    }
    let kind = s.parsed("kind", PlacementKind::Pair)?;
    let n = single(&s.counts("4")?, "--n")?;
    Ok((placement_positions(kind, n)?, Some(kind)))
}

fn solve(s: &Settings) -> Result<Outcome> {
    let (positions, _) = target_placement(s)?;
    let alphas = s.alphas("0.5")?;
    let engine = s.parsed("engine", EngineKind::Continuous)?;
    let mut t = Table::new([
        "alpha",
        "P",
        "facility_index",
        "position",
        "left_border",
        "right_border",
        "load",
        "potential",
        "social_cost",
        "engine",
        "status",
    ]);
    for &alpha in &alphas {
        match engine {
            EngineKind::Continuous => {
                let p = Placement::new(positions.clone())?;
                let sol = solve_client_equilibrium(&p, alpha, DEFAULT_TOL)?;
                let phi = potential(&p, &sol.borders, alpha)?;
                let sc = social_cost(&p, &sol.borders, alpha)?;
                let beta = sol.borders.as_slice();
                let status = if sol.converged { STATUS_OK.to_string() } else { "not converged".into() };
                for (i, (&x, load)) in p.positions().iter().zip(sol.loads()).enumerate() {
                    t.push(vec![
                        alpha.into(),
                        Cell::Empty,
                        (i + 1).into(),
                        x.into(),
                        beta[i].into(),
                        beta[i + 1].into(),
                        load.into(),
                        phi.into(),
                        sc.into(),
                        engine.as_str().into(),
                        status.as_str().into(),
                    ]);
                }
            }
            EngineKind::Discrete => {
                let n = positions.len();
                let size = s.parsed("precision", PrecisionRule::Scaled(500))?;
                size.validate().map_err(|e| anyhow!("--precision: {e}"))?;
                let grid = build_grid(size.precision(n))?;
                let dp = DiscretePlacement::from_positions(&positions, &grid)?;
                let a = empirical_client_equilibrium(&dp, &grid, alpha, &SimConfig::default())?;
                let phi = discrete_potential(&dp, &a, &grid, alpha)?;
                for (i, (&slot, load)) in dp.slots().iter().zip(a.loads()).enumerate() {
                    t.push(vec![
                        alpha.into(),
                        grid.precision().into(),
                        (i + 1).into(),
                        grid.position(slot).into(),
                        Cell::Empty,
                        Cell::Empty,
                        load.into(),
                        phi.into(),
                        Cell::Empty,
                        engine.as_str().into(),
                        STATUS_OK.into(),
                    ]);
                }
            }
            EngineKind::ClosedForm => bail!("solve supports the continuous and discrete engines"),
        }
    }
    s.emit(&t)?;
    Ok(Outcome::Ok)
}

fn rho(s: &Settings) -> Result<Outcome> {
    let (positions, kind) = target_placement(s)?;
    let engine = s.parsed("engine", EngineKind::Continuous)?;
    let alphas = s.alphas("0.5")?;
    let precision = s.parsed("precision", PrecisionRule::Scaled(500))?;
    let timing = s.timing()?;
    let n = positions.len();
    let rows = match kind {
        Some(kind) => run_sweep(&SweepSpec {
            n_values: vec![n],
            alphas,
            precision,
            kind,
            engine,
            workers: s.workers()?,
            timing,
        })?,
        None => {
            if engine == EngineKind::ClosedForm {
                bail!("closed forms exist only for --kind opt or pair");
            }
            precision.validate().map_err(|e| anyhow!("--precision: {e}"))?;
            let size = (engine == EngineKind::Discrete).then(|| precision.precision(n));
            let pool = rayon::ThreadPoolBuilder::new().num_threads(s.workers()?).build()?;
            let mut rows = Vec::new();
            for alpha in alphas {
                let start = Instant::now();
                let outcome = pool.install(|| evaluate_positions(&positions, alpha, size));
                let base = ResultRow {
                    n,
                    alpha,
                    precision: size,
                    facility_index: None,
                    improvement_factor: None,
                    rho: None,
                    engine,
                    status: STATUS_OK.into(),
                    runtime_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
                };
                match outcome {
                    Ok(cell) => {
                        rows.push(ResultRow { rho: Some(cell.rho), ..base.clone() });
                        for (i, &f) in cell.factors.iter().enumerate() {
                            rows.push(ResultRow {
                                facility_index: Some(i + 1),
                                improvement_factor: Some(f),
                                rho: Some(cell.rho),
                                ..base.clone()
                            });
                        }
                    }
                    Err(e) => rows.push(ResultRow { status: format!("error: {e}"), ..base }),
                }
            }
            rows
        }
    };
    report_failed_cells(&rows);
    s.emit(&results_table(&rows))?;
    Ok(Outcome::Ok)
}

fn report_failed_cells(rows: &[ResultRow]) {
    let failed: Vec<&ResultRow> = rows.iter().filter(|r| !r.is_ok()).collect();
    if !failed.is_empty() {
        eprintln!("{} cell(s) failed:", failed.len());
        for r in failed {
            eprintln!("  n={} alpha={}: {}", r.n, r.alpha, r.status);
        }
    }
}

fn sweep(s: &Settings) -> Result<Outcome> {
    let spec = SweepSpec {
        n_values: s.counts("4..=30")?,
        alphas: s.alphas("0:1:0.05")?,
        precision: s.parsed("precision", PrecisionRule::Scaled(250))?,
        kind: s.parsed("kind", PlacementKind::Pair)?,
        engine: s.parsed("engine", EngineKind::Discrete)?,
        workers: s.workers()?,
        timing: s.timing()?,
    };
    let rows = run_sweep(&spec)?;
    report_failed_cells(&rows);
    s.emit(&results_table(&rows))?;
    Ok(Outcome::Ok)
}

fn diff_report(out: &FigureOutput) {
    let failed: Vec<_> = out.failures().collect();
    eprintln!("{}: {} of {} sanity checks failed", out.figure, failed.len(), out.checks.len());
    for c in failed {
        eprintln!("  FAIL {}: {}", c.name, c.detail);
    }
}

fn reproduce(figure: &str, s: &Settings) -> Result<Outcome> {
    let figure: Figure = figure.parse().map_err(|e: String| anyhow!(e))?;
    let precision = s
        .raw("precision")
        .map(|v| v.parse::<PrecisionRule>().map_err(|e| anyhow!("--precision: {e}")))
        .transpose()?;
    let kind = s
        .raw("kind")
        .map(|v| v.parse::<PlacementKind>().map_err(|e| anyhow!("--kind: {e}")))
        .transpose()?;
    let opts = FigureOptions {
        n_values: s.counts_opt()?,
        alphas: s.alphas_opt()?,
        precision,
        kind,
        workers: s.workers()?,
    };
    let out = reproduce_figure(figure, &opts)?;
    s.emit(&out.table)?;
    if out.sane() {
        Ok(Outcome::Ok)
    } else {
        diff_report(&out);
        Ok(Outcome::SanityFailure)
    }
}

fn conjectures(s: &Settings) -> Result<Outcome> {
    let kind = s.parsed("kind", PlacementKind::Pair)?;
    let report = verify_conjectures(
        kind,
        &s.counts("9,10,11")?,
        &s.alphas("0.1,0.5,0.9")?,
        s.parsed("precision", PrecisionRule::Scaled(500))?,
        s.workers()?,
    )?;
    s.emit(&report.table())?;
    eprintln!("{kind}: {} cell(s) passed, {} failed", report.passed, report.failed);
    for c in report.cells.iter().filter(|c| !c.pass) {
        match &c.error {
            Some(e) => eprintln!("  FAIL n={} alpha={}: {e}", c.n, c.alpha),
            None => eprintln!(
                "  FAIL n={} alpha={}: argmax {:?} outside {:?}",
                c.n, c.alpha, c.argmax, c.allowed
            ),
        }
    }
    Ok(if report.all_pass() { Outcome::Ok } else { Outcome::SanityFailure })
}

fn scan_n3(s: &Settings) -> Result<Outcome> {
    let step: f64 = s.parsed("step", 0.01)?;
    let alpha = single(&s.alphas("0")?, "--alpha")?;
    let r = scan_n3_lower_bound(step, alpha, s.workers()?)?;
    let mut t = Table::new(["step", "alpha", "min_rho", "s1", "s2", "s3", "evaluated"]);
    t.push(vec![
        r.step.into(),
        r.alpha.into(),
        r.min_rho.into(),
        r.argmin[0].into(),
        r.argmin[1].into(),
        r.argmin[2].into(),
        r.evaluated.into(),
    ]);
    s.emit(&t)?;
    Ok(Outcome::Ok)
}

fn check_closed_forms(s: &Settings) -> Result<Outcome> {
    let report = validate_closed_forms(&s.alphas("0:1:0.05")?)?;
    s.emit(&report.table())?;
    for c in report.corrupted() {
        eprintln!("{} n={}: printed form repaired ({})", c.kind, c.n, c.repair.unwrap_or("-"));
    }
    let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass).collect();
    for c in &failed {
        eprintln!("  FAIL {} n={}: max error {:.3e}", c.kind, c.n, c.max_error);
    }
    Ok(if failed.is_empty() { Outcome::Ok } else { Outcome::SanityFailure })
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Solve(c) => solve(&Settings::new(c)?),
        Command::Rho(c) => rho(&Settings::new(c)?),
        Command::Sweep(c) => sweep(&Settings::new(c)?),
        Command::Reproduce { figure, common } => reproduce(&figure, &Settings::new(common)?),
        Command::VerifyConjectures(c) => conjectures(&Settings::new(c)?),
        Command::ScanN3(c) => scan_n3(&Settings::new(c)?),
        Command::CheckClosedForms(c) => check_closed_forms(&Settings::new(c)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::SanityFailure) => ExitCode::from(2),
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
