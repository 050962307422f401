//! Parameter sweeps, figure datasets, conjecture checks and exporters built on
//! `hotelling-core`.

pub mod config;
pub mod conjectures;
pub mod export;
pub mod figures;
pub mod scan;
pub mod sweep;
pub mod validation;
pub mod values;

pub use config::{Config, ConfigError};
pub use conjectures::{verify_conjectures, ConjectureCell, ConjectureReport};
pub use export::{format_g9, results_table, Cell, ExportError, Format, Table, RESULT_HEADER};
pub use figures::{reproduce_figure, Figure, FigureOptions, FigureOutput, SanityCheck};
pub use scan::{scan_n3_lower_bound, N3Scan};
pub use sweep::{evaluate_cell, run_sweep, ResultRow, SweepError, SweepSpec};
pub use validation::{validate_closed_forms, ClosedFormReport};
pub use values::{parse_alphas, parse_counts, AlphaGrid, EngineKind, PrecisionRule};
