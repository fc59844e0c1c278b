//! Report assembly and plot rendering behind the `mrivw` command-line tool.
//!
//! The binary in `main.rs` is argument parsing and I/O only; everything it
//! prints is produced by these modules so the same output can be exercised
//! directly from tests.

pub mod plot;
pub mod report;

pub use plot::{render_plot, PlotKind};
pub use report::{
    analysis_report, leave_one_out, sensitivity, AnalysisReport, OutputFormat, SensitivityReport,
    DEFAULT_THETA_GRID,
};
