//! Monte Carlo experiment harness: configuration, normality diagnostics, the
//! synthetic survey population, and the four experiment drivers (Q-Q study,
//! power study, MSE/crossover sweep, PGF convexity scan). All drivers are
//! deterministic given the master seed, independent of worker count.

pub mod config;
pub mod diagnostics;
pub mod mse;
pub mod pgf_scan;
pub mod power;
pub mod qq;
pub mod surrogate;

pub use config::ExperimentConfig;
pub use diagnostics::{normality_diagnostics, NormalityDiagnostics};
pub use mse::{mse_csv, run_mse, Crossover, MseOutput, MseRow};
pub use pgf_scan::{pgf_csv, run_pgf_scan, PgfRow, PgfScanOutput};
pub use power::{power_csv, run_power, PowerFeature, PowerRow};
pub use qq::{qq_csv, run_qq, QqOutput, QqRow, QqSummary};
pub use surrogate::{surrogate_population, Surrogate};
