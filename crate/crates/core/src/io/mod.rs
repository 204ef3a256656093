//! Configuration, initial conditions, file formats and run drivers.

pub mod config;
pub mod expr;
pub mod formats;
pub mod runner;

pub use config::{evaluate_ic, DomainSpec, InitialCondition, RawConfig, SimulationConfig};
pub use expr::Expr;
pub use formats::{read_diagnostics, read_mesh, read_snapshot, write_diagnostics, write_mesh, write_snapshot, FileSink, Snapshot};
