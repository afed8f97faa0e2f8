//! Configuration, frame containers and tables.

pub mod calibration;
pub mod config;
pub mod container;
pub mod table;

pub use calibration::{read_calibration, write_calibration};
pub use config::{AnalysisSpec, BudgetSpec, RunConfig, SweepSpec};
pub use container::{read_container, scan_container, write_container, ContainerReader, ContainerWriter};
pub use table::{persist_temp, write_atomic, Table};
