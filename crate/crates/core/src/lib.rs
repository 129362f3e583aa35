//! Gate-level low-power analysis over a small CMOS cell library.
//!
//! Power is split into switching, short-circuit and leakage components.
//! Leakage follows an exponential subthreshold model with DIBL and a two-high
//! stack effect; delay follows the alpha-power law in supply and threshold
//! voltage.
//!
//! - [`device`]: subthreshold current, stack node voltage, delay derating
//! - [`library`]: cell data model, built-in reference library, JSON file format
//! - [`netlist`]: structural netlist parser and DAG checks
//! - [`activity`]: signal probability propagation and an exhaustive oracle
//! - [`analysis`]: static timing, power decomposition, sweeps and corners
//! - [`optimizer`]: stacked/conventional variant assignment under a delay budget
//! - [`report`]: deterministic JSON/CSV rendering
//! - [`cli`]: the `cellpower` command-line front end

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activity;
pub mod analysis;
pub mod cli;
pub mod device;
pub mod error;
pub mod library;
pub mod logic;
pub mod netlist;
pub mod optimizer;
pub mod report;

pub use activity::{exhaustive_activity, propagate_probabilities, ActivityMap, NetActivity};
pub use analysis::{
    corner_analysis, dynamic_power, leakage_power, short_circuit_power, static_timing, sweep, total_power, Analyzer,
    PowerBreakdown, PowerReport, SweepPoint, TimingReport,
};
pub use device::{OperatingPoint, TechnologyModel};
pub use error::{AnalysisError, LibraryError, ModelError};
pub use library::{
    builtin_reference_library, derate_cell, load_library, save_library, Cell, Conditions, CornerName, CornerSpec,
    LeakageSource, Library, Strictness, Variant,
};
pub use netlist::{parse_netlist, serialize_netlist, topological_order, validate, Diagnostic, DiagnosticKind, Instance, Netlist};
pub use optimizer::{brute_force_optimize, optimize_leakage, Assignment, OptimizeResult};
