//! Closed-loop simulation of two parallel buck converters sharing a resistive
//! load. Converter 1 regulates the output voltage and converter 2 enforces
//! proportional current sharing, each with a backstepping control law.
//!
//! ```
//! use buckshare::{run, Scenario};
//!
//! let mut scenario = Scenario::reference_constant_load();
//! scenario.initial_state = scenario.initial_equilibrium().unwrap();
//! scenario.t_end = 1e-3;
//! let trace = run(&scenario, 100).unwrap();
//! assert!((trace.last().unwrap().vo - 8.0).abs() < 1e-9);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod control;
pub mod error;
pub mod metrics;
pub mod model;
pub mod plot;
pub mod scenario_file;
pub mod sim;
pub mod trace_csv;

pub use control::{controller_step, ControlGains, ControlSignals};
pub use error::{Error, Result, StateComponent};
pub use metrics::{compute_metrics, MetricsConfig, RunMetrics};
pub use model::{equilibrium, plant_derivatives, ConverterParams, PlantState, PlantStateDerivative};
pub use scenario_file::{parse_scenario, InitMode, ScenarioError, ScenarioFile};
pub use sim::{
    rk4_step, run, run_with, LoadSchedule, LoadStep, RunOutcome, Scenario, SimOptions, TraceRecord,
};
