//! Single simulation runs: scenario documents, wiring, metrics and output.

mod doc;
pub mod output;
mod results;
mod run;
mod trace;

pub use doc::{NodeSpec, Plan, PlannedNode, Scenario, ScenarioError};
pub use results::{
    hosts_csv, results_csv, results_json, write_results, Format, HostUsage, ResultRow, RunResult, HOST_COLUMNS,
    RESULT_COLUMNS,
};
pub use run::{run_simulation, simulate, RunError, RunOptions, RunReport};
pub use trace::{trace_csv, EventRecord, TRACE_COLUMNS};
