//! Monte Carlo coverage and length experiments for the npreg intervals.

pub mod dgp;
pub mod engine;
pub mod error;
pub mod oracle;

pub use dgp::{draw_sample, DgpSpec, SimSample};
pub use engine::{
    run_simulation, BandwidthRule, CsvRow, MethodResult, SimConfig, SimResult, TABLE_METHODS,
};
pub use error::{Result, SimError};
pub use oracle::{oracle_bandwidth, Amse};
