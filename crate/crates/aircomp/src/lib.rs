//! File formats, reports and the command line of the aircomp simulator.

pub mod cli;
pub mod report;
pub mod runner;
pub mod scenario_io;
