//! File formats, reports, configuration, a parallel battery runner and the
//! command-line front end on top of `thermrng-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitfile;
pub mod cli;
pub mod config;
pub mod parallel;
pub mod pipeline;
pub mod record;
pub mod report;

mod error;

pub use error::{AppError, ExitCode};
