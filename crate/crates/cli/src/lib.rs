//! Library side of the `mibound` command-line tool: model loading, the
//! subcommand implementations and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod model;
pub mod output;
