//! Command-line driver for `kpz-core`: result records, the subcommands and the acceptance
//! suite run by `kpz selftest`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod record;
pub mod selftest;
