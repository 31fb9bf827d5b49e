//! Command line and HTTP front ends of the bizvor engine.

pub mod api;
pub mod cli;
