//! Number sequence prediction tasks.
//!
//! Generators for number-level grids and digit-level token streams,
//! reference automata for the digit-level tasks, a two-level logic width
//! and decomposition analyzer, and an exact scoring harness.

pub mod automata;
pub mod cli;
pub mod dataset;
pub mod digitstream;
pub mod harness;
pub mod logicwidth;
pub mod numgrid;
pub mod sequence;
