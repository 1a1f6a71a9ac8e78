//! Bernstein-type tail bounds for sums of strongly mixing random fields on
//! rectangular boxes of `Z^N`, with the block partitions, mixing-coefficient
//! tools, synthetic fields and Monte Carlo checks needed to evaluate them.

pub mod bounds;
pub mod cli;
pub mod fields;
pub mod lattice;
pub mod mixing;
pub mod montecarlo;
