#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagonal;
pub mod flat_models;
pub mod forms;
pub mod linalg;
pub mod parse;
pub mod pde_grid;
pub mod poly;
pub mod riemann;
pub mod spin7;
pub mod torsion;
