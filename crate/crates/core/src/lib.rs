#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod contact_solver;
pub mod mesh;
pub mod operators;
pub mod postprocess;
pub mod quadrature;
pub mod spaces;
