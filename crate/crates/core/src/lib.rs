//! Consistency and robustness checking for finite-state RDMA programs.

pub mod program;
pub mod trace;
pub mod oracle;
pub mod normal_form;
pub mod checker;
pub mod witness;
pub mod gen;
pub mod corpus;
