//! Burmester–Desmedt style group key exchange generalized to finite
//! non-abelian group actions, with a deterministic multi-party simulator and
//! a lab for the statistical checks behind its security argument.

pub mod algebra;
pub mod cli;
pub mod harness;
pub mod lab;
pub mod protocol;
