//! Core data model for counterexample-guided reactive synthesis: the TLSF
//! specification frontend, LTL formulas with lasso-trace semantics, and a
//! small AIGER circuit oracle.
//!
//! Everything in this crate is pure and allocation-only; IO, subprocess
//! drivers, and the synthesis loop live in the companion `cegsyn` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod aiger;
pub mod ltl;
pub mod tlsf;
pub mod verilog;
