//! Counterexample-guided reactive synthesis with pluggable synthesizer
//! backends.
//!
//! The pipeline compiles TLSF specifications to LTL problems (via
//! `cegsyn-core`), prompts a synthesizer for a Verilog module, model-checks
//! the module through an external toolchain — or the built-in explicit-state
//! falsifier when the tools are absent — and feeds counterexample traces
//! back for repair. Parameterized and natural-language workflows build on
//! the same loop.

pub mod backend;
pub mod engine;
pub mod harness;
pub mod toolchain;
