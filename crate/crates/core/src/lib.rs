//! Recursive decomposition theorem proving for Lean 4.

pub mod agents;
pub mod ast;
pub mod config;
pub mod lean_source;
pub mod orchestrator;
pub mod proof_state;
pub mod services;
