//! Generation, checking, iteration and proof accounting for Lean 4 theorem
//! conjectures.
//!
//! The pipeline reads a seed file, asks a generator for statement variants,
//! reduces the answers to bare `theorem ... := by` statements, replays the
//! seed's context onto them, and classifies each with a Lean checker
//! (syntax, then novelty via `exact?`, then triviality via `aesop`). Valid
//! and novel statements are fed back as the next round's inspiration until
//! a round adds nothing new or the iteration cap is hit.

pub mod chat;
pub mod checker;
pub mod genpipe;
pub mod lean_surface;
pub mod looper;
pub mod prover_harness;
pub mod reportkit;
pub mod store;
