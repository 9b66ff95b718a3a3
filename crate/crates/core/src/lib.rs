//! Core calculus, kernel and runtime for a knowledge-action system built on
//! dependent types.
//!
//! Layers, bottom up:
//! - [`term`], [`context`], [`reduce`], [`typeck`]: the static calculus.
//! - [`kernel`]: verified state transitions with a hash-chained log.
//! - [`search`]: bounded proof search, root-cause synthesis, counterfactuals, watchers.
//! - [`runtime`]: signal elaboration, scheduling, WAL persistence and recovery.
//! - [`surface`]: the `.kos` definition language and report rendering.

pub mod context;
pub mod digest;
pub mod kernel;
pub mod prim;
pub mod reduce;
pub mod runtime;
pub mod search;
pub mod surface;
pub mod term;
pub mod typeck;

pub use context::{Context, Entry};
pub use digest::Digest;
pub use reduce::Fuel;
pub use term::{BaseType, Name, PrimTag, Sort, Term, TimeKind};
