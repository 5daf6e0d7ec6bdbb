//! Model checking and parameter synthesis for discrete-time automata with one
//! parametric clock and parameter constraints expressed in Presburger arithmetic.
//!
//! The pipeline compiles a property over a parametric timed automaton into a
//! quantifier-free constraint on the parameters: the automaton is normalized,
//! cut into reset-free segments, segments are simplified until their duration
//! languages are effectively regular, and duration sets are extracted as
//! one-dimensional semilinear sets. A bounded explicit-state oracle provides an
//! independent reference semantics for validation.

pub mod automaton;
pub mod durations;
pub mod formula;
pub mod logic;
pub mod oracle;
pub mod presburger;
pub mod resetfree;
pub mod semilinear;
pub mod synthesis;
pub mod text;
