//! Exact minimax patrol scheduling on a line.
//!
//! A zero-sum game: a defender routes `K` speed-limited patrols over the
//! integer positions of `[0, M]` for `T` rounds; an attacker strikes one
//! moving target at one round and scores its weight unless a patrol is
//! within the protection radius. This crate computes the defender's optimal
//! mixed strategy exactly:
//!
//! 1. [`partition`] splits each round's space into intervals of
//!    interchangeable positions, so nothing ever scales with `M`.
//! 2. [`daygraph`] turns per-round placements into paths and flows of a
//!    layered DAG whose edge costs are attacker payoffs.
//! 3. [`lp`] + [`equilibrium`] solve one linear program tying all rounds
//!    together, remove crossing flows, and peel the result into a small
//!    set of pure strategies with probabilities.
//! 4. [`verify`] replays any strategy against the best-responding attacker
//!    and, for tiny instances, against a brute-force matrix game.
//! 5. [`continuous`] lifts everything to rational (non-integer) patrol
//!    positions by rescaling.

pub mod continuous;
pub mod daygraph;
pub mod equilibrium;
pub mod lp;
pub mod model;
pub mod partition;
pub mod scalar;
pub mod verify;

pub use model::{Mode, ProblemInstance, TargetTrack};
pub use scalar::{Int, Rational, Scalar};
