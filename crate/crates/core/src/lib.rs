//! Amplitude-reduction search on a dense statevector.
//!
//! An `n`-bit classical array of `M = 2^m` elements is loaded into a data
//! register `C` entangled with an `m`-qubit counter `D`. Controlled rotations
//! of the counter, driven by the bitwise distance between each element and a
//! target `B`, drain probability away from the counters of poor matches. The
//! crate provides the operators, the statevector engine, the end-to-end
//! procedures (nearest search, re-measurement, null-element exact match,
//! filtering), a Kraus-channel engine for iterated reloads, and the
//! closed-form oracles used to check all of them.
//!
//! Bit conventions: bit 0 is the least significant bit of both the data and
//! the counter register. Angle schedules are indexed from the most
//! significant data bit downwards.

pub mod channel;
pub mod error;
pub mod histogram;
pub mod oracle;
pub mod rotation;
pub mod search;
pub mod statevector;

pub use error::{Error, Result};
pub use histogram::{sample_distribution, sample_histogram, Histogram};
pub use rotation::{AngleSchedule, PiMultiple, RotationOperator, SignMatrix, SignVariant};
pub use statevector::{ArraySpec, Ensemble, PureState, Register, RegisterLayout};

/// Crate version, embedded in every experiment output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
