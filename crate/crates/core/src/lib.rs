//! Exact-arithmetic laboratory for oracle-use games on left-c.e. reals.
//!
//! Everything here computes with dyadic rationals represented exactly; no
//! floating point appears anywhere. The crate is organized around a handful
//! of interlocking pieces:
//!
//! * [`dyadic`]: canonical mantissa/scale rationals, binary-prefix operators
//!   and the least-increment primitive the game engine is built on.
//! * [`usefn`]: nondecreasing use tables, their run-length signatures, the
//!   condensation sandwich, space transforms and interval partitions.
//! * [`bounds`]: greedy truncation to a constant sequence and the truncated
//!   sums that predict game outcomes.
//! * [`games`]: the digit-load game where two reals fill an interval with
//!   carries and a responder must keep prefixes of its own real fresh.
//! * [`construction`]: a priority construction that runs the game against
//!   plug-in adversaries block by block.
//! * [`coding`]: monotone approximations encoded as flip-count sets and back.
//! * [`machines`]: an online Kraft-Chaitin allocator, oracle reductions and
//!   Solovay-test ledgers built from approximation traces.
//! * [`corpus`]: seeded generators shared by tests and the sweep CLI.

pub(crate) mod bigser;
pub mod bounds;
pub(crate) mod hash;
pub mod coding;
pub mod construction;
pub mod corpus;
pub mod dyadic;
mod error;
pub mod games;
pub mod machines;
pub mod usefn;

pub use error::{Error, Result};
