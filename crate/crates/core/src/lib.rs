//! Loop-invariant synthesis with verifier and reasoning feedback.

pub mod bench;
pub mod checker;
pub mod engine;
pub mod eval;
pub mod gateway;
pub mod lang;
pub mod num;
pub mod proof;
pub mod prompts;
pub mod sample;
pub mod smt;
pub mod vcgen;

/// Arbitrary-precision integers used for literals and reported models.
pub type Int = num_bigint::BigInt;
