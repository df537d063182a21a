//! In-context symbolic regression.
//!
//! A chat model proposes functional forms with `c` placeholders, the
//! [`fit`] module tunes the placeholders by multi-start Levenberg–Marquardt,
//! [`score`] ranks fitted forms by a complexity-penalized error, and
//! [`engine`] feeds the best forms back to the model until the fit is good
//! enough or the call budget runs out. [`bench`] carries the benchmark
//! equations and the in-domain / out-of-distribution evaluation.
//!
//! The crate is `no_std` + `alloc`. Network access, files and the command
//! line live in the `icsr` crate.

#![no_std]
// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bench;
pub mod data;
pub mod engine;
pub mod expr;
pub mod fit;
pub mod llm;
pub mod prompt;
pub mod score;

pub use data::Dataset;
pub use expr::{Expr, Skeleton};
