//! Compiles the Rust snippets of the guide in `book/src` as doc-tests, one
//! module per chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/offspring.md")]
pub mod offspring {}
#[doc = include_str!("../../../book/src/gfunction.md")]
pub mod gfunction {}
#[doc = include_str!("../../../book/src/critical.md")]
pub mod critical {}
#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}
#[doc = include_str!("../../../book/src/extremal.md")]
pub mod extremal {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
