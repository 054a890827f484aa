//! Compiles every Rust listing of the guide in `book/src` as a doc-test, so
//! the guide cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/data-format.md")]
pub mod data_format {}
#[doc = include_str!("../../../book/src/geography.md")]
pub mod geography {}
#[doc = include_str!("../../../book/src/splits.md")]
pub mod splits {}
#[doc = include_str!("../../../book/src/imputers.md")]
pub mod imputers {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
