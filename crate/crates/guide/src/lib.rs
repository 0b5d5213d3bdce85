//! Compiles and runs the code listings of the book under `book/src` as
//! doctests, one module per chapter so a failure names its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/forward.md")]
pub mod forward {}
#[doc = include_str!("../../../book/src/alignment.md")]
pub mod alignment {}
#[doc = include_str!("../../../book/src/imaging.md")]
pub mod imaging {}
#[doc = include_str!("../../../book/src/intersect.md")]
pub mod intersect {}
#[doc = include_str!("../../../book/src/height.md")]
pub mod height {}
#[doc = include_str!("../../../book/src/isar.md")]
pub mod isar {}
#[doc = include_str!("../../../book/src/analysis.md")]
pub mod analysis {}
#[doc = include_str!("../../../book/src/tradeoff.md")]
pub mod tradeoff {}
#[doc = include_str!("../../../book/src/running.md")]
pub mod running {}
