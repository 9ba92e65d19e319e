//! Runs the code listings in `book/src` as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/formats.md")]
pub mod formats {}

#[doc = include_str!("../../../book/src/adjust.md")]
pub mod adjust {}

#[doc = include_str!("../../../book/src/positions.md")]
pub mod positions {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/sweeps.md")]
pub mod sweeps {}

#[doc = include_str!("../../../book/src/hwcost.md")]
pub mod hwcost {}

#[doc = include_str!("../../../README.md")]
pub mod readme {}
