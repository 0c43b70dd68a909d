//! The guide's listings, compiled and run by `cargo test --doc`.
//!
//! One module per chapter so a failing listing points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/proxy.md")]
pub mod proxy {}
#[doc = include_str!("../../../book/src/sphere-fit.md")]
pub mod sphere_fit {}
#[doc = include_str!("../../../book/src/projection.md")]
pub mod projection {}
#[doc = include_str!("../../../book/src/plate.md")]
pub mod plate {}
#[doc = include_str!("../../../book/src/sessions.md")]
pub mod sessions {}
