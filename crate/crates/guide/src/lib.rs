//! The guide's chapters, compiled so that their code blocks run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/manifolds.md")]
pub mod manifolds {}

#[doc = include_str!("../../../book/src/transport.md")]
pub mod transport {}

#[doc = include_str!("../../../book/src/five-gradients.md")]
pub mod five_gradients {}

#[doc = include_str!("../../../book/src/directional.md")]
pub mod directional {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/heat-and-bv.md")]
pub mod heat_and_bv {}

#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
