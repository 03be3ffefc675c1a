pub mod cli;
pub mod curvature;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod homogenization;
pub mod instances;
pub mod oracle;
pub mod rotation;
pub mod tensor;
pub mod thin_limit;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/curvature.md")]
    mod curvature {}
    #[doc = include_str!("../../../book/src/energies.md")]
    mod energies {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/homogenization.md")]
    mod homogenization {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/thin_limit.md")]
    mod thin_limit {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/schema.md")]
    mod schema {}
}
