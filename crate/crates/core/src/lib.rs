//! Free completely random measures: characteristic triplets, free and
//! classical Lévy–Khintchine transforms, density recovery, the
//! Bercovici–Pata map, region laws of random measures, and random-matrix
//! oracles to check them against.
//!
//! The guide in `book/` walks through each module; its snippets are compiled
//! as doctests of this crate.

pub mod bijection;
pub mod error;
pub mod fcrm;
pub mod inversion;
pub mod levy;
pub mod numeric;
pub mod oracle;
pub mod quad;
pub mod transforms;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/triplets.md")]
    mod triplets {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/inversion.md")]
    mod inversion {}
    #[doc = include_str!("../../../book/src/bijection.md")]
    mod bijection {}
    #[doc = include_str!("../../../book/src/fcrm.md")]
    mod fcrm {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
