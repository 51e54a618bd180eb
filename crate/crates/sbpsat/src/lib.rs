// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod discretization;
pub mod error;
pub mod interface;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod poly;
pub mod sbp;
pub mod sparse;
pub mod timestepping;

pub use error::{Error, Result};

// Guide chapters compiled as doctests so their listings keep working.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/operators.md")]
    pub mod operators {}
    #[doc = include_str!("../../../book/src/interfaces.md")]
    pub mod interfaces {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    pub mod meshes {}
    #[doc = include_str!("../../../book/src/semidiscretization.md")]
    pub mod semidiscretization {}
    #[doc = include_str!("../../../book/src/time_stepping.md")]
    pub mod time_stepping {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
