//! Laplace eigenfunctions on model surfaces and numerical checks of the
//! exponential concentration of volume around their nodal sets.

pub mod analytic;
pub mod concentration;
pub mod error;
pub mod mesh;
pub mod nodal;
pub mod sparse;
pub mod spectral;
mod vec3;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    pub mod meshes {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    pub mod spectra {}
    #[doc = include_str!("../../../book/src/nodal-sets.md")]
    pub mod nodal_sets {}
    #[doc = include_str!("../../../book/src/boundaries.md")]
    pub mod boundaries {}
    #[doc = include_str!("../../../book/src/good-sets.md")]
    pub mod good_sets {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
