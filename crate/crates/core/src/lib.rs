//! Finding large column subsets on which an operator is an almost-isometry.
//!
//! Given `T: ℓ₂ⁿ → ℓ₂ᵐ` and `ε ∈ (0, 1)`, a set σ is an ε-isomorphism set
//! when the columns in σ, after normalization, satisfy
//! `(1 − ε)‖x‖² ≤ ‖Σ x_i Te_i/‖Te_i‖‖² ≤ (1 + ε)‖x‖²`. The crate enumerates
//! the family of such sets, certifies lower bounds on how large they must be
//! via a two-player game, selects good sets for a given measure, and runs the
//! two-step selection argument with every intermediate inequality recorded.
//!
//! Modules:
//!
//! - [`linalg`]: dense matrices, a Jacobi eigensolver and norms.
//! - [`structure`]: membership tests and downward-closed families.
//! - [`witness`]: the marginal game and its certified optimal measure.
//! - [`select`]: measure-driven subset selection.
//! - [`prooftrace`]: the Szarek / Bourgain–Tzafriri pipeline.
//! - [`testbed`]: seeded ensembles and constant estimation.
//!
//! The guide in `book/` is compiled into doc-tests, so every snippet there
//! runs under `cargo test`.

pub mod error;
pub mod linalg;
mod lp;
pub mod mask;
pub mod prooftrace;
pub mod select;
pub mod structure;
pub mod testbed;
pub mod witness;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use mask::SubsetMask;
pub use select::IndexMeasure;
pub use structure::IsoFamily;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/structure.md")]
    mod structure {}
    #[doc = include_str!("../../../book/src/witness.md")]
    mod witness {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
