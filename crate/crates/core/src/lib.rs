//! Regression from partial labels: each training example comes with a set of
//! candidate labels, only one of which is correct.
//!
//! The crate provides the building blocks for learning in that setting:
//!
//! - [`numeric`]: matrices, seeded random streams, summary statistics
//! - [`model`]: linear and MLP regressors with manual backpropagation and Adam
//! - [`losses`]: pointwise losses and the ways of combining them over a candidate set
//! - [`data`]: CSV loading, splitting, preprocessing and candidate-set corruption
//! - [`trainer`]: the minibatch training loop and grid selection
//! - [`report`]: multi-seed aggregation, tables and charts
//!
//! ```
//! use plr_core::losses::{Aggregation, CandidateSet, PlrLoss, PointwiseLoss};
//!
//! let set = CandidateSet::new(vec![1.0, 4.0, 9.0]).unwrap();
//! let ident = PlrLoss::new(Aggregation::MinLoss, PointwiseLoss::Mse).unwrap();
//! let (value, grad) = ident.eval(3.5, &set, None).unwrap();
//! assert_eq!(value, 0.25);
//! assert_eq!(grad, -1.0);
//! ```

pub mod data;
pub mod error;
pub mod losses;
pub mod model;
pub mod numeric;
pub mod report;
pub mod trainer;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
