//! Exact posterior inference for change-point locations.
//!
//! A segmentation of `n` observations into `K` segments is modelled as a
//! hidden chain that can only stay in its current segment or move to the
//! next one. Given per-segment emission densities, forward-backward
//! recursions in `O(K n)` give the evidence, per-position segment
//! posteriors, the marginal distribution of every change-point and
//! confidence intervals from it; a Viterbi pass gives the most probable
//! segmentation, and a backward-guided forward pass draws complete
//! segmentations exactly from the posterior.
//!
//! ```
//! use segpost::{
//!     emissions::{fit_mle, log_density_table, Family, ObservationSequence},
//!     engine::PosteriorAnalysis,
//!     prior::TransitionPrior,
//!     ChangePointVector,
//! };
//!
//! let data = ObservationSequence::new(vec![0.1, -0.2, 0.0, 2.1, 1.9, 2.2]).unwrap();
//! let initial = ChangePointVector::new(vec![3], data.len()).unwrap();
//! let model = fit_mle(&data, &initial, Family::GaussianHomoscedastic).unwrap();
//! let table = log_density_table(&data, &model).unwrap();
//! let prior = TransitionPrior::homogeneous(2, data.len(), 0.5).unwrap();
//! let post = PosteriorAnalysis::run(&table, &prior).unwrap();
//! assert_eq!(post.marginals[0].mode(), 3);
//! ```

pub mod changepoints;
pub mod decode;
pub mod emissions;
pub mod engine;
pub mod error;
pub mod grid;
pub mod io;
pub mod logspace;
pub mod model_select;
pub mod oracle;
pub mod prior;
pub mod report;
pub mod sampler;
pub mod simulate;

pub use changepoints::ChangePointVector;
pub use error::{Error, Result};
pub use grid::Grid;
