//! Evolving granular neural network classifier (eGNN-C+) for numerical data
//! streams, plus the EEG pipeline around it: windowed band features, online
//! normalization, Spearman feature ranking, prequential evaluation and the
//! interpretability index.
//!
//! The classifier lives in [`granule`] and [`network`]. Everything else is
//! the experimental harness that feeds it and measures it.
//!
//! ```
//! use egnn_core::network::{HyperParams, Model};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let mut model = Model::new(HyperParams::default()).unwrap();
//! model.learn(&[0.1, 0.2], 1, &mut rng).unwrap();
//! model.learn(&[0.15, 0.25], 1, &mut rng).unwrap();
//! let prediction = model.predict(&[0.12, 0.22]).unwrap();
//! assert_eq!(prediction.predicted_class, 1);
//! ```

pub mod error;
pub mod experiment;
pub mod features;
pub mod granule;
pub mod io;
pub mod metrics;
pub mod network;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
pub use granule::Granule;
pub use network::{HyperParams, LearnOutcome, Model, Prediction};

/// Class identifier. Classes are small positive integers (1..m).
pub type ClassId = u32;
