//! Persistence and synthesis: record/label files, dataset manifests, weight
//! files, prediction output, and the synthetic corpus generator.

pub mod manifest;
pub mod predictions;
pub mod record;
pub mod synth;
pub mod weights;

pub use manifest::{DatasetManifest, ManifestEntry, SplitTag};
pub use predictions::{write_predictions, Prediction, PREDICTION_THRESHOLD};
pub use record::{load_record, load_samples, save_mask, save_samples};
pub use synth::{synthesize_corpus, synthesize_record, SynthesisConfig};
pub use weights::{load_weights, save_weights, LoadedWeights};
