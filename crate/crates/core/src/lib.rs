//! Foreground-preserving data augmentation for medical image segmentation.
//!
//! - [`keepmask`]: perturb the background of a slice (Gaussian blur or grid
//!   dropout) while the organ region stays bit-identical.
//! - [`keepmix`]: paste the organ of one slice onto a slice without organ,
//!   pairing by organ presence, within one patient or across patients.
//! - [`sampler`]: deterministic, thread-count independent epoch/batch
//!   construction mixing originals and augmented samples with probability `p`.
//! - [`metrics`]: Dice coefficient and dataset evaluation.
//! - [`io`]: patient-grouped JSON manifests and PNG persistence.

pub mod error;
pub mod io;
pub mod keepmask;
pub mod keepmix;
pub mod metrics;
pub mod perturb;
pub mod policy;
pub mod render;
pub mod rng;
pub mod sampler;
pub mod types;

pub use error::{Error, Result};
pub use io::{load_manifest, load_sample, write_sample, DatasetManifest};
pub use keepmask::{keepmask, KeepMaskOp};
pub use keepmix::{keepmix, select_pair, MixMode, MixPair, PairingIndex};
pub use metrics::{dice, evaluate_dataset, DiceReport};
pub use perturb::{gaussian_blur, grid_dropout, GaussianParams, GridDropoutParams};
pub use policy::PolicyFile;
pub use rng::{OperatorTag, RngStream, StreamKey};
pub use sampler::{build_epoch, epoch_stats, AugOperator, AugPolicy, Batch, EpochStats, Sampler};
pub use types::{has_foreground, validate_pair, BinaryMask, Image2D, Provenance, Sample};
