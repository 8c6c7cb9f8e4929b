//! KeepMask: perturb the background of a slice while keeping every organ
//! pixel bit-identical.
//!
//! The perturbed copy `f(x)` is computed on the whole image and then
//! composited per pixel: `out = y * x + (1 - y) * f(x)`. With a binary mask
//! this reduces to a select, which keeps foreground values exact.

use crate::error::Result;
use crate::perturb::{gaussian_blur, grid_dropout, GaussianParams, GridDropoutParams};
use crate::rng::{OperatorTag, RngStream};
use crate::types::{BinaryMask, Image2D, Provenance, Sample};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KeepMaskOp {
    GaussianBlur(GaussianParams),
    GridDropout(GridDropoutParams),
}

impl KeepMaskOp {
    pub fn provenance(&self) -> Provenance {
        match self {
            KeepMaskOp::GaussianBlur(_) => Provenance::KeepMaskGaussian,
            KeepMaskOp::GridDropout(_) => Provenance::KeepMaskGridDrop,
        }
    }

    pub fn rng_tag(&self) -> OperatorTag {
        match self {
            KeepMaskOp::GaussianBlur(_) => OperatorTag::GaussianBlur,
            KeepMaskOp::GridDropout(_) => OperatorTag::GridDropout,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KeepMaskOp::GaussianBlur(p) => p.validate(),
            KeepMaskOp::GridDropout(p) => p.validate(),
        }
    }

    /// The standalone whole-image perturbation.
    pub fn perturb(&self, image: &Image2D, rng: &mut RngStream) -> Result<Image2D> {
        match self {
            KeepMaskOp::GaussianBlur(p) => gaussian_blur(image, p),
            KeepMaskOp::GridDropout(p) => grid_dropout(image, p, rng),
        }
    }
}

/// Per-pixel select: `mask == 1` takes `keep`, otherwise `replace`.
pub(crate) fn composite(keep: &[f64], replace: &[f64], mask: &[u8]) -> Vec<f64> {
    keep.iter()
        .zip(replace)
        .zip(mask)
        .map(|((&k, &r), &m)| if m != 0 { k } else { r })
        .collect()
}

/// Applies `op` to the background of `sample`. The mask and ids are carried
/// over unchanged; the output is tagged with the operator's provenance.
pub fn keepmask(sample: &Sample, op: &KeepMaskOp, rng: &mut RngStream) -> Result<Sample> {
    let image = sample.image();
    let perturbed = op.perturb(image, rng)?;
    Ok(compose(sample, perturbed, op.provenance()))
}

/// Restores the foreground of `sample` into the perturbed buffer in place.
fn compose(sample: &Sample, perturbed: Image2D, provenance: Provenance) -> Sample {
    let (w, h) = sample.dims();
    let mask: &BinaryMask = sample.mask();
    let mut pixels = perturbed.into_pixels();
    for ((out, &keep), &m) in pixels.iter_mut().zip(sample.image().pixels()).zip(mask.values()) {
        if m != 0 {
            *out = keep;
        }
    }
    Sample::assemble(
        Image2D::from_valid(w, h, pixels),
        mask.clone(),
        sample.patient_id().to_owned(),
        sample.slice_id().to_owned(),
        provenance,
    )
}
