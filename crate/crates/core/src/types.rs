//! Domain types shared by every operator: grayscale slices, binary organ
//! masks and the `Sample` that pairs them.
//!
//! All types validate on construction and are immutable afterwards, so the
//! operators never re-check invariants on the hot path.

use std::fmt;

use crate::error::{Error, Result};

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions {
            width,
            height,
            reason: "width and height must be at least 1",
        });
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidDimensions {
            width,
            height,
            reason: "pixel count does not equal width * height",
        });
    }
    Ok(())
}

/// A single-channel slice with row-major intensities normalized to `[0, 1]`.
#[derive(Clone, PartialEq)]
pub struct Image2D {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image2D {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        if let Some((index, &value)) = pixels
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::IntensityOutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Constant image; `Image2D::filled(w, h, 1.0)` is the all-ones image.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    /// Callers guarantee every pixel is a valid intensity. Used by operators
    /// whose outputs are convex combinations or copies of valid inputs.
    pub(crate) fn from_valid(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(width * height, pixels.len());
        debug_assert!(pixels.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }
}

impl fmt::Debug for Image2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image2D")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// Per-pixel organ labels; every value is exactly 0 or 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v > 1) {
            return Err(Error::NonBinaryMask {
                index,
                value: f64::from(value),
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a mask from real-valued labels, rejecting anything but 0.0 and 1.0.
    pub fn from_reals(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        check_dims(width, height, values.len())?;
        let labels = values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if value == 0.0 {
                    Ok(0u8)
                } else if value == 1.0 {
                    Ok(1u8)
                } else {
                    Err(Error::NonBinaryMask { index, value })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            width,
            height,
            values: labels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width.saturating_mul(height)])
    }

    pub fn ones(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![1; width.saturating_mul(height)])
    }

    pub(crate) fn from_valid(width: usize, height: usize, values: Vec<u8>) -> Self {
        debug_assert_eq!(width * height, values.len());
        debug_assert!(values.iter().all(|&v| v <= 1));
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }

    /// Number of foreground pixels.
    pub fn count_ones(&self) -> usize {
        self.values.iter().map(|&v| usize::from(v)).sum()
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("foreground", &self.count_ones())
            .finish()
    }
}

/// True iff any mask value equals 1.
pub fn has_foreground(mask: &BinaryMask) -> bool {
    mask.values.contains(&1)
}

/// Checks that an image and mask can be paired.
pub fn validate_pair(image: &Image2D, mask: &BinaryMask) -> Result<()> {
    if image.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            found: mask.dims(),
        });
    }
    if let Some((index, &value)) = mask.values.iter().enumerate().find(|(_, v)| **v > 1) {
        return Err(Error::NonBinaryMask {
            index,
            value: f64::from(value),
        });
    }
    if let Some((index, &value)) = image
        .pixels
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
    {
        return Err(Error::IntensityOutOfRange { index, value });
    }
    Ok(())
}

/// Records whether and how a sample was augmented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    Original,
    KeepMaskGaussian,
    KeepMaskGridDrop,
    KeepMixSame,
    KeepMixDiff,
}

impl Provenance {
    pub const ALL: [Provenance; 5] = [
        Provenance::Original,
        Provenance::KeepMaskGaussian,
        Provenance::KeepMaskGridDrop,
        Provenance::KeepMixSame,
        Provenance::KeepMixDiff,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::KeepMaskGaussian => "keepmask:gaussian",
            Provenance::KeepMaskGridDrop => "keepmask:griddrop",
            Provenance::KeepMixSame => "keepmix:same",
            Provenance::KeepMixDiff => "keepmix:diff",
        }
    }

    pub fn is_augmented(self) -> bool {
        self != Provenance::Original
    }

    /// Tag with characters unsafe in file names replaced (`keepmix:diff` -> `keepmix-diff`).
    pub fn file_tag(self) -> String {
        self.as_str().replace(':', "-")
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Provenance::ALL
            .into_iter()
            .find(|p| p.as_str() == s || p.file_tag() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown provenance tag {s:?}")))
    }
}

/// An image/mask pair with its patient and slice identity.
///
/// `has_organ` is computed once at construction and always agrees with
/// [`has_foreground`] on the stored mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    image: Image2D,
    mask: BinaryMask,
    patient_id: String,
    slice_id: String,
    has_organ: bool,
    provenance: Provenance,
}

impl Sample {
    pub fn new(
        image: Image2D,
        mask: BinaryMask,
        patient_id: impl Into<String>,
        slice_id: impl Into<String>,
    ) -> Result<Self> {
        validate_pair(&image, &mask)?;
        Ok(Self::assemble(
            image,
            mask,
            patient_id.into(),
            slice_id.into(),
            Provenance::Original,
        ))
    }

    pub(crate) fn assemble(
        image: Image2D,
        mask: BinaryMask,
        patient_id: String,
        slice_id: String,
        provenance: Provenance,
    ) -> Self {
        debug_assert_eq!(image.dims(), mask.dims());
        let has_organ = has_foreground(&mask);
        Self {
            image,
            mask,
            patient_id,
            slice_id,
            has_organ,
            provenance,
        }
    }

    pub fn image(&self) -> &Image2D {
        &self.image
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }

    pub fn slice_id(&self) -> &str {
        &self.slice_id
    }

    pub fn has_organ(&self) -> bool {
        self.has_organ
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn into_parts(self) -> (Image2D, BinaryMask) {
        (self.image, self.mask)
    }
}
