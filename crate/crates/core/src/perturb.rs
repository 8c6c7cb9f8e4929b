//! Whole-image perturbations used as the background transform of KeepMask.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{BinaryMask, Image2D};

pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_UNIT_SIZE: usize = 32;
pub const DEFAULT_HOLE_RATIO: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams {
    pub sigma: f64,
    pub radius: usize,
}

impl GaussianParams {
    /// Kernel truncated at `ceil(3 * sigma)`.
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParams(format!("sigma must be > 0, got {sigma}")));
        }
        Self::with_radius(sigma, ((3.0 * sigma).ceil() as usize).max(1))
    }

    pub fn with_radius(sigma: f64, radius: usize) -> Result<Self> {
        let params = Self { sigma, radius };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.radius < 1 {
            return Err(Error::InvalidParams("radius must be >= 1".into()));
        }
        Ok(())
    }

    /// Normalized 1D weights for offsets `-radius..=radius`.
    pub fn kernel(&self) -> Vec<f64> {
        let r = self.radius as isize;
        let denom = 2.0 * self.sigma * self.sigma;
        let mut weights: Vec<f64> = (-r..=r)
            .map(|d| (-((d * d) as f64) / denom).exp())
            .collect();
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        weights
    }
}

impl Default for GaussianParams {
    fn default() -> Self {
        Self::new(DEFAULT_SIGMA).expect("default sigma is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridDropoutParams {
    pub unit_size: usize,
    pub hole_ratio: f64,
    pub fill_value: f64,
    pub random_offset: bool,
}

impl Default for GridDropoutParams {
    fn default() -> Self {
        Self {
            unit_size: DEFAULT_UNIT_SIZE,
            hole_ratio: DEFAULT_HOLE_RATIO,
            fill_value: 0.0,
            random_offset: true,
        }
    }
}

impl GridDropoutParams {
    pub fn validate(&self) -> Result<()> {
        if self.unit_size < 2 {
            return Err(Error::InvalidParams(format!(
                "unit_size must be >= 2, got {}",
                self.unit_size
            )));
        }
        if !(self.hole_ratio > 0.0 && self.hole_ratio <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "hole_ratio must be in (0, 1], got {}",
                self.hole_ratio
            )));
        }
        if !(self.fill_value.is_finite() && (0.0..=1.0).contains(&self.fill_value)) {
            return Err(Error::InvalidParams(format!(
                "fill_value must be in [0, 1], got {}",
                self.fill_value
            )));
        }
        if self.hole_side() < 1 {
            return Err(Error::InvalidParams(format!(
                "hole side floor({} * {}) is zero",
                self.unit_size, self.hole_ratio
            )));
        }
        Ok(())
    }

    pub fn hole_side(&self) -> usize {
        (self.unit_size as f64 * self.hole_ratio).floor() as usize
    }

    /// Grid offset `(dx, dy)`: uniform in `[0, unit_size)^2` when
    /// `random_offset`, otherwise `(0, 0)`. Draws x before y.
    pub fn draw_offset(&self, rng: &mut RngStream) -> (usize, usize) {
        if self.random_offset {
            let unit = self.unit_size as u64;
            let dx = rng.below(unit) as usize;
            let dy = rng.below(unit) as usize;
            (dx, dy)
        } else {
            (0, 0)
        }
    }
}

/// Half-sample symmetric index (`dcba|abcd|dcba`), valid for any offset and
/// length >= 1. With a normalized kernel this border keeps the image mean.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    if m < n {
        m as usize
    } else {
        (2 * n - 1 - m) as usize
    }
}

/// Separable Gaussian blur with mirrored borders, output clamped to `[0, 1]`.
pub fn gaussian_blur(image: &Image2D, params: &GaussianParams) -> Result<Image2D> {
    params.validate()?;
    let (w, h) = image.dims();
    let kernel = params.kernel();
    let r = params.radius;
    let src = image.pixels();

    // Horizontal pass through a reflected scratch row.
    let mut tmp = vec![0.0f64; w * h];
    let mut padded = vec![0.0f64; w + 2 * r];
    for (row_in, row_out) in src.chunks_exact(w).zip(tmp.chunks_exact_mut(w)) {
        for (k, slot) in padded.iter_mut().enumerate() {
            *slot = row_in[reflect(k as isize - r as isize, w)];
        }
        for (x, out) in row_out.iter_mut().enumerate() {
            *out = kernel
                .iter()
                .zip(&padded[x..x + kernel.len()])
                .map(|(k, v)| k * v)
                .sum();
        }
    }

    // Vertical pass accumulates whole rows so the inner loop is contiguous.
    let mut out = vec![0.0f64; w * h];
    for (y, row_out) in out.chunks_exact_mut(w).enumerate() {
        for (k, &weight) in kernel.iter().enumerate() {
            let sy = reflect(y as isize + k as isize - r as isize, h);
            let row_in = &tmp[sy * w..(sy + 1) * w];
            for (o, v) in row_out.iter_mut().zip(row_in) {
                *o += weight * v;
            }
        }
        for o in row_out.iter_mut() {
            *o = o.clamp(0.0, 1.0);
        }
    }
    Ok(Image2D::from_valid(w, h, out))
}

/// Visits each hole rectangle `(x0, x1, y0, y1)` (half-open, clipped).
fn for_each_hole(
    width: usize,
    height: usize,
    params: &GridDropoutParams,
    offset: (usize, usize),
    mut f: impl FnMut(usize, usize, usize, usize),
) {
    let unit = params.unit_size;
    let side = params.hole_side();
    let spans = |extent: usize, shift: usize| {
        (0..extent.div_ceil(unit)).filter_map(move |k| {
            let start = k * unit + shift;
            (start < extent).then(|| (start, (start + side).min(extent)))
        })
    };
    for (y0, y1) in spans(height, offset.1) {
        for (x0, x1) in spans(width, offset.0) {
            f(x0, x1, y0, y1);
        }
    }
}

/// The hole set (1 = dropped) for a given grid offset.
pub fn grid_hole_mask(
    width: usize,
    height: usize,
    params: &GridDropoutParams,
    offset: (usize, usize),
) -> Result<BinaryMask> {
    params.validate()?;
    let mut holes = BinaryMask::zeros(width, height)?.values().to_vec();
    for_each_hole(width, height, params, offset, |x0, x1, y0, y1| {
        for y in y0..y1 {
            holes[y * width + x0..y * width + x1].fill(1);
        }
    });
    Ok(BinaryMask::from_valid(width, height, holes))
}

/// Grid dropout with an explicit grid offset.
pub fn grid_dropout_at(
    image: &Image2D,
    params: &GridDropoutParams,
    offset: (usize, usize),
) -> Result<Image2D> {
    params.validate()?;
    let (w, h) = image.dims();
    let mut out = image.pixels().to_vec();
    for_each_hole(w, h, params, offset, |x0, x1, y0, y1| {
        for y in y0..y1 {
            out[y * w + x0..y * w + x1].fill(params.fill_value);
        }
    });
    Ok(Image2D::from_valid(w, h, out))
}

/// Grid dropout; the offset (if random) is drawn from `rng`.
pub fn grid_dropout(
    image: &Image2D,
    params: &GridDropoutParams,
    rng: &mut RngStream,
) -> Result<Image2D> {
    params.validate()?;
    let offset = params.draw_offset(rng);
    grid_dropout_at(image, params, offset)
}
