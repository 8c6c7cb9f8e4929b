//! Side-by-side preview panels: original | augmented | boundary overlay.

use crate::error::{Error, Result};
use crate::types::{BinaryMask, Image2D};

/// Foreground pixels with at least one in-image 4-neighbour in the background.
pub fn boundary(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let m = mask.values();
    let out = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            if m[y * w + x] == 0 {
                return 0;
            }
            let bg = |nx: usize, ny: usize| m[ny * w + nx] == 0;
            let edge = (x > 0 && bg(x - 1, y))
                || (x + 1 < w && bg(x + 1, y))
                || (y > 0 && bg(x, y - 1))
                || (y + 1 < h && bg(x, y + 1));
            u8::from(edge)
        })
        .collect();
    BinaryMask::from_valid(w, h, out)
}

/// `image` with boundary pixels of `mask` drawn at full intensity.
pub fn overlay_boundary(image: &Image2D, mask: &BinaryMask) -> Result<Image2D> {
    if image.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            found: mask.dims(),
        });
    }
    let edge = boundary(mask);
    let pixels = image
        .pixels()
        .iter()
        .zip(edge.values())
        .map(|(&v, &e)| if e == 1 { 1.0 } else { v })
        .collect();
    Ok(Image2D::from_valid(image.width(), image.height(), pixels))
}

/// Concatenates equally sized panels left to right.
pub fn hconcat(panels: &[&Image2D]) -> Result<Image2D> {
    let first = panels
        .first()
        .ok_or_else(|| Error::InvalidParams("no panels to concatenate".into()))?;
    let (w, h) = first.dims();
    if let Some(bad) = panels.iter().find(|p| p.dims() != (w, h)) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            found: bad.dims(),
        });
    }
    let mut pixels = Vec::with_capacity(w * h * panels.len());
    for y in 0..h {
        for panel in panels {
            pixels.extend_from_slice(&panel.pixels()[y * w..(y + 1) * w]);
        }
    }
    Ok(Image2D::from_valid(w * panels.len(), h, pixels))
}

/// Original, augmented, and the augmented image with the (augmented) mask
/// boundary drawn on top.
pub fn preview_panel(original: &Image2D, augmented: &Image2D, mask: &BinaryMask) -> Result<Image2D> {
    let overlay = overlay_boundary(augmented, mask)?;
    hconcat(&[original, augmented, &overlay])
}
