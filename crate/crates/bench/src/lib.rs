//! Deterministic fixtures shared by the benchmarks.

use keepaug_core::{BinaryMask, Image2D, OperatorTag, RngStream, Sample, StreamKey};

fn stream(seed: u64) -> RngStream {
    RngStream::new(seed, StreamKey::new(u64::MAX, seed, OperatorTag::Shuffle))
}

pub fn noise_image(width: usize, height: usize, seed: u64) -> Image2D {
    let mut rng = stream(seed);
    Image2D::new(width, height, (0..width * height).map(|_| rng.next_f64()).collect())
        .expect("fixture image is valid")
}

/// A filled disc covering roughly a tenth of the slice.
pub fn disc_mask(width: usize, height: usize) -> BinaryMask {
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let r2 = 0.1 * (width * height) as f64 / std::f64::consts::PI;
    let values = (0..width * height)
        .map(|i| {
            let (x, y) = ((i % width) as f64 + 0.5 - cx, (i / width) as f64 + 0.5 - cy);
            u8::from(x * x + y * y <= r2)
        })
        .collect();
    BinaryMask::new(width, height, values).expect("fixture mask is valid")
}

/// An organ slice and an organ-free slice from the same patient.
pub fn slice_pair(width: usize, height: usize) -> (Sample, Sample) {
    let organ = Sample::new(noise_image(width, height, 1), disc_mask(width, height), "bench", "organ")
        .expect("fixture sample is valid");
    let empty = BinaryMask::zeros(width, height).expect("fixture mask is valid");
    let free = Sample::new(noise_image(width, height, 2), empty, "bench", "free")
        .expect("fixture sample is valid");
    (organ, free)
}
