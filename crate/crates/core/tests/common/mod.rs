#![allow(dead_code)]

use keepaug_core::{BinaryMask, Image2D, OperatorTag, RngStream, Sample, StreamKey};

/// Test-data generator on top of a fixed stream.
pub struct Gen(RngStream);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(RngStream::new(seed, StreamKey::new(u64::MAX, u64::MAX, OperatorTag::Shuffle)))
    }

    pub fn unit(&mut self) -> f64 {
        self.0.next_f64()
    }

    /// Inclusive range.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.0.below_usize(hi - lo + 1)
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    pub fn image(&mut self, w: usize, h: usize) -> Image2D {
        Image2D::new(w, h, (0..w * h).map(|_| self.unit()).collect()).unwrap()
    }

    pub fn mask(&mut self, w: usize, h: usize, density: f64) -> BinaryMask {
        BinaryMask::new(w, h, (0..w * h).map(|_| u8::from(self.coin(density))).collect()).unwrap()
    }

    pub fn organ_mask(&mut self, w: usize, h: usize) -> BinaryMask {
        let density = self.unit();
        let mut m = self.mask(w, h, density).values().to_vec();
        let i = self.range(0, w * h - 1);
        m[i] = 1;
        BinaryMask::new(w, h, m).unwrap()
    }

    pub fn sample(&mut self, w: usize, h: usize, organ: bool, patient: &str, slice: &str) -> Sample {
        let mask = if organ {
            self.organ_mask(w, h)
        } else {
            BinaryMask::zeros(w, h).unwrap()
        };
        Sample::new(self.image(w, h), mask, patient, slice).unwrap()
    }
}
