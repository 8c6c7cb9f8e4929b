#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use keepaug_core::io::{write_image16, write_mask, PatientEntry, SliceEntry};
use keepaug_core::{BinaryMask, DatasetManifest, Image2D, OperatorTag, RngStream, Sample, StreamKey};

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

    /// Random mask with at least one foreground pixel.
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

/// Writes samples as 16-bit images and 8-bit masks under `dir` plus a
/// `manifest.json`, returning the manifest path.
pub fn write_dataset(dir: &Path, samples: &[Sample]) -> PathBuf {
    fs::create_dir_all(dir.join("img")).unwrap();
    let mut patients: BTreeMap<&str, Vec<SliceEntry>> = BTreeMap::new();
    for s in samples {
        let stem = format!("{}_{}", s.patient_id(), s.slice_id());
        let image_path = PathBuf::from(format!("img/{stem}.png"));
        let mask_path = PathBuf::from(format!("img/{stem}_mask.png"));
        write_image16(s.image(), &dir.join(&image_path)).unwrap();
        write_mask(s.mask(), &dir.join(&mask_path)).unwrap();
        patients.entry(s.patient_id()).or_default().push(SliceEntry {
            slice_id: s.slice_id().to_owned(),
            image_path,
            mask_path,
        });
    }
    let patients = patients
        .into_iter()
        .map(|(id, slices)| PatientEntry {
            id: id.to_owned(),
            slices,
        })
        .collect();
    let path = dir.join("manifest.json");
    fs::write(&path, DatasetManifest::new(patients, dir).to_json()).unwrap();
    path
}

/// `n` slices of `w`x`h` spread over `patients` patients, each patient
/// holding both organ and organ-free slices.
pub fn mixed_dataset(n: usize, patients: usize, w: usize, h: usize, seed: u64) -> Vec<Sample> {
    let mut g = Gen::new(seed);
    (0..n)
        .map(|i| {
            let organ = (i / patients).is_multiple_of(2);
            g.sample(w, h, organ, &format!("p{}", i % patients), &format!("s{i:05}"))
        })
        .collect()
}

pub fn write_policy(path: &Path, body: &str) -> PathBuf {
    fs::write(path, body).unwrap();
    path.to_path_buf()
}

pub const ALL_OPERATORS: &str = r#"
[[operators]]
kind = "keep_gaussian_blur"
sigma = 1.0

[[operators]]
kind = "keep_grid_dropout"
unit_size = 4

[[operators]]
kind = "keepmix_same"

[[operators]]
kind = "keepmix_diff"
"#;

pub fn policy_text(p: f64, seed: Option<u64>) -> String {
    let seed = seed.map(|s| format!("seed = {s}\n")).unwrap_or_default();
    format!("p = {p}\n{seed}{ALL_OPERATORS}")
}

pub fn keepaug() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_keepaug"));
    cmd.env_remove("KEEPAUG_THREADS");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    keepaug().args(args).output().unwrap()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Relative path and content of every file below `root`, in path order.
pub fn tree_bytes(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_path_buf();
            (rel, fs::read(e.path()).unwrap())
        })
        .collect()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Sums `tag=count` fields of `epoch=` lines printed by `augment`.
pub fn stat_counts(text: &str) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for line in text.lines().filter(|l| l.starts_with("epoch=")) {
        for field in line.split_whitespace().skip(1) {
            let (k, v) = field.split_once('=').unwrap();
            *counts.entry(k.to_owned()).or_default() += v.parse::<usize>().unwrap();
        }
    }
    counts
}
