//! Dataset manifests and PNG persistence.
//!
//! A manifest is a JSON document grouping slice files by patient:
//!
//! ```json
//! {
//!   "patients": [
//!     { "id": "p01",
//!       "slices": [
//!         { "slice_id": "042", "image_path": "img/p01_042.png", "mask_path": "mask/p01_042.png" }
//!       ] }
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BinaryMask, Image2D, Sample};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceEntry {
    pub slice_id: String,
    pub image_path: PathBuf,
    pub mask_path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientEntry {
    pub id: String,
    pub slices: Vec<SliceEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub patients: Vec<PatientEntry>,
    #[serde(skip)]
    root: PathBuf,
}

/// One slice with its patient, paths resolved against the manifest root.
#[derive(Clone, Copy, Debug)]
pub struct ManifestEntry<'a> {
    pub patient_id: &'a str,
    pub slice: &'a SliceEntry,
    root: &'a Path,
}

impl ManifestEntry<'_> {
    pub fn image_path(&self) -> PathBuf {
        self.root.join(&self.slice.image_path)
    }

    pub fn mask_path(&self) -> PathBuf {
        self.root.join(&self.slice.mask_path)
    }

    /// `<patient>_<slice>` with unsafe characters replaced.
    pub fn stem(&self) -> String {
        format!(
            "{}_{}",
            sanitize(self.patient_id),
            sanitize(&self.slice.slice_id)
        )
    }
}

impl DatasetManifest {
    pub fn new(patients: Vec<PatientEntry>, root: impl Into<PathBuf>) -> Self {
        Self {
            patients,
            root: root.into(),
        }
    }

    /// Parses manifest JSON; `path` is only used for error context and to
    /// resolve relative file paths.
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let mut manifest: DatasetManifest =
            serde_json::from_str(text).map_err(|e| Error::Parse {
                path: path.to_owned(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        manifest.root = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        manifest.check_ids()?;
        Ok(manifest)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> impl Iterator<Item = ManifestEntry<'_>> {
        self.patients.iter().flat_map(move |p| {
            p.slices.iter().map(move |slice| ManifestEntry {
                patient_id: &p.id,
                slice,
                root: &self.root,
            })
        })
    }

    pub fn len(&self) -> usize {
        self.patients.iter().map(|p| p.slices.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn find(&self, patient_id: &str, slice_id: &str) -> Option<(usize, ManifestEntry<'_>)> {
        self.entries()
            .enumerate()
            .find(|(_, e)| e.patient_id == patient_id && e.slice.slice_id == slice_id)
    }

    fn check_ids(&self) -> Result<()> {
        let mut patients = HashSet::new();
        for patient in &self.patients {
            if !patients.insert(patient.id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "patient",
                    id: patient.id.clone(),
                });
            }
            let mut slices = HashSet::new();
            for slice in &patient.slices {
                if !slices.insert(slice.slice_id.as_str()) {
                    return Err(Error::DuplicateId {
                        kind: "slice",
                        id: format!("{}/{}", patient.id, slice.slice_id),
                    });
                }
            }
        }
        Ok(())
    }

    /// Every referenced file must exist.
    pub fn check_files(&self) -> Result<()> {
        for entry in self.entries() {
            for path in [entry.image_path(), entry.mask_path()] {
                if !path.is_file() {
                    return Err(Error::MissingFile(path));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Loads every sample in manifest order.
    pub fn load_samples(&self) -> Result<Vec<Sample>> {
        use rayon::prelude::*;
        let entries: Vec<_> = self.entries().collect();
        entries.par_iter().map(load_sample).collect()
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = DatasetManifest::from_json(&text, path)?;
    manifest.check_files()?;
    Ok(manifest)
}

pub fn load_sample(entry: &ManifestEntry<'_>) -> Result<Sample> {
    let image = load_image(&entry.image_path())?;
    let mask = load_mask(&entry.mask_path())?;
    Sample::new(image, mask, entry.patient_id, entry.slice.slice_id.as_str())
}

fn decode_png(path: &Path) -> Result<DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    // Classify by content, not extension.
    match image::guess_format(&bytes) {
        Ok(ImageFormat::Png) => {}
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_owned(),
                detail: match other {
                    Ok(f) => format!("expected PNG, found {f:?}"),
                    Err(_) => "expected PNG, found unrecognized data".into(),
                },
            })
        }
    }
    image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| Error::Decode {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

fn unsupported(path: &Path, img: &DynamicImage) -> Error {
    Error::UnsupportedFormat {
        path: path.to_owned(),
        detail: format!("expected 8- or 16-bit grayscale, found {:?}", img.color()),
    }
}

/// Grayscale PNG, 8-bit (`v / 255`) or 16-bit (`v / 65535`).
pub fn load_image(path: &Path) -> Result<Image2D> {
    let img = decode_png(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<f64> = match &img {
        DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => {
            buf.as_raw().iter().map(|&v| f64::from(v) / 65535.0).collect()
        }
        other => return Err(unsupported(path, other)),
    };
    Image2D::new(w, h, pixels)
}

/// Grayscale PNG binarized at half the representable maximum
/// (`> 127` for 8-bit, `> 32767` for 16-bit).
pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let img = decode_png(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<u8> = match &img {
        DynamicImage::ImageLuma8(buf) => buf.as_raw().iter().map(|&v| u8::from(v > 127)).collect(),
        DynamicImage::ImageLuma16(buf) => {
            buf.as_raw().iter().map(|&v| u8::from(v > 32767)).collect()
        }
        other => return Err(unsupported(path, other)),
    };
    BinaryMask::new(w, h, values)
}

/// Replaces characters outside `[A-Za-z0-9._-]` with `-`.
pub fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// Where `evaluate_dataset` looks for a slice's predicted mask.
pub fn prediction_path(pred_dir: &Path, patient_id: &str, slice_id: &str) -> PathBuf {
    pred_dir.join(format!("{}_{}.png", sanitize(patient_id), sanitize(slice_id)))
}

/// `<patient>_<slice>_<provenance>` with `:` and other unsafe characters sanitized.
pub fn sample_stem(sample: &Sample) -> String {
    format!(
        "{}_{}_{}",
        sanitize(sample.patient_id()),
        sanitize(sample.slice_id()),
        sample.provenance().file_tag()
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrittenPaths {
    pub image: PathBuf,
    pub mask: PathBuf,
}

fn dims_u32(path: &Path, w: usize, h: usize) -> Result<(u32, u32)> {
    match (u32::try_from(w), u32::try_from(h)) {
        (Ok(w), Ok(h)) => Ok((w, h)),
        _ => Err(Error::UnsupportedFormat {
            path: path.to_owned(),
            detail: format!("{w}x{h} exceeds PNG limits"),
        }),
    }
}

fn save_png<P>(path: &Path, buf: ImageBuffer<P, Vec<P::Subpixel>>) -> Result<()>
where
    P: image::Pixel + image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
{
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::io(path, std::io::Error::other(other)),
        })
}

/// Writes a 16-bit grayscale PNG (`round(v * 65535)`).
pub fn write_image16(image: &Image2D, path: &Path) -> Result<()> {
    let (w, h) = dims_u32(path, image.width(), image.height())?;
    let data: Vec<u16> = image
        .pixels()
        .iter()
        .map(|&v| (v * 65535.0).round() as u16)
        .collect();
    let buf = ImageBuffer::<Luma<u16>, _>::from_raw(w, h, data).expect("buffer size matches");
    save_png(path, buf)
}

/// Writes an 8-bit grayscale PNG (`round(v * 255)`), used for previews.
pub fn write_image8(image: &Image2D, path: &Path) -> Result<()> {
    let (w, h) = dims_u32(path, image.width(), image.height())?;
    let data: Vec<u8> = image
        .pixels()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    let buf = ImageBuffer::<Luma<u8>, _>::from_raw(w, h, data).expect("buffer size matches");
    save_png(path, buf)
}

/// Writes an 8-bit mask PNG with values {0, 255}.
pub fn write_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let (w, h) = dims_u32(path, mask.width(), mask.height())?;
    let data: Vec<u8> = mask.values().iter().map(|&v| v * 255).collect();
    let buf = ImageBuffer::<Luma<u8>, _>::from_raw(w, h, data).expect("buffer size matches");
    save_png(path, buf)
}

/// Writes `<stem>.png` and `<stem>_mask.png` into `out_dir`.
pub fn write_sample_as(sample: &Sample, out_dir: &Path, stem: &str) -> Result<WrittenPaths> {
    let paths = WrittenPaths {
        image: out_dir.join(format!("{stem}.png")),
        mask: out_dir.join(format!("{stem}_mask.png")),
    };
    write_image16(sample.image(), &paths.image)?;
    write_mask(sample.mask(), &paths.mask)?;
    Ok(paths)
}

/// Writes the sample under its default [`sample_stem`].
pub fn write_sample(sample: &Sample, out_dir: &Path) -> Result<WrittenPaths> {
    write_sample_as(sample, out_dir, &sample_stem(sample))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Provenance;

    fn write_gray8(path: &Path, w: u32, h: u32, data: Vec<u8>) {
        ImageBuffer::<Luma<u8>, _>::from_raw(w, h, data)
            .unwrap()
            .save_with_format(path, ImageFormat::Png)
            .unwrap();
    }

    fn manifest_json(patients: &[(&str, &[&str])]) -> String {
        let patients: Vec<PatientEntry> = patients
            .iter()
            .map(|(id, slices)| PatientEntry {
                id: id.to_string(),
                slices: slices
                    .iter()
                    .map(|s| SliceEntry {
                        slice_id: s.to_string(),
                        image_path: format!("{id}_{s}.png").into(),
                        mask_path: format!("{id}_{s}_m.png").into(),
                    })
                    .collect(),
            })
            .collect();
        DatasetManifest::new(patients, "").to_json()
    }

    fn populate(dir: &Path, patients: &[(&str, &[&str])]) -> PathBuf {
        for (id, slices) in patients {
            for s in *slices {
                write_gray8(&dir.join(format!("{id}_{s}.png")), 2, 2, vec![0, 64, 128, 255]);
                write_gray8(&dir.join(format!("{id}_{s}_m.png")), 2, 2, vec![0, 10, 200, 255]);
            }
        }
        let path = dir.join("manifest.json");
        fs::write(&path, manifest_json(patients)).unwrap();
        path
    }

    #[test]
    fn loads_in_file_order() {
        let dir = tempfile::tempdir().unwrap();
        let layout: &[(&str, &[&str])] = &[("b", &["3", "1", "2"]), ("a", &["x", "y", "z"])];
        let path = populate(dir.path(), layout);
        let manifest = load_manifest(&path).unwrap();
        let order: Vec<(String, String)> = manifest
            .entries()
            .map(|e| (e.patient_id.to_owned(), e.slice.slice_id.clone()))
            .collect();
        assert_eq!(order.len(), 6);
        assert_eq!(order[0], ("b".into(), "3".into()));
        assert_eq!(order[5], ("a".into(), "z".into()));
        let samples = manifest.load_samples().unwrap();
        assert_eq!(samples.len(), 6);
        assert_eq!(samples[1].slice_id(), "1");
        assert_eq!(load_manifest(&path).unwrap(), manifest);
    }

    #[test]
    fn missing_mask_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = populate(dir.path(), &[("p", &["1"])]);
        let gone = dir.path().join("p_1_m.png");
        fs::remove_file(&gone).unwrap();
        match load_manifest(&path) {
            Err(Error::MissingFile(p)) => assert_eq!(p, gone),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dup_patient = manifest_json(&[("p", &["1"]), ("p", &["2"])]);
        assert!(matches!(
            DatasetManifest::from_json(&dup_patient, Path::new("m.json")),
            Err(Error::DuplicateId { kind: "patient", .. })
        ));
        let dup_slice = manifest_json(&[("p", &["1", "1"])]);
        assert!(matches!(
            DatasetManifest::from_json(&dup_slice, Path::new("m.json")),
            Err(Error::DuplicateId { kind: "slice", .. })
        ));
    }

    #[test]
    fn parse_errors_carry_position() {
        let text = "{\n  \"patients\": [\n    { \"id\": \"p\", \"slices\": [], \"extra\": 1 }\n  ]\n}";
        match DatasetManifest::from_json(text, Path::new("m.json")) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("extra"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            DatasetManifest::from_json("{ not json", Path::new("m.json")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn normalization_and_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let p8 = dir.path().join("i8.png");
        write_gray8(&p8, 2, 1, vec![255, 0]);
        assert_eq!(load_image(&p8).unwrap().pixels(), &[1.0, 0.0]);

        let m8 = dir.path().join("m8.png");
        write_gray8(&m8, 4, 1, vec![200, 10, 127, 128]);
        assert_eq!(load_mask(&m8).unwrap().values(), &[1, 0, 0, 1]);

        let p16 = dir.path().join("i16.png");
        ImageBuffer::<Luma<u16>, _>::from_raw(2, 1, vec![65535u16, 32768])
            .unwrap()
            .save_with_format(&p16, ImageFormat::Png)
            .unwrap();
        let img = load_image(&p16).unwrap();
        assert_eq!(img.pixels()[0], 1.0);
        assert_eq!(load_mask(&p16).unwrap().values(), &[1, 1]);
    }

    #[test]
    fn rejects_color_and_non_png() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = dir.path().join("rgb.png");
        ImageBuffer::<image::Rgb<u8>, _>::from_raw(1, 1, vec![1u8, 2, 3])
            .unwrap()
            .save_with_format(&rgb, ImageFormat::Png)
            .unwrap();
        assert!(matches!(load_image(&rgb), Err(Error::UnsupportedFormat { .. })));

        let txt = dir.path().join("not.png");
        fs::write(&txt, "hello").unwrap();
        assert!(matches!(load_image(&txt), Err(Error::UnsupportedFormat { .. })));

        let broken = dir.path().join("broken.png");
        let mut bytes = Vec::new();
        fs::File::open(&rgb).map(|mut f| std::io::Read::read_to_end(&mut f, &mut bytes)).unwrap().unwrap();
        bytes.truncate(bytes.len() / 2);
        fs::write(&broken, bytes).unwrap();
        assert!(matches!(load_image(&broken), Err(Error::Decode { .. })));
    }

    #[test]
    fn write_names_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let image = Image2D::new(3, 1, vec![0.0, 0.123456789, 1.0]).unwrap();
        let mask = BinaryMask::new(3, 1, vec![0, 1, 1]).unwrap();
        let sample = Sample::new(image.clone(), mask.clone(), "p/1", "s 2")
            .unwrap()
            .with_provenance(Provenance::KeepMixDiff);
        let written = write_sample(&sample, dir.path()).unwrap();
        assert_eq!(
            written.image.file_name().unwrap(),
            "p-1_s-2_keepmix-diff.png"
        );
        assert_eq!(
            written.mask.file_name().unwrap(),
            "p-1_s-2_keepmix-diff_mask.png"
        );
        assert_eq!(load_mask(&written.mask).unwrap(), mask);
        let back = load_image(&written.image).unwrap();
        for (a, b) in back.pixels().iter().zip(image.pixels()) {
            assert!((a - b).abs() <= 1.0 / 65535.0);
        }
    }
}
