//! Dice evaluation of predicted masks against a ground-truth manifest.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{load_mask, prediction_path, DatasetManifest};
use crate::types::BinaryMask;

/// `2|P ∩ T| / (|P| + |T|)`, defined as 1.0 when both masks are empty.
pub fn dice(pred: &BinaryMask, truth: &BinaryMask) -> Result<f64> {
    if pred.dims() != truth.dims() {
        return Err(Error::DimensionMismatch {
            expected: truth.dims(),
            found: pred.dims(),
        });
    }
    let (mut inter, mut total) = (0usize, 0usize);
    for (&p, &t) in pred.values().iter().zip(truth.values()) {
        inter += usize::from(p & t);
        total += usize::from(p) + usize::from(t);
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiceReport {
    pub per_image: Vec<(String, f64)>,
    /// Unweighted mean over slices.
    pub mean: f64,
}

impl DiceReport {
    pub fn from_scores(per_image: Vec<(String, f64)>) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mean = per_image.iter().map(|(_, d)| d).sum::<f64>() / per_image.len() as f64;
        Ok(Self { per_image, mean })
    }

    /// CSV with header `slice_id,dice` and a trailing `mean,<value>` row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let to_io = |e: csv::Error| Error::io("<csv>", e.into());
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["slice_id", "dice"]).map_err(to_io)?;
        for (id, d) in &self.per_image {
            writer
                .write_record([id.as_str(), &format!("{d:.6}")])
                .map_err(to_io)?;
        }
        writer
            .write_record(["mean", &format!("{:.6}", self.mean)])
            .map_err(to_io)?;
        writer.flush().map_err(|e| Error::io("<csv>", e))
    }

    /// Mean as a percentage with two decimals, e.g. `94.15`.
    pub fn mean_percent(&self) -> String {
        format!("{:.2}", self.mean * 100.0)
    }
}

/// Scores every manifest slice against `<pred_dir>/<patient>_<slice>.png`.
/// Reported slice ids use the same `<patient>_<slice>` stem.
pub fn evaluate_dataset(pred_dir: &Path, manifest: &DatasetManifest) -> Result<DiceReport> {
    let entries: Vec<_> = manifest.entries().collect();
    for entry in &entries {
        let path = prediction_path(pred_dir, entry.patient_id, entry.slice.slice_id.as_str());
        if !path.is_file() {
            return Err(Error::MissingPrediction {
                slice_id: entry.stem(),
                path,
            });
        }
    }
    let scores = entries
        .par_iter()
        .map(|entry| {
            let pred = load_mask(&prediction_path(
                pred_dir,
                entry.patient_id,
                &entry.slice.slice_id,
            ))?;
            let truth = load_mask(&entry.mask_path())?;
            Ok((entry.stem(), dice(&pred, &truth)?))
        })
        .collect::<Result<Vec<_>>>()?;
    DiceReport::from_scores(scores)
}
