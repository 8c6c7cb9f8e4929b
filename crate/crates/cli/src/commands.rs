use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use keepaug_core::io::{prediction_path, sanitize, write_image8, write_sample_as, PatientEntry, SliceEntry};
use keepaug_core::render::preview_panel;
use keepaug_core::sampler::{EpochStats, PlannedAction};
use keepaug_core::{
    evaluate_dataset, load_manifest, DatasetManifest, DiceReport, PolicyFile, Provenance, Sample,
    Sampler,
};
use rayon::prelude::*;

use crate::bench::{run_bench, BenchReport};
use crate::output::{StagedDir, StagedFile};

/// Command-line seed wins over the policy file; default 0.
pub fn resolve_seed(cli_seed: Option<u64>, policy: &PolicyFile) -> u64 {
    cli_seed.or(policy.seed).unwrap_or(0)
}

fn load_inputs(manifest: &Path, policy: &Path) -> Result<(DatasetManifest, Vec<Sample>, PolicyFile)> {
    let policy = PolicyFile::load(policy).with_context(|| format!("loading policy {}", policy.display()))?;
    let manifest = load_manifest(manifest).with_context(|| format!("loading manifest {}", manifest.display()))?;
    let samples = manifest.load_samples().context("loading samples")?;
    Ok((manifest, samples, policy))
}

pub fn format_stats(epoch: u64, stats: &EpochStats) -> String {
    let mut line = format!("epoch={epoch}");
    for (tag, count) in stats.by_tag() {
        line.push_str(&format!(" {tag}={count}"));
    }
    line.push_str(&format!(" degraded={} total={}", stats.degraded, stats.total()));
    line
}

#[derive(Clone, Debug)]
pub struct AugmentArgs {
    pub manifest: PathBuf,
    pub policy: PathBuf,
    pub epochs: u64,
    pub batch_size: usize,
    pub out: PathBuf,
    pub dry_run: bool,
    pub seed: Option<u64>,
    pub force: bool,
}

/// Writes `<out>/epoch_NNN/` trees, each with the augmented PNGs and a
/// `manifest.json` indexing them. Returns per-epoch stats.
pub fn augment(args: &AugmentArgs, log: &mut dyn Write) -> Result<Vec<EpochStats>> {
    if args.batch_size == 0 {
        bail!("--batch-size must be at least 1");
    }
    let (_, samples, policy_file) = load_inputs(&args.manifest, &args.policy)?;
    let seed = resolve_seed(args.seed, &policy_file);
    let sampler = Sampler::new(&samples, policy_file.to_policy()?, seed)?;

    let staged = if args.dry_run {
        None
    } else {
        Some(StagedDir::new(&args.out, args.force)?)
    };

    let mut all_stats = Vec::new();
    for epoch in 0..args.epochs {
        let plan = sampler.plan_epoch(epoch, args.batch_size)?;
        let stats = plan.stats();
        if let Some(staged) = &staged {
            let dir = staged.path().join(format!("epoch_{epoch:03}"));
            fs::create_dir_all(&dir)?;
            write_epoch(&sampler, &plan, &dir)?;
        }
        writeln!(log, "{}", format_stats(epoch, &stats))?;
        all_stats.push(stats);
    }
    if let Some(staged) = staged {
        let out = staged.commit()?;
        writeln!(log, "wrote {}", out.display())?;
    }
    Ok(all_stats)
}

fn write_epoch(
    sampler: &Sampler<'_>,
    plan: &keepaug_core::sampler::EpochPlan,
    dir: &Path,
) -> Result<()> {
    let mut patients: Vec<PatientEntry> = Vec::new();
    let mut patient_slot: HashMap<String, usize> = HashMap::new();
    for batch_index in 0..plan.num_batches() {
        let batch = sampler.build_batch(plan, batch_index)?;
        let first = batch_index * plan.batch_size;
        // Positions make names unique: one background slice can host several KeepMix outputs.
        let written = batch
            .items
            .par_iter()
            .enumerate()
            .map(|(offset, item)| {
                let s = &item.sample;
                let slice_id = format!(
                    "{:06}_{}_{}",
                    first + offset,
                    sanitize(s.slice_id()),
                    s.provenance().file_tag()
                );
                let stem = format!("{}_{}", sanitize(s.patient_id()), slice_id);
                let paths = write_sample_as(s, dir, &stem)?;
                Ok((s.patient_id().to_owned(), slice_id, paths))
            })
            .collect::<keepaug_core::Result<Vec<_>>>()?;
        for (patient, slice_id, paths) in written {
            let slot = *patient_slot.entry(patient.clone()).or_insert_with(|| {
                patients.push(PatientEntry {
                    id: patient,
                    slices: Vec::new(),
                });
                patients.len() - 1
            });
            let rel = |p: &Path| PathBuf::from(p.file_name().expect("written file has a name"));
            patients[slot].slices.push(SliceEntry {
                slice_id,
                image_path: rel(&paths.image),
                mask_path: rel(&paths.mask),
            });
        }
    }
    let manifest = DatasetManifest::new(patients, dir);
    fs::write(dir.join("manifest.json"), manifest.to_json() + "\n")?;
    Ok(())
}

/// Writes the metrics CSV and returns the report. Every missing prediction
/// is listed in the error.
pub fn evaluate(pred: &Path, manifest: &Path, out: &Path) -> Result<DiceReport> {
    let manifest = load_manifest(manifest).with_context(|| format!("loading manifest {}", manifest.display()))?;
    let missing: Vec<String> = manifest
        .entries()
        .filter(|e| !prediction_path(pred, e.patient_id, &e.slice.slice_id).is_file())
        .map(|e| format!("{}/{}", e.patient_id, e.slice.slice_id))
        .collect();
    if !missing.is_empty() {
        bail!(
            "missing predictions for {} slice(s) in {}: {}",
            missing.len(),
            pred.display(),
            missing.join(", ")
        );
    }
    let report = evaluate_dataset(pred, &manifest)?;
    let mut staged = StagedFile::new(out)?;
    report.write_csv(staged.file())?;
    staged.commit()?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct PreviewArgs {
    pub manifest: PathBuf,
    pub policy: PathBuf,
    /// `<patient>/<slice>`
    pub sample: String,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub epoch: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreviewOutcome {
    pub provenance: Provenance,
    pub degraded: bool,
}

pub fn preview(args: &PreviewArgs) -> Result<PreviewOutcome> {
    let (patient, slice) = args
        .sample
        .split_once('/')
        .ok_or_else(|| anyhow!("--sample must be <patient>/<slice>, got {:?}", args.sample))?;
    let (manifest, samples, policy_file) = load_inputs(&args.manifest, &args.policy)?;
    let (index, _) = manifest
        .find(patient, slice)
        .ok_or_else(|| keepaug_core::Error::UnknownSample(args.sample.clone()))?;
    let seed = resolve_seed(args.seed, &policy_file);
    let sampler = Sampler::new(&samples, policy_file.to_policy()?, seed)?;
    let plan = sampler.plan_forced(index, args.epoch);
    let item = sampler.execute(&plan, args.epoch)?;
    let original = &samples[index];
    let panel = preview_panel(original.image(), item.sample.image(), item.sample.mask())?;
    let staged = StagedFile::new(&args.out)?;
    write_image8(&panel, staged.path())?;
    staged.commit()?;
    Ok(PreviewOutcome {
        provenance: item.sample.provenance(),
        degraded: matches!(plan.action, PlannedAction::Degraded { .. }),
    })
}

#[derive(Clone, Debug)]
pub struct BenchArgs {
    pub manifest: PathBuf,
    pub policy: PathBuf,
    pub iterations: u64,
    pub seed: Option<u64>,
}

pub fn bench(args: &BenchArgs) -> Result<BenchReport> {
    let (_, samples, policy_file) = load_inputs(&args.manifest, &args.policy)?;
    let seed = resolve_seed(args.seed, &policy_file);
    Ok(run_bench(&samples, &policy_file.to_policy()?, args.iterations, seed)?)
}
