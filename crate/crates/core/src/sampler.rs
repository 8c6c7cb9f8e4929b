//! Epoch planning and batch construction.
//!
//! Each sample is augmented independently with probability `p`, using an
//! operator drawn from the policy weights. Every random choice for sample `i`
//! in epoch `e` comes from streams keyed by `(seed, e, i, tag)`, so the batch
//! sequence is identical regardless of how many threads execute it.
//!
//! Stream usage per sample:
//! - `Decision`: first value gates augmentation (`u < p`), second picks the operator.
//! - `GaussianBlur` / `GridDropout`: consumed by the KeepMask perturbation.
//! - `MixSame` / `MixDiff`: partner selection.
//!
//! The epoch order comes from the `Shuffle` stream at sample index 0.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::keepmask::{keepmask, KeepMaskOp};
use crate::keepmix::{keepmix, MixMode, MixPair, PairingIndex};
use crate::perturb::{GaussianParams, GridDropoutParams};
use crate::rng::{OperatorTag, RngStream, StreamKey};
use crate::types::{Provenance, Sample};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AugOperator {
    KeepGaussianBlur(GaussianParams),
    KeepGridDropout(GridDropoutParams),
    KeepMixSame,
    KeepMixDiff,
}

impl AugOperator {
    pub fn provenance(&self) -> Provenance {
        match self {
            AugOperator::KeepGaussianBlur(_) => Provenance::KeepMaskGaussian,
            AugOperator::KeepGridDropout(_) => Provenance::KeepMaskGridDrop,
            AugOperator::KeepMixSame => Provenance::KeepMixSame,
            AugOperator::KeepMixDiff => Provenance::KeepMixDiff,
        }
    }

    pub fn keepmask_op(&self) -> Option<KeepMaskOp> {
        match *self {
            AugOperator::KeepGaussianBlur(p) => Some(KeepMaskOp::GaussianBlur(p)),
            AugOperator::KeepGridDropout(p) => Some(KeepMaskOp::GridDropout(p)),
            _ => None,
        }
    }

    pub fn mix_mode(&self) -> Option<MixMode> {
        match self {
            AugOperator::KeepMixSame => Some(MixMode::SamePatient),
            AugOperator::KeepMixDiff => Some(MixMode::DifferentPatient),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.keepmask_op() {
            Some(op) => op.validate(),
            None => Ok(()),
        }
    }
}

/// Augmentation probability plus a weighted operator list.
#[derive(Clone, Debug, PartialEq)]
pub struct AugPolicy {
    p: f64,
    operators: Vec<AugOperator>,
    weights: Vec<f64>,
}

impl AugPolicy {
    /// Weights must be positive; they are normalized to sum to 1.
    pub fn new(p: f64, operators: Vec<(AugOperator, f64)>) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("p must be in [0, 1], got {p}")));
        }
        if operators.is_empty() {
            return Err(Error::EmptyPolicy);
        }
        for (op, w) in &operators {
            op.validate()?;
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "operator weight must be > 0, got {w}"
                )));
            }
        }
        let total: f64 = operators.iter().map(|(_, w)| w).sum();
        let (operators, weights) = operators.into_iter().map(|(op, w)| (op, w / total)).unzip();
        Ok(Self {
            p,
            operators,
            weights,
        })
    }

    /// Equal weights for every operator.
    pub fn uniform(p: f64, operators: Vec<AugOperator>) -> Result<Self> {
        Self::new(p, operators.into_iter().map(|op| (op, 1.0)).collect())
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn operators(&self) -> &[AugOperator] {
        &self.operators
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Maps `u` in `[0, 1)` onto an operator by cumulative weight.
    pub fn choose(&self, u: f64) -> &AugOperator {
        let mut acc = 0.0;
        for (op, w) in self.operators.iter().zip(&self.weights) {
            acc += w;
            if u < acc {
                return op;
            }
        }
        self.operators.last().expect("policy is non-empty")
    }
}

/// What the sampler decided to do with one dataset sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlannedAction {
    Original,
    KeepMask(KeepMaskOp),
    KeepMix {
        background: usize,
        donor: usize,
        mode: MixMode,
    },
    /// A KeepMix draw found no eligible partner; the sample passes through.
    Degraded { requested: Provenance },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannedItem {
    pub sample_index: usize,
    pub action: PlannedAction,
}

impl PlannedItem {
    pub fn provenance(&self) -> Provenance {
        match self.action {
            PlannedAction::Original | PlannedAction::Degraded { .. } => Provenance::Original,
            PlannedAction::KeepMask(op) => op.provenance(),
            PlannedAction::KeepMix { mode, .. } => mode.provenance(),
        }
    }

    pub fn is_degraded(&self) -> bool {
        matches!(self.action, PlannedAction::Degraded { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochPlan {
    pub epoch: u64,
    pub batch_size: usize,
    pub items: Vec<PlannedItem>,
}

impl EpochPlan {
    pub fn num_batches(&self) -> usize {
        self.items.len().div_ceil(self.batch_size)
    }

    pub fn batch(&self, batch_index: usize) -> &[PlannedItem] {
        let start = batch_index * self.batch_size;
        let end = (start + self.batch_size).min(self.items.len());
        &self.items[start..end]
    }

    pub fn stats(&self) -> EpochStats {
        let mut stats = EpochStats::default();
        for item in &self.items {
            stats.record(item.provenance(), item.is_degraded());
        }
        stats
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchItem {
    pub sample: Sample,
    /// Set when a requested KeepMix fell back to the original sample.
    pub degraded: bool,
}

impl BatchItem {
    pub fn provenance(&self) -> Provenance {
        self.sample.provenance()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub items: Vec<BatchItem>,
    pub epoch: u64,
    pub batch_index: usize,
}

/// Per-provenance counts for one epoch.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EpochStats {
    pub counts: BTreeMap<Provenance, usize>,
    /// Samples tagged `original` because KeepMix had no eligible partner.
    pub degraded: usize,
}

impl EpochStats {
    fn record(&mut self, tag: Provenance, degraded: bool) {
        *self.counts.entry(tag).or_default() += 1;
        self.degraded += usize::from(degraded);
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn count(&self, tag: Provenance) -> usize {
        self.counts.get(&tag).copied().unwrap_or(0)
    }

    pub fn augmented(&self) -> usize {
        self.total() - self.count(Provenance::Original)
    }

    /// Tag-string keyed view, e.g. `{"original": 100}`.
    pub fn by_tag(&self) -> BTreeMap<&'static str, usize> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v)).collect()
    }
}

pub fn epoch_stats(batches: &[Batch]) -> EpochStats {
    let mut stats = EpochStats::default();
    for item in batches.iter().flat_map(|b| &b.items) {
        stats.record(item.provenance(), item.degraded);
    }
    stats
}

/// Applies one operator to `dataset[anchor]`, consuming that sample's
/// operator stream. KeepMix returns `NoEligiblePartner` when the pool is empty.
pub fn apply_operator(
    dataset: &[Sample],
    pairing: &PairingIndex,
    anchor: usize,
    op: &AugOperator,
    epoch: u64,
    master_seed: u64,
) -> Result<Sample> {
    let key = |tag| StreamKey::new(epoch, anchor as u64, tag);
    if let Some(mask_op) = op.keepmask_op() {
        let mut rng = RngStream::new(master_seed, key(mask_op.rng_tag()));
        return keepmask(&dataset[anchor], &mask_op, &mut rng);
    }
    let mode = op.mix_mode().expect("non-KeepMask operators are KeepMix");
    let mut rng = RngStream::new(master_seed, key(mode.rng_tag()));
    keepmix(&pairing.select(dataset, anchor, mode, &mut rng)?)
}

/// Dataset-bound sampler; owns the pairing index so it is built once.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    dataset: &'a [Sample],
    pairing: PairingIndex,
    policy: AugPolicy,
    master_seed: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(dataset: &'a [Sample], policy: AugPolicy, master_seed: u64) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            dataset,
            pairing: PairingIndex::new(dataset),
            policy,
            master_seed,
        })
    }

    pub fn dataset(&self) -> &'a [Sample] {
        self.dataset
    }

    pub fn pairing(&self) -> &PairingIndex {
        &self.pairing
    }

    pub fn policy(&self) -> &AugPolicy {
        &self.policy
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Epoch visiting order.
    pub fn epoch_order(&self, epoch: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.dataset.len()).collect();
        RngStream::new(self.master_seed, StreamKey::new(epoch, 0, OperatorTag::Shuffle))
            .shuffle(&mut order);
        order
    }

    fn resolve(&self, sample_index: usize, op: &AugOperator, epoch: u64) -> PlannedAction {
        if let Some(mask_op) = op.keepmask_op() {
            return PlannedAction::KeepMask(mask_op);
        }
        let mode = op.mix_mode().expect("non-KeepMask operators are KeepMix");
        let mut rng = RngStream::new(
            self.master_seed,
            StreamKey::new(epoch, sample_index as u64, mode.rng_tag()),
        );
        match self
            .pairing
            .select_partner(self.dataset, sample_index, mode, &mut rng)
        {
            Ok(partner) => {
                let (background, donor) = if self.dataset[sample_index].has_organ() {
                    (partner, sample_index)
                } else {
                    (sample_index, partner)
                };
                PlannedAction::KeepMix {
                    background,
                    donor,
                    mode,
                }
            }
            Err(_) => PlannedAction::Degraded {
                requested: mode.provenance(),
            },
        }
    }

    /// Decides the action for one sample (independent of visiting order).
    pub fn plan_item(&self, sample_index: usize, epoch: u64) -> PlannedItem {
        let mut decision = RngStream::new(
            self.master_seed,
            StreamKey::new(epoch, sample_index as u64, OperatorTag::Decision),
        );
        let action = if decision.next_f64() < self.policy.p {
            let op = self.policy.choose(decision.next_f64());
            self.resolve(sample_index, op, epoch)
        } else {
            PlannedAction::Original
        };
        PlannedItem {
            sample_index,
            action,
        }
    }

    /// Like [`plan_item`](Self::plan_item) but always augments, ignoring `p`.
    /// The operator is drawn from the same decision stream position.
    pub fn plan_forced(&self, sample_index: usize, epoch: u64) -> PlannedItem {
        let mut decision = RngStream::new(
            self.master_seed,
            StreamKey::new(epoch, sample_index as u64, OperatorTag::Decision),
        );
        decision.next_f64();
        let op = self.policy.choose(decision.next_f64());
        PlannedItem {
            sample_index,
            action: self.resolve(sample_index, op, epoch),
        }
    }

    pub fn plan_epoch(&self, epoch: u64, batch_size: usize) -> Result<EpochPlan> {
        if batch_size == 0 {
            return Err(Error::InvalidBatchSize);
        }
        let items = self
            .epoch_order(epoch)
            .into_iter()
            .map(|i| self.plan_item(i, epoch))
            .collect();
        Ok(EpochPlan {
            epoch,
            batch_size,
            items,
        })
    }

    pub fn execute(&self, item: &PlannedItem, epoch: u64) -> Result<BatchItem> {
        let anchor = &self.dataset[item.sample_index];
        let sample = match item.action {
            PlannedAction::Original | PlannedAction::Degraded { .. } => {
                anchor.clone().with_provenance(Provenance::Original)
            }
            PlannedAction::KeepMask(op) => {
                let mut rng = RngStream::new(
                    self.master_seed,
                    StreamKey::new(epoch, item.sample_index as u64, op.rng_tag()),
                );
                keepmask(anchor, &op, &mut rng)?
            }
            PlannedAction::KeepMix {
                background,
                donor,
                mode,
            } => keepmix(&MixPair::new(
                &self.dataset[background],
                &self.dataset[donor],
                mode,
            )?)?,
        };
        Ok(BatchItem {
            sample,
            degraded: item.is_degraded(),
        })
    }

    /// Executes one batch of a plan, data-parallel on the current rayon pool.
    pub fn build_batch(&self, plan: &EpochPlan, batch_index: usize) -> Result<Batch> {
        let items = plan
            .batch(batch_index)
            .par_iter()
            .map(|item| self.execute(item, plan.epoch))
            .collect::<Result<Vec<_>>>()?;
        Ok(Batch {
            items,
            epoch: plan.epoch,
            batch_index,
        })
    }

    pub fn build_epoch(&self, epoch: u64, batch_size: usize) -> Result<Vec<Batch>> {
        let plan = self.plan_epoch(epoch, batch_size)?;
        let mut items = plan
            .items
            .par_iter()
            .map(|item| self.execute(item, epoch))
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        Ok((0..plan.num_batches())
            .map(|batch_index| Batch {
                items: items.by_ref().take(batch_size).collect(),
                epoch,
                batch_index,
            })
            .collect())
    }
}

/// Shuffles, augments and batches one epoch of `dataset`.
pub fn build_epoch(
    dataset: &[Sample],
    policy: &AugPolicy,
    batch_size: usize,
    epoch: u64,
    master_seed: u64,
) -> Result<Vec<Batch>> {
    Sampler::new(dataset, policy.clone(), master_seed)?.build_epoch(epoch, batch_size)
}
