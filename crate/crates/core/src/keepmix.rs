//! KeepMix: paste the organ region of one slice onto a slice without organ.
//!
//! Roles are assigned by organ presence. The organ-bearing sample is the
//! foreground donor; the organ-free sample supplies the background. The
//! output is `(1 - y_f) * x_b + y_f * x_f` with mask `y_f`, keeping the ids of
//! the background sample.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::keepmask::composite;
use crate::rng::{OperatorTag, RngStream};
use crate::types::{Image2D, Provenance, Sample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MixMode {
    /// Partner drawn from the anchor's own patient.
    SamePatient,
    /// Partner drawn from the whole dataset.
    DifferentPatient,
}

impl MixMode {
    pub fn provenance(self) -> Provenance {
        match self {
            MixMode::SamePatient => Provenance::KeepMixSame,
            MixMode::DifferentPatient => Provenance::KeepMixDiff,
        }
    }

    pub fn rng_tag(self) -> OperatorTag {
        match self {
            MixMode::SamePatient => OperatorTag::MixSame,
            MixMode::DifferentPatient => OperatorTag::MixDiff,
        }
    }
}

impl fmt::Display for MixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixMode::SamePatient => "same-patient",
            MixMode::DifferentPatient => "different-patient",
        })
    }
}

/// A validated (background, donor) pair borrowed from a dataset.
#[derive(Clone, Copy, Debug)]
pub struct MixPair<'a> {
    background: &'a Sample,
    foreground_donor: &'a Sample,
    mode: MixMode,
}

impl<'a> MixPair<'a> {
    pub fn new(background: &'a Sample, foreground_donor: &'a Sample, mode: MixMode) -> Result<Self> {
        if background.has_organ() {
            return Err(Error::InvalidPair("background sample contains organ"));
        }
        if !foreground_donor.has_organ() {
            return Err(Error::InvalidPair("foreground donor has no organ"));
        }
        if background.dims() != foreground_donor.dims() {
            return Err(Error::DimensionMismatch {
                expected: background.dims(),
                found: foreground_donor.dims(),
            });
        }
        Ok(Self {
            background,
            foreground_donor,
            mode,
        })
    }

    pub fn background(&self) -> &'a Sample {
        self.background
    }

    pub fn foreground_donor(&self) -> &'a Sample {
        self.foreground_donor
    }

    pub fn mode(&self) -> MixMode {
        self.mode
    }
}

#[derive(Debug, Default, Clone)]
struct Pools {
    organ: Vec<usize>,
    free: Vec<usize>,
}

impl Pools {
    fn push(&mut self, index: usize, has_organ: bool) {
        if has_organ {
            self.organ.push(index);
        } else {
            self.free.push(index);
        }
    }

    fn with_organ(&self, has_organ: bool) -> &[usize] {
        if has_organ {
            &self.organ
        } else {
            &self.free
        }
    }
}

/// Organ / organ-free index lists, globally and per patient, in dataset order.
#[derive(Debug, Clone)]
pub struct PairingIndex {
    global: Pools,
    by_patient: Vec<Pools>,
    patient_of: Vec<usize>,
}

impl PairingIndex {
    pub fn new(dataset: &[Sample]) -> Self {
        let mut global = Pools::default();
        let mut by_patient: Vec<Pools> = Vec::new();
        let mut groups: HashMap<&str, usize> = HashMap::new();
        let mut patient_of = Vec::with_capacity(dataset.len());
        for (i, sample) in dataset.iter().enumerate() {
            let group = *groups.entry(sample.patient_id()).or_insert_with(|| {
                by_patient.push(Pools::default());
                by_patient.len() - 1
            });
            patient_of.push(group);
            global.push(i, sample.has_organ());
            by_patient[group].push(i, sample.has_organ());
        }
        Self {
            global,
            by_patient,
            patient_of,
        }
    }

    pub fn len(&self) -> usize {
        self.patient_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patient_of.is_empty()
    }

    /// Indices eligible as partner for `anchor` under `mode`.
    pub fn candidates(&self, dataset: &[Sample], anchor: usize, mode: MixMode) -> &[usize] {
        let need_organ = !dataset[anchor].has_organ();
        match mode {
            MixMode::SamePatient => self.by_patient[self.patient_of[anchor]].with_organ(need_organ),
            MixMode::DifferentPatient => self.global.with_organ(need_organ),
        }
    }

    /// Draws a partner index uniformly among the candidates.
    pub fn select_partner(
        &self,
        dataset: &[Sample],
        anchor: usize,
        mode: MixMode,
        rng: &mut RngStream,
    ) -> Result<usize> {
        if anchor >= dataset.len() || anchor >= self.len() {
            return Err(Error::AnchorOutOfRange {
                index: anchor,
                len: dataset.len(),
            });
        }
        let pool = self.candidates(dataset, anchor, mode);
        rng.choose(pool).copied().ok_or(Error::NoEligiblePartner {
            anchor,
            mode,
            needed_organ: !dataset[anchor].has_organ(),
        })
    }

    pub fn select<'a>(
        &self,
        dataset: &'a [Sample],
        anchor: usize,
        mode: MixMode,
        rng: &mut RngStream,
    ) -> Result<MixPair<'a>> {
        let partner = self.select_partner(dataset, anchor, mode, rng)?;
        let (a, b) = (&dataset[anchor], &dataset[partner]);
        if a.has_organ() {
            MixPair::new(b, a, mode)
        } else {
            MixPair::new(a, b, mode)
        }
    }
}

/// Picks a KeepMix pair for `dataset[anchor_index]`. Builds a throwaway
/// [`PairingIndex`]; reuse one when selecting for many anchors.
pub fn select_pair<'a>(
    dataset: &'a [Sample],
    anchor_index: usize,
    mode: MixMode,
    rng: &mut RngStream,
) -> Result<MixPair<'a>> {
    PairingIndex::new(dataset).select(dataset, anchor_index, mode, rng)
}

pub fn keepmix(pair: &MixPair<'_>) -> Result<Sample> {
    let (bg, donor) = (pair.background, pair.foreground_donor);
    if bg.dims() != donor.dims() {
        return Err(Error::DimensionMismatch {
            expected: bg.dims(),
            found: donor.dims(),
        });
    }
    let (w, h) = bg.dims();
    let pixels = composite(
        donor.image().pixels(),
        bg.image().pixels(),
        donor.mask().values(),
    );
    Ok(Sample::assemble(
        Image2D::from_valid(w, h, pixels),
        donor.mask().clone(),
        bg.patient_id().to_owned(),
        bg.slice_id().to_owned(),
        pair.mode.provenance(),
    ))
}
