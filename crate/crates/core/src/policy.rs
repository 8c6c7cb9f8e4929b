//! TOML policy files.
//!
//! ```toml
//! p = 0.2
//! seed = 42
//!
//! [[operators]]
//! kind = "keep_grid_dropout"
//! unit_size = 32
//! hole_ratio = 0.5
//!
//! [[operators]]
//! kind = "keep_gaussian_blur"
//! sigma = 2.0
//!
//! [[operators]]
//! kind = "keepmix_diff"
//! weight = 2.0
//! ```
//!
//! Unknown keys, and parameter keys that do not belong to an operator's
//! kind, are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::{GaussianParams, GridDropoutParams};
use crate::sampler::{AugOperator, AugPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    KeepGaussianBlur,
    KeepGridDropout,
    KeepmixSame,
    KeepmixDiff,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorEntry {
    pub kind: Option<OperatorKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_offset: Option<bool>,
}

impl OperatorEntry {
    pub fn of_kind(kind: OperatorKind) -> Self {
        Self {
            kind: Some(kind),
            ..Self::default()
        }
    }

    fn reject_foreign(&self, kind: OperatorKind) -> Result<()> {
        let blur = [("sigma", self.sigma.is_some()), ("radius", self.radius.is_some())];
        let grid = [
            ("unit_size", self.unit_size.is_some()),
            ("hole_ratio", self.hole_ratio.is_some()),
            ("fill_value", self.fill_value.is_some()),
            ("random_offset", self.random_offset.is_some()),
        ];
        let foreign: Vec<&str> = match kind {
            OperatorKind::KeepGaussianBlur => grid.iter().collect::<Vec<_>>(),
            OperatorKind::KeepGridDropout => blur.iter().collect(),
            OperatorKind::KeepmixSame | OperatorKind::KeepmixDiff => {
                blur.iter().chain(grid.iter()).collect()
            }
        }
        .into_iter()
        .filter(|(_, set)| *set)
        .map(|(name, _)| *name)
        .collect();
        if foreign.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "{kind:?} does not accept {}",
                foreign.join(", ")
            )))
        }
    }

    pub fn to_operator(&self) -> Result<(AugOperator, f64)> {
        let kind = self
            .kind
            .ok_or_else(|| Error::InvalidParams("operator entry without `kind`".into()))?;
        self.reject_foreign(kind)?;
        let op = match kind {
            OperatorKind::KeepGaussianBlur => {
                let sigma = self.sigma.unwrap_or(crate::perturb::DEFAULT_SIGMA);
                let params = match self.radius {
                    Some(r) => GaussianParams::with_radius(sigma, r)?,
                    None => GaussianParams::new(sigma)?,
                };
                AugOperator::KeepGaussianBlur(params)
            }
            OperatorKind::KeepGridDropout => {
                let d = GridDropoutParams::default();
                let params = GridDropoutParams {
                    unit_size: self.unit_size.unwrap_or(d.unit_size),
                    hole_ratio: self.hole_ratio.unwrap_or(d.hole_ratio),
                    fill_value: self.fill_value.unwrap_or(d.fill_value),
                    random_offset: self.random_offset.unwrap_or(d.random_offset),
                };
                params.validate()?;
                AugOperator::KeepGridDropout(params)
            }
            OperatorKind::KeepmixSame => AugOperator::KeepMixSame,
            OperatorKind::KeepmixDiff => AugOperator::KeepMixDiff,
        };
        Ok((op, self.weight.unwrap_or(1.0)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub operators: Vec<OperatorEntry>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl PolicyFile {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            Error::Parse {
                path: path.to_owned(),
                line,
                column,
                message: e.message().to_owned(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file = Self::from_toml(&text, path)?;
        file.to_policy()?;
        Ok(file)
    }

    pub fn to_policy(&self) -> Result<AugPolicy> {
        let ops = self
            .operators
            .iter()
            .map(OperatorEntry::to_operator)
            .collect::<Result<Vec<_>>>()?;
        AugPolicy::new(self.p, ops)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("policy serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PolicyFile> {
        PolicyFile::from_toml(text, Path::new("policy.toml"))
    }

    #[test]
    fn full_policy() {
        let file = parse(
            r#"
p = 0.2
seed = 42

[[operators]]
kind = "keep_grid_dropout"
unit_size = 16
hole_ratio = 0.25
random_offset = false

[[operators]]
kind = "keep_gaussian_blur"
sigma = 1.5

[[operators]]
kind = "keepmix_diff"
weight = 2.0
"#,
        )
        .unwrap();
        assert_eq!(file.seed, Some(42));
        let policy = file.to_policy().unwrap();
        assert_eq!(policy.p(), 0.2);
        assert_eq!(policy.weights(), &[0.25, 0.25, 0.5]);
        assert_eq!(
            policy.operators()[0],
            AugOperator::KeepGridDropout(GridDropoutParams {
                unit_size: 16,
                hole_ratio: 0.25,
                fill_value: 0.0,
                random_offset: false,
            })
        );
        assert_eq!(
            policy.operators()[1],
            AugOperator::KeepGaussianBlur(GaussianParams::with_radius(1.5, 5).unwrap())
        );
        assert_eq!(parse(&file.to_toml()).unwrap(), file);
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = parse("p = 0.1\nbogus = 1\noperators = []\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("p = 0.1\n[[operators]]\nkind = \"keepmix_same\"\nalpha = 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        assert!(parse("p = 0.1\n[[operators]]\nkind = \"mixup\"\n").is_err());
    }

    #[test]
    fn foreign_parameters_rejected() {
        let file = parse("p = 0.1\n[[operators]]\nkind = \"keepmix_same\"\nsigma = 3.0\n").unwrap();
        assert!(matches!(file.to_policy(), Err(Error::InvalidParams(_))));
        let file = parse("p = 0.1\n[[operators]]\nkind = \"keep_gaussian_blur\"\nunit_size = 3\n").unwrap();
        assert!(file.to_policy().is_err());
    }

    #[test]
    fn semantic_errors() {
        assert!(matches!(
            parse("p = 0.1\noperators = []\n").unwrap().to_policy(),
            Err(Error::EmptyPolicy)
        ));
        let bad_p = parse("p = 1.5\n[[operators]]\nkind = \"keepmix_diff\"\n").unwrap();
        assert!(bad_p.to_policy().is_err());
        let bad_sigma = parse("p = 1\n[[operators]]\nkind = \"keep_gaussian_blur\"\nsigma = 0.0\n").unwrap();
        assert!(bad_sigma.to_policy().is_err());
    }

    #[test]
    fn defaults() {
        let file = parse(
            "p = 1\n[[operators]]\nkind = \"keep_grid_dropout\"\n[[operators]]\nkind = \"keep_gaussian_blur\"\n",
        )
        .unwrap();
        assert_eq!(file.seed, None);
        let policy = file.to_policy().unwrap();
        assert_eq!(
            policy.operators(),
            &[
                AugOperator::KeepGridDropout(GridDropoutParams::default()),
                AugOperator::KeepGaussianBlur(GaussianParams::default()),
            ]
        );
    }
}
