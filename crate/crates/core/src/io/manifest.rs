//! The benchmark manifest: environments, cases with their labels and
//! evidence, and per-label counts.
//!
//! The counts field is validated against the enumerated cases on load, so a
//! tampered manifest is rejected rather than silently trusted. When a
//! manifest declares the curated benchmark id, its totals must match the
//! published benchmark composition.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ambiguity::{AmbiguityParams, CaseLabel, Classification};
use crate::error::{Error, Result};
use crate::reference;
use crate::synthworld::CaseCounts;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILENAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvType {
    Indoor,
    Outdoor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEnvironment {
    pub name: String,
    pub env_type: EnvType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCase {
    pub case_id: String,
    pub environment: String,
    /// Path stem of the mapping sequence, relative to the dataset root;
    /// `<stem>.traj.csv` and `<stem>.desc.bin` must exist.
    pub map_ref: String,
    /// Path stem of the test sequence.
    pub test_ref: String,
    pub align_radius: f64,
    #[serde(default)]
    pub kidnapped: bool,
    /// Label plus the similarity evidence that produced it; absent until a
    /// classification pass has run.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub classification: Option<Classification>,
}

impl ManifestCase {
    pub fn label(&self) -> Option<CaseLabel> {
        self.classification.as_ref().map(|c| c.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub version: u32,
    pub dataset_id: String,
    /// Parameters the labels were computed with.
    pub params: AmbiguityParams,
    pub environments: Vec<ManifestEnvironment>,
    pub cases: Vec<ManifestCase>,
    pub counts: CaseCounts,
}

impl BenchmarkManifest {
    /// Recomputes per-label counts from the enumerated cases.
    pub fn tally(cases: &[ManifestCase]) -> CaseCounts {
        let mut counts = CaseCounts::default();
        for case in cases {
            match case.label() {
                Some(CaseLabel::AmbiguousPositive) => counts.ambiguous_positive += 1,
                Some(CaseLabel::PositiveOnly) => counts.positive_only += 1,
                Some(CaseLabel::AmbiguousOnly) => counts.ambiguous_only += 1,
                Some(CaseLabel::NovelClean) => counts.novel_clean += 1,
                None => {}
            }
        }
        counts
    }

    /// Structural validation: counts match the cases, environments resolve,
    /// and curated-benchmark manifests carry the published composition.
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::ManifestInvalid(format!(
                "unsupported manifest version {}",
                self.version
            )));
        }
        let tallied = Self::tally(&self.cases);
        if tallied != self.counts {
            return Err(Error::ManifestInvalid(format!(
                "counts field {:?} does not match enumerated cases {:?}",
                self.counts, tallied
            )));
        }
        let envs: BTreeMap<&str, ()> = self
            .environments
            .iter()
            .map(|e| (e.name.as_str(), ()))
            .collect();
        for case in &self.cases {
            if !envs.contains_key(case.environment.as_str()) {
                return Err(Error::ManifestInvalid(format!(
                    "case {} references unknown environment {}",
                    case.case_id, case.environment
                )));
            }
        }
        if self.dataset_id == reference::CURATED_DATASET_ID {
            let (ap, po, ao) = reference::CURATED_CASE_COUNTS;
            if (self.counts.ambiguous_positive, self.counts.positive_only, self.counts.ambiguous_only)
                != (ap, po, ao)
            {
                return Err(Error::ManifestInvalid(format!(
                    "curated benchmark must carry {ap}/{po}/{ao} cases, found {}/{}/{}",
                    self.counts.ambiguous_positive,
                    self.counts.positive_only,
                    self.counts.ambiguous_only
                )));
            }
            if self.environments.len() != reference::CURATED_ENVIRONMENT_COUNT {
                return Err(Error::ManifestInvalid(format!(
                    "curated benchmark spans {} environments, found {}",
                    reference::CURATED_ENVIRONMENT_COUNT,
                    self.environments.len()
                )));
            }
        }
        Ok(())
    }

    /// Checks that every referenced file exists under the dataset root.
    pub fn validate_refs(&self, root: &Path) -> Result<()> {
        for case in &self.cases {
            for stem in [&case.map_ref, &case.test_ref] {
                for suffix in [".traj.csv", ".desc.bin"] {
                    let path = root.join(format!("{stem}{suffix}"));
                    if !path.is_file() {
                        return Err(Error::ManifestInvalid(format!(
                            "case {}: missing file {}",
                            case.case_id,
                            path.display()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let manifest: Self = serde_json::from_str(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        self.validate()?;
        Ok(std::fs::write(root.join(MANIFEST_FILENAME), self.to_json()?)?)
    }

    pub fn load(root: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(root.join(MANIFEST_FILENAME))?;
        Self::from_json(&text)
    }
}
