//! Dataset directory layout: a manifest at the root plus one directory per
//! environment holding `map.traj.csv`, `map.desc.bin`, and per-case
//! trajectory/descriptor pairs. Synthetic and ingested datasets flow through
//! the same loader.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::ambiguity::{build_correspondence, TestCase};
use crate::error::{Error, Result};
use crate::frame::{Frame, Sequence, SequenceRole};
use crate::graph::UpdatePolicyParams;
use crate::graph::TopoMap;
use crate::io::descriptor::{load_descriptors, save_descriptors};
use crate::io::manifest::{
    BenchmarkManifest, EnvType, ManifestCase, ManifestEnvironment, MANIFEST_VERSION,
};
use crate::io::trajectory::{load_trajectory, save_trajectory};
use crate::policy::build_policy_map;
use crate::synthworld::{GeneratedEnvironment, SuiteSpec};

fn descriptor_rows(seq: &Sequence) -> Result<Vec<Vec<f32>>> {
    seq.frames()
        .iter()
        .map(|f| {
            f.descriptor.clone().ok_or_else(|| {
                Error::Format(format!("frame {} carries no descriptor", f.frame_id))
            })
        })
        .collect()
}

fn save_sequence(root: &Path, stem: &str, seq: &Sequence) -> Result<()> {
    let traj = root.join(format!("{stem}.traj.csv"));
    let desc = root.join(format!("{stem}.desc.bin"));
    if let Some(parent) = traj.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_trajectory(&traj, seq)?;
    save_descriptors(&desc, &descriptor_rows(seq)?)?;
    Ok(())
}

fn load_sequence(root: &Path, stem: &str, role: SequenceRole) -> Result<Sequence> {
    let traj = load_trajectory(&root.join(format!("{stem}.traj.csv")), role)?;
    let rows = load_descriptors(&root.join(format!("{stem}.desc.bin")))?;
    if rows.len() != traj.len() {
        return Err(Error::Format(format!(
            "{stem}: trajectory has {} frames but descriptor file has {} rows",
            traj.len(),
            rows.len()
        )));
    }
    let frames: Vec<Frame> = traj
        .frames()
        .iter()
        .cloned()
        .zip(rows)
        .map(|(mut f, row)| {
            f.descriptor = Some(row);
            f
        })
        .collect();
    Sequence::new(frames, role)
}

/// Writes a generated suite to a dataset directory and returns its manifest.
pub fn save_suite(
    root: &Path,
    environments: &[GeneratedEnvironment],
    spec: &SuiteSpec,
    dataset_id: &str,
) -> Result<BenchmarkManifest> {
    std::fs::create_dir_all(root)?;
    let mut manifest_envs = Vec::new();
    let mut manifest_cases = Vec::new();
    for env in environments {
        let map_stem = format!("{}/map", env.name);
        save_sequence(root, &map_stem, &env.map_seq)?;
        manifest_envs.push(ManifestEnvironment {
            name: env.name.clone(),
            env_type: EnvType::Indoor,
        });
        for case in &env.cases {
            let test_stem = format!("{}/{}", env.name, case.case_id);
            save_sequence(root, &test_stem, &case.test_seq)?;
            manifest_cases.push(ManifestCase {
                case_id: case.case_id.clone(),
                environment: env.name.clone(),
                map_ref: map_stem.clone(),
                test_ref: test_stem,
                align_radius: spec.align_radius,
                kidnapped: case.kidnapped,
                classification: Some(case.measured.clone()),
            });
        }
    }
    let counts = BenchmarkManifest::tally(&manifest_cases);
    let manifest = BenchmarkManifest {
        version: MANIFEST_VERSION,
        dataset_id: dataset_id.to_string(),
        params: spec.ambiguity_params(),
        environments: manifest_envs,
        cases: manifest_cases,
        counts,
    };
    manifest.save(root)?;
    Ok(manifest)
}

/// A dataset directory opened for evaluation.
pub struct LoadedDataset {
    pub root: PathBuf,
    pub manifest: BenchmarkManifest,
}

/// Opens a dataset directory, validating the manifest and its file refs.
pub fn load_dataset(root: &Path) -> Result<LoadedDataset> {
    let manifest = BenchmarkManifest::load(root)?;
    manifest.validate_refs(root)?;
    Ok(LoadedDataset {
        root: root.to_path_buf(),
        manifest,
    })
}

impl LoadedDataset {
    /// Loads every case, building one policy map per mapping sequence.
    /// Mapping runs are non-revisiting, so the traversal estimator is the
    /// authoritative route source here.
    pub fn to_test_cases(
        &self,
        policy: &UpdatePolicyParams,
        match_radius: f64,
    ) -> Result<Vec<TestCase>> {
        let mut map_seqs: BTreeMap<String, Arc<Sequence>> = BTreeMap::new();
        let mut maps: BTreeMap<String, Arc<TopoMap>> = BTreeMap::new();
        let mut cases = Vec::with_capacity(self.manifest.cases.len());
        for mc in &self.manifest.cases {
            let map_seq = match map_seqs.get(&mc.map_ref) {
                Some(s) => Arc::clone(s),
                None => {
                    let s = Arc::new(load_sequence(&self.root, &mc.map_ref, SequenceRole::Map)?);
                    map_seqs.insert(mc.map_ref.clone(), Arc::clone(&s));
                    s
                }
            };
            let map = match maps.get(&mc.map_ref) {
                Some(m) => Arc::clone(m),
                None => {
                    let (built, _) = build_policy_map(
                        &map_seq,
                        policy,
                        &crate::route::TraversalOracle,
                        match_radius,
                    )?;
                    let m = Arc::new(built);
                    maps.insert(mc.map_ref.clone(), Arc::clone(&m));
                    m
                }
            };
            let test_seq = load_sequence(&self.root, &mc.test_ref, SequenceRole::Test)?;
            let correspondence = build_correspondence(&test_seq, &map_seq, mc.align_radius);
            cases.push(TestCase {
                case_id: mc.case_id.clone(),
                environment: mc.environment.clone(),
                map_seq,
                map,
                test_seq,
                correspondence,
                label: mc.classification.clone(),
            });
        }
        Ok(cases)
    }
}
