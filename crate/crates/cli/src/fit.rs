//! `fit` and `baseline pca`: one prediction per (image, instance).

use std::path::PathBuf;

use anyhow::{bail, Result};
use nocs9d_bop::{list_scenes, nocs_path, read_scene, scene_dir, SceneRecord};
use nocs9d_core::solver::{pose_from_fit_with, ransac_fit, ExtentRule, RansacConfig};
use nocs9d_core::{backproject, build_correspondences, pca_fit, DepthMap, Mask, Pose9D};
use rayon::prelude::*;

use crate::predictions::{self, Estimate, InstanceKey, PredictionRow};
use crate::seed::derive;

#[derive(Clone, Debug)]
pub enum Method {
    /// NOCS/depth correspondences, RANSAC over Umeyama. `ransac.seed` is the
    /// run seed; each instance derives its own from it and its ids.
    Nocs { ransac: RansacConfig<f64>, extent: ExtentRule },
    /// Principal axes of the masked depth points.
    Pca,
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub dataset: PathBuf,
    /// Prediction CSV to write.
    pub out: PathBuf,
    pub method: Method,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitOutcome {
    pub rows: Vec<PredictionRow>,
    /// Instances without an estimate and the reason.
    pub failures: Vec<(InstanceKey, String)>,
}

pub(crate) fn with_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(f))
}

fn estimate(
    method: &Method,
    key: InstanceKey,
    rec: &SceneRecord,
    depth: &DepthMap<f64>,
    mask: &Mask,
) -> Result<std::result::Result<Estimate, nocs9d_core::Error>> {
    Ok(match method {
        Method::Nocs { ransac, extent } => {
            let nocs = rec.load_nocs(key.2 as usize)?;
            let cfg = RansacConfig {
                seed: derive(ransac.seed, &[key.0, key.1, key.2].map(u64::from)),
                ..*ransac
            };
            build_correspondences(&nocs, depth, &rec.k, mask).and_then(|corr| {
                let fit = ransac_fit(&corr, &cfg)?;
                let pose = pose_from_fit_with(&fit, &corr, *extent)?;
                Ok(Estimate {
                    pose,
                    rms: Some(fit.rms_residual),
                    inliers: fit.inlier_indices.len(),
                })
            })
        }
        Method::Pca => backproject(depth, &rec.k, mask).and_then(|pts| {
            let pts: Vec<_> = pts.into_iter().map(|p| p.point).collect();
            let pose: Pose9D<f64> = pca_fit(&pts)?;
            Ok(Estimate {
                pose,
                rms: None,
                inliers: pts.len(),
            })
        }),
    })
}

fn process_image(method: &Method, rec: &SceneRecord) -> Result<Vec<(PredictionRow, Option<String>)>> {
    let depth = rec.load_depth()?;
    let mut out = Vec::with_capacity(rec.instances.len());
    for (i, gt) in rec.instances.iter().enumerate() {
        let key = (rec.scene_id, rec.image_id, i as u32);
        let mask = rec.load_mask(i)?;
        let (estimate, err) = match estimate(method, key, rec, &depth, &mask)? {
            Ok(e) => (Some(e), None),
            Err(e) => (None, Some(e.to_string())),
        };
        out.push((
            PredictionRow {
                key,
                obj_id: gt.obj_id,
                estimate,
            },
            err,
        ));
    }
    Ok(out)
}

/// Every scene record of a dataset, in id order.
pub fn dataset_records(dataset: &std::path::Path) -> Result<Vec<SceneRecord>> {
    let mut all = Vec::new();
    for s in list_scenes(dataset)? {
        all.extend(read_scene(dataset, s)?);
    }
    Ok(all)
}

/// Runs `method` over the dataset and writes the prediction CSV. I/O and
/// format errors abort; per-instance solver errors become `FAILED` rows.
pub fn run(opts: &FitOptions) -> Result<FitOutcome> {
    if let Method::Nocs { ransac, .. } = &opts.method {
        ransac.validate()?;
    }
    let records = dataset_records(&opts.dataset)?;
    if matches!(opts.method, Method::Nocs { .. }) {
        for rec in &records {
            if let Some(i) = rec.nocs_paths.iter().position(Option::is_none) {
                let dir = scene_dir(&opts.dataset, rec.scene_id);
                bail!("missing NOCS sidecar {}", nocs_path(&dir, rec.image_id, i).display());
            }
        }
    }
    let per_image: Vec<Vec<(PredictionRow, Option<String>)>> = with_pool(opts.jobs, || {
        records.par_iter().map(|r| process_image(&opts.method, r)).collect::<Result<Vec<_>>>()
    })??;
    let mut outcome = FitOutcome::default();
    for (row, err) in per_image.into_iter().flatten() {
        if let Some(e) = err {
            log::warn!("scene {} image {} instance {}: {e}", row.key.0, row.key.1, row.key.2);
            outcome.failures.push((row.key, e));
        }
        outcome.rows.push(row);
    }
    outcome.rows.sort_by_key(|r| r.key);
    predictions::write(&opts.out, &outcome.rows)?;
    Ok(outcome)
}

pub fn cmd_fit(opts: &FitOptions) -> Result<FitOutcome> {
    run(opts)
}

pub fn cmd_baseline_pca(dataset: PathBuf, out: PathBuf, jobs: usize) -> Result<FitOutcome> {
    run(&FitOptions {
        dataset,
        out,
        method: Method::Pca,
        jobs,
    })
}
