//! `evaluate` and `report`.
//!
//! Output directory layout:
//!
//! ```text
//! report.json   MetricReport
//! table.csv     one row per category plus `all`, percent
//! curves.csv    category,curve,threshold,precision
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nocs9d_bop::{read_categories, read_models_info};
use nocs9d_core::metrics::rows_to_csv;
use nocs9d_core::{evaluate, EvalConfig, MetricReport, Pose9D, PredictionRecord};

use crate::fit::{dataset_records, with_pool};
use crate::predictions::{self, InstanceKey, PredictionRow};

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub dataset: PathBuf,
    pub predictions: PathBuf,
    /// Directory for the report files.
    pub out: PathBuf,
    pub config: EvalConfig,
    pub jobs: usize,
}

/// Writes `report.json`, `table.csv` and `curves.csv` into `dir`.
pub fn write_report(dir: &Path, report: &MetricReport) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let put = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    };
    put("report.json", report.to_json())?;
    put("table.csv", rows_to_csv(&report.table_rows()))?;
    put("curves.csv", rows_to_csv(&report.curve_rows()))
}

fn key_list(keys: &[InstanceKey]) -> String {
    const SHOWN: usize = 20;
    let mut s: Vec<String> = keys.iter().take(SHOWN).map(|(a, b, c)| format!("{a}/{b}/{c}")).collect();
    if keys.len() > SHOWN {
        s.push(format!("... {} more", keys.len() - SHOWN));
    }
    s.join(", ")
}

/// Ground truth of every instance, keyed like the predictions.
fn gt_index(dataset: &Path) -> Result<BTreeMap<InstanceKey, nocs9d_bop::GtInstance>> {
    let mut out = BTreeMap::new();
    for rec in dataset_records(dataset)? {
        for (i, gt) in rec.instances.iter().enumerate() {
            out.insert((rec.scene_id, rec.image_id, i as u32), *gt);
        }
    }
    Ok(out)
}

fn reconcile(gt: &BTreeMap<InstanceKey, nocs9d_bop::GtInstance>, preds: &[PredictionRow]) -> Result<()> {
    let pred_keys: BTreeSet<InstanceKey> = preds.iter().map(|p| p.key).collect();
    if pred_keys.len() != preds.len() {
        let mut seen = BTreeSet::new();
        let dup: Vec<InstanceKey> = preds.iter().map(|p| p.key).filter(|k| !seen.insert(*k)).collect();
        bail!("duplicate predictions (scene/image/instance): {}", key_list(&dup));
    }
    let missing: Vec<InstanceKey> = gt.keys().filter(|k| !pred_keys.contains(k)).copied().collect();
    let unknown: Vec<InstanceKey> = pred_keys.iter().filter(|k| !gt.contains_key(k)).copied().collect();
    let wrong_obj: Vec<InstanceKey> = preds
        .iter()
        .filter(|p| gt.get(&p.key).is_some_and(|g| g.obj_id != p.obj_id))
        .map(|p| p.key)
        .collect();
    let mut problems = Vec::new();
    if !missing.is_empty() {
        problems.push(format!("{} ground-truth instances without prediction: {}", missing.len(), key_list(&missing)));
    }
    if !unknown.is_empty() {
        problems.push(format!("{} predictions without ground truth: {}", unknown.len(), key_list(&unknown)));
    }
    if !wrong_obj.is_empty() {
        problems.push(format!("{} predictions with the wrong obj_id: {}", wrong_obj.len(), key_list(&wrong_obj)));
    }
    if !problems.is_empty() {
        bail!("predictions do not match the dataset (scene/image/instance):\n  {}", problems.join("\n  "));
    }
    Ok(())
}

pub fn cmd_evaluate(opts: &EvalOptions) -> Result<MetricReport> {
    opts.config.validate()?;
    let models = read_models_info(&opts.dataset.join("models_info.json"))?;
    let cat_path = opts.dataset.join("categories.json");
    let categories = if cat_path.exists() {
        read_categories(&cat_path)?
    } else {
        log::info!("{} not found, categories named by object id", cat_path.display());
        BTreeMap::new()
    };
    let gt = gt_index(&opts.dataset)?;
    let preds = predictions::read(&opts.predictions)?;
    reconcile(&gt, &preds)?;

    let mut groups: BTreeMap<String, Vec<PredictionRecord<f64>>> = BTreeMap::new();
    for p in &preds {
        let g = &gt[&p.key];
        let model = models
            .get(&g.obj_id)
            .with_context(|| format!("obj_id {} missing from models_info.json", g.obj_id))?;
        let category = categories
            .get(&g.obj_id)
            .map(|c| c.category.clone())
            .unwrap_or_else(|| format!("obj_{:06}", g.obj_id));
        let (s, i, n) = p.key;
        let record = PredictionRecord {
            sample_id: format!("{s}/{i}/{n}"),
            category: category.clone(),
            predicted: p.estimate.as_ref().map(|e| e.pose),
            ground_truth: Pose9D::new(model.size, g.rotation, g.translation)?,
            symmetry: model.symmetry.clone(),
        };
        groups.entry(category).or_default().push(record);
    }
    let report = with_pool(opts.jobs, || evaluate(&groups, &opts.config))??;
    write_report(&opts.out, &report)?;
    Ok(report)
}

/// Re-emits the CSV tables of a saved report into `out` and returns the
/// summary table.
pub fn cmd_report(report: &Path, out: &Path) -> Result<String> {
    let text = fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
    let parsed: MetricReport =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", report.display()))?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let table = rows_to_csv(&parsed.table_rows());
    fs::write(out.join("table.csv"), &table)?;
    fs::write(out.join("curves.csv"), rows_to_csv(&parsed.curve_rows()))?;
    Ok(table)
}
