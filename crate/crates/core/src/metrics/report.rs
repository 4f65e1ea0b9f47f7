use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AbsoluteErrors, IouMode, PredictionRecord, RelativeErrors};
use crate::symmetry::SymmetryKind;
use crate::{Error, Real, Result};

/// Thresholds and curve grids for [`evaluate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_mode: IouMode,
    pub iou_thresholds: Vec<f64>,
    /// `(a_deg, b_cm)` operating points.
    pub operating_points: Vec<(f64, f64)>,
    pub iou_grid: Vec<f64>,
    pub rotation_grid_deg: Vec<f64>,
    pub translation_grid_cm: Vec<f64>,
}

fn grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_mode: IouMode::Aabb,
            iou_thresholds: vec![0.5],
            operating_points: vec![(5.0, 5.0), (10.0, 5.0), (10.0, 10.0)],
            iou_grid: grid(0.0, 1.0, 0.01),
            rotation_grid_deg: grid(0.0, 60.0, 1.0),
            translation_grid_cm: grid(0.0, 15.0, 0.5),
        }
    }
}

fn check_ascending(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!("{name} must be finite and strictly ascending")));
    }
    Ok(())
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        check_ascending("iou_thresholds", &self.iou_thresholds)?;
        if self.operating_points.is_empty() {
            return Err(Error::InvalidConfig("operating_points is empty".into()));
        }
        if self.operating_points.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite())) {
            return Err(Error::InvalidConfig("operating points must be positive".into()));
        }
        check_ascending("iou_grid", &self.iou_grid)?;
        check_ascending("rotation_grid_deg", &self.rotation_grid_deg)?;
        check_ascending("translation_grid_cm", &self.translation_grid_cm)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IouPoint {
    pub threshold: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotTransPoint {
    pub a_deg: f64,
    pub b_cm: f64,
    pub precision: f64,
}

/// Precision sampled over one threshold grid. `curve` is one of `abs_iou`,
/// `abs_rot`, `abs_trans`, `rel_rot`, `rel_trans`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub curve: String,
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category: String,
    pub n_samples: usize,
    pub n_missing: usize,
    pub iou: Vec<IouPoint>,
    pub absolute: Vec<RotTransPoint>,
    /// `None` when the category has fewer than two samples.
    pub relative: Option<Vec<RotTransPoint>>,
    /// Mean per-axis ratio of predicted to ground-truth size.
    pub relative_scale: Option<[f64; 3]>,
    /// Diagnostics: `relative_na`, `multi_axis_continuous`, `inconsistent_symmetry`.
    pub flags: Vec<String>,
    /// Set when the category could not be evaluated; all metric lists are then empty.
    pub error: Option<String>,
    pub curves: Vec<Curve>,
}

/// Unweighted mean over categories. Relative entries average only the
/// categories where they are defined and are `None` if there are none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_categories: usize,
    pub iou: Vec<IouPoint>,
    pub absolute: Vec<RotTransPoint>,
    pub relative: Option<Vec<RotTransPoint>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: EvalConfig,
    pub categories: Vec<CategoryReport>,
    pub overall: Summary,
}

fn failed(category: &str, n: usize, error: String) -> CategoryReport {
    CategoryReport {
        category: category.to_string(),
        n_samples: n,
        n_missing: 0,
        iou: vec![],
        absolute: vec![],
        relative: None,
        relative_scale: None,
        flags: vec![],
        error: Some(error),
        curves: vec![],
    }
}

fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

fn evaluate_category<T: Real>(category: &str, records: &[PredictionRecord<T>], cfg: &EvalConfig) -> CategoryReport {
    let n = records.len();
    if n == 0 {
        return failed(category, 0, Error::EmptyInput.to_string());
    }
    if let Some(r) = records.iter().find(|r| r.category != category) {
        return failed(category, n, Error::MixedCategories(format!("{category}, {}", r.category)).to_string());
    }
    let mut flags = Vec::new();
    let sym = &records[0].symmetry;
    if records.iter().any(|r| &r.symmetry != sym) {
        // Relative errors use the first record's annotation for every pair.
        flags.push("inconsistent_symmetry".to_string());
    }
    if sym.kind() == SymmetryKind::Continuous && sym.continuous().len() > 1 {
        flags.push("multi_axis_continuous".to_string());
    }

    let abs = AbsoluteErrors::new(records, cfg.iou_mode);
    let iou = cfg
        .iou_thresholds
        .iter()
        .map(|&t| IouPoint { threshold: t, precision: abs.iou_precision(lit::<T>(t)).as_f64() })
        .collect();
    let absolute = cfg
        .operating_points
        .iter()
        .map(|&(a, b)| RotTransPoint { a_deg: a, b_cm: b, precision: abs.precision(lit(a), lit(b)).as_f64() })
        .collect();
    let mut curves = vec![
        Curve {
            curve: "abs_iou".into(),
            thresholds: cfg.iou_grid.clone(),
            precision: cfg.iou_grid.iter().map(|&t| abs.iou_precision(lit::<T>(t)).as_f64()).collect(),
        },
        Curve {
            curve: "abs_rot".into(),
            thresholds: cfg.rotation_grid_deg.clone(),
            precision: cfg.rotation_grid_deg.iter().map(|&a| abs.precision(lit(a), T::max_value().unwrap()).as_f64()).collect(),
        },
        Curve {
            curve: "abs_trans".into(),
            thresholds: cfg.translation_grid_cm.clone(),
            precision: cfg.translation_grid_cm.iter().map(|&b| abs.precision(T::max_value().unwrap(), lit(b)).as_f64()).collect(),
        },
    ];

    let relative = match RelativeErrors::new(records) {
        Ok(rel) => {
            curves.push(Curve {
                curve: "rel_rot".into(),
                thresholds: cfg.rotation_grid_deg.clone(),
                precision: cfg.rotation_grid_deg.iter().map(|&a| rel.rotation_precision(lit(a)).as_f64()).collect(),
            });
            curves.push(Curve {
                curve: "rel_trans".into(),
                thresholds: cfg.translation_grid_cm.clone(),
                precision: cfg.translation_grid_cm.iter().map(|&b| rel.translation_precision(lit(b)).as_f64()).collect(),
            });
            Some(
                cfg.operating_points
                    .iter()
                    .map(|&(a, b)| RotTransPoint { a_deg: a, b_cm: b, precision: rel.precision(lit(a), lit(b)).as_f64() })
                    .collect(),
            )
        }
        Err(_) => {
            flags.push("relative_na".to_string());
            None
        }
    };

    let ratios: Vec<[f64; 3]> = records
        .iter()
        .filter_map(|r| {
            let p = r.predicted.as_ref()?;
            let ratio = p.scale().component_div(r.ground_truth.scale());
            Some([ratio.x.as_f64(), ratio.y.as_f64(), ratio.z.as_f64()])
        })
        .collect();
    let relative_scale = (!ratios.is_empty()).then(|| {
        let m = ratios.len() as f64;
        std::array::from_fn(|i| ratios.iter().map(|r| r[i]).sum::<f64>() / m)
    });

    CategoryReport {
        category: category.to_string(),
        n_samples: n,
        n_missing: records.iter().filter(|r| r.predicted.is_none()).count(),
        iou,
        absolute,
        relative,
        relative_scale,
        flags,
        error: None,
        curves,
    }
}

fn mean_points<P: Clone>(lists: &[&Vec<P>], get: impl Fn(&P) -> f64, set: impl Fn(&mut P, f64)) -> Option<Vec<P>> {
    let first = lists.first()?;
    let m = lists.len() as f64;
    Some(
        first
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut out = p.clone();
                set(&mut out, lists.iter().map(|l| get(&l[i])).sum::<f64>() / m);
                out
            })
            .collect(),
    )
}

/// Evaluates every category independently and averages them.
///
/// Per-category failures are recorded in [`CategoryReport::error`] and
/// excluded from the overall means; only an invalid `cfg` aborts.
pub fn evaluate<T: Real>(groups: &BTreeMap<String, Vec<PredictionRecord<T>>>, cfg: &EvalConfig) -> Result<MetricReport> {
    cfg.validate()?;
    let categories: Vec<CategoryReport> = groups
        .par_iter()
        .map(|(cat, recs)| evaluate_category(cat, recs, cfg))
        .collect();
    let ok: Vec<&CategoryReport> = categories.iter().filter(|c| c.error.is_none()).collect();
    let ious: Vec<_> = ok.iter().map(|c| &c.iou).collect();
    let abss: Vec<_> = ok.iter().map(|c| &c.absolute).collect();
    let rels: Vec<_> = ok.iter().filter_map(|c| c.relative.as_ref()).collect();
    let overall = Summary {
        n_categories: ok.len(),
        iou: mean_points(&ious, |p| p.precision, |p, v| p.precision = v).unwrap_or_default(),
        absolute: mean_points(&abss, |p| p.precision, |p, v| p.precision = v).unwrap_or_default(),
        relative: mean_points(&rels, |p| p.precision, |p, v| p.precision = v),
    };
    Ok(MetricReport {
        config: cfg.clone(),
        categories,
        overall,
    })
}

fn pct(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.1}", v * 100.0),
        None => "N/A".to_string(),
    }
}

fn fmt_threshold(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x}")
    }
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec!["category".to_string()];
        for t in &self.config.iou_thresholds {
            h.push(format!("Abs IoU@{}", fmt_threshold(t * 100.0)));
        }
        for prefix in ["Abs", "Rel"] {
            for (a, b) in &self.config.operating_points {
                h.push(format!("{prefix} {}deg{}cm", fmt_threshold(*a), fmt_threshold(*b)));
            }
        }
        h
    }

    fn row(
        name: &str,
        n_ops: usize,
        iou: &[IouPoint],
        abs: &[RotTransPoint],
        rel: Option<&Vec<RotTransPoint>>,
        n_iou: usize,
    ) -> Vec<String> {
        let mut r = vec![name.to_string()];
        r.extend((0..n_iou).map(|i| pct(iou.get(i).map(|p| p.precision))));
        r.extend((0..n_ops).map(|i| pct(abs.get(i).map(|p| p.precision))));
        r.extend((0..n_ops).map(|i| pct(rel.and_then(|v| v.get(i)).map(|p| p.precision))));
        r
    }

    /// Rows of the Table-2-style summary: one per category then `all`,
    /// values in percent with one decimal, `N/A` where undefined.
    pub fn table_rows(&self) -> Vec<Vec<String>> {
        let n_ops = self.config.operating_points.len();
        let n_iou = self.config.iou_thresholds.len();
        let mut rows = vec![self.header()];
        for c in &self.categories {
            rows.push(Self::row(&c.category, n_ops, &c.iou, &c.absolute, c.relative.as_ref(), n_iou));
        }
        let o = &self.overall;
        rows.push(Self::row("all", n_ops, &o.iou, &o.absolute, o.relative.as_ref(), n_iou));
        rows
    }

    /// Long-format curve samples: `category,curve,threshold,precision`.
    pub fn curve_rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![vec!["category".into(), "curve".into(), "threshold".into(), "precision".into()]];
        for c in &self.categories {
            for curve in &c.curves {
                for (t, p) in curve.thresholds.iter().zip(&curve.precision) {
                    rows.push(vec![c.category.clone(), curve.curve.clone(), format!("{t}"), format!("{p}")]);
                }
            }
        }
        rows
    }
}

/// Joins rows as comma-separated lines. Cells are plain tokens, never quoted.
pub fn rows_to_csv(rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s
}
