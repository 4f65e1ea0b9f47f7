//! Pose evaluation: absolute rotation/translation precision, relative
//! (frame-consistency) precision, 3D IoU, and per-category reports.
//!
//! A record whose prediction is missing counts as a miss for every metric.

mod iou;
mod report;

pub use iou::{iou3d, iou3d_axis_aligned, iou3d_oriented, IouMode};
pub use report::{evaluate, rows_to_csv, CategoryReport, Curve, EvalConfig, IouPoint, MetricReport, RotTransPoint, Summary};

use crate::geometry::{Pose9D, Similarity};
use crate::symmetry::{sym_rotation_error_deg, SymmetryAnnotation};
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRecord<T: Real> {
    pub sample_id: String,
    pub category: String,
    /// `None` when the method produced no estimate for this sample.
    pub predicted: Option<Pose9D<T>>,
    pub ground_truth: Pose9D<T>,
    pub symmetry: SymmetryAnnotation<T>,
}

fn check_category<T: Real>(records: &[PredictionRecord<T>]) -> Result<()> {
    let first = &records[0].category;
    if let Some(other) = records.iter().find(|r| &r.category != first) {
        return Err(Error::MixedCategories(format!("{first}, {}", other.category)));
    }
    Ok(())
}

/// Symmetry-aware rotation error (degrees) and translation error (cm) of one record.
pub fn absolute_errors<T: Real>(record: &PredictionRecord<T>) -> Option<(T, T)> {
    let pred = record.predicted.as_ref()?;
    let gt = &record.ground_truth;
    let rot = sym_rotation_error_deg(pred.rotation(), gt.rotation(), &record.symmetry);
    let trans = (pred.translation() - gt.translation()).norm() * T::lit(100.0);
    Some((rot, trans))
}

/// Per-record errors of one category, reusable across thresholds.
#[derive(Clone, Debug)]
pub struct AbsoluteErrors<T: Real> {
    /// (rotation deg, translation cm, IoU) per record; `None` for misses.
    pub items: Vec<Option<(T, T, T)>>,
}

impl<T: Real> AbsoluteErrors<T> {
    pub fn new(records: &[PredictionRecord<T>], mode: IouMode) -> Self {
        let items = records
            .iter()
            .map(|r| {
                let (rot, trans) = absolute_errors(r)?;
                let iou = iou3d(r.predicted.as_ref()?, &r.ground_truth, mode);
                Some((rot, trans, iou))
            })
            .collect();
        Self { items }
    }

    fn fraction(&self, hit: impl Fn(&(T, T, T)) -> bool) -> T {
        let hits = self.items.iter().flatten().filter(|e| hit(e)).count();
        T::from_usize(hits).unwrap() / T::from_usize(self.items.len()).unwrap()
    }

    /// Fraction with rotation error `< a_deg` and translation error `< b_cm`.
    pub fn precision(&self, a_deg: T, b_cm: T) -> T {
        self.fraction(|e| e.0 < a_deg && e.1 < b_cm)
    }

    /// Fraction with IoU `≥ threshold`.
    pub fn iou_precision(&self, threshold: T) -> T {
        self.fraction(|e| e.2 >= threshold)
    }
}

/// Fraction of records within `a_deg` rotation and `b_cm` translation of
/// their ground truth, rotation error taken under the record's symmetry.
pub fn abs_precision<T: Real>(records: &[PredictionRecord<T>], a_deg: T, b_cm: T) -> Result<T> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_category(records)?;
    let hits = records
        .iter()
        .filter_map(absolute_errors)
        .filter(|(r, t)| *r < a_deg && *t < b_cm)
        .count();
    Ok(T::from_usize(hits).unwrap() / T::from_usize(records.len()).unwrap())
}

/// Transform from the predicted object frame into the ground-truth object
/// frame: `gt⁻¹ ∘ pred` on the rigid parts.
pub fn relative_pose<T: Real>(record: &PredictionRecord<T>) -> Option<Similarity<T>> {
    let pred = record.predicted.as_ref()?;
    let gt_inv = record.ground_truth.rigid().invert().ok()?;
    Some(gt_inv.compose(&pred.rigid()))
}

/// Pairwise differences between the relative poses of one category.
#[derive(Clone, Debug)]
pub struct RelativeErrors<T: Real> {
    n: usize,
    /// (anchor j, other k, rotation deg, translation cm) for every ordered
    /// pair of records that both have predictions.
    pairs: Vec<(usize, usize, T, T)>,
}

impl<T: Real> RelativeErrors<T> {
    pub fn new(records: &[PredictionRecord<T>]) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::InsufficientSamples {
                required: 2,
                actual: records.len(),
            });
        }
        check_category(records)?;
        let rel: Vec<Option<Similarity<T>>> = records.iter().map(relative_pose).collect();
        let sym = &records[0].symmetry;
        let mut pairs = Vec::new();
        for (j, rj) in rel.iter().enumerate() {
            let Some(rj) = rj else { continue };
            for (k, rk) in rel.iter().enumerate() {
                let Some(rk) = rk else { continue };
                if k == j {
                    continue;
                }
                // Symmetries act on the ground-truth side of `gt⁻¹ ∘ pred`, i.e.
                // on the left; comparing inverses moves them to the right where
                // `sym_rotation_error_deg` expects them.
                let rot = sym_rotation_error_deg(
                    &rk.rotation().transpose(),
                    &rj.rotation().transpose(),
                    sym,
                );
                let trans = (rk.translation() - rj.translation()).norm() * T::lit(100.0);
                pairs.push((j, k, rot, trans));
            }
        }
        Ok(Self {
            n: records.len(),
            pairs,
        })
    }

    fn best_anchor(&self, hit: impl Fn(T, T) -> bool) -> T {
        let mut counts = vec![0usize; self.n];
        for &(j, _, rot, trans) in &self.pairs {
            if hit(rot, trans) {
                counts[j] += 1;
            }
        }
        let best = counts.into_iter().max().unwrap_or(0);
        T::from_usize(best).unwrap() / T::from_usize(self.n - 1).unwrap()
    }

    pub fn precision(&self, a_deg: T, b_cm: T) -> T {
        self.best_anchor(|r, t| r < a_deg && t < b_cm)
    }

    pub fn rotation_precision(&self, a_deg: T) -> T {
        self.best_anchor(|r, _| r < a_deg)
    }

    pub fn translation_precision(&self, b_cm: T) -> T {
        self.best_anchor(|_, t| t < b_cm)
    }
}

/// Relative precision of one category: `(1/(N−1)) · max_j Σ_{k≠j} f_ab(k, j)`
/// over the relative poses `gt_k⁻¹ ∘ pred_k`. `f_ab` compares rotations with
/// the category's symmetry and translations (cm, ground-truth object frame)
/// against `b_cm`.
pub fn rel_precision<T: Real>(records: &[PredictionRecord<T>], a_deg: T, b_cm: T) -> Result<T> {
    Ok(RelativeErrors::new(records)?.precision(a_deg, b_cm))
}
