use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{pose_from_fit, umeyama};
use crate::geometry::{Pose9D, Similarity};
use crate::nocs::Correspondences;
use crate::{Error, Real, Result};

/// Correspondences drawn per hypothesis.
pub const MIN_SAMPLE: usize = 4;

/// Hypotheses evaluated between two checks of the adaptive stopping rule.
const BATCH: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RansacConfig<T: Real> {
    pub max_iterations: usize,
    /// Camera-frame residual (meters) below which a pair is an inlier.
    pub inlier_threshold: T,
    pub min_inliers: usize,
    /// Consensus must also cover this fraction of all pairs. Guards against
    /// chance agreement on large, outlier-dominated inputs.
    pub min_inlier_ratio: f64,
    pub seed: u64,
    /// Probability of having drawn one all-inlier sample at which sampling
    /// may stop early. `1.0` always runs `max_iterations` hypotheses.
    pub confidence: f64,
}

impl<T: Real> Default for RansacConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            inlier_threshold: T::lit(0.01),
            min_inliers: 10,
            min_inlier_ratio: 0.0,
            seed: 0,
            confidence: 0.999,
        }
    }
}

impl<T: Real> RansacConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.inlier_threshold > T::zero()) {
            return Err(Error::InvalidConfig("inlier_threshold must be positive".into()));
        }
        if self.min_inliers < 3 {
            return Err(Error::InvalidConfig("min_inliers must be at least 3".into()));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_ratio) {
            return Err(Error::InvalidConfig("min_inlier_ratio must lie in [0, 1]".into()));
        }
        if !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(Error::InvalidConfig("confidence must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Hypotheses needed to see an all-inlier sample with the configured
    /// confidence when a fraction `inlier_ratio` of the pairs are inliers.
    fn required_iterations(&self, inlier_ratio: f64) -> f64 {
        if self.confidence >= 1.0 {
            return f64::INFINITY;
        }
        let all_inlier = inlier_ratio.powi(MIN_SAMPLE as i32);
        if all_inlier >= 1.0 {
            return 1.0;
        }
        if all_inlier <= 0.0 {
            return f64::INFINITY;
        }
        (1.0 - self.confidence).ln() / (1.0 - all_inlier).ln()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult<T: Real> {
    pub transform: Similarity<T>,
    pub pose: Pose9D<T>,
    /// Indices into the correspondences, ascending.
    pub inlier_indices: Vec<usize>,
    /// RMS camera-frame residual of the refit transform over the inliers.
    pub rms_residual: T,
    /// Hypotheses drawn.
    pub iterations: usize,
}

/// Sample indices for hypothesis `iteration`. Each hypothesis owns the
/// ChaCha8 stream `iteration` of the generator seeded with `seed`, so the
/// draw is independent of evaluation order.
fn draw_sample(seed: u64, iteration: usize, n: usize) -> [usize; MIN_SAMPLE] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration as u64);
    let picked = rand::seq::index::sample(&mut rng, n, MIN_SAMPLE);
    let mut out = [0; MIN_SAMPLE];
    for (o, i) in out.iter_mut().zip(picked.iter()) {
        *o = i;
    }
    out
}

#[inline]
fn residual_sq<T: Real>(t: &Similarity<T>, src: &Vector3<T>, dst: &Vector3<T>) -> T {
    (t.apply(src) - dst).norm_squared()
}

fn count_inliers<T: Real>(t: &Similarity<T>, corr: &Correspondences<T>, thr_sq: T) -> usize {
    corr.nocs_points
        .iter()
        .zip(&corr.camera_points)
        .filter(|(s, d)| residual_sq(t, s, d) < thr_sq)
        .count()
}

fn hypothesis<T: Real>(corr: &Correspondences<T>, seed: u64, iteration: usize) -> Option<Similarity<T>> {
    let idx = draw_sample(seed, iteration, corr.len());
    let src = idx.map(|i| corr.nocs_points[i]);
    let dst = idx.map(|i| corr.camera_points[i]);
    umeyama(&src, &dst).ok()
}

/// Robust similarity fit from NOCS points to camera points.
///
/// Hypotheses come from [`MIN_SAMPLE`]-point Umeyama fits; the one with the
/// most inliers wins, ties going to the lowest iteration index. The
/// returned transform is the Umeyama refit on the winner's inliers. The
/// result depends only on `(corr, cfg)`: hypotheses are scored in parallel
/// batches and the stopping rule is checked only between batches.
pub fn ransac_fit<T: Real>(corr: &Correspondences<T>, cfg: &RansacConfig<T>) -> Result<FitResult<T>> {
    cfg.validate()?;
    if corr.nocs_points.len() != corr.camera_points.len() {
        return Err(Error::Dimension {
            expected: format!("{} camera points", corr.nocs_points.len()),
            actual: format!("{}", corr.camera_points.len()),
        });
    }
    let n = corr.len();
    let required = cfg.min_inliers.max(MIN_SAMPLE);
    if n < required {
        return Err(Error::InsufficientPoints { required, actual: n });
    }
    let thr_sq = cfg.inlier_threshold * cfg.inlier_threshold;

    // (inlier count, iteration, model)
    let mut best: Option<(usize, usize, Similarity<T>)> = None;
    let mut drawn = 0;
    while drawn < cfg.max_iterations {
        let end = (drawn + BATCH).min(cfg.max_iterations);
        let batch_best = (drawn..end)
            .into_par_iter()
            .filter_map(|it| hypothesis(corr, cfg.seed, it).map(|m| (count_inliers(&m, corr, thr_sq), it, m)))
            .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
        drawn = end;
        if let Some(cand) = batch_best {
            // Earlier batches hold lower iteration indices, so only a strictly
            // larger count replaces the incumbent.
            if best.as_ref().is_none_or(|b| cand.0 > b.0) {
                best = Some(cand);
            }
        }
        if let Some((count, _, _)) = &best {
            let ratio = *count as f64 / n as f64;
            if (drawn as f64) >= cfg.required_iterations(ratio) {
                break;
            }
        }
    }

    let best_count = best.as_ref().map_or(0, |b| b.0);
    let consensus = cfg.min_inliers.max((cfg.min_inlier_ratio * n as f64).ceil() as usize);
    let (_, _, model) = match best {
        Some(b) if b.0 >= consensus => b,
        _ => {
            return Err(Error::NoConsensus {
                required: consensus,
                best: best_count,
            })
        }
    };

    let inlier_indices: Vec<usize> = (0..n)
        .filter(|&i| residual_sq(&model, &corr.nocs_points[i], &corr.camera_points[i]) < thr_sq)
        .collect();
    let src: Vec<_> = inlier_indices.iter().map(|&i| corr.nocs_points[i]).collect();
    let dst: Vec<_> = inlier_indices.iter().map(|&i| corr.camera_points[i]).collect();
    let transform = umeyama(&src, &dst).unwrap_or(model);
    let sum_sq = src
        .iter()
        .zip(&dst)
        .fold(T::zero(), |acc, (s, d)| acc + residual_sq(&transform, s, d));
    let rms_residual = (sum_sq / T::from_usize(src.len()).unwrap()).sqrt();

    let mut fit = FitResult {
        transform,
        pose: Pose9D::new(
            Vector3::repeat(T::one()),
            *transform.rotation(),
            *transform.translation(),
        )?,
        inlier_indices,
        rms_residual,
        iterations: drawn,
    };
    fit.pose = pose_from_fit(&fit, corr)?;
    Ok(fit)
}
