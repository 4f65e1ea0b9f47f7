//! Similarity fitting from NOCS/camera correspondences: closed-form Umeyama
//! least squares inside a seeded RANSAC loop, then size recovery.

mod ransac;
mod umeyama;

pub use ransac::{ransac_fit, FitResult, RansacConfig, MIN_SAMPLE};
pub use umeyama::umeyama;

use nalgebra::Vector3;

use crate::geometry::Pose9D;
use crate::nocs::Correspondences;
use crate::{Error, Real, Result};

/// How per-axis object extents are measured from inlier NOCS points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExtentRule {
    /// `max − min` of the recentred coordinates along each axis.
    #[default]
    MinMax,
    /// `2·max |x|` along each axis, i.e. the extent of a box centred on the
    /// NOCS origin that encloses every inlier.
    Centered,
}

/// Converts a fit into a 9-DoF pose: rotation and translation come from the
/// similarity, size is `c · extent` of the inlier NOCS points.
pub fn pose_from_fit<T: Real>(fit: &FitResult<T>, corr: &Correspondences<T>) -> Result<Pose9D<T>> {
    pose_from_fit_with(fit, corr, ExtentRule::default())
}

pub fn pose_from_fit_with<T: Real>(
    fit: &FitResult<T>,
    corr: &Correspondences<T>,
    rule: ExtentRule,
) -> Result<Pose9D<T>> {
    if fit.inlier_indices.len() < 3 {
        return Err(Error::InsufficientPoints {
            required: 3,
            actual: fit.inlier_indices.len(),
        });
    }
    let mut lo = Vector3::repeat(T::max_value().unwrap());
    let mut hi = Vector3::repeat(T::min_value().unwrap());
    for &i in &fit.inlier_indices {
        let p = corr.nocs_points.get(i).ok_or_else(|| {
            Error::InvalidValue(format!("inlier index {i} out of range ({} pairs)", corr.len()))
        })?;
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let extent = match rule {
        ExtentRule::MinMax => hi - lo,
        ExtentRule::Centered => hi.abs().sup(&lo.abs()) * T::lit(2.0),
    };
    Pose9D::new(
        extent * fit.transform.scale(),
        *fit.transform.rotation(),
        *fit.transform.translation(),
    )
}

/// Correspondences from one object's NOCS map and depth, then [`ransac_fit`].
pub fn fit_nocs<T: Real>(
    nocs: &crate::nocs::NocsMap<T>,
    depth: &crate::image::DepthMap<T>,
    k: &crate::camera::CameraIntrinsics<T>,
    mask: &crate::image::Mask,
    cfg: &RansacConfig<T>,
) -> Result<FitResult<T>> {
    let corr = crate::nocs::build_correspondences(nocs, depth, k, mask)?;
    ransac_fit(&corr, cfg)
}
