//! NOCS maps, 2D–3D correspondences and smooth-L1 NOCS scoring.
//!
//! NOCS values are stored in `[0, 1]³`. As object-frame coordinates they are
//! recentred to `[−0.5, 0.5]³` by subtracting 0.5 per channel.

use nalgebra::Vector3;

use crate::camera::CameraIntrinsics;
use crate::image::{ensure_same_dims, DepthMap, Grid, Mask};
use crate::symmetry::{SymmetryAnnotation, CONTINUOUS_SAMPLES};
use crate::{Error, Real, Result};

/// Smooth-L1 transition point used during training.
pub const DEFAULT_BETA: f64 = 0.1;

/// Per-pixel normalized object coordinates with a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct NocsMap<T: Real> {
    values: Grid<Vector3<T>>,
    valid: Mask,
}

impl<T: Real> NocsMap<T> {
    /// Every valid pixel must lie in `[0, 1]³`.
    pub fn new(values: Grid<Vector3<T>>, valid: Mask) -> Result<Self> {
        ensure_same_dims("validity mask", values.dims(), valid.dims())?;
        for (i, (p, &ok)) in values.data().iter().zip(valid.data()).enumerate() {
            if ok && p.iter().any(|c| !(*c >= T::zero() && *c <= T::one())) {
                let (u, v) = values.coords(i);
                return Err(Error::InvalidValue(format!(
                    "NOCS value at ({u}, {v}) outside [0, 1]"
                )));
            }
        }
        Ok(Self { values, valid })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            values: Grid::filled(width, height, Vector3::zeros()),
            valid: Grid::filled(width, height, false),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.values.dims()
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    #[inline]
    pub fn value(&self, u: usize, v: usize) -> &Vector3<T> {
        self.values.get(u, v)
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        *self.valid.get(u, v)
    }

    /// The value at `(u, v)` when valid.
    pub fn get(&self, u: usize, v: usize) -> Option<Vector3<T>> {
        self.is_valid(u, v).then(|| *self.values.get(u, v))
    }

    /// Stores a value, clamped into `[0, 1]³`, and marks the pixel valid.
    pub fn set(&mut self, u: usize, v: usize, value: Vector3<T>) {
        let c = value.map(|x| x.max(T::zero()).min(T::one()));
        self.values.set(u, v, c);
        self.valid.set(u, v, true);
    }

    pub fn clear(&mut self, u: usize, v: usize) {
        self.values.set(u, v, Vector3::zeros());
        self.valid.set(u, v, false);
    }

    pub fn values(&self) -> &Grid<Vector3<T>> {
        &self.values
    }

    pub fn valid(&self) -> &Mask {
        &self.valid
    }
}

/// Paired object-frame (recentred NOCS) and camera-frame points.
#[derive(Clone, Debug, PartialEq)]
pub struct Correspondences<T: Real> {
    pub nocs_points: Vec<Vector3<T>>,
    pub camera_points: Vec<Vector3<T>>,
    /// Source pixel `(u, v)` of each pair.
    pub pixels: Vec<(usize, usize)>,
}

impl<T: Real> Default for Correspondences<T> {
    fn default() -> Self {
        Self {
            nocs_points: Vec::new(),
            camera_points: Vec::new(),
            pixels: Vec::new(),
        }
    }
}

impl<T: Real> Correspondences<T> {
    pub fn new(nocs_points: Vec<Vector3<T>>, camera_points: Vec<Vector3<T>>) -> Result<Self> {
        if nocs_points.len() != camera_points.len() {
            return Err(Error::Dimension {
                expected: format!("{} camera points", nocs_points.len()),
                actual: format!("{}", camera_points.len()),
            });
        }
        Ok(Self {
            nocs_points,
            camera_points,
            pixels: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.nocs_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nocs_points.is_empty()
    }
}

/// One pair per pixel that is masked, NOCS-valid and has positive depth.
pub fn build_correspondences<T: Real>(
    nocs: &NocsMap<T>,
    depth: &DepthMap<T>,
    k: &CameraIntrinsics<T>,
    mask: &Mask,
) -> Result<Correspondences<T>> {
    ensure_same_dims("NOCS map", k.dims(), nocs.dims())?;
    ensure_same_dims("depth", k.dims(), depth.dims())?;
    ensure_same_dims("mask", k.dims(), mask.dims())?;
    let half = Vector3::repeat(T::lit(0.5));
    let mut out = Correspondences::default();
    for v in 0..k.height {
        for u in 0..k.width {
            if !*mask.get(u, v) || !nocs.is_valid(u, v) {
                continue;
            }
            let d = depth.get(u, v);
            if d <= T::zero() {
                continue;
            }
            let uf = T::from_usize(u).unwrap();
            let vf = T::from_usize(v).unwrap();
            out.nocs_points.push(nocs.value(u, v) - half);
            out.camera_points.push(k.unproject(uf, vf, d));
            out.pixels.push((u, v));
        }
    }
    Ok(out)
}

/// Smooth-L1 of a scalar residual: `0.5·x²/β` below `β`, `|x| − 0.5β` above.
#[inline]
pub fn smooth_l1<T: Real>(x: T, beta: T) -> T {
    let a = x.abs();
    if a < beta {
        T::lit(0.5) * a * a / beta
    } else {
        a - T::lit(0.5) * beta
    }
}

/// Per-pixel smooth-L1 summed over the three channels.
#[inline]
fn pixel_loss<T: Real>(pred: &Vector3<T>, gt: &Vector3<T>, beta: T) -> T {
    smooth_l1(pred.x - gt.x, beta) + smooth_l1(pred.y - gt.y, beta) + smooth_l1(pred.z - gt.z, beta)
}

fn check_loss_inputs<T: Real>(
    pred: &NocsMap<T>,
    gt: &NocsMap<T>,
    mask: &Mask,
    beta: T,
) -> Result<usize> {
    ensure_same_dims("prediction", gt.dims(), pred.dims())?;
    ensure_same_dims("mask", gt.dims(), mask.dims())?;
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidValue(format!(
            "beta must be positive, got {}",
            beta.as_f64()
        )));
    }
    match mask.count() {
        0 => Err(Error::EmptyRegion),
        n => Ok(n),
    }
}

/// Mean over masked pixels of the channel-summed smooth-L1 between `pred`
/// and `gt`.
pub fn smooth_l1_nocs_loss<T: Real>(
    pred: &NocsMap<T>,
    gt: &NocsMap<T>,
    mask: &Mask,
    beta: T,
) -> Result<T> {
    let n = check_loss_inputs(pred, gt, mask, beta)?;
    let sum = masked_sum(pred, mask, beta, |i| gt.values.data()[i]);
    Ok(sum / T::from_usize(n).unwrap())
}

fn masked_sum<T: Real>(
    pred: &NocsMap<T>,
    mask: &Mask,
    beta: T,
    gt_at: impl Fn(usize) -> Vector3<T>,
) -> T {
    pred.values
        .data()
        .iter()
        .zip(mask.data())
        .enumerate()
        .filter(|(_, (_, &m))| m)
        .fold(T::zero(), |acc, (i, (p, _))| acc + pixel_loss(p, &gt_at(i), beta))
}

/// Minimum of [`smooth_l1_nocs_loss`] over the ground truth augmented by the
/// annotated symmetries.
///
/// Each augmented map rotates the recentred ground-truth coordinates about
/// the NOCS centre by the rotation block of a symmetry transform; continuous
/// axes contribute [`CONTINUOUS_SAMPLES`] equally spaced angles. The
/// unaugmented map is always part of the set.
pub fn symmetry_aware_nocs_loss<T: Real>(
    pred: &NocsMap<T>,
    gt: &NocsMap<T>,
    mask: &Mask,
    sym: &SymmetryAnnotation<T>,
    beta: T,
) -> Result<T> {
    symmetry_aware_nocs_loss_with(pred, gt, mask, sym, beta, CONTINUOUS_SAMPLES)
}

/// [`symmetry_aware_nocs_loss`] with an explicit continuous sample count.
pub fn symmetry_aware_nocs_loss_with<T: Real>(
    pred: &NocsMap<T>,
    gt: &NocsMap<T>,
    mask: &Mask,
    sym: &SymmetryAnnotation<T>,
    beta: T,
    n_continuous: usize,
) -> Result<T> {
    let n = T::from_usize(check_loss_inputs(pred, gt, mask, beta)?).unwrap();
    let transforms = sym.object_transforms(n_continuous)?;
    let half = Vector3::repeat(T::lit(0.5));
    let gt_values = gt.values.data();

    let mut best = masked_sum(pred, mask, beta, |i| gt_values[i]) / n;
    for g in &transforms[1..] {
        let r = g.rotation();
        let loss = masked_sum(pred, mask, beta, |i| r.rotate(&(gt_values[i] - half)) + half) / n;
        best = best.min(loss);
    }
    Ok(best)
}
