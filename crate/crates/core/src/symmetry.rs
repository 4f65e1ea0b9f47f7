//! Object symmetry annotations and symmetry-aware rotation error.
//!
//! Discrete symmetries are rigid object-frame transforms `g` such that the
//! shape is invariant under `g`; the identity is implicit and never stored.
//! Continuous symmetries are rotation axes (with an offset point the axis
//! passes through). Symmetric ground truths are produced by composing on the
//! object-frame side: `pose ∘ g`.

use nalgebra::{Unit, Vector3};

use crate::geometry::{direction_angle_deg, rotation_geodesic_deg, Pose9D, Rotation, Similarity};
use crate::{Error, Real, Result};

/// Number of equally spaced samples used to discretize a continuous axis.
pub const CONTINUOUS_SAMPLES: usize = 36;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuousSymmetry<T: Real> {
    axis: Unit<Vector3<T>>,
    offset: Vector3<T>,
}

impl<T: Real> ContinuousSymmetry<T> {
    /// `axis` must have unit norm within 1e-6.
    pub fn new(axis: Vector3<T>, offset: Vector3<T>) -> Result<Self> {
        let n = axis.norm();
        if !n.is_finite() || (n - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::InvalidAnnotation(format!(
                "continuous axis must have unit norm, got {}",
                n.as_f64()
            )));
        }
        if offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidAnnotation("axis offset is not finite".into()));
        }
        Ok(Self {
            axis: Unit::new_unchecked(axis),
            offset,
        })
    }

    pub fn about(axis: Vector3<T>) -> Result<Self> {
        Self::new(axis, Vector3::zeros())
    }

    pub fn axis(&self) -> &Vector3<T> {
        self.axis.as_ref()
    }

    pub fn offset(&self) -> &Vector3<T> {
        &self.offset
    }

    /// Rotation by `angle` about the axis line: `x ↦ R(x − o) + o`.
    pub fn transform(&self, angle: T) -> Similarity<T> {
        let r = Rotation::from_axis_angle(self.axis.as_ref(), angle);
        let t = self.offset - r.rotate(&self.offset);
        Similarity::rigid(r, t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SymmetryKind {
    None,
    Discrete,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryAnnotation<T: Real> {
    discrete: Vec<Similarity<T>>,
    continuous: Vec<ContinuousSymmetry<T>>,
}

impl<T: Real> Default for SymmetryAnnotation<T> {
    fn default() -> Self {
        Self::none()
    }
}

impl<T: Real> SymmetryAnnotation<T> {
    pub fn none() -> Self {
        Self {
            discrete: Vec::new(),
            continuous: Vec::new(),
        }
    }

    /// Discrete transforms must be rigid (unit scale) with proper rotation blocks.
    pub fn new(discrete: Vec<Similarity<T>>, continuous: Vec<ContinuousSymmetry<T>>) -> Result<Self> {
        for (i, g) in discrete.iter().enumerate() {
            if (g.scale() - T::one()).abs() > T::lit(T::ORTHONORMAL_TOL) {
                return Err(Error::InvalidAnnotation(format!(
                    "discrete symmetry {i} is not rigid (scale {})",
                    g.scale().as_f64()
                )));
            }
            Rotation::new(*g.rotation().matrix()).map_err(|e| {
                Error::InvalidAnnotation(format!("discrete symmetry {i}: {e}"))
            })?;
        }
        Ok(Self {
            discrete,
            continuous,
        })
    }

    pub fn discrete_only(discrete: Vec<Similarity<T>>) -> Result<Self> {
        Self::new(discrete, Vec::new())
    }

    pub fn continuous_only(continuous: Vec<ContinuousSymmetry<T>>) -> Self {
        Self {
            discrete: Vec::new(),
            continuous,
        }
    }

    /// `n`-fold rotational symmetry about `axis` through the origin
    /// (`n − 1` stored transforms).
    pub fn cyclic(axis: Vector3<T>, n: usize) -> Self {
        let discrete = (1..n)
            .map(|i| {
                let angle = T::two_pi() * T::from_usize(i).unwrap() / T::from_usize(n).unwrap();
                Similarity::rigid(Rotation::from_axis_angle(&axis, angle), Vector3::zeros())
            })
            .collect();
        Self {
            discrete,
            continuous: Vec::new(),
        }
    }

    pub fn discrete(&self) -> &[Similarity<T>] {
        &self.discrete
    }

    pub fn continuous(&self) -> &[ContinuousSymmetry<T>] {
        &self.continuous
    }

    pub fn is_empty(&self) -> bool {
        self.discrete.is_empty() && self.continuous.is_empty()
    }

    pub fn kind(&self) -> SymmetryKind {
        if !self.continuous.is_empty() {
            SymmetryKind::Continuous
        } else if !self.discrete.is_empty() {
            SymmetryKind::Discrete
        } else {
            SymmetryKind::None
        }
    }

    /// Object-frame transforms spanning the (discretized) symmetry set:
    /// identity first, then each discrete transform, then `n_continuous − 1`
    /// non-zero rotations about each continuous axis at spacing `2π/n`.
    pub fn object_transforms(&self, n_continuous: usize) -> Result<Vec<Similarity<T>>> {
        if n_continuous == 0 {
            return Err(Error::InvalidAnnotation(
                "continuous sample count must be at least 1".into(),
            ));
        }
        let mut out = Vec::with_capacity(1 + self.discrete.len() + self.continuous.len() * n_continuous);
        out.push(Similarity::identity());
        out.extend(self.discrete.iter().copied());
        let n = T::from_usize(n_continuous).unwrap();
        for axis in &self.continuous {
            for k in 1..n_continuous {
                let angle = T::two_pi() * T::from_usize(k).unwrap() / n;
                out.push(axis.transform(angle));
            }
        }
        Ok(out)
    }

    /// The annotation expressed in a re-canonicalized object frame: if the
    /// new frame relates to the old one by `old = f ∘ new`, every symmetry
    /// `g` becomes `f⁻¹ ∘ g ∘ f`.
    pub fn conjugated(&self, f: &Similarity<T>) -> Result<Self> {
        let f_inv = f.invert()?;
        let discrete = self
            .discrete
            .iter()
            .map(|g| f_inv.compose(g).compose(f))
            .collect();
        let continuous = self
            .continuous
            .iter()
            .map(|c| {
                let axis = f_inv.rotation().rotate(c.axis());
                ContinuousSymmetry::new(axis.normalize(), f_inv.apply(c.offset()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(discrete, continuous)
    }
}

/// Ground truth `gt` augmented with its symmetry-equivalent poses.
///
/// Always starts with `gt` itself. Size is carried over unchanged.
pub fn augment_gt_poses<T: Real>(
    gt: &Pose9D<T>,
    sym: &SymmetryAnnotation<T>,
    n_continuous: usize,
) -> Result<Vec<Pose9D<T>>> {
    let transforms = sym.object_transforms(n_continuous)?;
    Ok(std::iter::once(*gt)
        .chain(transforms[1..].iter().map(|g| gt.then_object_transform(g)))
        .collect())
}

/// Rotation error in degrees under the annotated symmetry.
///
/// * no symmetry: geodesic distance;
/// * discrete: minimum geodesic distance over `gt · g` for `g` in the
///   symmetry set (identity included);
/// * continuous: angle between the annotated axis mapped by `pred` and by
///   `gt` (after discrete augmentation, if any), minimized over axes.
pub fn sym_rotation_error_deg<T: Real>(
    pred: &Rotation<T>,
    gt: &Rotation<T>,
    sym: &SymmetryAnnotation<T>,
) -> T {
    let candidates = std::iter::once(*gt).chain(sym.discrete.iter().map(|g| gt.then(g.rotation())));
    if sym.continuous.is_empty() {
        candidates
            .map(|g| rotation_geodesic_deg(pred, &g))
            .fold(T::max_value().unwrap(), |a, b| a.min(b))
    } else {
        let mut best = T::max_value().unwrap();
        for g in candidates {
            for c in &sym.continuous {
                let e = direction_angle_deg(&pred.rotate(c.axis()), &g.rotate(c.axis()));
                best = best.min(e);
            }
        }
        best
    }
}
