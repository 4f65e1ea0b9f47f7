//! Rotation, similarity-transform and 9-DoF pose algebra.
//!
//! Point action convention for every transform in this crate is
//! `x ↦ c·R·x + t`, mapping object-frame points into the camera frame.

use nalgebra::{Matrix3, Matrix4, Unit, Vector3};

use crate::{Error, Real, Result};

/// Proper orthonormal 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation<T: Real> {
    m: Matrix3<T>,
}

impl<T: Real> Rotation<T> {
    /// Validates orthonormality (`mᵀm = I`) and `det(m) = +1` element-wise
    /// within [`Real::ORTHONORMAL_TOL`].
    pub fn new(m: Matrix3<T>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entry".into()));
        }
        let tol = T::lit(T::ORTHONORMAL_TOL);
        let dev = orthonormality_error(&m);
        if dev > tol {
            return Err(Error::InvalidRotation(format!(
                "not orthonormal (max |mᵀm - I| = {:e})",
                dev.as_f64()
            )));
        }
        let det = m.determinant();
        if (det - T::one()).abs() > tol {
            return Err(Error::InvalidRotation(format!(
                "determinant {} is not +1",
                det.as_f64()
            )));
        }
        Ok(Self { m })
    }

    /// Wraps `m` without validation. The caller guarantees the invariants.
    #[inline]
    pub fn new_unchecked(m: Matrix3<T>) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// Right-handed rotation of `angle` radians about `axis` (normalized here).
    pub fn from_axis_angle(axis: &Vector3<T>, angle: T) -> Self {
        let axis = Unit::new_normalize(*axis);
        Self {
            m: nalgebra::Rotation3::from_axis_angle(&axis, angle).into_inner(),
        }
    }

    /// Nearest rotation to `m` in the Frobenius sense.
    pub fn nearest(m: &Matrix3<T>) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let mut d = Matrix3::identity();
        if (u * v_t).determinant() < T::zero() {
            d[(2, 2)] = -T::one();
        }
        Self { m: u * d * v_t }
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<T> {
        &self.m
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    /// Matrix product `self · other`.
    #[inline]
    pub fn then(&self, other: &Self) -> Self {
        Self { m: self.m * other.m }
    }

    #[inline]
    pub fn rotate(&self, v: &Vector3<T>) -> Vector3<T> {
        self.m * v
    }

    pub fn cast<U: Real>(&self) -> Rotation<U> {
        Rotation {
            m: self.m.map(|v| U::lit(v.as_f64())),
        }
    }
}

/// Largest element of `|mᵀm - I|`.
pub fn orthonormality_error<T: Real>(m: &Matrix3<T>) -> T {
    let dev = m.transpose() * m - Matrix3::identity();
    dev.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// Rotation angle of `m` in radians, in `[0, π]`.
///
/// Evaluated as `atan2(sin θ, cos θ)` with `cos θ = (tr m − 1)/2` and
/// `sin θ = ½‖vee(m − mᵀ)‖`, which equals the clamped arccos of the trace
/// but keeps full precision near 0° and 180°.
pub fn rotation_angle<T: Real>(m: &Matrix3<T>) -> T {
    let half = T::lit(0.5);
    let cos = (m.trace() - T::one()) * half;
    let sx = m[(2, 1)] - m[(1, 2)];
    let sy = m[(0, 2)] - m[(2, 0)];
    let sz = m[(1, 0)] - m[(0, 1)];
    let sin = (sx * sx + sy * sy + sz * sz).sqrt() * half;
    sin.atan2(cos)
}

/// Geodesic distance on SO(3) between `a` and `b`, in degrees.
pub fn rotation_geodesic_deg<T: Real>(a: &Rotation<T>, b: &Rotation<T>) -> T {
    to_degrees(rotation_angle(&(a.matrix().transpose() * b.matrix())))
}

/// Angle between two (not necessarily unit) directions, in degrees.
pub fn direction_angle_deg<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> T {
    to_degrees(a.cross(b).norm().atan2(a.dot(b)))
}

#[inline]
pub fn to_degrees<T: Real>(rad: T) -> T {
    rad * T::lit(180.0) / T::pi()
}

#[inline]
pub fn to_radians<T: Real>(deg: T) -> T {
    deg * T::pi() / T::lit(180.0)
}

fn ensure_finite<T: Real>(v: &Vector3<T>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidTransform(format!("{what} is not finite")))
    }
}

/// Uniform-scale similarity `x ↦ c·R·x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similarity<T: Real> {
    scale: T,
    rotation: Rotation<T>,
    translation: Vector3<T>,
}

impl<T: Real> Similarity<T> {
    pub fn new(scale: T, rotation: Rotation<T>, translation: Vector3<T>) -> Result<Self> {
        let t = Self::new_unchecked(scale, rotation, translation);
        t.validate()?;
        Ok(t)
    }

    /// Builds the transform without checking `c > 0` or finiteness.
    pub fn new_unchecked(scale: T, rotation: Rotation<T>, translation: Vector3<T>) -> Self {
        Self {
            scale,
            rotation,
            translation,
        }
    }

    pub fn rigid(rotation: Rotation<T>, translation: Vector3<T>) -> Self {
        Self::new_unchecked(T::one(), rotation, translation)
    }

    pub fn identity() -> Self {
        Self::rigid(Rotation::identity(), Vector3::zeros())
    }

    pub fn from_scale(scale: T) -> Self {
        Self::new_unchecked(scale, Rotation::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<T>) -> Self {
        Self::rigid(Rotation::identity(), translation)
    }

    /// Reads a rigid 4×4 homogeneous matrix (bottom row `0 0 0 1`).
    pub fn from_rigid_matrix(m: &Matrix4<T>) -> Result<Self> {
        let tol = T::lit(T::ORTHONORMAL_TOL);
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)] - T::one()];
        if bottom.iter().any(|v| !(v.abs() <= tol)) {
            return Err(Error::InvalidTransform(
                "homogeneous matrix bottom row must be 0 0 0 1".into(),
            ));
        }
        let rotation = Rotation::new(m.fixed_view::<3, 3>(0, 0).into_owned())?;
        let translation = m.fixed_view::<3, 1>(0, 3).into_owned();
        Self::new(T::one(), rotation, translation)
    }

    pub fn to_homogeneous(&self) -> Matrix4<T> {
        let mut out = Matrix4::identity();
        out.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(self.rotation.matrix() * self.scale));
        out.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        out
    }

    fn validate(&self) -> Result<()> {
        if !self.scale.is_finite() || self.scale <= T::zero() {
            return Err(Error::InvalidTransform(format!(
                "scale must be positive and finite, got {}",
                self.scale.as_f64()
            )));
        }
        if self.rotation.matrix().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTransform("rotation is not finite".into()));
        }
        ensure_finite(&self.translation, "translation")
    }

    #[inline]
    pub fn scale(&self) -> T {
        self.scale
    }

    #[inline]
    pub fn rotation(&self) -> &Rotation<T> {
        &self.rotation
    }

    #[inline]
    pub fn translation(&self) -> &Vector3<T> {
        &self.translation
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation.rotate(p) * self.scale + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            scale: self.scale * other.scale,
            rotation: self.rotation.then(&other.rotation),
            translation: self.rotation.rotate(&other.translation) * self.scale + self.translation,
        }
    }

    pub fn invert(&self) -> Result<Self> {
        self.validate()?;
        let inv_scale = T::one() / self.scale;
        let rt = self.rotation.transpose();
        Ok(Self {
            scale: inv_scale,
            rotation: rt,
            translation: -(rt.rotate(&self.translation) * inv_scale),
        })
    }
}

/// 9-DoF object pose: per-axis size, rotation and translation.
///
/// `scale` holds the object extents (meters) along its canonical axes; the
/// rigid part maps canonical object coordinates into the camera frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose9D<T: Real> {
    scale: Vector3<T>,
    rotation: Rotation<T>,
    translation: Vector3<T>,
}

impl<T: Real> Pose9D<T> {
    pub fn new(scale: Vector3<T>, rotation: Rotation<T>, translation: Vector3<T>) -> Result<Self> {
        if scale.iter().any(|s| !s.is_finite() || *s <= T::zero()) {
            return Err(Error::InvalidPose(format!(
                "scale components must be positive, got [{}, {}, {}]",
                scale.x.as_f64(),
                scale.y.as_f64(),
                scale.z.as_f64()
            )));
        }
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose("translation is not finite".into()));
        }
        Ok(Self {
            scale,
            rotation,
            translation,
        })
    }

    #[inline]
    pub fn scale(&self) -> &Vector3<T> {
        &self.scale
    }

    #[inline]
    pub fn rotation(&self) -> &Rotation<T> {
        &self.rotation
    }

    #[inline]
    pub fn translation(&self) -> &Vector3<T> {
        &self.translation
    }

    /// Rotation and translation as a unit-scale transform.
    pub fn rigid(&self) -> Similarity<T> {
        Similarity::rigid(self.rotation, self.translation)
    }

    /// The pose re-expressed after applying `g` on the object-frame side,
    /// i.e. the rigid part becomes `pose ∘ g`. `g`'s scale is ignored and the
    /// size is carried over unchanged.
    pub fn then_object_transform(&self, g: &Similarity<T>) -> Self {
        Self {
            scale: self.scale,
            rotation: self.rotation.then(g.rotation()),
            translation: self.rotation.rotate(g.translation()) + self.translation,
        }
    }

    /// The eight corners of the size-scaled box centred on the object origin,
    /// in the camera frame.
    pub fn corners(&self) -> [Vector3<T>; 8] {
        let half = self.scale * T::lit(0.5);
        let mut out = [Vector3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -half.x } else { half.x };
            let sy = if i & 2 == 0 { -half.y } else { half.y };
            let sz = if i & 4 == 0 { -half.z } else { half.z };
            *c = self.rotation.rotate(&Vector3::new(sx, sy, sz)) + self.translation;
        }
        out
    }

    pub fn cast<U: Real>(&self) -> Pose9D<U> {
        let conv = |v: &Vector3<T>| v.map(|x| U::lit(x.as_f64()));
        Pose9D {
            scale: conv(&self.scale),
            rotation: self.rotation.cast(),
            translation: conv(&self.translation),
        }
    }
}
