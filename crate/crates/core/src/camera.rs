//! Pinhole projection and depth backprojection.
//!
//! Pixel `(u, v)` is sampled at integer coordinates: the ray through pixel
//! `(u, v)` has direction `((u − cx)/fx, (v − cy)/fy, 1)`.

use nalgebra::{Matrix3, Vector3};

use crate::image::{ensure_same_dims, DepthMap, Mask};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.fx <= T::zero() || self.fy <= T::zero() {
            return Err(Error::InvalidIntrinsics(
                "focal lengths must be positive and finite".into(),
            ));
        }
        let w = T::from_usize(self.width).unwrap_or_else(T::zero);
        let h = T::from_usize(self.height).unwrap_or_else(T::zero);
        if self.cx < T::zero() || self.cx >= w || self.cy < T::zero() || self.cy >= h {
            return Err(Error::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx.as_f64(),
                self.cy.as_f64(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }

    /// Reads a 3×3 `K` (skew must be zero, bottom row `0 0 1`).
    pub fn from_matrix(k: &Matrix3<T>, width: usize, height: usize) -> Result<Self> {
        let tol = T::lit(1e-9);
        let zeros = [k[(0, 1)], k[(1, 0)], k[(2, 0)], k[(2, 1)]];
        if zeros.iter().any(|v| !(v.abs() <= tol)) || !((k[(2, 2)] - T::one()).abs() <= tol) {
            return Err(Error::InvalidIntrinsics(
                "K must have zero skew and bottom row 0 0 1".into(),
            ));
        }
        Self::new(k[(0, 0)], k[(1, 1)], k[(0, 2)], k[(1, 2)], width, height)
    }

    pub fn matrix(&self) -> Matrix3<T> {
        let (z, o) = (T::zero(), T::one());
        Matrix3::new(self.fx, z, self.cx, z, self.fy, self.cy, z, z, o)
    }

    /// Continuous pixel coordinates of a camera-frame point in front of the camera.
    pub fn project(&self, p: &Vector3<T>) -> Option<(T, T)> {
        if p.z <= T::zero() {
            return None;
        }
        Some((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    /// Camera-frame point at depth `z` on the ray through `(u, v)`.
    #[inline]
    pub fn unproject(&self, u: T, v: T, z: T) -> Vector3<T> {
        Vector3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Unnormalized ray direction (z = 1) through pixel `(u, v)`.
    #[inline]
    pub fn ray(&self, u: T, v: T) -> Vector3<T> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, T::one())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn cast<U: Real>(&self) -> CameraIntrinsics<U> {
        let c = |v: T| U::lit(v.as_f64());
        CameraIntrinsics {
            fx: c(self.fx),
            fy: c(self.fy),
            cx: c(self.cx),
            cy: c(self.cy),
            width: self.width,
            height: self.height,
        }
    }
}

/// A backprojected pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelPoint<T: Real> {
    pub u: usize,
    pub v: usize,
    pub point: Vector3<T>,
}

/// Camera-frame points for every masked pixel with positive depth, in
/// row-major pixel order.
pub fn backproject<T: Real>(
    depth: &DepthMap<T>,
    k: &CameraIntrinsics<T>,
    mask: &Mask,
) -> Result<Vec<PixelPoint<T>>> {
    ensure_same_dims("depth", k.dims(), depth.dims())?;
    ensure_same_dims("mask", k.dims(), mask.dims())?;
    let mut out = Vec::new();
    for v in 0..k.height {
        for u in 0..k.width {
            if !*mask.get(u, v) {
                continue;
            }
            let d = depth.get(u, v);
            if d > T::zero() {
                let uf = T::from_usize(u).expect("pixel index");
                let vf = T::from_usize(v).expect("pixel index");
                out.push(PixelPoint {
                    u,
                    v,
                    point: k.unproject(uf, vf, d),
                });
            }
        }
    }
    Ok(out)
}
