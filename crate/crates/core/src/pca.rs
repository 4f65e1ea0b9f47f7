//! Principal-component baseline: pose and size from the observed point
//! cloud alone, without NOCS.
//!
//! Frame convention:
//! * object x/y/z ← eigenvectors of the covariance by descending eigenvalue;
//! * eigenvalues equal within a relative 1e-9 form one subspace, whose basis
//!   is chosen to follow the camera x, y, z axes in that order;
//! * x and y are signed so the third moment of the projections is
//!   non-negative (zero skew falls back to a non-negative dot product with
//!   the matching camera axis), and z = x × y;
//! * translation is the centroid, size is `max − min` along each axis.

use nalgebra::{Matrix3, Vector3};

use crate::geometry::{Pose9D, Rotation};
use crate::{Error, Real, Result};

const TIE_TOL: f64 = 1e-9;

pub fn pca_fit<T: Real>(points: &[Vector3<T>]) -> Result<Pose9D<T>> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints {
            required: 3,
            actual: points.len(),
        });
    }
    let inv_n = T::one() / T::from_usize(points.len()).unwrap();
    let centroid = points.iter().fold(Vector3::zeros(), |a, p| a + p) * inv_n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov *= inv_n;

    let eig = cov.symmetric_eigen();
    let mut pairs: Vec<(T, Vector3<T>)> = (0..3)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let largest = pairs[0].0;
    if !(largest > T::zero()) || pairs[2].0 <= largest * T::lit(T::RANK_TOL) {
        return Err(Error::Degenerate(
            "point covariance is rank deficient".into(),
        ));
    }

    let axes = resolve_ties(&pairs);
    let skew = |a: &Vector3<T>| {
        points
            .iter()
            .fold(T::zero(), |acc, p| {
                let s = (p - centroid).dot(a);
                acc + s * s * s
            })
    };
    let camera_axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let mut signed = [axes[0], axes[1]];
    for (i, a) in signed.iter_mut().enumerate() {
        let m3 = skew(a);
        // Third moments this small relative to the spread are numerical noise.
        let scale = pairs[0].0.sqrt().powi(3) * T::from_usize(points.len()).unwrap();
        let flip = if m3.abs() > scale * T::lit(1e-9) {
            m3 < T::zero()
        } else {
            a.dot(&camera_axes[i]) < T::zero()
        };
        if flip {
            *a = -*a;
        }
    }
    let x = signed[0];
    let y = signed[1];
    let z = x.cross(&y).normalize();
    let y = z.cross(&x);
    let rotation = Rotation::new_unchecked(Matrix3::from_columns(&[x, y, z]));

    let mut lo = Vector3::repeat(T::max_value().unwrap());
    let mut hi = Vector3::repeat(T::min_value().unwrap());
    for p in points {
        let q = rotation.matrix().tr_mul(&(p - centroid));
        lo = lo.inf(&q);
        hi = hi.sup(&q);
    }
    Pose9D::new(hi - lo, rotation, centroid)
}

/// Orthonormal axes in descending-eigenvalue order, with degenerate
/// eigenspaces re-based onto the camera axes.
fn resolve_ties<T: Real>(pairs: &[(T, Vector3<T>)]) -> [Vector3<T>; 3] {
    let tol = T::lit(TIE_TOL) * pairs[0].0;
    let mut out: Vec<Vector3<T>> = Vec::with_capacity(3);
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && (pairs[start].0 - pairs[end].0).abs() <= tol {
            end += 1;
        }
        if end - start == 1 {
            out.push(pairs[start].1.normalize());
        } else {
            let basis: Vec<Vector3<T>> = pairs[start..end].iter().map(|p| p.1).collect();
            let mut chosen: Vec<Vector3<T>> = Vec::new();
            for cam in [Vector3::x(), Vector3::y(), Vector3::z()] {
                if chosen.len() == basis.len() {
                    break;
                }
                // Project the camera axis into the eigenspace, minus what is
                // already spanned by the chosen vectors.
                let mut p = basis.iter().fold(Vector3::zeros(), |acc, b| acc + b * b.dot(&cam));
                for c in &chosen {
                    p -= c * c.dot(&p);
                }
                if p.norm() > T::lit(1e-6) {
                    chosen.push(p.normalize());
                }
            }
            out.extend(chosen);
        }
        start = end;
    }
    [out[0], out[1], out[2]]
}
