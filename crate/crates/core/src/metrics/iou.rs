//! 3D box IoU between two 9-DoF poses.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose9D;
use crate::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouMode {
    /// Axis-aligned boxes enclosing each pose's box in the camera frame.
    #[default]
    Aabb,
    /// Exact overlap of the two oriented boxes.
    Oriented,
}

impl std::fmt::Display for IouMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IouMode::Aabb => "aabb",
            IouMode::Oriented => "oriented",
        })
    }
}

impl std::str::FromStr for IouMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aabb" => Ok(Self::Aabb),
            "oriented" => Ok(Self::Oriented),
            other => Err(format!("unknown IoU mode {other:?} (expected aabb or oriented)")),
        }
    }
}

pub fn iou3d<T: Real>(pred: &Pose9D<T>, gt: &Pose9D<T>, mode: IouMode) -> T {
    match mode {
        IouMode::Aabb => iou3d_axis_aligned(pred, gt),
        IouMode::Oriented => iou3d_oriented(pred, gt),
    }
}

fn enclosing_aabb<T: Real>(pose: &Pose9D<T>) -> (Vector3<T>, Vector3<T>) {
    let corners = pose.corners();
    corners[1..]
        .iter()
        .fold((corners[0], corners[0]), |(lo, hi), c| (lo.inf(c), hi.sup(c)))
}

/// IoU of the camera-frame axis-aligned boxes enclosing the 8 corners of
/// each pose's size-scaled box.
pub fn iou3d_axis_aligned<T: Real>(pred: &Pose9D<T>, gt: &Pose9D<T>) -> T {
    let (lo_a, hi_a) = enclosing_aabb(pred);
    let (lo_b, hi_b) = enclosing_aabb(gt);
    let vol = |lo: &Vector3<T>, hi: &Vector3<T>| (hi - lo).iter().fold(T::one(), |a, &e| a * e);
    let lo = lo_a.sup(&lo_b);
    let hi = hi_a.inf(&hi_b);
    let mut inter = T::one();
    for i in 0..3 {
        inter *= (hi[i] - lo[i]).max(T::zero());
    }
    let union = vol(&lo_a, &hi_a) + vol(&lo_b, &hi_b) - inter;
    if union > T::zero() {
        (inter / union).max(T::zero()).min(T::one())
    } else {
        T::zero()
    }
}

/// Half-space `n·x ≤ d`.
type Plane<T> = (Vector3<T>, T);

fn box_planes<T: Real>(pose: &Pose9D<T>) -> [Plane<T>; 6] {
    let r = pose.rotation().matrix();
    let t = pose.translation();
    let half = pose.scale() * T::lit(0.5);
    let mut out = [(Vector3::zeros(), T::zero()); 6];
    for i in 0..3 {
        let n: Vector3<T> = r.column(i).into_owned();
        let c = n.dot(t);
        out[2 * i] = (n, c + half[i]);
        out[2 * i + 1] = (-n, -c + half[i]);
    }
    out
}

/// Exact IoU of the two oriented boxes.
pub fn iou3d_oriented<T: Real>(pred: &Pose9D<T>, gt: &Pose9D<T>) -> T {
    let mut planes = box_planes(pred).to_vec();
    planes.extend(box_planes(gt));
    let length = pred.scale().amax() + gt.scale().amax() + pred.translation().amax().max(gt.translation().amax());
    let inter = convex_volume(&planes, length * T::lit(1e-9));
    let vol = |p: &Pose9D<T>| p.scale().iter().fold(T::one(), |a, &e| a * e);
    let union = vol(pred) + vol(gt) - inter;
    if union > T::zero() {
        (inter / union).max(T::zero()).min(T::one())
    } else {
        T::zero()
    }
}

/// Volume of the bounded convex polytope `{x : n_i·x ≤ d_i}`.
///
/// Vertices are enumerated from plane triples; each distinct supporting
/// plane contributes one face whose vertices are ordered by angle, and the
/// volume is the fan of tetrahedra from the vertex centroid.
fn convex_volume<T: Real>(planes: &[Plane<T>], eps: T) -> T {
    let inside = |p: &Vector3<T>| planes.iter().all(|(n, d)| n.dot(p) <= *d + eps);
    let mut vertices: Vec<Vector3<T>> = Vec::new();
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            for k in j + 1..planes.len() {
                let m = Matrix3::from_rows(&[
                    planes[i].0.transpose(),
                    planes[j].0.transpose(),
                    planes[k].0.transpose(),
                ]);
                let Some(inv) = m.try_inverse() else { continue };
                let p = inv * Vector3::new(planes[i].1, planes[j].1, planes[k].1);
                if p.iter().all(|v| v.is_finite())
                    && inside(&p)
                    && !vertices.iter().any(|q| (q - p).norm() <= eps * T::lit(10.0))
                {
                    vertices.push(p);
                }
            }
        }
    }
    if vertices.len() < 4 {
        return T::zero();
    }
    let centroid = vertices.iter().fold(Vector3::zeros(), |a, v| a + v)
        / T::from_usize(vertices.len()).unwrap();

    let mut volume = T::zero();
    let mut seen: Vec<Plane<T>> = Vec::new();
    for (n, d) in planes {
        if seen
            .iter()
            .any(|(m, e)| (m - n).norm() <= T::lit(1e-9) && (*e - *d).abs() <= eps)
        {
            continue;
        }
        seen.push((*n, *d));
        let face: Vec<Vector3<T>> = vertices
            .iter()
            .filter(|v| (n.dot(v) - *d).abs() <= eps * T::lit(10.0))
            .copied()
            .collect();
        if face.len() < 3 {
            continue;
        }
        let fc = face.iter().fold(Vector3::zeros(), |a, v| a + v) / T::from_usize(face.len()).unwrap();
        let e1 = (face[0] - fc).normalize();
        let e2 = n.cross(&e1);
        let mut ordered: Vec<(T, Vector3<T>)> = face
            .iter()
            .map(|v| {
                let w = v - fc;
                (w.dot(&e2).atan2(w.dot(&e1)), *v)
            })
            .collect();
        ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        for w in 1..ordered.len() - 1 {
            let a = ordered[0].1 - centroid;
            let b = ordered[w].1 - centroid;
            let c = ordered[w + 1].1 - centroid;
            volume += a.dot(&b.cross(&c)).abs() / T::lit(6.0);
        }
    }
    volume
}
