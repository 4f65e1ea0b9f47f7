use nalgebra::Vector3;
use rayon::prelude::*;

use super::ShapeSpec;
use crate::camera::CameraIntrinsics;
use crate::geometry::{Pose9D, Similarity};
use crate::image::{DepthMap, Grid, Mask};
use crate::nocs::NocsMap;
use crate::{Error, Real, Result};

/// One shape rendered alone.
#[derive(Clone, Debug, PartialEq)]
pub struct Render<T: Real> {
    pub depth: DepthMap<T>,
    pub mask: Mask,
    pub nocs: NocsMap<T>,
    pub pose: Pose9D<T>,
}

/// One object of a composited scene; `mask` and `nocs` cover only its
/// visible pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<T: Real> {
    pub mask: Mask,
    pub nocs: NocsMap<T>,
    pub pose: Pose9D<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene<T: Real> {
    pub depth: DepthMap<T>,
    pub instances: Vec<Instance<T>>,
}

impl<T: Real> From<Render<T>> for Scene<T> {
    fn from(r: Render<T>) -> Self {
        Scene {
            depth: r.depth,
            instances: vec![Instance {
                mask: r.mask,
                nocs: r.nocs,
                pose: r.pose,
            }],
        }
    }
}

/// Pixel window that can contain the shape: the projected bounding box of
/// its corners, or the whole image if a corner is behind the camera.
fn pixel_window<T: Real>(pose: &Pose9D<T>, k: &CameraIntrinsics<T>) -> (usize, usize, usize, usize) {
    let full = (0, k.width, 0, k.height);
    let (mut u0, mut u1, mut v0, mut v1) = (T::max_value().unwrap(), T::min_value().unwrap(), T::max_value().unwrap(), T::min_value().unwrap());
    for c in pose.corners() {
        let Some((u, v)) = k.project(&c) else { return full };
        u0 = u0.min(u);
        u1 = u1.max(u);
        v0 = v0.min(v);
        v1 = v1.max(v);
    }
    let clip = |x: T, n: usize| -> usize {
        let x = x.as_f64();
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(n)
        }
    };
    (
        clip(u0.floor() - T::one(), k.width),
        clip(u1.ceil() + T::lit(2.0), k.width),
        clip(v0.floor() - T::one(), k.height),
        clip(v1.ceil() + T::lit(2.0), k.height),
    )
}

/// Ray casts `shape` placed by the rigid `object_to_camera` transform, one
/// ray per integer pixel coordinate.
///
/// Depth is the camera-frame `z` of the first hit; NOCS is the hit point in
/// the canonical frame divided by [`ShapeSpec::max_extent`] plus 0.5. The
/// recorded pose has `scale = extents`.
pub fn render<T: Real>(shape: &ShapeSpec<T>, object_to_camera: &Similarity<T>, k: &CameraIntrinsics<T>) -> Result<Render<T>> {
    let pose = Pose9D::new(*shape.extents(), *object_to_camera.rotation(), *object_to_camera.translation())?;
    let rt = object_to_camera.rotation().matrix().transpose();
    let origin = -(rt * object_to_camera.translation());
    let inv_norm = T::one() / shape.max_extent();
    let half = T::lit(0.5);
    let (u0, u1, v0, v1) = pixel_window(&pose, k);

    let rows: Vec<Vec<Option<(T, Vector3<T>)>>> = (v0..v1)
        .into_par_iter()
        .map(|v| {
            (u0..u1)
                .map(|u| {
                    let ray = k.ray(T::from_usize(u).unwrap(), T::from_usize(v).unwrap());
                    let t = shape.intersect(&origin, &(rt * ray))?;
                    let p = origin + rt * ray * t;
                    let n = p.map(|c| (c * inv_norm + half).clamp(T::zero(), T::one()));
                    Some((t, n))
                })
                .collect()
        })
        .collect();

    let (w, h) = k.dims();
    let mut depth = DepthMap::zeros(w, h);
    let mut mask = Grid::filled(w, h, false);
    let mut values = Grid::filled(w, h, Vector3::zeros());
    let mut any = false;
    for (dv, row) in rows.into_iter().enumerate() {
        for (du, px) in row.into_iter().enumerate() {
            if let Some((z, n)) = px {
                let (u, v) = (u0 + du, v0 + dv);
                depth.set(u, v, z);
                mask.set(u, v, true);
                values.set(u, v, n);
                any = true;
            }
        }
    }
    if !any {
        return Err(Error::EmptyRender);
    }
    let nocs = NocsMap::new(values, mask.clone())?;
    Ok(Render { depth, mask, nocs, pose })
}

/// Depth-composites single-shape renders: each pixel belongs to the nearest
/// object, ties to the lower index. Fully hidden objects keep an empty mask.
pub fn composite<T: Real>(renders: Vec<Render<T>>) -> Result<Scene<T>> {
    let first = renders.first().ok_or(Error::EmptyInput)?;
    let (w, h) = first.depth.dims();
    for r in &renders {
        crate::image::ensure_same_dims("render", (w, h), r.depth.dims())?;
    }
    let mut depth = DepthMap::zeros(w, h);
    let mut owner = Grid::filled(w, h, usize::MAX);
    for v in 0..h {
        for u in 0..w {
            for (i, r) in renders.iter().enumerate() {
                let d = r.depth.get(u, v);
                if d > T::zero() && (depth.get(u, v) == T::zero() || d < depth.get(u, v)) {
                    depth.set(u, v, d);
                    owner.set(u, v, i);
                }
            }
        }
    }
    let instances = renders
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let mut mask = r.mask;
            let mut nocs = r.nocs;
            for v in 0..h {
                for u in 0..w {
                    if *mask.get(u, v) && *owner.get(u, v) != i {
                        mask.set(u, v, false);
                        nocs.clear(u, v);
                    }
                }
            }
            Instance { mask, nocs, pose: r.pose }
        })
        .collect();
    Ok(Scene { depth, instances })
}
