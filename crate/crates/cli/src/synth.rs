//! `synth`: BOP datasets rendered from the analytic shapes.
//!
//! Shape `k` (object id `k`) gets scene `k` with one object per image. With
//! `multi_views > 0`, scene [`MULTI_SCENE_ID`] holds every selected shape per
//! image, side by side at one depth and depth-composited.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::Vector3;
use nocs9d_bop::{
    parse_camera, write_camera, write_categories, write_models_info, CategoryInfo, DatasetCamera, Frame,
    FrameInstance, GtInstance, ModelInfo, SceneWriter,
};
use nocs9d_core::synth::{composite, corrupt, render, sample_viewpoint, NoiseSpec, Render, Scene, ShapeSpec};
use nocs9d_core::{DepthMap, Similarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seed::derive;

pub const MULTI_SCENE_ID: u32 = 5;

const BUNDLED_CAMERA: &str = include_str!("../config/camera_ycbv.json");

/// Intrinsics shipped with the tool (YCB-Video).
pub fn bundled_camera() -> DatasetCamera {
    parse_camera(BUNDLED_CAMERA, Path::new("config/camera_ycbv.json")).expect("bundled camera config is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, clap::ValueEnum)]
pub enum ShapeName {
    Box,
    Cylinder,
    Prism,
    LShape,
}

impl ShapeName {
    pub const ALL: [ShapeName; 4] = [ShapeName::Box, ShapeName::Cylinder, ShapeName::Prism, ShapeName::LShape];

    pub fn obj_id(self) -> u64 {
        match self {
            ShapeName::Box => 1,
            ShapeName::Cylinder => 2,
            ShapeName::Prism => 3,
            ShapeName::LShape => 4,
        }
    }

    pub fn category(self) -> &'static str {
        match self {
            ShapeName::Box => "box",
            ShapeName::Cylinder => "cylinder",
            ShapeName::Prism => "prism",
            ShapeName::LShape => "l_shape",
        }
    }

    fn description(self) -> &'static str {
        match self {
            ShapeName::Box => "cuboid 200 x 120 x 80 mm",
            ShapeName::Cylinder => "cylinder r 50 mm, h 180 mm, axis y",
            ShapeName::Prism => "hexagonal prism R 60 mm, h 150 mm, axis y",
            ShapeName::LShape => "L-shaped slab 200 x 120 x 60 mm",
        }
    }

    pub fn spec(self) -> ShapeSpec<f64> {
        match self {
            ShapeName::Box => ShapeSpec::cuboid(Vector3::new(0.2, 0.12, 0.08)),
            ShapeName::Cylinder => ShapeSpec::cylinder(0.05, 0.18),
            ShapeName::Prism => ShapeSpec::prism(6, 0.06, 0.15),
            ShapeName::LShape => ShapeSpec::l_shape(Vector3::new(0.2, 0.12, 0.06)),
        }
        .expect("built-in shape parameters are valid")
    }
}

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub out: PathBuf,
    pub shapes: Vec<ShapeName>,
    /// Images per single-shape scene.
    pub views: usize,
    /// Images in the multi-object scene; 0 skips it.
    pub multi_views: usize,
    pub seed: u64,
    /// `seed` is ignored; each instance gets its own.
    pub noise: NoiseSpec<f64>,
    pub camera: DatasetCamera,
    pub rgb: bool,
}

impl SynthOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            shapes: ShapeName::ALL.to_vec(),
            views: 50,
            multi_views: 0,
            seed: 0,
            noise: NoiseSpec::default(),
            camera: bundled_camera(),
            rgb: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SynthSummary {
    pub images: usize,
    pub instances: usize,
}

fn model_info(shape: ShapeName) -> ModelInfo {
    let s = shape.spec();
    ModelInfo {
        obj_id: shape.obj_id(),
        diameter: s.diagonal(),
        min: -s.extents() / 2.0,
        size: *s.extents(),
        symmetry: s.symmetry(),
    }
}

/// Gray levels falling off with depth over the object pixels.
fn shade(depth: &DepthMap<f64>) -> Vec<u8> {
    let valid = depth.data().iter().copied().filter(|&d| d > 0.0);
    let (lo, hi) = valid.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let span = (hi - lo).max(1e-9);
    depth
        .data()
        .iter()
        .flat_map(|&d| {
            let g = if d > 0.0 { (235.0 - 170.0 * (d - lo) / span).round() as u8 } else { 0 };
            [g, g, g]
        })
        .collect()
}

fn noisy_frame(image_id: u32, scene: Scene<f64>, ids: &[u64], opts: &SynthOptions, scene_id: u32) -> Result<Frame> {
    let mut depth = scene.depth.clone();
    let mut instances = Vec::with_capacity(ids.len());
    for (i, (inst, &obj_id)) in scene.instances.into_iter().zip(ids).enumerate() {
        let noise = NoiseSpec {
            seed: derive(opts.seed, &[u64::from(scene_id), u64::from(image_id), i as u64]),
            ..opts.noise
        };
        let (d, nocs) = corrupt(&scene.depth, &inst.nocs, &noise)?;
        let w = depth.width();
        for (idx, &m) in inst.mask.data().iter().enumerate() {
            if m {
                depth.set(idx % w, idx / w, d.data()[idx]);
            }
        }
        let pose = inst.pose;
        instances.push(FrameInstance {
            gt: GtInstance {
                obj_id,
                rotation: *pose.rotation(),
                translation: *pose.translation(),
            },
            mask: inst.mask,
            nocs: Some(nocs),
        });
    }
    let rgb = opts.rgb.then(|| shade(&depth));
    Ok(Frame {
        image_id,
        k: opts.camera.k,
        depth_scale: opts.camera.depth_scale,
        depth,
        instances,
        rgb,
    })
}

fn single_scene(shape: ShapeName, opts: &SynthOptions) -> Result<usize> {
    let scene_id = shape.obj_id() as u32;
    let spec = shape.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(derive(opts.seed, &[u64::from(scene_id)]));
    let mut writer = SceneWriter::create(&opts.out, scene_id)?;
    for image_id in 0..opts.views as u32 {
        let pose = sample_viewpoint(&spec, &mut rng);
        let r = render(&spec, &pose, &opts.camera.k)
            .with_context(|| format!("rendering {} view {image_id}", shape.category()))?;
        writer.add(&noisy_frame(image_id, Scene::from(r), &[shape.obj_id()], opts, scene_id)?)?;
    }
    writer.finish()?;
    Ok(opts.views)
}

fn multi_scene(opts: &SynthOptions) -> Result<usize> {
    let specs: Vec<ShapeSpec<f64>> = opts.shapes.iter().map(|s| s.spec()).collect();
    let ids: Vec<u64> = opts.shapes.iter().map(|s| s.obj_id()).collect();
    let diag = specs.iter().map(|s| s.diagonal()).fold(0.0, f64::max);
    let k = &opts.camera.k;
    let n = specs.len() as f64;
    let spacing = 1.25 * diag;
    // Row of width n·spacing kept inside 90% of the narrower half-view.
    let half_fov = (k.cx.min(k.width as f64 - k.cx) / k.fx).min(k.cy.min(k.height as f64 - k.cy) / k.fy);
    let z = (3.0 * diag).max(n * spacing / 2.0 / (0.9 * half_fov));
    let mut rng = ChaCha8Rng::seed_from_u64(derive(opts.seed, &[u64::from(MULTI_SCENE_ID)]));
    let mut writer = SceneWriter::create(&opts.out, MULTI_SCENE_ID)?;
    for image_id in 0..opts.multi_views as u32 {
        let mut renders: Vec<Render<f64>> = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let view = sample_viewpoint(spec, &mut rng);
            let jitter: f64 = rng.random_range(-0.1..0.1);
            let x = (i as f64 - (n - 1.0) / 2.0 + jitter) * spacing;
            let place = Similarity::rigid(*view.rotation(), Vector3::new(x, 0.0, z));
            renders.push(render(spec, &place, k).with_context(|| format!("rendering multi view {image_id}"))?);
        }
        let scene = composite(renders)?;
        writer.add(&noisy_frame(image_id, scene, &ids, opts, MULTI_SCENE_ID)?)?;
    }
    writer.finish()?;
    Ok(opts.multi_views * specs.len())
}

pub fn cmd_synth(opts: &SynthOptions) -> Result<SynthSummary> {
    if opts.shapes.is_empty() {
        bail!("no shapes selected");
    }
    let mut shapes = opts.shapes.clone();
    shapes.sort();
    shapes.dedup();
    if shapes.len() != opts.shapes.len() {
        bail!("shape list has duplicates");
    }
    if opts.views == 0 && opts.multi_views == 0 {
        bail!("nothing to render: views and multi-views are both 0");
    }
    opts.noise.validate()?;
    fs::create_dir_all(&opts.out).with_context(|| format!("creating {}", opts.out.display()))?;
    write_camera(&opts.out.join("camera.json"), &opts.camera)?;
    let models: BTreeMap<u64, ModelInfo> = shapes.iter().map(|&s| (s.obj_id(), model_info(s))).collect();
    write_models_info(&opts.out.join("models_info.json"), &models)?;
    let cats: BTreeMap<u64, CategoryInfo> = shapes
        .iter()
        .map(|&s| {
            let info = CategoryInfo {
                category: s.category().into(),
                description: s.description().into(),
            };
            (s.obj_id(), info)
        })
        .collect();
    write_categories(&opts.out.join("categories.json"), &cats)?;

    let mut summary = SynthSummary::default();
    if opts.views > 0 {
        for &s in &opts.shapes {
            let n = single_scene(s, opts)?;
            summary.images += n;
            summary.instances += n;
            log::info!("scene {:06}: {n} views of {}", s.obj_id(), s.category());
        }
    }
    if opts.multi_views > 0 {
        summary.instances += multi_scene(opts)?;
        summary.images += opts.multi_views;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_camera_parses() {
        let c = bundled_camera();
        assert_eq!(c.k.dims(), (640, 480));
        assert_eq!(c.depth_scale, 0.1);
    }

    #[test]
    fn shade_background_black() {
        let d = DepthMap::new(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(shade(&d), vec![0, 0, 0, 235, 235, 235, 65, 65, 65]);
    }
}
