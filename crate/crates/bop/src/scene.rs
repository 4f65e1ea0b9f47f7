//! Scene directories: `scene_gt.json`, `scene_camera.json`, `depth/`,
//! `mask_visib/`, optional `rgb/`, and the `nocs/` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use nocs9d_core::{CameraIntrinsics, DepthMap, Mask, NocsMap, Rotation};
use serde_json::{Map, Value};

use crate::error::{io_err, parse_err, BopError, Result};
use crate::image_io;
use crate::json::{self, as_f64, as_u64, f64_array, field, float, floats, invalid, m_to_mm, mm_to_m};

pub const DEFAULT_DEPTH_SCALE: f64 = 0.1;

pub fn scene_dir(root: &Path, scene_id: u32) -> PathBuf {
    root.join(format!("{scene_id:06}"))
}

pub fn depth_path(scene: &Path, image_id: u32) -> PathBuf {
    scene.join("depth").join(format!("{image_id:06}.png"))
}

pub fn rgb_path(scene: &Path, image_id: u32) -> PathBuf {
    scene.join("rgb").join(format!("{image_id:06}.png"))
}

pub fn mask_path(scene: &Path, image_id: u32, inst: usize) -> PathBuf {
    scene.join("mask_visib").join(format!("{image_id:06}_{inst:06}.png"))
}

pub fn nocs_path(scene: &Path, image_id: u32, inst: usize) -> PathBuf {
    scene.join("nocs").join(format!("{image_id:06}_{inst:06}.png"))
}

/// Ground-truth placement of one object, model-to-camera, meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GtInstance {
    pub obj_id: u64,
    pub rotation: Rotation<f64>,
    pub translation: Vector3<f64>,
}

/// Metadata and file locations of one image; pixels load on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneRecord {
    pub scene_id: u32,
    pub image_id: u32,
    pub k: CameraIntrinsics<f64>,
    pub depth_scale: f64,
    pub depth_path: PathBuf,
    pub rgb_path: Option<PathBuf>,
    pub instances: Vec<GtInstance>,
    pub mask_paths: Vec<PathBuf>,
    /// Present where the NOCS sidecar file exists.
    pub nocs_paths: Vec<Option<PathBuf>>,
}

/// One object of an in-memory frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameInstance {
    pub gt: GtInstance,
    pub mask: Mask,
    pub nocs: Option<NocsMap<f64>>,
}

/// One image with all its pixels loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub image_id: u32,
    pub k: CameraIntrinsics<f64>,
    pub depth_scale: f64,
    pub depth: DepthMap<f64>,
    pub instances: Vec<FrameInstance>,
    /// 8-bit RGB, row-major.
    pub rgb: Option<Vec<u8>>,
}

impl SceneRecord {
    pub fn load_depth(&self) -> Result<DepthMap<f64>> {
        image_io::read_depth(&self.depth_path, self.depth_scale)
    }

    pub fn load_mask(&self, inst: usize) -> Result<Mask> {
        image_io::read_mask(&self.mask_paths[inst])
    }

    /// The instance's NOCS sidecar; a missing file is an I/O error naming it.
    pub fn load_nocs(&self, inst: usize) -> Result<NocsMap<f64>> {
        match &self.nocs_paths[inst] {
            Some(p) => image_io::read_nocs(p),
            None => {
                let scene = self.depth_path.parent().and_then(Path::parent).unwrap_or(Path::new("."));
                let p = nocs_path(scene, self.image_id, inst);
                Err(BopError::Io {
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "NOCS sidecar missing"),
                    path: p,
                })
            }
        }
    }

    /// Loads every image of the record.
    pub fn load(&self) -> Result<Frame> {
        let depth = self.load_depth()?;
        let mut instances = Vec::with_capacity(self.instances.len());
        for (i, gt) in self.instances.iter().enumerate() {
            let mask = self.load_mask(i)?;
            let nocs = match self.nocs_paths[i] {
                Some(_) => Some(self.load_nocs(i)?),
                None => None,
            };
            instances.push(FrameInstance { gt: *gt, mask, nocs });
        }
        let rgb = match &self.rgb_path {
            Some(p) => Some(image_io::read_rgb(p)?.2),
            None => None,
        };
        let frame = Frame {
            image_id: self.image_id,
            k: self.k,
            depth_scale: self.depth_scale,
            depth,
            instances,
            rgb,
        };
        frame.check_dims()?;
        Ok(frame)
    }
}

impl Frame {
    fn check_dims(&self) -> Result<()> {
        let dims = self.k.dims();
        let bad = |what: String, got: (usize, usize)| {
            BopError::Integrity(format!(
                "image {}: {what} is {}x{}, camera is {}x{}",
                self.image_id, got.0, got.1, dims.0, dims.1
            ))
        };
        if self.depth.dims() != dims {
            return Err(bad("depth".into(), self.depth.dims()));
        }
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.mask.dims() != dims {
                return Err(bad(format!("mask of instance {i}"), inst.mask.dims()));
            }
            if let Some(n) = &inst.nocs {
                if n.dims() != dims {
                    return Err(bad(format!("NOCS map of instance {i}"), n.dims()));
                }
            }
        }
        if let Some(rgb) = &self.rgb {
            if rgb.len() != dims.0 * dims.1 * 3 {
                return Err(BopError::Integrity(format!("image {}: RGB buffer size mismatch", self.image_id)));
            }
        }
        Ok(())
    }
}

fn parse_gt(v: &Value, file: &Path, key: &str) -> Result<GtInstance> {
    let r = f64_array(field(v, "cam_R_m2c", file, key)?, 9, file, &format!("{key}.cam_R_m2c"))?;
    let t = f64_array(field(v, "cam_t_m2c", file, key)?, 3, file, &format!("{key}.cam_t_m2c"))?;
    let obj_id = as_u64(field(v, "obj_id", file, key)?, file, &format!("{key}.obj_id"))?;
    let rotation = Rotation::new(Matrix3::from_row_slice(&r)).map_err(|e| invalid(file, format!("{key}.cam_R_m2c"), e))?;
    let translation = Vector3::new(mm_to_m(t[0]), mm_to_m(t[1]), mm_to_m(t[2]));
    if translation.iter().any(|x| !x.is_finite()) {
        return Err(parse_err(file, format!("{key}.cam_t_m2c"), "translation is not finite"));
    }
    Ok(GtInstance { obj_id, rotation, translation })
}

/// Reads every image of a scene. Image ids in `scene_gt.json` and
/// `scene_camera.json` must agree and every instance needs its mask file.
/// Resolution comes from each depth PNG header.
pub fn read_scene(root: &Path, scene_id: u32) -> Result<Vec<SceneRecord>> {
    let dir = scene_dir(root, scene_id);
    let gt_file = dir.join("scene_gt.json");
    let cam_file = dir.join("scene_camera.json");
    let gt_doc = json::read_file(&gt_file)?;
    let cam_doc = json::read_file(&cam_file)?;
    let gts = json::id_entries(&gt_doc, &gt_file)?;
    let cams = json::id_entries(&cam_doc, &cam_file)?;
    let gt_ids: Vec<u64> = gts.iter().map(|e| e.0).collect();
    let cam_ids: Vec<u64> = cams.iter().map(|e| e.0).collect();
    if gt_ids != cam_ids {
        let only_gt: Vec<_> = gt_ids.iter().filter(|i| !cam_ids.contains(i)).collect();
        let only_cam: Vec<_> = cam_ids.iter().filter(|i| !gt_ids.contains(i)).collect();
        return Err(BopError::Integrity(format!(
            "scene {scene_id}: image ids differ between scene_gt.json (only {only_gt:?}) and scene_camera.json (only {only_cam:?})"
        )));
    }

    let mut out = Vec::with_capacity(gts.len());
    for ((id, gt), (_, cam)) in gts.into_iter().zip(cams) {
        let image_id = u32::try_from(id).map_err(|_| parse_err(&gt_file, id.to_string(), "image id out of range"))?;
        let key = id.to_string();
        let kvals = f64_array(field(cam, "cam_K", &cam_file, &key)?, 9, &cam_file, &format!("{key}.cam_K"))?;
        let depth_scale = as_f64(field(cam, "depth_scale", &cam_file, &key)?, &cam_file, &format!("{key}.depth_scale"))?;
        if !(depth_scale > 0.0 && depth_scale.is_finite()) {
            return Err(parse_err(&cam_file, format!("{key}.depth_scale"), "must be positive"));
        }
        let depth_path = depth_path(&dir, image_id);
        let (w, h) = image_io::png_dims(&depth_path)?;
        let k = CameraIntrinsics::from_matrix(&Matrix3::from_row_slice(&kvals), w, h)
            .map_err(|e| invalid(&cam_file, format!("{key}.cam_K"), e))?;

        let list = gt
            .as_array()
            .ok_or_else(|| parse_err(&gt_file, key.as_str(), "expected a list of instances"))?;
        let mut instances = Vec::with_capacity(list.len());
        let mut mask_paths = Vec::with_capacity(list.len());
        let mut nocs_paths = Vec::with_capacity(list.len());
        for (i, v) in list.iter().enumerate() {
            instances.push(parse_gt(v, &gt_file, &format!("{key}[{i}]"))?);
            let mp = mask_path(&dir, image_id, i);
            if !mp.is_file() {
                return Err(BopError::Integrity(format!(
                    "scene {scene_id} image {image_id} instance {i}: mask file {} is missing",
                    mp.display()
                )));
            }
            mask_paths.push(mp);
            let np = nocs_path(&dir, image_id, i);
            nocs_paths.push(np.is_file().then_some(np));
        }
        let rp = rgb_path(&dir, image_id);
        out.push(SceneRecord {
            scene_id,
            image_id,
            k,
            depth_scale,
            depth_path,
            rgb_path: rp.is_file().then_some(rp),
            instances,
            mask_paths,
            nocs_paths,
        });
    }
    Ok(out)
}

/// Reads a scene and loads all of its pixels.
pub fn read_frames(root: &Path, scene_id: u32) -> Result<Vec<Frame>> {
    read_scene(root, scene_id)?.iter().map(SceneRecord::load).collect()
}

/// Scene ids present under `root` (six-digit directory names), ascending.
pub fn list_scenes(root: &Path) -> Result<Vec<u32>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if name.len() == 6 && entry.path().join("scene_gt.json").is_file() {
            if let Ok(id) = name.parse() {
                ids.push(id);
            }
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

fn gt_value(g: &GtInstance) -> Value {
    let mut o = Map::new();
    o.insert("cam_R_m2c".into(), floats(g.rotation.matrix().transpose().iter().copied()));
    o.insert("cam_t_m2c".into(), floats(g.translation.iter().map(|v| m_to_mm(*v))));
    o.insert("obj_id".into(), Value::from(g.obj_id));
    Value::Object(o)
}

fn camera_value(k: &CameraIntrinsics<f64>, depth_scale: f64) -> Value {
    let mut o = Map::new();
    o.insert("cam_K".into(), floats(k.matrix().transpose().iter().copied()));
    o.insert("depth_scale".into(), float(depth_scale));
    Value::Object(o)
}

/// Streams frames into a scene directory; the JSON files are written by
/// [`SceneWriter::finish`].
pub struct SceneWriter {
    dir: PathBuf,
    gt: Vec<(u64, Value)>,
    cam: Vec<(u64, Value)>,
}

impl SceneWriter {
    pub fn create(root: &Path, scene_id: u32) -> Result<Self> {
        let dir = scene_dir(root, scene_id);
        for sub in ["depth", "mask_visib"] {
            fs::create_dir_all(dir.join(sub)).map_err(io_err(dir.join(sub)))?;
        }
        Ok(Self {
            dir,
            gt: Vec::new(),
            cam: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn add(&mut self, frame: &Frame) -> Result<()> {
        frame.check_dims()?;
        let id = u64::from(frame.image_id);
        if self.gt.iter().any(|e| e.0 == id) {
            return Err(BopError::Integrity(format!("image id {id} written twice")));
        }
        image_io::write_depth(&depth_path(&self.dir, frame.image_id), &frame.depth, frame.depth_scale)?;
        for (i, inst) in frame.instances.iter().enumerate() {
            image_io::write_mask(&mask_path(&self.dir, frame.image_id, i), &inst.mask)?;
            if let Some(n) = &inst.nocs {
                let p = nocs_path(&self.dir, frame.image_id, i);
                fs::create_dir_all(p.parent().unwrap()).map_err(io_err(&p))?;
                image_io::write_nocs(&p, n)?;
            }
        }
        if let Some(rgb) = &frame.rgb {
            let p = rgb_path(&self.dir, frame.image_id);
            fs::create_dir_all(p.parent().unwrap()).map_err(io_err(&p))?;
            let (w, h) = frame.k.dims();
            image_io::write_rgb(&p, w, h, rgb)?;
        }
        self.gt.push((id, Value::Array(frame.instances.iter().map(|i| gt_value(&i.gt)).collect())));
        self.cam.push((id, camera_value(&frame.k, frame.depth_scale)));
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        json::write_file(&self.dir.join("scene_gt.json"), &json::to_canonical(&self.gt))?;
        json::write_file(&self.dir.join("scene_camera.json"), &json::to_canonical(&self.cam))
    }
}

/// Writes a whole scene; meters become millimeters, depth is quantized with
/// each frame's `depth_scale`.
pub fn write_scene(root: &Path, scene_id: u32, frames: &[Frame]) -> Result<()> {
    let mut w = SceneWriter::create(root, scene_id)?;
    for f in frames {
        w.add(f)?;
    }
    w.finish()
}
