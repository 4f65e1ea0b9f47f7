//! `models_info.json`, the dataset `camera.json` and the category sidecar.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{Matrix4, Vector3};
use nocs9d_core::{CameraIntrinsics, ContinuousSymmetry, Similarity, SymmetryAnnotation};
use serde_json::{Map, Value};

use crate::error::{parse_err, Result};
use crate::json::{self, as_f64, f64_array, field, float, floats, invalid, m_to_mm, mm_to_m};

/// One object model, lengths in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelInfo {
    pub obj_id: u64,
    pub diameter: f64,
    /// Minimum corner of the model's bounding box.
    pub min: Vector3<f64>,
    pub size: Vector3<f64>,
    pub symmetry: SymmetryAnnotation<f64>,
}

fn vec3(v: &[f64]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn parse_model(id: u64, v: &Value, file: &Path) -> Result<ModelInfo> {
    let ctx = id.to_string();
    let num = |k: &str| -> Result<f64> { as_f64(field(v, k, file, &ctx)?, file, &format!("{ctx}.{k}")).map(mm_to_m) };
    let min = Vector3::new(num("min_x")?, num("min_y")?, num("min_z")?);
    let size = Vector3::new(num("size_x")?, num("size_y")?, num("size_z")?);
    if size.iter().any(|s| !(*s > 0.0)) {
        return Err(parse_err(file, format!("{ctx}.size"), "extents must be positive"));
    }
    let mut discrete = Vec::new();
    if let Some(list) = v.get("symmetries_discrete") {
        let list = list
            .as_array()
            .ok_or_else(|| parse_err(file, format!("{ctx}.symmetries_discrete"), "expected a list"))?;
        for (i, m) in list.iter().enumerate() {
            let key = format!("{ctx}.symmetries_discrete[{i}]");
            let m = f64_array(m, 16, file, &key)?;
            let mut h = Matrix4::from_row_slice(&m);
            for r in 0..3 {
                h[(r, 3)] = mm_to_m(h[(r, 3)]);
            }
            discrete.push(Similarity::from_rigid_matrix(&h).map_err(|e| invalid(file, key, e))?);
        }
    }
    let mut continuous = Vec::new();
    if let Some(list) = v.get("symmetries_continuous") {
        let list = list
            .as_array()
            .ok_or_else(|| parse_err(file, format!("{ctx}.symmetries_continuous"), "expected a list"))?;
        for (i, s) in list.iter().enumerate() {
            let key = format!("{ctx}.symmetries_continuous[{i}]");
            let mut axis = vec3(&f64_array(field(s, "axis", file, &key)?, 3, file, &key)?);
            let offset = vec3(&f64_array(field(s, "offset", file, &key)?, 3, file, &key)?).map(mm_to_m);
            let n = axis.norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err(parse_err(file, format!("{key}.axis"), "axis has zero length"));
            }
            if (n - 1.0).abs() > 1e-6 {
                log::warn!("{}: {key}.axis has norm {n}; normalized", file.display());
                axis /= n;
            }
            continuous.push(ContinuousSymmetry::new(axis, offset).map_err(|e| invalid(file, key.clone(), e))?);
        }
    }
    let symmetry = SymmetryAnnotation::new(discrete, continuous).map_err(|e| invalid(file, ctx.clone(), e))?;
    Ok(ModelInfo {
        obj_id: id,
        diameter: num("diameter")?,
        min,
        size,
        symmetry,
    })
}

pub fn read_models_info(path: &Path) -> Result<BTreeMap<u64, ModelInfo>> {
    let doc = json::read_file(path)?;
    json::id_entries(&doc, path)?
        .into_iter()
        .map(|(id, v)| Ok((id, parse_model(id, v, path)?)))
        .collect()
}

fn model_value(m: &ModelInfo) -> Value {
    let mut o = Map::new();
    o.insert("diameter".into(), float(m_to_mm(m.diameter)));
    for (i, axis) in ["x", "y", "z"].iter().enumerate() {
        o.insert(format!("min_{axis}"), float(m_to_mm(m.min[i])));
        o.insert(format!("size_{axis}"), float(m_to_mm(m.size[i])));
    }
    if !m.symmetry.discrete().is_empty() {
        let list = m
            .symmetry
            .discrete()
            .iter()
            .map(|g| {
                let mut h = g.to_homogeneous();
                for r in 0..3 {
                    h[(r, 3)] = m_to_mm(h[(r, 3)]);
                }
                floats(h.transpose().iter().copied())
            })
            .collect();
        o.insert("symmetries_discrete".into(), Value::Array(list));
    }
    if !m.symmetry.continuous().is_empty() {
        let list = m
            .symmetry
            .continuous()
            .iter()
            .map(|c| {
                let mut s = Map::new();
                s.insert("axis".into(), floats(c.axis().iter().copied()));
                s.insert("offset".into(), floats(c.offset().iter().map(|v| m_to_mm(*v))));
                Value::Object(s)
            })
            .collect();
        o.insert("symmetries_continuous".into(), Value::Array(list));
    }
    Value::Object(o)
}

pub fn write_models_info(path: &Path, models: &BTreeMap<u64, ModelInfo>) -> Result<()> {
    let entries: Vec<(u64, Value)> = models.iter().map(|(id, m)| (*id, model_value(m))).collect();
    json::write_file(path, &json::to_canonical(&entries))
}

/// Report label for an object id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryInfo {
    pub category: String,
    pub description: String,
}

/// Reads the `obj_id → {category, description}` sidecar.
pub fn read_categories(path: &Path) -> Result<BTreeMap<u64, CategoryInfo>> {
    let doc = json::read_file(path)?;
    json::id_entries(&doc, path)?
        .into_iter()
        .map(|(id, v)| {
            let ctx = id.to_string();
            let text = |k: &str| -> Result<String> {
                field(v, k, path, &ctx)?
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| parse_err(path, format!("{ctx}.{k}"), "expected a string"))
            };
            let description = match v.get("description") {
                Some(_) => text("description")?,
                None => String::new(),
            };
            Ok((id, CategoryInfo { category: text("category")?, description }))
        })
        .collect()
}

pub fn write_categories(path: &Path, cats: &BTreeMap<u64, CategoryInfo>) -> Result<()> {
    let entries: Vec<(u64, Value)> = cats
        .iter()
        .map(|(id, c)| {
            let mut o = Map::new();
            o.insert("category".into(), Value::String(c.category.clone()));
            o.insert("description".into(), Value::String(c.description.clone()));
            (*id, Value::Object(o))
        })
        .collect();
    json::write_file(path, &json::to_canonical(&entries))
}

/// Dataset-wide camera: intrinsics, image size and depth scale (mm per unit).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetCamera {
    pub k: CameraIntrinsics<f64>,
    pub depth_scale: f64,
}

pub fn parse_camera(text: &str, file: &Path) -> Result<DatasetCamera> {
    let doc: Value = serde_json::from_str(text).map_err(|e| parse_err(file, "<document>", e.to_string()))?;
    let num = |k: &str| as_f64(field(&doc, k, file, "camera")?, file, k);
    let dim = |k: &str| json::as_u64(field(&doc, k, file, "camera")?, file, k).map(|v| v as usize);
    let k = CameraIntrinsics::new(num("fx")?, num("fy")?, num("cx")?, num("cy")?, dim("width")?, dim("height")?)
        .map_err(|e| invalid(file, "camera", e))?;
    let depth_scale = num("depth_scale")?;
    if !(depth_scale > 0.0 && depth_scale.is_finite()) {
        return Err(parse_err(file, "depth_scale", "must be positive"));
    }
    Ok(DatasetCamera { k, depth_scale })
}

pub fn read_camera(path: &Path) -> Result<DatasetCamera> {
    let text = std::fs::read_to_string(path).map_err(crate::error::io_err(path))?;
    parse_camera(&text, path)
}

pub fn camera_to_json(cam: &DatasetCamera) -> String {
    let mut o = Map::new();
    o.insert("cx".into(), float(cam.k.cx));
    o.insert("cy".into(), float(cam.k.cy));
    o.insert("depth_scale".into(), float(cam.depth_scale));
    o.insert("fx".into(), float(cam.k.fx));
    o.insert("fy".into(), float(cam.k.fy));
    o.insert("height".into(), Value::from(cam.k.height as u64));
    o.insert("width".into(), Value::from(cam.k.width as u64));
    json::object_to_canonical(&o)
}

pub fn write_camera(path: &Path, cam: &DatasetCamera) -> Result<()> {
    json::write_file(path, &camera_to_json(cam))
}
