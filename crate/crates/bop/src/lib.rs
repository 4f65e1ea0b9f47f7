//! BOP dataset IO.
//!
//! Layout under a dataset root:
//!
//! ```text
//! camera.json            default intrinsics, image size, depth scale
//! models_info.json       per-object extents and symmetries (mm)
//! categories.json        obj_id → {category, description}
//! 000001/                one directory per scene
//!   scene_gt.json        per image: [{cam_R_m2c, cam_t_m2c (mm), obj_id}]
//!   scene_camera.json    per image: {cam_K, depth_scale}
//!   depth/000000.png     16-bit, value · depth_scale = mm
//!   mask_visib/000000_000000.png   8-bit, 0 or 255
//!   nocs/000000_000000.png         16-bit RGB, value / 65535
//!   rgb/000000.png       optional
//! ```
//!
//! Millimeters never leave this crate: every length handed out is in meters.

// `!(x > 0)` is the NaN-rejecting form.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod image_io;
pub mod json;
mod models;
mod scene;

pub use error::{BopError, Result};
pub use models::{
    camera_to_json, parse_camera, read_camera, read_categories, read_models_info, write_camera, write_categories,
    write_models_info, CategoryInfo, DatasetCamera, ModelInfo,
};
pub use scene::{
    depth_path, list_scenes, mask_path, nocs_path, read_frames, read_scene, rgb_path, scene_dir, write_scene, Frame,
    FrameInstance, GtInstance, SceneRecord, SceneWriter, DEFAULT_DEPTH_SCALE,
};
