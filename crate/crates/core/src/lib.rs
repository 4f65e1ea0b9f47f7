//! Category-level 9-DoF object pose toolkit.
//!
//! Recover size, rotation and translation from a NOCS map plus depth
//! ([`solver`]), score NOCS maps with symmetry-aware smooth-L1 ([`nocs`]),
//! evaluate poses with absolute and relative precision and 3D IoU
//! ([`metrics`]), and generate synthetic scenes to exercise all of it
//! ([`synth`]).
//!
//! Everything is generic over the scalar via [`Real`] (`f32`, `f64`); the
//! aliases below fix it to `f64`. Units are meters throughout.
//!
//! ```
//! use nocs9d_core::{synth, solver, CameraIntrinsics, RansacConfig};
//! use nalgebra::Vector3;
//!
//! let k = CameraIntrinsics::new(500.0, 500.0, 160.0, 120.0, 320, 240).unwrap();
//! let shape = synth::ShapeSpec::cuboid(Vector3::new(0.2, 0.1, 0.15)).unwrap();
//! let view = synth::look_at(&Vector3::new(0.3, 0.4, -0.8), 0.2);
//! let r = synth::render(&shape, &view, &k).unwrap();
//! let fit = solver::fit_nocs(&r.nocs, &r.depth, &k, &r.mask, &RansacConfig::default()).unwrap();
//! assert!((fit.pose.translation() - r.pose.translation()).norm() < 1e-6);
//! ```

// `!(x > 0)` is the NaN-rejecting form.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
mod error;
pub mod geometry;
pub mod image;
pub mod metrics;
pub mod nocs;
pub mod pca;
mod scalar;
pub mod solver;
pub mod symmetry;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub use camera::backproject;
pub use geometry::{rotation_geodesic_deg, Pose9D, Rotation, Similarity};
pub use image::{DepthMap, Grid, Mask};
pub use metrics::{abs_precision, evaluate, iou3d_axis_aligned, rel_precision, EvalConfig, IouMode, MetricReport, PredictionRecord};
pub use nocs::{build_correspondences, smooth_l1_nocs_loss, symmetry_aware_nocs_loss, Correspondences, NocsMap};
pub use pca::pca_fit;
pub use solver::{pose_from_fit, ransac_fit, umeyama, FitResult, RansacConfig};
pub use symmetry::{augment_gt_poses, sym_rotation_error_deg, ContinuousSymmetry, SymmetryAnnotation, SymmetryKind};

pub use camera::CameraIntrinsics;

pub type Pose = Pose9D<f64>;
pub type Pose32 = Pose9D<f32>;
pub type Transform = Similarity<f64>;
pub type Transform32 = Similarity<f32>;
pub type Rotation64 = Rotation<f64>;
pub type Intrinsics = camera::CameraIntrinsics<f64>;
pub type Nocs = NocsMap<f64>;
pub type Depth = DepthMap<f64>;
pub type Symmetry = SymmetryAnnotation<f64>;
pub type Record = PredictionRecord<f64>;
