//! Synthetic scenes: parametric shapes rendered by analytic ray casting from
//! viewpoints on a spherical shell, with optional depth/NOCS corruption.

mod noise;
mod render;
mod shape;
mod view;

pub use noise::{corrupt, NoiseSpec};
pub use render::{composite, render, Instance, Render, Scene};
pub use shape::{ShapeKind, ShapeSpec};
pub use view::{look_at, sample_viewpoint, shell_radius_range};
