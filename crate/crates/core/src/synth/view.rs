use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};

use super::ShapeSpec;
use crate::geometry::{Rotation, Similarity};
use crate::Real;

/// Camera distance range `[3d, 5d]`, `d` the bounding-box diagonal.
pub fn shell_radius_range<T: Real>(shape: &ShapeSpec<T>) -> (T, T) {
    let d = shape.diagonal();
    (d * T::lit(3.0), d * T::lit(5.0))
}

/// Object-to-camera transform for a camera at `position` (object frame)
/// looking at the object origin, rolled by `roll` radians about its optical axis.
pub fn look_at<T: Real>(position: &Vector3<T>, roll: T) -> Similarity<T> {
    let dist = position.norm();
    let z = -position / dist;
    let helper = if z.y.abs() < T::lit(0.9) { Vector3::y() } else { Vector3::x() };
    let x0 = helper.cross(&z).normalize();
    let y0 = z.cross(&x0);
    let (s, c) = roll.sin_cos();
    let x = x0 * c + y0 * s;
    let y = z.cross(&x);
    let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
    Similarity::rigid(Rotation::new_unchecked(r), Vector3::new(T::zero(), T::zero(), dist))
}

/// Camera on the shell around the object: direction uniform on the sphere,
/// radius uniform in [`shell_radius_range`], uniform roll. Returns the
/// object-to-camera transform; the object centre lies on the optical axis.
pub fn sample_viewpoint<T: Real, R: Rng + ?Sized>(shape: &ShapeSpec<T>, rng: &mut R) -> Similarity<T> {
    let (lo, hi) = shell_radius_range(shape);
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    let r = lo + (hi - lo) * T::lit(rng.random::<f64>());
    let roll = T::two_pi() * T::lit(rng.random::<f64>());
    let dir = Vector3::new(T::lit(x), T::lit(y), T::lit(z));
    look_at(&(dir * r), roll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraIntrinsics;
    use crate::geometry::orthonormality_error;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape() -> ShapeSpec<f64> {
        ShapeSpec::cuboid(Vector3::new(0.2, 0.1, 0.3)).unwrap()
    }

    #[test]
    fn radii_inside_shell() {
        let s = shape();
        let (lo, hi) = shell_radius_range(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let v = sample_viewpoint(&s, &mut rng);
            let r = v.translation().norm();
            assert!(r >= lo && r <= hi, "{r}");
            assert!(orthonormality_error(v.rotation().matrix()) < 1e-12);
            assert_relative_eq!(v.rotation().matrix().determinant(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn centre_projects_to_principal_point() {
        let s = shape();
        let k = CameraIntrinsics::new(1066.778, 1067.487, 312.9869, 241.3109, 640, 480).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let v = sample_viewpoint(&s, &mut rng);
            let (u, w) = k.project(&v.apply(&Vector3::zeros())).unwrap();
            assert!((u - k.cx).abs() < 1.0 && (w - k.cy).abs() < 1.0);
        }
    }

    #[test]
    fn camera_sits_at_position() {
        let p = Vector3::new(0.3, -1.0, 2.0);
        for roll in [0.0, 1.0, 4.0] {
            let t = look_at(&p, roll);
            // The camera centre maps to the camera origin.
            assert!(t.apply(&p).norm() < 1e-12);
        }
        let up = look_at(&Vector3::new(0.0, 2.0, 0.0), 0.3);
        assert!(up.apply(&Vector3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
    }

    /// Kolmogorov–Smirnov test of the radius against the uniform law on [3d, 5d].
    #[test]
    fn radius_distribution_is_uniform() {
        let s = shape();
        let (lo, hi) = shell_radius_range(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut u: Vec<f64> = (0..n)
            .map(|_| (sample_viewpoint(&s, &mut rng).translation().norm() - lo) / (hi - lo))
            .collect();
        u.sort_by(f64::total_cmp);
        let d = u
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - x).abs()))
            .fold(0.0, f64::max);
        // 1% critical value 1.63/√n.
        assert!(d < 1.63 / (n as f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn directions_cover_the_sphere() {
        let s = shape();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 20_000;
        let mut mean = Vector3::zeros();
        for _ in 0..n {
            let v = sample_viewpoint(&s, &mut rng);
            // Camera position in the object frame.
            let pos = -(v.rotation().matrix().transpose() * v.translation());
            mean += pos.normalize();
        }
        assert!((mean / n as f64).norm() < 0.03);
    }
}
