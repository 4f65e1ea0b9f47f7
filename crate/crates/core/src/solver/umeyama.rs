use nalgebra::{Matrix3, Vector3};

use crate::geometry::{Rotation, Similarity};
use crate::{Error, Real, Result};

/// Least-squares similarity `dst ≈ c·R·src + t` (Umeyama, 1991).
///
/// A reflection in the SVD solution is removed by flipping the sign of the
/// direction with the smallest singular value, so `det(R) = +1`.
pub fn umeyama<T: Real>(src: &[Vector3<T>], dst: &[Vector3<T>]) -> Result<Similarity<T>> {
    if src.len() != dst.len() {
        return Err(Error::Dimension {
            expected: format!("{} destination points", src.len()),
            actual: format!("{}", dst.len()),
        });
    }
    let n = src.len();
    if n < 3 {
        return Err(Error::InsufficientPoints {
            required: 3,
            actual: n,
        });
    }
    let inv_n = T::one() / T::from_usize(n).unwrap();
    let mu_src = src.iter().fold(Vector3::zeros(), |a, p| a + p) * inv_n;
    let mu_dst = dst.iter().fold(Vector3::zeros(), |a, p| a + p) * inv_n;

    let mut cov = Matrix3::zeros();
    let mut src_scatter = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        let s = s - mu_src;
        let d = d - mu_dst;
        cov += d * s.transpose();
        src_scatter += s * s.transpose();
    }
    cov *= inv_n;
    src_scatter *= inv_n;
    let var_src = src_scatter.trace();

    let mut spread = src_scatter.symmetric_eigenvalues().as_slice().to_vec();
    spread.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    if !(spread[0] > T::zero()) {
        return Err(Error::Degenerate("source points are coincident".into()));
    }
    if spread[1] <= spread[0] * T::lit(T::RANK_TOL) {
        return Err(Error::Degenerate("source points are collinear".into()));
    }

    let svd = cov.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let sv = svd.singular_values;
    let mut s = Vector3::repeat(T::one());
    if u.determinant() * v_t.determinant() < T::zero() {
        let smallest = (0..3)
            .min_by(|&a, &b| sv[a].partial_cmp(&sv[b]).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        s[smallest] = -T::one();
    }
    let rotation = u * Matrix3::from_diagonal(&s) * v_t;
    let scale = sv.dot(&s) / var_src;
    if !(scale > T::zero()) {
        return Err(Error::Degenerate(
            "destination points are coincident".into(),
        ));
    }
    let rotation = Rotation::new_unchecked(rotation);
    let translation = mu_dst - rotation.rotate(&mu_src) * scale;
    Similarity::new(scale, rotation, translation)
        .map_err(|e| Error::Degenerate(format!("fit produced an invalid transform: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_geodesic_deg;
    use approx::assert_relative_eq;
    use nalgebra::{Quaternion, UnitQuaternion};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut impl Rng) -> Rotation<f64> {
        let q = UnitQuaternion::from_quaternion(Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ));
        Rotation::new_unchecked(q.to_rotation_matrix().into_inner())
    }

    fn cloud(rng: &mut impl Rng, n: usize) -> Vec<Vector3<f64>> {
        (0..n)
            .map(|_| Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect()
    }

    #[test]
    fn identity_on_equal_sets() {
        let src = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        let t = umeyama(&src, &src).unwrap();
        assert_relative_eq!(t.scale(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(*t.rotation().matrix(), Matrix3::identity(), epsilon = 1e-9);
        assert_relative_eq!(*t.translation(), Vector3::zeros(), epsilon = 1e-9);
    }

    #[test]
    fn pure_scaling_of_centred_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut src = cloud(&mut rng, 20);
        let mean = src.iter().fold(Vector3::zeros(), |a, p| a + p) / 20.0;
        src.iter_mut().for_each(|p| *p -= mean);
        let dst: Vec<_> = src.iter().map(|p| p * 2.0).collect();
        let t = umeyama(&src, &dst).unwrap();
        assert_relative_eq!(t.scale(), 2.0, epsilon = 1e-9);
        assert_relative_eq!(*t.rotation().matrix(), Matrix3::identity(), epsilon = 1e-9);
        assert_relative_eq!(*t.translation(), Vector3::zeros(), epsilon = 1e-9);
    }

    #[test]
    fn recovers_generator_over_seeds() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gen = Similarity::new(
                rng.random_range(0.05..3.0),
                random_rotation(&mut rng),
                Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.5..3.0)),
            )
            .unwrap();
            let src = cloud(&mut rng, 100);
            let dst: Vec<_> = src.iter().map(|p| gen.apply(p)).collect();
            let t = umeyama(&src, &dst).unwrap();
            assert!((t.scale() - gen.scale()).abs() < 1e-7);
            assert!(rotation_geodesic_deg(t.rotation(), gen.rotation()).to_radians() < 1e-6);
            assert!((t.translation() - gen.translation()).norm() < 1e-7);
        }
    }

    #[test]
    fn exact_for_three_and_planar_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gen = Similarity::new(0.7, random_rotation(&mut rng), Vector3::new(0.1, 0.2, 0.3)).unwrap();
        let src = [Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 2.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0)];
        for n in [3, 4] {
            let dst: Vec<_> = src[..n].iter().map(|p| gen.apply(p)).collect();
            let t = umeyama(&src[..n], &dst).unwrap();
            assert_relative_eq!(t.scale(), gen.scale(), epsilon = 1e-9);
            assert_relative_eq!(t.rotation().matrix(), gen.rotation().matrix(), epsilon = 1e-9);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert!(matches!(umeyama(&[p, p], &[p, p]), Err(Error::InsufficientPoints { .. })));
        assert!(matches!(umeyama(&[p, p, p], &[p, p, p]), Err(Error::Degenerate(_))));
        let line: Vec<_> = (0..5).map(|i| Vector3::new(i as f64, 0.0, 0.0)).collect();
        assert!(matches!(umeyama(&line, &line), Err(Error::Degenerate(_))));
        assert!(matches!(umeyama(&line[..3], &line[..4]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn residual_is_a_minimum_under_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let src = cloud(&mut rng, 50);
        let gen = Similarity::new(1.3, random_rotation(&mut rng), Vector3::new(0.0, 0.1, 1.0)).unwrap();
        let dst: Vec<_> = src
            .iter()
            .map(|p| gen.apply(p) + Vector3::new(rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02)))
            .collect();
        let t = umeyama(&src, &dst).unwrap();
        let cost = |t: &Similarity<f64>| src.iter().zip(&dst).map(|(s, d)| (t.apply(s) - d).norm_squared()).sum::<f64>();
        let best = cost(&t);
        for _ in 0..100 {
            let dr = Rotation::from_axis_angle(
                &Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                rng.random_range(-1e-3..1e-3),
            );
            let perturbed = Similarity::new(
                t.scale() * (1.0 + rng.random_range(-1e-3..1e-3)),
                t.rotation().then(&dr),
                t.translation() + Vector3::new(rng.random_range(-1e-3..1e-3), rng.random_range(-1e-3..1e-3), rng.random_range(-1e-3..1e-3)),
            )
            .unwrap();
            assert!(cost(&perturbed) >= best);
        }
    }

    #[test]
    fn equivariant_under_destination_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let src = cloud(&mut rng, 30);
        let dst: Vec<_> = src
            .iter()
            .map(|p| p * 0.8 + Vector3::new(rng.random_range(-0.01..0.01), 0.0, rng.random_range(-0.01..0.01)))
            .collect();
        let g = Similarity::new(2.5, random_rotation(&mut rng), Vector3::new(1.0, -1.0, 0.5)).unwrap();
        let t = umeyama(&src, &dst).unwrap();
        let moved: Vec<_> = dst.iter().map(|p| g.apply(p)).collect();
        let tg = umeyama(&src, &moved).unwrap();
        let expected = g.compose(&t);
        assert_relative_eq!(tg.scale(), expected.scale(), epsilon = 1e-6);
        assert_relative_eq!(tg.rotation().matrix(), expected.rotation().matrix(), epsilon = 1e-6);
        assert_relative_eq!(tg.translation(), expected.translation(), epsilon = 1e-6);
    }

    #[test]
    fn works_in_f32() {
        let src: Vec<Vector3<f32>> = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.3, 0.0, 0.0),
            Vector3::new(0.0, 0.3, 0.0),
            Vector3::new(0.0, 0.0, 0.3),
            Vector3::new(0.2, 0.1, -0.2),
        ];
        let g = Similarity::new(1.5f32, Rotation::from_axis_angle(&Vector3::y(), 0.4), Vector3::new(0.0, 0.0, 1.0)).unwrap();
        let dst: Vec<_> = src.iter().map(|p| g.apply(p)).collect();
        let t = umeyama(&src, &dst).unwrap();
        assert!((t.scale() - 1.5).abs() < 1e-4);
    }
}
