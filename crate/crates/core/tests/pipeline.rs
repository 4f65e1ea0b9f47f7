use nalgebra::Vector3;
use nocs9d_core::solver::{fit_nocs, pose_from_fit};
use nocs9d_core::synth::{render, sample_viewpoint, ShapeSpec};
use nocs9d_core::{ransac_fit, rotation_geodesic_deg, CameraIntrinsics, Correspondences, RansacConfig, Similarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ycbv() -> CameraIntrinsics<f64> {
    CameraIntrinsics::new(1066.778, 1067.487, 312.9869, 241.3109, 640, 480).unwrap()
}

fn shapes() -> Vec<ShapeSpec<f64>> {
    vec![
        ShapeSpec::cuboid(Vector3::new(0.2, 0.12, 0.08)).unwrap(),
        ShapeSpec::cylinder(0.05, 0.18).unwrap(),
        ShapeSpec::prism(6, 0.06, 0.15).unwrap(),
        ShapeSpec::l_shape(Vector3::new(0.2, 0.12, 0.06)).unwrap(),
    ]
}

#[test]
fn clean_render_recovers_generator_pose() {
    let k = ycbv();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for s in shapes() {
        for i in 0..5 {
            let view = sample_viewpoint(&s, &mut rng);
            let r = render(&s, &view, &k).unwrap();
            let cfg = RansacConfig { seed: i, ..Default::default() };
            let fit = fit_nocs(&r.nocs, &r.depth, &k, &r.mask, &cfg).unwrap();
            let dt = (fit.pose.translation() - r.pose.translation()).norm();
            let dr = rotation_geodesic_deg(fit.pose.rotation(), r.pose.rotation());
            assert!(dt < 1e-4, "{:?}: {dt} m", s.kind());
            assert!(dr < 0.01, "{:?}: {dr} deg", s.kind());
            assert!((fit.transform.scale() - s.max_extent()).abs() < 1e-6);
        }
    }
}

/// Points spread over all six faces of a box, mapped by a known transform.
#[test]
fn full_coverage_box_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let s = ShapeSpec::cuboid(Vector3::new(0.2, 0.12, 0.08)).unwrap();
    let half = s.extents() * 0.5;
    let view = sample_viewpoint(&s, &mut rng);
    let mut nocs = Vec::new();
    let mut cam = Vec::new();
    for i in 0..3000 {
        let axis = i % 3;
        let mut p = Vector3::from_fn(|j, _| rng.random_range(-half[j]..half[j]));
        p[axis] = if i % 2 == 0 { half[axis] } else { -half[axis] };
        nocs.push(p / s.max_extent());
        cam.push(view.apply(&p));
    }
    let corr = Correspondences::new(nocs, cam).unwrap();
    let fit = ransac_fit(&corr, &RansacConfig::default()).unwrap();
    let size = pose_from_fit(&fit, &corr).unwrap();
    for a in 0..3 {
        assert!((size.scale()[a] / s.extents()[a] - 1.0f64).abs() < 0.02, "{}", size.scale());
    }
}

#[test]
fn single_view_never_overestimates_size() {
    let k = ycbv();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let s = ShapeSpec::cuboid(Vector3::new(0.2, 0.12, 0.08)).unwrap();
    for i in 0..10 {
        let view = sample_viewpoint(&s, &mut rng);
        let r = render(&s, &view, &k).unwrap();
        let fit = fit_nocs(&r.nocs, &r.depth, &k, &r.mask, &RansacConfig { seed: i, ..Default::default() }).unwrap();
        let corr = nocs9d_core::build_correspondences(&r.nocs, &r.depth, &k, &r.mask).unwrap();
        let p = pose_from_fit(&fit, &corr).unwrap();
        for a in 0..3 {
            assert!(p.scale()[a] <= s.extents()[a] + 1e-9);
        }
    }
}

#[test]
fn fit_is_equivariant_to_camera_motion() {
    let k = ycbv();
    let s = ShapeSpec::l_shape(Vector3::new(0.2, 0.12, 0.06)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let r = render(&s, &sample_viewpoint(&s, &mut rng), &k).unwrap();
    let corr = nocs9d_core::build_correspondences(&r.nocs, &r.depth, &k, &r.mask).unwrap();
    let g = Similarity::rigid(nocs9d_core::Rotation::from_axis_angle(&Vector3::new(1.0, 2.0, 0.5), 0.7), Vector3::new(0.1, -0.2, 0.3));
    let moved = Correspondences::new(corr.nocs_points.clone(), corr.camera_points.iter().map(|p| g.apply(p)).collect()).unwrap();
    let cfg = RansacConfig::default();
    let a = ransac_fit(&corr, &cfg).unwrap();
    let b = ransac_fit(&moved, &cfg).unwrap();
    let expect = g.compose(&a.transform);
    assert!((b.transform.translation() - expect.translation()).norm() < 1e-6);
    assert!(rotation_geodesic_deg(b.transform.rotation(), expect.rotation()) < 1e-6);
}
