use sflab_core::constraints::{conformal_killing_fields, AmbientCurvature, gauss_residual};
use sflab_core::curvature::{compute_curvature, rescale, vertex_normals, ScaleFactor};
use sflab_core::experiments::{build_helicoid_member, hopf_check, normal_chord_scan, ChordOptions, HelicoidParams};
use sflab_core::mesh::{generate_ellipsoid, generate_icosphere};
use sflab_core::uniformize::{
    conformal_class_distance, mobius_normalize, spherical_distance, uniformize, NormalizeOptions,
};
use sflab_core::{TriangleMesh, Vec3};

fn vertex_near(mesh: &TriangleMesh, dir: Vec3) -> usize {
    (0..mesh.vertex_count())
        .max_by(|&a, &b| mesh.position(a).normalized().dot(dir).total_cmp(&mesh.position(b).normalized().dot(dir)))
        .unwrap()
}

fn axis_marks(mesh: &TriangleMesh) -> [usize; 3] {
    [Vec3::X, Vec3::Y, Vec3::Z].map(|d| vertex_near(mesh, d))
}

#[test]
fn normalized_marks_are_orthogonal_on_both_fixtures() {
    let opts = NormalizeOptions::default();
    let sphere = generate_icosphere(4, 1.0).unwrap();
    let ellipsoid = generate_ellipsoid(1.5, 1.0, 0.8, 4).unwrap();
    let mut normalized = Vec::new();
    for mesh in [&sphere, &ellipsoid] {
        let marks = axis_marks(mesh);
        let (uni, _) = mobius_normalize(mesh, &uniformize(mesh).unwrap(), marks, &opts).unwrap();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            let d = spherical_distance(uni.sphere_map[marks[a]], uni.sphere_map[marks[b]]);
            assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-8, "{d}");
        }
        normalized.push((uni, marks));
    }
    let d = conformal_class_distance(&normalized[0].0, &normalized[1].0, normalized[0].1, normalized[1].1).unwrap();
    assert!(d < 1e-6, "{d}");
}

#[test]
fn uniformization_ignores_global_scale() {
    let mesh = generate_ellipsoid(1.5, 1.0, 0.8, 3).unwrap();
    let big = rescale(&mesh, ScaleFactor::new(10.0).unwrap());
    let a = uniformize(&mesh).unwrap();
    let b = uniformize(&big).unwrap();
    let gap = a.sphere_map.iter().zip(&b.sphere_map).map(|(p, q)| (*p - *q).norm()).fold(0.0, f64::max);
    assert!(gap < 1e-6, "{gap}");
    assert_eq!(a.steps, b.steps);
    let shift = (a.log_factor[0] - b.log_factor[0]) - 10f64.ln();
    assert!(shift.abs() < 1e-6, "{shift}");
}

#[test]
fn pulled_back_fields_are_tangent_on_ellipsoid() {
    let mesh = generate_ellipsoid(1.5, 1.0, 0.8, 3).unwrap();
    let uni = uniformize(&mesh).unwrap();
    let normals = vertex_normals(&mesh);
    let fields = conformal_killing_fields(&uni, &mesh).unwrap();
    assert_eq!(fields.len(), 6);
    for x in &fields {
        let scale = x.vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(x.normal_leak(&normals) < 1e-9 * scale, "{}", x.name);
    }
}

#[test]
fn gauss_residual_converges_on_ellipsoid() {
    let l2: Vec<f64> = (2..=4)
        .map(|l| {
            let m = generate_ellipsoid(1.5, 1.0, 0.8, l).unwrap();
            gauss_residual(&compute_curvature(&m).unwrap(), AmbientCurvature::EUCLIDEAN).norms.l2
        })
        .collect();
    assert!(l2[2] < l2[1] && l2[1] < l2[0], "{l2:?}");
}

#[test]
fn long_helicoid_member_is_far_from_round() {
    let member = build_helicoid_member(&HelicoidParams::default().with_wraps(8)).unwrap();
    let hopf = hopf_check(&member.mesh, &member.field);
    assert!(hopf.roundness > 0.3, "{hopf:?}");
    let scan = normal_chord_scan(&member.mesh, &member.field, &ChordOptions::default()).unwrap();
    assert!(scan.min_length > 0.0);
    let frankel: Vec<f64> = scan.records.iter().filter_map(|r| r.frankel).collect();
    assert!(!frankel.is_empty());
    assert!(frankel.iter().all(|&q| q < 0.0));
}

/// Largest `|k1 - k2| / sqrt 2` on the prolate spheroid with semi-axes
/// `(a, b, b)`, from the revolution-surface curvatures.
fn spheroid_umbilic_max(a: f64, b: f64) -> f64 {
    (0..=100_000)
        .map(|k| {
            let t = std::f64::consts::FRAC_PI_2 * k as f64 / 100_000.0;
            let w = (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
            let parallel = a / (b * w);
            let meridian = a * b / w.powi(3);
            (parallel - meridian).abs() / std::f64::consts::SQRT_2
        })
        .fold(0.0, f64::max)
}

#[test]
fn umbilic_defect_separates_sphere_from_spheroid() {
    let sphere = generate_icosphere(4, 1.0).unwrap();
    let s = sflab_core::curvature::umbilic_defect(&compute_curvature(&sphere).unwrap());
    assert!(s.linf < 0.05, "{}", s.linf);
    let spheroid = generate_ellipsoid(2.0, 1.0, 1.0, 4).unwrap();
    let e = sflab_core::curvature::umbilic_defect(&compute_curvature(&spheroid).unwrap());
    let oracle = spheroid_umbilic_max(2.0, 1.0);
    assert!((oracle - 0.5443).abs() < 1e-4);
    assert!(e.linf > 0.5);
    assert!((e.linf / oracle - 1.0).abs() < 0.1, "{} vs {oracle}", e.linf);
}

#[test]
fn family_area_per_wrap_stays_in_a_band() {
    use sflab_core::experiments::run_family;
    let base = HelicoidParams::default();
    let report = run_family(&[2, 4, 8, 16], &base).unwrap();
    assert!(report.area_increasing && report.within_band, "{report:?}");
    let per_wrap: Vec<f64> = report.members.iter().map(|m| m.area / m.wraps as f64).collect();
    // caps add a fixed area, so area/n = slope + caps/n decreases toward the
    // straight-part slope; at n = 2 the caps are about a quarter of the total
    let slope = (report.members[3].area - report.members[2].area) / 8.0;
    for w in per_wrap.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(per_wrap.iter().all(|&r| r > slope && r < 1.5 * slope), "{per_wrap:?} slope {slope}");
}

#[test]
fn blowup_scales_chords_exactly() {
    use sflab_core::experiments::blowup_rescale;
    let mesh = generate_ellipsoid(1.5, 1.0, 0.8, 3).unwrap();
    let opts = ChordOptions::default();
    let before = normal_chord_scan(&mesh, &compute_curvature(&mesh).unwrap(), &opts).unwrap();
    let (scaled, lambda) = blowup_rescale(&mesh).unwrap();
    let after = normal_chord_scan(&scaled, &compute_curvature(&scaled).unwrap(), &opts).unwrap();
    assert!((after.min_length / (lambda.get() * before.min_length) - 1.0).abs() < 1e-12);
}
