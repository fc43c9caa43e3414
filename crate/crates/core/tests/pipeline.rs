//! End-to-end runs through the public API.

use ups_core::harness::{generate_dataset, is_degenerate, load_dataset, solve_and_evaluate, synthesize};
use ups_core::integrability::{build_persp_matrix, c_fields, degeneracy_report, DEFAULT_DEGENERACY_THRESHOLD};
use ups_core::shading::{add_gaussian_noise, render_sh1};
use ups_core::solver::solve_ups_perspective;
use ups_core::{AlbedoKind, DatasetSpec, Error, ShapeKind};

fn small(shape: ShapeKind, albedo: AlbedoKind) -> DatasetSpec {
    DatasetSpec {
        shape: shape.default_spec(),
        albedo,
        rows: 64,
        cols: 64,
        focal: 300.0,
        ..Default::default()
    }
}

#[test]
fn clean_scenes_reconstruct() {
    for (shape, albedo) in [
        (ShapeKind::MultiBump, AlbedoKind::White),
        (ShapeKind::MultiBump, AlbedoKind::ALL[1]),
        (ShapeKind::MultiBump, AlbedoKind::ALL[AlbedoKind::ALL.len() - 1]),
    ] {
        let s = synthesize(&small(shape, albedo)).unwrap();
        let e = solve_and_evaluate(&s.images, &s.camera, &s.normals).unwrap();
        assert!(e.mae_degrees < 1.0, "{shape:?} {albedo:?}: {}", e.mae_degrees);
    }
}

#[test]
fn rendering_is_linear_in_the_mfield() {
    let s = synthesize(&small(ShapeKind::MultiBump, AlbedoKind::White)).unwrap();
    let again = render_sh1(&s.mfield, &s.lighting).unwrap();
    assert_eq!(again.data(), s.clean.data());
    let doubled = render_sh1(&s.mfield.scale(2.0).unwrap(), &s.lighting).unwrap();
    assert!((doubled.data() - s.clean.data() * 2.0).amax() < 1e-12);
}

#[test]
fn image_scale_does_not_change_the_normals() {
    let s = synthesize(&small(ShapeKind::MultiBump, AlbedoKind::White)).unwrap();
    let a = solve_ups_perspective(&s.images, &s.camera).unwrap();
    let b = solve_ups_perspective(&s.images.scaled(3.5), &s.camera).unwrap();
    let worst = a
        .normals
        .grid()
        .values()
        .iter()
        .zip(b.normals.grid().values())
        .map(|(x, y)| (x - y).amax())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn noise_costs_accuracy() {
    let s = synthesize(&small(ShapeKind::MultiBump, AlbedoKind::White)).unwrap();
    let clean = solve_and_evaluate(&s.clean, &s.camera, &s.normals).unwrap().mae_degrees;
    let noisy = add_gaussian_noise(&s.clean, 0.05, 3).unwrap();
    let worse = solve_and_evaluate(&noisy, &s.camera, &s.normals).unwrap().mae_degrees;
    assert!(worse > clean, "{worse} {clean}");
}

#[test]
fn dataset_files_solve_like_memory() {
    let spec = small(ShapeKind::GaussianBump, AlbedoKind::White);
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&spec, dir.path()).unwrap();
    let data = load_dataset(dir.path()).unwrap();
    let s = synthesize(&spec).unwrap();
    let from_disk = solve_and_evaluate(&data.images, &data.manifest.camera, &data.normals).unwrap();
    let in_memory = solve_and_evaluate(&s.images, &s.camera, &s.normals).unwrap();
    assert_eq!(from_disk.mae_degrees, in_memory.mae_degrees);
}

#[test]
fn degenerate_shapes_are_refused() {
    for shape in [
        ShapeKind::Plane,
        ShapeKind::CylinderU,
        ShapeKind::CylinderV,
        ShapeKind::RidgeDiag,
    ] {
        let s = synthesize(&small(shape, AlbedoKind::White)).unwrap();
        assert!(is_degenerate(&s).unwrap(), "{shape:?}");
        let err = solve_ups_perspective(&s.images, &s.camera).unwrap_err();
        // planes and cylinders have planar normal sets, so their images stop at the rank check
        let refused = matches!(
            err.root(),
            Error::DegenerateSurface { .. } | Error::RankDeficientImages { .. }
        );
        assert!(refused, "{shape:?}: {err}");
    }
}

// Sphere normals are affine in the surface point, which leaves the
// perspective system with a second exact null direction.
#[test]
fn sphere_cap_has_a_second_null_direction() {
    for size in [64, 128] {
        let spec = DatasetSpec {
            rows: size,
            cols: size,
            focal: 600.0 * size as f64 / 128.0,
            ..small(ShapeKind::SphereCap, AlbedoKind::White)
        };
        let s = synthesize(&spec).unwrap();
        let im = build_persp_matrix(&c_fields(s.mfield.grid()).unwrap(), &s.camera).unwrap();
        let r = degeneracy_report(&im, DEFAULT_DEGENERACY_THRESHOLD).unwrap();
        let sv = &r.singular_values;
        assert!(sv[16] / sv[0] < 1e-12, "{size}: {:e}", sv[16] / sv[0]);
        assert!(r.degenerate);
    }
}
