//! Acceptance suite: one PASS/FAIL line per criterion. A failing criterion
//! makes the exit status non-zero only when `UPS_ACCEPTANCE_STRICT` is set,
//! so the rest of a workspace test run still executes.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ups_core::geometry::angle_deg;
use ups_core::harness::{
    is_degenerate, mean_angular_error, run_noise_sweep, run_theorem2_experiment, solve_and_evaluate, synthesize,
    DatasetSpec,
};
use ups_core::integrability::{persp_minor_vector, persp_residual_m4};
use ups_core::lorentz::{
    boost_eigencheck, decompose, is_scaled_gbr, lower_submatrix, make_gbr, GbrParams, ScaledLorentz, DEFAULT_TOL,
};
use ups_core::shading::{build_mfield, render_directional, sample_directional_lighting, solve_calibrated_directional};
use ups_core::solver::{
    enforce_sh1_constraint, extract_surface, factorize_rank4, recover_ambiguity, solve_minor_system,
};
use ups_core::{AlbedoMap, CameraModel, MinorSolution, ShapeKind};

type Outcome = anyhow::Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

const STRICT_ENV: &str = "UPS_ACCEPTANCE_STRICT";

const ROUND_TRIP_TOL: f64 = 1e-9;
const ROUND_TRIP_SECS: f64 = 5.0;
const EIGEN_TOL: f64 = 1e-10;
const CONVERGENCE_RATIO: f64 = 1.8;
const CLEAN_MAE_DEG: f64 = 5.0;
const CLEAN_SECS: f64 = 60.0;
const INVARIANCE_DEG: f64 = 0.01;
const MINOR_TOL: f64 = 1e-8;
const BREAKDOWN_DEG: f64 = 30.0;
const CALIBRATED_DEG: f64 = 1e-6;

fn default_spec() -> DatasetSpec {
    DatasetSpec::default()
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn c1_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = ScaledLorentz::random(&mut rng, 0.95).realize();
        let back = decompose(&a, DEFAULT_TOL)?.realize();
        worst = worst.max((back - a).amax());
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst < ROUND_TRIP_TOL && secs < ROUND_TRIP_SECS,
        format!("1000 samples, max error {worst:.2e} (< {ROUND_TRIP_TOL:e}), {secs:.2} s (< {ROUND_TRIP_SECS} s)"),
    ))
}

fn c2_boost_eigenvalues() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let speed: f64 = rng.random_range(0.0..0.99);
        let v = random_unit(&mut rng) * speed;
        let gamma = 1.0 / (1.0 - speed * speed).sqrt();
        let e = boost_eigencheck(&v)?;
        for (got, want) in e.iter().zip([1.0, 1.0, gamma]) {
            worst = worst.max((got - want).abs());
        }
    }
    Ok((
        worst < EIGEN_TOL,
        format!("100 boosts, max eigenvalue error {worst:.2e} (< {EIGEN_TOL:e})"),
    ))
}

fn c3_gbr_characterization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let signed = |rng: &mut ChaCha8Rng| {
        let x: f64 = rng.random_range(0.2..3.0);
        if rng.random_bool(0.5) {
            -x
        } else {
            x
        }
    };
    let (mut gbr_ok, mut perturbed_rejected, mut lower_ok) = (0, 0, 0);
    for _ in 0..100 {
        let p = GbrParams {
            lambda: signed(&mut rng),
            mu: rng.random_range(-2.0..2.0),
            nu: rng.random_range(-2.0..2.0),
            beta: signed(&mut rng),
        };
        let g = make_gbr(p)?;
        gbr_ok += usize::from(is_scaled_gbr(&g, DEFAULT_TOL));
        let axis = Unit::new_normalize(random_unit(&mut rng));
        let angle = rng.random_range(10f64..170.0).to_radians();
        let r: Matrix3<f64> = Rotation3::from_axis_angle(&axis, angle).into_inner();
        perturbed_rejected += usize::from(!is_scaled_gbr(&(r * g), DEFAULT_TOL));
        let alpha = signed(&mut rng);
        let lambda = signed(&mut rng);
        let a = Matrix4::from_diagonal(&[1.0, lambda, lambda, 1.0].into()) * alpha;
        lower_ok += usize::from(is_scaled_gbr(&lower_submatrix(&a), DEFAULT_TOL));
    }
    Ok((
        gbr_ok == 100 && perturbed_rejected == 100 && lower_ok == 100,
        format!("GBR accepted {gbr_ok}/100, rotated rejected {perturbed_rejected}/100, ambiguous lower blocks accepted {lower_ok}/100"),
    ))
}

fn genuine_residual(kind: ShapeKind, size: usize) -> anyhow::Result<f64> {
    let camera = CameraModel::perspective(600.0 * size as f64 / 128.0, size, size)?;
    let n = kind.default_spec().normals(size, size, &camera)?;
    let white = AlbedoMap::new(n.grid().map(|_| 1.0))?;
    let m = build_mfield(&white, &n)?;
    Ok(persp_residual_m4(m.grid(), &camera)?.max_abs())
}

fn c4_convergence() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [ShapeKind::GaussianBump, ShapeKind::SphereCap] {
        let [a, b, c] = [
            genuine_residual(kind, 64)?,
            genuine_residual(kind, 128)?,
            genuine_residual(kind, 256)?,
        ];
        let (q1, q2) = (a / b, b / c);
        pass &= q1 >= CONVERGENCE_RATIO && q2 >= CONVERGENCE_RATIO;
        parts.push(format!("{kind:?} {a:.2e}/{b:.2e}/{c:.2e} ratios {q1:.2} {q2:.2}"));
    }
    Ok((pass, format!("{} (each >= {CONVERGENCE_RATIO})", parts.join("; "))))
}

fn c5_clean_reconstruction() -> Outcome {
    let scene = synthesize(&default_spec())?;
    let start = Instant::now();
    let eval = solve_and_evaluate(&scene.images, &scene.camera, &scene.normals)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        eval.mae_degrees < CLEAN_MAE_DEG && secs < CLEAN_SECS,
        format!(
            "MAE {:.4} deg (< {CLEAN_MAE_DEG}), {secs:.2} s (< {CLEAN_SECS} s)",
            eval.mae_degrees
        ),
    ))
}

fn c6_frame_invariance() -> Outcome {
    let scene = synthesize(&default_spec())?;
    let m1 = enforce_sh1_constraint(&factorize_rank4(&scene.images)?)?.m1_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut fields = Vec::with_capacity(100);
    for _ in 0..100 {
        let a = ScaledLorentz::random(&mut rng, 0.95).realize();
        let moved = m1.map(|c| a * c);
        let sol = solve_minor_system(&moved, &scene.camera)?;
        let rec = recover_ambiguity(&sol)?;
        fields.push(extract_surface(&moved, &rec.vq)?.1);
    }
    let mask = scene.images.mask();
    let mut worst = 0.0f64;
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            worst = worst.max(mean_angular_error(&fields[i], &fields[j], mask)?.mae_degrees);
        }
    }
    Ok((
        worst < INVARIANCE_DEG,
        format!("100 transforms, max pairwise MAE {worst:.2e} deg (< {INVARIANCE_DEG})"),
    ))
}

fn c7_ambiguity_separation() -> Outcome {
    let r = run_theorem2_experiment(&default_spec(), 50, 7)?;
    Ok((
        r.separated && r.max_ambiguous < 0.01 * r.min_generic,
        format!(
            "ambiguous max {:.3e}, generic min {:.3e}, ratio {:.0} (> 100)",
            r.max_ambiguous,
            r.min_generic,
            r.min_generic / r.max_ambiguous
        ),
    ))
}

fn c8_exact_minors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let a = ScaledLorentz::random(&mut rng, 0.95).realize();
        let rec = recover_ambiguity(&MinorSolution::from_minors(&persp_minor_vector(&a))?)?;
        let want = a.fixed_view::<3, 4>(1, 0).into_owned();
        // best scale of rec.vq onto want, then relative misfit
        let k = rec.vq.dot(&want) / rec.vq.norm_squared();
        worst = worst.max((rec.vq * k - want).norm() / want.norm());
    }
    Ok((
        worst < MINOR_TOL,
        format!("200 matrices, max relative error {worst:.2e} (< {MINOR_TOL:e})"),
    ))
}

fn c9_degeneracy() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, expected) in [
        (ShapeKind::Plane, true),
        (ShapeKind::CylinderU, true),
        (ShapeKind::CylinderV, true),
        (ShapeKind::RidgeDiag, true),
        (ShapeKind::MultiBump, false),
        (ShapeKind::GaussianBump, false),
        (ShapeKind::SphereCap, false),
    ] {
        let spec = DatasetSpec {
            shape: kind.default_spec(),
            ..default_spec()
        };
        let flagged = is_degenerate(&synthesize(&spec)?)?;
        pass &= flagged == expected;
        parts.push(format!("{kind:?}={}", if flagged { "degenerate" } else { "ok" }));
    }
    Ok((pass, parts.join(" ")))
}

fn c10_noise() -> Outcome {
    let scene = synthesize(&default_spec())?;
    let sigmas = [0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0];
    let sweep = run_noise_sweep(&scene.clean, &scene.camera, &scene.normals, &sigmas, &[0, 1, 2, 3, 4])?;
    let medians: Vec<f64> = sweep.levels.iter().map(|l| l.median()).collect();
    let monotone = medians[..6].windows(2).all(|w| w[1] >= w[0]);
    let breaks = medians[6] > BREAKDOWN_DEG;
    let shown: Vec<String> = sigmas
        .iter()
        .zip(&medians)
        .map(|(s, m)| format!("{s}%:{m:.3}"))
        .collect();
    Ok((
        monotone && breaks,
        format!(
            "medians {} (monotone {monotone}, > {BREAKDOWN_DEG} deg at 1% {breaks})",
            shown.join(" ")
        ),
    ))
}

fn c11_calibrated() -> Outcome {
    let scene = synthesize(&default_spec())?;
    let l3 = sample_directional_lighting(12, 11)?;
    let images = render_directional(&scene.albedo, &scene.normals, &l3)?;
    let (_, n) = solve_calibrated_directional(&images, &l3)?;
    let mask = images.mask();
    let worst = n
        .grid()
        .values()
        .iter()
        .zip(scene.normals.grid().values())
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((a, b), _)| angle_deg(a, b))
        .fold(0.0f64, f64::max);
    let mae = mean_angular_error(&n, &scene.normals, mask)?.mae_degrees;
    Ok((
        mae < CALIBRATED_DEG,
        format!("MAE {mae:.2e} deg, max {worst:.2e} deg (< {CALIBRATED_DEG:e})"),
    ))
}

fn run_sweep(data: &Path, out: &Path, threads: &str) -> anyhow::Result<()> {
    let status = Command::new(env!("CARGO_BIN_EXE_ups"))
        .env("UPS_THREADS", threads)
        .args(["sweep-noise", "--images"])
        .arg(data)
        .arg("--out")
        .arg(out)
        .output()?;
    anyhow::ensure!(
        status.status.success(),
        "ups sweep-noise failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    Ok(())
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("data");
    let status = Command::new(env!("CARGO_BIN_EXE_ups"))
        .arg("render")
        .arg("--out")
        .arg(&data)
        .output()?;
    anyhow::ensure!(status.status.success(), "ups render failed");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_sweep(&data, &a, "1")?;
    run_sweep(&data, &b, "4")?;
    let mut same = true;
    for name in ["noise_sweep.csv", "noise_sweep.json", "noise_sweep.dat"] {
        same &= std::fs::read(a.join(name))? == std::fs::read(b.join(name))?;
    }
    Ok((
        same,
        format!(
            "UPS_THREADS=1 vs 4: csv, json and dat {}",
            if same { "identical" } else { "differ" }
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("Lorentz decomposition round trip", c1_round_trip),
        ("boost eigenvalues", c2_boost_eigenvalues),
        ("GBR minor characterization", c3_gbr_characterization),
        ("discrete integrability convergence", c4_convergence),
        ("clean reconstruction", c5_clean_reconstruction),
        ("invariance under hidden Lorentz transforms", c6_frame_invariance),
        ("orthographic ambiguity separation", c7_ambiguity_separation),
        ("ambiguity from exact minors", c8_exact_minors),
        ("degeneracy detection", c9_degeneracy),
        ("noise trend and breakdown", c10_noise),
        ("calibrated directional round trip", c11_calibrated),
        ("deterministic sweeps across thread counts", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e:#}")));
        failed += usize::from(!pass);
        println!(
            "[{}] {:>2} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 || std::env::var_os(STRICT_ENV).is_none() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
