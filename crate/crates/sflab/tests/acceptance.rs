//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//! Runs sequentially without the test harness so the timing checks are not
//! disturbed by concurrent tests.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use sflab::config::{Command as Sub, FoldArgs, RunConfig};
use sflab::report::Stopwatch;
use sflab::run::sample_frequencies;
use sflab_core::constraints::{balancing, gauss_residual, integrated_identity, killing_fields_from_map, AmbientCurvature};
use sflab_core::curvature::{compute_curvature, rescale, total_norms, umbilic_defect, ScaleFactor};
use sflab_core::experiments::{
    blowup_rescale, build_helicoid_member, fold_beta, fold_map_analysis, hopf_check, run_family, HelicoidParams,
};
use sflab_core::mesh::{generate_ellipsoid, generate_icosphere, generate_torus};
use sflab_core::symbol::{
    assemble_boundary_symbol, assemble_immersion_symbol, canonical_phase, dirichlet_kernel_vector, kernel_analysis,
    SystemKind,
};
use sflab_core::uniformize::{
    mobius_normalize, solve_conformal_factor, spherical_distance, uniformize, ConformalFactorOptions,
    NormalizeOptions,
};
use sflab_core::{TriangleMesh, Vec3};

type Outcome = Result<String, String>;

fn require(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn gauss_constraint() -> Outcome {
    let mut linf = Vec::new();
    let mut slowest = Duration::ZERO;
    for level in 3..=5 {
        let (r, dt) = timed(|| {
            let m = generate_icosphere(level, 1.0).unwrap();
            gauss_residual(&compute_curvature(&m).unwrap(), AmbientCurvature::EUCLIDEAN).norms.linf
        });
        linf.push(r);
        slowest = slowest.max(dt);
    }
    let monotone = linf[1] < linf[0] && linf[2] < linf[1];
    require(
        monotone && linf[1] < 0.1 && slowest < Duration::from_secs(5),
        format!("linf at levels 3/4/5 = {:.3e} {:.3e} {:.3e}, slowest level {:.2?}", linf[0], linf[1], linf[2], slowest),
    )
}

fn integrated_identity_check() -> Outcome {
    let m = generate_icosphere(4, 1.0).unwrap();
    let f = compute_curvature(&m).unwrap();
    let t = total_norms(&f);
    let gap = integrated_identity(&f, AmbientCurvature::EUCLIDEAN, m.euler_characteristic());
    let chi_term = 4.0 * PI * m.euler_characteristic() as f64;
    let near = |x: f64, y: f64| (x / y - 1.0).abs() < 0.02;
    let torus = generate_torus(2.0, 1.0, 128, 64).unwrap();
    let ft = compute_curvature(&torus).unwrap();
    let torus_rel = integrated_identity(&ft, AmbientCurvature::EUCLIDEAN, 0).abs() / total_norms(&ft).shape_sq;
    require(
        gap.abs() < 0.3 && near(t.shape_sq, 8.0 * PI) && near(t.mean_sq, 16.0 * PI) && chi_term == 8.0 * PI && torus_rel < 0.02,
        format!(
            "sphere |A|^2 {:.4} (8pi {:.4}), H^2 {:.4} (16pi {:.4}), gap {:.4}; torus relative gap {:.4}",
            t.shape_sq,
            8.0 * PI,
            t.mean_sq,
            16.0 * PI,
            gap,
            torus_rel
        ),
    )
}

fn scale_invariance() -> Outcome {
    let fixtures: [(&str, TriangleMesh); 3] = [
        ("icosphere", generate_icosphere(3, 1.0).unwrap()),
        ("ellipsoid", generate_ellipsoid(1.5, 1.0, 0.8, 3).unwrap()),
        ("torus", generate_torus(2.0, 1.0, 64, 32).unwrap()),
    ];
    let mut worst_energy = 0.0f64;
    let mut worst_blowup = 0.0f64;
    for (_, mesh) in &fixtures {
        let base = total_norms(&compute_curvature(mesh).unwrap()).shape_sq;
        for lambda in [0.1, 1.0, 10.0] {
            let scaled = rescale(mesh, ScaleFactor::new(lambda).unwrap());
            let e = total_norms(&compute_curvature(&scaled).unwrap()).shape_sq;
            worst_energy = worst_energy.max((e / base - 1.0).abs());
            let (blown, _) = blowup_rescale(&scaled).unwrap();
            let f = compute_curvature(&blown).unwrap();
            let max = (0..f.vertex_count()).map(|v| f.shape_op_norm(v)).fold(0.0, f64::max);
            worst_blowup = worst_blowup.max((max - 1.0).abs());
        }
    }
    require(
        worst_energy < 1e-10 && worst_blowup < 1e-10,
        format!("max relative change of int |A|^2 {worst_energy:.2e}, max | max|A| - 1 | after blow-up {worst_blowup:.2e}"),
    )
}

fn ellipticity() -> Outcome {
    let xis = sample_frequencies(7, 100, 10.0);
    let ((cm_dims, d_dims, d_err), dt) = timed(|| {
        let mut cm = Vec::new();
        let mut d = Vec::new();
        let mut err = 0.0f64;
        for &xi in &xis {
            cm.push(kernel_analysis(&assemble_boundary_symbol(SystemKind::ConformalMean, xi).unwrap()).unwrap().dimension);
            let r = kernel_analysis(&assemble_boundary_symbol(SystemKind::Dirichlet, xi).unwrap()).unwrap();
            if r.dimension == 1 {
                let expected = canonical_phase(&dirichlet_kernel_vector(xi).unwrap());
                for (g, e) in r.basis[0].iter().zip(&expected) {
                    err = err.max(Complex64::new(g[0] - e[0], g[1] - e[1]).norm());
                }
            }
            d.push(r.dimension);
        }
        (cm, d, err)
    });
    require(
        cm_dims.iter().all(|&k| k == 0) && d_dims.iter().all(|&k| k == 1) && d_err < 1e-8 && dt < Duration::from_secs(1),
        format!(
            "conformal-mean kernel dims {:?}, Dirichlet kernel dims {:?}, closed-form error {:.2e}, {:.2?}",
            range(&cm_dims),
            range(&d_dims),
            d_err,
            dt
        ),
    )
}

fn range(v: &[usize]) -> (usize, usize) {
    (*v.iter().min().unwrap(), *v.iter().max().unwrap())
}

fn immersion_ellipticity() -> Outcome {
    let xis = sample_frequencies(7, 100, 10.0);
    let (dims, dt) = timed(|| {
        xis.iter()
            .map(|&xi| kernel_analysis(&assemble_immersion_symbol(xi).unwrap()).unwrap().dimension)
            .collect::<Vec<_>>()
    });
    require(
        dims.iter().all(|&k| k == 0) && dt < Duration::from_secs(1),
        format!("kernel dims {:?} over 100 frequencies, {:.2?}", range(&dims), dt),
    )
}

fn balancing_obstruction() -> Outcome {
    let m = generate_icosphere(4, 1.0).unwrap();
    let f = compute_curvature(&m).unwrap();
    let fields = killing_fields_from_map(&m, m.positions()).unwrap();
    let field = |name: &str| fields.iter().find(|x| x.name == name).unwrap();
    let synth = |h: &dyn Fn(Vec3) -> f64| m.positions().iter().map(|&p| h(p)).collect::<Vec<f64>>();
    let constant = synth(&|_| 2.0);
    let linear = synth(&|p| 2.0 + p.z);
    let cubic = synth(&|p| 2.0 + p.z.powi(3));
    let worst_constant = fields.iter().map(|x| balancing(&m, &f, x, Some(&constant)).abs()).fold(0.0, f64::max);
    let essential = balancing(&m, &f, field("ess_z"), Some(&linear));
    let cubic_value = balancing(&m, &f, field("ess_z"), Some(&cubic));
    let rotational = ["rot_x", "rot_y", "rot_z"]
        .iter()
        .flat_map(|n| [balancing(&m, &f, field(n), Some(&linear)), balancing(&m, &f, field(n), Some(&cubic))])
        .map(f64::abs)
        .fold(0.0, f64::max);
    let target = 8.0 * PI / 3.0;
    require(
        worst_constant < 1e-8 && (essential / target - 1.0).abs() < 0.01 && cubic_value > 0.0 && rotational < 1e-6,
        format!(
            "constant H {worst_constant:.2e}; H = 2 + z gives {essential:.5} vs 8pi/3 = {target:.5}; H = 2 + z^3 gives {cubic_value:.5}; rotational {rotational:.2e}"
        ),
    )
}

fn vertex_toward(mesh: &TriangleMesh, dir: Vec3) -> usize {
    (0..mesh.vertex_count())
        .max_by(|&a, &b| mesh.position(a).normalized().dot(dir).total_cmp(&mesh.position(b).normalized().dot(dir)))
        .unwrap()
}

fn marked_slice() -> Outcome {
    let mut worst = 0.0f64;
    for mesh in [generate_icosphere(4, 1.0).unwrap(), generate_ellipsoid(1.5, 1.0, 0.8, 4).unwrap()] {
        // marks off the symmetry axes so the optimizer has work to do
        let marks = [Vec3::new(1.0, 0.3, 0.1), Vec3::new(0.2, 1.0, -0.4), Vec3::new(-0.3, 0.5, 1.0)]
            .map(|d| vertex_toward(&mesh, d.normalized()));
        let uni = uniformize(&mesh).map_err(|e| e.to_string())?;
        let (uni, _) = mobius_normalize(&mesh, &uni, marks, &NormalizeOptions::default()).map_err(|e| e.to_string())?;
        let p = marks.map(|k| uni.sphere_map[k]);
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            worst = worst.max((spherical_distance(p[a], p[b]) - PI / 2.0).abs());
        }
    }
    require(worst < 1e-8, format!("largest deviation from pi/2 over icosphere and ellipsoid {worst:.2e}"))
}

fn conformal_factor() -> Outcome {
    let sphere = generate_icosphere(3, 1.0).unwrap();
    let id = solve_conformal_factor(&sphere, &vec![1.0; sphere.vertex_count()], 1.0, &Default::default())
        .map_err(|e| e.to_string())?;
    let id_err = id.lambda.iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max);
    let e = generate_ellipsoid(1.5, 1.0, 0.8, 4).unwrap();
    let uni = uniformize(&e).map_err(|e| e.to_string())?;
    let background = e.with_positions(uni.sphere_map.clone()).unwrap();
    let field = compute_curvature(&e).unwrap();
    let opts = ConformalFactorOptions { target_areas: Some(field.areas.clone()), ..Default::default() };
    let s = solve_conformal_factor(&background, &field.gauss, 1.0, &opts).map_err(|e| e.to_string())?;
    let cross = s.lambda.iter().zip(&uni.log_factor).map(|(l, u)| (l / u.exp() - 1.0).abs()).fold(0.0, f64::max);
    let h = &s.residual_history;
    let quadratic = h.len() >= 3 && (h.len() - 2..h.len()).all(|k| h[k] <= 10.0 * h[k - 1] * h[k - 1]);
    require(
        id_err < 1e-9 && cross < 0.05 && quadratic,
        format!(
            "identity error {id_err:.2e}; ellipsoid lambda vs e^u max relative difference {cross:.4}; last residuals {:?}",
            &h[h.len().saturating_sub(3)..]
        ),
    )
}

fn helicoid_family() -> Outcome {
    let (report, dt) = timed(|| run_family(&[2, 4, 8], &HelicoidParams::default()));
    let report = report.map_err(|e| e.to_string())?;
    let mut genus_zero = true;
    for n in [2, 4, 8] {
        // rebuilding is cheap and gives the mesh for the topology check
        let m = build_helicoid_member(&HelicoidParams::default().with_wraps(n)).map_err(|e| e.to_string())?;
        genus_zero &= m.mesh.genus() == 0;
    }
    let a: Vec<f64> = report.members.iter().map(|m| m.area).collect();
    let min_h = report.members.iter().map(|m| m.min_h).fold(f64::INFINITY, f64::min);
    require(
        genus_zero
            && min_h > 0.0
            && report.area_increasing
            && a[2] / a[0] >= 3.0
            && report.within_band
            && dt < Duration::from_secs(300),
        format!(
            "areas {:.3} {:.3} {:.3} (ratio {:.3}), min H {min_h:.4}, band [{:.3}, {:.3}], embedded genus 0: {genus_zero}, {:.2?}",
            a[0],
            a[1],
            a[2],
            a[2] / a[0],
            report.h_band[0],
            report.h_band[1],
            dt
        ),
    )
}

fn hopf_rigidity() -> Outcome {
    let sphere = generate_icosphere(4, 1.0).unwrap();
    let s = umbilic_defect(&compute_curvature(&sphere).unwrap()).linf;
    let e = generate_ellipsoid(2.0, 1.0, 1.0, 4).unwrap();
    let el = umbilic_defect(&compute_curvature(&e).unwrap()).linf;
    let member = build_helicoid_member(&HelicoidParams::default().with_wraps(8)).map_err(|e| e.to_string())?;
    let h = hopf_check(&member.mesh, &member.field);
    let min_h = member.field.mean.iter().copied().fold(f64::INFINITY, f64::min);
    require(
        s < 0.05 && el > 0.5 && h.roundness > 0.3 && min_h > 0.0,
        format!("sphere umbilic linf {s:.4}, ellipsoid {el:.4}, helicoid roundness {:.4} with min H {min_h:.4}", h.roundness),
    )
}

fn fold_map() -> Outcome {
    let star = fold_map_analysis(0.0).beta_star;
    let counts: Vec<usize> = [star + 1.0, star, star - 1.0].iter().map(|&c| fold_map_analysis(c).preimages.len()).collect();
    let mut worst = 0.0f64;
    for c in [star + 1e-3, star + 1.0, 20.0, 100.0] {
        for a in fold_map_analysis(c).preimages {
            worst = worst.max((fold_beta(a) - c).abs());
        }
    }
    let config = RunConfig { seed: 0, command: Sub::Fold(FoldArgs { values: vec![star + 1.0], samples: 10 }) };
    let run = sflab::execute(&config, &mut Stopwatch::default()).map_err(|e| e.to_string())?;
    let recorded = run.report.payload.get("stated_range_endpoint").is_some() && run.report.payload.get("endpoint_note").is_some();
    let expected = 3.0 * (4.0 * PI).cbrt();
    require(
        counts == [2, 1, 0] && worst < 1e-10 && recorded && (star - expected).abs() < 1e-12,
        format!("roots above/at/below {counts:?}, worst |beta(a) - c| {worst:.2e}, minimum {star:.10}, endpoint recorded: {recorded}"),
    )
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 9] = [
        &["check", "--gen", "icosphere:3:1"],
        &["uniformize", "--gen", "ellipsoid:1.5:1:0.8:3", "--marks", "0,7,40", "--write-off"],
        &["symbol", "--bc", "conformal-mean", "--samples", "50"],
        &["symbol", "--bc", "dirichlet", "--samples", "50"],
        &["symbol", "--bc", "immersion", "--samples", "50"],
        &["helicoid", "--wraps", "2,4"],
        &["rigidity", "--gen", "ellipsoid:2:1:1:3"],
        &["chords", "--gen", "helicoid:2"],
        &["fold", "--c", "5,10"],
    ];
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let dir = root.path().join(format!("{i}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_sflab"))
                .args(["--out", dir.to_str().unwrap(), "--threads", threads, "--seed", "7"])
                .args(*args)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            outputs.push(dir);
        }
        for entry in std::fs::read_dir(&outputs[0]).map_err(|e| e.to_string())? {
            let name = entry.map_err(|e| e.to_string())?.file_name();
            if name.to_string_lossy().contains("timings") {
                continue;
            }
            let read = |d: &Path| std::fs::read(d.join(&name)).unwrap_or_default();
            if read(&outputs[0]) != read(&outputs[1]) {
                return Err(format!("{} differs between 1 and 4 threads for {args:?}", name.to_string_lossy()));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} report and side files byte-identical at 1 and 4 threads across all subcommands"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Gauss constraint", gauss_constraint),
        ("integrated identity", integrated_identity_check),
        ("scale invariance", scale_invariance),
        ("boundary ellipticity", ellipticity),
        ("immersion ellipticity", immersion_ellipticity),
        ("balancing obstruction", balancing_obstruction),
        ("marked slice", marked_slice),
        ("conformal-factor solver", conformal_factor),
        ("helicoid family", helicoid_family),
        ("Hopf rigidity", hopf_rigidity),
        ("fold map", fold_map),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
