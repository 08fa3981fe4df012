//! Dispatch of one subcommand to the core library.
//!
//! [`execute`] is pure: it returns the report, the side files and a short
//! human summary without touching the file system. [`run`] sizes the worker
//! pool and writes everything under the output directory.

use std::f64::consts::PI;
use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sflab_core::constraints::{check_constraints, conformal_killing_fields, AmbientCurvature, TangentVectorField};
use sflab_core::curvature::{compute_curvature, total_norms, vertex_normals};
use sflab_core::experiments::{
    blowup_rescale, build_helicoid_member, fold_beta, fold_map_analysis, hopf_check, member_record,
    normal_chord_scan, summarize_family, ChordOptions,
};
use sflab_core::symbol::{canonical_phase, dirichlet_kernel_vector, scan, SystemKind};
use sflab_core::uniformize::{
    mobius_normalize, spherical_distance, uniformize, uniformize_with, FlowOptions, NormalizeOptions,
};
use sflab_core::{MeshQuality, TriangleMesh};

use crate::config::{
    BoundaryKind, CheckArgs, ChordsArgs, Command, ExecOptions, FoldArgs, HelicoidArgs, Marks, RigidityArgs, RunConfig,
    SymbolArgs, UniformizeArgs,
};
use crate::error::{experiments, RunError};
use crate::report::{to_payload, Report, Stopwatch, Timings};
use crate::tables::{chords_csv, curvature_csv, family_csv, gnuplot_dat};

/// A side file written next to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

fn artifact(name: &str, contents: String) -> Artifact {
    Artifact { name: name.into(), contents }
}

fn csv_artifact(name: &str, r: Result<String, csv::Error>) -> Result<Artifact, RunError> {
    r.map(|c| artifact(name, c)).map_err(|e| RunError::Report(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub report: Report,
    pub artifacts: Vec<Artifact>,
    pub summary: String,
}

struct Output {
    payload: serde_json::Value,
    artifacts: Vec<Artifact>,
    summary: String,
}

#[derive(Serialize)]
struct MeshSummary {
    id: String,
    area: f64,
    volume: f64,
    quality: MeshQuality,
}

fn mesh_summary(id: String, mesh: &TriangleMesh) -> MeshSummary {
    MeshSummary { id, area: mesh.total_area(), volume: mesh.signed_volume(), quality: mesh.quality() }
}

/// Runs one configured command on the current rayon pool.
pub fn execute(config: &RunConfig, watch: &mut Stopwatch) -> Result<Execution, RunError> {
    let out = match &config.command {
        Command::Check(a) => check(a, watch)?,
        Command::Uniformize(a) => run_uniformize(a, config.seed, watch)?,
        Command::Symbol(a) => symbol(a, config.seed, watch)?,
        Command::Helicoid(a) => helicoid(a, watch)?,
        Command::Rigidity(a) => rigidity(a, watch)?,
        Command::Chords(a) => chords(a, watch)?,
        Command::Fold(a) => fold(a, watch)?,
    };
    Ok(Execution { report: Report::new(config.clone(), out.payload)?, artifacts: out.artifacts, summary: out.summary })
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report_path: PathBuf,
    pub artifact_paths: Vec<PathBuf>,
    pub timings_path: PathBuf,
    pub summary: String,
}

/// Executes on a pool of `exec.threads` workers and writes
/// `<command>.json`, the side files and `<command>.timings.json`.
pub fn run(config: &RunConfig, exec: &ExecOptions) -> Result<RunSummary, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(exec.threads)
        .build()
        .map_err(|e| RunError::Config(format!("cannot start {} worker threads: {e}", exec.threads)))?;
    let mut watch = Stopwatch::default();
    let execution = pool.install(|| execute(config, &mut watch))?;
    let io = |path: &PathBuf, e: std::io::Error| RunError::Io { path: path.display().to_string(), source: e };
    fs::create_dir_all(&exec.out).map_err(|e| io(&exec.out, e))?;
    let name = config.command.name();
    let report_path = exec.out.join(format!("{name}.json"));
    fs::write(&report_path, execution.report.render()).map_err(|e| io(&report_path, e))?;
    let mut artifact_paths = Vec::new();
    for a in &execution.artifacts {
        let p = exec.out.join(&a.name);
        fs::write(&p, &a.contents).map_err(|e| io(&p, e))?;
        artifact_paths.push(p);
    }
    watch.lap("write");
    let timings: Timings = watch.finish(name, pool.current_num_threads());
    let timings_path = exec.out.join(format!("{name}.timings.json"));
    let text = serde_json::to_string_pretty(&timings).expect("timings serialize") + "\n";
    fs::write(&timings_path, text).map_err(|e| io(&timings_path, e))?;
    Ok(RunSummary { report_path, artifact_paths, timings_path, summary: execution.summary })
}

fn check(a: &CheckArgs, watch: &mut Stopwatch) -> Result<Output, RunError> {
    let mesh = a.source.load()?;
    let kappa = AmbientCurvature::new(a.kappa)?;
    watch.lap("load");
    let (field, fields) = rayon::join(
        || compute_curvature(&mesh),
        || -> Result<Vec<TangentVectorField>, RunError> {
            if mesh.genus() != 0 {
                return Ok(Vec::new());
            }
            Ok(conformal_killing_fields(&uniformize(&mesh)?, &mesh)?)
        },
    );
    let (field, fields) = (field?, fields?);
    watch.lap("curvature and fields");
    let report = check_constraints(&a.source.id(), &mesh, &field, kappa, &fields);
    let normals = vertex_normals(&mesh);
    let leak = fields.iter().map(|f| f.normal_leak(&normals)).fold(0.0, f64::max);
    watch.lap("constraints");
    let summary = format!(
        "gauss linf {:.3e} l2 {:.3e} | codazzi l2 {:.3e} | identity gap {:.3e} | {} balancing fields",
        report.gauss.norms.linf,
        report.gauss.norms.l2,
        report.codazzi.norms.l2,
        report.integrated_identity_gap,
        report.balancing.len()
    );
    let payload = json!({
        "mesh": to_payload(&mesh_summary(a.source.id(), &mesh))?,
        "constraints": to_payload(&report)?,
        "field_normal_leak": leak,
    });
    Ok(Output { payload, artifacts: vec![csv_artifact("curvature.csv", curvature_csv(&field))?], summary })
}

fn run_uniformize(a: &UniformizeArgs, seed: u64, watch: &mut Stopwatch) -> Result<Output, RunError> {
    let mesh = a.source.load()?;
    watch.lap("load");
    let mut opts = FlowOptions::default();
    if let Some(t) = a.time_step {
        opts.time_step = t;
    }
    if let Some(n) = a.max_steps {
        opts.max_steps = n;
    }
    if let Some(t) = a.tolerance {
        opts.tolerance = t;
    }
    let mut uni = uniformize_with(&mesh, &opts)?;
    watch.lap("flow");
    let mut mark_distances = None;
    if let Some(Marks(marks)) = a.marks {
        let (normalized, _) = mobius_normalize(&mesh, &uni, marks, &NormalizeOptions { seed, ..Default::default() })?;
        uni = normalized;
        let p = marks.map(|k| uni.sphere_map[k]);
        mark_distances =
            Some([(0, 1), (1, 2), (0, 2)].map(|(i, j)| spherical_distance(p[i], p[j])));
        watch.lap("normalize");
    }
    let mut artifacts = vec![artifact(
        "flow.dat",
        gnuplot_dat(&["step", "max_motion"], uni.residual_history.iter().enumerate().map(|(i, r)| vec![i as f64, *r])),
    )];
    if a.write_off {
        let sphere = mesh.with_positions(uni.sphere_map.clone())?;
        artifacts.push(artifact("sphere.off", crate::mesh_io::format_off(&sphere)));
    }
    let summary = format!(
        "{} steps | median distortion {:.4} | radius error {:.2e}{}",
        uni.steps,
        uni.median_distortion,
        uni.max_radius_error(),
        mark_distances.map_or(String::new(), |d| format!(" | mark distances {:.10} {:.10} {:.10}", d[0], d[1], d[2]))
    );
    let mut payload = json!({
        "mesh": to_payload(&mesh_summary(a.source.id(), &mesh))?,
        "max_radius_error": uni.max_radius_error(),
        "result": to_payload(&uni)?,
    });
    if let Some(d) = mark_distances {
        payload["mark_distances"] = to_payload(&d)?;
    }
    Ok(Output { payload, artifacts, summary })
}

/// Frequencies with uniform direction and log-uniform magnitude in `[1/span, span]`.
pub fn sample_frequencies(seed: u64, count: usize, span: f64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_span = span.ln().abs();
    (0..count)
        .map(|_| {
            let t = rng.gen_range(0.0..2.0 * PI);
            let r = if log_span > 0.0 { rng.gen_range(-log_span..=log_span).exp() } else { 1.0 };
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

fn symbol(a: &SymbolArgs, seed: u64, watch: &mut Stopwatch) -> Result<Output, RunError> {
    let kind = match a.bc {
        BoundaryKind::ConformalMean => SystemKind::ConformalMean,
        BoundaryKind::Dirichlet => SystemKind::Dirichlet,
        BoundaryKind::Immersion => SystemKind::Immersion,
    };
    if a.samples == 0 {
        return Err(RunError::Config("--samples must be positive".into()));
    }
    let xis = sample_frequencies(seed, a.samples, a.radius_span);
    let reports = xis
        .par_iter()
        .map(|xi| scan(kind, std::slice::from_ref(xi)).map(|mut r| r.remove(0)))
        .collect::<Result<Vec<_>, _>>()?;
    watch.lap("scan");
    let dims: Vec<usize> = reports.iter().map(|r| r.dimension).collect();
    let min_sigma = reports.iter().map(|r| r.smallest_singular_value / r.singular_values[0]).fold(f64::INFINITY, f64::min);
    let mut payload = json!({
        "kind": kind,
        "samples": reports.len(),
        "kernel_dimension_min": dims.iter().min(),
        "kernel_dimension_max": dims.iter().max(),
        "min_relative_singular_value": min_sigma,
    });
    if kind == SystemKind::Dirichlet {
        // deviation of the computed kernel from the closed form, both phase-normalized
        let mut worst = 0.0f64;
        for r in reports.iter().filter(|r| r.dimension == 1) {
            let expected = canonical_phase(&dirichlet_kernel_vector(r.xi)?);
            for (g, e) in r.basis[0].iter().zip(&expected) {
                worst = worst.max((g[0] - e[0]).hypot(g[1] - e[1]));
            }
        }
        payload["max_closed_form_error"] = json!(worst);
    }
    payload["reports"] = to_payload(&reports)?;
    let mut table = String::from("      xi_1        xi_2   dim   sigma_min\n");
    for r in &reports {
        table.push_str(&format!(
            "{:>10.5} {:>11.5} {:>5} {:>11.4e}\n",
            r.xi[0], r.xi[1], r.dimension, r.smallest_singular_value
        ));
    }
    let dat = gnuplot_dat(
        &["xi_1", "xi_2", "kernel_dimension", "sigma_min"],
        reports.iter().map(|r| vec![r.xi[0], r.xi[1], r.dimension as f64, r.smallest_singular_value]),
    );
    Ok(Output { payload, artifacts: vec![artifact("symbol.dat", dat)], summary: table })
}

fn helicoid(a: &HelicoidArgs, watch: &mut Stopwatch) -> Result<Output, RunError> {
    if a.wraps.is_empty() || a.wraps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RunError::Config("--wraps must be a strictly increasing list".into()));
    }
    let base = a.params();
    let records = a
        .wraps
        .par_iter()
        .map(|&n| build_helicoid_member(&base.with_wraps(n)).and_then(|m| member_record(&m)))
        .collect::<Vec<_>>();
    let members = records
        .into_iter()
        .zip(&a.wraps)
        .map(|(r, n)| r.map_err(|e| RunError::Experiments(format!("member with {n} wraps: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    watch.lap("family");
    let family = summarize_family(members, base.h_min);
    let area_per_wrap: Vec<f64> = family.members.iter().map(|m| m.area / m.wraps as f64).collect();
    let summary = family
        .members
        .iter()
        .map(|m| format!("n={:<3} area {:>9.4} H in [{:.4}, {:.4}] min chord {:.4}", m.wraps, m.area, m.min_h, m.max_h, m.min_chord))
        .collect::<Vec<_>>()
        .join("\n");
    let dat = gnuplot_dat(
        &["wraps", "area", "min_h", "max_h", "min_chord"],
        family.members.iter().map(|m| vec![m.wraps as f64, m.area, m.min_h, m.max_h, m.min_chord]),
    );
    let artifacts = vec![csv_artifact("family.csv", family_csv(&family.members))?, artifact("family.dat", dat)];
    let payload = json!({
        "params": family_params(&base),
        "family": to_payload(&family)?,
        "area_per_wrap": area_per_wrap,
    });
    Ok(Output { payload, artifacts, summary })
}

/// Family-wide parameters; the per-member wrap count is in each record.
fn family_params(p: &sflab_core::experiments::HelicoidParams) -> serde_json::Value {
    let mut v = serde_json::to_value(p).expect("params serialize");
    if let Some(map) = v.as_object_mut() {
        map.remove("wraps");
    }
    v
}

fn rigidity(a: &RigidityArgs, watch: &mut Stopwatch) -> Result<Output, RunError> {
    let mesh = a.source.load()?;
    watch.lap("load");
    let field = compute_curvature(&mesh)?;
    let (rescaled, lambda) = blowup_rescale(&mesh).map_err(experiments)?;
    let field_rescaled = compute_curvature(&rescaled)?;
    let hopf = hopf_check(&mesh, &field);
    watch.lap("rescale");
    let before = total_norms(&field).shape_sq;
    let after = total_norms(&field_rescaled).shape_sq;
    let max_after = (0..field_rescaled.vertex_count()).map(|v| field_rescaled.shape_op_norm(v)).fold(0.0, f64::max);
    let opts = ChordOptions::default();
    let (c0, c1) = rayon::join(
        || normal_chord_scan(&mesh, &field, &opts),
        || normal_chord_scan(&rescaled, &field_rescaled, &opts),
    );
    watch.lap("chords");
    let mut payload = json!({
        "mesh": to_payload(&mesh_summary(a.source.id(), &mesh))?,
        "blowup_scale": lambda.get(),
        "shape_norm_sq": before,
        "shape_norm_sq_rescaled": after,
        "shape_norm_sq_relative_change": (after - before).abs() / before,
        "max_shape_norm_rescaled": max_after,
        "hopf": to_payload(&hopf)?,
    });
    // chord lengths need a closed embedded surface; report them when available
    if let (Ok(c0), Ok(c1)) = (&c0, &c1) {
        payload["min_chord"] = json!(c0.min_length);
        payload["min_chord_rescaled"] = json!(c1.min_length);
    }
    let summary = format!(
        "blow-up scale {:.6} | max|A| after {:.12} | H defect {:.3e} | umbilic linf {:.4} | roundness {:.4}",
        lambda.get(),
        max_after,
        hopf.h_const_defect,
        hopf.umbilic_linf,
        hopf.roundness
    );
    Ok(Output { payload, artifacts: Vec::new(), summary })
}

fn chords(a: &ChordsArgs, watch: &mut Stopwatch) -> Result<Output, RunError> {
    let mesh = a.source.load()?;
    let field = compute_curvature(&mesh)?;
    watch.lap("curvature");
    let opts = ChordOptions { orthogonality_threshold: a.threshold_deg.to_radians(), kappa: a.kappa };
    let scan = normal_chord_scan(&mesh, &field, &opts).map_err(experiments)?;
    watch.lap("chords");
    let frankel: Vec<f64> = scan.records.iter().filter_map(|r| r.frankel).collect();
    let mut payload = json!({
        "mesh": to_payload(&mesh_summary(a.source.id(), &mesh))?,
        "options": to_payload(&opts)?,
        "records": scan.records.len(),
        "min_length": scan.min_length,
        "near_orthogonal": frankel.len(),
        "all_frankel_negative": frankel.iter().all(|&q| q < 0.0),
    });
    if let Some(max) = frankel.iter().copied().reduce(f64::max) {
        payload["max_frankel"] = json!(max);
    }
    let summary = format!(
        "{} chords | min length {:.6} | {} near-orthogonal | all Q < 0: {}",
        scan.records.len(),
        scan.min_length,
        frankel.len(),
        frankel.iter().all(|&q| q < 0.0)
    );
    let dat = gnuplot_dat(
        &["source", "length", "frankel"],
        scan.records.iter().map(|r| vec![r.source as f64, r.length, r.frankel.unwrap_or(0.0)]),
    );
    let artifacts = vec![csv_artifact("chords.csv", chords_csv(&scan))?, artifact("chords.dat", dat)];
    Ok(Output { payload, artifacts, summary })
}

fn fold(a: &FoldArgs, watch: &mut Stopwatch) -> Result<Output, RunError> {
    if a.samples < 2 {
        return Err(RunError::Config("--samples must be at least 2".into()));
    }
    let cases: Vec<_> = a.values.iter().map(|&c| fold_map_analysis(c)).collect();
    let probe = fold_map_analysis(0.0);
    let stated = (4.0 * PI).cbrt();
    watch.lap("roots");
    // a from a*/16 to 16 a*, geometric
    let curve = (0..a.samples).map(|k| {
        let t = -16f64.ln() + 2.0 * 16f64.ln() * k as f64 / (a.samples - 1) as f64;
        let x = probe.a_star * t.exp();
        vec![x, fold_beta(x)]
    });
    let payload = json!({
        "a_star": probe.a_star,
        "beta_star": probe.beta_star,
        "stated_range_endpoint": stated,
        "endpoint_note": format!(
            "stated range endpoint (4 pi)^(1/3) = {stated:.6} differs from the computed minimum 3 (4 pi)^(1/3) = {:.6}",
            probe.beta_star
        ),
        "cases": to_payload(&cases)?,
    });
    let summary = cases
        .iter()
        .map(|r| format!("c = {}: {} preimage(s) {:?}", r.c, r.preimages.len(), r.preimages))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Output { payload, artifacts: vec![artifact("fold.dat", gnuplot_dat(&["a", "beta"], curve))], summary })
}
