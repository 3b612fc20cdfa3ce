//! Experiment drivers and artifact output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use nitsche_bem::contact_solver::{
    monotonicity_probe, residual_equivalence_check, ContactError, ContactSystem, IterationControls, NitscheParameters,
    ProblemData, SolveReport, TraceData,
};
use nitsche_bem::mesh::{generate_cube_mesh, load_mesh, MeshError, Region, SurfaceMesh, ValidationOptions};
use nitsche_bem::operators::{OperatorBlocks, OperatorError};
use nitsche_bem::postprocess::{
    contact_diagnostics, solve_and_measure, write_convergence_csv, write_surface_vtk, write_tau_sweep_csv,
    ContactDiagnostics, ConvergenceTable, CubeSignorini, EocFit, ErrorReport, InteriorOptions, ManufacturedProblem,
    PostprocessError, SolveOutcome, StudySettings, TauSweepRow,
};
use nitsche_bem::spaces::{read_coefficients, write_coefficients, MeshHierarchy, SpaceError};

use crate::config::{Command, MeshSource, ProblemChoice, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {count} values match neither the {vertices} vertices nor the {triangles} triangles of the mesh")]
    DataLength {
        path: PathBuf,
        count: usize,
        vertices: usize,
        triangles: usize,
    },
    #[error("{path}: {source}")]
    Data { path: PathBuf, source: SpaceError },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Postprocess(#[from] PostprocessError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("cannot build thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub all_converged: bool,
    pub manifest: PathBuf,
}

/// Run the configured command inside a thread pool of the requested size.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.threads).build()?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &RunConfig) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    std::fs::create_dir_all(&config.out).map_err(|source| RunError::Io {
        path: config.out.clone(),
        source,
    })?;
    let mut manifest = Map::new();
    manifest.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    manifest.insert(
        "config".into(),
        Value::Object(
            config
                .echo()
                .into_iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect(),
        ),
    );
    let all_converged = match config.command {
        Command::Solve => solve(config, &mut manifest)?,
        Command::SweepTau => sweep(config, &mut manifest)?,
        Command::Convergence => convergence(config, &mut manifest)?,
    };
    manifest.insert("all_converged".into(), json!(all_converged));
    manifest.insert("total_time_s".into(), json!(start.elapsed().as_secs_f64()));
    let path = config.out.join("manifest.json");
    let mut out = create(&path)?;
    serde_json::to_writer_pretty(&mut out, &Value::Object(manifest))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(RunSummary {
        all_converged,
        manifest: path,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path).map(BufWriter::new).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn settings(config: &RunConfig) -> StudySettings {
    StudySettings {
        beta_d: config.beta_d,
        tau_rule: config.tau,
        controls: IterationControls {
            tol: config.tol,
            maxiter: config.maxiter,
            gmres: config.gmres,
            preconditioner: config.preconditioner,
            contact_degree: config.contact_degree,
        },
        orders: config.orders,
        interior: InteriorOptions::default(),
    }
}

fn load(source: &MeshSource) -> Result<SurfaceMesh, RunError> {
    Ok(match source {
        MeshSource::Cube(n) => generate_cube_mesh(*n)?,
        MeshSource::File(p) => load_mesh(p, ValidationOptions { auto_flip: true })?,
    })
}

fn assemble(mesh: SurfaceMesh, config: &RunConfig) -> Result<(OperatorBlocks, Duration), RunError> {
    let start = Instant::now();
    let hierarchy = Arc::new(MeshHierarchy::new(Arc::new(mesh)));
    let blocks = OperatorBlocks::assemble(hierarchy, config.pairing, config.orders)?;
    Ok((blocks, start.elapsed()))
}

fn mesh_stats(blocks: &OperatorBlocks) -> Value {
    let mesh = blocks.primal.hierarchy().coarse();
    json!({
        "vertices": mesh.vertex_count(),
        "triangles": mesh.triangle_count(),
        "h": mesh.h(),
        "dirichlet_area": mesh.region_area(Region::Dirichlet),
        "contact_area": mesh.region_area(Region::Contact),
        "primal_dofs": blocks.primal_dofs(),
        "flux_dofs": blocks.flux_dofs(),
    })
}

fn eoc_json(fit: &Option<EocFit>) -> Value {
    fit.map_or(Value::Null, |f| json!({ "slope": f.slope, "residual": f.residual }))
}

fn contact_json(c: &ContactDiagnostics) -> Value {
    json!({
        "active_area": c.active_area,
        "complementarity": c.complementarity,
        "active_set_error": c.active_set_error,
    })
}

fn report_json(report: &SolveReport) -> Value {
    json!({
        "converged": report.converged,
        "outer_iterations": report.outer_iterations,
        "average_inner_iterations": report.average_inner_iterations(),
        "final_update_norm": report.update_norms.last(),
    })
}

fn errors_json(e: &ErrorReport) -> Value {
    let interior: Vec<Value> = e
        .interior
        .iter()
        .map(|p| {
            json!({
                "point": [p.point.x, p.point.y, p.point.z],
                "exact": p.exact,
                "computed": p.computed,
            })
        })
        .collect();
    json!({
        "err_V": e.err_v,
        "err_L2_u": e.err_l2_u,
        "err_L2_lambda": e.err_l2_lambda,
        "interior": interior,
        "contact": e.contact.as_ref().map(contact_json),
    })
}

fn outcome_json(outcome: &SolveOutcome, mesh: Value, n: Option<usize>, assembly: Option<Duration>) -> Value {
    json!({
        "n": n,
        "mesh": mesh,
        "tau": outcome.tau,
        "failure": outcome.failure,
        "solver": report_json(&outcome.report),
        "errors": errors_json(&outcome.errors),
        "timings": {
            "assembly_s": assembly.map(|d| d.as_secs_f64()),
            "solve_s": outcome.report.wall_time.as_secs_f64(),
        },
    })
}

fn progress(label: &str, outcome: &SolveOutcome) {
    match &outcome.failure {
        Some(f) => eprintln!("{label}: tau={} failed: {f}", outcome.tau),
        None => eprintln!(
            "{label}: tau={} {} after {} outer iterations, err_V={}",
            outcome.tau,
            if outcome.report.converged {
                "converged"
            } else {
                "not converged"
            },
            outcome.report.outer_iterations,
            outcome.errors.err_v,
        ),
    }
}

fn trace_data(path: &Option<PathBuf>, mesh: &SurfaceMesh) -> Result<TraceData, RunError> {
    let Some(path) = path else {
        return Ok(TraceData::Zero);
    };
    let file = File::open(path).map_err(|source| RunError::Io {
        path: path.clone(),
        source,
    })?;
    let values = read_coefficients(file).map_err(|source| RunError::Data {
        path: path.clone(),
        source,
    })?;
    match values.len() {
        n if n == mesh.vertex_count() => Ok(TraceData::Nodal(values)),
        n if n == mesh.triangle_count() => Ok(TraceData::PerTriangle(values)),
        count => Err(RunError::DataLength {
            path: path.clone(),
            count,
            vertices: mesh.vertex_count(),
            triangles: mesh.triangle_count(),
        }),
    }
}

/// Largest residual mismatch and smallest relative monotonicity probe over
/// random perturbations of the solution.
fn random_checks(system: &ContactSystem<'_>, u: &DVector<f64>, lambda: &DVector<f64>, seed: u64) -> Value {
    const SAMPLES: usize = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturb = |x: &DVector<f64>| {
        let scale = x.amax().max(1.0);
        x.map(|v| v + scale * rng.gen_range(-1.0..1.0))
    };
    let mut residual: f64 = 0.0;
    let mut probe = f64::INFINITY;
    for _ in 0..SAMPLES {
        let (v, mu) = (perturb(u), perturb(lambda));
        let (w, eta) = (perturb(u), perturb(lambda));
        residual = residual.max(residual_equivalence_check(system, &v, &mu));
        let p = monotonicity_probe(system, (&v, &mu), (&w, &eta));
        probe = probe.min(p.value / p.scale.max(f64::MIN_POSITIVE));
    }
    json!({
        "samples": SAMPLES,
        "residual_equivalence_max": residual,
        "monotonicity_min_relative": probe,
    })
}

fn write_solution(
    config: &RunConfig,
    system: &ContactSystem<'_>,
    u: &DVector<f64>,
    lambda: &DVector<f64>,
    report: &SolveReport,
) -> Result<(), RunError> {
    let path = config.out.join("iterations.csv");
    let mut out = create(&path)?;
    let io = |source| RunError::Io {
        path: path.clone(),
        source,
    };
    writeln!(out, "outer,inner_iters,inner_residual,update_norm").map_err(io)?;
    for i in 0..report.outer_iterations {
        writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            report.inner_iterations[i],
            report.inner_residuals[i],
            report.update_norms[i]
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)?;
    write_coefficients(u, create(&config.out.join("u.csv"))?)?;
    write_coefficients(lambda, create(&config.out.join("lambda.csv"))?)?;
    write_surface_vtk(system, u, lambda, create(&config.out.join("surface.vtk"))?)?;
    Ok(())
}

fn solve(config: &RunConfig, manifest: &mut Map<String, Value>) -> Result<bool, RunError> {
    let mesh = load(&config.mesh)?;
    let n = match config.mesh {
        MeshSource::Cube(n) => Some(n),
        MeshSource::File(_) => None,
    };
    let settings = settings(config);
    let (data, problem) = match &config.problem {
        ProblemChoice::CubeSignorini => (CubeSignorini.data(), Some(CubeSignorini)),
        ProblemChoice::Custom { g_d, gap, psi } => (
            ProblemData {
                g_d: trace_data(g_d, &mesh)?,
                g_c: trace_data(gap, &mesh)?,
                psi_c: trace_data(psi, &mesh)?,
            },
            None,
        ),
    };
    let (blocks, assembly) = assemble(mesh, config)?;
    let h = blocks.primal.hierarchy().coarse().h();
    let tau = config.tau.tau(h);
    let system = ContactSystem::new(
        &blocks,
        &data,
        NitscheParameters::new(config.beta_d, tau)?,
        config.contact_degree,
    )?;
    let (level, u, lambda, report) = match problem {
        Some(problem) => {
            let outcome = solve_and_measure(&problem, &blocks, n.unwrap_or(0), tau, &settings)?;
            progress("solve", &outcome);
            let level = outcome_json(&outcome, mesh_stats(&blocks), n, Some(assembly));
            (level, outcome.u, outcome.lambda, outcome.report)
        }
        None => {
            let u0 = DVector::zeros(blocks.primal_dofs());
            let l0 = DVector::zeros(blocks.flux_dofs());
            let (u, lambda, report) = system.solve(&settings.controls, &u0, &l0)?;
            eprintln!(
                "solve: tau={tau} {} after {} outer iterations",
                if report.converged { "converged" } else { "not converged" },
                report.outer_iterations
            );
            let level = json!({
                "n": n,
                "mesh": mesh_stats(&blocks),
                "tau": tau,
                "solver": report_json(&report),
                "contact": contact_json(&contact_diagnostics(&system, &u, &lambda, None)),
                "timings": {
                    "assembly_s": assembly.as_secs_f64(),
                    "solve_s": report.wall_time.as_secs_f64(),
                },
            });
            (level, u, lambda, report)
        }
    };
    write_solution(config, &system, &u, &lambda, &report)?;
    manifest.insert("levels".into(), json!([level]));
    manifest.insert("checks".into(), random_checks(&system, &u, &lambda, config.seed));
    Ok(report.converged)
}

fn sweep(config: &RunConfig, manifest: &mut Map<String, Value>) -> Result<bool, RunError> {
    let n = config.cube_levels().first().copied();
    let (blocks, assembly) = assemble(load(&config.mesh)?, config)?;
    let settings = settings(config);
    let mut rows = Vec::new();
    let mut solves = Vec::new();
    for &tau in &config.taus {
        let outcome = solve_and_measure(&CubeSignorini, &blocks, n.unwrap_or(0), tau, &settings)?;
        progress("sweep-tau", &outcome);
        solves.push(outcome_json(&outcome, Value::Null, n, None));
        rows.push(TauSweepRow::from(&outcome));
    }
    write_tau_sweep_csv(&rows, create(&config.out.join("tau_sweep.csv"))?)?;
    let all = rows.iter().all(|r| r.converged);
    manifest.insert(
        "levels".into(),
        json!([{
            "n": n,
            "mesh": mesh_stats(&blocks),
            "timings": { "assembly_s": assembly.as_secs_f64() },
        }]),
    );
    manifest.insert("sweep".into(), Value::Array(solves));
    Ok(all)
}

fn convergence(config: &RunConfig, manifest: &mut Map<String, Value>) -> Result<bool, RunError> {
    let settings = settings(config);
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for n in config.cube_levels() {
        let (blocks, assembly) = assemble(generate_cube_mesh(n)?, config)?;
        let tau = config.tau.tau(blocks.primal.hierarchy().coarse().h());
        let outcome = solve_and_measure(&CubeSignorini, &blocks, n, tau, &settings)?;
        progress(&format!("convergence n={n}"), &outcome);
        levels.push(outcome_json(&outcome, mesh_stats(&blocks), Some(n), Some(assembly)));
        rows.push(outcome);
    }
    let table = ConvergenceTable::from_rows(config.pairing, rows);
    write_convergence_csv(&table, create(&config.out.join("convergence.csv"))?)?;
    manifest.insert("levels".into(), Value::Array(levels));
    manifest.insert(
        "eoc".into(),
        json!({
            "err_V": eoc_json(&table.eoc_v),
            "err_L2_u": eoc_json(&table.eoc_l2_u),
            "err_L2_lambda": eoc_json(&table.eoc_l2_lambda),
            "running_err_V": table.running_eoc(),
        }),
    );
    Ok(table.all_converged())
}
