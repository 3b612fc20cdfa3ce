//! Interior reconstruction, error measurement, refinement studies and
//! output files.

mod export;

use std::sync::Arc;

use nalgebra::DVector;

use crate::contact_solver::{
    cube, pospart, ContactError, ContactSystem, IterationControls, NitscheParameters, ProblemData, SolveReport, TauRule,
};
use crate::mesh::{generate_cube_mesh, MeshError, Point3, SurfaceMesh, Vector3};
use crate::operators::{spmv, OperatorBlocks, OperatorError, Pairing, FOUR_PI};
use crate::quadrature::{gauss_triangle, QuadratureError, QuadratureOrders};
use crate::spaces::{interpolate, FunctionSpace, Level, MeshHierarchy, SpaceError, SurfacePoint};

pub use export::{active_indicator, write_convergence_csv, write_surface_vtk, write_tau_sweep_csv};

#[derive(Debug, thiserror::Error)]
pub enum PostprocessError {
    #[error("a convergence study needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("levels must be strictly refining (mesh sizes {0} then {1})")]
    NotRefining(f64, f64),
    #[error("tau values must be positive, got {0}")]
    InvalidTau(f64),
    #[error("coefficient vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Why an interior point was not evaluated.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("point is {distance:.3e} from the boundary, closer than the required {required:.3e}")]
pub struct TooClose {
    pub distance: f64,
    pub required: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteriorOptions {
    /// Degree of the triangle rule applied on every panel.
    pub degree: usize,
    /// Required distance to the boundary in units of the largest coarse
    /// panel diameter.
    pub margin: f64,
}

impl Default for InteriorOptions {
    fn default() -> Self {
        InteriorOptions { degree: 8, margin: 1.0 }
    }
}

/// Euclidean distance from `p` to the triangle with corners `a, b, c`.
pub fn point_triangle_distance(p: &Point3, [a, b, c]: &[Point3; 3]) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (p - (a + ab * v + ac * w)).norm()
}

pub fn distance_to_surface(mesh: &SurfaceMesh, p: &Point3) -> f64 {
    (0..mesh.triangle_count())
        .map(|t| point_triangle_distance(p, &mesh.corners(t)))
        .fold(f64::INFINITY, f64::min)
}

/// `ũ(x) = ∫ G(x, y) λ(y) dy - ∫ ∂G/∂ν_y(x, y) u(y) dy` at interior points.
pub fn evaluate_interior(
    primal: &FunctionSpace,
    flux: &FunctionSpace,
    u: &DVector<f64>,
    lambda: &DVector<f64>,
    points: &[Point3],
    options: &InteriorOptions,
) -> Result<Vec<Result<f64, TooClose>>, PostprocessError> {
    check_len(primal.dof_count(), u)?;
    check_len(flux.dof_count(), lambda)?;
    let level = if flux.native_level() == Level::Refined || primal.native_level() == Level::Refined {
        Level::Refined
    } else {
        Level::Coarse
    };
    let hierarchy = flux.hierarchy();
    let mesh = hierarchy.mesh(level);
    let coarse = hierarchy.coarse();
    let rule = gauss_triangle(options.degree)?;
    let primal_bases = primal.local_bases(level)?;
    let flux_bases = flux.local_bases(level)?;
    // (y, ν, w u(y), w λ(y)) for every quadrature point
    let mut samples: Vec<(Point3, Vector3, f64, f64)> = Vec::new();
    for t in 0..mesh.triangle_count() {
        let jac = 2.0 * mesh.area(t);
        let n = mesh.normal(t);
        let (pb, fb) = (&primal_bases[t], &flux_bases[t]);
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let pv = pb.values(b);
            let fv = fb.values(b);
            let uy: f64 = (0..pb.len()).map(|a| pv[a] * u[pb.dof(a)]).sum();
            let ly: f64 = (0..fb.len()).map(|a| fv[a] * lambda[fb.dof(a)]).sum();
            samples.push((mesh.point_at(t, *b), n, w * jac * uy, w * jac * ly));
        }
    }
    let required = options.margin * coarse.h();
    Ok(points
        .iter()
        .map(|x| {
            let distance = distance_to_surface(coarse, x);
            if distance <= required {
                return Err(TooClose { distance, required });
            }
            let mut sum = 0.0;
            for (y, n, wu, wl) in &samples {
                let d = x - y;
                let r = d.norm();
                sum += wl / r - wu * d.dot(n) / (r * r * r);
            }
            Ok(sum / FOUR_PI)
        })
        .collect())
}

fn check_len(expected: usize, v: &DVector<f64>) -> Result<(), PostprocessError> {
    if v.len() != expected {
        return Err(PostprocessError::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

/// A problem with known solution on a family of meshes.
pub trait ManufacturedProblem: Send + Sync {
    fn name(&self) -> &str;
    fn mesh(&self, n: usize) -> Result<SurfaceMesh, PostprocessError>;
    fn data(&self) -> ProblemData;
    fn trace(&self, p: &SurfacePoint) -> f64;
    fn flux(&self, p: &SurfacePoint) -> f64;
    fn interior(&self, x: &Point3) -> f64;
    /// Points where the interior reconstruction is compared.
    fn probe_points(&self) -> Vec<Point3>;
    /// The expected active region on the contact boundary, if known.
    fn expected_active(&self, _p: &SurfacePoint) -> Option<bool> {
        None
    }
}

/// The built-in Signorini problem on the unit cube.
#[derive(Clone, Copy, Debug, Default)]
pub struct CubeSignorini;

impl ManufacturedProblem for CubeSignorini {
    fn name(&self) -> &str {
        cube::NAME
    }

    fn mesh(&self, n: usize) -> Result<SurfaceMesh, PostprocessError> {
        Ok(generate_cube_mesh(n)?)
    }

    fn data(&self) -> ProblemData {
        cube::problem()
    }

    fn trace(&self, p: &SurfacePoint) -> f64 {
        cube::exact_u(&p.x)
    }

    fn flux(&self, p: &SurfacePoint) -> f64 {
        cube::exact_flux(p)
    }

    fn interior(&self, x: &Point3) -> f64 {
        cube::exact_u(x)
    }

    fn probe_points(&self) -> Vec<Point3> {
        vec![Point3::new(0.5, 0.5, 0.5)]
    }

    fn expected_active(&self, p: &SurfacePoint) -> Option<bool> {
        Some(p.x.x <= 0.5)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteriorError {
    pub point: Point3,
    pub exact: f64,
    /// `None` when the point is too close to the boundary.
    pub computed: Option<f64>,
}

impl InteriorError {
    pub fn error(&self) -> Option<f64> {
        self.computed.map(|c| (c - self.exact).abs())
    }
}

/// Contact quantities of a discrete solution.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ContactDiagnostics {
    /// Area of `{P^τ > 0}` measured by quadrature.
    pub active_area: f64,
    /// `∫ (λ - ψ)(u - g)` over the contact boundary.
    pub complementarity: f64,
    /// Area of the symmetric difference between the measured and the
    /// expected active set, when the latter is known.
    pub active_set_error: Option<f64>,
}

/// Whether a contact point is expected in the active set, if known.
pub type ActiveOracle<'a> = dyn Fn(&SurfacePoint) -> Option<bool> + 'a;

pub fn contact_diagnostics(
    system: &ContactSystem<'_>,
    u: &DVector<f64>,
    lambda: &DVector<f64>,
    expected: Option<&ActiveOracle<'_>>,
) -> ContactDiagnostics {
    let q = system.contact_quadrature();
    let (gap, psi) = system.contact_data();
    let p = system.p_tau_values(u, lambda);
    let uq = q.primal_values(u);
    let lq = q.flux_values(lambda);
    let active: Vec<f64> = p.iter().map(|&v| if pospart(v) > 0.0 { 1.0 } else { 0.0 }).collect();
    let product: Vec<f64> = (0..p.len()).map(|i| (lq[i] - psi[i]) * (uq[i] - gap[i])).collect();
    let active_set_error = expected.and_then(|f| {
        let mut mismatch = Vec::with_capacity(p.len());
        for (point, a) in q.points.iter().zip(&active) {
            let e = f(&point.point)?;
            mismatch.push(if e == (*a > 0.0) { 0.0 } else { 1.0 });
        }
        Some(q.integrate(&mismatch))
    });
    ContactDiagnostics {
        active_area: q.integrate(&active),
        complementarity: q.integrate(&product),
        active_set_error,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub dofs: usize,
    /// Surrogate product norm of `(u_h - I u, λ_h - I λ)`.
    pub err_v: f64,
    pub err_l2_u: f64,
    pub err_l2_lambda: f64,
    pub interior: Vec<InteriorError>,
    pub contact: Option<ContactDiagnostics>,
}

/// Errors against the interpolants of the exact traces.
pub fn error_norms(
    blocks: &OperatorBlocks,
    u: &DVector<f64>,
    lambda: &DVector<f64>,
    exact_trace: impl Fn(&SurfacePoint) -> f64,
    exact_flux: impl Fn(&SurfacePoint) -> f64,
) -> Result<ErrorReport, PostprocessError> {
    check_len(blocks.primal_dofs(), u)?;
    check_len(blocks.flux_dofs(), lambda)?;
    let iu = interpolate(&blocks.primal, exact_trace)?;
    let il = interpolate(&blocks.flux, exact_flux)?;
    let eu = u - iu.coefficients();
    let el = lambda - il.coefficients();
    let l2 = |m, e: &DVector<f64>| spmv(m, e).dot(e).max(0.0).sqrt();
    Ok(ErrorReport {
        h: blocks.primal.hierarchy().coarse().h(),
        dofs: blocks.primal_dofs() + blocks.flux_dofs(),
        err_v: blocks.surrogate_norm(&eu, &el),
        err_l2_u: l2(&blocks.mass.primal_primal, &eu),
        err_l2_lambda: l2(&blocks.mass.flux_flux, &el),
        interior: Vec::new(),
        contact: None,
    })
}

/// Least-squares line through `(log h, log err)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EocFit {
    pub slope: f64,
    /// Root mean square deviation of the points from the line.
    pub residual: f64,
}

/// `None` with fewer than two usable points; zero or non-finite errors are
/// skipped.
pub fn fit_eoc(h: &[f64], err: &[f64]) -> Option<EocFit> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(err)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Some(EocFit { slope, residual })
}

/// Parameters shared by the drivers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudySettings {
    pub beta_d: f64,
    pub tau_rule: TauRule,
    pub controls: IterationControls,
    pub orders: QuadratureOrders,
    pub interior: InteriorOptions,
}

impl Default for StudySettings {
    fn default() -> Self {
        StudySettings {
            beta_d: 0.01,
            tau_rule: TauRule::default(),
            controls: IterationControls::default(),
            orders: QuadratureOrders::default(),
            interior: InteriorOptions::default(),
        }
    }
}

/// One solve of a study.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub n: usize,
    pub tau: f64,
    pub errors: ErrorReport,
    pub report: SolveReport,
    /// Set when the solve aborted; errors are then NaN.
    pub failure: Option<String>,
    pub u: DVector<f64>,
    pub lambda: DVector<f64>,
}

impl SolveOutcome {
    pub fn converged(&self) -> bool {
        self.failure.is_none() && self.report.converged
    }
}

pub fn assemble_level(
    problem: &dyn ManufacturedProblem,
    pairing: Pairing,
    n: usize,
    orders: QuadratureOrders,
) -> Result<OperatorBlocks, PostprocessError> {
    let mesh = Arc::new(problem.mesh(n)?);
    let hierarchy = Arc::new(MeshHierarchy::new(mesh));
    Ok(OperatorBlocks::assemble(hierarchy, pairing, orders)?)
}

/// Solve on assembled blocks from a zero start and measure all errors.
/// Solver failures are recorded in the outcome rather than returned.
pub fn solve_and_measure(
    problem: &dyn ManufacturedProblem,
    blocks: &OperatorBlocks,
    n: usize,
    tau: f64,
    settings: &StudySettings,
) -> Result<SolveOutcome, PostprocessError> {
    let params = NitscheParameters::new(settings.beta_d, tau)?;
    let data = problem.data();
    let system = ContactSystem::new(blocks, &data, params, settings.controls.contact_degree)?;
    let u0 = DVector::zeros(blocks.primal_dofs());
    let l0 = DVector::zeros(blocks.flux_dofs());
    let nan_errors = |blocks: &OperatorBlocks| ErrorReport {
        h: blocks.primal.hierarchy().coarse().h(),
        dofs: blocks.primal_dofs() + blocks.flux_dofs(),
        err_v: f64::NAN,
        err_l2_u: f64::NAN,
        err_l2_lambda: f64::NAN,
        interior: Vec::new(),
        contact: None,
    };
    let (u, lambda, report) = match system.solve(&settings.controls, &u0, &l0) {
        Ok(r) => r,
        Err(e @ ContactError::InnerSolve { .. }) => {
            return Ok(SolveOutcome {
                n,
                tau,
                errors: nan_errors(blocks),
                report: SolveReport::default(),
                failure: Some(e.to_string()),
                u: u0,
                lambda: l0,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut errors = error_norms(blocks, &u, &lambda, |p| problem.trace(p), |p| problem.flux(p))?;
    let points = problem.probe_points();
    let values = evaluate_interior(&blocks.primal, &blocks.flux, &u, &lambda, &points, &settings.interior)?;
    errors.interior = points
        .iter()
        .zip(values)
        .map(|(x, v)| InteriorError {
            point: *x,
            exact: problem.interior(x),
            computed: v.ok(),
        })
        .collect();
    let expected = |p: &SurfacePoint| problem.expected_active(p);
    errors.contact = Some(contact_diagnostics(&system, &u, &lambda, Some(&expected)));
    Ok(SolveOutcome {
        n,
        tau,
        errors,
        report,
        failure: None,
        u,
        lambda,
    })
}

#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub pairing: Pairing,
    pub rows: Vec<SolveOutcome>,
    pub eoc_v: Option<EocFit>,
    pub eoc_l2_u: Option<EocFit>,
    pub eoc_l2_lambda: Option<EocFit>,
}

impl ConvergenceTable {
    pub fn from_rows(pairing: Pairing, rows: Vec<SolveOutcome>) -> Self {
        let h: Vec<f64> = rows.iter().map(|r| r.errors.h).collect();
        let fit = |f: fn(&ErrorReport) -> f64| {
            let e: Vec<f64> = rows.iter().map(|r| f(&r.errors)).collect();
            fit_eoc(&h, &e)
        };
        ConvergenceTable {
            pairing,
            eoc_v: fit(|e| e.err_v),
            eoc_l2_u: fit(|e| e.err_l2_u),
            eoc_l2_lambda: fit(|e| e.err_l2_lambda),
            rows,
        }
    }

    /// Slope between each level and the previous one.
    pub fn running_eoc(&self) -> Vec<Option<f64>> {
        let mut out = vec![None];
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0].errors, &w[1].errors);
            out.push(fit_eoc(&[a.h, b.h], &[a.err_v, b.err_v]).map(|f| f.slope));
        }
        out.truncate(self.rows.len());
        out
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(SolveOutcome::converged)
    }
}

pub fn run_convergence_study(
    problem: &dyn ManufacturedProblem,
    pairing: Pairing,
    settings: &StudySettings,
    levels: &[usize],
) -> Result<ConvergenceTable, PostprocessError> {
    if levels.len() < 2 {
        return Err(PostprocessError::TooFewLevels(levels.len()));
    }
    let mut rows = Vec::with_capacity(levels.len());
    let mut last_h = f64::INFINITY;
    for &n in levels {
        let blocks = assemble_level(problem, pairing, n, settings.orders)?;
        let h = blocks.primal.hierarchy().coarse().h();
        if h >= last_h {
            return Err(PostprocessError::NotRefining(last_h, h));
        }
        last_h = h;
        let tau = settings.tau_rule.tau(h);
        rows.push(solve_and_measure(problem, &blocks, n, tau, settings)?);
    }
    Ok(ConvergenceTable::from_rows(pairing, rows))
}

#[derive(Clone, Debug)]
pub struct TauSweepRow {
    pub tau: f64,
    pub err_v: f64,
    pub outer_iterations: usize,
    pub average_inner_iterations: f64,
    pub converged: bool,
}

impl From<&SolveOutcome> for TauSweepRow {
    fn from(o: &SolveOutcome) -> Self {
        TauSweepRow {
            tau: o.tau,
            err_v: o.errors.err_v,
            outer_iterations: o.report.outer_iterations,
            average_inner_iterations: o.report.average_inner_iterations(),
            converged: o.converged(),
        }
    }
}

/// One solve per `τ` on a single assembled mesh.
pub fn run_tau_sweep(
    problem: &dyn ManufacturedProblem,
    pairing: Pairing,
    n: usize,
    taus: &[f64],
    settings: &StudySettings,
) -> Result<Vec<SolveOutcome>, PostprocessError> {
    if let Some(&bad) = taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(PostprocessError::InvalidTau(bad));
    }
    let blocks = assemble_level(problem, pairing, n, settings.orders)?;
    taus.iter()
        .map(|&tau| solve_and_measure(problem, &blocks, n, tau, settings))
        .collect()
}
