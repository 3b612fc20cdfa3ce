//! Weak Dirichlet and Signorini conditions on the multitrace system and the
//! fixed-point iteration that solves the resulting nonlinear problem.
//!
//! Each outer step solves the linear system
//!
//! ```text
//! [ W + β M_pp,D              K' - ½ M_pf,D + ½ M_pf,C ] [u]   [ β⟨g_D, v⟩_D + ⟨ψ - [P(u_n, λ_n)]₊, v⟩_C      ]
//! [ -K + ½ M_fp,D - ½ M_fp,C  V + τ⁻¹ M_ff,C           ] [λ] = [ ⟨g_D, μ⟩_D + τ⁻¹⟨ψ - [P(u_n, λ_n)]₊, μ⟩_C   ]
//! ```
//!
//! with `P(u, λ) = τ (u - g) - (λ - ψ)` evaluated pointwise by quadrature on
//! the contact boundary.

mod boundary;
pub mod cube;
mod gmres;

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::mesh::Region;
use crate::operators::{to_dense, OperatorBlocks};
use crate::spaces::SurfacePoint;

pub use boundary::{BoundaryError, BoundaryPoint, BoundaryQuadrature};
pub use gmres::{gmres, GmresError, GmresOutcome, GmresSettings};

#[derive(Debug, thiserror::Error)]
pub enum ContactError {
    #[error("beta_d must be non-negative and finite, got {0}")]
    InvalidBeta(f64),
    #[error("tau must be positive, got {0}")]
    InvalidTau(f64),
    #[error("tol must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("maxiter must be at least 1")]
    InvalidMaxIter,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0} preconditioner needs square off-role mass blocks")]
    PreconditionerUnavailable(PreconditionerKind),
    #[error("singular mass block in the preconditioner")]
    SingularPreconditioner,
    #[error("inner solve failed in outer iteration {outer}: {source}")]
    InnerSolve {
        outer: usize,
        #[source]
        source: GmresError,
    },
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

/// `max(0, x)`
#[inline]
pub fn pospart(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// `-max(0, -x)`
#[inline]
pub fn negpart(x: f64) -> f64 {
    if x < 0.0 {
        x
    } else {
        0.0
    }
}

/// `τ (u - g) - (λ - ψ)`
#[inline]
pub fn p_tau(u: f64, lambda: f64, g: f64, psi: f64, tau: f64) -> f64 {
    tau * (u - g) - (lambda - psi)
}

/// The two pointwise contact residuals
/// `R¹ = (g - u) + τ⁻¹ [P]₋` and `R² = τ⁻¹ ((ψ - λ) - [P]₊)`.
pub fn contact_residuals(u: f64, lambda: f64, g: f64, psi: f64, tau: f64) -> (f64, f64) {
    let p = p_tau(u, lambda, g, psi, tau);
    let r1 = (g - u) + negpart(p) / tau;
    let r2 = ((psi - lambda) - pospart(p)) / tau;
    (r1, r2)
}

/// A scalar field on the boundary.
#[derive(Clone, Default)]
pub enum TraceData {
    #[default]
    Zero,
    Function(Arc<dyn Fn(&SurfacePoint) -> f64 + Send + Sync>),
    /// Vertex values of a continuous piecewise linear function on the
    /// coarse mesh.
    Nodal(DVector<f64>),
    /// One value per coarse triangle.
    PerTriangle(DVector<f64>),
}

impl fmt::Debug for TraceData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceData::Zero => write!(f, "Zero"),
            TraceData::Function(_) => write!(f, "Function"),
            TraceData::Nodal(v) => write!(f, "Nodal({} values)", v.len()),
            TraceData::PerTriangle(v) => write!(f, "PerTriangle({} values)", v.len()),
        }
    }
}

impl TraceData {
    pub fn function(f: impl Fn(&SurfacePoint) -> f64 + Send + Sync + 'static) -> Self {
        TraceData::Function(Arc::new(f))
    }

    /// Value at a point. `vertices` maps the point's coarse triangle to its
    /// vertex indices for nodal data.
    pub fn eval(&self, p: &SurfacePoint, vertices: [usize; 3]) -> f64 {
        match self {
            TraceData::Zero => 0.0,
            TraceData::Function(f) => f(p),
            TraceData::Nodal(v) => (0..3).map(|k| p.bary[k] * v[vertices[k]]).sum(),
            TraceData::PerTriangle(v) => v[p.triangle],
        }
    }

    fn check(&self, vertices: usize, triangles: usize) -> Result<(), ContactError> {
        let (expected, found) = match self {
            TraceData::Nodal(v) => (vertices, v.len()),
            TraceData::PerTriangle(v) => (triangles, v.len()),
            _ => return Ok(()),
        };
        if expected != found {
            return Err(ContactError::DimensionMismatch { expected, found });
        }
        Ok(())
    }
}

/// Dirichlet data on the Dirichlet part, gap and flux bound on the contact
/// part of the boundary.
#[derive(Clone, Debug, Default)]
pub struct ProblemData {
    pub g_d: TraceData,
    pub g_c: TraceData,
    pub psi_c: TraceData,
}

/// How `τ` is chosen for a mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TauRule {
    Fixed(f64),
    /// `τ = c / h`
    OverH(f64),
}

impl Default for TauRule {
    fn default() -> Self {
        TauRule::OverH(0.5)
    }
}

impl TauRule {
    pub fn tau(self, h: f64) -> f64 {
        match self {
            TauRule::Fixed(t) => t,
            TauRule::OverH(c) => c / h,
        }
    }
}

impl fmt::Display for TauRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauRule::Fixed(t) => write!(f, "{t}"),
            TauRule::OverH(c) => write!(f, "c/h:{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NitscheParameters {
    pub beta_d: f64,
    pub tau: f64,
}

impl NitscheParameters {
    pub fn new(beta_d: f64, tau: f64) -> Result<Self, ContactError> {
        let p = NitscheParameters { beta_d, tau };
        p.validate()?;
        Ok(p)
    }

    /// Default `β_D = 0.01` and `τ = 0.5 / h`.
    pub fn for_mesh_size(h: f64) -> Self {
        NitscheParameters {
            beta_d: 0.01,
            tau: TauRule::default().tau(h),
        }
    }

    pub fn validate(&self) -> Result<(), ContactError> {
        if !(self.beta_d >= 0.0 && self.beta_d.is_finite()) {
            return Err(ContactError::InvalidBeta(self.beta_d));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ContactError::InvalidTau(self.tau));
        }
        Ok(())
    }
}

/// Left preconditioner of the inner solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PreconditionerKind {
    None,
    /// `MassOffRole` when the off-role mass pairing is square, otherwise
    /// `MassGram`.
    #[default]
    Auto,
    /// Inverse Gram matrix of each test space on its own block row.
    MassGram,
    /// Inverse of the primal-flux mass pairing, which maps each block row
    /// residual to the coefficients of the other space.
    MassOffRole,
}

impl PreconditionerKind {
    pub fn name(self) -> &'static str {
        match self {
            PreconditionerKind::None => "none",
            PreconditionerKind::Auto => "auto",
            PreconditionerKind::MassGram => "mass-gram",
            PreconditionerKind::MassOffRole => "mass-off-role",
        }
    }
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PreconditionerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(PreconditionerKind::None),
            "auto" => Ok(PreconditionerKind::Auto),
            "mass-gram" => Ok(PreconditionerKind::MassGram),
            "mass-off-role" => Ok(PreconditionerKind::MassOffRole),
            other => Err(format!(
                "unknown preconditioner '{other}' (expected auto, none, mass-gram or mass-off-role)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationControls {
    pub tol: f64,
    pub maxiter: usize,
    pub gmres: GmresSettings,
    pub preconditioner: PreconditionerKind,
    /// Degree of the triangle rule for the boundary data and the contact
    /// nonlinearity.
    pub contact_degree: usize,
}

impl Default for IterationControls {
    fn default() -> Self {
        IterationControls {
            tol: 0.05,
            maxiter: 200,
            gmres: GmresSettings::default(),
            preconditioner: PreconditionerKind::default(),
            contact_degree: 6,
        }
    }
}

impl IterationControls {
    pub fn validate(&self) -> Result<(), ContactError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ContactError::InvalidTolerance(self.tol));
        }
        if self.maxiter == 0 {
            return Err(ContactError::InvalidMaxIter);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub outer_iterations: usize,
    pub inner_iterations: Vec<usize>,
    pub inner_residuals: Vec<f64>,
    /// Surrogate norm of each update.
    pub update_norms: Vec<f64>,
    pub converged: bool,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn average_inner_iterations(&self) -> f64 {
        if self.inner_iterations.is_empty() {
            0.0
        } else {
            self.inner_iterations.iter().sum::<usize>() as f64 / self.inner_iterations.len() as f64
        }
    }
}

/// Factorized block preconditioner.
pub struct Preconditioner {
    kind: PreconditionerKind,
    np: usize,
    first: Option<LU<f64, Dyn, Dyn>>,
    second: Option<LU<f64, Dyn, Dyn>>,
}

impl Preconditioner {
    pub fn new(blocks: &OperatorBlocks, kind: PreconditionerKind) -> Result<Self, ContactError> {
        let np = blocks.primal_dofs();
        let kind = match kind {
            PreconditionerKind::Auto if np == blocks.flux_dofs() => PreconditionerKind::MassOffRole,
            PreconditionerKind::Auto => PreconditionerKind::MassGram,
            other => other,
        };
        let (first, second) = match kind {
            PreconditionerKind::Auto => unreachable!("resolved above"),
            PreconditionerKind::None => (None, None),
            PreconditionerKind::MassGram => (
                Some(to_dense(&blocks.mass.primal_primal).lu()),
                Some(to_dense(&blocks.mass.flux_flux).lu()),
            ),
            PreconditionerKind::MassOffRole => {
                if np != blocks.flux_dofs() {
                    return Err(ContactError::PreconditionerUnavailable(kind));
                }
                let m = to_dense(&blocks.mass.primal_flux);
                (Some(m.transpose().lu()), Some(m.lu()))
            }
        };
        for lu in first.iter().chain(&second) {
            if !lu.is_invertible() {
                return Err(ContactError::SingularPreconditioner);
            }
        }
        Ok(Preconditioner {
            kind,
            np,
            first,
            second,
        })
    }

    /// The kind in use, with `Auto` resolved.
    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    /// Apply to a residual with primal-test rows first.
    pub fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        let (Some(first), Some(second)) = (&self.first, &self.second) else {
            return r.clone();
        };
        let np = self.np;
        let rp = r.rows(0, np).into_owned();
        let rf = r.rows(np, r.len() - np).into_owned();
        let solve =
            |lu: &LU<f64, Dyn, Dyn>, b: &DVector<f64>| lu.solve(b).expect("factorization checked at construction");
        let mut out = DVector::zeros(r.len());
        match self.kind {
            PreconditionerKind::MassOffRole => {
                // the flux-test residual determines the primal coefficients
                out.rows_mut(0, np).copy_from(&solve(first, &rf));
                out.rows_mut(np, r.len() - np).copy_from(&solve(second, &rp));
            }
            _ => {
                out.rows_mut(0, np).copy_from(&solve(first, &rp));
                out.rows_mut(np, r.len() - np).copy_from(&solve(second, &rf));
            }
        }
        out
    }
}

/// Dense matrix of the linear part of each outer step.
pub fn assemble_lhs(blocks: &OperatorBlocks, params: &NitscheParameters) -> Result<DMatrix<f64>, ContactError> {
    params.validate()?;
    let (np, nf) = (blocks.primal_dofs(), blocks.flux_dofs());
    let m = &blocks.mass;
    let pp_d = to_dense(&m.primal_primal_d);
    let pf_d = to_dense(&m.primal_flux_d);
    let pf_c = to_dense(&m.primal_flux_c);
    let ff_c = to_dense(&m.flux_flux_c);
    let mut a = blocks.multitrace_matrix();
    let coupling = (pf_c - pf_d) * 0.5;
    let mut top_left = a.view_mut((0, 0), (np, np));
    top_left += pp_d * params.beta_d;
    let mut top_right = a.view_mut((0, np), (np, nf));
    top_right += &coupling;
    let mut bottom_left = a.view_mut((np, 0), (nf, np));
    bottom_left -= coupling.transpose();
    let mut bottom_right = a.view_mut((np, np), (nf, nf));
    bottom_right += ff_c / params.tau;
    Ok(a)
}

/// Everything needed to run outer iterations for one mesh, pairing and
/// parameter set.
pub struct ContactSystem<'a> {
    blocks: &'a OperatorBlocks,
    params: NitscheParameters,
    lhs: DMatrix<f64>,
    contact: BoundaryQuadrature,
    gap: Vec<f64>,
    psi: Vec<f64>,
    /// Dirichlet load plus the `ψ` part of the contact load.
    linear_rhs: DVector<f64>,
}

impl<'a> ContactSystem<'a> {
    pub fn new(
        blocks: &'a OperatorBlocks,
        data: &ProblemData,
        params: NitscheParameters,
        contact_degree: usize,
    ) -> Result<Self, ContactError> {
        let lhs = assemble_lhs(blocks, &params)?;
        let coarse = blocks.primal.hierarchy().coarse();
        for d in [&data.g_d, &data.g_c, &data.psi_c] {
            d.check(coarse.vertex_count(), coarse.triangle_count())?;
        }
        let eval = |field: &TraceData, q: &BoundaryQuadrature| -> Vec<f64> {
            q.points
                .iter()
                .map(|p| field.eval(&p.point, coarse.triangle(p.point.triangle)))
                .collect()
        };
        let (np, nf) = (blocks.primal_dofs(), blocks.flux_dofs());
        let dirichlet = BoundaryQuadrature::new(&blocks.primal, &blocks.flux, Region::Dirichlet, contact_degree)?;
        let g_d = eval(&data.g_d, &dirichlet);
        let mut linear_rhs = DVector::zeros(np + nf);
        linear_rhs
            .rows_mut(0, np)
            .axpy(params.beta_d, &dirichlet.primal_load(&g_d, np), 0.0);
        linear_rhs.rows_mut(np, nf).copy_from(&dirichlet.flux_load(&g_d, nf));

        let contact = BoundaryQuadrature::new(&blocks.primal, &blocks.flux, Region::Contact, contact_degree)?;
        let gap = eval(&data.g_c, &contact);
        let psi = eval(&data.psi_c, &contact);
        let mut system = ContactSystem {
            blocks,
            params,
            lhs,
            contact,
            gap,
            psi,
            linear_rhs,
        };
        let contact_load = system.contact_load(&system.psi);
        system.linear_rhs += contact_load;
        Ok(system)
    }

    pub fn blocks(&self) -> &OperatorBlocks {
        self.blocks
    }

    pub fn params(&self) -> &NitscheParameters {
        &self.params
    }

    pub fn lhs(&self) -> &DMatrix<f64> {
        &self.lhs
    }

    pub fn contact_quadrature(&self) -> &BoundaryQuadrature {
        &self.contact
    }

    /// Gap and flux bound at the contact quadrature points.
    pub fn contact_data(&self) -> (&[f64], &[f64]) {
        (&self.gap, &self.psi)
    }

    /// `(⟨f, v⟩_C, τ⁻¹⟨f, μ⟩_C)` stacked.
    fn contact_load(&self, f: &[f64]) -> DVector<f64> {
        let (np, nf) = (self.blocks.primal_dofs(), self.blocks.flux_dofs());
        let mut out = DVector::zeros(np + nf);
        out.rows_mut(0, np).copy_from(&self.contact.primal_load(f, np));
        out.rows_mut(np, nf)
            .copy_from(&(self.contact.flux_load(f, nf) / self.params.tau));
        out
    }

    /// `P^τ(u, λ)` at every contact quadrature point.
    pub fn p_tau_values(&self, u: &DVector<f64>, lambda: &DVector<f64>) -> Vec<f64> {
        let uq = self.contact.primal_values(u);
        let lq = self.contact.flux_values(lambda);
        (0..uq.len())
            .map(|i| p_tau(uq[i], lq[i], self.gap[i], self.psi[i], self.params.tau))
            .collect()
    }

    /// Right-hand side of the outer step from the iterate `(u_n, λ_n)`.
    pub fn rhs(&self, u: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
        let active: Vec<f64> = self.p_tau_values(u, lambda).into_iter().map(pospart).collect();
        &self.linear_rhs - self.contact_load(&active)
    }

    /// Residual of the full nonlinear discrete problem at `(u, λ)`.
    pub fn nonlinear_residual(&self, u: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
        let x = stack(u, lambda);
        &self.lhs * x - self.rhs(u, lambda)
    }

    /// The full contact form `½⟨λ, v⟩ + ⟨τ⁻¹λ - ½u, μ⟩ + ⟨[P(u, λ)]₊, v + τ⁻¹μ⟩`
    /// on the contact boundary, by quadrature.
    pub fn contact_form(
        &self,
        (u, lambda): (&DVector<f64>, &DVector<f64>),
        (v, mu): (&DVector<f64>, &DVector<f64>),
    ) -> f64 {
        let tau = self.params.tau;
        let uq = self.contact.primal_values(u);
        let lq = self.contact.flux_values(lambda);
        let vq = self.contact.primal_values(v);
        let mq = self.contact.flux_values(mu);
        let integrand: Vec<f64> = (0..uq.len())
            .map(|i| {
                let p = pospart(p_tau(uq[i], lq[i], self.gap[i], self.psi[i], tau));
                0.5 * lq[i] * vq[i] + (lq[i] / tau - 0.5 * uq[i]) * mq[i] + p * (vq[i] + mq[i] / tau)
            })
            .collect();
        self.contact.integrate(&integrand)
    }

    /// Run outer iterations from `(u0, λ0)`.
    pub fn solve(
        &self,
        controls: &IterationControls,
        u0: &DVector<f64>,
        lambda0: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>, SolveReport), ContactError> {
        controls.validate()?;
        let (np, nf) = (self.blocks.primal_dofs(), self.blocks.flux_dofs());
        check_len(np, u0)?;
        check_len(nf, lambda0)?;
        let start = Instant::now();
        let pre = Preconditioner::new(self.blocks, controls.preconditioner)?;
        let mut report = SolveReport::default();
        let mut u = u0.clone();
        let mut lambda = lambda0.clone();
        for outer in 1..=controls.maxiter {
            let b = self.rhs(&u, &lambda);
            let x0 = stack(&u, &lambda);
            let out = gmres(&self.lhs, &b, x0, |r| pre.apply(r), &controls.gmres)
                .map_err(|source| ContactError::InnerSolve { outer, source })?;
            let u_next = out.x.rows(0, np).into_owned();
            let l_next = out.x.rows(np, nf).into_owned();
            let update = self.blocks.surrogate_norm(&(&u_next - &u), &(&l_next - &lambda));
            report.outer_iterations = outer;
            report.inner_iterations.push(out.iterations);
            report.inner_residuals.push(out.relative_residual);
            report.update_norms.push(update);
            u = u_next;
            lambda = l_next;
            if update < controls.tol {
                report.converged = true;
                break;
            }
        }
        report.wall_time = start.elapsed();
        Ok((u, lambda, report))
    }
}

fn check_len(expected: usize, v: &DVector<f64>) -> Result<(), ContactError> {
    if v.len() != expected {
        return Err(ContactError::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

fn stack(u: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(u.len() + lambda.len());
    x.rows_mut(0, u.len()).copy_from(u);
    x.rows_mut(u.len(), lambda.len()).copy_from(lambda);
    x
}

/// Right-hand side of one outer step; builds the boundary quadrature on
/// every call.
pub fn assemble_rhs(
    blocks: &OperatorBlocks,
    data: &ProblemData,
    params: &NitscheParameters,
    u: &DVector<f64>,
    lambda: &DVector<f64>,
) -> Result<DVector<f64>, ContactError> {
    check_len(blocks.primal_dofs(), u)?;
    check_len(blocks.flux_dofs(), lambda)?;
    let system = ContactSystem::new(blocks, data, *params, IterationControls::default().contact_degree)?;
    Ok(system.rhs(u, lambda))
}

pub fn fixed_point_solve(
    blocks: &OperatorBlocks,
    data: &ProblemData,
    params: &NitscheParameters,
    controls: &IterationControls,
    u0: &DVector<f64>,
    lambda0: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>, SolveReport), ContactError> {
    let system = ContactSystem::new(blocks, data, *params, controls.contact_degree)?;
    system.solve(controls, u0, lambda0)
}

/// One preconditioned GMRES solve of a block system with primal rows first.
pub fn inner_solve(
    lhs: &DMatrix<f64>,
    rhs: &DVector<f64>,
    preconditioner: &Preconditioner,
    settings: &GmresSettings,
) -> Result<GmresOutcome, GmresError> {
    gmres(
        lhs,
        rhs,
        DVector::zeros(rhs.len()),
        |r| preconditioner.apply(r),
        settings,
    )
}

/// Largest `|R¹ - R²|` over the contact quadrature points.
pub fn residual_equivalence_check(system: &ContactSystem<'_>, u: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
    let uq = system.contact.primal_values(u);
    let lq = system.contact.flux_values(lambda);
    (0..uq.len())
        .map(|i| {
            let (r1, r2) = contact_residuals(uq[i], lq[i], system.gap[i], system.psi[i], system.params.tau);
            (r1 - r2).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeValue {
    pub value: f64,
    /// Magnitude of the terms that make up `value`, for relative checks.
    pub scale: f64,
}

/// `B_C[(v, μ), δ] - B_C[(w, η), δ] - τ⁻¹‖μ - η + [P(v, μ)]₊ - [P(w, η)]₊‖²_C`
/// with `δ = (v - w, μ - η)`.
pub fn monotonicity_probe(
    system: &ContactSystem<'_>,
    (v, mu): (&DVector<f64>, &DVector<f64>),
    (w, eta): (&DVector<f64>, &DVector<f64>),
) -> ProbeValue {
    let dv = v - w;
    let dmu = mu - eta;
    let first = system.contact_form((v, mu), (&dv, &dmu));
    let second = system.contact_form((w, eta), (&dv, &dmu));
    let pv = system.p_tau_values(v, mu);
    let pw = system.p_tau_values(w, eta);
    let dm = system.contact.flux_values(&dmu);
    let jump: Vec<f64> = (0..dm.len()).map(|i| dm[i] + pospart(pv[i]) - pospart(pw[i])).collect();
    let square = system.contact.integrate_product(&jump, &jump) / system.params.tau;
    ProbeValue {
        value: first - second - square,
        scale: first.abs() + second.abs() + square,
    }
}

#[cfg(test)]
mod tests;
