//! Boundary integral operators of the Laplace equation and their Galerkin
//! matrices.
//!
//! * `V` single layer: `∬ φ_i(x) G(x, y) ψ_j(y)`
//! * `K` double layer: `∬ φ_i(x) ∂G/∂ν_y(x, y) ψ_j(y)`, flux test, primal trial
//! * `K'` adjoint double layer: transpose of `K`
//! * `W` hypersingular, via surface curls: `∬ G(x, y) curl φ_i(x) · curl φ_j(y)`
//!
//! with `G(x, y) = 1 / (4π |x - y|)`. Spaces involving DUAL0 are integrated on
//! the barycentric refinement.

mod assembly;
mod dump;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::mesh::{Point3, Region, Vector3};
use crate::quadrature::{QuadratureError, QuadratureOrders};
use crate::spaces::{FunctionSpace, Level, MeshHierarchy, SpaceError, SpaceKind};

#[cfg(test)]
use assembly::combine;
use assembly::{assemble_dense, triangle_rule, Kernel, PairIntegrator};
pub use dump::{read_blocks, write_blocks, DumpError, DumpedBlocks};

pub(crate) const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum OperatorError {
    #[error("green's function is singular at coincident points")]
    CoincidentPoints,
    #[error("test and trial spaces live on different meshes")]
    MeshMismatch,
    #[error("{operator} needs {expected} spaces, got {found:?}")]
    WrongSpace {
        operator: &'static str,
        expected: &'static str,
        found: SpaceKind,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

pub fn green(x: &Point3, y: &Point3) -> Result<f64, OperatorError> {
    let r = (x - y).norm();
    if r == 0.0 {
        return Err(OperatorError::CoincidentPoints);
    }
    Ok(1.0 / (FOUR_PI * r))
}

/// `∂G/∂ν_y (x, y) = (x - y) · ν_y / (4π |x - y|^3)`.
pub fn green_normal_derivative(x: &Point3, y: &Point3, ny: &Vector3) -> Result<f64, OperatorError> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(OperatorError::CoincidentPoints);
    }
    Ok(d.dot(ny) / (FOUR_PI * r * r * r))
}

fn integration_level(test: &FunctionSpace, trial: &FunctionSpace) -> Level {
    if test.native_level() == Level::Refined || trial.native_level() == Level::Refined {
        Level::Refined
    } else {
        Level::Coarse
    }
}

fn check_pair(test: &FunctionSpace, trial: &FunctionSpace) -> Result<Level, OperatorError> {
    if !test.same_mesh(trial) {
        return Err(OperatorError::MeshMismatch);
    }
    Ok(integration_level(test, trial))
}

fn require_flux(op: &'static str, s: &FunctionSpace) -> Result<(), OperatorError> {
    match s.kind() {
        SpaceKind::DP0 | SpaceKind::Dual0 => Ok(()),
        found => Err(OperatorError::WrongSpace {
            operator: op,
            expected: "flux (DP0 or DUAL0)",
            found,
        }),
    }
}

fn require_p1(op: &'static str, s: &FunctionSpace) -> Result<(), OperatorError> {
    match s.kind() {
        SpaceKind::P1 => Ok(()),
        found => Err(OperatorError::WrongSpace {
            operator: op,
            expected: "P1",
            found,
        }),
    }
}

fn assemble_kernel(
    kernel: Kernel,
    test: &FunctionSpace,
    trial: &FunctionSpace,
    orders: QuadratureOrders,
) -> Result<DMatrix<f64>, OperatorError> {
    let level = check_pair(test, trial)?;
    let mesh = test.hierarchy().mesh(level);
    let test_bases = test.local_bases(level)?;
    let trial_bases = trial.local_bases(level)?;
    let symmetric = kernel == Kernel::SingleLayer && test.kind() == trial.kind();
    let integrator = PairIntegrator::new(mesh, kernel, &test_bases, &trial_bases, orders)?;
    Ok(assemble_dense(
        &integrator,
        test.dof_count(),
        trial.dof_count(),
        symmetric,
    ))
}

pub fn assemble_single_layer(
    test: &FunctionSpace,
    trial: &FunctionSpace,
    orders: QuadratureOrders,
) -> Result<DMatrix<f64>, OperatorError> {
    require_flux("single layer", test)?;
    require_flux("single layer", trial)?;
    assemble_kernel(Kernel::SingleLayer, test, trial, orders)
}

pub fn assemble_double_layer(
    test: &FunctionSpace,
    trial: &FunctionSpace,
    orders: QuadratureOrders,
) -> Result<DMatrix<f64>, OperatorError> {
    require_flux("double layer", test)?;
    require_p1("double layer", trial)?;
    assemble_kernel(Kernel::DoubleLayer, test, trial, orders)
}

/// `K'` with primal test and flux trial: the transpose of `K` assembled with
/// the roles swapped.
pub fn assemble_adjoint_double_layer(
    test: &FunctionSpace,
    trial: &FunctionSpace,
    orders: QuadratureOrders,
) -> Result<DMatrix<f64>, OperatorError> {
    Ok(assemble_double_layer(trial, test, orders)?.transpose())
}

/// Single-layer integrals `∬_{T×S} G` of all coarse panel pairs.
fn panel_single_layer(hierarchy: &Arc<MeshHierarchy>, orders: QuadratureOrders) -> Result<DMatrix<f64>, OperatorError> {
    let dp0 = FunctionSpace::new(SpaceKind::DP0, hierarchy.clone());
    assemble_kernel(Kernel::SingleLayer, &dp0, &dp0, orders)
}

/// Surface curls of the three hat functions of triangle `t`, one per corner.
pub fn surface_curls(mesh: &crate::mesh::SurfaceMesh, t: usize) -> [Vector3; 3] {
    let p = mesh.corners(t);
    let s = 1.0 / (2.0 * mesh.area(t));
    [(p[1] - p[2]) * s, (p[2] - p[0]) * s, (p[0] - p[1]) * s]
}

/// `W_ij = Σ_{T,S} curl φ_i|_T · curl φ_j|_S  ∬_{T×S} G`.
fn hypersingular_from_panels(p1: &FunctionSpace, panels: &DMatrix<f64>) -> DMatrix<f64> {
    let mesh = p1.mesh();
    let nt = mesh.triangle_count();
    let nv = p1.dof_count();
    let curls: Vec<[Vector3; 3]> = (0..nt).map(|t| surface_curls(mesh, t)).collect();
    let mut w = DMatrix::zeros(nv, nv);
    for d in 0..3 {
        // P = panels · D_d with D_d[s, j] = curl_d φ_j|_S
        let mut p = DMatrix::zeros(nt, nv);
        for s in 0..nt {
            let tri = mesh.triangle(s);
            for (k, &j) in tri.iter().enumerate() {
                let c = curls[s][k][d];
                let mut col = p.column_mut(j);
                col.axpy(c, &panels.column(s), 1.0);
            }
        }
        for t in 0..nt {
            let tri = mesh.triangle(t);
            for (k, &i) in tri.iter().enumerate() {
                let c = curls[t][k][d];
                for j in 0..nv {
                    w[(i, j)] += c * p[(t, j)];
                }
            }
        }
    }
    // the product is symmetric in exact arithmetic; remove rounding asymmetry
    let wt = w.transpose();
    (w + wt) * 0.5
}

pub fn assemble_hypersingular(
    test: &FunctionSpace,
    trial: &FunctionSpace,
    orders: QuadratureOrders,
) -> Result<DMatrix<f64>, OperatorError> {
    require_p1("hypersingular", test)?;
    require_p1("hypersingular", trial)?;
    check_pair(test, trial)?;
    let panels = panel_single_layer(test.hierarchy(), orders)?;
    Ok(hypersingular_from_panels(test, &panels))
}

/// `∫_region φ_i ψ_j`, exact for the piecewise linear products involved.
pub fn assemble_mass(
    test: &FunctionSpace,
    trial: &FunctionSpace,
    region: Region,
) -> Result<CsrMatrix<f64>, OperatorError> {
    let level = check_pair(test, trial)?;
    let mesh = test.hierarchy().mesh(level);
    let rule = triangle_rule(2);
    let mut coo = CooMatrix::new(test.dof_count(), trial.dof_count());
    for t in 0..mesh.triangle_count() {
        if !region.contains(mesh.tag(t)) {
            continue;
        }
        let bt = test.local_basis(level, t)?;
        let bs = trial.local_basis(level, t)?;
        let jac = 2.0 * mesh.area(t);
        let mut local = [[0.0; 3]; 3];
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let phi = bt.values(b);
            let psi = bs.values(b);
            for a in 0..bt.len() {
                for c in 0..bs.len() {
                    local[a][c] += w * jac * phi[a] * psi[c];
                }
            }
        }
        for a in 0..bt.len() {
            for c in 0..bs.len() {
                coo.push(bt.dof(a), bs.dof(c), local[a][c]);
            }
        }
    }
    Ok(CsrMatrix::from(&coo))
}

/// Sparse matrix-vector product.
pub fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    assert_eq!(a.ncols(), x.len(), "spmv dimension mismatch");
    let mut y = DVector::zeros(a.nrows());
    for (i, row) in a.row_iter().enumerate() {
        y[i] = row.col_indices().iter().zip(row.values()).map(|(&j, v)| v * x[j]).sum();
    }
    y
}

/// Transposed sparse matrix-vector product.
pub fn spmv_transpose(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    assert_eq!(a.nrows(), x.len(), "spmv dimension mismatch");
    let mut y = DVector::zeros(a.ncols());
    for (i, row) in a.row_iter().enumerate() {
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            y[j] += v * x[i];
        }
    }
    y
}

pub fn to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, row) in a.row_iter().enumerate() {
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            d[(i, j)] += v;
        }
    }
    d
}

/// Primal and flux discretisation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pairing {
    /// P1 primal, DUAL0 flux.
    P1Dual0,
    /// P1 primal, DP0 flux.
    P1DP0,
}

impl Pairing {
    pub fn flux_kind(self) -> SpaceKind {
        match self {
            Pairing::P1Dual0 => SpaceKind::Dual0,
            Pairing::P1DP0 => SpaceKind::DP0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pairing::P1Dual0 => "p1-dual0",
            Pairing::P1DP0 => "p1-dp0",
        }
    }
}

impl std::str::FromStr for Pairing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "p1-dual0" => Ok(Pairing::P1Dual0),
            "p1-dp0" => Ok(Pairing::P1DP0),
            other => Err(format!("unknown pairing '{other}' (expected p1-dual0 or p1-dp0)")),
        }
    }
}

/// Mass pairings. Names give (test, trial) roles; `_d` and `_c` restrict
/// the integral to the Dirichlet and contact parts of the boundary.
#[derive(Clone, Debug)]
pub struct MassBlocks {
    pub primal_primal: CsrMatrix<f64>,
    pub primal_primal_d: CsrMatrix<f64>,
    pub primal_flux: CsrMatrix<f64>,
    pub primal_flux_d: CsrMatrix<f64>,
    pub primal_flux_c: CsrMatrix<f64>,
    pub flux_flux: CsrMatrix<f64>,
    pub flux_flux_c: CsrMatrix<f64>,
}

impl MassBlocks {
    pub fn assemble(primal: &FunctionSpace, flux: &FunctionSpace) -> Result<Self, OperatorError> {
        Ok(MassBlocks {
            primal_primal: assemble_mass(primal, primal, Region::Whole)?,
            primal_primal_d: assemble_mass(primal, primal, Region::Dirichlet)?,
            primal_flux: assemble_mass(primal, flux, Region::Whole)?,
            primal_flux_d: assemble_mass(primal, flux, Region::Dirichlet)?,
            primal_flux_c: assemble_mass(primal, flux, Region::Contact)?,
            flux_flux: assemble_mass(flux, flux, Region::Whole)?,
            flux_flux_c: assemble_mass(flux, flux, Region::Contact)?,
        })
    }
}

/// All matrices of the discrete multitrace system for one mesh and pairing.
#[derive(Clone, Debug)]
pub struct OperatorBlocks {
    pub pairing: Pairing,
    pub primal: Arc<FunctionSpace>,
    pub flux: Arc<FunctionSpace>,
    /// Flux test × flux trial.
    pub v: DMatrix<f64>,
    /// Flux test × primal trial.
    pub k: DMatrix<f64>,
    /// Primal test × flux trial.
    pub kp: DMatrix<f64>,
    /// Primal test × primal trial.
    pub w: DMatrix<f64>,
    pub mass: MassBlocks,
    pub orders: QuadratureOrders,
}

impl OperatorBlocks {
    pub fn assemble(
        hierarchy: Arc<MeshHierarchy>,
        pairing: Pairing,
        orders: QuadratureOrders,
    ) -> Result<Self, OperatorError> {
        let primal = Arc::new(FunctionSpace::new(SpaceKind::P1, hierarchy.clone()));
        let flux = Arc::new(FunctionSpace::new(pairing.flux_kind(), hierarchy.clone()));
        let panels = panel_single_layer(&hierarchy, orders)?;
        let w = hypersingular_from_panels(&primal, &panels);
        let v = match pairing {
            Pairing::P1DP0 => panels,
            Pairing::P1Dual0 => assemble_single_layer(&flux, &flux, orders)?,
        };
        let k = assemble_double_layer(&flux, &primal, orders)?;
        Self::from_matrices(pairing, primal, flux, v, k, w, orders)
    }

    /// Blocks from given dense operators; masses are assembled.
    pub fn from_matrices(
        pairing: Pairing,
        primal: Arc<FunctionSpace>,
        flux: Arc<FunctionSpace>,
        v: DMatrix<f64>,
        k: DMatrix<f64>,
        w: DMatrix<f64>,
        orders: QuadratureOrders,
    ) -> Result<Self, OperatorError> {
        let (np, nf) = (primal.dof_count(), flux.dof_count());
        for (shape, expected) in [(v.shape(), (nf, nf)), (k.shape(), (nf, np)), (w.shape(), (np, np))] {
            if shape != expected {
                return Err(OperatorError::DimensionMismatch {
                    expected: expected.0 * expected.1,
                    found: shape.0 * shape.1,
                });
            }
        }
        let mass = MassBlocks::assemble(&primal, &flux)?;
        Ok(OperatorBlocks {
            pairing,
            kp: k.transpose(),
            primal,
            flux,
            v,
            k,
            w,
            mass,
            orders,
        })
    }

    /// Blocks from a dump written for a mesh with the given hierarchy.
    pub fn from_dump(
        hierarchy: Arc<MeshHierarchy>,
        dump: DumpedBlocks,
        orders: QuadratureOrders,
    ) -> Result<Self, OperatorError> {
        let primal = Arc::new(FunctionSpace::new(SpaceKind::P1, hierarchy.clone()));
        let flux = Arc::new(FunctionSpace::new(dump.pairing.flux_kind(), hierarchy));
        Self::from_matrices(dump.pairing, primal, flux, dump.v, dump.k, dump.w, orders)
    }

    pub fn primal_dofs(&self) -> usize {
        self.primal.dof_count()
    }

    pub fn flux_dofs(&self) -> usize {
        self.flux.dof_count()
    }

    /// Dense matrix `[[W, K'], [-K, V]]` with rows (primal test, flux test)
    /// and columns (primal trial, flux trial).
    pub fn multitrace_matrix(&self) -> DMatrix<f64> {
        let (np, nf) = (self.primal_dofs(), self.flux_dofs());
        let mut a = DMatrix::zeros(np + nf, np + nf);
        a.view_mut((0, 0), (np, np)).copy_from(&self.w);
        a.view_mut((0, np), (np, nf)).copy_from(&self.kp);
        a.view_mut((np, 0), (nf, np)).copy_from(&(-&self.k));
        a.view_mut((np, np), (nf, nf)).copy_from(&self.v);
        a
    }

    /// Squared surrogate product norm `⟨Wv, v⟩ + ‖v‖² + ⟨Vμ, μ⟩`.
    pub fn surrogate_norm_squared(&self, v: &DVector<f64>, mu: &DVector<f64>) -> f64 {
        let wv = &self.w * v;
        let mv = spmv(&self.mass.primal_primal, v);
        let vm = &self.v * mu;
        wv.dot(v) + mv.dot(v) + vm.dot(mu)
    }

    pub fn surrogate_norm(&self, v: &DVector<f64>, mu: &DVector<f64>) -> f64 {
        self.surrogate_norm_squared(v, mu).max(0.0).sqrt()
    }
}

fn check_len(expected: usize, v: &DVector<f64>) -> Result<(), OperatorError> {
    if v.len() != expected {
        return Err(OperatorError::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

/// Apply the multitrace operator to `(v, μ)`, returning the primal-test and
/// flux-test rows `(W v + K' μ, -K v + V μ)`.
pub fn multitrace_apply(
    blocks: &OperatorBlocks,
    v: &DVector<f64>,
    mu: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>), OperatorError> {
    check_len(blocks.primal_dofs(), v)?;
    check_len(blocks.flux_dofs(), mu)?;
    let primal = &blocks.w * v + &blocks.kp * mu;
    let flux = &blocks.v * mu - &blocks.k * v;
    Ok((primal, flux))
}

/// Relative defect of the Calderón identity for discrete traces:
/// `‖A(u, λ) - ½ M(u, λ)‖ / ‖½ M(u, λ)‖` where `M(u, λ)` pairs `λ` with the
/// primal test space and `u` with the flux test space.
pub fn calderon_residual(
    blocks: &OperatorBlocks,
    u: &DVector<f64>,
    lambda: &DVector<f64>,
) -> Result<f64, OperatorError> {
    let (ap, af) = multitrace_apply(blocks, u, lambda)?;
    let mp = spmv(&blocks.mass.primal_flux, lambda) * 0.5;
    let mf = spmv_transpose(&blocks.mass.primal_flux, u) * 0.5;
    let num = ((ap - &mp).norm_squared() + (af - &mf).norm_squared()).sqrt();
    let den = (mp.norm_squared() + mf.norm_squared()).sqrt();
    Ok(num / den)
}
