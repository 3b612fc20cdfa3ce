//! Panel-pair integration and dense Galerkin assembly.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::mesh::{Point3, SurfaceMesh, Vector3};
use crate::quadrature::{
    classify_panels, gauss_triangle, PairRules, PanelPairClass, QuadratureError, QuadratureOrders, SingularRule,
    TriangleRule,
};
use crate::spaces::LocalBasis;

use super::FOUR_PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    /// `1 / |x - y|`
    SingleLayer,
    /// `(x - y) · ν_y / |x - y|^3`
    DoubleLayer,
}

impl Kernel {
    /// Kernel without the `1 / 4π` factor.
    #[inline]
    fn eval(self, x: &Point3, y: &Point3, ny: &Vector3) -> f64 {
        let d = x - y;
        let r2 = d.norm_squared();
        match self {
            Kernel::SingleLayer => 1.0 / r2.sqrt(),
            Kernel::DoubleLayer => d.dot(ny) / (r2 * r2.sqrt()),
        }
    }
}

/// Regular-rule points of every triangle in physical space.
struct PointCache {
    per_triangle: usize,
    points: Vec<Point3>,
    /// Rule weight times `2|T|`.
    weights: Vec<f64>,
    basis: Vec<[f64; 3]>,
}

impl PointCache {
    fn new(mesh: &SurfaceMesh, rule: &TriangleRule, bases: &[LocalBasis]) -> Self {
        let nt = mesh.triangle_count();
        let n = rule.len();
        let mut points = Vec::with_capacity(nt * n);
        let mut weights = Vec::with_capacity(nt * n);
        let mut basis = Vec::with_capacity(nt * n);
        for t in 0..nt {
            let jac = 2.0 * mesh.area(t);
            for (b, w) in rule.points.iter().zip(&rule.weights) {
                points.push(mesh.point_at(t, *b));
                weights.push(w * jac);
                basis.push(bases[t].values(b));
            }
        }
        PointCache {
            per_triangle: n,
            points,
            weights,
            basis,
        }
    }

    fn range(&self, t: usize) -> std::ops::Range<usize> {
        t * self.per_triangle..(t + 1) * self.per_triangle
    }
}

/// Integrates `∫_T ∫_S φ_a(x) k(x, y) ψ_b(y)` for all local basis pairs.
pub(crate) struct PairIntegrator<'a> {
    mesh: &'a SurfaceMesh,
    kernel: Kernel,
    test_bases: &'a [LocalBasis],
    trial_bases: &'a [LocalBasis],
    rules: PairRules,
    regular_test: PointCache,
    regular_trial: PointCache,
    near_test: PointCache,
    near_trial: PointCache,
    centroids: Vec<Point3>,
    radii: Vec<f64>,
    diameters: Vec<f64>,
}

pub(crate) type Local = [[f64; 3]; 3];

impl<'a> PairIntegrator<'a> {
    pub fn new(
        mesh: &'a SurfaceMesh,
        kernel: Kernel,
        test_bases: &'a [LocalBasis],
        trial_bases: &'a [LocalBasis],
        orders: QuadratureOrders,
    ) -> Result<Self, QuadratureError> {
        let rules = PairRules::new(orders)?;
        let nt = mesh.triangle_count();
        let centroids: Vec<Point3> = (0..nt).map(|t| mesh.centroid(t)).collect();
        let radii = (0..nt)
            .map(|t| {
                mesh.corners(t)
                    .iter()
                    .map(|p| (p - centroids[t]).norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        let diameters = (0..nt).map(|t| mesh.diameter(t)).collect();
        Ok(PairIntegrator {
            mesh,
            kernel,
            test_bases,
            trial_bases,
            regular_test: PointCache::new(mesh, &rules.regular, test_bases),
            regular_trial: PointCache::new(mesh, &rules.regular, trial_bases),
            near_test: PointCache::new(mesh, &rules.near, test_bases),
            near_trial: PointCache::new(mesh, &rules.near, trial_bases),
            rules,
            centroids,
            radii,
            diameters,
        })
    }

    /// True if the whole test panel lies in the plane of the trial panel,
    /// where the double-layer kernel vanishes identically.
    fn coplanar(&self, t: usize, s: usize) -> bool {
        let n = self.mesh.normal(s);
        let c = self.centroids[s];
        let tol = 1e-12 * self.diameters[s];
        self.mesh.corners(t).iter().all(|p| (p - c).dot(&n).abs() <= tol)
    }

    fn is_near(&self, t: usize, s: usize) -> bool {
        let gap = (self.centroids[t] - self.centroids[s]).norm() - self.radii[t] - self.radii[s];
        gap < self.rules.orders.near_field_ratio * self.diameters[t].max(self.diameters[s])
    }

    /// Local matrix of the pair, or `None` if it vanishes identically.
    pub fn integrate(&self, t: usize, s: usize) -> Option<Local> {
        if self.kernel == Kernel::DoubleLayer && self.coplanar(t, s) {
            return None;
        }
        let local = match classify_panels(self.mesh.triangle(t), self.mesh.triangle(s)) {
            PanelPairClass::Disjoint => {
                if self.is_near(t, s) {
                    self.regular(&self.near_test, &self.near_trial, t, s)
                } else {
                    self.regular(&self.regular_test, &self.regular_trial, t, s)
                }
            }
            PanelPairClass::SharedVertex {
                test_order,
                trial_order,
            } => self.singular(&self.rules.vertex, t, s, test_order, trial_order),
            PanelPairClass::SharedEdge {
                test_order,
                trial_order,
            } => self.singular(&self.rules.edge, t, s, test_order, trial_order),
            PanelPairClass::Coincident => self.singular(&self.rules.coincident, t, s, [0, 1, 2], [0, 1, 2]),
        };
        Some(local)
    }

    fn regular(&self, test: &PointCache, trial: &PointCache, t: usize, s: usize) -> Local {
        let nb_t = self.test_bases[t].len();
        let nb_s = self.trial_bases[s].len();
        let ny = self.mesh.normal(s);
        let trial_range = trial.range(s);
        let mut local = [[0.0; 3]; 3];
        for qi in test.range(t) {
            let x = &test.points[qi];
            let mut acc = [0.0; 3];
            for qj in trial_range.clone() {
                let k = self.kernel.eval(x, &trial.points[qj], &ny) * trial.weights[qj];
                let psi = &trial.basis[qj];
                for b in 0..nb_s {
                    acc[b] += k * psi[b];
                }
            }
            let wx = test.weights[qi];
            let phi = &test.basis[qi];
            for a in 0..nb_t {
                for b in 0..nb_s {
                    local[a][b] += wx * phi[a] * acc[b];
                }
            }
        }
        scale(local, 1.0 / FOUR_PI)
    }

    fn singular(
        &self,
        rule: &SingularRule,
        t: usize,
        s: usize,
        test_order: [usize; 3],
        trial_order: [usize; 3],
    ) -> Local {
        let ct = self.mesh.corners(t);
        let cs = self.mesh.corners(s);
        let ny = self.mesh.normal(s);
        let jac = 4.0 * self.mesh.area(t) * self.mesh.area(s);
        let bt = &self.test_bases[t];
        let bs = &self.trial_bases[s];
        let (nb_t, nb_s) = (bt.len(), bs.len());
        let mut local = [[0.0; 3]; 3];
        for q in 0..rule.len() {
            let bx = reorder(&rule.test_points[q], test_order);
            let by = reorder(&rule.trial_points[q], trial_order);
            let x = combine(&ct, &bx);
            let y = combine(&cs, &by);
            let k = self.kernel.eval(&x, &y, &ny) * rule.weights[q];
            let phi = bt.values(&bx);
            let psi = bs.values(&by);
            for a in 0..nb_t {
                for b in 0..nb_s {
                    local[a][b] += k * phi[a] * psi[b];
                }
            }
        }
        scale(local, jac / FOUR_PI)
    }
}

fn scale(mut local: Local, f: f64) -> Local {
    local.iter_mut().flatten().for_each(|v| *v *= f);
    local
}

/// Barycentric coordinates in the panel's own vertex order from coordinates
/// relative to the aligned order.
#[inline]
fn reorder(aligned: &[f64; 3], order: [usize; 3]) -> [f64; 3] {
    let mut b = [0.0; 3];
    for k in 0..3 {
        b[order[k]] = aligned[k];
    }
    b
}

#[inline]
pub(crate) fn combine(corners: &[Point3; 3], b: &[f64; 3]) -> Point3 {
    Point3::from(corners[0].coords * b[0] + corners[1].coords * b[1] + corners[2].coords * b[2])
}

/// Test triangles handled per parallel batch; bounds the scratch memory.
const BATCH: usize = 64;

struct RowBlock {
    t: usize,
    rows: Vec<Vec<f64>>,
    cols: Vec<Vec<f64>>,
}

/// Dense Galerkin matrix of a kernel between two spaces described by their
/// local bases on a common integration mesh.
///
/// With `symmetric` set, test and trial bases must coincide; only pairs
/// `s >= t` are integrated and mirrored. Batches of test triangles run in
/// parallel and are merged in triangle order, so results do not depend on
/// the thread count.
pub(crate) fn assemble_dense(
    integrator: &PairIntegrator<'_>,
    n_rows: usize,
    n_cols: usize,
    symmetric: bool,
) -> DMatrix<f64> {
    let nt = integrator.mesh.triangle_count();
    let mut out = DMatrix::zeros(n_rows, n_cols);
    let triangles: Vec<usize> = (0..nt).collect();
    for batch in triangles.chunks(BATCH) {
        let blocks: Vec<RowBlock> = batch
            .par_iter()
            .map(|&t| {
                let bt = &integrator.test_bases[t];
                let mut rows = vec![vec![0.0; n_cols]; bt.len()];
                let mut cols = if symmetric {
                    vec![vec![0.0; n_rows]; bt.len()]
                } else {
                    Vec::new()
                };
                let first = if symmetric { t } else { 0 };
                for s in first..nt {
                    let Some(local) = integrator.integrate(t, s) else {
                        continue;
                    };
                    let bs = &integrator.trial_bases[s];
                    for (a, row) in rows.iter_mut().enumerate() {
                        for (b, value) in local[a].iter().enumerate().take(bs.len()) {
                            row[bs.dof(b)] += value;
                            if symmetric && s != t {
                                cols[a][bs.dof(b)] += value;
                            }
                        }
                    }
                }
                RowBlock { t, rows, cols }
            })
            .collect();
        for block in blocks {
            let bt = &integrator.test_bases[block.t];
            for (a, row) in block.rows.iter().enumerate() {
                let i = bt.dof(a);
                for (j, v) in row.iter().enumerate() {
                    out[(i, j)] += v;
                }
            }
            for (a, col) in block.cols.iter().enumerate() {
                let j = bt.dof(a);
                for (i, v) in col.iter().enumerate() {
                    out[(i, j)] += v;
                }
            }
        }
    }
    out
}

/// `∫_T f` for each triangle with a rule of the given degree; used by tests
/// and mass assembly.
pub(crate) fn triangle_rule(degree: usize) -> TriangleRule {
    gauss_triangle(degree).expect("supported degree")
}
