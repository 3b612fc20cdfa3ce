//! Discrete trace spaces: continuous piecewise linears (P1), piecewise
//! constants on the primal mesh (DP0) and piecewise constants on the
//! barycentric dual grid (DUAL0).
//!
//! Every space can describe itself on an integration mesh: either the coarse
//! mesh or its barycentric refinement. DUAL0 only lives on the refinement;
//! P1 and DP0 are prolonged to it when paired with DUAL0.

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DVector;

use crate::mesh::{
    barycentric_refine, build_dual_grid, BarycentricRefinement, DualGrid, Point3, SurfaceMesh, Vector3, VertexOrigin,
};

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error("{kind:?} has no representation on the {level:?} mesh")]
    UnsupportedLevel { kind: SpaceKind, level: Level },
    #[error("non-finite value {value} while interpolating dof {dof}")]
    NonFinite { dof: usize, value: f64 },
    #[error("triangle {index} out of range ({count} triangles)")]
    TriangleOutOfRange { index: usize, count: usize },
    #[error("invalid barycentric coordinates {0:?}")]
    InvalidBarycentric([f64; 3]),
    #[error("coefficient vector has length {found}, space has {expected} dofs")]
    LengthMismatch { expected: usize, found: usize },
    #[error("spaces live on different meshes")]
    MeshMismatch,
    #[error("coefficient file: {0}")]
    Csv(#[from] csv::Error),
    #[error("coefficient file row {row}: expected dof {expected}, found {found}")]
    DofOrder { row: usize, expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    P1,
    DP0,
    Dual0,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::P1 => "P1",
            SpaceKind::DP0 => "DP0",
            SpaceKind::Dual0 => "DUAL0",
        }
    }
}

/// Mesh on which integrals are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Coarse,
    Refined,
}

/// The coarse mesh together with its barycentric refinement and dual grid.
#[derive(Debug)]
pub struct MeshHierarchy {
    coarse: Arc<SurfaceMesh>,
    refinement: Arc<BarycentricRefinement>,
    dual: DualGrid,
}

impl MeshHierarchy {
    pub fn new(coarse: Arc<SurfaceMesh>) -> Self {
        let refinement = Arc::new(barycentric_refine(coarse.clone()));
        let dual = build_dual_grid(refinement.clone());
        MeshHierarchy {
            coarse,
            refinement,
            dual,
        }
    }

    pub fn coarse(&self) -> &SurfaceMesh {
        &self.coarse
    }

    pub fn coarse_arc(&self) -> &Arc<SurfaceMesh> {
        &self.coarse
    }

    pub fn refinement(&self) -> &BarycentricRefinement {
        &self.refinement
    }

    pub fn dual(&self) -> &DualGrid {
        &self.dual
    }

    pub fn mesh(&self, level: Level) -> &SurfaceMesh {
        match level {
            Level::Coarse => &self.coarse,
            Level::Refined => self.refinement.fine(),
        }
    }
}

/// Restriction of a space to one triangle of an integration mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalBasis {
    /// A single basis function equal to one on the triangle.
    Constant(usize),
    /// Three linear basis functions; `corner_values[i][k]` is the value of
    /// basis function `dofs[i]` at corner `k` of the triangle.
    Linear {
        dofs: [usize; 3],
        corner_values: [[f64; 3]; 3],
    },
}

impl LocalBasis {
    pub fn len(&self) -> usize {
        match self {
            LocalBasis::Constant(_) => 1,
            LocalBasis::Linear { .. } => 3,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dof(&self, i: usize) -> usize {
        match self {
            LocalBasis::Constant(d) => *d,
            LocalBasis::Linear { dofs, .. } => dofs[i],
        }
    }

    /// Values of the local basis functions at a barycentric point.
    pub fn values(&self, bary: &[f64; 3]) -> [f64; 3] {
        match self {
            LocalBasis::Constant(_) => [1.0, 0.0, 0.0],
            LocalBasis::Linear { corner_values, .. } => {
                let mut out = [0.0; 3];
                for (o, c) in out.iter_mut().zip(corner_values) {
                    *o = c[0] * bary[0] + c[1] * bary[1] + c[2] * bary[2];
                }
                out
            }
        }
    }
}

/// A point on the surface with the data a trace field may depend on.
#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub x: Point3,
    /// Outward unit normal of the triangle the point is taken from.
    pub normal: Vector3,
    pub face_id: usize,
    /// Coarse triangle containing the point and the barycentric coordinates
    /// of the point in it.
    pub triangle: usize,
    pub bary: [f64; 3],
}

impl SurfacePoint {
    /// Point of the coarse mesh at barycentric coordinates `bary` of `t`.
    pub fn on_coarse(mesh: &SurfaceMesh, t: usize, bary: [f64; 3]) -> Self {
        SurfacePoint {
            x: mesh.point_at(t, bary),
            normal: mesh.normal(t),
            face_id: mesh.face_id(t),
            triangle: t,
            bary,
        }
    }

    /// Point of the barycentric refinement at barycentric coordinates `bary`
    /// of fine triangle `t`.
    pub fn on_fine(hierarchy: &MeshHierarchy, t: usize, bary: [f64; 3]) -> Self {
        let fine = hierarchy.refinement().fine();
        let coarse_bary = FunctionSpace::p1_prolongation(hierarchy, t).values(&bary);
        SurfacePoint {
            x: fine.point_at(t, bary),
            normal: fine.normal(t),
            face_id: fine.face_id(t),
            triangle: hierarchy.refinement().parent(t),
            bary: coarse_bary,
        }
    }

    /// Point of the mesh at the given level.
    pub fn on_level(hierarchy: &MeshHierarchy, level: Level, t: usize, bary: [f64; 3]) -> Self {
        match level {
            Level::Coarse => Self::on_coarse(hierarchy.coarse(), t, bary),
            Level::Refined => Self::on_fine(hierarchy, t, bary),
        }
    }
}

#[derive(Debug)]
pub struct FunctionSpace {
    kind: SpaceKind,
    hierarchy: Arc<MeshHierarchy>,
}

impl FunctionSpace {
    pub fn new(kind: SpaceKind, hierarchy: Arc<MeshHierarchy>) -> Self {
        FunctionSpace { kind, hierarchy }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn hierarchy(&self) -> &Arc<MeshHierarchy> {
        &self.hierarchy
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        self.hierarchy.coarse()
    }

    pub fn dof_count(&self) -> usize {
        match self.kind {
            SpaceKind::P1 | SpaceKind::Dual0 => self.mesh().vertex_count(),
            SpaceKind::DP0 => self.mesh().triangle_count(),
        }
    }

    /// Coarsest integration mesh on which the space is piecewise polynomial.
    pub fn native_level(&self) -> Level {
        match self.kind {
            SpaceKind::Dual0 => Level::Refined,
            _ => Level::Coarse,
        }
    }

    pub fn same_mesh(&self, other: &FunctionSpace) -> bool {
        Arc::ptr_eq(&self.hierarchy, &other.hierarchy)
    }

    pub fn local_basis(&self, level: Level, t: usize) -> Result<LocalBasis, SpaceError> {
        let h = &self.hierarchy;
        Ok(match (self.kind, level) {
            (SpaceKind::P1, Level::Coarse) => LocalBasis::Linear {
                dofs: h.coarse().triangle(t),
                corner_values: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            },
            (SpaceKind::P1, Level::Refined) => Self::p1_prolongation(h, t),
            (SpaceKind::DP0, Level::Coarse) => LocalBasis::Constant(t),
            (SpaceKind::DP0, Level::Refined) => LocalBasis::Constant(h.refinement().parent(t)),
            (SpaceKind::Dual0, Level::Refined) => LocalBasis::Constant(h.dual().owner(t)),
            (kind, level) => return Err(SpaceError::UnsupportedLevel { kind, level }),
        })
    }

    /// Coarse hat functions restricted to fine triangle `t`.
    fn p1_prolongation(h: &MeshHierarchy, t: usize) -> LocalBasis {
        let r = h.refinement();
        let dofs = h.coarse().triangle(r.parent(t));
        let mut corner_values = [[0.0; 3]; 3];
        for (k, &fv) in r.fine().triangle(t).iter().enumerate() {
            let weights = match r.origin(fv) {
                VertexOrigin::Vertex(v) => vec![(v, 1.0)],
                other => other.coarse_weights(h.coarse()),
            };
            for (v, w) in weights {
                let i = dofs.iter().position(|&d| d == v).expect("fine vertex in parent");
                corner_values[i][k] += w;
            }
        }
        LocalBasis::Linear { dofs, corner_values }
    }

    /// Local bases of every triangle of the integration mesh.
    pub fn local_bases(&self, level: Level) -> Result<Vec<LocalBasis>, SpaceError> {
        (0..self.hierarchy.mesh(level).triangle_count())
            .map(|t| self.local_basis(level, t))
            .collect()
    }
}

pub fn build_space(mesh: Arc<SurfaceMesh>, kind: SpaceKind) -> FunctionSpace {
    FunctionSpace::new(kind, Arc::new(MeshHierarchy::new(mesh)))
}

/// A coefficient vector in a function space.
#[derive(Clone, Debug)]
pub struct DiscreteFunction {
    space: Arc<FunctionSpace>,
    coefficients: DVector<f64>,
}

impl DiscreteFunction {
    pub fn new(space: Arc<FunctionSpace>, coefficients: DVector<f64>) -> Result<Self, SpaceError> {
        if coefficients.len() != space.dof_count() {
            return Err(SpaceError::LengthMismatch {
                expected: space.dof_count(),
                found: coefficients.len(),
            });
        }
        Ok(DiscreteFunction { space, coefficients })
    }

    pub fn zeros(space: Arc<FunctionSpace>) -> Self {
        let n = space.dof_count();
        DiscreteFunction {
            space,
            coefficients: DVector::zeros(n),
        }
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut DVector<f64> {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> DVector<f64> {
        self.coefficients
    }

    /// Value at a barycentric point of triangle `t`. For DUAL0, `t` indexes
    /// the barycentric refinement; otherwise the coarse mesh.
    pub fn evaluate(&self, t: usize, bary: [f64; 3]) -> Result<f64, SpaceError> {
        let level = self.space.native_level();
        let count = self.space.hierarchy().mesh(level).triangle_count();
        if t >= count {
            return Err(SpaceError::TriangleOutOfRange { index: t, count });
        }
        let sum: f64 = bary.iter().sum();
        if bary.iter().any(|&b| !(b >= -1e-14)) || (sum - 1.0).abs() > 1e-12 {
            return Err(SpaceError::InvalidBarycentric(bary));
        }
        let basis = self.space.local_basis(level, t)?;
        let values = basis.values(&bary);
        Ok((0..basis.len())
            .map(|i| values[i] * self.coefficients[basis.dof(i)])
            .sum())
    }
}

fn unit_bary(mesh: &SurfaceMesh, t: usize, v: usize) -> [f64; 3] {
    let mut b = [0.0; 3];
    b[mesh
        .triangle(t)
        .iter()
        .position(|&w| w == v)
        .expect("vertex of triangle")] = 1.0;
    b
}

fn checked(dof: usize, value: f64) -> Result<f64, SpaceError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SpaceError::NonFinite { dof, value })
    }
}

/// Interpolate a trace field.
///
/// P1 takes nodal values, DP0 the value at the barycenter, DUAL0 the value at
/// the owning vertex. A field that jumps across an edge of the surface (such
/// as a normal derivative at a cube edge) is evaluated at the vertex once per
/// fine triangle of the dual cell, and the results are averaged by area.
pub fn interpolate(
    space: &Arc<FunctionSpace>,
    f: impl Fn(&SurfacePoint) -> f64,
) -> Result<DiscreteFunction, SpaceError> {
    let hierarchy = space.hierarchy();
    let coarse = hierarchy.coarse();
    let mut values = DVector::zeros(space.dof_count());
    match space.kind() {
        SpaceKind::P1 => {
            let adjacent = coarse.vertex_triangles();
            for (v, tris) in adjacent.iter().enumerate() {
                let p = SurfacePoint::on_coarse(coarse, tris[0], unit_bary(coarse, tris[0], v));
                values[v] = checked(v, f(&p))?;
            }
        }
        SpaceKind::DP0 => {
            for t in 0..coarse.triangle_count() {
                values[t] = checked(t, f(&SurfacePoint::on_coarse(coarse, t, [1.0 / 3.0; 3])))?;
            }
        }
        SpaceKind::Dual0 => {
            let dual = hierarchy.dual();
            let refinement = hierarchy.refinement();
            let fine = refinement.fine();
            for v in 0..dual.cell_count() {
                let samples: Vec<(f64, f64)> = dual
                    .cell(v)
                    .iter()
                    .map(|&t| {
                        let b = unit_bary(fine, t, v);
                        (fine.area(t), f(&SurfacePoint::on_fine(hierarchy, t, b)))
                    })
                    .collect();
                let first = samples[0].1;
                values[v] = if samples.iter().all(|s| s.1 == first) {
                    checked(v, first)?
                } else {
                    let area: f64 = samples.iter().map(|s| s.0).sum();
                    checked(v, samples.iter().map(|s| s.0 * s.1).sum::<f64>() / area)?
                };
            }
        }
    }
    DiscreteFunction::new(space.clone(), values)
}

/// Write coefficients as CSV with header `dof,value`.
pub fn write_coefficients<W: Write>(values: &DVector<f64>, out: W) -> Result<(), SpaceError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dof", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:e}")])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_coefficients<R: Read>(input: R) -> Result<DVector<f64>, SpaceError> {
    let mut r = csv::Reader::from_reader(input);
    let mut values = Vec::new();
    for (row, record) in r.deserialize::<(usize, f64)>().enumerate() {
        let (dof, value) = record?;
        if dof != row {
            return Err(SpaceError::DofOrder {
                row: row + 1,
                expected: row,
                found: dof,
            });
        }
        values.push(value);
    }
    Ok(DVector::from_vec(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cube_mesh, CUBE_CONTACT_FACE};
    use crate::quadrature::gauss_triangle;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spaces(n: usize) -> [Arc<FunctionSpace>; 3] {
        let h = Arc::new(MeshHierarchy::new(Arc::new(generate_cube_mesh(n).unwrap())));
        [SpaceKind::P1, SpaceKind::DP0, SpaceKind::Dual0].map(|k| Arc::new(FunctionSpace::new(k, h.clone())))
    }

    fn random_bary(rng: &mut ChaCha8Rng) -> [f64; 3] {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        [1.0 - a - b, a, b]
    }

    #[test]
    fn dof_counts() {
        let [p1, dp0, dual] = spaces(1);
        assert_eq!(p1.dof_count(), 8);
        assert_eq!(dp0.dof_count(), 12);
        assert_eq!(dual.dof_count(), 8);
    }

    #[test]
    fn local_maps_are_in_range() {
        for s in spaces(2) {
            for level in [Level::Coarse, Level::Refined] {
                let Ok(bases) = s.local_bases(level) else {
                    assert_eq!(s.kind(), SpaceKind::Dual0);
                    continue;
                };
                for b in bases {
                    assert!((0..b.len()).all(|i| b.dof(i) < s.dof_count()));
                }
            }
        }
    }

    #[test]
    fn constants_are_reproduced() {
        for s in spaces(2) {
            let f = interpolate(&s, |_| 1.0).unwrap();
            assert!(f.coefficients().iter().all(|&c| c == 1.0));
        }
    }

    #[test]
    fn nodal_interpolation_of_z() {
        let [p1, ..] = spaces(1);
        let f = interpolate(&p1, |p| p.x.z).unwrap();
        for (v, c) in f.coefficients().iter().enumerate() {
            assert_eq!(*c, p1.mesh().vertices()[v].z);
        }
    }

    #[test]
    fn p1_reproduces_linears_on_a_face() {
        let [p1, ..] = spaces(3);
        let f = interpolate(&p1, |p| p.x.x + 2.0 * p.x.y).unwrap();
        let mesh = p1.mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in (0..mesh.triangle_count()).filter(|&t| mesh.face_id(t) == CUBE_CONTACT_FACE) {
            let b = random_bary(&mut rng);
            let x = mesh.point_at(t, b);
            assert_relative_eq!(f.evaluate(t, b).unwrap(), x.x + 2.0 * x.y, epsilon = 1e-12);
        }
    }

    #[test]
    fn prolonged_p1_matches_coarse_evaluation() {
        let [p1, ..] = spaces(2);
        let f = interpolate(&p1, |p| p.x.x * p.x.x - p.x.y + 3.0 * p.x.z).unwrap();
        let h = p1.hierarchy();
        let fine = h.refinement().fine();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 0..fine.triangle_count() {
            let b = random_bary(&mut rng);
            let x = fine.point_at(t, b);
            let basis = p1.local_basis(Level::Refined, t).unwrap();
            let vals = basis.values(&b);
            let fine_value: f64 = (0..3).map(|i| vals[i] * f.coefficients()[basis.dof(i)]).sum();
            // locate the point in the parent triangle
            let parent = h.refinement().parent(t);
            let [a, bb, c] = h.coarse().corners(parent);
            let m = nalgebra::Matrix3x2::from_columns(&[bb - a, c - a]);
            let lam = m.svd(true, true).solve(&(x - a), 1e-14).unwrap();
            let pb = [1.0 - lam[0] - lam[1], lam[0], lam[1]];
            assert_relative_eq!(fine_value, f.evaluate(parent, pb).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn partition_of_unity() {
        let [p1, ..] = spaces(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for level in [Level::Coarse, Level::Refined] {
            for t in 0..p1.hierarchy().mesh(level).triangle_count() {
                let v = p1.local_basis(level, t).unwrap().values(&random_bary(&mut rng));
                assert_relative_eq!(v.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dual_basis_functions_are_indicators() {
        let [.., dual] = spaces(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let fine = dual.hierarchy().refinement().fine();
        for t in 0..fine.triangle_count() {
            let b = random_bary(&mut rng);
            let mut hits = 0;
            for v in 0..dual.dof_count() {
                let mut e = DVector::zeros(dual.dof_count());
                e[v] = 1.0;
                let f = DiscreteFunction::new(dual.clone(), e).unwrap();
                let value = f.evaluate(t, b).unwrap();
                assert!(value == 0.0 || value == 1.0);
                hits += (value == 1.0) as usize;
            }
            assert_eq!(hits, 1);
        }
    }

    #[test]
    fn evaluation_properties() {
        let [p1, dp0, _] = spaces(1);
        let c = DiscreteFunction::new(p1.clone(), DVector::from_element(8, 2.5)).unwrap();
        assert_relative_eq!(c.evaluate(4, [0.2, 0.3, 0.5]).unwrap(), 2.5, epsilon = 1e-14);

        let d = DiscreteFunction::new(dp0.clone(), DVector::from_fn(12, |i, _| i as f64)).unwrap();
        assert_eq!(d.evaluate(7, [0.1, 0.1, 0.8]).unwrap(), 7.0);
        assert_eq!(d.evaluate(7, [1.0, 0.0, 0.0]).unwrap(), 7.0);

        let [a, b, _] = p1.mesh().triangle(3);
        let mut e = DVector::zeros(8);
        e[a] = 1.0;
        let hat = DiscreteFunction::new(p1.clone(), e).unwrap();
        assert_eq!(hat.evaluate(3, [1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(hat.evaluate(3, [0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert_ne!(a, b);

        assert!(matches!(
            hat.evaluate(12, [1.0, 0.0, 0.0]),
            Err(SpaceError::TriangleOutOfRange { .. })
        ));
        assert!(matches!(
            hat.evaluate(0, [0.5, 0.6, -0.1]),
            Err(SpaceError::InvalidBarycentric(_))
        ));
    }

    #[test]
    fn non_finite_values_rejected() {
        let [p1, ..] = spaces(1);
        assert!(matches!(
            interpolate(&p1, |p| if p.x.z > 0.5 { f64::NAN } else { 0.0 }),
            Err(SpaceError::NonFinite { .. })
        ));
    }

    #[test]
    fn dual_interpolation_averages_jumps() {
        let [.., dual] = spaces(2);
        // the normal z-component jumps at the top face edges
        let f = interpolate(&dual, |p| p.normal.z).unwrap();
        let dual_grid = dual.hierarchy().dual();
        let fine = dual.hierarchy().refinement().fine();
        for v in 0..dual.dof_count() {
            let weighted: f64 = dual_grid.cell(v).iter().map(|&t| fine.area(t) * fine.normal(t).z).sum();
            assert_relative_eq!(f.coefficients()[v], weighted / dual_grid.cell_area(v), epsilon = 1e-14);
        }
    }

    fn l2_interpolation_error(n: usize) -> f64 {
        let [p1, ..] = spaces(n);
        let f = |x: &Point3| (std::f64::consts::PI * x.x).sin() * (std::f64::consts::PI * x.y).sin();
        let fh = interpolate(&p1, |p| f(&p.x)).unwrap();
        let mesh = p1.mesh();
        let rule = gauss_triangle(8).unwrap();
        let mut err = 0.0;
        for t in (0..mesh.triangle_count()).filter(|&t| mesh.face_id(t) == CUBE_CONTACT_FACE) {
            for (b, w) in rule.points.iter().zip(&rule.weights) {
                let d = f(&mesh.point_at(t, *b)) - fh.evaluate(t, *b).unwrap();
                err += 2.0 * mesh.area(t) * w * d * d;
            }
        }
        err.sqrt()
    }

    #[test]
    fn p1_interpolation_converges_at_second_order() {
        let errors: Vec<f64> = [4, 8, 16].iter().map(|&n| l2_interpolation_error(n)).collect();
        for pair in errors.windows(2) {
            let eoc = (pair[0] / pair[1]).log2();
            assert!((eoc - 2.0).abs() < 0.2, "eoc {eoc}");
        }
    }

    #[test]
    fn coefficient_csv_round_trip() {
        let values = DVector::from_vec(vec![1.0, -2.5e-17, std::f64::consts::PI, 1e300]);
        let mut buf = Vec::new();
        write_coefficients(&values, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dof,value\n"));
        assert_eq!(read_coefficients(buf.as_slice()).unwrap(), values);

        let bad = "dof,value\n0,1.0\n2,3.0\n";
        assert!(matches!(
            read_coefficients(bad.as_bytes()),
            Err(SpaceError::DofOrder { .. })
        ));
    }
}
