//! Closed triangulated surfaces, barycentric refinement and the dual grid.
//!
//! A [`SurfaceMesh`] is validated on construction: every edge must be shared
//! by exactly two triangles, the orientation must be consistent with an
//! outward normal, and the boundary tag must be constant on each flat face.
//! Meshes are immutable once built.

mod io;

use std::collections::HashMap;
use std::sync::Arc;

pub use io::{load_mesh, read_mesh, save_mesh, write_mesh};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

/// Relative area below which a triangle is considered degenerate (times `h²`).
const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {triangle} references vertex {vertex}, but only {count} vertices exist")]
    IndexOutOfRange {
        triangle: usize,
        vertex: usize,
        count: usize,
    },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("triangle {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("non-manifold edge ({a}, {b}): used by {count} triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("inconsistent orientation across edge ({a}, {b})")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("inward orientation: enclosed signed volume is {volume}")]
    InwardOrientation { volume: f64 },
    #[error("degenerate triangle {triangle} (area {area:e})")]
    Degenerate { triangle: usize, area: f64 },
    #[error("face {face_id} mixes Dirichlet and contact tags")]
    MixedBoundaryTag { face_id: usize },
    #[error("mesh segments per edge must be at least 1")]
    InvalidSegments,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boundary condition carried by a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Contact,
}

impl BoundaryTag {
    pub fn symbol(self) -> char {
        match self {
            BoundaryTag::Dirichlet => 'D',
            BoundaryTag::Contact => 'C',
        }
    }
}

/// Region of the boundary an integral is restricted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Whole,
    Dirichlet,
    Contact,
}

impl Region {
    pub fn contains(self, tag: BoundaryTag) -> bool {
        match self {
            Region::Whole => true,
            Region::Dirichlet => tag == BoundaryTag::Dirichlet,
            Region::Contact => tag == BoundaryTag::Contact,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidationOptions {
    /// Flip every triangle when the surface is consistently oriented inward.
    pub auto_flip: bool,
}

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[usize; 3]>,
    face_ids: Vec<usize>,
    tags: Vec<BoundaryTag>,
    normals: Vec<Vector3>,
    areas: Vec<f64>,
    diameters: Vec<f64>,
}

impl PartialEq for SurfaceMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.triangles == other.triangles
            && self.face_ids == other.face_ids
            && self.tags == other.tags
    }
}

impl SurfaceMesh {
    pub fn new(
        vertices: Vec<Point3>,
        triangles: Vec<[usize; 3]>,
        face_ids: Vec<usize>,
        tags: Vec<BoundaryTag>,
    ) -> Result<Self, MeshError> {
        Self::with_options(vertices, triangles, face_ids, tags, ValidationOptions::default())
    }

    pub fn with_options(
        vertices: Vec<Point3>,
        mut triangles: Vec<[usize; 3]>,
        face_ids: Vec<usize>,
        tags: Vec<BoundaryTag>,
        options: ValidationOptions,
    ) -> Result<Self, MeshError> {
        assert_eq!(triangles.len(), face_ids.len(), "one face id per triangle");
        assert_eq!(triangles.len(), tags.len(), "one boundary tag per triangle");
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.coords.iter().all(|c| c.is_finite()) {
                return Err(MeshError::NonFinite(i));
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&vertex) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    vertex,
                    count: vertices.len(),
                });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex(t));
            }
        }
        check_topology(&triangles)?;

        let mut face_tag: HashMap<usize, BoundaryTag> = HashMap::new();
        for (&face_id, &tag) in face_ids.iter().zip(&tags) {
            if *face_tag.entry(face_id).or_insert(tag) != tag {
                return Err(MeshError::MixedBoundaryTag { face_id });
            }
        }

        let volume = signed_volume_of(&vertices, &triangles);
        if volume <= 0.0 {
            if !options.auto_flip {
                return Err(MeshError::InwardOrientation { volume });
            }
            for tri in triangles.iter_mut() {
                tri.swap(1, 2);
            }
        }

        let mut normals = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut diameters = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let [a, b, c] = tri.map(|i| vertices[i]);
            let cross = (b - a).cross(&(c - a));
            let norm = cross.norm();
            areas.push(0.5 * norm);
            normals.push(if norm > 0.0 { cross / norm } else { cross });
            diameters.push(triangle_diameter(&[a, b, c]));
        }
        let h = diameters.iter().cloned().fold(0.0, f64::max);
        for (t, &area) in areas.iter().enumerate() {
            if area < DEGENERATE_AREA * h * h {
                return Err(MeshError::Degenerate { triangle: t, area });
            }
        }

        Ok(SurfaceMesh {
            vertices,
            triangles,
            face_ids,
            tags,
            normals,
            areas,
            diameters,
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn face_ids(&self) -> &[usize] {
        &self.face_ids
    }

    pub fn tags(&self) -> &[BoundaryTag] {
        &self.tags
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn corners(&self, t: usize) -> [Point3; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn tag(&self, t: usize) -> BoundaryTag {
        self.tags[t]
    }

    pub fn face_id(&self, t: usize) -> usize {
        self.face_ids[t]
    }

    /// Unit outward normal of triangle `t`.
    pub fn normal(&self, t: usize) -> Vector3 {
        self.normals[t]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    /// Longest edge of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        self.diameters[t]
    }

    pub fn centroid(&self, t: usize) -> Point3 {
        let [a, b, c] = self.corners(t);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    /// Point with barycentric coordinates `bary` (weights of the three corners).
    pub fn point_at(&self, t: usize, bary: [f64; 3]) -> Point3 {
        let [a, b, c] = self.corners(t);
        Point3::from(a.coords * bary[0] + b.coords * bary[1] + c.coords * bary[2])
    }

    /// Largest triangle diameter.
    pub fn h(&self) -> f64 {
        self.diameters.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    pub fn region_area(&self, region: Region) -> f64 {
        self.areas
            .iter()
            .zip(&self.tags)
            .filter(|(_, &tag)| region.contains(tag))
            .map(|(a, _)| a)
            .sum()
    }

    /// `(1/3) Σ ∫_T x·ν`, the volume enclosed by the surface.
    pub fn signed_volume(&self) -> f64 {
        signed_volume_of(&self.vertices, &self.triangles)
    }

    /// For each vertex, the triangles that contain it.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut adjacency = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                adjacency[v].push(t);
            }
        }
        adjacency
    }
}

fn signed_volume_of(vertices: &[Point3], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|tri| {
            let [a, b, c] = tri.map(|i| vertices[i].coords);
            a.dot(&b.cross(&c))
        })
        .sum::<f64>()
        / 6.0
}

fn check_topology(triangles: &[[usize; 3]]) -> Result<(), MeshError> {
    // undirected edge -> (count, orientation balance)
    let mut edges: HashMap<(usize, usize), (usize, i32)> = HashMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let entry = edges.entry(key).or_insert((0, 0));
            entry.0 += 1;
            entry.1 += if a < b { 1 } else { -1 };
        }
    }
    let mut keys: Vec<_> = edges.keys().copied().collect();
    keys.sort_unstable();
    for (a, b) in &keys {
        let (count, _) = edges[&(*a, *b)];
        if count != 2 {
            return Err(MeshError::NonManifoldEdge { a: *a, b: *b, count });
        }
    }
    for (a, b) in keys {
        if edges[&(a, b)].1 != 0 {
            return Err(MeshError::InconsistentOrientation { a, b });
        }
    }
    Ok(())
}

/// Face index of the unit cube face `z = 1`, tagged as the contact boundary.
pub const CUBE_CONTACT_FACE: usize = 5;

/// Structured triangulation of the unit cube surface with `n` segments per
/// edge. Each face square is split into two triangles, giving `12 n²`
/// triangles and `h = √2 / n`. The face `z = 1` is tagged [`BoundaryTag::Contact`].
pub fn generate_cube_mesh(n: usize) -> Result<SurfaceMesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidSegments);
    }
    // (axis held fixed, its value, in-plane u axis, in-plane v axis) with u × v outward.
    const FACES: [(usize, usize, usize, usize); 6] = [
        (0, 0, 2, 1),
        (0, 1, 1, 2),
        (1, 0, 0, 2),
        (1, 1, 2, 0),
        (2, 0, 1, 0),
        (2, 1, 0, 1),
    ];
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(12 * n * n);
    let mut face_ids = Vec::with_capacity(12 * n * n);
    let mut tags = Vec::with_capacity(12 * n * n);

    let mut vertex = |fixed: usize, value: usize, u: usize, v: usize, i: usize, j: usize| {
        let mut key = [0usize; 3];
        key[fixed] = value * n;
        key[u] = i;
        key[v] = j;
        *index.entry(key).or_insert_with(|| {
            vertices.push(Point3::new(
                key[0] as f64 / n as f64,
                key[1] as f64 / n as f64,
                key[2] as f64 / n as f64,
            ));
            vertices.len() - 1
        })
    };

    for (face_id, &(fixed, value, u, v)) in FACES.iter().enumerate() {
        let tag = if face_id == CUBE_CONTACT_FACE {
            BoundaryTag::Contact
        } else {
            BoundaryTag::Dirichlet
        };
        for j in 0..n {
            for i in 0..n {
                let p00 = vertex(fixed, value, u, v, i, j);
                let p10 = vertex(fixed, value, u, v, i + 1, j);
                let p11 = vertex(fixed, value, u, v, i + 1, j + 1);
                let p01 = vertex(fixed, value, u, v, i, j + 1);
                triangles.push([p00, p10, p11]);
                triangles.push([p00, p11, p01]);
                face_ids.extend([face_id, face_id]);
                tags.extend([tag, tag]);
            }
        }
    }
    SurfaceMesh::new(vertices, triangles, face_ids, tags)
}

/// Longest edge of a triangle.
pub fn triangle_diameter(corners: &[Point3; 3]) -> f64 {
    let [a, b, c] = corners;
    (b - a).norm().max((c - b).norm()).max((a - c).norm())
}

/// Largest triangle diameter of the mesh.
pub fn mesh_size(mesh: &SurfaceMesh) -> f64 {
    mesh.h()
}

/// Where a vertex of a barycentric refinement comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexOrigin {
    /// A vertex of the coarse mesh.
    Vertex(usize),
    /// Midpoint of the coarse edge between two vertices.
    EdgeMidpoint(usize, usize),
    /// Barycenter of a coarse triangle.
    Barycenter(usize),
}

impl VertexOrigin {
    /// Coarse vertices and weights whose combination gives this fine vertex.
    pub fn coarse_weights(&self, coarse: &SurfaceMesh) -> Vec<(usize, f64)> {
        match *self {
            VertexOrigin::Vertex(v) => vec![(v, 1.0)],
            VertexOrigin::EdgeMidpoint(a, b) => vec![(a, 0.5), (b, 0.5)],
            VertexOrigin::Barycenter(t) => coarse.triangle(t).iter().map(|&v| (v, 1.0 / 3.0)).collect(),
        }
    }
}

/// Barycentric refinement of a coarse mesh: six fine triangles per coarse
/// triangle, built from the edge midpoints and the barycenter.
#[derive(Clone, Debug)]
pub struct BarycentricRefinement {
    coarse: Arc<SurfaceMesh>,
    fine: SurfaceMesh,
    parent: Vec<usize>,
    coarse_vertex: Vec<usize>,
    origin: Vec<VertexOrigin>,
}

impl BarycentricRefinement {
    pub fn coarse(&self) -> &Arc<SurfaceMesh> {
        &self.coarse
    }

    pub fn fine(&self) -> &SurfaceMesh {
        &self.fine
    }

    /// Coarse triangle containing fine triangle `t`.
    pub fn parent(&self, t: usize) -> usize {
        self.parent[t]
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    /// The single coarse vertex that is a corner of fine triangle `t`.
    pub fn coarse_vertex(&self, t: usize) -> usize {
        self.coarse_vertex[t]
    }

    pub fn origin(&self, fine_vertex: usize) -> VertexOrigin {
        self.origin[fine_vertex]
    }

    pub fn origins(&self) -> &[VertexOrigin] {
        &self.origin
    }
}

/// Split every triangle into six (corners, edge midpoints, barycenter).
pub fn barycentric_refine(coarse: Arc<SurfaceMesh>) -> BarycentricRefinement {
    let nv = coarse.vertex_count();
    let mut vertices: Vec<Point3> = coarse.vertices().to_vec();
    let mut origin: Vec<VertexOrigin> = (0..nv).map(VertexOrigin::Vertex).collect();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point3>, origin: &mut Vec<_>| {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            vertices.push(nalgebra::center(&vertices[a], &vertices[b]));
            origin.push(VertexOrigin::EdgeMidpoint(key.0, key.1));
            vertices.len() - 1
        })
    };

    let nt = coarse.triangle_count();
    let mut triangles = Vec::with_capacity(6 * nt);
    let mut face_ids = Vec::with_capacity(6 * nt);
    let mut tags = Vec::with_capacity(6 * nt);
    let mut parent = Vec::with_capacity(6 * nt);
    let mut coarse_vertex = Vec::with_capacity(6 * nt);
    for t in 0..nt {
        let [a, b, c] = coarse.triangle(t);
        let mab = midpoint(a, b, &mut vertices, &mut origin);
        let mbc = midpoint(b, c, &mut vertices, &mut origin);
        let mca = midpoint(c, a, &mut vertices, &mut origin);
        vertices.push(coarse.centroid(t));
        origin.push(VertexOrigin::Barycenter(t));
        let g = vertices.len() - 1;
        let children = [
            ([a, mab, g], a),
            ([mab, b, g], b),
            ([b, mbc, g], b),
            ([mbc, c, g], c),
            ([c, mca, g], c),
            ([mca, a, g], a),
        ];
        for (tri, owner) in children {
            triangles.push(tri);
            face_ids.push(coarse.face_id(t));
            tags.push(coarse.tag(t));
            parent.push(t);
            coarse_vertex.push(owner);
        }
    }
    let fine = SurfaceMesh::new(vertices, triangles, face_ids, tags).expect("refinement of a valid mesh is valid");
    BarycentricRefinement {
        coarse,
        fine,
        parent,
        coarse_vertex,
        origin,
    }
}

/// The barycentric dual grid: one cell per coarse vertex, made of the fine
/// triangles of the barycentric refinement that touch that vertex. Cells are
/// kept as unions of flat fine triangles since they need not be planar.
#[derive(Clone, Debug)]
pub struct DualGrid {
    refinement: Arc<BarycentricRefinement>,
    cells: Vec<Vec<usize>>,
}

impl DualGrid {
    pub fn refinement(&self) -> &Arc<BarycentricRefinement> {
        &self.refinement
    }

    pub fn coarse(&self) -> &Arc<SurfaceMesh> {
        self.refinement.coarse()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Fine triangles making up the cell of coarse vertex `v`.
    pub fn cell(&self, v: usize) -> &[usize] {
        &self.cells[v]
    }

    /// Coarse vertex owning fine triangle `t`.
    pub fn owner(&self, t: usize) -> usize {
        self.refinement.coarse_vertex(t)
    }

    pub fn cell_area(&self, v: usize) -> f64 {
        let fine = self.refinement.fine();
        self.cells[v].iter().map(|&t| fine.area(t)).sum()
    }
}

pub fn build_dual_grid(refinement: Arc<BarycentricRefinement>) -> DualGrid {
    let mut cells = vec![Vec::new(); refinement.coarse().vertex_count()];
    for t in 0..refinement.fine().triangle_count() {
        cells[refinement.coarse_vertex(t)].push(t);
    }
    DualGrid { refinement, cells }
}
