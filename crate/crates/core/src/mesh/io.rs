//! ASCII surface mesh format.
//!
//! ```text
//! surfmesh 1
//! <nv> <nt>
//! x y z            (nv lines)
//! i j k face_id D|C (nt lines, 0-based indices)
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BoundaryTag, MeshError, Point3, SurfaceMesh, ValidationOptions};

pub fn write_mesh<W: Write>(mesh: &SurfaceMesh, mut out: W) -> std::io::Result<()> {
    writeln!(out, "surfmesh 1")?;
    writeln!(out, "{} {}", mesh.vertex_count(), mesh.triangle_count())?;
    for p in mesh.vertices() {
        // `Display` for f64 prints the shortest string that round-trips
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    for t in 0..mesh.triangle_count() {
        let [i, j, k] = mesh.triangle(t);
        writeln!(out, "{} {} {} {} {}", i, j, k, mesh.face_id(t), mesh.tag(t).symbol())?;
    }
    Ok(())
}

pub fn save_mesh(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_mesh(mesh, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>, options: ValidationOptions) -> Result<SurfaceMesh, MeshError> {
    read_mesh(BufReader::new(File::open(path)?), options)
}

fn parse_err(line: usize, reason: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let field = field.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    field
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{field}'")))
}

pub fn read_mesh<R: Read>(input: R, options: ValidationOptions) -> Result<SurfaceMesh, MeshError> {
    let mut lines = BufReader::new(input).lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next_line = |what: &str| -> Result<(usize, String), MeshError> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(parse_err(0, format!("unexpected end of file, expected {what}"))),
        }
    };

    let (n, header) = next_line("header")?;
    if header.trim() != "surfmesh 1" {
        return Err(parse_err(
            n,
            format!("expected header 'surfmesh 1', found '{}'", header.trim()),
        ));
    }
    let (n, counts) = next_line("counts")?;
    let mut fields = counts.split_whitespace();
    let nv: usize = parse_field(fields.next(), n, "vertex count")?;
    let nt: usize = parse_field(fields.next(), n, "triangle count")?;
    if fields.next().is_some() {
        return Err(parse_err(n, "trailing fields after counts"));
    }

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = next_line("vertex line")?;
        let mut f = l.split_whitespace();
        let x = parse_field(f.next(), n, "x coordinate")?;
        let y = parse_field(f.next(), n, "y coordinate")?;
        let z = parse_field(f.next(), n, "z coordinate")?;
        if f.next().is_some() {
            return Err(parse_err(n, "trailing fields after vertex"));
        }
        vertices.push(Point3::new(x, y, z));
    }

    let mut triangles = Vec::with_capacity(nt);
    let mut face_ids = Vec::with_capacity(nt);
    let mut tags = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = next_line("triangle line")?;
        let mut f = l.split_whitespace();
        let mut tri = [0usize; 3];
        for slot in tri.iter_mut() {
            *slot = parse_field(f.next(), n, "vertex index")?;
            if *slot >= nv {
                return Err(parse_err(n, format!("vertex index {slot} out of range (nv = {nv})")));
            }
        }
        face_ids.push(parse_field(f.next(), n, "face id")?);
        let tag = match f.next() {
            Some("D") => BoundaryTag::Dirichlet,
            Some("C") => BoundaryTag::Contact,
            Some(other) => return Err(parse_err(n, format!("invalid boundary tag '{other}'"))),
            None => return Err(parse_err(n, "missing boundary tag")),
        };
        if f.next().is_some() {
            return Err(parse_err(n, "trailing fields after triangle"));
        }
        tags.push(tag);
        triangles.push(tri);
    }
    SurfaceMesh::with_options(vertices, triangles, face_ids, tags, options)
}
