//! CSV tables and legacy VTK surface files.

use std::io::Write;

use nalgebra::DVector;

use crate::contact_solver::{pospart, ContactSystem};
use crate::operators::OperatorBlocks;

use super::{ConvergenceTable, PostprocessError, TauSweepRow};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Columns `h,dofs,err_V,err_L2_u,err_L2_lambda,eoc_running,outer_iters,avg_inner_iters`.
pub fn write_convergence_csv<W: Write>(table: &ConvergenceTable, out: W) -> Result<(), PostprocessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "h",
        "dofs",
        "err_V",
        "err_L2_u",
        "err_L2_lambda",
        "eoc_running",
        "outer_iters",
        "avg_inner_iters",
    ])?;
    for (row, eoc) in table.rows.iter().zip(table.running_eoc()) {
        let e = &row.errors;
        w.write_record([
            e.h.to_string(),
            e.dofs.to_string(),
            e.err_v.to_string(),
            e.err_l2_u.to_string(),
            e.err_l2_lambda.to_string(),
            opt(eoc),
            row.report.outer_iterations.to_string(),
            row.report.average_inner_iterations().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `tau,err_V,outer_iters,avg_inner_iters`.
pub fn write_tau_sweep_csv<W: Write>(rows: &[TauSweepRow], out: W) -> Result<(), PostprocessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "err_V", "outer_iters", "avg_inner_iters"])?;
    for r in rows {
        w.write_record([
            r.tau.to_string(),
            r.err_v.to_string(),
            r.outer_iterations.to_string(),
            r.average_inner_iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fraction of contact quadrature points with `P^τ > 0` on each triangle of
/// the integration mesh; zero off the contact boundary.
pub fn active_indicator(system: &ContactSystem<'_>, u: &DVector<f64>, lambda: &DVector<f64>) -> Vec<f64> {
    let q = system.contact_quadrature();
    let mesh = system.blocks().flux.hierarchy().mesh(q.level);
    let mut active = vec![0.0; mesh.triangle_count()];
    let mut count = vec![0usize; mesh.triangle_count()];
    for (point, p) in q.points.iter().zip(system.p_tau_values(u, lambda)) {
        count[point.triangle] += 1;
        if pospart(p) > 0.0 {
            active[point.triangle] += 1.0;
        }
    }
    for (a, c) in active.iter_mut().zip(count) {
        if c > 0 {
            *a /= c as f64;
        }
    }
    active
}

/// Legacy ASCII VTK polydata of the integration mesh with `u` as point
/// data and `lambda` and the active-set indicator as cell data.
pub fn write_surface_vtk<W: Write>(
    system: &ContactSystem<'_>,
    u: &DVector<f64>,
    lambda: &DVector<f64>,
    mut out: W,
) -> Result<(), PostprocessError> {
    let blocks: &OperatorBlocks = system.blocks();
    let level = system.contact_quadrature().level;
    let mesh = blocks.flux.hierarchy().mesh(level);
    let primal = blocks.primal.local_bases(level)?;
    let flux = blocks.flux.local_bases(level)?;
    let active = active_indicator(system, u, lambda);

    let mut point_values = vec![0.0; mesh.vertex_count()];
    for t in 0..mesh.triangle_count() {
        let b = &primal[t];
        for (k, &v) in mesh.triangle(t).iter().enumerate() {
            let mut bary = [0.0; 3];
            bary[k] = 1.0;
            let vals = b.values(&bary);
            point_values[v] = (0..b.len()).map(|a| vals[a] * u[b.dof(a)]).sum();
        }
    }

    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "boundary traces")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET POLYDATA")?;
    writeln!(out, "POINTS {} double", mesh.vertex_count())?;
    for p in mesh.vertices() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    writeln!(out, "POLYGONS {} {}", mesh.triangle_count(), 4 * mesh.triangle_count())?;
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "POINT_DATA {}", mesh.vertex_count())?;
    writeln!(out, "SCALARS u double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in &point_values {
        writeln!(out, "{v}")?;
    }
    writeln!(out, "CELL_DATA {}", mesh.triangle_count())?;
    writeln!(out, "SCALARS lambda double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for b in &flux {
        let vals = b.values(&[1.0 / 3.0; 3]);
        let v: f64 = (0..b.len()).map(|a| vals[a] * lambda[b.dof(a)]).sum();
        writeln!(out, "{v}")?;
    }
    writeln!(out, "SCALARS active double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for a in &active {
        writeln!(out, "{a}")?;
    }
    out.flush()?;
    Ok(())
}
