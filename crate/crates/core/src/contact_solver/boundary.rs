//! Quadrature on the Dirichlet or contact part of the boundary with the
//! primal and flux basis functions tabulated at every point.

use nalgebra::DVector;

use crate::mesh::Region;
use crate::quadrature::{gauss_triangle, QuadratureError};
use crate::spaces::{FunctionSpace, Level, LocalBasis, SpaceError, SurfacePoint};

#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    pub point: SurfacePoint,
    /// Triangle of the integration mesh the point lies on.
    pub triangle: usize,
    /// Rule weight times the triangle Jacobian.
    pub weight: f64,
    pub primal: LocalBasis,
    pub primal_values: [f64; 3],
    pub flux: LocalBasis,
    pub flux_values: [f64; 3],
}

/// Points of a triangle rule on every triangle of `region`, at the level on
/// which the flux space is piecewise constant.
#[derive(Clone, Debug)]
pub struct BoundaryQuadrature {
    pub points: Vec<BoundaryPoint>,
    pub region: Region,
    pub degree: usize,
    pub level: Level,
}

#[derive(Debug, thiserror::Error)]
pub enum BoundaryError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

impl BoundaryQuadrature {
    pub fn new(
        primal: &FunctionSpace,
        flux: &FunctionSpace,
        region: Region,
        degree: usize,
    ) -> Result<Self, BoundaryError> {
        let rule = gauss_triangle(degree)?;
        let level = if primal.native_level() == Level::Refined || flux.native_level() == Level::Refined {
            Level::Refined
        } else {
            Level::Coarse
        };
        let hierarchy = flux.hierarchy();
        let mesh = hierarchy.mesh(level);
        let mut points = Vec::new();
        for t in 0..mesh.triangle_count() {
            if !region.contains(mesh.tag(t)) {
                continue;
            }
            let primal_basis = primal.local_basis(level, t)?;
            let flux_basis = flux.local_basis(level, t)?;
            let jac = 2.0 * mesh.area(t);
            for (b, w) in rule.points.iter().zip(&rule.weights) {
                points.push(BoundaryPoint {
                    point: SurfacePoint::on_level(hierarchy, level, t, *b),
                    triangle: t,
                    weight: w * jac,
                    primal: primal_basis,
                    primal_values: primal_basis.values(b),
                    flux: flux_basis,
                    flux_values: flux_basis.values(b),
                });
            }
        }
        Ok(BoundaryQuadrature {
            points,
            region,
            degree,
            level,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Values of a primal coefficient vector at every point.
    pub fn primal_values(&self, u: &DVector<f64>) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| eval(&p.primal, &p.primal_values, u))
            .collect()
    }

    /// Values of a flux coefficient vector at every point.
    pub fn flux_values(&self, lambda: &DVector<f64>) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| eval(&p.flux, &p.flux_values, lambda))
            .collect()
    }

    /// `∫ f φ_i` over the primal basis, with `f` given at the points.
    pub fn primal_load(&self, f: &[f64], n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (p, v) in self.points.iter().zip(f) {
            scatter(&mut out, &p.primal, &p.primal_values, p.weight * v);
        }
        out
    }

    /// `∫ f μ_j` over the flux basis, with `f` given at the points.
    pub fn flux_load(&self, f: &[f64], n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (p, v) in self.points.iter().zip(f) {
            scatter(&mut out, &p.flux, &p.flux_values, p.weight * v);
        }
        out
    }

    /// `∫ f g` with both given at the points.
    pub fn integrate_product(&self, f: &[f64], g: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(f.iter().zip(g))
            .map(|(p, (a, b))| p.weight * a * b)
            .sum()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.points.iter().zip(f).map(|(p, a)| p.weight * a).sum()
    }
}

fn eval(basis: &LocalBasis, values: &[f64; 3], c: &DVector<f64>) -> f64 {
    (0..basis.len()).map(|a| values[a] * c[basis.dof(a)]).sum()
}

fn scatter(out: &mut DVector<f64>, basis: &LocalBasis, values: &[f64; 3], w: f64) {
    for a in 0..basis.len() {
        out[basis.dof(a)] += w * values[a];
    }
}
