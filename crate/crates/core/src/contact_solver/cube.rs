//! Manufactured Signorini problem on the unit cube with contact on `z = 1`.
//!
//! `u = sin(πx) sin(πy) sinh(√2 π z)` is harmonic. On the contact face the
//! gap is `u` itself for `x ≤ ½` and `sin(πy) sinh(√2 π) ≥ u` beyond; the
//! flux bound is `∂u/∂ν` for `x ≥ ½` and `√2 π sin(πy) cosh(√2 π) ≥ ∂u/∂ν`
//! before. The constraint is therefore active exactly on `x ≤ ½`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::mesh::{Point3, Vector3};
use crate::spaces::SurfacePoint;

use super::{ProblemData, TraceData};

pub const NAME: &str = "cube-signorini";

fn k() -> f64 {
    std::f64::consts::SQRT_2 * PI
}

pub fn exact_u(x: &Point3) -> f64 {
    (PI * x.x).sin() * (PI * x.y).sin() * (k() * x.z).sinh()
}

pub fn exact_gradient(x: &Point3) -> Vector3 {
    let (sx, cx) = (PI * x.x).sin_cos();
    let (sy, cy) = (PI * x.y).sin_cos();
    let z = k() * x.z;
    Vector3::new(
        PI * cx * sy * z.sinh(),
        PI * sx * cy * z.sinh(),
        k() * sx * sy * z.cosh(),
    )
}

/// Normal derivative on the face the point belongs to.
pub fn exact_flux(p: &SurfacePoint) -> f64 {
    exact_gradient(&p.x).dot(&p.normal)
}

pub fn gap(p: &SurfacePoint) -> f64 {
    let x = &p.x;
    if x.x <= 0.5 {
        exact_u(x)
    } else {
        (PI * x.y).sin() * k().sinh()
    }
}

pub fn flux_bound(p: &SurfacePoint) -> f64 {
    let x = &p.x;
    if x.x >= 0.5 {
        k() * (PI * x.x).sin() * (PI * x.y).sin() * k().cosh()
    } else {
        k() * (PI * x.y).sin() * k().cosh()
    }
}

pub fn problem() -> ProblemData {
    ProblemData {
        g_d: TraceData::Zero,
        g_c: TraceData::Function(Arc::new(gap)),
        psi_c: TraceData::Function(Arc::new(flux_bound)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_is_harmonic() {
        let x = Point3::new(0.3, 0.6, 0.7);
        let e = 1e-3;
        let mut lap = -6.0 * exact_u(&x);
        for d in 0..3 {
            let mut p = x;
            p[d] += e;
            lap += exact_u(&p);
            p[d] -= 2.0 * e;
            lap += exact_u(&p);
        }
        assert!((lap / (e * e)).abs() < 1e-3 * exact_u(&x));
    }

    #[test]
    fn centre_value() {
        let v = exact_u(&Point3::new(0.5, 0.5, 0.5));
        assert!((v - 4.5561).abs() < 1e-4, "{v}");
    }

    #[test]
    fn gradient_matches_differences() {
        let x = Point3::new(0.2, 0.7, 0.4);
        let g = exact_gradient(&x);
        for d in 0..3 {
            let mut p = x;
            let mut m = x;
            p[d] += 1e-6;
            m[d] -= 1e-6;
            let fd = (exact_u(&p) - exact_u(&m)) / 2e-6;
            assert!((fd - g[d]).abs() < 1e-6 * g.norm());
        }
    }

    fn top(x: f64, y: f64) -> SurfacePoint {
        SurfacePoint {
            x: Point3::new(x, y, 1.0),
            normal: Vector3::new(0.0, 0.0, 1.0),
            face_id: 5,
            triangle: 0,
            bary: [1.0, 0.0, 0.0],
        }
    }

    #[test]
    fn signorini_conditions_hold_with_the_expected_active_set() {
        for i in 0..=20 {
            for j in 0..=20 {
                let p = top(i as f64 / 20.0, j as f64 / 20.0);
                let u = exact_u(&p.x);
                let lambda = exact_flux(&p);
                let (g, psi) = (gap(&p), flux_bound(&p));
                let scale = k().cosh() * 10.0;
                assert!(u <= g + 1e-12 * scale);
                assert!(lambda <= psi + 1e-12 * scale);
                assert!(((lambda - psi) * (u - g)).abs() < 1e-9 * scale * scale);
                if p.x.x < 0.5 {
                    assert!((u - g).abs() < 1e-12 * scale);
                }
                if p.x.x > 0.5 {
                    assert!((lambda - psi).abs() < 1e-12 * scale);
                }
            }
        }
    }
}
