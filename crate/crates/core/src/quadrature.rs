//! Triangle quadrature and singular rules for Galerkin double integrals.
//!
//! Double integrals `∫_T ∫_S f(x) k(x, y) g(y)` with a kernel singular like
//! `|x - y|^-1` (or `|x - y|^-2` for the double layer) are split by how the
//! two panels touch. Touching pairs use the regularising coordinate
//! transforms of Sauter and Schwab on `[0, 1]^4`, which cancel the kernel
//! singularity with the Jacobian; the result is integrated with tensor
//! Gauss-Legendre.
//!
//! Singular rules are expressed on the reference triangle
//! `{(x1, x2) : 0 <= x2 <= x1 <= 1}` mapped as `P0 + x1 (P1 - P0) + x2 (P2 - P1)`,
//! and stored as barycentric coordinates `(1 - x1, x1 - x2, x2)` with respect
//! to the aligned vertex order of each panel. Weights are for reference
//! triangles of area 1/2, so a physical integral is `Σ w f · (2|T|)(2|S|)`.

use std::f64::consts::PI;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QuadratureError {
    #[error("unsupported triangle rule degree {0} (supported: 0..={max})", max = MAX_TRIANGLE_DEGREE)]
    UnsupportedDegree(usize),
    #[error("singular rule order must be at least 1")]
    UnsupportedOrder,
}

pub const MAX_TRIANGLE_DEGREE: usize = 30;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the Chebyshev-like initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Quadrature on the reference triangle `{x, y >= 0, x + y <= 1}`.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    /// Barycentric coordinates `(1 - x - y, x, y)` of each point.
    pub points: Vec<[f64; 3]>,
    /// Weights, summing to the reference area 1/2.
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn from_symmetric(degree: usize, orbits: &[(f64, &[[f64; 3]])]) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (w, pts) in orbits {
            for p in pts.iter() {
                points.push(*p);
                weights.push(0.5 * w);
            }
        }
        TriangleRule {
            points,
            weights,
            degree,
        }
    }
}

fn orbit3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[b, a, a], [a, b, a], [a, a, b]]
}

/// Rule exact for polynomials of total degree `degree`.
///
/// Degrees up to 5 use classical symmetric rules (1, 3, 6 and 7 points);
/// higher degrees use a collapsed (Duffy) product of Gauss-Legendre rules.
pub fn gauss_triangle(degree: usize) -> Result<TriangleRule, QuadratureError> {
    let third = 1.0 / 3.0;
    match degree {
        0 | 1 => Ok(TriangleRule::from_symmetric(degree.max(1), &[(1.0, &[[third; 3]])])),
        2 => Ok(TriangleRule::from_symmetric(2, &[(third, &orbit3(1.0 / 6.0))])),
        3 | 4 => Ok(TriangleRule::from_symmetric(
            4,
            &[
                (0.223381589678011, &orbit3(0.445948490915965)),
                (0.109951743655322, &orbit3(0.091576213509771)),
            ],
        )),
        5 => Ok(TriangleRule::from_symmetric(
            5,
            &[
                (0.225, &[[third; 3]]),
                (0.132394152788506, &orbit3(0.470142064105115)),
                (0.125939180544827, &orbit3(0.101286507323456)),
            ],
        )),
        d if d <= MAX_TRIANGLE_DEGREE => Ok(collapsed_rule(d)),
        d => Err(QuadratureError::UnsupportedDegree(d)),
    }
}

fn collapsed_rule(degree: usize) -> TriangleRule {
    // ∫ x^a y^b becomes a polynomial of degree a + b + 1 in the collapsed variable
    let m = (degree + 2).div_ceil(2);
    let (nodes, weights) = gauss_legendre(m);
    let mut points = Vec::with_capacity(m * m);
    let mut w = Vec::with_capacity(m * m);
    for (s, ws) in nodes.iter().zip(&weights) {
        for (t, wt) in nodes.iter().zip(&weights) {
            let x = *s;
            let y = t * (1.0 - s);
            points.push([1.0 - x - y, x, y]);
            w.push(ws * wt * (1.0 - s));
        }
    }
    TriangleRule {
        points,
        weights: w,
        degree,
    }
}

/// How two panels touch, with the vertex orders that align the shared simplex.
///
/// `test_order` and `trial_order` list local vertex indices (0..3) so that the
/// shared vertices come first, in the same global order for both panels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PanelPairClass {
    Disjoint,
    SharedVertex {
        test_order: [usize; 3],
        trial_order: [usize; 3],
    },
    SharedEdge {
        test_order: [usize; 3],
        trial_order: [usize; 3],
    },
    Coincident,
}

/// Kind of singular rule, without the alignment permutations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SingularKind {
    SharedVertex,
    SharedEdge,
    Coincident,
}

impl PanelPairClass {
    pub fn shared_count(&self) -> usize {
        match self {
            PanelPairClass::Disjoint => 0,
            PanelPairClass::SharedVertex { .. } => 1,
            PanelPairClass::SharedEdge { .. } => 2,
            PanelPairClass::Coincident => 3,
        }
    }
}

pub fn classify_panels(test: [usize; 3], trial: [usize; 3]) -> PanelPairClass {
    let mut shared = [(0usize, 0usize); 3];
    let mut count = 0;
    for (i, a) in test.iter().enumerate() {
        if let Some(j) = trial.iter().position(|b| b == a) {
            shared[count] = (i, j);
            count += 1;
        }
    }
    let complete = |mut order: [usize; 3], filled: usize| {
        let mut next = filled;
        for k in 0..3 {
            if !order[..filled].contains(&k) {
                order[next] = k;
                next += 1;
            }
        }
        order
    };
    match count {
        0 => PanelPairClass::Disjoint,
        1 => PanelPairClass::SharedVertex {
            test_order: complete([shared[0].0, 0, 0], 1),
            trial_order: complete([shared[0].1, 0, 0], 1),
        },
        2 => PanelPairClass::SharedEdge {
            test_order: complete([shared[0].0, shared[1].0, 0], 2),
            trial_order: complete([shared[0].1, shared[1].1, 0], 2),
        },
        _ => PanelPairClass::Coincident,
    }
}

/// Tensorised 4D rule over a pair of reference triangles.
#[derive(Clone, Debug)]
pub struct SingularRule {
    pub kind: SingularKind,
    pub order: usize,
    /// Barycentric coordinates in the aligned test panel.
    pub test_points: Vec<[f64; 3]>,
    /// Barycentric coordinates in the aligned trial panel.
    pub trial_points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SingularRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn bary(x: [f64; 2]) -> [f64; 3] {
    [1.0 - x[0], x[0] - x[1], x[1]]
}

/// Regularised rule for a touching panel pair, `order` Gauss points per
/// direction of `[0, 1]^4` in every subregion.
pub fn singular_pair_rule(kind: SingularKind, order: usize) -> Result<SingularRule, QuadratureError> {
    if order == 0 {
        return Err(QuadratureError::UnsupportedOrder);
    }
    let (nodes, weights) = gauss_legendre(order);
    let mut rule = SingularRule {
        kind,
        order,
        test_points: Vec::new(),
        trial_points: Vec::new(),
        weights: Vec::new(),
    };
    let mut push = |x: [f64; 2], y: [f64; 2], w: f64| {
        rule.test_points.push(bary(x));
        rule.trial_points.push(bary(y));
        rule.weights.push(w);
    };
    for (i0, &xi) in nodes.iter().enumerate() {
        for (i1, &e1) in nodes.iter().enumerate() {
            for (i2, &e2) in nodes.iter().enumerate() {
                for (i3, &e3) in nodes.iter().enumerate() {
                    let w = weights[i0] * weights[i1] * weights[i2] * weights[i3];
                    match kind {
                        SingularKind::Coincident => {
                            let jac = w * xi.powi(3) * e1 * e1 * e2;
                            let a = [xi, xi * (1.0 - e1 + e1 * e2)];
                            let b = [xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)];
                            push(a, b, jac);
                            push(b, a, jac);
                            let a = [xi, xi * e1 * (1.0 - e2 + e2 * e3)];
                            let b = [xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)];
                            push(a, b, jac);
                            push(b, a, jac);
                            let a = [xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)];
                            let b = [xi, xi * e1 * (1.0 - e2)];
                            push(a, b, jac);
                            push(b, a, jac);
                        }
                        SingularKind::SharedEdge => {
                            // x = (a, a b), y = (c, c d) with the singular line at
                            // a = c, b = d = 0. Split on which of a, c is larger
                            // (the smaller is (1 - r) times the larger), then split
                            // the cube (r, b, d) by its largest coordinate.
                            let small = [e1, e1 * e2, e1 * e3];
                            for (r, b, d) in [
                                (small[0], small[1], small[2]),
                                (small[1], small[0], small[2]),
                                (small[1], small[2], small[0]),
                            ] {
                                let jac = w * xi.powi(3) * (1.0 - r) * e1 * e1;
                                let s = xi * (1.0 - r);
                                push([xi, xi * b], [s, s * d], jac);
                                push([s, s * b], [xi, xi * d], jac);
                            }
                        }
                        SingularKind::SharedVertex => {
                            let jac = w * xi.powi(3) * e2;
                            push([xi, xi * e1], [xi * e2, xi * e2 * e3], jac);
                            push([xi * e2, xi * e2 * e1], [xi, xi * e3], jac);
                        }
                    }
                }
            }
        }
    }
    Ok(rule)
}

/// Quadrature orders used for panel-pair integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureOrders {
    /// Triangle rule degree for well-separated panels.
    pub regular_degree: usize,
    /// Gauss points per direction for panels sharing a vertex.
    pub vertex_order: usize,
    /// Gauss points per direction for panels sharing an edge.
    pub edge_order: usize,
    /// Gauss points per direction for coincident panels.
    pub coincident_order: usize,
    /// Disjoint panels closer than this many panel diameters use the
    /// shared-vertex order.
    pub near_field_ratio: f64,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        QuadratureOrders {
            regular_degree: 4,
            vertex_order: 5,
            edge_order: 5,
            coincident_order: 6,
            near_field_ratio: 1.0,
        }
    }
}

impl QuadratureOrders {
    /// Every order raised by `extra` (degree raised by `2 * extra`).
    pub fn escalated(&self, extra: usize) -> Self {
        QuadratureOrders {
            regular_degree: self.regular_degree + 2 * extra,
            vertex_order: self.vertex_order + extra,
            edge_order: self.edge_order + extra,
            coincident_order: self.coincident_order + extra,
            near_field_ratio: self.near_field_ratio,
        }
    }

    /// Triangle rule degree with the same accuracy as `vertex_order` Gauss points.
    pub fn near_degree(&self) -> usize {
        (2 * self.vertex_order).saturating_sub(2).max(self.regular_degree)
    }
}

/// All rules needed to integrate panel pairs at one set of orders.
#[derive(Clone, Debug)]
pub struct PairRules {
    pub orders: QuadratureOrders,
    pub regular: TriangleRule,
    pub near: TriangleRule,
    pub vertex: SingularRule,
    pub edge: SingularRule,
    pub coincident: SingularRule,
}

impl PairRules {
    pub fn new(orders: QuadratureOrders) -> Result<Self, QuadratureError> {
        Ok(PairRules {
            orders,
            regular: gauss_triangle(orders.regular_degree)?,
            near: gauss_triangle(orders.near_degree())?,
            vertex: singular_pair_rule(SingularKind::SharedVertex, orders.vertex_order)?,
            edge: singular_pair_rule(SingularKind::SharedEdge, orders.edge_order)?,
            coincident: singular_pair_rule(SingularKind::Coincident, orders.coincident_order)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ x^a y^b over {x, y >= 0, x + y <= 1}.
    fn monomial_moment(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn gauss_legendre_is_exact() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) as i32 {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
                assert_relative_eq!(approx, 1.0 / (k + 1) as f64, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn triangle_moments() {
        let rule = gauss_triangle(1).unwrap();
        let area: f64 = rule.weights.iter().sum();
        assert_eq!(area, 0.5);
        let x: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[1]).sum();
        assert_relative_eq!(x, 1.0 / 6.0, epsilon = 1e-14);

        let rule = gauss_triangle(4).unwrap();
        let x2y2: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[1].powi(2) * p[2].powi(2))
            .sum();
        assert_relative_eq!(monomial_moment(2, 2), 1.0 / 180.0, epsilon = 1e-16);
        assert_relative_eq!(x2y2, 1.0 / 180.0, epsilon = 1e-14);
    }

    #[test]
    fn every_degree_is_exact() {
        for degree in 0..=14 {
            let rule = gauss_triangle(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert_relative_eq!(rule.weights.iter().sum::<f64>(), 0.5, epsilon = 1e-14);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let approx: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    assert_relative_eq!(approx, monomial_moment(a, b), epsilon = 1e-14);
                }
            }
        }
        assert_eq!(
            gauss_triangle(MAX_TRIANGLE_DEGREE + 1).unwrap_err(),
            QuadratureError::UnsupportedDegree(MAX_TRIANGLE_DEGREE + 1)
        );
    }

    #[test]
    fn classification() {
        assert_eq!(classify_panels([0, 1, 2], [0, 1, 2]), PanelPairClass::Coincident);
        assert_eq!(classify_panels([0, 1, 2], [2, 0, 1]), PanelPairClass::Coincident);
        assert_eq!(classify_panels([0, 1, 2], [3, 4, 5]), PanelPairClass::Disjoint);
        match classify_panels([0, 1, 2], [1, 2, 3]) {
            PanelPairClass::SharedEdge {
                test_order,
                trial_order,
            } => {
                assert_eq!(test_order, [1, 2, 0]);
                assert_eq!(trial_order, [0, 1, 2]);
            }
            other => panic!("{other:?}"),
        }
        match classify_panels([5, 1, 2], [7, 8, 5]) {
            PanelPairClass::SharedVertex {
                test_order,
                trial_order,
            } => {
                assert_eq!(test_order, [0, 1, 2]);
                assert_eq!(trial_order, [2, 0, 1]);
            }
            other => panic!("{other:?}"),
        }
    }

    /// ∫_τ̂ x1^a x2^b over the reference {0 <= x2 <= x1 <= 1}.
    fn sauter_moment(a: i32, b: i32) -> f64 {
        1.0 / ((b + 1) as f64 * (a + b + 2) as f64)
    }

    fn reference_coords(p: &[f64; 3]) -> [f64; 2] {
        // inverse of (1 - x1, x1 - x2, x2)
        [1.0 - p[0], p[2]]
    }

    #[test]
    fn singular_rules_cover_the_product_domain() {
        // polynomial integrands are integrated exactly only if the transforms
        // tile τ̂ × τ̂ with the correct Jacobians
        for kind in [
            SingularKind::Coincident,
            SingularKind::SharedEdge,
            SingularKind::SharedVertex,
        ] {
            let rule = singular_pair_rule(kind, 6).unwrap();
            for (a, b, c, d) in [
                (0, 0, 0, 0),
                (1, 0, 0, 0),
                (0, 1, 1, 0),
                (2, 1, 0, 1),
                (1, 1, 1, 1),
                (0, 0, 0, 3),
            ] {
                let approx: f64 = (0..rule.len())
                    .map(|q| {
                        let x = reference_coords(&rule.test_points[q]);
                        let y = reference_coords(&rule.trial_points[q]);
                        rule.weights[q] * x[0].powi(a) * x[1].powi(b) * y[0].powi(c) * y[1].powi(d)
                    })
                    .sum();
                let exact = sauter_moment(a, b) * sauter_moment(c, d);
                assert_relative_eq!(approx, exact, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn unsupported_order() {
        assert_eq!(
            singular_pair_rule(SingularKind::Coincident, 0).unwrap_err(),
            QuadratureError::UnsupportedOrder
        );
    }
}
