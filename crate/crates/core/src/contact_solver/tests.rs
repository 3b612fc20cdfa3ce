use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::mesh::{generate_cube_mesh, BoundaryTag, SurfaceMesh};
use crate::operators::{OperatorBlocks, Pairing};
use crate::quadrature::QuadratureOrders;
use crate::spaces::{interpolate, MeshHierarchy};

fn blocks_for(mesh: SurfaceMesh, pairing: Pairing) -> OperatorBlocks {
    let h = Arc::new(MeshHierarchy::new(Arc::new(mesh)));
    OperatorBlocks::assemble(h, pairing, QuadratureOrders::default()).unwrap()
}

fn cube_blocks(n: usize, pairing: Pairing) -> OperatorBlocks {
    blocks_for(generate_cube_mesh(n).unwrap(), pairing)
}

fn dual2() -> &'static OperatorBlocks {
    static B: OnceLock<OperatorBlocks> = OnceLock::new();
    B.get_or_init(|| cube_blocks(2, Pairing::P1Dual0))
}

fn dp2() -> &'static OperatorBlocks {
    static B: OnceLock<OperatorBlocks> = OnceLock::new();
    B.get_or_init(|| cube_blocks(2, Pairing::P1DP0))
}

/// Cube with every face tagged Dirichlet.
fn dirichlet_only(n: usize) -> SurfaceMesh {
    let m = generate_cube_mesh(n).unwrap();
    SurfaceMesh::new(
        m.vertices().to_vec(),
        m.triangles().to_vec(),
        m.face_ids().to_vec(),
        vec![BoundaryTag::Dirichlet; m.triangle_count()],
    )
    .unwrap()
}

fn params(blocks: &OperatorBlocks) -> NitscheParameters {
    NitscheParameters::for_mesh_size(blocks.primal.hierarchy().coarse().h())
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.gen_range(-1.0..1.0))
}

fn exact_traces(blocks: &OperatorBlocks) -> (DVector<f64>, DVector<f64>) {
    let u = interpolate(&blocks.primal, |p| cube::exact_u(&p.x)).unwrap();
    let l = interpolate(&blocks.flux, cube::exact_flux).unwrap();
    (u.into_coefficients(), l.into_coefficients())
}

#[test]
fn positive_and_negative_parts() {
    assert_eq!((pospart(3.0), negpart(3.0)), (3.0, 0.0));
    assert_eq!((pospart(-2.0), negpart(-2.0)), (0.0, -2.0));
    assert_eq!((pospart(0.0), negpart(0.0)), (0.0, 0.0));
}

proptest! {
    #[test]
    fn parts_sum_to_the_argument(x in -1e6f64..1e6) {
        prop_assert_eq!(pospart(x) + negpart(x), x);
    }

    #[test]
    fn positive_part_is_firmly_nonexpansive(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let d = pospart(a) - pospart(b);
        let slack = 4.0 * f64::EPSILON * (a.abs() + b.abs()).powi(2);
        prop_assert!(d * d <= d * (a - b) + slack);
        prop_assert!(d.abs() <= (a - b).abs());
    }

    #[test]
    fn residual_forms_agree(
        u in -10.0f64..10.0,
        lambda in -10.0f64..10.0,
        g in -10.0f64..10.0,
        psi in -10.0f64..10.0,
        tau in 1e-2f64..1e2,
    ) {
        let (r1, r2) = contact_residuals(u, lambda, g, psi, tau);
        let scale = (u.abs() + lambda.abs() / tau + g.abs() + psi.abs() / tau).max(1.0);
        prop_assert!((r1 - r2).abs() <= 1e-12 * scale);
    }
}

#[test]
fn p_tau_examples() {
    assert_eq!(p_tau(1.5, -0.25, 1.5, -0.25, 3.0), 0.0);
    assert_eq!(p_tau(3.0, 1.0, 1.0, 0.5, 1.0), 1.5);
    let (u, l, g, psi) = (0.7, 0.2, 0.1, -0.4);
    assert_eq!(p_tau(u, l, g, psi, 2.0), 2.0 * (u - g) - (l - psi));
}

#[test]
fn residuals_at_active_and_inactive_points() {
    // active: P = 2 (1 - 0) - (0 - 1) = 3
    let (r1, _) = contact_residuals(1.0, 0.0, 0.0, 1.0, 2.0);
    assert_eq!(r1, 0.0 - 1.0);
    // inactive: P = 2 (0 - 1) - (1 - 1) = -2
    let (_, r2) = contact_residuals(0.0, 1.0, 1.0, 1.0, 2.0);
    assert_eq!(r2, (1.0 - 1.0) / 2.0);
    let (_, r2) = contact_residuals(0.0, 3.0, 1.0, 1.0, 2.0);
    assert_eq!(r2, (1.0 - 3.0) / 2.0);
}

#[test]
fn residual_equivalence_on_random_discrete_data() {
    let blocks = dual2();
    let system = ContactSystem::new(blocks, &cube::problem(), params(blocks), 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let u = random_vector(&mut rng, blocks.primal_dofs(), 50.0);
        let l = random_vector(&mut rng, blocks.flux_dofs(), 200.0);
        let diff = residual_equivalence_check(&system, &u, &l);
        assert!(diff < 1e-12 * 500.0, "{diff}");
    }
}

#[test]
fn trace_data_evaluation() {
    let blocks = dual2();
    let coarse = blocks.primal.hierarchy().coarse();
    let nodal = DVector::from_iterator(
        coarse.vertex_count(),
        coarse.vertices().iter().map(|x| 2.0 * x.x - x.y + 0.5 * x.z),
    );
    let field = TraceData::Nodal(nodal);
    let per_triangle = TraceData::PerTriangle(DVector::from_fn(coarse.triangle_count(), |i, _| i as f64));
    let q = BoundaryQuadrature::new(&blocks.primal, &blocks.flux, Region::Whole, 3).unwrap();
    for p in &q.points {
        let x = p.point.x;
        let tri = coarse.triangle(p.point.triangle);
        assert!((field.eval(&p.point, tri) - (2.0 * x.x - x.y + 0.5 * x.z)).abs() < 1e-12);
        assert_eq!(per_triangle.eval(&p.point, tri), p.point.triangle as f64);
        assert!((coarse.point_at(p.point.triangle, p.point.bary) - x).norm() < 1e-12);
    }
    let short = ProblemData {
        g_c: TraceData::Nodal(DVector::zeros(3)),
        ..Default::default()
    };
    assert!(matches!(
        ContactSystem::new(blocks, &short, params(blocks), 6),
        Err(ContactError::DimensionMismatch { .. })
    ));
}

#[test]
fn boundary_quadrature_integrates_region_areas() {
    for blocks in [dual2(), dp2()] {
        let coarse = blocks.primal.hierarchy().coarse();
        for region in [Region::Dirichlet, Region::Contact] {
            let q = BoundaryQuadrature::new(&blocks.primal, &blocks.flux, region, 6).unwrap();
            let ones = vec![1.0; q.len()];
            assert!((q.integrate(&ones) - coarse.region_area(region)).abs() < 1e-12);
            // ∫ φ_i equals the row sums of the restricted mass
            let load = q.primal_load(&ones, blocks.primal_dofs());
            let m = match region {
                Region::Contact => &blocks.mass.primal_flux_c,
                _ => &blocks.mass.primal_flux_d,
            };
            let rows = crate::operators::spmv(m, &DVector::from_element(blocks.flux_dofs(), 1.0));
            assert!((load - rows).amax() < 1e-12);
        }
    }
}

#[test]
fn parameter_validation() {
    assert!(matches!(
        NitscheParameters::new(-1.0, 1.0),
        Err(ContactError::InvalidBeta(_))
    ));
    assert!(matches!(
        NitscheParameters::new(0.0, 0.0),
        Err(ContactError::InvalidTau(_))
    ));
    assert!(matches!(
        NitscheParameters::new(0.0, f64::NAN),
        Err(ContactError::InvalidTau(_))
    ));
    assert!(NitscheParameters::new(0.0, 1.0).is_ok());
    let d = NitscheParameters::for_mesh_size(0.25);
    assert_eq!((d.beta_d, d.tau), (0.01, 2.0));
    assert_eq!(TauRule::OverH(0.5).tau(0.125), 4.0);
    assert_eq!(TauRule::Fixed(3.0).tau(0.125), 3.0);
    let c = IterationControls::default();
    assert_eq!((c.tol, c.maxiter), (0.05, 200));
    assert!(IterationControls { tol: 0.0, ..c }.validate().is_err());
    assert!(IterationControls { maxiter: 0, ..c }.validate().is_err());
}

#[test]
fn lhs_is_affine_in_inverse_tau() {
    let blocks = dual2();
    let a = assemble_lhs(blocks, &NitscheParameters::new(0.01, 2.0).unwrap()).unwrap();
    let b = assemble_lhs(blocks, &NitscheParameters::new(0.01, 0.5).unwrap()).unwrap();
    let (np, nf) = (blocks.primal_dofs(), blocks.flux_dofs());
    let mut expected = DMatrix::zeros(np + nf, np + nf);
    let mff = to_dense(&blocks.mass.flux_flux_c) * (1.0 / 0.5 - 1.0 / 2.0);
    expected.view_mut((np, np), (nf, nf)).copy_from(&mff);
    assert!((b - a - expected).amax() < 1e-15);
}

#[test]
fn lhs_without_contact_is_the_dirichlet_formulation() {
    let blocks = blocks_for(dirichlet_only(1), Pairing::P1DP0);
    let a = assemble_lhs(&blocks, &NitscheParameters::new(0.01, 2.0).unwrap()).unwrap();
    let b = assemble_lhs(&blocks, &NitscheParameters::new(0.01, 0.1).unwrap()).unwrap();
    assert_eq!(a, b);
    let np = blocks.primal_dofs();
    let m = to_dense(&blocks.mass.primal_flux);
    let mut expected = blocks.multitrace_matrix();
    let mut tl = expected.view_mut((0, 0), (np, np));
    tl += to_dense(&blocks.mass.primal_primal) * 0.01;
    let mut tr = expected.view_mut((0, np), (np, blocks.flux_dofs()));
    tr -= &m * 0.5;
    let mut bl = expected.view_mut((np, 0), (blocks.flux_dofs(), np));
    bl += m.transpose() * 0.5;
    assert!((a - expected).amax() < 1e-14);
}

#[test]
fn dirichlet_form_is_positive() {
    let blocks = blocks_for(dirichlet_only(2), Pairing::P1Dual0);
    let a = assemble_lhs(&blocks, &NitscheParameters::new(0.01, 1.0).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let x = random_vector(&mut rng, a.nrows(), 1.0);
        assert!(x.dot(&(&a * &x)) > 0.0);
    }
}

#[test]
fn rhs_nonlinear_term() {
    let blocks = dual2();
    let p = params(blocks);
    let (np, nf) = (blocks.primal_dofs(), blocks.flux_dofs());
    let data = cube::problem();
    let system = ContactSystem::new(blocks, &data, p, 6).unwrap();
    let u = DVector::zeros(np);
    let huge = DVector::from_element(nf, 1e6);
    assert!(system.p_tau_values(&u, &huge).iter().all(|&v| v < 0.0));
    assert_eq!(system.rhs(&u, &huge), system.linear_rhs);

    let zero = ProblemData::default();
    assert_eq!(
        assemble_rhs(blocks, &zero, &p, &u, &huge).unwrap(),
        DVector::zeros(np + nf)
    );

    // with zero data P = -λ, so λ = -c gives [P]₊ = c
    let one = assemble_rhs(blocks, &zero, &p, &u, &DVector::from_element(nf, -1.0)).unwrap();
    let two = assemble_rhs(blocks, &zero, &p, &u, &DVector::from_element(nf, -2.0)).unwrap();
    assert!(one.amax() > 0.0);
    assert!((two - &one * 2.0).amax() < 1e-14 * one.amax());
}

#[test]
fn inner_solve_on_a_mass_system() {
    let blocks = dp2();
    let m = to_dense(&blocks.mass.primal_primal);
    let b = DVector::from_fn(m.nrows(), |i, _| 1.0 + (i as f64).sin());
    let out = gmres(
        &m,
        &b,
        DVector::zeros(b.len()),
        |r| r.clone(),
        &GmresSettings::default(),
    )
    .unwrap();
    assert!((&m * &out.x - &b).norm() / b.norm() < 1e-8 * 10.0);
}

#[test]
fn mass_preconditioning_reduces_iterations() {
    let blocks = blocks_for(dirichlet_only(2), Pairing::P1Dual0);
    let lhs = assemble_lhs(&blocks, &NitscheParameters::new(0.01, 1.0).unwrap()).unwrap();
    let data = ProblemData {
        g_d: TraceData::function(|p| p.x.x + 2.0 * p.x.y),
        ..Default::default()
    };
    let system = ContactSystem::new(&blocks, &data, NitscheParameters::new(0.01, 1.0).unwrap(), 6).unwrap();
    let rhs = system.rhs(
        &DVector::zeros(blocks.primal_dofs()),
        &DVector::zeros(blocks.flux_dofs()),
    );
    let settings = GmresSettings::default();
    let mut counts = Vec::new();
    for kind in [
        PreconditionerKind::None,
        PreconditionerKind::MassGram,
        PreconditionerKind::MassOffRole,
    ] {
        let pre = Preconditioner::new(&blocks, kind).unwrap();
        assert_eq!(pre.kind(), kind);
        counts.push(inner_solve(&lhs, &rhs, &pre, &settings).unwrap().iterations);
    }
    assert!(counts[1] <= counts[0], "{counts:?}");
    assert!(counts[2] <= counts[0], "{counts:?}");
}

#[test]
fn auto_preconditioner_resolution() {
    let dual = Preconditioner::new(dual2(), PreconditionerKind::Auto).unwrap();
    assert_eq!(dual.kind(), PreconditionerKind::MassOffRole);
    let dp = Preconditioner::new(dp2(), PreconditionerKind::Auto).unwrap();
    assert_eq!(dp.kind(), PreconditionerKind::MassGram);
    assert!(matches!(
        Preconditioner::new(dp2(), PreconditionerKind::MassOffRole),
        Err(ContactError::PreconditionerUnavailable(_))
    ));
    for name in ["auto", "none", "mass-gram", "mass-off-role"] {
        assert_eq!(name.parse::<PreconditionerKind>().unwrap().name(), name);
    }
}

#[test]
fn inactive_contact_is_solved_by_the_first_iterate() {
    // u = x + y + z with a far-away gap: the contact face behaves as a
    // Neumann boundary with flux ψ = 1.
    let blocks = dp2();
    let data = ProblemData {
        g_d: TraceData::function(|p| p.x.x + p.x.y + p.x.z),
        g_c: TraceData::function(|_| 100.0),
        psi_c: TraceData::function(|_| 1.0),
    };
    let p = params(blocks);
    let controls = IterationControls::default();
    let zeros = (DVector::zeros(blocks.primal_dofs()), DVector::zeros(blocks.flux_dofs()));
    let (u, l, report) = fixed_point_solve(blocks, &data, &p, &controls, &zeros.0, &zeros.1).unwrap();
    assert!(report.converged);
    assert!(report.outer_iterations <= 2, "{report:?}");
    assert!(report.update_norms.last().unwrap() < &1e-6);
    let system = ContactSystem::new(blocks, &data, p, 6).unwrap();
    assert!(system.p_tau_values(&u, &l).iter().all(|&v| v < 0.0));
    let exact = interpolate(&blocks.primal, |q| q.x.x + q.x.y + q.x.z).unwrap();
    let err = (u - exact.coefficients()).amax();
    assert!(err < 0.2, "{err}");
}

#[test]
fn cube_problem_converges_and_is_independent_of_the_start() {
    for blocks in [dual2(), dp2()] {
        let data = cube::problem();
        let p = params(blocks);
        let zeros = (DVector::zeros(blocks.primal_dofs()), DVector::zeros(blocks.flux_dofs()));
        let (ue, le) = exact_traces(blocks);

        let controls = IterationControls::default();
        let (_, _, report) = fixed_point_solve(blocks, &data, &p, &controls, &zeros.0, &zeros.1).unwrap();
        assert!(report.converged);
        assert!(report.outer_iterations <= 200);
        assert_eq!(report.inner_iterations.len(), report.outer_iterations);
        assert_eq!(report.update_norms.len(), report.outer_iterations);
        assert!(report.average_inner_iterations() > 0.0);

        // The update norm bounds the distance to the fixed point only up to
        // the contraction factor, which is below 0.95 here.
        let tight = IterationControls {
            tol: 1e-5,
            maxiter: 1000,
            ..controls
        };
        let (u0, l0, r0) = fixed_point_solve(blocks, &data, &p, &tight, &zeros.0, &zeros.1).unwrap();
        let (u1, l1, r1) = fixed_point_solve(blocks, &data, &p, &tight, &ue, &le).unwrap();
        assert!(r0.converged && r1.converged);
        let gap = blocks.surrogate_norm(&(u0 - u1), &(l0 - l1));
        assert!(gap < 2.0 * tight.tol / (1.0 - 0.95), "{gap}");
    }
}

#[test]
fn inner_failure_reports_the_outer_iteration() {
    let blocks = dp2();
    let controls = IterationControls {
        gmres: GmresSettings {
            tol: 1e-12,
            restart: 2,
            max_iterations: 2,
        },
        ..Default::default()
    };
    let zeros = (DVector::zeros(blocks.primal_dofs()), DVector::zeros(blocks.flux_dofs()));
    let err = fixed_point_solve(blocks, &cube::problem(), &params(blocks), &controls, &zeros.0, &zeros.1).unwrap_err();
    assert!(matches!(
        err,
        ContactError::InnerSolve {
            outer: 1,
            source: GmresError::NotConverged { .. }
        }
    ));
}

#[test]
fn maxiter_reached_is_not_converged() {
    let blocks = dp2();
    let controls = IterationControls {
        maxiter: 2,
        ..Default::default()
    };
    let zeros = (DVector::zeros(blocks.primal_dofs()), DVector::zeros(blocks.flux_dofs()));
    let (_, _, report) =
        fixed_point_solve(blocks, &cube::problem(), &params(blocks), &controls, &zeros.0, &zeros.1).unwrap();
    assert!(!report.converged);
    assert_eq!(report.outer_iterations, 2);
}

fn probe_pairs(blocks: &OperatorBlocks, tau: f64, seed: u64) -> Vec<ProbeValue> {
    let system = ContactSystem::new(blocks, &cube::problem(), NitscheParameters::new(0.01, tau).unwrap(), 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ue, le) = exact_traces(blocks);
    (0..50)
        .map(|_| {
            let v = &ue + random_vector(&mut rng, ue.len(), 20.0);
            let mu = &le + random_vector(&mut rng, le.len(), 200.0);
            let w = &ue + random_vector(&mut rng, ue.len(), 20.0);
            let eta = &le + random_vector(&mut rng, le.len(), 200.0);
            monotonicity_probe(&system, (&v, &mu), (&w, &eta))
        })
        .collect()
}

#[test]
fn monotonicity_probe_is_nonnegative() {
    let blocks = dual2();
    let tau = params(blocks).tau;
    for t in [tau, tau / 2.0] {
        for probe in probe_pairs(blocks, t, 11) {
            assert!(probe.value >= -1e-10 * probe.scale, "{probe:?}");
        }
    }
    let system = ContactSystem::new(blocks, &cube::problem(), params(blocks), 6).unwrap();
    let (ue, le) = exact_traces(blocks);
    let same = monotonicity_probe(&system, (&ue, &le), (&ue, &le));
    assert_eq!(same.value, 0.0);
}

#[test]
fn exact_traces_are_nearly_consistent() {
    // the nonlinear residual with interpolated exact traces shrinks under
    // refinement
    let mut last = f64::INFINITY;
    for n in [1, 2, 4] {
        let blocks = cube_blocks(n, Pairing::P1DP0);
        let system = ContactSystem::new(&blocks, &cube::problem(), params(&blocks), 6).unwrap();
        let (u, l) = exact_traces(&blocks);
        let r = system.nonlinear_residual(&u, &l).norm();
        assert!(r < last, "n = {n}: {r} >= {last}");
        last = r;
    }
}
