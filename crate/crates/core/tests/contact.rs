use nitsche_iga::assembly::{
    assemble_elasticity, assemble_load, compute_stress, l2_projection, AnalyticField, AssembledSystem, LoadSpec,
};
use nitsche_iga::contact::{
    biased_points, contact_contribution, contact_resultant, kkt_check, reference_gamma0, semismooth_newton,
    unbiased_points, ContactPoint, ContactSurface, InitialActive, NewtonOptions, Obstacle, RigidPlane,
};
use nitsche_iga::model::{
    scalar_field, vector_field, BoundaryKind, BoundarySelection, Material, MultiPatchModel, Side,
};
use nitsche_iga::nitsche::{GammaPolicy, NitscheConfig, NitscheTerms};
use nitsche_iga::splines::{make_geometry, GeometryKind, NurbsPatch};
use proptest::prelude::*;

fn rect(x0: f64, y0: f64, lx: f64, ly: f64, n: usize) -> NurbsPatch {
    make_geometry(GeometryKind::Rectangle { origin: [x0, y0], size: [lx, ly] }, 2).unwrap().h_refine(&[n, n]).unwrap()
}

fn mat() -> Material {
    Material::plane_stress(1000.0, 0.3).unwrap()
}

fn exact() -> AnalyticField {
    AnalyticField::new(|x| [0.03 * x[0], -0.1 * x[1]], |_| [[0.03, 0.0], [0.0, -0.1]])
}

/// Linear part: bulk, sliding supports, top pressure.
fn base_system(m: &MultiPatchModel, theta: f64, supports: &[(usize, Side)]) -> AssembledSystem {
    let mut sys = assemble_elasticity(m).unwrap();
    let mut t = NitscheTerms::new();
    for &(p, s) in supports {
        t.normal_dirichlet(m, &BoundarySelection::side(p, s), &scalar_field(|_| 0.0), None).unwrap();
    }
    let policy = if theta == -1.0 { GammaPolicy::ParameterFree } else { GammaPolicy::EigenScaled(2.0) };
    t.apply(&mut sys, &NitscheConfig::new(theta, policy).unwrap()).unwrap();
    let f = assemble_load(m, &LoadSpec::default(), 2).unwrap();
    sys.add_to_rhs(&f);
    sys
}

fn single_block_on_plane(height: f64, load: f64) -> (MultiPatchModel, Vec<ContactPoint>) {
    let mut m = MultiPatchModel::single(rect(0.0, height, 1.0, 1.0, 3), mat());
    m.add_tag(BoundarySelection::side(0, Side::North), BoundaryKind::Neumann(vector_field(move |_| [0.0, -load])))
        .unwrap();
    let surf = ContactSurface {
        selection: BoundarySelection::side(0, Side::South),
        obstacle: Obstacle::RigidPlane(RigidPlane::horizontal_below(0.0)),
    };
    let pts = biased_points(&m, &surf, 1.0).unwrap();
    (m, pts)
}

#[test]
fn inactive_contact_takes_one_iteration() {
    let (m, pts) = single_block_on_plane(0.01, 0.0);
    let mut sys = base_system(&m, -1.0, &[(0, Side::West)]);
    // no load: add a weak y-support on top so the problem is nonsingular
    let mut t = NitscheTerms::new();
    t.dirichlet(&m, &BoundarySelection::side(0, Side::North), &vector_field(|_| [0.0, 0.0])).unwrap();
    t.apply(&mut sys, &NitscheConfig::skew_free()).unwrap();
    let g = reference_gamma0(&sys, &pts).unwrap();
    let (sol, st) = semismooth_newton(&sys, &pts, &NewtonOptions::new(-1.0, g), None, None).unwrap();
    assert!(st.converged);
    assert_eq!(st.iterations, 1);
    assert_eq!(st.num_active(), 0);
    assert!(sol.coefficients.iter().all(|v| v.abs() < 1e-14));
    // residual of the contact part alone vanishes at u = 0
    let (r, _, flags) = contact_contribution(&pts, &vec![0.0; sys.dim()], -1.0, g, None).unwrap();
    assert!(r.iter().all(|v| *v == 0.0) && flags.iter().all(|a| !a));
}

#[test]
fn uniform_compression_on_rigid_plane() {
    for theta in [1.0, -1.0] {
        let (m, pts) = single_block_on_plane(0.0, 100.0);
        let sys = base_system(&m, theta, &[(0, Side::West)]);
        let g = reference_gamma0(&sys, &pts).unwrap();
        let mut opts = NewtonOptions::new(theta, g);
        opts.initial_active = InitialActive::AllActive;
        let (sol, st) = semismooth_newton(&sys, &pts, &opts, None, None).unwrap();
        assert!(st.converged, "{st:?}");
        let s = compute_stress(&m, &sol, 0, 0.37, 0.0).unwrap();
        assert!((s[1] + 100.0).abs() < 1.0, "theta {theta}: {s:?}");
        let kkt = kkt_check(&pts, &sol.coefficients);
        assert!(kkt.max_tension <= 1e-8 * 100.0, "{kkt:?}");
        assert!(kkt.max_penetration <= 1e-8, "{kkt:?}");
        assert!(kkt.max_complementarity <= 1e-8 * 100.0, "{kkt:?}");
        let force = contact_resultant(&pts, &sol.coefficients, g);
        assert!((force - 100.0).abs() < 1e-6 * 100.0, "{force}");
    }
}

fn two_blocks(top_load: f64) -> MultiPatchModel {
    let mut m = MultiPatchModel::new();
    m.add_patch(rect(0.0, 0.0, 1.0, 1.0, 4), mat());
    m.add_patch(rect(0.0, 1.0, 1.0, 1.0, 3), mat());
    m.add_tag(BoundarySelection::side(1, Side::North), BoundaryKind::Neumann(vector_field(move |_| [0.0, -top_load])))
        .unwrap();
    m
}

const SUPPORTS: [(usize, Side); 3] = [(0, Side::West), (1, Side::West), (0, Side::South)];

fn solve_pair(m: &MultiPatchModel, theta: f64, pts: &[ContactPoint]) -> Vec<f64> {
    let sys = base_system(m, theta, &SUPPORTS);
    let g = reference_gamma0(&sys, pts).unwrap();
    let mut opts = NewtonOptions::new(theta, g);
    opts.initial_active = InitialActive::AllActive;
    let (sol, st) = semismooth_newton(&sys, pts, &opts, None, None).unwrap();
    assert!(st.converged, "{st:?}");
    sol.coefficients
}

#[test]
fn stacked_blocks_transfer_constant_pressure() {
    let m = two_blocks(100.0);
    let lower = BoundarySelection::side(0, Side::North);
    let upper = BoundarySelection::side(1, Side::South);
    let biased = biased_points(&m, &ContactSurface { selection: upper, obstacle: Obstacle::Elastic(lower) }, 0.1).unwrap();
    let unbiased = unbiased_points(&m, lower, upper, 0.1).unwrap();
    for theta in [1.0, -1.0] {
        for pts in [&biased, &unbiased] {
            let u = solve_pair(&m, theta, pts);
            let sol = nitsche_iga::assembly::FieldSolution::new(u, m.global_dof_map(2));
            for (pid, uv) in [(0, [0.2, 0.9]), (1, [0.7, 0.1]), (1, [0.5, 0.5])] {
                let s = compute_stress(&m, &sol, pid, uv[0], uv[1]).unwrap();
                assert!((s[1] + 100.0).abs() < 1.0, "{s:?}");
            }
        }
    }
}

#[test]
fn unbiased_solution_is_label_symmetric() {
    let m = two_blocks(100.0);
    let lower = BoundarySelection::side(0, Side::North);
    let upper = BoundarySelection::side(1, Side::South);
    for theta in [1.0, -1.0] {
        let a = solve_pair(&m, theta, &unbiased_points(&m, lower, upper, 0.1).unwrap());
        let b = solve_pair(&m, theta, &unbiased_points(&m, upper, lower, 0.1).unwrap());
        let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * scale);
        }
    }
}

#[test]
fn zero_load_gives_zero_solution() {
    let m = two_blocks(0.0);
    let pts = unbiased_points(&m, BoundarySelection::side(0, Side::North), BoundarySelection::side(1, Side::South), 0.1)
        .unwrap();
    let mut sys = base_system(&m, -1.0, &SUPPORTS);
    let mut t = NitscheTerms::new();
    t.dirichlet(&m, &BoundarySelection::side(1, Side::North), &vector_field(|_| [0.0; 2])).unwrap();
    t.apply(&mut sys, &NitscheConfig::skew_free()).unwrap();
    let g = reference_gamma0(&sys, &pts).unwrap();
    let (sol, st) = semismooth_newton(&sys, &pts, &NewtonOptions::new(-1.0, g), None, None).unwrap();
    assert!(st.converged && st.iterations == 1);
    assert!(sol.coefficients.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn exact_initial_guess_converges_immediately() {
    let m = two_blocks(100.0);
    let lower = BoundarySelection::side(0, Side::North);
    let upper = BoundarySelection::side(1, Side::South);
    let pts = biased_points(&m, &ContactSurface { selection: upper, obstacle: Obstacle::Elastic(lower) }, 0.1).unwrap();
    let sys = base_system(&m, -1.0, &SUPPORTS);
    let g = reference_gamma0(&sys, &pts).unwrap();
    let u0 = l2_projection(&m, &exact(), 2).unwrap();
    let (_, st) =
        semismooth_newton(&sys, &pts, &NewtonOptions::new(-1.0, g), None, Some(&u0.coefficients)).unwrap();
    assert!(st.converged && st.iterations <= 2, "{st:?}");
}

fn residual(sys: &AssembledSystem, pts: &[ContactPoint], u: &[f64], theta: f64, g: f64) -> Vec<f64> {
    let (rc, _, _) = contact_contribution(pts, u, theta, g, None).unwrap();
    sys.residual(u).iter().zip(rc).map(|(a, b)| a + b).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Away from kinks the generalized Jacobian is the derivative of the residual.
    #[test]
    fn tangent_matches_finite_differences(seed in 0u64..1000, theta in prop_oneof![Just(1.0), Just(-1.0), Just(0.0)]) {
        let (m, pts) = single_block_on_plane(0.0, 100.0);
        let sys = base_system(&m, theta, &[(0, Side::West)]);
        let g = reference_gamma0(&sys, &pts).unwrap();
        let mut s = seed.wrapping_add(17);
        let mut rnd = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5 };
        let u: Vec<f64> = (0..sys.dim()).map(|_| 0.01 * rnd()).collect();
        let dir: Vec<f64> = (0..sys.dim()).map(|_| rnd()).collect();
        let (_, jc, flags) = contact_contribution(&pts, &u, theta, g, None).unwrap();
        let mut coo = sys.triplets().clone();
        coo.extend_from(&jc);
        let jv = coo.to_csr(nitsche_iga::linalg::Symmetry::Nonsymmetric).mul_vec(&dir);
        let h = 1e-7;
        let up: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a + h * d).collect();
        let um: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a - h * d).collect();
        let (_, _, fp) = contact_contribution(&pts, &up, theta, g, None).unwrap();
        let (_, _, fm) = contact_contribution(&pts, &um, theta, g, None).unwrap();
        prop_assume!(fp == flags && fm == flags);
        let rp = residual(&sys, &pts, &up, theta, g);
        let rm = residual(&sys, &pts, &um, theta, g);
        let scale = jv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (k, v) in jv.iter().enumerate() {
            let fd = (rp[k] - rm[k]) / (2.0 * h);
            prop_assert!((fd - v).abs() <= 1e-6 * scale, "{k}: {fd} vs {v}");
        }
    }
}
