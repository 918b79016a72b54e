use nitsche_iga::assembly::{
    assemble_elasticity, assemble_kirchhoff, assemble_load, assemble_mass_rod, assemble_stiffness_rod, error_norms,
    l2_projection, AnalyticField, AssembledSystem, LoadSpec,
};
use nitsche_iga::linalg::{generalized_eig, solve_linear};
use nitsche_iga::model::{
    scalar_field, vector_field, BoundaryKind, BoundarySelection, InterfaceSpec, Material, MultiPatchModel, Side,
};
use nitsche_iga::nitsche::{
    add_dirichlet_terms, add_interface_coupling_terms, boundary_flux, estimate_gamma0, GammaPolicy, NitscheConfig,
    NitscheTerms,
};
use nitsche_iga::splines::{make_geometry, GeometryKind, NurbsPatch};
use proptest::prelude::*;

fn rect(x0: f64, y0: f64, lx: f64, ly: f64, p: usize, nx: usize, ny: usize) -> NurbsPatch {
    make_geometry(GeometryKind::Rectangle { origin: [x0, y0], size: [lx, ly] }, p).unwrap().h_refine(&[nx, ny]).unwrap()
}

fn material() -> Material {
    Material::plane_stress(1000.0, 0.25).unwrap()
}

/// Quadratic displacement with coefficient vector `c` (12 entries).
#[derive(Debug, Clone, Copy)]
struct Quadratic([f64; 12]);

impl Quadratic {
    fn value(&self, x: [f64; 2]) -> [f64; 2] {
        let c = &self.0;
        let m = [1.0, x[0], x[1], x[0] * x[0], x[0] * x[1], x[1] * x[1]];
        let mut u = [0.0; 2];
        for k in 0..6 {
            u[0] += c[k] * m[k];
            u[1] += c[6 + k] * m[k];
        }
        u
    }

    fn gradient(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let c = &self.0;
        let mut g = [[0.0; 2]; 2];
        for i in 0..2 {
            let o = 6 * i;
            g[i][0] = c[o + 1] + 2.0 * c[o + 3] * x[0] + c[o + 4] * x[1];
            g[i][1] = c[o + 2] + c[o + 4] * x[0] + 2.0 * c[o + 5] * x[1];
        }
        g
    }

    fn field(self) -> AnalyticField {
        AnalyticField::new(move |x| self.value(x), move |x| self.gradient(x))
    }

    /// `-div σ`, constant for a quadratic field.
    fn body_force(&self, mat: &Material) -> [f64; 2] {
        let h = 0.5;
        let sx = |x: [f64; 2]| mat.stress(self.gradient(x));
        let dxs = |k: usize| (sx([h, 0.0])[k] - sx([-h, 0.0])[k]) / (2.0 * h);
        let dys = |k: usize| (sx([0.0, h])[k] - sx([0.0, -h])[k]) / (2.0 * h);
        [-(dxs(0) + dys(2)), -(dxs(2) + dys(1))]
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(sys: &AssembledSystem, u: &[f64]) -> f64 {
    norm(&sys.residual(u)) / norm(&sys.rhs)
}

fn single(p: usize, n: usize) -> MultiPatchModel {
    MultiPatchModel::single(rect(0.0, 0.0, 2.0, 1.0, p, n, n), material())
}

fn dirichlet_all(sys: &mut AssembledSystem, m: &MultiPatchModel, f: AnalyticField, cfg: &NitscheConfig) -> f64 {
    let mut t = NitscheTerms::new();
    let ubar = {
        let v = f.value.clone();
        vector_field(move |x| v(x))
    };
    for pid in 0..m.num_patches() {
        for side in Side::ALL {
            if m.interfaces().iter().any(|i| i.first == (pid, side) || i.second == (pid, side)) {
                continue;
            }
            t.dirichlet(m, &BoundarySelection::side(pid, side), &ubar).unwrap();
        }
    }
    t.apply(sys, cfg).unwrap()
}

fn configs() -> Vec<NitscheConfig> {
    vec![
        NitscheConfig::skew_free(),
        NitscheConfig::symmetric(),
        NitscheConfig::new(0.0, GammaPolicy::EigenScaled(2.0)).unwrap(),
        NitscheConfig::new(-1.0, GammaPolicy::Fixed(1e3)).unwrap(),
    ]
}

#[test]
fn constant_boundary_data_gives_constant_field() {
    let m = single(2, 4);
    for cfg in configs() {
        let mut sys = assemble_elasticity(&m).unwrap();
        let c = [0.7, -1.3];
        dirichlet_all(&mut sys, &m, AnalyticField::new(move |_| c, |_| [[0.0; 2]; 2]), &cfg);
        let sol = sys.solve().unwrap();
        for (i, v) in sol.coefficients.iter().enumerate() {
            assert!((v - c[i % 2]).abs() < 1e-10 * 1.3, "{cfg:?}: {v}");
        }
    }
}

#[test]
fn linear_patch_test_is_exact() {
    let m = single(3, 3);
    let q = Quadratic([0.1, 0.02, -0.03, 0.0, 0.0, 0.0, -0.2, 0.01, 0.04, 0.0, 0.0, 0.0]);
    for cfg in configs() {
        let mut sys = assemble_elasticity(&m).unwrap();
        dirichlet_all(&mut sys, &m, q.field(), &cfg);
        let sol = sys.solve().unwrap();
        let e = error_norms(&m, &sol, &q.field()).unwrap();
        assert!(e.relative_energy() < 1e-10, "{cfg:?}: {}", e.relative_energy());
    }
}

#[test]
fn symmetric_variant_keeps_matrix_symmetric() {
    let m = single(2, 3);
    let mut sys = assemble_elasticity(&m).unwrap();
    let q = Quadratic([0.0; 12]);
    dirichlet_all(&mut sys, &m, q.field(), &NitscheConfig::symmetric());
    let k = sys.matrix();
    assert!(k.max_asymmetry() <= 1e-9 * k.max_abs());
}

#[test]
fn skew_variant_asymmetry_is_twice_the_consistency_skew_part() {
    let m = single(2, 3);
    let mut terms = NitscheTerms::new();
    let zero = vector_field(|_| [0.0; 2]);
    for side in Side::ALL {
        terms.dirichlet(&m, &BoundarySelection::side(0, side), &zero).unwrap();
    }
    let mut sys = assemble_elasticity(&m).unwrap();
    terms.apply(&mut sys, &NitscheConfig::skew_free()).unwrap();
    let k = sys.matrix();
    let (c, _) = terms.blocks(sys.dim());
    let scale = k.max_abs();
    for i in 0..sys.dim() {
        for j in 0..sys.dim() {
            let lhs = k.get(i, j) - k.get(j, i);
            let rhs = 2.0 * (c.get(i, j) - c.get(j, i));
            assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn gamma0_is_twice_lambda_max_and_scales_with_h_and_e() {
    let zero = vector_field(|_| [0.0; 2]);
    let lambda = |m: &MultiPatchModel| {
        let sys = assemble_elasticity(m).unwrap();
        let mut t = NitscheTerms::new();
        t.dirichlet(m, &BoundarySelection::side(0, Side::West), &zero).unwrap();
        let l = t.lambda_max(&sys.bulk_matrix()).unwrap();
        let g = estimate_gamma0(&sys, &t, 2.0).unwrap();
        assert_eq!(g, 2.0 * l);
        l
    };
    for p in [2, 3] {
        let sq = |n| MultiPatchModel::single(rect(0.0, 0.0, 1.0, 1.0, p, n, n), material());
        let l4 = lambda(&sq(4));
        let l8 = lambda(&sq(8));
        let l16 = lambda(&sq(16));
        for r in [l8 / l4, l16 / l8] {
            assert!((1.6..=2.4).contains(&r), "p={p}: ratio {r}");
        }
        let stiff = sq(8).with_scaled_modulus(2.0);
        assert!((lambda(&stiff) / l8 - 2.0).abs() < 1e-9);
    }
}

#[test]
fn skew_solution_is_insensitive_to_gamma() {
    let m = single(2, 4);
    let q = Quadratic([0.1, 0.02, -0.03, 0.0, 0.0, 0.0, -0.2, 0.01, 0.04, 0.0, 0.0, 0.0]);
    let solve = |policy| {
        let mut sys = assemble_elasticity(&m).unwrap();
        dirichlet_all(&mut sys, &m, q.field(), &NitscheConfig::new(-1.0, policy).unwrap());
        sys.solve().unwrap()
    };
    let mut sys = assemble_elasticity(&m).unwrap();
    let g0 = dirichlet_all(&mut sys, &m, q.field(), &NitscheConfig::new(-1.0, GammaPolicy::EigenScaled(2.0)).unwrap());
    let a = solve(GammaPolicy::Fixed(g0));
    let b = solve(GammaPolicy::Fixed(g0 * 1e-5));
    let ea = error_norms(&m, &a, &q.field()).unwrap();
    let eb = error_norms(&m, &b, &q.field()).unwrap();
    assert!((ea.relative_energy() - eb.relative_energy()).abs() < 1e-6);
}

fn two_patch(p: usize, n1: usize, n2: usize) -> MultiPatchModel {
    let mut m = MultiPatchModel::new();
    m.add_patch(rect(0.0, 0.0, 1.0, 1.0, p, n1, n1), material());
    m.add_patch(rect(1.0, 0.0, 1.0, 1.0, p, n2, n2 + 1), material());
    m.add_interface(InterfaceSpec::new(0, Side::East, 1, Side::West)).unwrap();
    m
}

#[test]
fn linear_field_passes_through_nonmatching_interface() {
    let m = two_patch(2, 3, 4);
    let q = Quadratic([0.1, 0.02, -0.03, 0.0, 0.0, 0.0, -0.2, 0.01, 0.04, 0.0, 0.0, 0.0]);
    for cfg in configs() {
        let mut sys = assemble_elasticity(&m).unwrap();
        add_interface_coupling_terms(&mut sys, &m, &m.interfaces()[0], &cfg).unwrap();
        dirichlet_all(&mut sys, &m, q.field(), &cfg);
        let sol = sys.solve().unwrap();
        let e = error_norms(&m, &sol, &q.field()).unwrap();
        assert!(e.relative_energy() < 1e-10, "{cfg:?}: {}", e.relative_energy());
    }
}

#[test]
fn constant_field_has_zero_interface_residual() {
    let m = two_patch(3, 2, 3);
    let mut sys2 = assemble_elasticity(&m).unwrap();
    add_interface_coupling_terms(&mut sys2, &m, &m.interfaces()[0], &NitscheConfig::symmetric()).unwrap();
    let c = l2_projection(&m, &AnalyticField::new(|_| [2.0, -1.0], |_| [[0.0; 2]; 2]), 2).unwrap();
    let r = sys2.matrix().mul_vec(&c.coefficients);
    assert!(norm(&r) < 1e-9 * sys2.matrix().max_abs());
}

fn check_elastic_consistency(m: &MultiPatchModel, q: Quadratic, cfg: &NitscheConfig, normal_sides: &[(usize, Side)]) {
    let mat = material();
    let b = q.body_force(&mat);
    let mut sys = assemble_elasticity(m).unwrap();
    for spec in m.interfaces() {
        add_interface_coupling_terms(&mut sys, m, spec, cfg).unwrap();
    }
    let mut terms = NitscheTerms::new();
    let mut neumann = Vec::new();
    for pid in 0..m.num_patches() {
        for side in Side::ALL {
            if m.interfaces().iter().any(|i| i.first == (pid, side) || i.second == (pid, side)) {
                continue;
            }
            let sel = BoundarySelection::side(pid, side);
            if normal_sides.contains(&(pid, side)) {
                // normal component weakly, tangential traction naturally
                let gbar = scalar_field(move |x| {
                    let u = q.value(x);
                    let n = side_normal(side);
                    u[0] * n[0] + u[1] * n[1]
                });
                terms.normal_dirichlet(m, &sel, &gbar, None).unwrap();
                let tangential = vector_field(move |x| {
                    let n = side_normal(side);
                    let t = boundary_flux(&mat, q.gradient(x), n);
                    let tn = t[0] * n[0] + t[1] * n[1];
                    [t[0] - tn * n[0], t[1] - tn * n[1]]
                });
                neumann.push((sel, tangential));
            } else {
                terms.dirichlet(m, &sel, &vector_field(move |x| q.value(x))).unwrap();
            }
        }
    }
    terms.apply(&mut sys, cfg).unwrap();
    let mut mm = m.clone();
    for (sel, t) in neumann {
        mm.add_tag(sel, BoundaryKind::Neumann(t)).unwrap();
    }
    let f = assemble_load(&mm, &LoadSpec::body(vector_field(move |_| b)), 2).unwrap();
    sys.add_to_rhs(&f);
    let exact = l2_projection(m, &q.field(), 2).unwrap();
    let r = relative_residual(&sys, &exact.coefficients);
    assert!(r < 1e-9, "{cfg:?}: relative residual {r}");
}

fn side_normal(side: Side) -> [f64; 2] {
    match side {
        Side::South => [0.0, -1.0],
        Side::East => [1.0, 0.0],
        Side::North => [0.0, 1.0],
        Side::West => [-1.0, 0.0],
    }
}

fn quadratic_strategy() -> impl Strategy<Value = Quadratic> {
    prop::array::uniform12(-1.0f64..1.0).prop_map(Quadratic)
}

fn config_strategy() -> impl Strategy<Value = NitscheConfig> {
    prop_oneof![
        Just(NitscheConfig::skew_free()),
        (-1.0f64..=1.0, 0.1f64..10.0).prop_map(|(t, m)| NitscheConfig::new(t, GammaPolicy::EigenScaled(m)).unwrap()),
        (-1.0f64..=1.0, 0.0f64..1e5).prop_map(|(t, g)| NitscheConfig::new(t, GammaPolicy::Fixed(g)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dirichlet_terms_are_consistent(q in quadratic_strategy(), cfg in config_strategy()) {
        check_elastic_consistency(&single(2, 3), q, &cfg, &[]);
    }

    #[test]
    fn interface_terms_are_consistent(q in quadratic_strategy(), cfg in config_strategy()) {
        check_elastic_consistency(&two_patch(2, 2, 3), q, &cfg, &[]);
    }

    #[test]
    fn normal_terms_are_consistent(q in quadratic_strategy(), cfg in config_strategy()) {
        check_elastic_consistency(&single(3, 2), q, &cfg, &[(0, Side::West), (0, Side::South)]);
    }

    #[test]
    fn rotation_terms_are_consistent(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, cfg in config_strategy()) {
        // quadratic deflection without twist: constant moments, no shear, no corner forces
        let mat = Material::plate(1e3, 0.3, 0.1).unwrap();
        let m = MultiPatchModel::single(rect(0.0, 0.0, 1.0, 0.5, 3, 3, 2), mat);
        let w = move |x: [f64; 2]| c + a * x[0] * x[0] + b * x[1] * x[1];
        let grad = move |x: [f64; 2]| [2.0 * a * x[0], 2.0 * b * x[1]];
        let mut sys = assemble_kirchhoff(&m).unwrap();
        let mut terms = NitscheTerms::new();
        for side in Side::ALL {
            let theta_bar = scalar_field(move |x| {
                let n = side_normal(side);
                let g = grad(x);
                -(g[0] * n[0] + g[1] * n[1])
            });
            terms.rotation(&m, &BoundarySelection::side(0, side), &theta_bar).unwrap();
        }
        terms.apply(&mut sys, &cfg).unwrap();
        let exact = l2_projection(&m, &AnalyticField::new(move |x| [w(x), 0.0], |_| [[0.0; 2]; 2]), 1).unwrap();
        let r = norm(&sys.residual(&exact.coefficients));
        let scale = sys.matrix().max_abs() * norm(&exact.coefficients);
        prop_assert!(r < 1e-9 * scale, "residual {r} vs scale {scale}");
    }
}

fn rod_model(p: usize, patches: usize, per_patch: usize) -> MultiPatchModel {
    let mut m = MultiPatchModel::new();
    let len = 1.0 / patches as f64;
    for k in 0..patches {
        let base = make_geometry(GeometryKind::Rod { length: len }, p).unwrap().refined(per_patch).unwrap();
        m.add_patch(base.translated(k as f64 * len, 0.0), Material::rod(1.0).unwrap());
    }
    m
}

fn rod_coupled(m: &MultiPatchModel, cfg: &NitscheConfig, weak_ends: bool) -> (AssembledSystem, f64) {
    let mut sys = assemble_stiffness_rod(m).unwrap();
    let mut t = NitscheTerms::new();
    for k in 1..m.num_patches() {
        t.rod_coupling(m, k - 1, k).unwrap();
    }
    if weak_ends {
        t.rod_end(m, 0, false, 0.0).unwrap();
        t.rod_end(m, m.num_patches() - 1, true, 1.0).unwrap();
    }
    let g = t.apply(&mut sys, cfg).unwrap();
    (sys, g)
}

#[test]
fn rod_coupling_keeps_constants_in_kernel() {
    let m = rod_model(3, 4, 4);
    for cfg in configs() {
        let (sys, _) = rod_coupled(&m, &cfg, false);
        let r = sys.matrix().mul_vec(&vec![1.0; sys.dim()]);
        assert!(norm(&r) < 1e-10 * sys.matrix().max_abs());
    }
}

#[test]
fn rod_linear_field_is_reproduced() {
    let m = rod_model(2, 4, 3);
    for cfg in configs() {
        let (sys, _) = rod_coupled(&m, &cfg, true);
        let x = solve_linear(&sys.matrix(), &sys.rhs).unwrap();
        let exact = l2_projection(&m, &AnalyticField::new(|x| [x[0], 0.0], |_| [[1.0, 0.0], [0.0, 0.0]]), 1).unwrap();
        for (a, b) in x.iter().zip(&exact.coefficients) {
            assert!((a - b).abs() < 1e-10, "{cfg:?}");
        }
    }
}

#[test]
fn coupled_rod_fundamental_frequency() {
    let m = rod_model(2, 4, 32);
    let mass = assemble_mass_rod(&m).unwrap();
    for cfg in [NitscheConfig::symmetric(), NitscheConfig::skew_free()] {
        let (sys, _) = rod_coupled(&m, &cfg, true);
        let eig = generalized_eig(&sys.matrix().to_dense(), &mass.to_dense()).unwrap();
        let w1 = eig.values[0].norm().sqrt();
        assert!((w1 / std::f64::consts::PI - 1.0).abs() < 1e-3, "{cfg:?}: {w1}");
    }
}

#[test]
fn parameter_free_requires_skew_theta() {
    let m = single(2, 2);
    let mut sys = assemble_elasticity(&m).unwrap();
    let cfg = NitscheConfig { theta: 1.0, gamma: GammaPolicy::ParameterFree };
    let r = add_dirichlet_terms(&mut sys, &m, &BoundarySelection::side(0, Side::West), &vector_field(|_| [0.0; 2]), &cfg);
    assert!(r.is_err());
}
