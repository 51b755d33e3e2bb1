use super::*;
use alloc::collections::BTreeMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::println;

fn model(kind: ModelKind, g: usize, seed: u64) -> DegenerationModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DegenerationModel::random(kind, g, &mut rng).unwrap()
}

const ALL: [(ModelKind, usize); 9] = [
    (ModelKind::Rank1, 2),
    (ModelKind::Rank1, 3),
    (ModelKind::StandardRankN(2), 3),
    (ModelKind::StandardRankN(3), 4),
    (ModelKind::TwoP2, 2),
    (ModelKind::TwoP1xP2, 3),
    (ModelKind::Octahedron, 3),
    (ModelKind::TwoPyramids, 3),
    (ModelKind::PrincipalRank3, 3),
];

#[test]
fn census_sums_to_two_torsion_count() {
    for (kind, g) in ALL {
        let m = model(kind, g, 1);
        let fps = m.fixed_points().unwrap();
        let total = DegenerationModel::fixed_point_total(&fps);
        println!("{kind:?} g={g}: {} records, total {total}, census {:?}", fps.len(), m.fixed_point_census(&fps));
        assert_eq!(total, 1 << (2 * g), "{kind:?}");
    }
}

#[test]
fn verify_all_kinds() {
    for (kind, g) in ALL {
        let m = model(kind, g, 2);
        let rep = m.verify_model(&VerifyOptions { samples: 5, tol: 1e-8, seed: 3 }).unwrap();
        for c in &rep.checks {
            assert_eq!(c.status, CheckStatus::Pass, "{kind:?} g={g}: {} {:e}", c.check, c.worst_residual);
        }
    }
}

#[test]
fn broken_gluing_is_detected() {
    for (kind, g) in ALL.into_iter().filter(|(k, _)| *k != ModelKind::Rank1) {
        let m = model(kind, g, 4).with_broken_gluing();
        let rep = m.verify_model(&VerifyOptions { samples: 4, tol: 1e-8, seed: 1 }).unwrap();
        assert!(!rep.all_pass(), "{kind:?}");
    }
}

#[test]
fn rank1_census_g2() {
    let m = model(ModelKind::Rank1, 2, 9);
    let fps = m.fixed_points().unwrap();
    let smooth = fps.iter().filter(|p| p.multiplicity == 1).count();
    let singular = fps.iter().filter(|p| p.multiplicity == 2).count();
    assert_eq!((smooth, singular), (8, 4));
}

#[test]
fn octahedron_census_g3() {
    let m = model(ModelKind::Octahedron, 3, 9);
    let fps = m.fixed_points().unwrap();
    let f = m.component_index("F").unwrap();
    let interior = fps.iter().filter(|p| p.point.component == f).count();
    let edges: u32 = fps.iter().filter(|p| p.multiplicity == 4).map(|p| p.multiplicity).sum();
    let vertex: u32 = fps.iter().filter(|p| p.multiplicity == 8).map(|p| p.multiplicity).sum();
    assert_eq!((interior, edges, vertex), (8, 48, 8));
}

#[test]
fn odd_and_even_fixed_points() {
    for (kind, g) in ALL {
        for seed in 0..3 {
            let m = model(kind, g, 100 + seed);
            for fp in m.fixed_points().unwrap() {
                let (v, s) = m.eval_with_scale(&fp.point, 1e-12).unwrap();
                if fp.odd_flag {
                    assert!(v.value.norm() <= 1e-10 * (1.0 + s), "{kind:?}: {:e}", v.value.norm());
                } else {
                    assert!(v.value.norm() >= 1e-4, "{kind:?}: {:e}", v.value.norm());
                }
            }
        }
    }
}

/// Central differences of the component form along a free chart coordinate,
/// with dependent coordinates recomputed from their binomial relation.
fn finite_difference(m: &DegenerationModel, p: &ComponentPoint, h: f64) -> Vec<C64> {
    let lc = m.local_chart(p).unwrap();
    let base = ComponentPoint { component: p.component, z: p.z.clone(), fiber: lc.fiber.clone() };
    let f = |q: &ComponentPoint| {
        let mut q = q.clone();
        for d in &lc.deps {
            q.fiber[d.x] = q.fiber[d.a] * q.fiber[d.b] / q.fiber[d.p];
        }
        m.eval_theta_component(&q, 1e-14).unwrap().value
    };
    let mut out = Vec::new();
    for i in 0..p.z.len() {
        let (mut a, mut b) = (base.clone(), base.clone());
        a.z[i] += h;
        b.z[i] -= h;
        out.push((f(&a) - f(&b)) / (2.0 * h));
    }
    for &c in &lc.free {
        let (mut a, mut b) = (base.clone(), base.clone());
        a.fiber[c] += h;
        b.fiber[c] -= h;
        out.push((f(&a) - f(&b)) / (2.0 * h));
    }
    out
}

#[test]
fn gradients_match_closed_forms_and_differences() {
    for (kind, g) in ALL {
        for seed in 0..2 {
            let m = model(kind, g, 200 + seed);
            for fp in m.fixed_points().unwrap().iter().filter(|p| p.odd_flag) {
                let rep = match m.gradient_at(fp, 1e-13) {
                    Ok(r) => r,
                    Err(ModelError::SingularPointOfComponent) => continue,
                    Err(e) => panic!("{e}"),
                };
                let num: Vec<C64> = rep.values.iter().map(|v| v.value).collect();
                let closed: Vec<C64> = rep.closed_form.unwrap().into_iter().map(|v| v.unwrap()).collect();
                let s = gradient::direction_sine(&num, &closed);
                assert!(s <= 1e-6, "{kind:?} stratum {:#b}: sin {s:e}", fp.stratum);
                let fd = finite_difference(&m, &fp.point, 1e-5);
                let s = gradient::direction_sine(&num, &fd);
                assert!(s <= 1e-6, "{kind:?} stratum {:#b}: fd sin {s:e}", fp.stratum);
            }
        }
    }
}

#[test]
fn even_fixed_point_has_no_gradient() {
    let m = model(ModelKind::TwoP2, 2, 5);
    let fp = m.fixed_points().unwrap().into_iter().find(|p| !p.odd_flag).unwrap();
    assert!(matches!(m.gradient_at(&fp, 1e-12), Err(ModelError::NotOnDivisor(_))));
}


fn rebuild(m: &DegenerationModel, overrides: &[(&str, C64)]) -> DegenerationModel {
    let mut params = BTreeMap::new();
    for (k, v) in overrides {
        params.insert(k.to_string(), *v);
    }
    for (k, v) in &m.params {
        params.entry(k.clone()).or_insert(*v);
    }
    DegenerationModel::new(m.kind, m.g, m.base.tau.clone(), m.shifts.clone(), params).unwrap()
}

fn gluings_pass(m: &DegenerationModel) -> bool {
    let rep = m.verify_model(&VerifyOptions { samples: 4, tol: 1e-8, seed: 11 }).unwrap();
    rep.checks.iter().filter(|c| c.check.starts_with("gluing:")).all(|c| c.status == CheckStatus::Pass)
}

#[test]
fn two_p2_forces_equal_lambdas_and_unit_c() {
    let m = model(ModelKind::TwoP2, 2, 21);
    let l = c64(1.3, -0.4);
    assert!(gluings_pass(&rebuild(&m, &[("lambda0", l), ("lambda1", l), ("lambda2", l)])));
    assert!(!gluings_pass(&rebuild(&m, &[("lambda1", c64(1.05, 0.0))])));
    assert!(!gluings_pass(&rebuild(&m, &[("lambda2", c64(0.0, 1.0))])));
    assert!(!gluings_pass(&rebuild(&m, &[("c", c64(1.01, 0.0))])));
}

#[test]
fn octahedron_relations_and_inverted_t31() {
    let m = model(ModelKind::Octahedron, 3, 22);
    let (l2, l4) = (m.param("lambda2"), m.param("lambda4"));
    for (name, v) in octahedron_relations(l2, l4) {
        assert_eq!(m.param(name), v);
    }
    let inverted = l4 * l4 / (l2 * l2);
    let bad = rebuild(&m, &[("t31", inverted)]);
    let rep = bad.verify_model(&VerifyOptions { samples: 4, tol: 1e-8, seed: 1 }).unwrap();
    assert_eq!(rep.get("gluing:F-u1").unwrap().status, CheckStatus::Fail);
    assert_eq!(rep.get("gluing:F-u0").unwrap().status, CheckStatus::Pass);
    let bumped = rebuild(&m, &[("t31", m.param("t31") * 1.01)]);
    assert!(!gluings_pass(&bumped));
}

fn coefficients(m: &DegenerationModel) -> BTreeMap<Vec<i64>, C64> {
    let comp = &m.components[0];
    comp.terms.iter().map(|t| (comp.term_position(t), t.coef)).collect()
}

#[test]
fn standard_rank3_degenerates_to_p1xp2_coefficients() {
    let base = model(ModelKind::TwoP1xP2, 3, 23);
    let target = coefficients(&base);
    for s in [1e-3, 1e-7, 1e-12] {
        let mut params = BTreeMap::new();
        params.insert("t12".to_string(), c64(s, 0.0));
        params.insert("t13".to_string(), base.param("t13"));
        params.insert("t23".to_string(), base.param("t23"));
        let std3 = DegenerationModel::new(ModelKind::StandardRankN(3), 3, None, vec![vec![]; 3], params).unwrap();
        let mut kept = BTreeMap::new();
        for (pos, c) in coefficients(&std3) {
            if pos[0] == 1 && pos[1] == 1 {
                assert!(c.norm() <= s * 4.0);
            } else {
                kept.insert(pos, c);
            }
        }
        assert_eq!(kept, target);
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn census_total_is_two_torsion_count(seed in any::<u64>(), idx in 0..ALL.len()) {
            let (kind, g) = ALL[idx];
            let m = model(kind, g, seed);
            let fps = m.fixed_points().unwrap();
            prop_assert_eq!(DegenerationModel::fixed_point_total(&fps), 1u64 << (2 * g));
            for fp in &fps {
                prop_assert!([1, 2, 4, 8].contains(&fp.multiplicity));
            }
        }

        #[test]
        fn involution_squares_to_identity(seed in any::<u64>(), idx in 0..ALL.len()) {
            let (kind, g) = ALL[idx];
            let m = model(kind, g, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            for ci in 0..m.components.len() {
                let full = (1u64 << m.components[ci].n_coords()) - 1;
                let p = m.random_point_with_support(ci, full, &mut rng);
                let q = m.involution(&m.involution(&p).unwrap()).unwrap();
                prop_assert!(m.distance_mod_lattice(&p, &q) <= 1e-9);
            }
        }
    }
}
