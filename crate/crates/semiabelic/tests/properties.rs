use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semiabelic::dicing::{self, rational_point, TABLE_CONES};
use semiabelic::limits::{self, DegeneratingFamily};
use semiabelic::models::{DegenerationModel, ModelKind};
use semiabelic::theta::{theta_char_at_radius, truncation_radius};
use semiabelic::{
    c64, e, enumerate_characteristics, grad_theta, sample, theta, theta_char, Characteristic, SiegelMatrix,
    Truncation, C64,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_z(r: &mut ChaCha8Rng, g: usize) -> Vec<C64> {
    (0..g).map(|_| c64(r.gen_range(-1.0..1.0), r.gen_range(-2.0..2.0))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quasi_periodicity(seed in any::<u64>(), g in 1usize..=3) {
        let mut r = rng(seed);
        let tau = sample::random_siegel(&mut r, g);
        let z = small_z(&mut r, g);
        let n: Vec<f64> = (0..g).map(|_| r.gen_range(-2..=2) as f64).collect();
        let m: Vec<f64> = (0..g).map(|_| r.gen_range(-2..=2) as f64).collect();
        let tn = tau.mul_real(&n);
        let zs: Vec<C64> = (0..g).map(|i| z[i] + tn[i] + m[i]).collect();
        let ntn: C64 = (0..g).map(|i| tn[i] * n[i]).sum();
        let nz: C64 = (0..g).map(|i| z[i] * n[i]).sum();
        let tol = 1e-10;
        let a = theta(&tau, &zs, tol).unwrap().value;
        let b = theta(&tau, &z, tol).unwrap().value;
        // compare at the scale of θ(z) by dividing out the automorphy factor
        let f = e(-ntn / 2.0 - nz);
        prop_assert!((a / f - b).norm() <= 10.0 * tol * (1.0 + b.norm()), "{:e}", (a / f - b).norm());
    }

    #[test]
    fn parity(seed in any::<u64>(), g in 1usize..=2) {
        let mut r = rng(seed);
        let tau = sample::random_siegel(&mut r, g);
        let z = small_z(&mut r, g);
        let mz: Vec<C64> = z.iter().map(|v| -v).collect();
        for ch in enumerate_characteristics(g) {
            let a = theta_char(&tau, &z, &ch, 1e-12).unwrap();
            let b = theta_char(&tau, &mz, &ch, 1e-12).unwrap();
            let sign = if ch.is_odd() { -1.0 } else { 1.0 };
            prop_assert!((b.value - sign * a.value).norm() <= a.abs_error_bound + b.abs_error_bound);
        }
    }

    #[test]
    fn error_bound_is_certified(seed in any::<u64>(), g in 1usize..=3) {
        let mut r = rng(seed);
        let tau = sample::random_siegel(&mut r, g);
        let z = small_z(&mut r, g);
        let all = enumerate_characteristics(g);
        let ch = &all[r.gen_range(0..all.len())];
        let trunc = Truncation::with_tol(1e-8);
        let radius = truncation_radius(&tau, &z, ch, &trunc).unwrap();
        let (v, _) = theta_char_at_radius(&tau, &z, ch, radius).unwrap();
        let (w, _) = theta_char_at_radius(&tau, &z, ch, radius + 2.0).unwrap();
        let bound = theta_char(&tau, &z, ch, 1e-8).unwrap().abs_error_bound;
        prop_assert!((v - w).norm() <= bound.max(1e-15), "{:e} > {:e}", (v - w).norm(), bound);
    }

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), g in 1usize..=3) {
        let mut r = rng(seed);
        let tau = sample::random_siegel(&mut r, g);
        let z = small_z(&mut r, g);
        let ch = Characteristic::zero(g);
        let grad = grad_theta(&tau, &z, &ch, 1e-13).unwrap();
        let h = 1e-5;
        for k in 0..g {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += h;
            zm[k] -= h;
            let d = (theta(&tau, &zp, 1e-14).unwrap().value - theta(&tau, &zm, 1e-14).unwrap().value) / (2.0 * h);
            let exact = grad[k].value;
            prop_assert!((d - exact).norm() <= 1e-6 * exact.norm().max(1.0));
        }
    }

    #[test]
    fn block_diagonal_factorizes(seed in any::<u64>(), g1 in 1usize..=2, g2 in 1usize..=2) {
        let mut r = rng(seed);
        let a = sample::random_siegel(&mut r, g1);
        let b = sample::random_siegel(&mut r, g2);
        let g = g1 + g2;
        let mut m = vec![c64(0.0, 0.0); g * g];
        for i in 0..g1 {
            for j in 0..g1 {
                m[i * g + j] = a.get(i, j);
            }
        }
        for i in 0..g2 {
            for j in 0..g2 {
                m[(g1 + i) * g + g1 + j] = b.get(i, j);
            }
        }
        let tau = SiegelMatrix::new(g, &m).unwrap();
        let z = small_z(&mut r, g);
        let whole = theta(&tau, &z, 1e-12).unwrap().value;
        let split = theta(&a, &z[..g1], 1e-12).unwrap().value * theta(&b, &z[g1..], 1e-12).unwrap().value;
        prop_assert!((whole - split).norm() <= 1e-10 * (1.0 + whole.norm()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn each_rational_point_lies_in_one_cell(seed in any::<u64>(), row in 0usize..13) {
        let cone = TABLE_CONES[row];
        let forms = dicing::parse_forms(cone).unwrap();
        let k = forms[0].k;
        let d = dicing::delaunay_dicing(&forms, k).unwrap();
        let mut r = rng(seed);
        let den = 1_000_003;
        let num: Vec<i64> = (0..k).map(|_| r.gen_range(-2 * den..3 * den)).collect();
        let x = rational_point(&num, den);
        prop_assert_eq!(d.cells_containing(&x).len(), 1);
    }

    #[test]
    fn involution_fixed_points_total(seed in any::<u64>(), g in 2usize..=3) {
        let m = DegenerationModel::random(ModelKind::TwoP2, g, &mut rng(seed)).unwrap();
        let fps = m.fixed_points().unwrap();
        prop_assert_eq!(DegenerationModel::fixed_point_total(&fps), 1u64 << (2 * g));
    }

    #[test]
    fn limit_residuals_decrease(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let fam = DegeneratingFamily::random(n + 1, n, &mut r).unwrap();
        let m = fam.model().unwrap();
        let pts = limits::sample_points(&fam, 4, &mut r);
        let table = limits::limit_residual(&fam, &m, &[1.0, 2.0, 3.0, 4.0], &pts, 1e-14).unwrap();
        prop_assert!(limits::is_monotone(&table), "{:?}", table);
    }
}

#[test]
fn central_symmetry_of_every_row() {
    for cone in TABLE_CONES {
        let forms = dicing::parse_forms(cone).unwrap();
        let d = dicing::delaunay_dicing(&forms, forms[0].k).unwrap();
        assert!(d.is_centrally_symmetric(), "{cone}");
    }
}
