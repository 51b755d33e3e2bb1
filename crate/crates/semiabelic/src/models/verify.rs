//! Self-checks of a model: gluing consistency, involution compatibility,
//! fixed-point identities and the model-specific relations.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ComponentPoint, DegenerationModel, ModelError, ModelKind, MonomialMap};
use crate::sample;
use crate::theta::{c64, ComplexVector, C64};

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 20, tol: 1e-8, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check: String,
    pub status: CheckStatus,
    pub worst_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == CheckStatus::Pass)
    }

    pub fn get(&self, check: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == check)
    }

    fn push(&mut self, check: String, worst: f64, limit: f64) {
        let status = if worst <= limit { CheckStatus::Pass } else { CheckStatus::Fail };
        self.checks.push(CheckResult { check, status, worst_residual: worst });
    }

    fn push_lower(&mut self, check: String, smallest: f64, floor: f64) {
        let status = if smallest >= floor { CheckStatus::Pass } else { CheckStatus::Fail };
        self.checks.push(CheckResult { check, status, worst_residual: smallest });
    }
}

/// Precision used for theta evaluations inside the checks.
fn eval_tol(tol: f64) -> f64 {
    (tol * 1e-3).clamp(1e-14, 1e-10)
}

impl DegenerationModel {
    fn random_base_point(&self, rng: &mut ChaCha8Rng) -> ComplexVector {
        match &self.base.tau {
            Some(t) => sample::random_in_fundamental_domain(rng, t),
            None => Vec::new(),
        }
    }

    /// Random point of a component with support `mask`, on its quadrics.
    pub(crate) fn random_point_with_support(&self, comp: usize, mask: u64, rng: &mut ChaCha8Rng) -> ComponentPoint {
        let c = &self.components[comp];
        let mut fiber: Vec<C64> = (0..c.n_coords())
            .map(|i| if mask >> i & 1 == 1 { sample::random_unit_scale(rng) } else { c64(0.0, 0.0) })
            .collect();
        for q in &c.quadrics {
            let inside = q.iter().all(|&i| mask >> i & 1 == 1);
            if inside {
                fiber[q[3]] = fiber[q[0]] * fiber[q[1]] / fiber[q[2]];
            }
        }
        ComponentPoint { component: comp, z: self.random_base_point(rng), fiber }
    }

    /// Relative mismatch of `T_to(G p) = κ T_from(p)` over random locus points.
    fn gluing_residual(&self, gl: &MonomialMap, samples: usize, tol: f64, rng: &mut ChaCha8Rng) -> Result<(f64, C64), ModelError> {
        let mask = gl.used_mask();
        let mut kappa: Option<C64> = None;
        let mut worst: f64 = 0.0;
        for _ in 0..samples.max(2) {
            let p = self.random_point_with_support(gl.from, mask, rng);
            let q = self.apply_map(gl, &p);
            let (a, sa) = self.eval_with_scale(&p, tol)?;
            let (b, sb) = self.eval_with_scale(&q, tol)?;
            match kappa {
                None => kappa = Some(b.value / a.value),
                Some(k) => {
                    let r = (b.value - k * a.value).norm() / (sb + k.norm() * sa);
                    worst = worst.max(r);
                }
            }
        }
        Ok((worst, kappa.unwrap()))
    }

    /// Point on the divisor of a component: a random line in the fiber is
    /// intersected with `T = 0` at fixed `z`.
    fn random_divisor_point(&self, comp: usize, rng: &mut ChaCha8Rng, tol: f64) -> Result<ComponentPoint, ModelError> {
        let c = &self.components[comp];
        let n = c.n_coords();
        let z = self.random_base_point(rng);
        let mut p0: Vec<C64> = (0..n).map(|_| sample::random_unit_scale(rng)).collect();
        let mut p1 = vec![c64(0.0, 0.0); n];
        if c.quadrics.is_empty() {
            let a = c.factor_ranges()[0].end - 1;
            p0[a] = c64(0.0, 0.0);
            p1[a] = c64(1.0, 0.0);
        } else {
            let (a, b) = (c.quadrics[0][0], c.quadrics[0][1]);
            p0[a] = c64(1.0, 0.0);
            p0[b] = c64(0.0, 0.0);
            p1[b] = c64(1.0, 0.0);
            for q in &c.quadrics {
                if (q[0], q[1]) != (a, b) {
                    return Err(ModelError::InvalidModel(format!("{}: quadrics do not share a side", c.label)));
                }
                let s = sample::random_unit_scale(rng);
                p0[q[2]] = s;
                p0[q[3]] = c64(0.0, 0.0);
                p1[q[3]] = s.inv();
                p1[q[2]] = c64(0.0, 0.0);
            }
        }
        // T(p0 + a p1) is affine in a when p1 has a single nonzero coordinate per term
        let t0 = self.eval_theta_component(&ComponentPoint { component: comp, z: z.clone(), fiber: p0.clone() }, tol)?.value;
        let fiber1: Vec<C64> = p0.iter().zip(&p1).map(|(a, b)| a + b).collect();
        let t1 = self.eval_theta_component(&ComponentPoint { component: comp, z: z.clone(), fiber: fiber1 }, tol)?.value - t0;
        let a = -t0 / t1;
        let fiber = p0.iter().zip(&p1).map(|(x, y)| x + y * a).collect();
        Ok(ComponentPoint { component: comp, z, fiber })
    }

    fn relative_value(&self, p: &ComponentPoint, tol: f64) -> Result<f64, ModelError> {
        let (v, s) = self.eval_with_scale(p, tol)?;
        Ok(if s == 0.0 { 0.0 } else { v.value.norm() / s })
    }

    pub fn verify_model(&self, opts: &VerifyOptions) -> Result<VerificationReport, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let tol = eval_tol(opts.tol);
        let mut rep = VerificationReport::default();

        // (a) gluing consistency
        for gl in &self.gluings {
            let (worst, _) = self.gluing_residual(gl, opts.samples, tol, &mut rng)?;
            rep.push(format!("gluing:{}", gl.name), worst, opts.tol);
        }

        // (b) involution maps the divisor to itself, and squares to the identity
        for (ci, comp) in self.components.iter().enumerate() {
            let mut worst: f64 = 0.0;
            let mut worst_sq: f64 = 0.0;
            for _ in 0..opts.samples {
                let p = self.random_divisor_point(ci, &mut rng, tol)?;
                worst = worst.max(self.relative_value(&p, tol)?);
                let jp = self.involution(&p)?;
                worst = worst.max(self.relative_value(&jp, tol)?);
                let jjp = self.involution(&jp)?;
                worst_sq = worst_sq.max(self.distance_mod_lattice(&p, &jjp));
            }
            rep.push(format!("involution:{}", comp.label), worst, opts.tol);
            rep.push(format!("involution-square:{}", comp.label), worst_sq, opts.tol);
        }

        // glue and involution commute modulo the lattice
        let mut worst: f64 = 0.0;
        for gl in &self.gluings {
            for _ in 0..opts.samples.min(5) {
                let p = self.random_point_with_support(gl.from, gl.used_mask(), &mut rng);
                let a = self.involution(&self.apply_map(gl, &p))?;
                let b = self.involution(&p)?;
                worst = worst.max(self.distance_mod_glue(&b, &a, 2));
            }
        }
        rep.push("glue-involution-commute".to_string(), worst, opts.tol);

        // (c) fixed points
        let fps = self.fixed_points()?;
        let mut orbit: f64 = 0.0;
        let mut odd: f64 = 0.0;
        let mut even = f64::INFINITY;
        let mut ratio: f64 = 0.0;
        for fp in &fps {
            let jp = self.involution(&fp.point)?;
            orbit = orbit.max(self.distance_mod_glue(&fp.point, &jp, 8));
            let (v, s) = self.eval_with_scale(&fp.point, tol)?;
            if fp.odd_flag {
                odd = odd.max(v.value.norm() / (1.0 + s));
            } else {
                even = even.min(v.value.norm());
            }
            ratio = ratio.max((fp.parity_ratio * fp.parity_ratio - 1.0).norm());
        }
        rep.push("fixed-points:involution-orbit".to_string(), orbit, 1e-9f64.max(opts.tol));
        rep.push("fixed-points:parity-ratio".to_string(), ratio, 1e-6);
        rep.push("fixed-points:odd-vanishing".to_string(), odd, 10.0 * opts.tol);
        if even.is_finite() {
            rep.push_lower("fixed-points:even-nonvanishing".to_string(), even, 1e-4);
        }

        // (d) count
        let total = Self::fixed_point_total(&fps);
        let expected = 1u64 << (2 * self.g);
        rep.push("fixed-points:count".to_string(), (total as f64 - expected as f64).abs(), 0.0);

        // (e), (f) and the model-specific checks
        match self.kind {
            ModelKind::Octahedron => {
                let l2 = self.param("lambda2");
                let l4 = self.param("lambda4");
                let mut worst: f64 = 0.0;
                for (name, v) in super::build::octahedron_relations(l2, l4) {
                    let stored = self.param(name);
                    worst = worst.max((stored - v).norm() / v.norm());
                }
                rep.push("octahedron-relations".to_string(), worst, opts.tol);
            }
            ModelKind::Rank1 | ModelKind::StandardRankN(_) => {
                let worst = self.cocycle_residual(opts.samples.max(1), tol, &mut rng)?;
                rep.push("cocycle".to_string(), worst, opts.tol);
            }
            ModelKind::PrincipalRank3 => {
                let mut smallest = f64::INFINITY;
                for fp in &fps {
                    let comp = &self.components[fp.point.component];
                    let mut best: f64 = 0.0;
                    for c in 0..comp.n_coords() {
                        let s = self.coord_shift(fp.point.component, c);
                        let z: ComplexVector = fp.point.z.iter().zip(&s).map(|(a, b)| a + b).collect();
                        best = best.max(self.base.theta(&z, tol)?.value.norm());
                    }
                    smallest = smallest.min(best);
                }
                rep.push_lower("coefficient-nonvanishing".to_string(), smallest, 1e-4);
            }
            _ => {}
        }
        Ok(rep)
    }

    /// Largest relative mismatch of `T(j p) = Π x_j⁻¹ Π t_jk⁻¹ · T(p)` in
    /// affine coordinates `x_j = w_j1 / w_j0`.
    pub fn cocycle_residual<R: Rng + ?Sized>(&self, samples: usize, tol: f64, rng: &mut R) -> Result<f64, ModelError> {
        let n = self.k();
        let mut tprod = c64(1.0, 0.0);
        if let ModelKind::StandardRankN(_) = self.kind {
            for a in 1..=n {
                for b in a + 1..=n {
                    tprod *= self.param(&format!("t{a}{b}")).inv();
                }
            }
        }
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let z = match &self.base.tau {
                Some(t) => sample::random_in_fundamental_domain(rng, t),
                None => Vec::new(),
            };
            let mut fiber = Vec::new();
            let mut xprod = c64(1.0, 0.0);
            for _ in 0..n {
                let x = sample::random_unit_scale(rng);
                fiber.push(c64(1.0, 0.0));
                fiber.push(x);
                xprod *= x.inv();
            }
            let p = ComponentPoint { component: 0, z, fiber };
            let jp = self.involution(&p)?;
            let dehom: C64 = (0..n).map(|j| jp.fiber[2 * j]).product();
            let lhs = self.eval_theta_component(&jp, tol)?.value / dehom;
            let rhs = xprod * tprod * self.eval_theta_component(&p, tol)?.value;
            worst = worst.max((lhs - rhs).norm() / (lhs.norm() + rhs.norm()));
        }
        Ok(worst)
    }
}
