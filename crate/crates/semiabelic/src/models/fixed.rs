//! Fixed points of the involution.
//!
//! For every torus-orbit stratum the gluings are composed symbolically to a
//! map `Φ` that brings `j(stratum)` back onto the stratum. A fixed point of
//! the involution on the quotient is a point with `Φ(p) = Λ·γ(p)` for a
//! lattice element `γ = −(ε, δ)` and a projective scale `Λ` per factor, which
//! gives `z = m + C/2` and a monomial system on the fiber.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::{ComponentPoint, DegenerationModel, ModelError, MonomialMap};
use crate::theta::{c64, e, Characteristic, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub point: ComponentPoint,
    pub characteristic: Characteristic,
    /// One sign for the scale of each paired factor, then one per quadric branch.
    pub sign_choice: Vec<i8>,
    pub multiplicity: u32,
    pub odd_flag: bool,
    /// Support of the fiber coordinates, as a bit mask.
    pub stratum: u64,
    /// Ratio whose sign decides `odd_flag`; it is ±1 up to rounding.
    pub parity_ratio: C64,
}

/// A torus-orbit stratum together with the map `Φ` back onto itself.
#[derive(Debug, Clone)]
pub(crate) struct FixedStratum {
    pub comp: usize,
    pub mask: u64,
    pub phi: MonomialMap,
}

struct FactorSolution {
    lambda: C64,
    coords: Vec<(usize, C64)>,
    signs: Vec<i8>,
}

fn identity_map(comp: usize, n: usize, k: usize) -> MonomialMap {
    MonomialMap {
        name: "id".to_string(),
        from: comp,
        to: comp,
        zsign: 1,
        zshift: vec![0; k],
        coords: (0..n).map(|i| Some((i, c64(1.0, 0.0)))).collect(),
        scalar: c64(1.0, 0.0),
    }
}

impl DegenerationModel {
    /// Strata reachable from `(comp, mask)` by gluings, with the composed maps.
    pub(crate) fn symbolic_orbit(&self, comp: usize, mask: u64) -> Vec<(usize, u64, MonomialMap)> {
        let maps = self.all_glue_maps();
        let start = identity_map(comp, self.components[comp].n_coords(), self.k());
        let mut out = vec![(comp, mask, start.clone())];
        let mut queue = VecDeque::from([(comp, mask, start)]);
        while let Some((c, m, acc)) = queue.pop_front() {
            for gm in maps.iter().filter(|gm| gm.from == c && m & !gm.used_mask() == 0) {
                let nm = gm.image_mask(m);
                if out.iter().any(|(c2, m2, _)| *c2 == gm.to && *m2 == nm) {
                    continue;
                }
                let composed = gm.compose(&acc);
                out.push((gm.to, nm, composed.clone()));
                queue.push_back((gm.to, nm, composed));
            }
        }
        out
    }

    /// One representative per glued class of strata that the involution maps
    /// to itself, listed by (component, support).
    pub(crate) fn fixed_strata(&self) -> Vec<FixedStratum> {
        let mut out = Vec::new();
        for (ci, comp) in self.components.iter().enumerate() {
            let n = comp.n_coords();
            for mask in 1u64..1 << n {
                if !comp.support_is_valid(mask) {
                    continue;
                }
                let orbit = self.symbolic_orbit(ci, mask);
                let rep = orbit.iter().map(|(c, m, _)| (*c, *m)).min().unwrap();
                if rep != (ci, mask) {
                    continue;
                }
                let j = self.involutions.iter().find(|m| m.from == ci).expect("involution");
                let target = (j.to, j.image_mask(mask));
                let Some((_, _, back)) = orbit.iter().find(|(c, m, _)| (*c, *m) == target) else {
                    continue;
                };
                let phi = back.inverse(n).compose(j);
                out.push(FixedStratum { comp: ci, mask, phi });
            }
        }
        out
    }

    fn solve_factor(
        &self,
        st: &FixedStratum,
        range: core::ops::Range<usize>,
        sdot: &dyn Fn(usize) -> C64,
    ) -> Result<Vec<FactorSolution>, ModelError> {
        let phase = |a: usize| e(-sdot(a));
        let comp = &self.components[st.comp];
        let support: Vec<usize> = range.filter(|&a| st.mask >> a & 1 == 1).collect();
        let pi = |a: usize| st.phi.coords[a].expect("support is mapped").0;
        let kappa = |a: usize| st.phi.coords[a].expect("support is mapped").1;
        let unsupported = || ModelError::InvalidModel(format!("fixed stratum {:#b} of {} is not isolated", st.mask, comp.label));
        if support.iter().any(|&a| !support.contains(&pi(a)) || pi(pi(a)) != a) {
            return Err(unsupported());
        }
        if support.len() == 1 {
            let a = support[0];
            return Ok(vec![FactorSolution { lambda: kappa(a) / phase(a), coords: vec![(a, c64(1.0, 0.0))], signs: vec![] }]);
        }
        if support.iter().any(|&a| pi(a) == a) {
            return Err(unsupported());
        }
        let pairs: Vec<(usize, usize)> = support.iter().filter(|&&a| a < pi(a)).map(|&a| (a, pi(a))).collect();
        let sq = |(a, b): (usize, usize)| kappa(a) * kappa(b) / (phase(a) * phase(b));
        let l2 = sq(pairs[0]);
        if pairs.iter().any(|&p| (sq(p) - l2).norm() > 1e-8 * l2.norm()) {
            return Ok(Vec::new());
        }
        let (a0, b0) = pairs[0];
        let lambda0 = (kappa(a0) * kappa(b0)).sqrt() * e((sdot(a0) + sdot(b0)) * 0.5);
        // scale relations between pairs coming from the quadrics
        let pair_of = |c: usize| pairs.iter().position(|&(a, b)| a == c || b == c);
        let mut links: Vec<(usize, usize)> = Vec::new();
        for q in &comp.quadrics {
            let inside = |x: usize| support.contains(&x);
            let lhs = inside(q[0]) && inside(q[1]);
            let rhs = inside(q[2]) && inside(q[3]);
            if !lhs && !rhs {
                continue;
            }
            match (pair_of(q[0]), pair_of(q[1]), pair_of(q[2]), pair_of(q[3])) {
                (Some(p), Some(p2), Some(r), Some(r2)) if p == p2 && r == r2 => links.push((p, r)),
                _ => return Err(unsupported()),
            }
        }
        let mut sols = Vec::new();
        for sigma in [1i8, -1] {
            let lambda = lambda0 * sigma as f64;
            let ratio: Vec<C64> = pairs.iter().map(|&(a, _)| lambda * phase(a) / kappa(a)).collect();
            // breadth-first assignment of pair scales, branching on square roots
            let mut partial: Vec<(Vec<Option<C64>>, Vec<i8>)> = vec![({
                let mut v = vec![None; pairs.len()];
                v[0] = Some(c64(1.0, 0.0));
                v
            }, vec![sigma])];
            loop {
                let (scales, _) = &partial[0];
                let next = links.iter().find_map(|&(p, r)| match (scales[p], scales[r]) {
                    (Some(_), None) => Some((p, r)),
                    (None, Some(_)) => Some((r, p)),
                    _ => None,
                });
                let Some((known, unknown)) = next else { break };
                let mut grown = Vec::new();
                for (scales, signs) in &partial {
                    let s = scales[known].unwrap();
                    let root = (s * s * ratio[known] / ratio[unknown]).sqrt();
                    for sg in [1i8, -1] {
                        let mut sc = scales.clone();
                        sc[unknown] = Some(root * sg as f64);
                        let mut si = signs.clone();
                        si.push(sg);
                        grown.push((sc, si));
                    }
                }
                partial = grown;
            }
            if partial[0].0.iter().any(|s| s.is_none()) {
                return Err(unsupported());
            }
            for (scales, signs) in partial {
                let mut coords = Vec::new();
                for (i, &(a, b)) in pairs.iter().enumerate() {
                    let s = scales[i].unwrap();
                    coords.push((a, s));
                    coords.push((b, s * ratio[i]));
                }
                sols.push(FactorSolution { lambda, coords, signs });
            }
        }
        Ok(sols)
    }

    /// All fixed points of the involution, with multiplicities and parity flags.
    pub fn fixed_points(&self) -> Result<Vec<FixedPoint>, ModelError> {
        self.check_generic_shifts()?;
        let strata = self.fixed_strata();
        let mut out = Vec::new();
        for ch in self.base.characteristics() {
            let m = self.base.point(&ch);
            let eps: Vec<f64> = ch.eps_f64();
            let dot = |v: &[C64]| -> C64 { v.iter().zip(&eps).map(|(a, b)| a * b).sum() };
            let sign_ed = if ch.parity() == 1 { -1.0 } else { 1.0 };
            for st in &strata {
                let comp = &self.components[st.comp];
                let sdot = |a: usize| dot(&self.coord_shift(st.comp, a));
                let mut per_factor = Vec::new();
                for r in comp.factor_ranges() {
                    per_factor.push(self.solve_factor(st, r, &sdot)?);
                }
                let cshift = self.shift_vector(&st.phi.zshift);
                let z: Vec<C64> = m.iter().zip(&cshift).map(|(a, b)| a + b * 0.5).collect();
                let mult = 1u32 << (self.k() - comp.orbit_dim(st.mask));
                let mut combos: Vec<Vec<&FactorSolution>> = vec![Vec::new()];
                for sols in &per_factor {
                    let mut grown = Vec::new();
                    for c in &combos {
                        for s in sols {
                            let mut c2 = c.clone();
                            c2.push(s);
                            grown.push(c2);
                        }
                    }
                    combos = grown;
                }
                for combo in combos {
                    let mut fiber = vec![c64(0.0, 0.0); comp.n_coords()];
                    let mut lam = c64(1.0, 0.0);
                    let mut signs = Vec::new();
                    for s in &combo {
                        lam *= s.lambda;
                        signs.extend_from_slice(&s.signs);
                        for &(a, w) in &s.coords {
                            fiber[a] = w;
                        }
                    }
                    let ratio = lam * sign_ed * e(dot(&cshift) * 0.5) / st.phi.scalar;
                    out.push(FixedPoint {
                        point: ComponentPoint { component: st.comp, z: z.clone(), fiber },
                        characteristic: ch.clone(),
                        sign_choice: signs,
                        multiplicity: mult,
                        odd_flag: (ratio + 1.0).norm() < (ratio - 1.0).norm(),
                        stratum: st.mask,
                        parity_ratio: ratio,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Number of fixed points counted with multiplicity.
    pub fn fixed_point_total(points: &[FixedPoint]) -> u64 {
        points.iter().map(|p| p.multiplicity as u64).sum()
    }

    /// Summary of the census: (component label, support, multiplicity) ↦ count.
    pub fn fixed_point_census(&self, points: &[FixedPoint]) -> BTreeMap<(usize, u64, u32), usize> {
        let mut m = BTreeMap::new();
        for p in points {
            *m.entry((p.point.component, p.stratum, p.multiplicity)).or_insert(0) += 1;
        }
        m
    }
}
