//! Semi-abelic theta divisors for degenerations of torus rank at most three.
//!
//! Every model is described by the same data: components (toric bundles over
//! the abelian base `B`), each with a theta form `Σ coef · monomial · θ(z + s)`,
//! plus monomial gluing maps and a monomial involution. Each fiber coordinate
//! sits at a lattice point `v ∈ Z^k`; its theta shift is `Σ v_i b_i`, and the
//! lattice `Z^{g'} + τZ^{g'}` acts by `z ↦ z + τn + m`, `w_c ↦ e(nᵀ s_c) w_c`.

mod build;
mod closed;
mod fixed;
mod gradient;
mod verify;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::theta::{self, c64, Characteristic, ComplexVector, SiegelMatrix, ThetaError, ThetaValue, C64};

pub use build::{octahedron_relations, PRINCIPAL_SHIFTS, PRINCIPAL_SIMPLICES};
pub use fixed::FixedPoint;
pub use gradient::{direction_sine, GradientReport};
pub use verify::{CheckResult, CheckStatus, VerificationReport, VerifyOptions};

/// Threshold below which a normalized coordinate counts as zero.
pub const ZERO_COORD: f64 = 1e-12;
/// Distance under which two normalized projective points are equal.
pub const POINT_EQ: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("component {0} does not exist in this model")]
    WrongComponent(String),
    #[error("point is not on any gluing locus")]
    NotOnGluingLocus,
    #[error("point is not on the theta divisor (|T| = {0:e})")]
    NotOnDivisor(f64),
    #[error("point is a singular point of its component")]
    SingularPointOfComponent,
    #[error("shift parameters are degenerate: {0}")]
    DegenerateParameters(String),
    #[error("invalid model data: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Rank1,
    StandardRankN(usize),
    TwoP2,
    TwoP1xP2,
    Octahedron,
    TwoPyramids,
    PrincipalRank3,
}

impl ModelKind {
    pub fn torus_rank(&self) -> usize {
        match self {
            ModelKind::Rank1 => 1,
            ModelKind::StandardRankN(n) => *n,
            ModelKind::TwoP2 => 2,
            _ => 3,
        }
    }

    pub fn name(&self) -> String {
        match self {
            ModelKind::Rank1 => "rank1".to_string(),
            ModelKind::StandardRankN(n) => format!("standard-rank-{n}"),
            ModelKind::TwoP2 => "two-p2".to_string(),
            ModelKind::TwoP1xP2 => "two-p1xp2".to_string(),
            ModelKind::Octahedron => "octahedron".to_string(),
            ModelKind::TwoPyramids => "two-pyramids".to_string(),
            ModelKind::PrincipalRank3 => "principal-rank3".to_string(),
        }
    }

    /// Parses the names produced by [`ModelKind::name`]; `standard-rank-n`
    /// also accepts the shorthand `standardN`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        let k = match s.as_str() {
            "rank1" => ModelKind::Rank1,
            "two-p2" => ModelKind::TwoP2,
            "two-p1xp2" => ModelKind::TwoP1xP2,
            "octahedron" => ModelKind::Octahedron,
            "two-pyramids" => ModelKind::TwoPyramids,
            "principal-rank3" => ModelKind::PrincipalRank3,
            _ => {
                let n = s
                    .strip_prefix("standard-rank-")
                    .or_else(|| s.strip_prefix("standard"))?
                    .parse::<usize>()
                    .ok()?;
                if n == 0 {
                    return None;
                }
                ModelKind::StandardRankN(n)
            }
        };
        Some(k)
    }
}

/// The abelian base `B = C^{g'}/(Z^{g'} + τZ^{g'})`, possibly a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Base {
    pub tau: Option<SiegelMatrix>,
}

impl Base {
    pub fn g(&self) -> usize {
        self.tau.as_ref().map_or(0, |t| t.g())
    }

    pub fn characteristics(&self) -> Vec<Characteristic> {
        theta::enumerate_characteristics(self.g())
    }

    pub fn theta_ch(&self, z: &[C64], ch: &Characteristic, tol: f64) -> Result<ThetaValue, ThetaError> {
        match &self.tau {
            None => Ok(ThetaValue { value: c64(1.0, 0.0), abs_error_bound: 0.0 }),
            Some(t) => theta::theta_char(t, z, ch, tol),
        }
    }

    pub fn theta(&self, z: &[C64], tol: f64) -> Result<ThetaValue, ThetaError> {
        self.theta_ch(z, &Characteristic::zero(self.g()), tol)
    }

    pub fn theta_and_grad(
        &self,
        z: &[C64],
        ch: &Characteristic,
        tol: f64,
    ) -> Result<(ThetaValue, Vec<ThetaValue>), ThetaError> {
        match &self.tau {
            None => Ok((ThetaValue { value: c64(1.0, 0.0), abs_error_bound: 0.0 }, Vec::new())),
            Some(t) => theta::theta_and_grad(t, z, ch, tol),
        }
    }

    pub fn point(&self, ch: &Characteristic) -> ComplexVector {
        self.tau.as_ref().map_or_else(Vec::new, |t| ch.point(t))
    }

    pub fn shift_factor(&self, ch: &Characteristic) -> C64 {
        self.tau.as_ref().map_or(c64(1.0, 0.0), |t| ch.shift_factor(t))
    }

    /// Writes `d = τn + m + r` with integer `n, m` and small remainder `r`.
    pub fn reduce(&self, d: &[C64]) -> (Vec<i64>, Vec<i64>, ComplexVector) {
        let Some(tau) = &self.tau else {
            return (Vec::new(), Vec::new(), Vec::new());
        };
        let y: Vec<f64> = d.iter().map(|v| v.im).collect();
        let n: Vec<i64> = tau.im_solve(&y).iter().map(|v| libm::round(*v) as i64).collect();
        let tn = tau.mul_real(&n.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let m: Vec<i64> = d.iter().zip(&tn).map(|(a, b)| libm::round((a - b).re) as i64).collect();
        let r = (0..d.len()).map(|i| d[i] - tn[i] - m[i] as f64).collect();
        (n, m, r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coef: C64,
    /// One global coordinate index per projective factor.
    pub coords: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub label: String,
    /// Lattice positions of the coordinates, grouped by projective factor.
    pub factors: Vec<Vec<Vec<i64>>>,
    pub terms: Vec<Term>,
    /// Binomial relations `w_a w_b = w_c w_d`.
    pub quadrics: Vec<[usize; 4]>,
    /// Per factor, coordinates in the order they are tried as affine chart.
    pub chart_pref: Vec<Vec<usize>>,
}

impl Component {
    pub fn n_coords(&self) -> usize {
        self.factors.iter().map(|f| f.len()).sum()
    }

    /// Global index ranges of the factors.
    pub fn factor_ranges(&self) -> Vec<core::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut o = 0;
        for f in &self.factors {
            out.push(o..o + f.len());
            o += f.len();
        }
        out
    }

    pub fn position(&self, coord: usize) -> &[i64] {
        let mut c = coord;
        for f in &self.factors {
            if c < f.len() {
                return &f[c];
            }
            c -= f.len();
        }
        panic!("coordinate index out of range")
    }

    pub fn factor_of(&self, coord: usize) -> usize {
        self.factor_ranges().iter().position(|r| r.contains(&coord)).expect("coordinate in range")
    }

    /// Lattice position of a term, the sum over its coordinates.
    pub fn term_position(&self, t: &Term) -> Vec<i64> {
        let k = self.position(0).len();
        let mut v = vec![0i64; k];
        for &c in &t.coords {
            for (a, b) in v.iter_mut().zip(self.position(c)) {
                *a += b;
            }
        }
        v
    }

    /// Whether a support pattern is realized by a point of the component.
    pub fn support_is_valid(&self, mask: u64) -> bool {
        let has = |c: usize| mask >> c & 1 == 1;
        for r in self.factor_ranges() {
            if !r.clone().any(has) {
                return false;
            }
        }
        self.quadrics.iter().all(|q| (has(q[0]) && has(q[1])) == (has(q[2]) && has(q[3])))
    }

    /// Dimension of the torus orbit with the given support.
    pub fn orbit_dim(&self, mask: u64) -> usize {
        self.factor_ranges()
            .iter()
            .map(|r| {
                let pts: Vec<&[i64]> =
                    r.clone().filter(|&c| mask >> c & 1 == 1).map(|c| self.position(c)).collect();
                affine_rank(&pts)
            })
            .sum()
    }
}

pub(crate) fn affine_rank(pts: &[&[i64]]) -> usize {
    if pts.len() <= 1 {
        return 0;
    }
    let rows: Vec<Vec<i64>> =
        pts[1..].iter().map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect()).collect();
    crate::dicing::exact::rank(&rows)
}

/// A map between components of the form `z ↦ σz + Σ c_i b_i`,
/// `w'_j = s_j · w_{π(j)}` (or `w'_j = 0`). `scalar` records
/// `T_to(map(p)) = scalar · T_from(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialMap {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub zsign: i64,
    pub zshift: Vec<i64>,
    pub coords: Vec<Option<(usize, C64)>>,
    pub scalar: C64,
}

impl MonomialMap {
    /// Source coordinates that survive the map; the rest must vanish on the locus.
    pub fn used_mask(&self) -> u64 {
        self.coords.iter().flatten().fold(0u64, |m, (i, _)| m | 1 << i)
    }

    pub fn inverse(&self, n_from: usize) -> MonomialMap {
        let mut coords = vec![None; n_from];
        for (j, c) in self.coords.iter().enumerate() {
            if let Some((i, s)) = c {
                coords[*i] = Some((j, c64(1.0, 0.0) / s));
            }
        }
        MonomialMap {
            name: format!("{}^-1", self.name),
            from: self.to,
            to: self.from,
            zsign: self.zsign,
            zshift: self.zshift.iter().map(|v| -self.zsign * v).collect(),
            coords,
            scalar: c64(1.0, 0.0) / self.scalar,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MonomialMap) -> MonomialMap {
        assert_eq!(other.to, self.from, "maps are not composable");
        MonomialMap {
            name: format!("{}*{}", self.name, other.name),
            from: other.from,
            to: self.to,
            zsign: self.zsign * other.zsign,
            zshift: self.zshift.iter().zip(&other.zshift).map(|(a, b)| a + self.zsign * b).collect(),
            coords: self
                .coords
                .iter()
                .map(|c| c.and_then(|(i, s)| other.coords[i].map(|(src, t)| (src, s * t))))
                .collect(),
            scalar: self.scalar * other.scalar,
        }
    }

    /// Image of a support mask.
    pub fn image_mask(&self, mask: u64) -> u64 {
        self.coords
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c, Some((i, _)) if mask >> i & 1 == 1))
            .fold(0u64, |m, (j, _)| m | 1 << j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPoint {
    pub component: usize,
    pub z: ComplexVector,
    pub fiber: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegenerationModel {
    pub kind: ModelKind,
    pub g: usize,
    pub base: Base,
    pub shifts: Vec<ComplexVector>,
    pub params: BTreeMap<String, C64>,
    pub components: Vec<Component>,
    pub gluings: Vec<MonomialMap>,
    pub involutions: Vec<MonomialMap>,
}

impl DegenerationModel {
    pub fn k(&self) -> usize {
        self.kind.torus_rank()
    }

    pub fn base_g(&self) -> usize {
        self.g - self.k()
    }

    pub fn param(&self, name: &str) -> C64 {
        *self.params.get(name).unwrap_or_else(|| panic!("missing parameter {name}"))
    }

    pub fn component_index(&self, label: &str) -> Result<usize, ModelError> {
        self.components
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| ModelError::WrongComponent(label.to_string()))
    }

    /// `Σ v_i b_i` as a point of the base universal cover.
    pub fn shift_vector(&self, pos: &[i64]) -> ComplexVector {
        let mut s = vec![c64(0.0, 0.0); self.base_g()];
        for (i, &c) in pos.iter().enumerate() {
            if c != 0 {
                for (a, b) in s.iter_mut().zip(&self.shifts[i]) {
                    *a += b * c as f64;
                }
            }
        }
        s
    }

    pub fn coord_shift(&self, comp: usize, coord: usize) -> ComplexVector {
        self.shift_vector(self.components[comp].position(coord))
    }

    fn check_point(&self, p: &ComponentPoint) -> Result<&Component, ModelError> {
        let comp = self
            .components
            .get(p.component)
            .ok_or_else(|| ModelError::WrongComponent(format!("#{}", p.component)))?;
        if p.fiber.len() != comp.n_coords() || p.z.len() != self.base_g() {
            return Err(ModelError::WrongComponent(format!(
                "{}: expected {} fiber and {} base coordinates",
                comp.label,
                comp.n_coords(),
                self.base_g()
            )));
        }
        Ok(comp)
    }

    /// Value of the component theta form together with `Σ|term|`.
    pub fn eval_with_scale(&self, p: &ComponentPoint, tol: f64) -> Result<(ThetaValue, f64), ModelError> {
        let comp = self.check_point(p)?;
        let mut cache: BTreeMap<Vec<i64>, ThetaValue> = BTreeMap::new();
        let mut value = c64(0.0, 0.0);
        let mut bound = 0.0;
        let mut scale = 0.0;
        for t in &comp.terms {
            let mono: C64 = t.coords.iter().map(|&c| p.fiber[c]).product::<C64>() * t.coef;
            if mono.norm() == 0.0 {
                continue;
            }
            let pos = comp.term_position(t);
            let th = match cache.get(&pos) {
                Some(v) => *v,
                None => {
                    let s = self.shift_vector(&pos);
                    let z: ComplexVector = p.z.iter().zip(&s).map(|(a, b)| a + b).collect();
                    let v = self.base.theta(&z, tol)?;
                    cache.insert(pos, v);
                    v
                }
            };
            value += mono * th.value;
            bound += mono.norm() * th.abs_error_bound;
            scale += (mono * th.value).norm();
        }
        Ok((ThetaValue { value, abs_error_bound: bound }, scale))
    }

    pub fn eval_theta_component(&self, p: &ComponentPoint, tol: f64) -> Result<ThetaValue, ModelError> {
        Ok(self.eval_with_scale(p, tol)?.0)
    }

    pub fn apply_map(&self, map: &MonomialMap, p: &ComponentPoint) -> ComponentPoint {
        let s = self.shift_vector(&map.zshift);
        ComponentPoint {
            component: map.to,
            z: p.z.iter().zip(&s).map(|(a, b)| a * map.zsign as f64 + b).collect(),
            fiber: map
                .coords
                .iter()
                .map(|c| c.map_or(c64(0.0, 0.0), |(i, sc)| p.fiber[i] * sc))
                .collect(),
        }
    }

    /// Declared gluings followed by their inverses.
    pub fn all_glue_maps(&self) -> Vec<MonomialMap> {
        let mut out = self.gluings.clone();
        for gmap in &self.gluings {
            out.push(gmap.inverse(self.components[gmap.from].n_coords()));
        }
        out
    }

    pub fn on_locus(&self, map: &MonomialMap, p: &ComponentPoint) -> bool {
        if map.from != p.component {
            return false;
        }
        let used = map.used_mask();
        let mx = p.fiber.iter().map(|w| w.norm()).fold(0.0, f64::max);
        p.fiber
            .iter()
            .enumerate()
            .all(|(c, w)| used >> c & 1 == 1 || w.norm() <= ZERO_COORD * mx)
    }

    /// All points identified with `p` by a single gluing.
    pub fn glue(&self, p: &ComponentPoint) -> Result<Vec<ComponentPoint>, ModelError> {
        self.check_point(p)?;
        let out: Vec<ComponentPoint> = self
            .all_glue_maps()
            .iter()
            .filter(|m| self.on_locus(m, p))
            .map(|m| self.apply_map(m, p))
            .collect();
        if out.is_empty() {
            Err(ModelError::NotOnGluingLocus)
        } else {
            Ok(out)
        }
    }

    pub fn involution(&self, p: &ComponentPoint) -> Result<ComponentPoint, ModelError> {
        self.check_point(p)?;
        let j = self
            .involutions
            .iter()
            .find(|m| m.from == p.component)
            .ok_or_else(|| ModelError::InvalidModel("missing involution".to_string()))?;
        Ok(self.apply_map(j, p))
    }

    /// `z ↦ z + τn + m`, `w_c ↦ e(nᵀ s_c) w_c`.
    pub fn lattice_act(&self, p: &ComponentPoint, n: &[i64], m: &[i64]) -> ComponentPoint {
        let Some(tau) = &self.base.tau else {
            return p.clone();
        };
        let nf: Vec<f64> = n.iter().map(|&v| v as f64).collect();
        let tn = tau.mul_real(&nf);
        let comp = &self.components[p.component];
        let fiber = (0..comp.n_coords())
            .map(|c| {
                let s = self.coord_shift(p.component, c);
                let ns: C64 = s.iter().zip(&nf).map(|(a, b)| a * b).sum();
                p.fiber[c] * theta::e(ns)
            })
            .collect();
        ComponentPoint {
            component: p.component,
            z: (0..p.z.len()).map(|i| p.z[i] + tn[i] + m[i] as f64).collect(),
            fiber,
        }
    }

    /// Fiber coordinates scaled so that each factor's largest coordinate is 1.
    pub fn normalized_fiber(&self, p: &ComponentPoint) -> Vec<C64> {
        let comp = &self.components[p.component];
        let mut out = p.fiber.clone();
        for r in comp.factor_ranges() {
            let k = r
                .clone()
                .max_by(|&a, &b| p.fiber[a].norm().partial_cmp(&p.fiber[b].norm()).unwrap())
                .unwrap();
            let d = p.fiber[k];
            for c in r {
                out[c] = p.fiber[c] / d;
            }
        }
        out
    }

    /// Projective distance between fibers of the same component, using the
    /// normalization of `p`.
    fn fiber_distance(&self, p: &ComponentPoint, q: &ComponentPoint) -> f64 {
        let comp = &self.components[p.component];
        let mut worst: f64 = 0.0;
        for r in comp.factor_ranges() {
            let k = r
                .clone()
                .max_by(|&a, &b| p.fiber[a].norm().partial_cmp(&p.fiber[b].norm()).unwrap())
                .unwrap();
            if q.fiber[k].norm() == 0.0 {
                return f64::INFINITY;
            }
            for c in r {
                worst = worst.max((p.fiber[c] / p.fiber[k] - q.fiber[c] / q.fiber[k]).norm());
            }
        }
        worst
    }

    /// Distance between `p` and `q` after moving `q` by the lattice vector
    /// that best matches the base coordinates.
    pub fn distance_mod_lattice(&self, p: &ComponentPoint, q: &ComponentPoint) -> f64 {
        if p.component != q.component {
            return f64::INFINITY;
        }
        let d: ComplexVector = p.z.iter().zip(&q.z).map(|(a, b)| a - b).collect();
        let (n, m, r) = self.base.reduce(&d);
        let q2 = self.lattice_act(q, &n, &m);
        let dz = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
        dz.max(self.fiber_distance(p, &q2))
    }

    /// Points reachable from `p` by at most `depth` gluings, `p` included.
    pub fn glue_orbit(&self, p: &ComponentPoint, depth: usize) -> Vec<ComponentPoint> {
        let maps = self.all_glue_maps();
        let mut seen = vec![p.clone()];
        let mut frontier = vec![p.clone()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for q in &frontier {
                for m in maps.iter().filter(|m| self.on_locus(m, q)) {
                    let r = self.apply_map(m, q);
                    if !seen.iter().any(|s| self.distance_mod_lattice(s, &r) <= POINT_EQ) {
                        seen.push(r.clone());
                        next.push(r);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen
    }

    /// Smallest distance modulo gluings and the lattice.
    pub fn distance_mod_glue(&self, p: &ComponentPoint, q: &ComponentPoint, depth: usize) -> f64 {
        self.glue_orbit(p, depth)
            .iter()
            .map(|r| self.distance_mod_lattice(r, q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Rejects shifts for which two translates `Σ v_i b_i` differ by a
    /// two-torsion point of the base.
    pub fn check_generic_shifts(&self) -> Result<(), ModelError> {
        if self.base_g() == 0 {
            return Ok(());
        }
        let mut positions: Vec<Vec<i64>> = Vec::new();
        for comp in &self.components {
            for f in &comp.factors {
                for p in f {
                    if !positions.contains(p) {
                        positions.push(p.clone());
                    }
                }
            }
            for t in &comp.terms {
                let p = comp.term_position(t);
                if !positions.contains(&p) {
                    positions.push(p);
                }
            }
        }
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                let d: Vec<i64> = positions[i].iter().zip(&positions[j]).map(|(a, b)| 2 * (a - b)).collect();
                let (_, _, r) = self.base.reduce(&self.shift_vector(&d));
                let res = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
                if res < 1e-6 {
                    return Err(ModelError::DegenerateParameters(format!(
                        "translates {:?} and {:?} differ by a two-torsion point",
                        positions[i], positions[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
