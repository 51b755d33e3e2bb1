//! Construction of the component, gluing and involution data for each kind.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::{Base, Component, DegenerationModel, ModelError, ModelKind, MonomialMap, Term};
use crate::sample;
use crate::theta::{c64, ComplexVector, SiegelMatrix, C64};

/// Lattice positions of the four coordinates of each simplex of the
/// principal rank-three model.
pub const PRINCIPAL_SIMPLICES: [[[i64; 3]; 4]; 6] = [
    [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
    [[1, 1, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
    [[1, 1, 0], [1, 0, 0], [1, 0, 1], [0, 0, 1]],
    [[0, 0, 1], [0, 1, 1], [0, 1, 0], [1, 1, 0]],
    [[0, 0, 1], [0, 1, 1], [1, 0, 1], [1, 1, 0]],
    [[1, 1, 1], [0, 1, 1], [1, 0, 1], [1, 1, 0]],
];

/// Same data written as theta shifts, `v^j_n = Σ_i v_i b_i`.
pub const PRINCIPAL_SHIFTS: [[&str; 4]; 6] = [
    ["0", "b1", "b2", "b3"],
    ["b1+b2", "b1", "b2", "b3"],
    ["b1+b2", "b1", "b1+b3", "b3"],
    ["b3", "b2+b3", "b2", "b1+b2"],
    ["b3", "b2+b3", "b1+b3", "b1+b2"],
    ["b1+b2+b3", "b2+b3", "b1+b3", "b1+b2"],
];

fn one() -> C64 {
    c64(1.0, 0.0)
}

fn unit(k: usize, i: usize, s: i64) -> Vec<i64> {
    let mut v = vec![0; k];
    v[i] = s;
    v
}

fn linear(label: &str, positions: Vec<Vec<i64>>, coefs: Vec<C64>, pref: Vec<usize>) -> Component {
    let terms = coefs.into_iter().enumerate().map(|(i, coef)| Term { coef, coords: vec![i] }).collect();
    Component {
        label: label.to_string(),
        factors: vec![positions],
        terms,
        quadrics: Vec::new(),
        chart_pref: vec![pref],
    }
}

/// Reflection `v ↦ (1,…,1) − v` of a position list.
fn reflect(positions: &[Vec<i64>]) -> Vec<Vec<i64>> {
    positions.iter().map(|p| p.iter().map(|x| 1 - x).collect()).collect()
}

fn map(
    name: &str,
    from: usize,
    to: usize,
    n_to: usize,
    zsign: i64,
    zshift: Vec<i64>,
    assign: &[(usize, usize, C64)],
    scalar: C64,
) -> MonomialMap {
    let mut coords = vec![None; n_to];
    for &(t, s, k) in assign {
        coords[t] = Some((s, k));
    }
    MonomialMap { name: name.to_string(), from, to, zsign, zshift, coords, scalar }
}

fn identity_involution(name: &str, a: usize, b: usize, n: usize, k: usize) -> [MonomialMap; 2] {
    let assign: Vec<(usize, usize, C64)> = (0..n).map(|i| (i, i, one())).collect();
    [
        map(name, a, b, n, -1, vec![-1; k], &assign, one()),
        map(name, b, a, n, -1, vec![-1; k], &assign, one()),
    ]
}

impl DegenerationModel {
    /// Builds a model from explicit data. Missing optional parameters take
    /// their default value 1.
    pub fn new(
        kind: ModelKind,
        g: usize,
        base_tau: Option<SiegelMatrix>,
        shifts: Vec<ComplexVector>,
        params: BTreeMap<String, C64>,
    ) -> Result<Self, ModelError> {
        let k = kind.torus_rank();
        if g < k {
            return Err(ModelError::InvalidModel(format!("genus {g} is below torus rank {k}")));
        }
        let gb = g - k;
        match (&base_tau, gb) {
            (None, 0) => {}
            (Some(t), n) if t.g() == n => {}
            _ => return Err(ModelError::InvalidModel(format!("base must have genus {gb}"))),
        }
        if shifts.len() != k || shifts.iter().any(|s| s.len() != gb) {
            return Err(ModelError::InvalidModel(format!("expected {k} shifts of length {gb}")));
        }
        let mut params = params;
        for (name, v) in &params {
            if !(v.norm() > 0.0) || !v.re.is_finite() || !v.im.is_finite() {
                return Err(ModelError::InvalidModel(format!("parameter {name} must be nonzero")));
            }
        }
        let mut model = DegenerationModel {
            kind,
            g,
            base: Base { tau: base_tau },
            shifts,
            params: BTreeMap::new(),
            components: Vec::new(),
            gluings: Vec::new(),
            involutions: Vec::new(),
        };
        fn get(params: &mut BTreeMap<String, C64>, name: &str) -> C64 {
            *params.entry(name.to_string()).or_insert(one())
        }
        match kind {
            ModelKind::Rank1 => model.build_standard(1, |_, _| one(), "P1"),
            ModelKind::StandardRankN(n) => {
                let mut t = BTreeMap::new();
                for a in 1..=n {
                    for b in a + 1..=n {
                        t.insert((a - 1, b - 1), get(&mut params, &format!("t{a}{b}")));
                    }
                }
                model.build_standard(n, |a, b| t[&(a.min(b), a.max(b))], "P1^n");
            }
            ModelKind::TwoP2 => {
                let l = [get(&mut params, "lambda0"), get(&mut params, "lambda1"), get(&mut params, "lambda2")];
                model.build_two_p2(l, get(&mut params, "c"));
            }
            ModelKind::TwoP1xP2 => model.build_two_p1xp2(get(&mut params, "t13"), get(&mut params, "t23")),
            ModelKind::Octahedron => {
                let (l2, l4) = (get(&mut params, "lambda2"), get(&mut params, "lambda4"));
                for (name, v) in octahedron_relations(l2, l4) {
                    params.entry(name.to_string()).or_insert(v);
                }
                model.build_octahedron(&params);
            }
            ModelKind::TwoPyramids => model.build_two_pyramids(get(&mut params, "c")),
            ModelKind::PrincipalRank3 => model.build_principal(&PRINCIPAL_SIMPLICES),
        }
        model.params = params;
        Ok(model)
    }

    /// Random generic model: base and shifts drawn from the seeded generator,
    /// shifts re-drawn until no two translates differ by a two-torsion point.
    pub fn random<R: Rng + ?Sized>(kind: ModelKind, g: usize, rng: &mut R) -> Result<Self, ModelError> {
        let k = kind.torus_rank();
        if g < k {
            return Err(ModelError::InvalidModel(format!("genus {g} is below torus rank {k}")));
        }
        let gb = g - k;
        let base_tau = if gb > 0 { Some(sample::random_siegel(rng, gb)) } else { None };
        let mut params = BTreeMap::new();
        match kind {
            ModelKind::StandardRankN(n) => {
                for a in 1..=n {
                    for b in a + 1..=n {
                        params.insert(format!("t{a}{b}"), sample::random_unit_scale(rng));
                    }
                }
            }
            ModelKind::TwoP1xP2 => {
                params.insert("t13".to_string(), sample::random_unit_scale(rng));
                params.insert("t23".to_string(), sample::random_unit_scale(rng));
            }
            ModelKind::Octahedron => {
                params.insert("lambda2".to_string(), sample::random_unit_scale(rng));
                params.insert("lambda4".to_string(), sample::random_unit_scale(rng));
            }
            ModelKind::TwoPyramids => {
                params.insert("c".to_string(), sample::random_unit_scale(rng));
            }
            _ => {}
        }
        let mut last = None;
        for _ in 0..100 {
            let shifts: Vec<ComplexVector> = (0..k)
                .map(|_| match &base_tau {
                    Some(t) => sample::random_in_fundamental_domain(rng, t),
                    None => Vec::new(),
                })
                .collect();
            let m = Self::new(kind, g, base_tau.clone(), shifts, params.clone())?;
            match m.check_generic_shifts() {
                Ok(()) => return Ok(m),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| ModelError::DegenerateParameters("no generic shifts found".to_string())))
    }

    /// Principal model with a caller-chosen dicing of the cube into simplices.
    pub fn principal_with_simplices(
        g: usize,
        base_tau: Option<SiegelMatrix>,
        shifts: Vec<ComplexVector>,
        simplices: &[[[i64; 3]; 4]],
    ) -> Result<Self, ModelError> {
        let mut m = Self::new(ModelKind::PrincipalRank3, g, base_tau, shifts, BTreeMap::new())?;
        m.components.clear();
        m.gluings.clear();
        m.involutions.clear();
        m.build_principal(simplices);
        Ok(m)
    }

    /// Copy with one gluing coefficient perturbed by 1%. Only coordinates in a
    /// factor with at least two coordinates on the locus are touched, since a
    /// single coordinate is projectively invisible; rank one has none.
    pub fn with_broken_gluing(&self) -> Self {
        let mut m = self.clone();
        let comps = m.components.clone();
        for gl in m.gluings.iter_mut() {
            let comp = &comps[gl.to];
            let target = comp.factor_ranges().into_iter().find_map(|r| {
                let used: Vec<usize> = r.filter(|&c| gl.coords[c].is_some()).collect();
                (used.len() >= 2).then(|| used[1])
            });
            if let Some(c) = target {
                if let Some((_, s)) = gl.coords[c].as_mut() {
                    *s *= 1.01;
                }
                return m;
            }
        }
        m
    }

    /// Image of a gluing under conjugation by the involution.
    fn conjugate(&self, gl: &MonomialMap, name: &str) -> MonomialMap {
        let jt = self.involutions.iter().find(|m| m.from == gl.to).expect("involution");
        let src = self.involutions.iter().find(|m| m.to == gl.from).expect("involution");
        let mut c = jt.compose(&gl.compose(src));
        c.name = name.to_string();
        c
    }

    fn build_standard(&mut self, n: usize, t: impl Fn(usize, usize) -> C64, label: &str) {
        let factors: Vec<Vec<Vec<i64>>> = (0..n).map(|j| vec![vec![0; n], unit(n, j, 1)]).collect();
        let mut terms = Vec::new();
        for mu in 0..1usize << n {
            let bit = |j: usize| mu >> j & 1 == 1;
            let mut coef = one();
            for a in 0..n {
                for b in a + 1..n {
                    if bit(a) && bit(b) {
                        coef *= t(a, b);
                    }
                }
            }
            terms.push(Term { coef, coords: (0..n).map(|j| 2 * j + bit(j) as usize).collect() });
        }
        self.components.push(Component {
            label: label.to_string(),
            factors,
            terms,
            quadrics: Vec::new(),
            chart_pref: (0..n).map(|j| vec![2 * j, 2 * j + 1]).collect(),
        });
        let nc = 2 * n;
        for j in 0..n {
            // x_j = 0 at z  ~  x_j = ∞ at z − b_j, with x_k ↦ t_{jk}^{-1} x_k
            let mut assign = vec![(2 * j + 1, 2 * j, one())];
            for kk in (0..n).filter(|&kk| kk != j) {
                assign.push((2 * kk, 2 * kk, one()));
                assign.push((2 * kk + 1, 2 * kk + 1, one() / t(j, kk)));
            }
            self.gluings.push(map(&format!("x{}", j + 1), 0, 0, nc, 1, unit(n, j, -1), &assign, one()));
        }
        let mut assign = Vec::new();
        let mut scalar = one();
        for j in 0..n {
            let prod: C64 = (0..n).filter(|&kk| kk != j).map(|kk| one() / t(j, kk)).product();
            assign.push((2 * j, 2 * j + 1, one()));
            assign.push((2 * j + 1, 2 * j, prod));
            for kk in j + 1..n {
                scalar /= t(j, kk);
            }
        }
        self.involutions.push(map("j", 0, 0, nc, -1, vec![-1; n], &assign, scalar));
    }

    fn build_two_p2(&mut self, l: [C64; 3], c: C64) {
        let u = vec![vec![0, 0], vec![1, 0], vec![0, 1]];
        let v = reflect(&u);
        self.components.push(linear("u", u, l.to_vec(), vec![2, 1, 0]));
        self.components.push(linear("v", v, l.to_vec(), vec![2, 1, 0]));
        self.involutions.extend(identity_involution("j", 0, 1, 3, 2));
        self.gluings.push(map("u0", 0, 1, 3, 1, vec![0, 0], &[(1, 2, one()), (2, 1, one())], one()));
        self.gluings.push(map("u1", 0, 1, 3, 1, vec![-1, 0], &[(0, 2, one()), (2, 0, one())], one()));
        self.gluings.push(map("u2", 0, 1, 3, 1, vec![0, -1], &[(0, 1, c), (1, 0, one())], one()));
    }

    fn build_two_p1xp2(&mut self, t13: C64, t23: C64) {
        let tri = vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0]];
        let tri_v = vec![vec![1, 1, 0], vec![0, 1, 0], vec![1, 0, 0]];
        let t3 = [one(), t13, t23];
        let terms: Vec<Term> = (0..3)
            .flat_map(|i| {
                [Term { coef: one(), coords: vec![i, 3] }, Term { coef: t3[i], coords: vec![i, 4] }]
            })
            .collect();
        let mk = |label: &str, tri: Vec<Vec<i64>>, line: Vec<Vec<i64>>| Component {
            label: label.to_string(),
            factors: vec![tri, line],
            terms: terms.clone(),
            quadrics: Vec::new(),
            chart_pref: vec![vec![2, 1, 0], vec![3, 4]],
        };
        self.components.push(mk("u", tri, vec![vec![0, 0, 0], vec![0, 0, 1]]));
        self.components.push(mk("v", tri_v, vec![vec![0, 0, 1], vec![0, 0, 0]]));
        self.involutions.extend(identity_involution("j", 0, 1, 5, 3));
        self.gluings.push(map(
            "u0",
            0,
            1,
            5,
            1,
            vec![0, 0, 0],
            &[(1, 2, one() / t13), (2, 1, one() / t23), (3, 4, t13 * t23), (4, 3, one())],
            one(),
        ));
        self.gluings.push(map(
            "u1",
            0,
            1,
            5,
            1,
            vec![-1, 0, 0],
            &[(0, 2, one()), (2, 0, one() / t23), (3, 4, t23), (4, 3, one())],
            one(),
        ));
        self.gluings.push(map(
            "u2",
            0,
            1,
            5,
            1,
            vec![0, -1, 0],
            &[(0, 1, one()), (1, 0, one() / t13), (3, 4, t13), (4, 3, one())],
            one(),
        ));
        let top = map(
            "w1",
            0,
            0,
            5,
            1,
            vec![0, 0, -1],
            &[(0, 0, one()), (1, 1, one() / t13), (2, 2, one() / t23), (4, 3, one())],
            one(),
        );
        let top_v = self.conjugate(&top, "y1");
        self.gluings.push(top);
        self.gluings.push(top_v);
    }

    fn build_octahedron(&mut self, p: &BTreeMap<String, C64>) {
        let q = |n: &str| p[n];
        let (l2, l4) = (q("lambda2"), q("lambda4"));
        let mu = [one(), q("mu1"), q("mu2"), q("mu3")];
        let u = vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let v = reflect(&u);
        self.components.push(linear("u", u, mu.to_vec(), vec![3, 2, 1, 0]));
        self.components.push(linear("v", v, mu.to_vec(), vec![3, 2, 1, 0]));
        let f = vec![
            vec![1, 0, 0],
            vec![0, 1, 1],
            vec![0, 1, 0],
            vec![1, 0, 1],
            vec![0, 0, 1],
            vec![1, 1, 0],
        ];
        let mut fc = linear("F", f, vec![one(), one(), l2, l2, l4, l4], vec![0, 1, 2, 3, 4, 5]);
        fc.quadrics = vec![[0, 1, 2, 3], [0, 1, 4, 5]];
        self.components.push(fc);
        self.involutions.extend(identity_involution("j", 0, 1, 4, 3));
        let swap: Vec<(usize, usize, C64)> = (0..6).map(|i| (i, i ^ 1, one())).collect();
        self.involutions.push(map("j", 2, 2, 6, -1, vec![-1; 3], &swap, one()));
        let faces = [
            map("F-u0", 2, 0, 4, 1, vec![0, 0, 0], &[(1, 0, one()), (2, 2, one()), (3, 4, one())], mu[1]),
            map(
                "F-u1",
                2,
                0,
                4,
                1,
                vec![1, 0, 0],
                &[(0, 0, one()), (2, 5, one()), (3, 3, q("t31"))],
                one(),
            ),
            map(
                "F-u2",
                2,
                0,
                4,
                1,
                vec![0, 1, 0],
                &[(0, 2, q("t02")), (1, 5, q("t12")), (3, 1, one())],
                mu[3],
            ),
            map(
                "F-u3",
                2,
                0,
                4,
                1,
                vec![0, 0, 1],
                &[(0, 4, one()), (1, 3, q("t13")), (2, 1, q("t23"))],
                one() / l4,
            ),
        ];
        for (i, fmap) in faces.iter().enumerate() {
            let conj = self.conjugate(fmap, &format!("F-v{i}"));
            self.gluings.push(fmap.clone());
            self.gluings.push(conj);
        }
    }

    fn build_two_pyramids(&mut self, c: C64) {
        let u = vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let coef_u = vec![one(), one(), c, one()];
        self.components.push(linear("u", u.clone(), coef_u.clone(), vec![3, 2, 1, 0]));
        self.components.push(linear("v", reflect(&u), coef_u, vec![3, 2, 1, 0]));
        let x = vec![vec![0, 0, 1], vec![1, 0, 1], vec![0, 1, 0], vec![0, 1, 1], vec![1, 0, 0]];
        let coef_x = vec![one(), one(), one() / c, c, one()];
        let mut xc = linear("x", x.clone(), coef_x.clone(), vec![1, 2, 3, 4, 0]);
        xc.quadrics = vec![[1, 2, 3, 4]];
        let mut yc = linear("y", reflect(&x), coef_x, vec![1, 2, 3, 4, 0]);
        yc.quadrics = vec![[1, 2, 3, 4]];
        self.components.push(xc);
        self.components.push(yc);
        self.involutions.extend(identity_involution("j", 0, 1, 4, 3));
        self.involutions.extend(identity_involution("j", 2, 3, 5, 3));
        let c2 = c * c;
        let from_x = [
            map("x-u3", 2, 0, 4, 1, vec![0, 0, 1], &[(0, 0, one()), (1, 1, one()), (2, 3, one())], one()),
            map("x-v2", 2, 1, 4, 1, vec![0, -1, 0], &[(0, 1, one()), (1, 0, one()), (3, 4, one())], one()),
            map("x-v1", 2, 1, 4, 1, vec![-1, 0, 0], &[(0, 3, c2), (2, 0, one()), (3, 2, one())], c),
            map("x-u0", 2, 0, 4, 1, vec![0, 0, 0], &[(1, 4, one()), (2, 2, one() / c2), (3, 0, one())], one()),
        ];
        for (i, pm) in from_x.iter().enumerate() {
            let name = ["y-v3", "y-u2", "y-u1", "y-v0"][i];
            let conj = self.conjugate(pm, name);
            self.gluings.push(pm.clone());
            self.gluings.push(conj);
        }
        self.gluings.push(map(
            "x-y",
            2,
            3,
            5,
            1,
            vec![0, 0, 0],
            &[(1, 2, one() / c), (2, 1, c), (3, 4, one() / c), (4, 3, c)],
            one(),
        ));
    }

    fn build_principal(&mut self, simplices: &[[[i64; 3]; 4]]) {
        let pos: Vec<Vec<Vec<i64>>> = simplices.iter().map(|s| s.iter().map(|p| p.to_vec()).collect()).collect();
        for (i, p) in pos.iter().enumerate() {
            self.components.push(linear(&format!("{}", i + 1), p.clone(), vec![one(); 4], vec![3, 2, 1, 0]));
        }
        let sub = |a: &[i64], b: &[i64]| -> Vec<i64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
        let mut done: Vec<((usize, usize), (usize, usize))> = Vec::new();
        for a in 0..pos.len() {
            for oa in 0..4 {
                let fa: Vec<usize> = (0..4).filter(|&i| i != oa).collect();
                'search: for b in 0..pos.len() {
                    for ob in 0..4 {
                        if (a, oa) == (b, ob) {
                            continue;
                        }
                        let fb: Vec<usize> = (0..4).filter(|&i| i != ob).collect();
                        for &anchor in &fb {
                            let t = sub(&pos[b][anchor], &pos[a][fa[0]]);
                            let mut assign = Vec::new();
                            for &j in &fb {
                                let want = sub(&pos[b][j], &t);
                                match fa.iter().find(|&&i| pos[a][i] == want) {
                                    Some(&i) => assign.push((j, i, one())),
                                    None => break,
                                }
                            }
                            if assign.len() == 3 {
                                if !done.contains(&((b, ob), (a, oa))) {
                                    done.push(((a, oa), (b, ob)));
                                    let neg: Vec<i64> = t.iter().map(|x| -x).collect();
                                    let name = format!("{}:{}-{}:{}", a + 1, oa, b + 1, ob);
                                    self.gluings.push(map(&name, a, b, 4, 1, neg, &assign, one()));
                                }
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        for a in 0..pos.len() {
            let refl = reflect(&pos[a]);
            let b = pos
                .iter()
                .position(|q| refl.iter().all(|p| q.contains(p)))
                .expect("simplex list is centrally symmetric");
            let assign: Vec<(usize, usize, C64)> = (0..4)
                .map(|j| (j, refl.iter().position(|p| *p == pos[b][j]).unwrap(), one()))
                .collect();
            self.involutions.push(map("j", a, b, 4, -1, vec![-1; 3], &assign, one()));
        }
    }
}

/// Derived octahedron parameters as functions of `λ₂, λ₄`.
pub fn octahedron_relations(l2: C64, l4: C64) -> [(&'static str, C64); 8] {
    [
        ("mu1", l4 / l2),
        ("mu2", l4),
        ("mu3", l4 * l4 / l2),
        ("t31", l2 * l2 / (l4 * l4)),
        ("t02", l4 * l4),
        ("t12", l4 * l4),
        ("t23", one() / (l4 * l4)),
        ("t13", l2 * l2 / (l4 * l4)),
    ]
}
