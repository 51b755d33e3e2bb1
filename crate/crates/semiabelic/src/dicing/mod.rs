//! Periodic Delaunay dicings of `R^k` for cones of quadratic forms.
//!
//! Lattice points `v` are lifted to `(v, vᵀQv)` and the lower hull is
//! walked cell by cell: a cell is the zero set of `h = vᵀQv − a(v)` for an
//! affine `a` with `h ≥ 0` on the lattice, and the neighbor across a facet
//! `ℓ = 0` is found by tilting `a` to `a + sℓ` until a new point is hit.
//! Everything is exact over the rationals.

pub mod exact;
mod parse;
pub mod polytope;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_rational::Ratio;
use num_traits::{One, Zero};

pub use parse::{parse_forms, ParseError};
use polytope::FaceLattice;

type Q = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticForm {
    pub k: usize,
    /// Symmetric integer matrix.
    pub matrix: Vec<Vec<i64>>,
}

impl QuadraticForm {
    pub fn eval(&self, v: &[i64]) -> i64 {
        (0..self.k).map(|i| (0..self.k).map(|j| v[i] * self.matrix[i][j] * v[j]).sum::<i64>()).sum()
    }

    fn padded(&self, k: usize) -> QuadraticForm {
        let mut m = vec![vec![0; k]; k];
        for i in 0..self.k {
            for j in 0..self.k {
                m[i][j] = self.matrix[i][j];
            }
        }
        QuadraticForm { k, matrix: m }
    }

    /// Sylvester's criterion on the leading minors.
    pub fn is_positive_definite(&self) -> bool {
        (1..=self.k).all(|n| {
            let minor: Vec<Vec<i64>> = self.matrix[..n].iter().map(|r| r[..n].to_vec()).collect();
            exact::det(&minor) > 0
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    /// Sorted, translated so that the coordinatewise minimum is the origin.
    pub vertices: Vec<Vec<i64>>,
    pub dim: usize,
}

impl Cell {
    fn canonical(mut vertices: Vec<Vec<i64>>) -> Cell {
        let k = vertices[0].len();
        let min: Vec<i64> = (0..k).map(|i| vertices.iter().map(|v| v[i]).min().unwrap()).collect();
        for v in vertices.iter_mut() {
            for i in 0..k {
                v[i] -= min[i];
            }
        }
        vertices.sort();
        let dim = polytope::affine_dim(&vertices, (1u64 << vertices.len()) - 1);
        Cell { vertices, dim }
    }

    /// Image under `x ↦ −x`, again in canonical position.
    pub fn negated(&self) -> Cell {
        Cell::canonical(self.vertices.iter().map(|v| v.iter().map(|x| -x).collect()).collect())
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        polytope::facets(&self.vertices).iter().all(|f| {
            let s: Q = f.normal.iter().zip(x).map(|(n, v)| v * Q::from_integer(*n as i128)).sum();
            s <= Q::from_integer(f.offset as i128)
        })
    }

    pub fn strictly_contains(&self, x: &[Q]) -> bool {
        polytope::facets(&self.vertices).iter().all(|f| {
            let s: Q = f.normal.iter().zip(x).map(|(n, v)| v * Q::from_integer(*n as i128)).sum();
            s < Q::from_integer(f.offset as i128)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dicing {
    /// One representative per `Z^k`-orbit of cells.
    pub cells: Vec<Cell>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DicingError {
    #[error("the sum of the forms is not positive definite")]
    NotPositiveDefinite,
    #[error("lattice window too small to certify the cells")]
    WindowInsufficient,
    #[error("forms have dimension {got}, more than k = {k}")]
    DimensionMismatch { k: usize, got: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

struct Lifted<'a> {
    q: &'a QuadraticForm,
    window: Vec<Vec<i64>>,
    lo: i64,
    hi: i64,
    /// `Q⁻¹` for the ellipsoid test.
    qinv: Vec<Vec<Q>>,
}

/// Affine function `αᵀx + β`.
#[derive(Debug, Clone)]
struct Affine {
    alpha: Vec<Q>,
    beta: Q,
}

impl Affine {
    fn at(&self, v: &[i64]) -> Q {
        self.alpha.iter().zip(v).map(|(a, &x)| a * Q::from_integer(x as i128)).sum::<Q>() + self.beta
    }
}

fn qi(x: i64) -> Q {
    Q::from_integer(x as i128)
}

fn inverse(m: &[Vec<i64>]) -> Vec<Vec<Q>> {
    let k = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<Q> = r.iter().map(|&v| qi(v)).collect();
            row.extend((0..k).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    for c in 0..k {
        let p = (c..k).find(|&r| !a[r][c].is_zero()).expect("invertible");
        a.swap(c, p);
        let piv = a[c][c];
        for v in a[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..k {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c];
                for j in 0..2 * k {
                    let t = a[c][j] * f;
                    a[r][j] -= t;
                }
            }
        }
    }
    a.into_iter().map(|r| r[k..].to_vec()).collect()
}

impl Lifted<'_> {
    fn lift(&self, v: &[i64]) -> Q {
        qi(self.q.eval(v))
    }

    fn zero_set(&self, a: &Affine) -> Vec<Vec<i64>> {
        self.window.iter().filter(|v| self.lift(v) == a.at(v)).cloned().collect()
    }

    /// `a + sℓ` with the largest `s` keeping the lift above it, where
    /// `ℓ(x) = nᵀx − c` and only points with `ℓ > 0` constrain `s`.
    fn tilt(&self, a: &Affine, n: &[i64], c: i64) -> Option<Affine> {
        let mut best: Option<Q> = None;
        for v in &self.window {
            let l = n.iter().zip(v).map(|(x, y)| x * y).sum::<i64>() - c;
            if l > 0 {
                let s = (self.lift(v) - a.at(v)) / qi(l);
                if best.is_none_or(|b| s < b) {
                    best = Some(s);
                }
            }
        }
        let s = best?;
        Some(Affine {
            alpha: a.alpha.iter().zip(n).map(|(x, &y)| x + s * qi(y)).collect(),
            beta: a.beta - s * qi(c),
        })
    }

    /// True when every lattice point with `h ≤ 0` lies inside the window, so
    /// that the zero set seen in the window is the whole cell.
    fn certified(&self, a: &Affine) -> bool {
        let k = self.q.k;
        let two = qi(2);
        let c: Vec<Q> = (0..k).map(|i| (0..k).map(|j| self.qinv[i][j] * a.alpha[j]).sum::<Q>() / two).collect();
        let qc: Q = (0..k).map(|i| (0..k).map(|j| c[i] * qi(self.q.matrix[i][j]) * c[j]).sum::<Q>()).sum();
        let r2 = qc + a.beta;
        (0..k).all(|i| {
            let bound = r2 * self.qinv[i][i];
            let below = qi(self.lo - 1) - c[i];
            let above = qi(self.hi + 1) - c[i];
            (c[i] >= qi(self.lo - 1) && c[i] <= qi(self.hi + 1)) && below * below > bound && above * above > bound
        })
    }

    /// The cell through the origin found by tilting the tangent plane there.
    fn start(&self) -> Option<Affine> {
        let k = self.q.k;
        let mut a = Affine { alpha: vec![Q::zero(); k], beta: Q::zero() };
        loop {
            let face = self.zero_set(&a);
            let basis: Vec<Vec<i64>> = face.iter().filter(|v| v.iter().any(|&x| x != 0)).cloned().collect();
            let d = exact::rank(&basis);
            if d == k {
                return Some(a);
            }
            let n = orthogonal_vector(&basis, k);
            a = self.tilt(&a, &n, 0)?;
        }
    }
}

/// A nonzero integer vector orthogonal to the rows, which span less than `k`.
fn orthogonal_vector(rows: &[Vec<i64>], k: usize) -> Vec<i64> {
    let mut basis: Vec<Vec<i64>> = Vec::new();
    for r in rows {
        let mut t = basis.clone();
        t.push(r.clone());
        if exact::rank(&t) > basis.len() {
            basis = t;
        }
    }
    for i in 0..k {
        if basis.len() == k - 1 {
            break;
        }
        let mut t = basis.clone();
        t.push((0..k).map(|j| (i == j) as i64).collect());
        if exact::rank(&t) > basis.len() {
            basis = t;
        }
    }
    let mut pts: Vec<Vec<i64>> = vec![vec![0; k]];
    pts.extend(basis);
    let refs: Vec<&[i64]> = pts.iter().map(|p| p.as_slice()).collect();
    exact::hyperplane(&refs).expect("independent").0
}

fn window(k: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for x in lo..=hi {
                let mut q: Vec<i64> = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn dice_in_window(q: &QuadraticForm, lo: i64, hi: i64) -> Option<Vec<Cell>> {
    let lifted = Lifted { q, window: window(q.k, lo, hi), lo, hi, qinv: inverse(&q.matrix) };
    let a0 = lifted.start()?;
    if !lifted.certified(&a0) {
        return None;
    }
    let mut seen: BTreeSet<Cell> = BTreeSet::new();
    let mut queue = vec![Cell::canonical(lifted.zero_set(&a0))];
    seen.insert(queue[0].clone());
    while let Some(cell) = queue.pop() {
        // the affine function of a canonical cell is recovered by re-tilting
        // from its own vertices
        let a = affine_through(&lifted, &cell.vertices);
        for f in polytope::facets(&cell.vertices) {
            let n: Vec<i64> = f.normal.clone();
            let next = lifted.tilt(&a, &n, f.offset)?;
            if !lifted.certified(&next) {
                return None;
            }
            let c = Cell::canonical(lifted.zero_set(&next));
            if seen.insert(c.clone()) {
                queue.push(c);
            }
        }
    }
    Some(seen.into_iter().collect())
}

/// The affine function agreeing with the lift on a full-dimensional cell.
fn affine_through(l: &Lifted, verts: &[Vec<i64>]) -> Affine {
    let k = l.q.k;
    let mut chosen: Vec<&Vec<i64>> = vec![&verts[0]];
    for v in &verts[1..] {
        let mut rows: Vec<Vec<i64>> = chosen[1..].iter().map(|p| diff(p, chosen[0])).collect();
        rows.push(diff(v, chosen[0]));
        if exact::rank(&rows) == rows.len() {
            chosen.push(v);
        }
        if chosen.len() == k + 1 {
            break;
        }
    }
    // solve αᵀ(p_i − p_0) = lift(p_i) − lift(p_0)
    let m: Vec<Vec<i64>> = chosen[1..].iter().map(|p| diff(p, chosen[0])).collect();
    let inv = inverse(&m);
    let rhs: Vec<Q> = chosen[1..].iter().map(|p| l.lift(p) - l.lift(chosen[0])).collect();
    let alpha: Vec<Q> = (0..k).map(|i| (0..k).map(|j| inv[i][j] * rhs[j]).sum()).collect();
    let beta = l.lift(chosen[0]) - alpha.iter().zip(chosen[0].iter()).map(|(a, &x)| a * qi(x)).sum::<Q>();
    Affine { alpha, beta }
}

fn diff(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Sum of the forms, each padded to dimension `k`.
pub fn interior_form(forms: &[QuadraticForm], k: usize) -> Result<QuadraticForm, DicingError> {
    let mut q = QuadraticForm { k, matrix: vec![vec![0; k]; k] };
    for f in forms {
        if f.k > k {
            return Err(DicingError::DimensionMismatch { k, got: f.k });
        }
        let p = f.padded(k);
        for i in 0..k {
            for j in 0..k {
                q.matrix[i][j] += p.matrix[i][j];
            }
        }
    }
    Ok(q)
}

/// Delaunay dicing for the interior point `Σ forms` of the cone.
pub fn delaunay_dicing(forms: &[QuadraticForm], k: usize) -> Result<Dicing, DicingError> {
    let q = interior_form(forms, k)?;
    if k == 0 || !q.is_positive_definite() {
        return Err(DicingError::NotPositiveDefinite);
    }
    let cells = dice_in_window(&q, -2, 3)
        .or_else(|| dice_in_window(&q, -3, 4))
        .ok_or(DicingError::WindowInsufficient)?;
    Ok(Dicing { cells, k })
}

impl Dicing {
    /// `Σ normalized volume` over the representatives; equals `k!`.
    pub fn total_volume(&self) -> u64 {
        self.cells.iter().map(|c| classify_cell(c).volume()).sum()
    }

    pub fn is_centrally_symmetric(&self) -> bool {
        self.cells.iter().all(|c| self.cells.contains(&c.negated()))
    }

    /// Translates `(representative, shift)` whose interior contains `x`.
    pub fn cells_containing(&self, x: &[Q]) -> Vec<(usize, Vec<i64>)> {
        let k = self.k;
        let mut out = Vec::new();
        for (ci, c) in self.cells.iter().enumerate() {
            let span = c.vertices.iter().flatten().copied().max().unwrap_or(0);
            let fl: Vec<i64> = x.iter().map(|v| v.floor().to_integer() as i64).collect();
            for off in window(k, -span, 0) {
                let shift: Vec<i64> = fl.iter().zip(&off).map(|(a, b)| a + b).collect();
                let local: Vec<Q> = x.iter().zip(&shift).map(|(v, &t)| v - qi(t)).collect();
                if c.strictly_contains(&local) {
                    out.push((ci, shift));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ToricType {
    /// `P^d`, from a unimodular simplex.
    Projective(usize),
    /// `(P¹)^d`, from a cube.
    P1Power(usize),
    /// `P¹ × P²`, from a prism.
    P1xP2,
    /// Cone over a smooth quadric surface, from a square pyramid.
    F4,
    /// `F(2,2) ⊂ P⁵`, from an octahedron.
    F22,
    /// `(P¹)² × P²`, from a square times a triangle.
    P1SquaredxP2,
    /// `P¹ × F(2,2)`, from an octahedron times an interval.
    P1xF22,
    /// `P¹ × P³`, from a tetrahedron times an interval.
    P1xP3,
    /// From the 4-cube with two opposite corner simplices cut off.
    X,
    Other { dim: usize, f_vector: Vec<usize>, volume: u64 },
}

impl ToricType {
    pub fn label(&self) -> String {
        match self {
            ToricType::Projective(d) => format!("P{d}"),
            ToricType::P1Power(d) => format!("(P1)^{d}"),
            ToricType::P1xP2 => "P1xP2".to_string(),
            ToricType::F4 => "F4".to_string(),
            ToricType::F22 => "F(2,2)".to_string(),
            ToricType::P1SquaredxP2 => "(P1)^2xP2".to_string(),
            ToricType::P1xF22 => "P1xF(2,2)".to_string(),
            ToricType::P1xP3 => "P1xP3".to_string(),
            ToricType::X => "X".to_string(),
            ToricType::Other { dim, f_vector, volume } => format!("Other(dim={dim},f={f_vector:?},vol={volume})"),
        }
    }

    /// Name of the polytope, with a plural form.
    pub fn polytope_name(&self) -> (String, String) {
        let pair = |a: &str, b: &str| (a.to_string(), b.to_string());
        match self {
            ToricType::Projective(1) | ToricType::P1Power(1) => pair("interval", "intervals"),
            ToricType::Projective(2) => pair("triangle", "triangles"),
            ToricType::Projective(3) => pair("tetrahedron", "tetrahedra"),
            ToricType::Projective(d) => (format!("{d}-simplex"), format!("{d}-simplices")),
            ToricType::P1Power(2) => pair("square", "squares"),
            ToricType::P1Power(3) => pair("cube", "cubes"),
            ToricType::P1Power(d) => (format!("{d}-cube"), format!("{d}-cubes")),
            ToricType::P1xP2 => pair("prism", "prisms"),
            ToricType::F4 => pair("pyramid", "pyramids"),
            ToricType::F22 => pair("octahedron", "octahedra"),
            ToricType::P1SquaredxP2 => pair("square x triangle", "square x triangles"),
            ToricType::P1xF22 => pair("interval x octahedron", "interval x octahedra"),
            ToricType::P1xP3 => pair("interval x tetrahedron", "interval x tetrahedra"),
            ToricType::X => pair("truncated 4-cube", "truncated 4-cubes"),
            ToricType::Other { .. } => pair("polytope", "polytopes"),
        }
    }

    pub fn volume(&self) -> u64 {
        match self {
            ToricType::Projective(_) => 1,
            ToricType::P1Power(d) => (1..=*d as u64).product(),
            ToricType::P1xP2 => 3,
            ToricType::F4 => 2,
            ToricType::F22 => 4,
            ToricType::P1SquaredxP2 => 12,
            ToricType::P1xF22 => 16,
            ToricType::P1xP3 => 4,
            ToricType::X => 22,
            ToricType::Other { volume, .. } => *volume,
        }
    }
}

/// Number of vertices of the 4-cube with two opposite unimodular corners cut off.
pub const X_VERTICES: usize = 14;

/// Toric type from dimension, f-vector and normalized volume.
pub fn classify_cell(cell: &Cell) -> ToricType {
    let verts = project_to_span(&cell.vertices, cell.dim);
    let d = cell.dim;
    if d == 0 {
        return ToricType::Projective(0);
    }
    let lattice = FaceLattice::new(&verts);
    let f = lattice.f_vector();
    let vol = polytope::normalized_volume(&verts, &lattice);
    let cube: Vec<usize> = (0..d).map(|j| binom(d, j) << (d - j)).collect();
    match (d, f.as_slice(), vol) {
        (1, [2], 1) => ToricType::Projective(1),
        (_, _, 1) if f[0] == d + 1 => ToricType::Projective(d),
        (_, _, v) if f == cube && v == (1..=d as u64).product::<u64>() => ToricType::P1Power(d),
        (3, [6, 9, 5], 3) => ToricType::P1xP2,
        (3, [5, 8, 5], 2) => ToricType::F4,
        (3, [6, 12, 8], 4) => ToricType::F22,
        (4, [12, 24, 19, 7], 12) => ToricType::P1SquaredxP2,
        (4, [12, 30, 28, 10], 16) => ToricType::P1xF22,
        (4, [8, 16, 14, 6], 4) => ToricType::P1xP3,
        (4, [n, ..], 22) if *n == X_VERTICES => ToricType::X,
        _ => ToricType::Other { dim: d, f_vector: f, volume: vol },
    }
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Coordinates of a `d`-dimensional cell on `d` coordinate axes along which
/// it projects injectively.
fn project_to_span(verts: &[Vec<i64>], d: usize) -> Vec<Vec<i64>> {
    let k = verts[0].len();
    if d == k {
        return verts.to_vec();
    }
    let rows: Vec<Vec<i64>> = verts[1..].iter().map(|v| diff(v, &verts[0])).collect();
    let mut cols: Vec<usize> = Vec::new();
    for c in 0..k {
        let mut t = cols.clone();
        t.push(c);
        let sub: Vec<Vec<i64>> = rows.iter().map(|r| t.iter().map(|&i| r[i]).collect()).collect();
        if exact::rank(&sub) == t.len() {
            cols = t;
        }
    }
    verts.iter().map(|v| cols.iter().map(|&i| v[i]).collect()).collect()
}

/// One row of the stratum table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratumRow {
    pub k: usize,
    pub forms: String,
    pub codim: usize,
    /// Cell types with their counts, largest volume first.
    pub cells: Vec<(ToricType, usize)>,
}

impl StratumRow {
    pub fn polytope_summary(&self) -> String {
        let parts: Vec<String> = self
            .cells
            .iter()
            .map(|(t, n)| {
                let (one, many) = t.polytope_name();
                if *n == 1 {
                    format!("1 {one}")
                } else {
                    format!("{n} {many}")
                }
            })
            .collect();
        parts.join(" + ")
    }

    pub fn toric_summary(&self) -> String {
        let parts: Vec<String> = self
            .cells
            .iter()
            .map(|(t, n)| if *n == 1 { t.label() } else { format!("{n}{}", t.label()) })
            .collect();
        parts.join(" ⊔ ")
    }
}

/// Cones of the table, one generator list per row.
pub const TABLE_CONES: [&str; 14] = [
    "x1^2",
    "x1^2,x2^2",
    "x1^2,x2^2,(x1-x2)^2",
    "x1^2,x2^2,x3^2",
    "x1^2,x2^2,(x1-x2)^2,x3^2",
    "x1^2,x2^2,(x1-x3)^2,(x2-x3)^2",
    "x1^2,x2^2,x3^2,(x1-x3)^2,(x2-x3)^2",
    "x1^2,x2^2,x3^2,(x1-x2)^2,(x1-x3)^2,(x2-x3)^2",
    "x1^2,x2^2,x3^2,x4^2",
    "x1^2,x2^2,(x1-x2)^2,x3^2,x4^2",
    "x1^2,x2^2,(x1-x3)^2,(x2-x3)^2,x4^2",
    "x1^2,x2^2,(x1-x4)^2,(x2-x3)^2,(x3-x4)^2",
    "x1^2,x2^2,x3^2,x4^2,(x1-x2)^2,(x1-x3)^2,(x1-x4)^2,(x2-x3)^2,(x2-x4)^2,(x3-x4)^2",
    "x1^2,x2^2,x3^2,x4^2,x5^2",
];

pub fn stratum_row(cone: &str) -> Result<StratumRow, DicingError> {
    let forms = parse_forms(cone)?;
    let k = forms.iter().map(|f| f.k).max().unwrap_or(0);
    let dicing = delaunay_dicing(&forms, k)?;
    let mut counts: Vec<(ToricType, usize)> = Vec::new();
    for c in &dicing.cells {
        let t = classify_cell(c);
        match counts.iter_mut().find(|(u, _)| *u == t) {
            Some((_, n)) => *n += 1,
            None => counts.push((t, 1)),
        }
    }
    counts.sort_by(|a, b| b.0.volume().cmp(&a.0.volume()).then(a.0.cmp(&b.0)));
    Ok(StratumRow { k, forms: cone.to_string(), codim: forms.len(), cells: counts })
}

pub fn stratum_table() -> Result<Vec<StratumRow>, DicingError> {
    TABLE_CONES.iter().map(|s| stratum_row(s)).collect()
}

/// Exact rational point from integer numerators over a common denominator.
pub fn rational_point(num: &[i64], den: i64) -> Vec<Ratio<i128>> {
    num.iter().map(|&n| Ratio::new(n as i128, den as i128)).collect()
}
