//! Face lattices and lattice volumes of small integral polytopes.

use alloc::vec;
use alloc::vec::Vec;

use super::exact;

/// A facet as the set of vertices it contains, with its inequality
/// `nᵀx ≤ c` valid on the whole polytope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    pub vertices: u64,
    pub normal: Vec<i64>,
    pub offset: i64,
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask >> i & 1 == 1)
}

pub(crate) fn affine_dim(verts: &[Vec<i64>], mask: u64) -> usize {
    let pts: Vec<&[i64]> = bits(mask).map(|i| verts[i].as_slice()).collect();
    if pts.len() <= 1 {
        return 0;
    }
    let rows: Vec<Vec<i64>> = pts[1..].iter().map(|p| p.iter().zip(pts[0]).map(|(a, b)| a - b).collect()).collect();
    exact::rank(&rows)
}

/// Facets of a full-dimensional polytope in `Z^k` given by its vertices.
pub fn facets(verts: &[Vec<i64>]) -> Vec<Facet> {
    let n = verts.len();
    let k = verts[0].len();
    assert!(n <= 64, "too many vertices");
    let mut out: Vec<Facet> = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        let mask: u64 = idx.iter().map(|&i| 1u64 << i).sum();
        if !out.iter().any(|f| f.vertices & mask == mask) {
            let pts: Vec<&[i64]> = idx.iter().map(|&i| verts[i].as_slice()).collect();
            if let Some((mut nrm, mut c)) = exact::hyperplane(&pts) {
                let side: Vec<i64> =
                    verts.iter().map(|v| v.iter().zip(&nrm).map(|(a, b)| a * b).sum::<i64>() - c).collect();
                let pos = side.iter().any(|&s| s > 0);
                let neg = side.iter().any(|&s| s < 0);
                if !(pos && neg) {
                    if pos {
                        nrm.iter_mut().for_each(|v| *v = -*v);
                        c = -c;
                    }
                    let on: u64 = side.iter().enumerate().filter(|(_, &s)| s == 0).map(|(i, _)| 1u64 << i).sum();
                    out.push(Facet { vertices: on, normal: nrm, offset: c });
                }
            }
        }
        // next k-subset in lexicographic order
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Faces by dimension: `levels[d]` holds the vertex sets of the `d`-faces,
/// for `0 ≤ d < dim`.
#[derive(Debug, Clone)]
pub struct FaceLattice {
    pub levels: Vec<Vec<u64>>,
}

impl FaceLattice {
    pub fn new(verts: &[Vec<i64>]) -> Self {
        let k = verts[0].len();
        let mut levels = vec![Vec::new(); k];
        if k == 0 {
            return FaceLattice { levels };
        }
        levels[k - 1] = facets(verts).into_iter().map(|f| f.vertices).collect();
        for d in (1..k).rev() {
            let mut next: Vec<u64> = Vec::new();
            let upper = &levels[d];
            for (i, &a) in upper.iter().enumerate() {
                for &b in &upper[i + 1..] {
                    let m = a & b;
                    if m != 0 && !next.contains(&m) && affine_dim(verts, m) == d - 1 {
                        next.push(m);
                    }
                }
            }
            next.sort_unstable();
            levels[d - 1] = next;
        }
        FaceLattice { levels }
    }

    pub fn f_vector(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len()).collect()
    }
}

/// Normalized volume (`k!` times Euclidean volume) of a full-dimensional
/// polytope, by a pulling triangulation.
pub fn normalized_volume(verts: &[Vec<i64>], lattice: &FaceLattice) -> u64 {
    let k = verts[0].len();
    let all: u64 = if verts.len() == 64 { u64::MAX } else { (1u64 << verts.len()) - 1 };
    let simplices = triangulate(lattice, all, k);
    simplices
        .iter()
        .map(|&s| {
            let pts: Vec<usize> = bits(s).collect();
            let rows: Vec<Vec<i64>> =
                pts[1..].iter().map(|&i| verts[i].iter().zip(&verts[pts[0]]).map(|(a, b)| a - b).collect()).collect();
            exact::det(&rows).unsigned_abs() as u64
        })
        .sum()
}

fn triangulate(lattice: &FaceLattice, face: u64, dim: usize) -> Vec<u64> {
    if dim == 0 {
        return vec![face];
    }
    let v0 = face & face.wrapping_neg();
    let mut out = Vec::new();
    for &f in &lattice.levels[dim - 1] {
        if f & face == f && f & v0 == 0 {
            for s in triangulate(lattice, f, dim - 1) {
                out.push(s | v0);
            }
        }
    }
    out
}
