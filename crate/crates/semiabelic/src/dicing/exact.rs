//! Exact integer linear algebra by fraction-free elimination.

use alloc::vec::Vec;

/// Rank of an integer matrix given by rows.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, p);
        for i in r + 1..m.len() {
            if m[i][c] != 0 {
                let (a, b) = (m[r][c], m[i][c]);
                for j in c..ncols {
                    m[i][j] = m[i][j] * a - m[r][j] * b;
                }
                let g = m[i].iter().fold(0i128, |g, &v| gcd(g, v));
                if g > 1 {
                    for v in m[i].iter_mut() {
                        *v /= g;
                    }
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Determinant of a square integer matrix (Bareiss).
pub fn det(a: &[Vec<i64>]) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| m[i][k] != 0) else { return 0 };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Hyperplane `nᵀx = c` through `k` points of `Z^k`, with `n` primitive.
/// `None` when the points are affinely dependent.
pub fn hyperplane(points: &[&[i64]]) -> Option<(Vec<i64>, i64)> {
    let k = points[0].len();
    let diffs: Vec<Vec<i64>> = points[1..].iter().map(|p| p.iter().zip(points[0]).map(|(a, b)| a - b).collect()).collect();
    let mut n: Vec<i128> = Vec::with_capacity(k);
    for j in 0..k {
        let minor: Vec<Vec<i64>> = diffs.iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, &v)| v).collect()).collect();
        let d = det(&minor);
        n.push(if j % 2 == 0 { d } else { -d });
    }
    let g = n.iter().fold(0i128, |g, &v| gcd(g, v));
    if g == 0 {
        return None;
    }
    let n: Vec<i64> = n.iter().map(|&v| i64::try_from(v / g).expect("normal fits in i64")).collect();
    let c = n.iter().zip(points[0]).map(|(a, b)| a * b).sum();
    Some((n, c))
}

pub(crate) fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rank_and_det_small() {
        assert_eq!(rank(&[vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]]), 2);
        assert_eq!(det(&[vec![2, 1], vec![1, 3]]), 5);
        assert_eq!(det(&[vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]), -1);
        assert_eq!(det(&[vec![1, 2], vec![2, 4]]), 0);
        let (n, c) = hyperplane(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]).unwrap();
        assert_eq!((n, c), (vec![1, 1, 1], 1));
        assert!(hyperplane(&[&[0, 0], &[0, 0]]).is_none());
    }
}
