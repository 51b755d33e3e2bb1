//! Limits of translated Riemann theta functions.
//!
//! For a period matrix whose first `n` diagonal entries are `i·t`, the
//! theta function translated by `−τ_jj/2` in those directions converges as
//! `t → ∞` to the standard semi-abelic theta function with `x_j = e(z_j)` and
//! `t_jk = e(τ_jk)`. The leading correction is of order `e^{−2πt}`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::models::{ComponentPoint, DegenerationModel, ModelError, ModelKind};
use crate::sample;
use crate::theta::{self, c64, e, ComplexVector, SiegelMatrix, ThetaError, ThetaValue, C64};

pub const T_MIN: f64 = 0.8;
pub const T_MAX: f64 = 6.0;
/// Residuals at or below this level count as converged.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LimitError {
    #[error("t = {0} is outside [{lo}, {hi}]", lo = T_MIN, hi = T_MAX)]
    TOutOfRange(f64),
    #[error("family and model disagree: {0}")]
    InconsistentFamily(String),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneratingFamily {
    pub g: usize,
    /// Number of degenerating directions; they come first.
    pub n: usize,
    /// `τ_jk` between degenerating directions, row-major `n×n`, diagonal unused.
    pub off_diag: Vec<C64>,
    /// Rows `b_j` coupling direction `j` to the base.
    pub b: Vec<ComplexVector>,
    pub base: Option<SiegelMatrix>,
}

impl DegeneratingFamily {
    /// Random family with bounded coupling, so that the period matrix stays
    /// in the Siegel space for all `t ≥ T_MIN`.
    pub fn random<R: Rng + ?Sized>(g: usize, n: usize, rng: &mut R) -> Result<Self, LimitError> {
        if n == 0 || n > g {
            return Err(LimitError::InconsistentFamily(format!("cannot degenerate {n} of {g} directions")));
        }
        let gb = g - n;
        let base = if gb > 0 { Some(sample::random_siegel(rng, gb)) } else { None };
        let mut off_diag = vec![c64(0.0, 0.0); n * n];
        for j in 0..n {
            for k in j + 1..n {
                let v = c64(rng.gen_range(-0.5..0.5), rng.gen_range(-0.1..0.1));
                off_diag[j * n + k] = v;
                off_diag[k * n + j] = v;
            }
        }
        let b = (0..n).map(|_| sample::random_vector(rng, gb, 0.1)).collect();
        let fam = DegeneratingFamily { g, n, off_diag, b, base };
        fam.matrix(T_MIN)?;
        Ok(fam)
    }

    /// Family matching a rank-one or standard model, with `τ_jk = log(t_jk)/2πi`.
    pub fn for_model(model: &DegenerationModel) -> Result<Self, LimitError> {
        let n = standard_rank(model)?;
        let mut off_diag = vec![c64(0.0, 0.0); n * n];
        for j in 0..n {
            for k in j + 1..n {
                let t = model.param(&format!("t{}{}", j + 1, k + 1));
                let v = t.ln() / c64(0.0, core::f64::consts::TAU);
                off_diag[j * n + k] = v;
                off_diag[k * n + j] = v;
            }
        }
        Ok(DegeneratingFamily { g: model.g, n, off_diag, b: model.shifts.clone(), base: model.base.tau.clone() })
    }

    /// The limit model: same base and shifts, `t_jk = e(τ_jk)`.
    pub fn model(&self) -> Result<DegenerationModel, LimitError> {
        let kind = if self.n == 1 { ModelKind::Rank1 } else { ModelKind::StandardRankN(self.n) };
        let mut params = BTreeMap::new();
        for j in 0..self.n {
            for k in j + 1..self.n {
                params.insert(format!("t{}{}", j + 1, k + 1), e(self.off_diag[j * self.n + k]));
            }
        }
        Ok(DegenerationModel::new(kind, self.g, self.base.clone(), self.b.clone(), params)?)
    }

    /// Period matrix at parameter `t`.
    pub fn matrix(&self, t: f64) -> Result<SiegelMatrix, LimitError> {
        if !(T_MIN..=T_MAX).contains(&t) {
            return Err(LimitError::TOutOfRange(t));
        }
        let g = self.g;
        let n = self.n;
        let mut m = vec![c64(0.0, 0.0); g * g];
        for j in 0..n {
            for k in 0..n {
                m[j * g + k] = if j == k { c64(0.0, t) } else { self.off_diag[j * n + k] };
            }
            for (i, v) in self.b[j].iter().enumerate() {
                m[j * g + n + i] = *v;
                m[(n + i) * g + j] = *v;
            }
        }
        if let Some(base) = &self.base {
            for i in 0..g - n {
                for k in 0..g - n {
                    m[(n + i) * g + n + k] = base.get(i, k);
                }
            }
        }
        Ok(SiegelMatrix::new(g, &m)?)
    }
}

fn standard_rank(model: &DegenerationModel) -> Result<usize, LimitError> {
    match model.kind {
        ModelKind::Rank1 => Ok(1),
        ModelKind::StandardRankN(n) => Ok(n),
        k => Err(LimitError::InconsistentFamily(format!("{} is not a standard degeneration", k.name()))),
    }
}

/// `θ(τ(t), (z_j − i t/2, z'))`.
pub fn translated_theta(
    fam: &DegeneratingFamily,
    t: f64,
    z1: &[C64],
    zprime: &[C64],
    tol: f64,
) -> Result<ThetaValue, LimitError> {
    let tau = fam.matrix(t)?;
    let mut z: ComplexVector = z1.iter().map(|v| v - c64(0.0, t / 2.0)).collect();
    z.extend_from_slice(zprime);
    Ok(theta::theta(&tau, &z, tol)?)
}

/// Sample `(z1, z')` with `|e(z_j)| = 1` and `z'` in the fundamental domain.
pub fn sample_points<R: Rng + ?Sized>(
    fam: &DegeneratingFamily,
    count: usize,
    rng: &mut R,
) -> Vec<(ComplexVector, ComplexVector)> {
    (0..count)
        .map(|_| {
            let z1 = (0..fam.n).map(|_| c64(rng.gen_range(0.0..1.0), 0.0)).collect();
            let zp = match &fam.base {
                Some(b) => sample::random_in_fundamental_domain(rng, b),
                None => Vec::new(),
            };
            (z1, zp)
        })
        .collect()
}

fn check_consistent(fam: &DegeneratingFamily, model: &DegenerationModel) -> Result<(), LimitError> {
    let bad = |what: &str| Err(LimitError::InconsistentFamily(what.into()));
    if standard_rank(model)? != fam.n || model.g != fam.g {
        return bad("rank or genus");
    }
    if model.base.tau != fam.base {
        return bad("base period matrix");
    }
    let close = |a: C64, b: C64| (a - b).norm() <= 1e-12 * (1.0 + a.norm());
    if model.shifts.len() != fam.b.len()
        || model.shifts.iter().zip(&fam.b).any(|(s, b)| s.len() != b.len() || s.iter().zip(b).any(|(x, y)| !close(*x, *y)))
    {
        return bad("shifts");
    }
    for j in 0..fam.n {
        for k in j + 1..fam.n {
            if !close(model.param(&format!("t{}{}", j + 1, k + 1)), e(fam.off_diag[j * fam.n + k])) {
                return bad("t_jk differs from e(tau_jk)");
            }
        }
    }
    Ok(())
}

/// For each `t`, the largest `|translated θ − T|` over the sample points.
pub fn limit_residual(
    fam: &DegeneratingFamily,
    model: &DegenerationModel,
    t_grid: &[f64],
    points: &[(ComplexVector, ComplexVector)],
    tol: f64,
) -> Result<Vec<(f64, f64)>, LimitError> {
    check_consistent(fam, model)?;
    let mut limit = Vec::with_capacity(points.len());
    for (z1, zp) in points {
        let mut fiber = Vec::with_capacity(2 * fam.n);
        for v in z1 {
            fiber.push(c64(1.0, 0.0));
            fiber.push(e(*v));
        }
        let p = ComponentPoint { component: 0, z: zp.clone(), fiber };
        limit.push(model.eval_theta_component(&p, tol)?.value);
    }
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut worst: f64 = 0.0;
        for ((z1, zp), l) in points.iter().zip(&limit) {
            let v = translated_theta(fam, t, z1, zp, tol)?;
            worst = worst.max((v.value - l).norm());
        }
        out.push((t, worst));
    }
    Ok(out)
}

/// Decay rate `−d log(residual)/dt` by least squares over entries above the floor.
pub fn fitted_exponent(table: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        table.iter().filter(|(_, r)| *r > RESIDUAL_FLOOR).map(|&(t, r)| (t, libm::log(r))).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    Some(-sxy / sxx)
}

/// Non-increasing after the first entry, entries at the floor excepted.
pub fn is_monotone(table: &[(f64, f64)]) -> bool {
    table.windows(2).skip(1).all(|w| w[1].1 <= w[0].1 || w[1].1 <= RESIDUAL_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(g: usize, n: usize, seed: u64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fam = DegeneratingFamily::random(g, n, &mut rng).unwrap();
        let model = fam.model().unwrap();
        let pts = sample_points(&fam, 8, &mut rng);
        limit_residual(&fam, &model, &[1.0, 2.0, 3.0, 4.0, 5.0], &pts, 1e-14).unwrap()
    }

    #[test]
    fn rank_one_decay() {
        let table = run(2, 1, 1);
        std::println!("{table:?}");
        assert!(is_monotone(&table));
        let rate = fitted_exponent(&table).unwrap();
        let tau = core::f64::consts::TAU;
        assert!(rate >= tau / 3.0 && rate <= 3.0 * tau, "rate {rate}");
        assert!(table.last().unwrap().1 <= 1e-7);
    }

    #[test]
    fn rank_two_decay() {
        let table = run(3, 2, 2);
        std::println!("{table:?}");
        assert!(is_monotone(&table));
        let rate = fitted_exponent(&table).unwrap();
        let tau = core::f64::consts::TAU;
        assert!(rate >= tau / 3.0 && rate <= 3.0 * tau, "rate {rate}");
        assert!(table.last().unwrap().1 <= 1e-7);
    }

    #[test]
    fn model_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fam = DegeneratingFamily::random(4, 3, &mut rng).unwrap();
        let model = fam.model().unwrap();
        let back = DegeneratingFamily::for_model(&model).unwrap();
        for (a, b) in fam.off_diag.iter().zip(&back.off_diag) {
            assert!((e(*a) - e(*b)).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_small_t_and_mismatched_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fam = DegeneratingFamily::random(2, 1, &mut rng).unwrap();
        assert_eq!(fam.matrix(0.5), Err(LimitError::TOutOfRange(0.5)));
        let pts = sample_points(&fam, 2, &mut rng);
        let other = DegeneratingFamily::random(2, 1, &mut rng).unwrap().model().unwrap();
        assert!(matches!(
            limit_residual(&fam, &other, &[1.0], &pts, 1e-12),
            Err(LimitError::InconsistentFamily(_))
        ));
    }

    #[test]
    fn zero_fiber_phase_is_two_term_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let fam = DegeneratingFamily::random(2, 1, &mut rng).unwrap();
        let base = fam.base.clone().unwrap();
        let zp = sample::random_in_fundamental_domain(&mut rng, &base);
        let v = translated_theta(&fam, 6.0, &[c64(0.0, 0.0)], &zp, 1e-14).unwrap().value;
        let shifted: Vec<C64> = zp.iter().zip(&fam.b[0]).map(|(a, b)| a + b).collect();
        let two = theta::theta(&base, &zp, 1e-14).unwrap().value + theta::theta(&base, &shifted, 1e-14).unwrap().value;
        assert!((v - two).norm() < 1e-13);
    }
}
