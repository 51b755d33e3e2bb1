//! Riemann theta functions with half-integer characteristics.
//!
//! Normalization: `θ(τ, z) = Σ_n e(nᵀτn/2 + nᵀz)` with `e(x) = exp(2πi x)`.
//! Series are summed over a Euclidean ball centred at the saddle point of
//! the Gaussian factor, and the dropped tail is bounded rigorously.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::linalg;

pub type C64 = Complex64;
pub type ComplexVector = Vec<C64>;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_RADIUS_CAP: f64 = 40.0;
/// Smallest admissible eigenvalue of `Im τ`.
pub const MIN_EIGENVALUE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThetaError {
    #[error("imaginary part of tau is not positive definite (smallest eigenvalue {0:e})")]
    NonPositiveDefinite(f64),
    #[error("truncation radius exceeded the cap {cap}")]
    RadiusOverflow { cap: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("characteristic is even")]
    EvenCharacteristic,
    #[error("tolerance must be positive and finite")]
    InvalidTolerance,
}

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e(x) = exp(2πi x)`.
#[inline]
pub fn e(x: C64) -> C64 {
    (C64::new(0.0, 2.0 * PI) * x).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiegelMatrix {
    g: usize,
    entries: Vec<C64>,
    lambda_min: f64,
    im_chol: Vec<f64>,
}

impl SiegelMatrix {
    /// Builds a point of the Siegel upper half space from row-major entries.
    /// The matrix is symmetrized as `(A + Aᵀ)/2`.
    pub fn new(g: usize, entries: &[C64]) -> Result<Self, ThetaError> {
        if g == 0 || entries.len() != g * g {
            return Err(ThetaError::DimensionMismatch { expected: g * g, got: entries.len() });
        }
        let mut sym = vec![C64::new(0.0, 0.0); g * g];
        for i in 0..g {
            for j in 0..g {
                sym[i * g + j] = (entries[i * g + j] + entries[j * g + i]) * 0.5;
            }
        }
        let im: Vec<f64> = sym.iter().map(|c| c.im).collect();
        let lambda_min = linalg::sym_eigenvalues(&im, g)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if !(lambda_min >= MIN_EIGENVALUE) {
            return Err(ThetaError::NonPositiveDefinite(lambda_min));
        }
        let im_chol = linalg::cholesky(&im, g).ok_or(ThetaError::NonPositiveDefinite(lambda_min))?;
        Ok(SiegelMatrix { g, entries: sym, lambda_min, im_chol })
    }

    pub fn diagonal(diag: &[C64]) -> Result<Self, ThetaError> {
        let g = diag.len();
        let mut m = vec![C64::new(0.0, 0.0); g * g];
        for (i, d) in diag.iter().enumerate() {
            m[i * g + i] = *d;
        }
        Self::new(g, &m)
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.g + j]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// `τ v` for a complex vector.
    pub fn mul_vec(&self, v: &[C64]) -> ComplexVector {
        (0..self.g)
            .map(|i| (0..self.g).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `τ n` for an integer or half-integer real vector.
    pub fn mul_real(&self, v: &[f64]) -> ComplexVector {
        (0..self.g)
            .map(|i| (0..self.g).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Solves `(Im τ) x = y`.
    pub fn im_solve(&self, y: &[f64]) -> Vec<f64> {
        linalg::cholesky_solve(&self.im_chol, self.g, y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Characteristic {
    pub eps: Vec<u8>,
    pub delta: Vec<u8>,
}

impl Characteristic {
    pub fn new(eps: Vec<u8>, delta: Vec<u8>) -> Self {
        assert_eq!(eps.len(), delta.len());
        Characteristic {
            eps: eps.into_iter().map(|b| b & 1).collect(),
            delta: delta.into_iter().map(|b| b & 1).collect(),
        }
    }

    pub fn zero(g: usize) -> Self {
        Characteristic { eps: vec![0; g], delta: vec![0; g] }
    }

    pub fn g(&self) -> usize {
        self.eps.len()
    }

    /// `εᵀδ mod 2`.
    pub fn parity(&self) -> u8 {
        self.eps.iter().zip(&self.delta).map(|(a, b)| a & b).fold(0, |a, b| a ^ b)
    }

    pub fn is_odd(&self) -> bool {
        self.parity() == 1
    }

    pub fn eps_f64(&self) -> Vec<f64> {
        self.eps.iter().map(|&b| b as f64).collect()
    }

    pub fn delta_f64(&self) -> Vec<f64> {
        self.delta.iter().map(|&b| b as f64).collect()
    }

    /// The two-torsion point `m = (τε + δ)/2`.
    pub fn point(&self, tau: &SiegelMatrix) -> ComplexVector {
        let te = tau.mul_real(&self.eps_f64());
        te.iter()
            .zip(&self.delta)
            .map(|(a, &d)| (a + C64::new(d as f64, 0.0)) * 0.5)
            .collect()
    }

    /// `e(−εᵀτε/8 − εᵀδ/4)`, the factor relating `θ(m + a)` to `θ[ε,δ](a)`
    /// when combined with `e(−εᵀa/2)`.
    pub fn shift_factor(&self, tau: &SiegelMatrix) -> C64 {
        let ef = self.eps_f64();
        let te = tau.mul_real(&ef);
        let ete: C64 = ef.iter().zip(&te).map(|(a, b)| b * *a).sum();
        let ed = self.eps.iter().zip(&self.delta).map(|(a, b)| (a * b) as f64).sum::<f64>();
        e(-ete / 8.0 - C64::new(ed / 4.0, 0.0))
    }

    /// Stable ordering key: eps bits then delta bits, read as a binary number.
    pub fn index(&self) -> usize {
        self.eps.iter().chain(&self.delta).fold(0, |acc, &b| (acc << 1) | b as usize)
    }
}

/// All `2^{2g}` characteristics, ordered by [`Characteristic::index`].
pub fn enumerate_characteristics(g: usize) -> Vec<Characteristic> {
    (0..1usize << (2 * g))
        .map(|k| {
            let bit = |i: usize| ((k >> (2 * g - 1 - i)) & 1) as u8;
            Characteristic { eps: (0..g).map(bit).collect(), delta: (g..2 * g).map(bit).collect() }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: C64,
    pub abs_error_bound: f64,
}

/// Truncation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub tol: f64,
    pub radius_cap: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { tol: DEFAULT_TOL, radius_cap: DEFAULT_RADIUS_CAP }
    }
}

impl Truncation {
    pub fn with_tol(tol: f64) -> Self {
        Truncation { tol, ..Default::default() }
    }
}

/// Upper incomplete gamma `Γ(s, x)` for `s ∈ ½ℕ`, `s > 0`.
fn upper_gamma_half(twice_s: usize, x: f64) -> f64 {
    let (mut s, mut val) = if twice_s % 2 == 1 {
        (0.5, libm::sqrt(PI) * libm::erfc(libm::sqrt(x)))
    } else {
        (1.0, libm::exp(-x))
    };
    while 2.0 * s < twice_s as f64 - 0.5 {
        val = s * val + libm::pow(x, s) * libm::exp(-x);
        s += 1.0;
    }
    val
}

/// Bound on `Σ_{|n−c|>R} p(|n−c|) exp(−πλ|n−c|²)` where the polynomial weight
/// is `(s+ρ)^{g−1}·(s + 2ρ + κ)^{deriv}` after the cube-covering shift.
fn tail_bound(g: usize, lambda: f64, radius: f64, deriv: Option<f64>) -> f64 {
    let rho = libm::sqrt(g as f64) / 2.0;
    let s0 = radius - 2.0 * rho;
    if s0 <= 0.0 {
        return f64::INFINITY;
    }
    // polynomial coefficients in s
    let mut poly = vec![1.0f64];
    for _ in 0..g - 1 {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c * rho;
            next[i + 1] += c;
        }
        poly = next;
    }
    if let Some(kappa) = deriv {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c * (2.0 * rho + kappa);
            next[i + 1] += c;
        }
        poly = next;
    }
    let a = PI * lambda;
    let x = a * s0 * s0;
    let surface = 2.0 * libm::pow(PI, g as f64 / 2.0) / libm::tgamma(g as f64 / 2.0);
    let integral: f64 = poly
        .iter()
        .enumerate()
        .map(|(j, c)| c * upper_gamma_half(j + 1, x) / (2.0 * libm::pow(a, (j as f64 + 1.0) / 2.0)))
        .sum();
    surface * integral
}

struct Prepared {
    g: usize,
    a: Vec<f64>,
    zb: ComplexVector,
    center: Vec<f64>,
    prefactor_log: f64,
    kappa: f64,
}

fn prepare(tau: &SiegelMatrix, z: &[C64], ch: &Characteristic) -> Result<Prepared, ThetaError> {
    let g = tau.g();
    if z.len() != g {
        return Err(ThetaError::DimensionMismatch { expected: g, got: z.len() });
    }
    if ch.g() != g {
        return Err(ThetaError::DimensionMismatch { expected: g, got: ch.g() });
    }
    let a: Vec<f64> = ch.eps.iter().map(|&b| b as f64 / 2.0).collect();
    let zb: ComplexVector = z.iter().zip(&ch.delta).map(|(w, &d)| w + d as f64 / 2.0).collect();
    let y: Vec<f64> = z.iter().map(|w| w.im).collect();
    let yi = tau.im_solve(&y);
    let center: Vec<f64> = (0..g).map(|i| -a[i] - yi[i]).collect();
    let prefactor_log = PI * y.iter().zip(&yi).map(|(p, q)| p * q).sum::<f64>();
    let kappa = libm::sqrt(yi.iter().map(|v| v * v).sum::<f64>());
    Ok(Prepared { g, a, zb, center, prefactor_log, kappa })
}

fn value_bound(p: &Prepared, lambda: f64, radius: f64) -> f64 {
    libm::exp(p.prefactor_log) * tail_bound(p.g, lambda, radius, None)
}

fn grad_bound(p: &Prepared, lambda: f64, radius: f64) -> f64 {
    2.0 * PI * libm::exp(p.prefactor_log) * tail_bound(p.g, lambda, radius, Some(p.kappa))
}

fn choose_radius(
    p: &Prepared,
    lambda: f64,
    trunc: &Truncation,
    bound: impl Fn(&Prepared, f64, f64) -> f64,
) -> Result<f64, ThetaError> {
    if !(trunc.tol > 0.0 && trunc.tol.is_finite()) {
        return Err(ThetaError::InvalidTolerance);
    }
    let mut r = libm::sqrt(p.g as f64) + 0.5;
    while bound(p, lambda, r) > trunc.tol {
        r += 0.25;
        if r > trunc.radius_cap {
            return Err(ThetaError::RadiusOverflow { cap: trunc.radius_cap });
        }
    }
    Ok(r)
}

/// Visits every lattice point within `radius` of `center`.
fn for_each_point(center: &[f64], radius: f64, mut f: impl FnMut(&[i64])) {
    let g = center.len();
    let mut n = vec![0i64; g];
    fn rec(
        i: usize,
        center: &[f64],
        r2: f64,
        acc: f64,
        n: &mut Vec<i64>,
        f: &mut dyn FnMut(&[i64]),
    ) {
        if i == center.len() {
            f(n);
            return;
        }
        let rem = libm::sqrt((r2 - acc).max(0.0));
        let lo = libm::ceil(center[i] - rem) as i64;
        let hi = libm::floor(center[i] + rem) as i64;
        for k in lo..=hi {
            let d = k as f64 - center[i];
            if acc + d * d <= r2 {
                n[i] = k;
                rec(i + 1, center, r2, acc + d * d, n, f);
            }
        }
    }
    rec(0, center, radius * radius, 0.0, &mut n, &mut f);
}

struct Sums {
    value: C64,
    grad: ComplexVector,
    abs_sum: f64,
    /// Floating-point error of the value and of each gradient entry.
    round: f64,
    grad_round: f64,
}

fn sum_series(tau: &SiegelMatrix, p: &Prepared, radius: f64, want_grad: bool) -> Sums {
    let g = p.g;
    let mut value = C64::new(0.0, 0.0);
    let mut grad = vec![C64::new(0.0, 0.0); if want_grad { g } else { 0 }];
    let mut abs_sum = 0.0;
    let mut weighted = 0.0;
    let mut grad_weighted = 0.0;
    let mut grad_abs = 0.0;
    let mut count = 0usize;
    let mut na = vec![0.0f64; g];
    for_each_point(&p.center, radius, |n| {
        for i in 0..g {
            na[i] = n[i] as f64 + p.a[i];
        }
        let mut phase = C64::new(0.0, 0.0);
        for i in 0..g {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..g {
                row += tau.get(i, j) * na[j];
            }
            phase += na[i] * (row * 0.5 + p.zb[i]);
        }
        let term = e(phase);
        value += term;
        let t = term.norm();
        abs_sum += t;
        // the exponential loses about |phase| ulps; the phase itself about g
        let w = t * (2.0 * PI * phase.norm() + 4.0 * g as f64);
        weighted += w;
        count += 1;
        if want_grad {
            let k = 2.0 * PI * na.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            grad_weighted += (w + t) * k;
            grad_abs += t * k;
            for i in 0..g {
                grad[i] += term * C64::new(0.0, 2.0 * PI * na[i]);
            }
        }
    });
    let n = count as f64;
    Sums {
        value,
        grad,
        abs_sum,
        round: f64::EPSILON * (weighted + n * abs_sum),
        grad_round: f64::EPSILON * (grad_weighted + n * grad_abs),
    }
}

/// `θ[ε,δ](τ, z)` with full control over truncation.
pub fn theta_char_with(
    tau: &SiegelMatrix,
    z: &[C64],
    ch: &Characteristic,
    trunc: &Truncation,
) -> Result<ThetaValue, ThetaError> {
    let p = prepare(tau, z, ch)?;
    let r = choose_radius(&p, tau.lambda_min(), trunc, value_bound)?;
    let s = sum_series(tau, &p, r, false);
    Ok(ThetaValue { value: s.value, abs_error_bound: value_bound(&p, tau.lambda_min(), r) + s.round })
}

pub fn theta(tau: &SiegelMatrix, z: &[C64], tol: f64) -> Result<ThetaValue, ThetaError> {
    theta_char_with(tau, z, &Characteristic::zero(tau.g()), &Truncation::with_tol(tol))
}

pub fn theta_char(
    tau: &SiegelMatrix,
    z: &[C64],
    ch: &Characteristic,
    tol: f64,
) -> Result<ThetaValue, ThetaError> {
    theta_char_with(tau, z, ch, &Truncation::with_tol(tol))
}

/// Value and z-gradient from a single pass over the lattice.
pub fn theta_and_grad(
    tau: &SiegelMatrix,
    z: &[C64],
    ch: &Characteristic,
    tol: f64,
) -> Result<(ThetaValue, Vec<ThetaValue>), ThetaError> {
    let p = prepare(tau, z, ch)?;
    let trunc = Truncation::with_tol(tol);
    let lam = tau.lambda_min();
    let r = choose_radius(&p, lam, &trunc, |p, l, r| value_bound(p, l, r).max(grad_bound(p, l, r)))?;
    let s = sum_series(tau, &p, r, true);
    let vb = value_bound(&p, lam, r) + s.round;
    let gb = grad_bound(&p, lam, r) + s.grad_round;
    Ok((
        ThetaValue { value: s.value, abs_error_bound: vb },
        s.grad.into_iter().map(|v| ThetaValue { value: v, abs_error_bound: gb }).collect(),
    ))
}

pub fn grad_theta(
    tau: &SiegelMatrix,
    z: &[C64],
    ch: &Characteristic,
    tol: f64,
) -> Result<Vec<ThetaValue>, ThetaError> {
    let p = prepare(tau, z, ch)?;
    let trunc = Truncation::with_tol(tol);
    let lam = tau.lambda_min();
    let r = choose_radius(&p, lam, &trunc, grad_bound)?;
    let s = sum_series(tau, &p, r, true);
    let gb = grad_bound(&p, lam, r) + s.grad_round;
    Ok(s.grad.into_iter().map(|v| ThetaValue { value: v, abs_error_bound: gb }).collect())
}

/// `grad_z θ(τ, z)` at the two-torsion point `m = (τε+δ)/2` of an odd characteristic.
pub fn f_m(tau: &SiegelMatrix, ch: &Characteristic, tol: f64) -> Result<Vec<ThetaValue>, ThetaError> {
    if !ch.is_odd() {
        return Err(ThetaError::EvenCharacteristic);
    }
    let m = ch.point(tau);
    grad_theta(tau, &m, &Characteristic::zero(tau.g()), tol)
}

/// The same vector through the characteristic route `e(−εᵀτε/8 − εᵀδ/4)·grad θ[ε,δ](τ, 0)`.
pub fn f_m_via_char(
    tau: &SiegelMatrix,
    ch: &Characteristic,
    tol: f64,
) -> Result<Vec<ThetaValue>, ThetaError> {
    if !ch.is_odd() {
        return Err(ThetaError::EvenCharacteristic);
    }
    let k = ch.shift_factor(tau);
    let zero = vec![C64::new(0.0, 0.0); tau.g()];
    Ok(grad_theta(tau, &zero, ch, tol)?
        .into_iter()
        .map(|v| ThetaValue { value: v.value * k, abs_error_bound: v.abs_error_bound * k.norm() })
        .collect())
}

/// Sum over the ball of the given radius, returning the value and `Σ|term|`.
/// Exposed for certification checks.
pub fn theta_char_at_radius(
    tau: &SiegelMatrix,
    z: &[C64],
    ch: &Characteristic,
    radius: f64,
) -> Result<(C64, f64), ThetaError> {
    let p = prepare(tau, z, ch)?;
    let s = sum_series(tau, &p, radius, false);
    Ok((s.value, s.abs_sum))
}

/// Radius selected for a given tolerance.
pub fn truncation_radius(
    tau: &SiegelMatrix,
    z: &[C64],
    ch: &Characteristic,
    trunc: &Truncation,
) -> Result<f64, ThetaError> {
    let p = prepare(tau, z, ch)?;
    choose_radius(&p, tau.lambda_min(), trunc, value_bound)
}
