//! Seeded sampling helpers shared by tests, verification and the CLI.

use alloc::vec::Vec;
use rand::Rng;

use crate::theta::{c64, ComplexVector, SiegelMatrix, C64};

/// Random point of the Siegel space with `λ_min(Im τ) ≥ 0.6`.
pub fn random_siegel<R: Rng + ?Sized>(rng: &mut R, g: usize) -> SiegelMatrix {
    let mut b = Vec::with_capacity(g * g);
    for _ in 0..g * g {
        b.push(rng.gen_range(-1.0..1.0f64));
    }
    let mut m = Vec::with_capacity(g * g);
    for i in 0..g {
        for j in 0..g {
            let mut y: f64 = (0..g).map(|k| b[i * g + k] * b[j * g + k]).sum::<f64>() * 0.25;
            if i == j {
                y += 0.6;
            }
            m.push(c64(0.0, y));
        }
    }
    for i in 0..g {
        for j in i..g {
            let x = rng.gen_range(-0.5..0.5);
            m[i * g + j].re = x;
            m[j * g + i].re = x;
        }
    }
    SiegelMatrix::new(g, &m).expect("sampled matrix is positive definite")
}

/// `x + τ y` with `x, y` uniform in `[0,1)^g`.
pub fn random_in_fundamental_domain<R: Rng + ?Sized>(rng: &mut R, tau: &SiegelMatrix) -> ComplexVector {
    let g = tau.g();
    let x: Vec<f64> = (0..g).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y: Vec<f64> = (0..g).map(|_| rng.gen_range(0.0..1.0)).collect();
    let ty = tau.mul_real(&y);
    (0..g).map(|i| ty[i] + x[i]).collect()
}

/// Complex vector with real parts in `[-1,1]` and imaginary parts in `[-im, im]`.
pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, g: usize, im: f64) -> ComplexVector {
    (0..g).map(|_| c64(rng.gen_range(-1.0..1.0), rng.gen_range(-im..=im))).collect()
}

/// Nonzero complex scalar with modulus in `[0.5, 2]`.
pub fn random_unit_scale<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let r = libm::exp(rng.gen_range(-0.69..0.69f64));
    let a = rng.gen_range(0.0..core::f64::consts::TAU);
    C64::from_polar(r, a)
}
