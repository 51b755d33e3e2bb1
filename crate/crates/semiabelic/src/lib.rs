#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod linalg;
pub mod dicing;
pub mod limits;
pub mod models;
pub mod sample;
pub mod theta;

pub use theta::{
    c64, e, enumerate_characteristics, f_m, f_m_via_char, grad_theta, theta, theta_and_grad,
    theta_char, theta_char_with, Characteristic, ComplexVector, SiegelMatrix, ThetaError,
    ThetaValue, Truncation, C64,
};
