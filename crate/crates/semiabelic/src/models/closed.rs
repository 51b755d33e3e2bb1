//! Gradients written through the characteristic theta `θ_m` of the fixed point.
//!
//! With `m` the half period of `[ε, δ]`, `θ(m + a) = E(a)·θ_m(a)` where
//! `E(a) = E₀·e(−εᵀa/2)`, so every term of a component form can be rewritten
//! around the fixed point. For rank one the odd symmetry of `θ_m` collapses
//! the sums further.

use alloc::vec::Vec;

use super::{DegenerationModel, FixedPoint, ModelError, ModelKind};
use crate::theta::{c64, e, ThetaValue, C64};

impl DegenerationModel {
    fn e_factor(&self, fp: &FixedPoint, a: &[C64]) -> C64 {
        let eps = fp.characteristic.eps_f64();
        let dot: C64 = a.iter().zip(&eps).map(|(x, y)| x * y).sum();
        self.base.shift_factor(&fp.characteristic) * e(-dot * 0.5)
    }

    fn theta_m(&self, fp: &FixedPoint, a: &[C64], tol: f64) -> Result<(ThetaValue, Vec<ThetaValue>), ModelError> {
        Ok(self.base.theta_and_grad(a, &fp.characteristic, tol)?)
    }

    pub(crate) fn closed_form(&self, fp: &FixedPoint, tol: f64) -> Result<Option<Vec<Option<C64>>>, ModelError> {
        if self.kind == ModelKind::Rank1 && self.base_g() > 0 && (fp.stratum == 0b11 || fp.stratum == 0b01) {
            return self.rank1_closed_form(fp, tol).map(Some);
        }
        let m = self.base.point(&fp.characteristic);
        let eps = fp.characteristic.eps_f64();
        let rep = self.chart_gradient(&fp.point, |z| {
            let a: Vec<C64> = z.iter().zip(&m).map(|(x, y)| x - y).collect();
            let ef = self.e_factor(fp, &a);
            let (th, gr) = self.theta_m(fp, &a, tol)?;
            let value = ThetaValue { value: ef * th.value, abs_error_bound: ef.norm() * th.abs_error_bound };
            let grad = gr
                .iter()
                .zip(&eps)
                .map(|(g, &ei)| {
                    let corr = c64(0.0, -core::f64::consts::PI * ei) * th.value;
                    ThetaValue { value: ef * (g.value + corr), abs_error_bound: ef.norm() * (g.abs_error_bound + th.abs_error_bound * 4.0) }
                })
                .collect();
            Ok((value, grad))
        })?;
        Ok(Some(rep.values.into_iter().map(|v| Some(v.value)).collect()))
    }

    /// On a smooth fiber point `z = m − b/2`, `x = e(εᵀb/2)`; on the singular
    /// fiber `z = m`.
    fn rank1_closed_form(&self, fp: &FixedPoint, tol: f64) -> Result<Vec<Option<C64>>, ModelError> {
        let b = &self.shifts[0];
        let gb = self.base_g();
        let w = &fp.point.fiber;
        let mut out = Vec::new();
        if fp.stratum == 0b11 {
            let x = w[1] / w[0];
            let half: Vec<C64> = b.iter().map(|v| v * 0.5).collect();
            let ef = self.e_factor(fp, &half);
            let (th, gr) = self.theta_m(fp, &half, tol)?;
            for g in gr.iter().take(gb) {
                out.push(Some(x * ef * g.value * 2.0));
            }
            out.push(Some(ef * th.value));
        } else {
            let zero = alloc::vec![c64(0.0, 0.0); gb];
            let (_, gr) = self.theta_m(fp, &zero, tol)?;
            let e0 = self.e_factor(fp, &zero);
            for g in &gr {
                out.push(Some(e0 * g.value));
            }
            let eb = self.e_factor(fp, b);
            let (th, _) = self.theta_m(fp, b, tol)?;
            out.push(Some(eb * th.value));
        }
        Ok(out)
    }
}
