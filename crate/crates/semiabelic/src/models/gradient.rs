//! Gradients of the component theta forms in affine charts.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{ComponentPoint, DegenerationModel, FixedPoint, ModelError, ZERO_COORD};
use crate::theta::{c64, ThetaValue, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    /// `z1…` for base directions, then `label[c]` for free fiber coordinates.
    pub labels: Vec<String>,
    pub values: Vec<ThetaValue>,
    /// Closed-form values where a formula is known, same layout as `values`.
    pub closed_form: Option<Vec<Option<C64>>>,
    /// Chart coordinate of each projective factor.
    pub chart: Vec<usize>,
}

/// A dependent coordinate `w_x = w_a w_b / w_p` coming from a binomial relation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dependent {
    pub x: usize,
    pub a: usize,
    pub b: usize,
    pub p: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct LocalChart {
    pub fiber: Vec<C64>,
    pub chart: Vec<usize>,
    pub deps: Vec<Dependent>,
    pub free: Vec<usize>,
}

impl DegenerationModel {
    pub(crate) fn local_chart(&self, p: &ComponentPoint) -> Result<LocalChart, ModelError> {
        let comp = &self.components[p.component];
        let mx = p.fiber.iter().map(|w| w.norm()).fold(0.0, f64::max);
        let nonzero = |w: C64| w.norm() > ZERO_COORD * mx;
        let mut fiber = p.fiber.clone();
        let mut chart = Vec::new();
        for (f, r) in comp.factor_ranges().into_iter().enumerate() {
            let c = *comp.chart_pref[f]
                .iter()
                .find(|&&c| nonzero(p.fiber[c]))
                .ok_or(ModelError::SingularPointOfComponent)?;
            let d = p.fiber[c];
            for i in r {
                fiber[i] = p.fiber[i] / d;
            }
            chart.push(c);
        }
        let mut deps: Vec<Dependent> = Vec::new();
        for q in &comp.quadrics {
            let is_dep = |c: usize, deps: &[Dependent]| deps.iter().any(|d| d.x == c);
            let cands = [(q[2], q[3], q[0], q[1]), (q[3], q[2], q[0], q[1]), (q[0], q[1], q[2], q[3]), (q[1], q[0], q[2], q[3])];
            let pick = cands.iter().find(|&&(x, partner, a, b)| {
                !chart.contains(&x)
                    && !is_dep(x, &deps)
                    && !is_dep(partner, &deps)
                    && !is_dep(a, &deps)
                    && !is_dep(b, &deps)
                    && nonzero(fiber[partner])
            });
            match pick {
                Some(&(x, partner, a, b)) => deps.push(Dependent { x, a, b, p: partner }),
                None => return Err(ModelError::SingularPointOfComponent),
            }
        }
        let free = (0..comp.n_coords())
            .filter(|c| !chart.contains(c) && !deps.iter().any(|d| d.x == *c))
            .collect();
        Ok(LocalChart { fiber, chart, deps, free })
    }

    /// Gradient in the local chart: base directions first, then free fiber
    /// coordinates in increasing index order.
    pub fn gradient_at_point(&self, p: &ComponentPoint, tol: f64) -> Result<GradientReport, ModelError> {
        let ch = crate::theta::Characteristic::zero(self.base_g());
        self.chart_gradient(p, |z| Ok(self.base.theta_and_grad(z, &ch, tol)?))
    }

    /// Chain rule through the local chart, with `theta_at(z)` returning the
    /// theta value and its `z` gradient at the argument of each term.
    pub(crate) fn chart_gradient<F>(&self, p: &ComponentPoint, mut theta_at: F) -> Result<GradientReport, ModelError>
    where
        F: FnMut(&[C64]) -> Result<(ThetaValue, Vec<ThetaValue>), ModelError>,
    {
        let comp = &self.components[p.component];
        let lc = self.local_chart(p)?;
        let gb = self.base_g();
        let mut dz = vec![c64(0.0, 0.0); gb];
        let mut dzb = vec![0.0; gb];
        let mut dw = vec![c64(0.0, 0.0); comp.n_coords()];
        let mut dwb = vec![0.0; comp.n_coords()];
        let mut cache: BTreeMap<Vec<i64>, (ThetaValue, Vec<ThetaValue>)> = BTreeMap::new();
        for t in &comp.terms {
            let pos = comp.term_position(t);
            let (th, gr) = match cache.get(&pos) {
                Some(v) => v.clone(),
                None => {
                    let s = self.shift_vector(&pos);
                    let z: Vec<C64> = p.z.iter().zip(&s).map(|(a, b)| a + b).collect();
                    let v = theta_at(&z)?;
                    cache.insert(pos, v.clone());
                    v
                }
            };
            let mono: C64 = t.coords.iter().map(|&c| lc.fiber[c]).product::<C64>() * t.coef;
            for i in 0..gb {
                dz[i] += mono * gr[i].value;
                dzb[i] += mono.norm() * gr[i].abs_error_bound;
            }
            for (k, &c) in t.coords.iter().enumerate() {
                let rest: C64 = t
                    .coords
                    .iter()
                    .enumerate()
                    .filter(|(k2, _)| *k2 != k)
                    .map(|(_, &c2)| lc.fiber[c2])
                    .product::<C64>()
                    * t.coef;
                dw[c] += rest * th.value;
                dwb[c] += rest.norm() * th.abs_error_bound;
            }
        }
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for i in 0..gb {
            labels.push(format!("z{}", i + 1));
            values.push(ThetaValue { value: dz[i], abs_error_bound: dzb[i] });
        }
        for &f in &lc.free {
            let mut v = dw[f];
            let mut b = dwb[f];
            for d in &lc.deps {
                let w = &lc.fiber;
                let dx = if f == d.a {
                    w[d.b] / w[d.p]
                } else if f == d.b {
                    w[d.a] / w[d.p]
                } else if f == d.p {
                    -w[d.x] / w[d.p]
                } else {
                    continue;
                };
                v += dw[d.x] * dx;
                b += dwb[d.x] * dx.norm();
            }
            labels.push(format!("{}[{}]", comp.label, f));
            values.push(ThetaValue { value: v, abs_error_bound: b });
        }
        Ok(GradientReport { labels, values, closed_form: None, chart: lc.chart })
    }

    /// Gradient at a fixed point on the divisor, with closed forms attached
    /// for the strata where they are known.
    pub fn gradient_at(&self, fp: &FixedPoint, tol: f64) -> Result<GradientReport, ModelError> {
        if !fp.odd_flag {
            let v = self.eval_theta_component(&fp.point, tol)?;
            return Err(ModelError::NotOnDivisor(v.value.norm()));
        }
        let mut rep = self.gradient_at_point(&fp.point, tol)?;
        rep.closed_form = self.closed_form(fp, tol)?;
        Ok(rep)
    }
}

/// `|sin|` of the angle between two complex vectors.
pub fn direction_sine(a: &[C64], b: &[C64]) -> f64 {
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let cos2 = (ip.norm_sqr() / (na * nb)).min(1.0);
    libm::sqrt(1.0 - cos2)
}
