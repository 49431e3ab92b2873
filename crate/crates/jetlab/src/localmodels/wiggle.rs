//! The wiggle isotopy: `F_t(x) = (x_1, ..., x_m + phi_t(x))` where
//! `phi_t(x) = t * psi((1-|x_1|)/eps) ... psi((1-|x_m|)/eps) * w(x_1)` and
//! `w(u) = a * eps * sin(pi u / (2 delta))`.
//!
//! The amplitude factor `a` is chosen so that the certified bound
//! `a * sup|psi'| < 1/2` on `|d phi_t / d x_m|` guarantees injectivity of
//! every `F_t`. The cutoff and interpolation scales are tied to `a`:
//! the cutoff neighborhood is `U = F_1({|x_m| < rho*eps})` with
//! `rho = a/2`, the cutoff is `phi = 1 - psi(|y_m| / (rho*eps))` for
//! `F_1(y) = x`, and the base-point interpolation uses
//! `eta(x_m / (s*eps))` with `s = a/2`, so saturation holds on all of `U`
//! near the rectangle boundaries and the local definitions glue exactly.
//! At `a = 1/2` these reduce to the reference constants `|x_m| < eps/4`
//! and `eta(4 x_m / eps)`.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::localmodels::profiles::Profile;
use crate::polyjet::expr::compose_univariate;
use crate::polyjet::jet::Jet;
use crate::polyjet::multiindex::MultiIndex;
use crate::polyjet::poly::TruncatedPoly;

/// Default cap on the amplitude factor.
pub const AMPLITUDE_CAP: f64 = 0.25;
/// Certified bound target for `a * sup|psi'|`.
const AMPLITUDE_SAFETY: f64 = 0.45;

#[derive(Debug, Clone)]
pub struct WiggleIsotopy {
    pub m: usize,
    pub eps: f64,
    pub delta_requested: f64,
    /// Admissible value `1/(2J+1) <= requested`, so the rectangles
    /// `[(2j-1) delta, (2j+1) delta]` tile `[-1, 1]` exactly.
    pub delta: f64,
    pub j_max: i64,
    /// `a` in `w(u) = a * eps * sin(pi u / (2 delta))`.
    pub amplitude_factor: f64,
    /// Cutoff scale: `U = F_1({|x_m| < rho * eps})`.
    pub rho: f64,
    /// Interpolation scale: `b` uses `eta(u / (eta_scale * eps))`.
    pub eta_scale: f64,
    /// The transition profile used by all plateau factors and the cutoff.
    pub plateau: Profile,
    pub eta: Profile,
    /// Parameter dimensions (extra plateau factors in `z`).
    pub q: usize,
    /// Highest jet order the profiles support.
    pub max_order: usize,
}

pub fn build_wiggle_isotopy(
    m: usize,
    eps: f64,
    delta: f64,
    max_order: usize,
    q: usize,
) -> Result<WiggleIsotopy> {
    if m < 2 {
        return Err(Error::InvalidArgument(
            "the wiggle needs m >= 2 (a first and a last coordinate)".into(),
        ));
    }
    if !(0.0 < eps && eps < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in (0, 1/2), got {eps}"
        )));
    }
    if !(0.0 < delta && delta <= eps / 4.0) {
        return Err(Error::Tiling(format!(
            "delta must satisfy 0 < delta <= eps/4, got delta = {delta}, eps = {eps}"
        )));
    }
    // Round down to the admissible grid 1/(2J+1).
    let j_max = ((1.0 / delta - 1.0) / 2.0).ceil() as i64;
    let delta_used = 1.0 / (2 * j_max + 1) as f64;
    let k = 2 * max_order + 3;
    let plateau = Profile::transition(0.5, 0.75, k);
    let eta = Profile::eta(k);
    let dpsi = plateau.deriv_sup(1);
    let amplitude_factor = AMPLITUDE_CAP.min(AMPLITUDE_SAFETY / dpsi);
    Ok(WiggleIsotopy {
        m,
        eps,
        delta_requested: delta,
        delta: delta_used,
        j_max,
        amplitude_factor,
        rho: amplitude_factor / 2.0,
        eta_scale: amplitude_factor / 2.0,
        plateau,
        eta,
        q,
        max_order,
    })
}

impl WiggleIsotopy {
    /// The sinusoid `w(u)`.
    pub fn w(&self, u: f64) -> f64 {
        self.amplitude_factor * self.eps * (std::f64::consts::PI * u / (2.0 * self.delta)).sin()
    }

    fn plateau_factor(&self, c: f64) -> f64 {
        self.plateau.value((1.0 - c.abs()) / self.eps)
    }

    /// Product of all plateau factors except the one in `x_m`.
    fn outer_plateau(&self, x: &[f64], z: &[f64]) -> f64 {
        let mut p = 1.0;
        for &xj in &x[..self.m - 1] {
            p *= self.plateau_factor(xj);
            if p == 0.0 {
                return 0.0;
            }
        }
        for &zi in z {
            p *= self.plateau_factor(zi);
            if p == 0.0 {
                return 0.0;
            }
        }
        p
    }

    /// The shift `phi_t(x)` applied to the last coordinate.
    pub fn shift(&self, t: f64, x: &[f64], z: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.m);
        debug_assert_eq!(z.len(), self.q);
        let p = self.outer_plateau(x, z) * self.plateau_factor(x[self.m - 1]);
        if p == 0.0 {
            return 0.0;
        }
        t * p * self.w(x[0])
    }

    pub fn apply(&self, t: f64, x: &[f64], z: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        y[self.m - 1] += self.shift(t, x, z);
        y
    }

    /// Solve `y_m + phi_t(x', y_m) = x_m` for the last coordinate of the
    /// preimage; monotone by the certified amplitude rule.
    pub fn apply_inverse(&self, t: f64, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let m = self.m;
        let outer = self.outer_plateau(x, z) * t * self.w(x[0]);
        let mut y = x.to_vec();
        if outer == 0.0 {
            return Ok(y);
        }
        let target = x[m - 1];
        let g = |s: f64| s + outer * self.plateau_factor(s) - target;
        let amp = self.amplitude_factor * self.eps;
        let mut lo = target - amp * 1.001;
        let mut hi = target + amp * 1.001;
        let (glo, ghi) = (g(lo), g(hi));
        if glo > 0.0 || ghi < 0.0 {
            return Err(Error::RootSolve(format!(
                "bracket failed at x = {x:?}: g({lo}) = {glo}, g({hi}) = {ghi}"
            )));
        }
        // Bisection with a Newton-style midpoint refinement at the end.
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let gm = g(mid);
            if gm.abs() < 1e-15 || (hi - lo) < 1e-15 {
                break;
            }
            if gm > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        y[m - 1] = mid;
        Ok(y)
    }

    /// Univariate germ of `x -> psi((1 - |x|)/eps)` at `c`, to `order`.
    fn plateau_factor_taylor(&self, c: f64, order: usize) -> Result<Vec<f64>> {
        let u0 = (1.0 - c.abs()) / self.eps;
        let base = self.plateau.taylor_at(u0, order)?;
        let slope = if c >= 0.0 { -1.0 } else { 1.0 } / self.eps;
        let mut pow = 1.0;
        Ok(base
            .into_iter()
            .map(|b| {
                let out = b * pow;
                pow *= slope;
                out
            })
            .collect())
    }

    /// Univariate germ of `w` at `u0`.
    fn w_taylor(&self, u0: f64, order: usize) -> Vec<f64> {
        let a = self.amplitude_factor * self.eps;
        let om = std::f64::consts::PI / (2.0 * self.delta);
        let mut fac = 1.0;
        (0..=order)
            .map(|j| {
                if j > 0 {
                    fac *= j as f64;
                }
                a * om.powi(j as i32) * (om * u0 + j as f64 * std::f64::consts::FRAC_PI_2).sin()
                    / fac
            })
            .collect()
    }

    /// `m`-variable jet of the factor product
    /// `t * w(x_1) * prod_{j<m} psi_j * prod_i psi(z_i)` at `x` (the part
    /// of `phi_t` not involving `x_m`).
    fn outer_jet(&self, t: f64, x: &[f64], z: &[f64], order: usize) -> Result<TruncatedPoly<f64>> {
        let m = self.m;
        let mut acc = {
            let w_coeffs = self.w_taylor(x[0], order);
            let x1 = TruncatedPoly::linear(m, order.max(1), 0, x[0]).retruncate(order);
            compose_univariate(&w_coeffs, &x1)?
        };
        acc = acc.scale(&t);
        for j in 0..m - 1 {
            let coeffs = self.plateau_factor_taylor(x[j], order)?;
            if coeffs.iter().all(|c| *c == 0.0) {
                return Ok(TruncatedPoly::zero(m, order));
            }
            let xj = TruncatedPoly::linear(m, order.max(1), j, x[j]).retruncate(order);
            acc = acc.mul(&compose_univariate(&coeffs, &xj)?)?;
        }
        for &zi in z {
            let v = self.plateau_factor(zi);
            if v == 0.0 {
                return Ok(TruncatedPoly::zero(m, order));
            }
            acc = acc.scale(&v);
        }
        Ok(acc)
    }

    /// Jet of `F_t` at `x` (parameters `z` fixed).
    pub fn map_jet(&self, t: f64, x: &[f64], z: &[f64], order: usize) -> Result<Jet<f64>> {
        let m = self.m;
        if order > self.max_order {
            return Err(Error::InvalidArgument(format!(
                "jet order {order} exceeds the isotopy's supported order {}",
                self.max_order
            )));
        }
        let mut comps: Vec<TruncatedPoly<f64>> = (0..m - 1)
            .map(|i| {
                if order == 0 {
                    TruncatedPoly::constant(m, 0, x[i])
                } else {
                    TruncatedPoly::linear(m, order, i, x[i])
                }
            })
            .collect();
        let outer = self.outer_jet(t, x, z, order)?;
        let last_factor = {
            let coeffs = self.plateau_factor_taylor(x[m - 1], order)?;
            let xm = TruncatedPoly::linear(m, order.max(1), m - 1, x[m - 1]).retruncate(order);
            compose_univariate(&coeffs, &xm)?
        };
        let shift = outer.mul(&last_factor)?;
        let xm = if order == 0 {
            TruncatedPoly::constant(m, 0, x[m - 1])
        } else {
            TruncatedPoly::linear(m, order, m - 1, x[m - 1])
        };
        comps.push(xm.add(&shift)?);
        Jet::new(x.to_vec(), comps)
    }

    /// Jet of the last coordinate of `F_t^{-1}` as a function of `x`,
    /// solved by jet-space Newton through the numeric root.
    pub fn inverse_last_jet(
        &self,
        t: f64,
        x: &[f64],
        z: &[f64],
        order: usize,
    ) -> Result<TruncatedPoly<f64>> {
        let m = self.m;
        let y0 = self.apply_inverse(t, x, z)?[m - 1];
        let outer = self.outer_jet(t, x, z, order)?;
        let xm = if order == 0 {
            TruncatedPoly::constant(m, 0, x[m - 1])
        } else {
            TruncatedPoly::linear(m, order, m - 1, x[m - 1])
        };
        if outer.is_zero() {
            return Ok(xm);
        }
        let mut yjet = {
            let mut p = TruncatedPoly::zero(m, order);
            p.set_coeff(&MultiIndex::zero(m), y0);
            p
        };
        let steps = (usize::BITS - (order + 1).leading_zeros()) as usize + 2;
        for _ in 0..steps {
            let c0 = yjet.constant_term();
            let psi = self.plateau_factor_taylor(c0, order)?;
            // Derivative germ of the plateau factor, one order deeper so
            // the top coefficient stays honest.
            let dpsi: Vec<f64> = {
                let full = self.plateau_factor_taylor(c0, order + 1)?;
                (0..=order).map(|j| full[j + 1] * (j + 1) as f64).collect()
            };
            let psi_of_y = compose_univariate(&psi, &yjet)?;
            let dpsi_of_y = compose_univariate(&dpsi, &yjet)?;
            let g = yjet.add(&outer.mul(&psi_of_y)?)?.sub(&xm)?;
            let gprime = TruncatedPoly::constant(m, order, 1.0).add(&outer.mul(&dpsi_of_y)?)?;
            let update = g.mul(&gprime.recip()?)?;
            yjet = yjet.sub(&update)?;
        }
        Ok(yjet)
    }

    /// The cutoff value `phi(x) = 1 - psi(|y_m| / (rho*eps))`, `F_1(y) = x`.
    pub fn cutoff_phi(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        let y = self.apply_inverse(1.0, x, z)?;
        let ym = y[self.m - 1];
        Ok(1.0 - self.plateau.value(ym / (self.rho * self.eps)))
    }

    /// Jet of the cutoff at `x`.
    pub fn cutoff_phi_jet(&self, x: &[f64], z: &[f64], order: usize) -> Result<TruncatedPoly<f64>> {
        let m = self.m;
        let yjet = self.inverse_last_jet(1.0, x, z, order)?;
        let y0 = yjet.constant_term();
        let scale = 1.0 / (self.rho * self.eps);
        let base = self.plateau.taylor_at(y0 * scale, order)?;
        let mut pow = 1.0;
        let coeffs: Vec<f64> = base
            .iter()
            .map(|b| {
                let out = b * pow;
                pow *= scale;
                out
            })
            .collect();
        let psi_of_y = compose_univariate(&coeffs, &yjet)?;
        TruncatedPoly::constant(m, order, 1.0).sub(&psi_of_y)
    }

    /// Grid minimum of `1 + d phi_t / d x_m` at `t = 1`; positive values
    /// certify injectivity of every `F_t`.
    pub fn injectivity_min(&self, z: &[f64], spec: &GridSpec) -> f64 {
        let m = self.m;
        let lo = vec![-1.0; m];
        let hi = vec![1.0; m];
        let mut min = f64::INFINITY;
        for x in spec.points(&lo, &hi) {
            let outer = self.outer_plateau(&x, z) * self.w(x[0]);
            let u0 = (1.0 - x[m - 1].abs()) / self.eps;
            let dpsi = self
                .plateau
                .taylor_at(u0, 1)
                .map(|t| t[1])
                .unwrap_or(0.0);
            let sign = if x[m - 1] >= 0.0 { -1.0 } else { 1.0 };
            let d = 1.0 + outer * dpsi * sign / self.eps;
            min = min.min(d);
        }
        min
    }

    /// Certify injectivity on the standard per-scale grid.
    pub fn injectivity_certificate(&self, z: &[f64]) -> Result<f64> {
        let m = self.m;
        let mut counts = vec![GridSpec::count_for_scale(2.0, self.eps / 4.0).min(257); m];
        counts[0] = GridSpec::count_for_scale(2.0, self.delta).min(4097);
        let spec = GridSpec::new(counts);
        let min = self.injectivity_min(z, &spec);
        if min <= 0.05 {
            return Err(Error::Injectivity { min });
        }
        Ok(min)
    }

    /// Max |F_t - id| over a grid and the given `t` samples.
    pub fn c0_distance(&self, z: &[f64], spec: &GridSpec, ts: &[f64]) -> f64 {
        let m = self.m;
        let lo = vec![-1.0; m];
        let hi = vec![1.0; m];
        let mut max = 0.0f64;
        for x in spec.points(&lo, &hi) {
            for &t in ts {
                max = max.max(self.shift(t, &x, z).abs());
            }
        }
        max
    }

    /// Max |F_t(x) - x| over sampled points of the boundary shell
    /// `max_j |x_j| >= 1 - 0.4 eps` (exact zero expected: the plateau
    /// factors saturate at zero there).
    pub fn boundary_identity_max(&self, z: &[f64], per_axis: usize) -> f64 {
        let m = self.m;
        let mut max = 0.0f64;
        for axis in 0..m {
            for side in [-1.0, 1.0] {
                let mut lo = vec![-1.0; m];
                let mut hi = vec![1.0; m];
                if side > 0.0 {
                    lo[axis] = 1.0 - 0.4 * self.eps;
                } else {
                    hi[axis] = -1.0 + 0.4 * self.eps;
                }
                let spec = GridSpec::cubic(m, per_axis.max(3));
                for x in spec.points(&lo, &hi) {
                    for &t in &[0.25, 0.5, 1.0] {
                        max = max.max(self.shift(t, &x, z).abs());
                    }
                }
            }
        }
        max
    }

    /// Max deviation of the first row of `dF_t` from `(1, 0, ..., 0)` over
    /// sampled points (exact zero: the first component is the coordinate).
    pub fn v_invariance_max(&self, z: &[f64], per_axis: usize) -> Result<f64> {
        let m = self.m;
        let spec = GridSpec::cubic(m, per_axis.max(3));
        let lo = vec![-1.0; m];
        let hi = vec![1.0; m];
        let mut max = 0.0f64;
        for x in spec.points(&lo, &hi) {
            let jet = self.map_jet(1.0, &x, z, 1)?;
            let first = jet.component(0);
            for axis in 0..m {
                let want = if axis == 0 { 1.0 } else { 0.0 };
                max = max.max((first.coeff(&MultiIndex::unit(m, axis)) - want).abs());
            }
        }
        Ok(max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wig(eps: f64, delta: f64) -> WiggleIsotopy {
        build_wiggle_isotopy(2, eps, delta, 2, 0).unwrap()
    }

    #[test]
    fn tiling_rounds_down() {
        let w = wig(0.2, 0.02);
        assert!(w.delta <= 0.02);
        assert_eq!((1.0 / w.delta).round() as i64, 2 * w.j_max + 1);
    }

    #[test]
    fn peak_shift_matches_closed_form() {
        // At x_1 = delta (all plateau factors 1) and t = 1 the shift is
        // a * eps * sin(pi/2) = a * eps.
        let w = wig(0.2, 0.02);
        let x = [w.delta, 0.0];
        let y = w.apply(1.0, &x, &[]);
        let expected = w.amplitude_factor * w.eps;
        assert!((y[1] - expected).abs() < 1e-14);
        assert_eq!(y[0], x[0]);
    }

    #[test]
    fn identity_on_boundary_shell() {
        let w = wig(0.2, 0.02);
        assert_eq!(w.boundary_identity_max(&[], 5), 0.0);
    }

    #[test]
    fn inverse_solves_forward() {
        let w = wig(0.2, 0.02);
        for x1 in [-0.73, -0.2, 0.0, 0.31, 0.64] {
            for xm in [-0.9, -0.13, 0.0, 0.02, 0.4] {
                let x = [x1, xm];
                let y = w.apply_inverse(1.0, &x, &[]).unwrap();
                let fwd = w.apply(1.0, &y, &[]);
                assert!((fwd[1] - x[1]).abs() < 1e-11, "x = {x:?}");
            }
        }
    }

    #[test]
    fn injectivity_certificate_passes() {
        let w = wig(0.2, 0.02);
        let min = w.injectivity_certificate(&[]).unwrap();
        assert!(min > 0.5, "certified margin should be comfortable: {min}");
    }

    #[test]
    fn c0_distance_below_eps() {
        let w = wig(0.1, 0.005);
        let spec = GridSpec::new(vec![
            GridSpec::count_for_scale(2.0, w.delta).min(2049),
            33,
        ]);
        let d = w.c0_distance(&[], &spec, &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(d < w.eps);
        assert!(d > 0.0);
    }

    #[test]
    fn map_jet_value_and_first_row() {
        let w = wig(0.2, 0.02);
        let x = [0.1, 0.05];
        let jet = w.map_jet(1.0, &x, &[], 2).unwrap();
        let val = jet.value();
        let direct = w.apply(1.0, &x, &[]);
        assert!((val[1] - direct[1]).abs() < 1e-14);
        assert_eq!(w.v_invariance_max(&[], 5).unwrap(), 0.0);
    }

    #[test]
    fn map_jet_derivative_matches_finite_differences() {
        let w = wig(0.2, 0.02);
        let x = [0.137, 0.021];
        let jet = w.map_jet(1.0, &x, &[], 1).unwrap();
        let h = 1e-6;
        for axis in 0..2 {
            let mut xp = x;
            xp[axis] += h;
            let mut xm = x;
            xm[axis] -= h;
            let fd = (w.apply(1.0, &xp, &[])[1] - w.apply(1.0, &xm, &[])[1]) / (2.0 * h);
            let an = jet.component(1).coeff(&MultiIndex::unit(2, axis));
            assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "axis {axis}");
        }
    }

    #[test]
    fn inverse_jet_consistent_with_numeric_inverse() {
        let w = wig(0.2, 0.02);
        let x = [0.137, 0.021];
        let yjet = w.inverse_last_jet(1.0, &x, &[], 2).unwrap();
        let y = w.apply_inverse(1.0, &x, &[]).unwrap();
        assert!((yjet.constant_term() - y[1]).abs() < 1e-10);
        // Derivative against finite differences of the numeric inverse.
        let h = 1e-6;
        for axis in 0..2 {
            let mut xp = x;
            xp[axis] += h;
            let mut xm = x;
            xm[axis] -= h;
            let fd = (w.apply_inverse(1.0, &xp, &[]).unwrap()[1]
                - w.apply_inverse(1.0, &xm, &[]).unwrap()[1])
                / (2.0 * h);
            let an = yjet.coeff(&MultiIndex::unit(2, axis));
            assert!(
                (fd - an).abs() < 1e-4 * (1.0 + an.abs()),
                "axis {axis}: fd {fd} vs jet {an}"
            );
        }
    }

    #[test]
    fn cutoff_plateau_and_support() {
        let w = wig(0.2, 0.02);
        // x = F_1(y) with y_m = 0: phi = 1.
        let y = [w.delta, 0.0];
        let x = w.apply(1.0, &y, &[]);
        assert_eq!(w.cutoff_phi(&x, &[]).unwrap(), 1.0);
        // x = F_1(y) with |y_m| = eps/2 >= (3/4) rho eps: phi = 0.
        let y2 = [w.delta, w.eps / 2.0];
        let x2 = w.apply(1.0, &y2, &[]);
        assert_eq!(w.cutoff_phi(&x2, &[]).unwrap(), 0.0);
        // Inside the transition the cutoff jet has nonzero slope.
        let y3 = [w.delta, 0.6 * w.rho * w.eps];
        let x3 = w.apply(1.0, &y3, &[]);
        let jet = w.cutoff_phi_jet(&x3, &[], 1).unwrap();
        let v = w.cutoff_phi(&x3, &[]).unwrap();
        assert!((jet.constant_term() - v).abs() < 1e-9);
        assert!(jet.coeff(&MultiIndex::unit(2, 1)).abs() > 1e-3);
    }

    #[test]
    fn cutoff_jet_matches_finite_differences() {
        let w = wig(0.2, 0.04);
        let y = [0.3 * w.delta, 0.55 * w.rho * w.eps];
        let x = w.apply(1.0, &y, &[]);
        let jet = w.cutoff_phi_jet(&x, &[], 1).unwrap();
        // The cutoff varies on the scale rho*eps, so its third derivative
        // is large; a five-point stencil keeps the truncation error down.
        let h = 1e-5;
        for axis in 0..2 {
            let sample = |s: f64| {
                let mut xs = x.clone();
                xs[axis] += s;
                w.cutoff_phi(&xs, &[]).unwrap()
            };
            let fd = (-sample(2.0 * h) + 8.0 * sample(h) - 8.0 * sample(-h) + sample(-2.0 * h))
                / (12.0 * h);
            let an = jet.coeff(&MultiIndex::unit(2, axis));
            assert!(
                (fd - an).abs() < 1e-4 * (1.0 + an.abs()),
                "axis {axis}: fd {fd} vs jet {an}"
            );
        }
    }

    #[test]
    fn parametric_plateau_kills_the_wiggle() {
        let w = build_wiggle_isotopy(2, 0.2, 0.02, 2, 1).unwrap();
        // z near the parameter boundary: plateau factor 0, F = id.
        let x = [w.delta, 0.0];
        let y = w.apply(1.0, &x, &[0.95]);
        assert_eq!(y, x.to_vec());
        // z interior: same as the non-parametric isotopy.
        let y2 = w.apply(1.0, &x, &[0.0]);
        let w0 = wig(0.2, 0.02);
        let y3 = w0.apply(1.0, &x, &[]);
        assert_eq!(y2, y3);
    }
}
