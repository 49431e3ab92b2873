//! Smooth cutoff profiles realized as polynomial smoothsteps with exact
//! saturation regions. A smoothstep of matching order `k` is the degree
//! `2k+1` polynomial with `S(0)=0`, `S(1)=1` and derivatives `1..=k`
//! vanishing at both endpoints, so the glued piecewise function is `C^k`.
//! Jets of order up to `k` are therefore exact across the knots.

use crate::error::{Error, Result};
use crate::polyjet::multiindex::binomial;

/// The unit smoothstep `S_k : [0,1] -> [0,1]`.
#[derive(Debug, Clone)]
pub struct SmoothStep {
    k: usize,
    /// Coefficients of `S` in the monomial basis, degree `2k+1`.
    coeffs: Vec<f64>,
}

impl SmoothStep {
    pub fn new(k: usize) -> Self {
        // S_k(x) = x^{k+1} * sum_{n=0}^{k} C(k+n, n) C(2k+1, k-n) (-x)^n
        let mut coeffs = vec![0.0; 2 * k + 2];
        for n in 0..=k {
            let c = (binomial(k + n, n) * binomial(2 * k + 1, k - n)) as f64;
            coeffs[k + 1 + n] = if n % 2 == 0 { c } else { -c };
        }
        SmoothStep { k, coeffs }
    }

    pub fn matching_order(&self) -> usize {
        self.k
    }

    fn poly_eval(&self, coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Coefficients of the `i`-th derivative polynomial.
    fn deriv_coeffs(&self, i: usize) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        for _ in 0..i {
            if c.len() <= 1 {
                return vec![0.0];
            }
            c = c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(p, v)| p as f64 * v)
                .collect();
        }
        c
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            self.poly_eval(&self.coeffs, x)
        }
    }

    /// Taylor coefficients of the piecewise function at `x0`, up to `order`.
    /// Requesting more than the matching order across a knot is rejected.
    pub fn taylor_at(&self, x0: f64, order: usize) -> Result<Vec<f64>> {
        if order > self.k {
            return Err(Error::Domain(format!(
                "jet order {order} exceeds profile smoothness {}",
                self.k
            )));
        }
        let mut out = vec![0.0; order + 1];
        if x0 <= 0.0 {
            return Ok(out);
        }
        if x0 >= 1.0 {
            out[0] = 1.0;
            return Ok(out);
        }
        let mut fac = 1.0f64;
        for (i, slot) in out.iter_mut().enumerate() {
            if i > 0 {
                fac *= i as f64;
            }
            *slot = self.poly_eval(&self.deriv_coeffs(i), x0) / fac;
        }
        Ok(out)
    }

    /// `sup |S^(i)|` over [0,1], by dense sampling of the polynomial.
    pub fn deriv_sup(&self, i: usize) -> f64 {
        if i == 0 {
            return 1.0;
        }
        let d = self.deriv_coeffs(i);
        let samples = 4096;
        (0..=samples)
            .map(|j| self.poly_eval(&d, j as f64 / samples as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Shape of a univariate profile around its transition interval.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// 1 inside `|t| < inner`, 0 outside `|t| > outer` (even).
    Plateau,
    /// 0 inside `|t| < inner`, 1 outside `|t| > outer` (even).
    Transition,
    /// -1 below `-outer`, +1 above `outer` (odd); `inner` unused.
    Step,
}

/// A univariate profile (plateau, transition or step) with exact
/// saturation regions, evaluable as values or univariate jets.
#[derive(Debug, Clone)]
pub struct Profile {
    shape: Shape,
    inner: f64,
    outer: f64,
    step: SmoothStep,
}

impl Profile {
    /// `psi_in`: 1 for `|t| < inner`, 0 for `|t| > outer`, monotone between.
    pub fn plateau(inner: f64, outer: f64, k: usize) -> Self {
        assert!(0.0 < inner && inner < outer);
        Profile {
            shape: Shape::Plateau,
            inner,
            outer,
            step: SmoothStep::new(k),
        }
    }

    /// `psi_out`: 0 for `|u| < inner`, 1 for `|u| > outer`.
    pub fn transition(inner: f64, outer: f64, k: usize) -> Self {
        assert!(0.0 < inner && inner < outer);
        Profile {
            shape: Shape::Transition,
            inner,
            outer,
            step: SmoothStep::new(k),
        }
    }

    /// `eta`: -1 for `u < -1`, +1 for `u > 1`, odd and monotone.
    pub fn eta(k: usize) -> Self {
        Profile {
            shape: Shape::Step,
            inner: 0.0,
            outer: 1.0,
            step: SmoothStep::new(k),
        }
    }

    pub fn matching_order(&self) -> usize {
        self.step.matching_order()
    }

    pub fn inner_edge(&self) -> f64 {
        self.inner
    }

    pub fn outer_edge(&self) -> f64 {
        self.outer
    }

    fn width(&self) -> f64 {
        match self.shape {
            Shape::Step => 2.0,
            _ => self.outer - self.inner,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self.shape {
            Shape::Plateau => 1.0 - self.step.value((t.abs() - self.inner) / self.width()),
            Shape::Transition => self.step.value((t.abs() - self.inner) / self.width()),
            Shape::Step => 2.0 * self.step.value((t + self.outer) / 2.0) - 1.0,
        }
    }

    /// Taylor coefficients of the germ at `t0` up to `order`.
    ///
    /// The absolute-value kink at `t = 0` lies inside a saturation region
    /// for the even shapes, so the germ is smooth everywhere; the branch is
    /// chosen by the sign of `t0`.
    pub fn taylor_at(&self, t0: f64, order: usize) -> Result<Vec<f64>> {
        let (scale, shift, post_scale, post_shift): (f64, f64, f64, f64) = match self.shape {
            Shape::Plateau | Shape::Transition => {
                let sign = if t0 >= 0.0 { 1.0 } else { -1.0 };
                let flip = self.shape == Shape::Plateau;
                (
                    sign / self.width(),
                    -self.inner / self.width(),
                    if flip { -1.0 } else { 1.0 },
                    if flip { 1.0 } else { 0.0 },
                )
            }
            Shape::Step => (0.5, self.outer / 2.0, 2.0, -1.0),
        };
        // Inner affine map s = scale * t + shift applied to the step's
        // Taylor expansion at s0; affine composition is exact.
        let s0 = scale * t0 + shift;
        let base = self.step.taylor_at(s0, order)?;
        let mut out = vec![0.0; order + 1];
        let mut pow = 1.0f64;
        for (j, b) in base.iter().enumerate() {
            out[j] = post_scale * b * pow;
            pow *= scale;
        }
        out[0] += post_shift;
        Ok(out)
    }

    /// `sup |d^i profile / dt^i|` over the real line.
    pub fn deriv_sup(&self, i: usize) -> f64 {
        if i == 0 {
            return match self.shape {
                Shape::Plateau | Shape::Transition => 1.0,
                Shape::Step => 1.0,
            };
        }
        let inner_scale = match self.shape {
            Shape::Step => 0.5,
            _ => 1.0 / self.width(),
        };
        let post = match self.shape {
            Shape::Step => 2.0,
            _ => 1.0,
        };
        post * self.step.deriv_sup(i) * inner_scale.powi(i as i32)
    }
}
