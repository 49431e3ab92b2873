//! Jets: a base point in `I^m` together with `n` truncated Taylor
//! polynomials, one per output component. The polynomial variables are the
//! centered offsets `X = y - x`, so the derivative accessor is
//! `D_alpha = alpha! * coefficient(alpha)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyjet::multiindex::{enumerate_multiindices, MultiIndex};
use crate::polyjet::poly::TruncatedPoly;
use crate::polyjet::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S> {
    base: Vec<S>,
    components: Vec<TruncatedPoly<S>>,
}

/// The two norms attached to a jet: the sup of derivative values and the
/// sup of derivatives in directions tangent to a hyperplane field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JetNorms {
    pub c0: f64,
    pub perp: Option<f64>,
}

impl<S: Scalar> Jet<S> {
    pub fn new(base: Vec<S>, components: Vec<TruncatedPoly<S>>) -> Result<Self> {
        let m = base.len();
        let r = components
            .first()
            .map(|p| p.order())
            .ok_or_else(|| Error::ShapeMismatch("jet needs at least one component".into()))?;
        for p in &components {
            if p.dim() != m || p.order() != r {
                return Err(Error::ShapeMismatch(
                    "jet components must share (m, r)".into(),
                ));
            }
        }
        Ok(Jet { base, components })
    }

    pub fn zero(m: usize, n: usize, r: usize, base: Vec<S>) -> Self {
        assert_eq!(base.len(), m);
        Jet {
            base,
            components: (0..n).map(|_| TruncatedPoly::zero(m, r)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn len_out(&self) -> usize {
        self.components.len()
    }

    pub fn order(&self) -> usize {
        self.components[0].order()
    }

    pub fn base(&self) -> &[S] {
        &self.base
    }

    pub fn components(&self) -> &[TruncatedPoly<S>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &TruncatedPoly<S> {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<TruncatedPoly<S>> {
        self.components
    }

    /// Value of the underlying germ at the base point.
    pub fn value(&self) -> Vec<S> {
        self.components.iter().map(|p| p.constant_term()).collect()
    }

    /// Derivative vector `D_alpha = alpha! * coefficient(alpha)` across the
    /// output components.
    pub fn derivative(&self, alpha: &MultiIndex) -> Vec<S> {
        let fac = S::from_i64(alpha.factorial());
        self.components
            .iter()
            .map(|p| p.coeff(alpha).mul(&fac))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|p| p.is_zero())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> Jet<T> {
        Jet {
            base: self.base.iter().map(f).collect(),
            components: self.components.iter().map(|p| p.map(f)).collect(),
        }
    }

    pub fn to_f64(&self) -> Jet<f64> {
        self.map(|c| c.to_f64())
    }
}

fn check_compatible<S: Scalar>(a: &Jet<S>, b: &Jet<S>, base_tol: f64) -> Result<()> {
    if a.dim() != b.dim() || a.len_out() != b.len_out() || a.order() != b.order() {
        return Err(Error::ShapeMismatch(format!(
            "jets (m={},n={},r={}) vs (m={},n={},r={})",
            a.dim(),
            a.len_out(),
            a.order(),
            b.dim(),
            b.len_out(),
            b.order()
        )));
    }
    let dist = a
        .base
        .iter()
        .zip(&b.base)
        .map(|(x, y)| (x.to_f64() - y.to_f64()).abs())
        .fold(0.0f64, f64::max);
    if S::EXACT {
        if a.base != b.base {
            return Err(Error::BaseMismatch("exact-mode bases differ".into()));
        }
    } else if dist > base_tol {
        return Err(Error::BaseMismatch(format!(
            "base points differ by {dist} (tolerance {base_tol})"
        )));
    }
    Ok(())
}

/// Canonical linear structure: `lambda * a + mu * b` coefficientwise.
pub fn jet_combine<S: Scalar>(a: &Jet<S>, b: &Jet<S>, lambda: &S, mu: &S) -> Result<Jet<S>> {
    check_compatible(a, b, 1e-9)?;
    let components = a
        .components
        .iter()
        .zip(&b.components)
        .map(|(p, q)| p.scale(lambda).add(&q.scale(mu)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Jet {
        base: a.base.clone(),
        components,
    })
}

/// Forget homogeneous components of degree above `l`.
pub fn jet_project<S: Scalar>(s: &Jet<S>, l: usize) -> Result<Jet<S>> {
    let components = s
        .components
        .iter()
        .map(|p| p.project(l))
        .collect::<Result<Vec<_>>>()?;
    Ok(Jet {
        base: s.base.clone(),
        components,
    })
}

/// Truncated composition: the jet of `h o F` at `x`, where `outer`
/// represents `h` at `F(x)` and `inner` the components of `F` at `x`. The
/// result is consistent with the chain rule at every order up to `r`.
pub fn jet_compose<S: Scalar>(outer: &Jet<S>, inner: &[Jet<S>]) -> Result<Jet<S>> {
    if inner.is_empty() || inner.len() != outer.dim() {
        return Err(Error::ShapeMismatch(format!(
            "outer expects {} inner jets, got {}",
            outer.dim(),
            inner.len()
        )));
    }
    let x = inner[0].base.clone();
    for j in inner.iter().skip(1) {
        check_compatible(&inner[0], j, 1e-9).map_err(|_| {
            Error::BaseMismatch("inner jets must share a common base point".into())
        })?;
    }
    // The outer polynomial is centered at outer.base, which must match the
    // value vector of the inner jets.
    let tol = 1e-7;
    for (i, j) in inner.iter().enumerate() {
        let v = j.components[0].constant_term();
        let b = outer.base[i].clone();
        if S::EXACT {
            if v != b {
                return Err(Error::BaseMismatch(
                    "outer base must equal inner values (exact mode)".into(),
                ));
            }
        } else if (v.to_f64() - b.to_f64()).abs() > tol {
            return Err(Error::BaseMismatch(format!(
                "outer base component {i} ({}) does not match inner value ({})",
                b.to_f64(),
                v.to_f64()
            )));
        }
    }
    // Substitute the centered inner polynomials into each outer component.
    let centered: Vec<TruncatedPoly<S>> = inner
        .iter()
        .map(|j| {
            let p = &j.components[0];
            let c = p.constant_term();
            p.sub(&TruncatedPoly::constant(p.dim(), p.order(), c))
                .expect("same shape")
        })
        .collect();
    let components = outer
        .components
        .iter()
        .map(|p| p.substitute(&centered))
        .collect::<Result<Vec<_>>>()?;
    Ok(Jet {
        base: x,
        components,
    })
}

/// `c0` and (optionally) `perp` norms of a float jet.
///
/// `c0` is the max over `|alpha| <= r` of the Euclidean norm across output
/// components of the derivative vector `D_alpha`. `perp`, requested by
/// passing the unit co-normal `u` of the hyperplane `tau = u^perp`, is the
/// max over `|alpha| < r` of the largest singular value of the derivative
/// gradient restricted to `tau`, i.e. `sup ||d_nu d_alpha h||` over unit
/// `nu` in `tau`.
pub fn jet_norms(s: &Jet<f64>, conormal: Option<&[f64]>) -> Result<JetNorms> {
    let m = s.dim();
    let r = s.order();
    let idx = enumerate_multiindices(m, r);
    let mut c0 = 0.0f64;
    for alpha in &idx {
        let d = s.derivative(alpha);
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        c0 = c0.max(norm);
    }
    let perp = match conormal {
        None => None,
        Some(u) => {
            if u.len() != m {
                return Err(Error::ShapeMismatch(
                    "co-normal dimension must match the jet".into(),
                ));
            }
            let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (nu - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidArgument(format!(
                    "co-normal must be a unit vector (norm {nu})"
                )));
            }
            let n = s.len_out();
            let mut worst = 0.0f64;
            for alpha in &idx {
                if alpha.order() as usize >= r {
                    continue;
                }
                // Gradient matrix G with G[c][j] = D_{alpha+e_j} component c,
                // projected onto tau = u^perp.
                let mut g = DMatrix::<f64>::zeros(n, m);
                for j in 0..m {
                    let d = s.derivative(&alpha.bump(j));
                    for (c, v) in d.iter().enumerate() {
                        g[(c, j)] = *v;
                    }
                }
                // G P_tau = G (I - u u^T)
                let gu = &g * DMatrix::from_column_slice(m, 1, u);
                let proj = &g - &gu * DMatrix::from_row_slice(1, m, u);
                let sv = proj.svd(false, false);
                let top = sv.singular_values.iter().cloned().fold(0.0, f64::max);
                worst = worst.max(top);
            }
            Some(worst)
        }
    };
    Ok(JetNorms { c0, perp })
}

/// Jet distance in the `c0` norm: both jets recentered at `a`'s base are
/// compared derivative-by-derivative. Bases must agree to tolerance.
pub fn jet_distance_c0(a: &Jet<f64>, b: &Jet<f64>) -> Result<f64> {
    check_compatible(a, b, 1e-7)?;
    let diff = jet_combine(a, b, &1.0, &-1.0)?;
    Ok(jet_norms(&diff, None)?.c0)
}

/// Serialized form: `{m, n, r, base, coeffs}` with coefficients per
/// component in graded-lex order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JetJson {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub base: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

impl From<&Jet<f64>> for JetJson {
    fn from(jet: &Jet<f64>) -> Self {
        JetJson {
            m: jet.dim(),
            n: jet.len_out(),
            r: jet.order(),
            base: jet.base.clone(),
            coeffs: jet
                .components
                .iter()
                .map(|p| p.coeffs().to_vec())
                .collect(),
        }
    }
}

impl TryFrom<&JetJson> for Jet<f64> {
    type Error = Error;

    fn try_from(j: &JetJson) -> Result<Jet<f64>> {
        if j.base.len() != j.m || j.coeffs.len() != j.n {
            return Err(Error::ShapeMismatch("jet JSON shape".into()));
        }
        let components = j
            .coeffs
            .iter()
            .map(|c| {
                if c.len() != crate::polyjet::multiindex::basis_len(j.m, j.r) {
                    Err(Error::ShapeMismatch("jet JSON coefficient length".into()))
                } else {
                    Ok(TruncatedPoly::from_coeffs(j.m, j.r, c.clone()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Jet::new(j.base.clone(), components)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyjet::scalar::Rat;

    fn jet_of_x1x2_at(base: Vec<f64>) -> Jet<f64> {
        // Germ y1*y2 centered at (x1, x2): (X1+x1)(X2+x2)
        let m = 2;
        let r = 2;
        let p1 = TruncatedPoly::linear(m, r, 0, base[0]);
        let p2 = TruncatedPoly::linear(m, r, 1, base[1]);
        Jet::new(base, vec![p1.mul(&p2).unwrap()]).unwrap()
    }

    #[test]
    fn combine_cancels_and_scales() {
        let a = jet_of_x1x2_at(vec![1.0, 2.0]);
        let z = jet_combine(&a, &a, &1.0, &-1.0).unwrap();
        assert!(z.is_zero());
        let zero = Jet::zero(2, 1, 2, vec![1.0, 2.0]);
        let d = jet_combine(&a, &zero, &2.0, &0.0).unwrap();
        assert_eq!(
            d.component(0).coeff(&MultiIndex(vec![1, 1])),
            2.0 * a.component(0).coeff(&MultiIndex(vec![1, 1]))
        );
    }

    #[test]
    fn combine_rejects_mismatched_bases() {
        let a = jet_of_x1x2_at(vec![1.0, 2.0]);
        let b = jet_of_x1x2_at(vec![0.0, 0.0]);
        assert!(jet_combine(&a, &b, &1.0, &1.0).is_err());
    }

    #[test]
    fn project_identity_and_constant() {
        let a = jet_of_x1x2_at(vec![1.0, 2.0]);
        let same = jet_project(&a, 2).unwrap();
        assert_eq!(same, a);
        let c = jet_project(&a, 0).unwrap();
        assert_eq!(c.component(0).constant_term(), 2.0);
        assert_eq!(c.order(), 0);
    }

    #[test]
    fn projection_collapses() {
        // p^l_k o p^r_l = p^r_k for k <= l <= r.
        let a = jet_of_x1x2_at(vec![0.5, -0.25]);
        for l in 0..=2usize {
            for k in 0..=l {
                let two_step = jet_project(&jet_project(&a, l).unwrap(), k).unwrap();
                let one_step = jet_project(&a, k).unwrap();
                assert_eq!(two_step, one_step);
            }
        }
    }

    #[test]
    fn compose_with_identity_germs() {
        let a = jet_of_x1x2_at(vec![1.0, 2.0]);
        let id: Vec<Jet<f64>> = (0..2)
            .map(|i| {
                Jet::new(
                    vec![1.0, 2.0],
                    vec![TruncatedPoly::linear(2, 2, i, a.base()[i])],
                )
                .unwrap()
            })
            .collect();
        let c = jet_compose(&a, &id).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn compose_square_of_sum() {
        // outer u -> u^2 at 0, inner y1+y2 at 0, r = 2.
        let outer = Jet::new(
            vec![Rat::zero()],
            vec![TruncatedPoly::linear(1, 2, 0, Rat::zero())
                .pow(2)
                .unwrap()],
        )
        .unwrap();
        let inner = Jet::new(
            vec![Rat::zero(), Rat::zero()],
            vec![TruncatedPoly::linear(2, 2, 0, Rat::zero())
                .add(&TruncatedPoly::linear(2, 2, 1, Rat::zero()))
                .unwrap()],
        )
        .unwrap();
        let c = jet_compose(&outer, &[inner]).unwrap();
        assert_eq!(c.component(0).coeff(&MultiIndex(vec![2, 0])), Rat::from_i64(1));
        assert_eq!(c.component(0).coeff(&MultiIndex(vec![1, 1])), Rat::from_i64(2));
        assert_eq!(c.component(0).coeff(&MultiIndex(vec![0, 2])), Rat::from_i64(1));
    }

    #[test]
    fn norms_of_y1_squared() {
        // Jet of y1^2 at 0 (r=2, m=2): c0 = 2 via D_(2,0), perp = 0 for
        // tau = ker dy1 (hand enumeration of the derivatives).
        let mut p = TruncatedPoly::zero(2, 2);
        p.set_coeff(&MultiIndex(vec![2, 0]), 1.0);
        let jet = Jet::new(vec![0.0, 0.0], vec![p]).unwrap();
        let norms = jet_norms(&jet, Some(&[1.0, 0.0])).unwrap();
        assert_eq!(norms.c0, 2.0);
        assert!(norms.perp.unwrap().abs() < 1e-12);
    }

    #[test]
    fn norms_of_y1y2_detect_mixed_derivative() {
        // Jet of y1*y2 at 0: perp w.r.t. tau = ker dy1 picks up d2 d1 = 1.
        let jet = jet_of_x1x2_at(vec![0.0, 0.0]);
        let norms = jet_norms(&jet, Some(&[1.0, 0.0])).unwrap();
        assert!((norms.perp.unwrap() - 1.0).abs() < 1e-12);
        // Sign flip of u leaves perp unchanged.
        let flipped = jet_norms(&jet, Some(&[-1.0, 0.0])).unwrap();
        assert!((norms.perp.unwrap() - flipped.perp.unwrap()).abs() < 1e-14);
    }

    #[test]
    fn norms_reject_non_unit_conormal() {
        let jet = jet_of_x1x2_at(vec![0.0, 0.0]);
        assert!(jet_norms(&jet, Some(&[1.0, 1.0])).is_err());
    }
}
