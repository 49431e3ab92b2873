//! Primitive sections, the power-sum decomposition of top-order sections,
//! and jet pullback/pushforward along diffeomorphisms.
//!
//! A section with vanishing `(r-1)`-jet component is, pointwise, a
//! homogeneous degree-`r` polynomial. The subset identity
//! `X_1 ... X_r = (-1)^r/r! * sum_U (-1)^{|U|} (sum_{u in U} X_u)^r`
//! rewrites every monomial as a combination of pure `r`-th powers of
//! linear forms, each of which is primitive with respect to the constant
//! hyperplane field annihilated by that form.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::lingeo::Conormal;
use crate::polyjet::expr::Expr;
use crate::polyjet::jet::{jet_compose, Jet};
use crate::polyjet::multiindex::{factorial, MultiIndex};
use crate::polyjet::poly::TruncatedPoly;
use crate::polyjet::scalar::Scalar;
use crate::polyjet::section::{section_cr_norm, JetField};

// --- power-sum expansion ---------------------------------------------------

/// Expand `(X_{beta_1} + ... + X_{beta_k})^r` into monomial coefficients,
/// exactly. `beta` lists axis labels (0-based, repetitions allowed).
pub fn power_sum_expand<S: Scalar>(beta: &[usize], r: usize, m: usize) -> Result<TruncatedPoly<S>> {
    if beta.is_empty() || beta.len() > r {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= |beta| <= r, got |beta| = {}",
            beta.len()
        )));
    }
    if beta.iter().any(|&b| b >= m) {
        return Err(Error::InvalidArgument("beta label out of range".into()));
    }
    let mut lin = TruncatedPoly::<S>::zero(m, r);
    let mut counts = vec![0i64; m];
    for &b in beta {
        counts[b] += 1;
    }
    for (axis, &c) in counts.iter().enumerate() {
        if c != 0 {
            lin.set_coeff(&MultiIndex::unit(m, axis), S::from_i64(c));
        }
    }
    lin.pow(r as u32)
}

// --- top-order sections and their decomposition ----------------------------

/// A section with vanishing `(r-1)`-jet component: pointwise the
/// homogeneous degree-`r` polynomial `sum_alpha a_alpha(x) X^alpha`, with
/// one coefficient field per monomial and output component.
#[derive(Debug, Clone)]
pub struct TopOrderSection<S> {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// Coefficient fields keyed by degree-`r` exponent vectors; monomials
    /// not listed are zero.
    pub coeffs: Vec<(MultiIndex, Vec<Expr<S>>)>,
}

impl<S: Scalar> TopOrderSection<S> {
    pub fn new(
        m: usize,
        n: usize,
        r: usize,
        coeffs: Vec<(MultiIndex, Vec<Expr<S>>)>,
    ) -> Result<Self> {
        for (alpha, fields) in &coeffs {
            if alpha.dim() != m || alpha.order() as usize != r {
                return Err(Error::InvalidArgument(
                    "top-order coefficients must have degree exactly r".into(),
                ));
            }
            if fields.len() != n {
                return Err(Error::ShapeMismatch(
                    "coefficient field count must equal n".into(),
                ));
            }
        }
        Ok(TopOrderSection { m, n, r, coeffs })
    }

    /// The homogeneous polynomial at `x`, per output component.
    pub fn polynomial_at(&self, x: &[S]) -> Result<Vec<TruncatedPoly<S>>> {
        let mut out = vec![TruncatedPoly::zero(self.m, self.r); self.n];
        for (alpha, fields) in &self.coeffs {
            for (c, field) in fields.iter().enumerate() {
                let a = field.eval(x)?;
                if !a.is_zero() {
                    out[c].add_to_coeff(alpha, &a);
                }
            }
        }
        Ok(out)
    }
}

/// One primitive summand `sigma_beta`: the jet field
/// `x -> v(x) * <y - x, g>^r` with the constant (integer) co-normal
/// `g = e_{beta_1} + ... + e_{beta_k}`. Keeping `g` unnormalized keeps the
/// exact-mode recombination closed under rational arithmetic; the unit
/// co-normal is `g / |g|`.
#[derive(Debug, Clone)]
pub struct PrimitiveTerm<S> {
    /// Sorted axis labels (0-based) with repetitions.
    pub beta: Vec<usize>,
    /// Per-axis multiplicities of `beta`, i.e. the co-normal `g`.
    pub conormal: Vec<i64>,
    /// Coefficient fields, one per output component.
    pub v: Vec<Expr<S>>,
}

impl<S: Scalar> PrimitiveTerm<S> {
    pub fn power_sum(&self, m: usize, r: usize) -> Result<TruncatedPoly<S>> {
        power_sum_expand(&self.beta, r, m)
    }

    pub fn unit_conormal(&self) -> Vec<f64> {
        let norm = self
            .conormal
            .iter()
            .map(|&g| (g * g) as f64)
            .sum::<f64>()
            .sqrt();
        self.conormal.iter().map(|&g| g as f64 / norm).collect()
    }
}

/// Decomposition report entry, serialized per the external interface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionEntry {
    /// 1-based labels, matching the written form `tau_beta`.
    pub beta: Vec<usize>,
    pub conormal: Vec<f64>,
    pub v_expression: Vec<serde_json::Value>,
}

/// Decompose a top-order section into primitive summands, one per
/// sub-multiset `beta` of the labels of the occurring monomials. Redundant
/// parallel terms are kept separate; [`merge_parallel_terms`] is the
/// optional normalization pass.
pub fn decompose_top_order<S: Scalar>(sec: &TopOrderSection<S>) -> Result<Vec<PrimitiveTerm<S>>> {
    let r = sec.r;
    let rfac = factorial(r as i64);
    // For each beta: the list of (rational weight, alpha position).
    let mut groups: BTreeMap<Vec<usize>, Vec<(S, usize)>> = BTreeMap::new();
    for (pos, (alpha, _)) in sec.coeffs.iter().enumerate() {
        // Label tuple of the monomial, e.g. exponents (2,1) -> [0,0,1].
        let mut labels = Vec::with_capacity(r);
        for (axis, &e) in alpha.0.iter().enumerate() {
            for _ in 0..e {
                labels.push(axis);
            }
        }
        debug_assert_eq!(labels.len(), r);
        // Subsets of positions; equal-content subsets accumulate weight.
        let mut multiplicity: BTreeMap<Vec<usize>, i64> = BTreeMap::new();
        for mask in 1u32..(1 << r) {
            let mut beta: Vec<usize> = (0..r)
                .filter(|&p| mask & (1 << p) != 0)
                .map(|p| labels[p])
                .collect();
            beta.sort_unstable();
            *multiplicity.entry(beta).or_insert(0) += 1;
        }
        for (beta, mult) in multiplicity {
            let k = beta.len();
            let sign = if (r + k) % 2 == 0 { 1 } else { -1 };
            let weight = S::from_ratio(sign * mult, rfac);
            groups.entry(beta).or_default().push((weight, pos));
        }
    }
    let mut terms = Vec::with_capacity(groups.len());
    for (beta, weights) in groups {
        let mut conormal = vec![0i64; sec.m];
        for &b in &beta {
            conormal[b] += 1;
        }
        let v = (0..sec.n)
            .map(|c| {
                let summands: Vec<Expr<S>> = weights
                    .iter()
                    .map(|(w, pos)| Expr::scale(w.clone(), sec.coeffs[*pos].1[c].clone()))
                    .collect();
                if summands.len() == 1 {
                    summands.into_iter().next().unwrap()
                } else {
                    Expr::add(summands)
                }
            })
            .collect();
        terms.push(PrimitiveTerm { beta, conormal, v });
    }
    Ok(terms)
}

/// Sum of the primitive summands at `x`: must reproduce the top-order
/// polynomial exactly in exact mode.
pub fn recombine_at<S: Scalar>(
    terms: &[PrimitiveTerm<S>],
    m: usize,
    n: usize,
    r: usize,
    x: &[S],
) -> Result<Vec<TruncatedPoly<S>>> {
    let mut out = vec![TruncatedPoly::zero(m, r); n];
    for term in terms {
        let ps = term.power_sum(m, r)?;
        for (c, slot) in out.iter_mut().enumerate() {
            let w = term.v[c].eval(x)?;
            if !w.is_zero() {
                *slot = slot.add(&ps.scale(&w))?;
            }
        }
    }
    Ok(out)
}

/// Merge terms whose co-normals are parallel (the redundancy noted in the
/// decomposition): parallel `g`'s describe the same hyperplane, so their
/// contributions combine into one term over the shortest integer co-normal
/// in the class, rescaling `v` by the `r`-th power of the shortening.
pub fn merge_parallel_terms<S: Scalar>(
    terms: Vec<PrimitiveTerm<S>>,
    r: usize,
) -> Vec<PrimitiveTerm<S>> {
    let mut classes: BTreeMap<Vec<i64>, Vec<PrimitiveTerm<S>>> = BTreeMap::new();
    for t in terms {
        let gcd = t
            .conormal
            .iter()
            .fold(0i64, |acc, &g| num::integer::gcd(acc, g.abs()));
        let dir: Vec<i64> = t.conormal.iter().map(|&g| g / gcd.max(1)).collect();
        classes.entry(dir).or_default().push(t);
    }
    classes
        .into_iter()
        .map(|(dir, group)| {
            let n = group[0].v.len();
            let beta = rep_beta(&dir);
            let v: Vec<Expr<S>> = (0..n)
                .map(|c| {
                    let parts: Vec<Expr<S>> = group
                        .iter()
                        .map(|t| rescaled_component(t, c, &dir, r))
                        .collect();
                    if parts.len() == 1 {
                        parts.into_iter().next().unwrap()
                    } else {
                        Expr::add(parts)
                    }
                })
                .collect();
            PrimitiveTerm {
                beta,
                conormal: dir,
                v,
            }
        })
        .collect()
}

fn rep_beta(dir: &[i64]) -> Vec<usize> {
    let mut beta = Vec::new();
    for (axis, &g) in dir.iter().enumerate() {
        for _ in 0..g.abs() {
            beta.push(axis);
        }
    }
    beta
}

fn rescaled_component<S: Scalar>(
    term: &PrimitiveTerm<S>,
    c: usize,
    dir: &[i64],
    r: usize,
) -> Expr<S> {
    // term.conormal = shorten * dir; <., g>^r = shorten^r <., dir>^r.
    let shorten = term
        .conormal
        .iter()
        .zip(dir)
        .find(|(_, &d)| d != 0)
        .map(|(&gi, &d)| gi / d)
        .unwrap_or(1);
    if shorten == 1 {
        term.v[c].clone()
    } else {
        Expr::scale(S::from_i64(shorten.pow(r as u32)), term.v[c].clone())
    }
}

// --- runtime primitive sections --------------------------------------------

/// A primitive section in evaluable form: `sigma(x)` is the `r`-jet of
/// `y -> <y - x, g(x)>^r * v(x)`, with `g` the (not necessarily unit)
/// co-normal generator.
#[derive(Clone)]
pub struct PrimitiveSection {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub v: Arc<dyn JetField>,
    pub conormal: Conormal,
    /// Declared margin: `v = 0` within this distance of the boundary.
    pub support_margin: f64,
}

impl PrimitiveSection {
    pub fn new(
        m: usize,
        n: usize,
        r: usize,
        v: Arc<dyn JetField>,
        conormal: Conormal,
        support_margin: f64,
    ) -> Result<Self> {
        if v.dim() != m || v.len_out() != n {
            return Err(Error::ShapeMismatch("v field shape".into()));
        }
        Ok(PrimitiveSection {
            m,
            n,
            r,
            v,
            conormal,
            support_margin,
        })
    }

    pub fn raw_conormal_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.conormal {
            Conormal::Constant(u) => Ok(u.clone()),
            Conormal::Field(f) => f.iter().map(|e| e.eval(x)).collect(),
        }
    }

    pub fn unit_conormal_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw = self.raw_conormal_at(x)?;
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Domain(format!("co-normal vanishes at {x:?}")));
        }
        Ok(raw.iter().map(|v| v / norm).collect())
    }

    /// The jet of the section at `x` (the defining germ, `v` frozen at `x`).
    pub fn jet_at(&self, x: &[f64]) -> Result<Jet<f64>> {
        let g = self.raw_conormal_at(x)?;
        if g.iter().map(|c| c * c).sum::<f64>() < 1e-24 {
            return Err(Error::Domain("zero co-normal".into()));
        }
        let mut lin = TruncatedPoly::<f64>::zero(self.m, self.r);
        for (axis, &c) in g.iter().enumerate() {
            if c != 0.0 {
                lin.set_coeff(&MultiIndex::unit(self.m, axis), c);
            }
        }
        let lin_r = lin.pow(self.r as u32)?;
        let values = self.v.value(x)?;
        let components = values.iter().map(|&w| lin_r.scale(&w)).collect();
        Jet::new(x.to_vec(), components)
    }

    /// Two-point `C^r` norm over a grid; the co-normal is unit-normalized
    /// so the norm matches the defining germ family `<y-x, u_x>^r v`.
    pub fn cr_norm(&self, spec: &GridSpec, lo: &[f64], hi: &[f64]) -> Result<f64> {
        match &self.conormal {
            Conormal::Constant(g) => {
                let norm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm < 1e-12 {
                    return Err(Error::Domain("zero co-normal".into()));
                }
                let scaled = ScaledField {
                    inner: self.v.clone(),
                    factor: norm.powi(self.r as i32),
                };
                let unit = Conormal::Constant(g.iter().map(|c| c / norm).collect());
                section_cr_norm(&scaled, &unit, self.r, spec, lo, hi)
            }
            Conormal::Field(f) => section_cr_norm(
                self.v.as_ref(),
                &Conormal::Field(f.clone()),
                self.r,
                spec,
                lo,
                hi,
            ),
        }
    }

    /// Verify the declared support margin by sampling the margin shell.
    pub fn check_support_margin(&self, samples: usize) -> Result<()> {
        let m = self.m;
        let margin = self.support_margin;
        if margin <= 0.0 {
            return Err(Error::SupportMargin("margin must be positive".into()));
        }
        for axis in 0..m {
            for side in [-1.0f64, 1.0] {
                let spec = GridSpec::cubic(m, samples.max(3));
                let mut lo = vec![-1.0; m];
                let mut hi = vec![1.0; m];
                if side > 0.0 {
                    lo[axis] = 1.0 - margin;
                } else {
                    hi[axis] = -1.0 + margin;
                }
                for x in spec.points(&lo, &hi) {
                    let val = self.v.value(&x)?;
                    let norm = val.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 1e-12 {
                        return Err(Error::SupportMargin(format!(
                            "v = {norm:.3e} at {x:?} inside the declared margin {margin}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `v` multiplied by a constant factor.
pub struct ScaledField {
    pub inner: Arc<dyn JetField>,
    pub factor: f64,
}

impl JetField for ScaledField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn len_out(&self) -> usize {
        self.inner.len_out()
    }
    fn jet(&self, x: &[f64], r: usize) -> Result<Jet<f64>> {
        let jet = self.inner.jet(x, r)?;
        let components = jet
            .components()
            .iter()
            .map(|p| p.scale(&self.factor))
            .collect();
        Jet::new(x.to_vec(), components)
    }
}

/// Free-function form of the defining-germ jet.
pub fn primitive_section_jet(sec: &PrimitiveSection, x: &[f64]) -> Result<Jet<f64>> {
    sec.jet_at(x)
}

// --- diffeomorphisms, pullback and pushforward ------------------------------

/// A diffeomorphism given by closed-form coordinate maps, with an optional
/// closed-form inverse and a validity box.
#[derive(Debug, Clone)]
pub struct Diffeo {
    pub m: usize,
    pub forward: Vec<Expr<f64>>,
    pub inverse: Option<Vec<Expr<f64>>>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Diffeo {
    pub fn new(m: usize, forward: Vec<Expr<f64>>, inverse: Option<Vec<Expr<f64>>>) -> Self {
        Diffeo {
            m,
            forward,
            inverse,
            lo: vec![-1.0; m],
            hi: vec![1.0; m],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward.iter().map(|e| e.eval(x)).collect()
    }

    pub fn apply_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        match &self.inverse {
            Some(inv) => inv.iter().map(|e| e.eval(y)).collect(),
            None => Err(Error::InvalidArgument(
                "diffeo has no stored inverse maps".into(),
            )),
        }
    }

    pub fn forward_jet(&self, x: &[f64], r: usize) -> Result<Jet<f64>> {
        crate::polyjet::expr::taylor_evaluate(&self.forward, x, r)
    }

    /// Sample check: nonsingular Jacobian, and `F^{-1} o F = id` when an
    /// inverse is stored.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let spec = GridSpec::cubic(self.m, samples.max(2));
        for x in spec.points(&self.lo, &self.hi) {
            let jet = self.forward_jet(&x, 1)?;
            let jac = jacobian_from_jet(&jet);
            let det = nalgebra::DMatrix::from_row_slice(self.m, self.m, &jac).determinant();
            if det.abs() < 1e-10 {
                return Err(Error::SingularJacobian);
            }
            if self.inverse.is_some() {
                let y = self.apply(&x)?;
                let back = self.apply_inverse(&y)?;
                let err = back
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if err > 1e-8 {
                    return Err(Error::InvalidArgument(format!(
                        "stored inverse disagrees with forward map by {err:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn jacobian_from_jet(jet: &Jet<f64>) -> Vec<f64> {
    let m = jet.dim();
    let mut jac = Vec::with_capacity(m * m);
    for comp in jet.components() {
        for axis in 0..m {
            jac.push(comp.coeff(&MultiIndex::unit(m, axis)));
        }
    }
    jac
}

/// Split a vector-valued jet into single-component jets (the shape
/// `jet_compose` takes for inner maps).
pub fn split_components<S: Scalar>(jet: &Jet<S>) -> Vec<Jet<S>> {
    jet.components()
        .iter()
        .map(|p| Jet::new(jet.base().to_vec(), vec![p.clone()]).expect("component jet"))
        .collect()
}

/// Exact inverse of a small matrix over the scalar ring.
fn invert_matrix<S: Scalar>(a: &[Vec<S>]) -> Result<Vec<Vec<S>>> {
    let n = a.len();
    let mut work: Vec<Vec<S>> = a.to_vec();
    let mut inv: Vec<Vec<S>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { S::one() } else { S::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                work[i][col]
                    .to_f64()
                    .abs()
                    .partial_cmp(&work[j][col].to_f64().abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if work[pivot][col].is_zero() {
            return Err(Error::SingularJacobian);
        }
        work.swap(col, pivot);
        inv.swap(col, pivot);
        let d = work[col][col].clone();
        for j in 0..n {
            work[col][j] = work[col][j].div(&d)?;
            inv[col][j] = inv[col][j].div(&d)?;
        }
        for i in 0..n {
            if i == col || work[i][col].is_zero() {
                continue;
            }
            let f = work[i][col].clone();
            for j in 0..n {
                work[i][j] = work[i][j].sub(&f.mul(&work[col][j]));
                inv[i][j] = inv[i][j].sub(&f.mul(&inv[col][j]));
            }
        }
    }
    Ok(inv)
}

/// Compositional inverse of a map jet: given the jet of `F` at `x` with an
/// invertible Jacobian, the jet of `F^{-1}` at `F(x)`. Each sweep corrects
/// one further order of `G o F = id`.
pub fn jet_inverse<S: Scalar>(forward: &Jet<S>) -> Result<Jet<S>> {
    let m = forward.dim();
    if forward.len_out() != m {
        return Err(Error::ShapeMismatch("map jet must be square".into()));
    }
    let r = forward.order();
    let y: Vec<S> = forward.value();
    // Centered forward components P with P(0) = 0.
    let p: Vec<TruncatedPoly<S>> = forward
        .components()
        .iter()
        .map(|c| {
            let k = c.constant_term();
            c.sub(&TruncatedPoly::constant(m, r, k)).expect("shape")
        })
        .collect();
    let a: Vec<Vec<S>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| p[i].coeff(&MultiIndex::unit(m, j)))
                .collect()
        })
        .collect();
    let a_inv = invert_matrix(&a)?;
    let lin_inv: Vec<TruncatedPoly<S>> = (0..m)
        .map(|i| {
            let mut q = TruncatedPoly::zero(m, r);
            for j in 0..m {
                if !a_inv[i][j].is_zero() {
                    q.set_coeff(&MultiIndex::unit(m, j), a_inv[i][j].clone());
                }
            }
            q
        })
        .collect();
    let mut g = lin_inv.clone();
    for _ in 2..=r {
        // E = G o P - id vanishes to the corrected order; subtracting
        // E o A^{-1} advances one order.
        let e: Vec<TruncatedPoly<S>> = (0..m)
            .map(|i| {
                let composed = g[i].substitute(&p)?;
                let mut id = TruncatedPoly::zero(m, r);
                id.set_coeff(&MultiIndex::unit(m, i), S::one());
                composed.sub(&id)
            })
            .collect::<Result<Vec<_>>>()?;
        for i in 0..m {
            let corr = e[i].substitute(&lin_inv)?;
            g[i] = g[i].sub(&corr)?;
        }
    }
    // F^{-1}(y) = x goes in as the constant terms.
    let x = forward.base();
    let components: Vec<TruncatedPoly<S>> = (0..m)
        .map(|i| {
            g[i].add(&TruncatedPoly::constant(m, r, x[i].clone()))
                .expect("shape")
        })
        .collect();
    Jet::new(y, components)
}

/// Pullback `F^*`: the jet at `x` of `h o F`, where `s` is the jet of `h`
/// at `F(x)`. The caller provides `x`; `F(x)` must match `s.base`.
pub fn jet_pullback(f: &Diffeo, s: &Jet<f64>, x: &[f64]) -> Result<Jet<f64>> {
    let r = s.order();
    let jf = f.forward_jet(x, r)?;
    let y = jf.value();
    let err = y
        .iter()
        .zip(s.base())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if err > 1e-7 {
        return Err(Error::BaseMismatch(format!(
            "F(x) differs from the jet base by {err:.3e}"
        )));
    }
    jet_compose(s, &split_components(&jf))
}

/// Pushforward `F_* = (F^{-1})^*`: the jet at `F(x)` of `h o F^{-1}`,
/// where `s` is the jet of `h` at `x`. Uses the compositional inverse of
/// the forward jet, so no closed-form inverse is required.
pub fn jet_pushforward(f: &Diffeo, s: &Jet<f64>, x: &[f64]) -> Result<Jet<f64>> {
    let r = s.order();
    let jf = f.forward_jet(x, r)?;
    let err = jf
        .base()
        .iter()
        .zip(s.base())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if err > 1e-7 {
        return Err(Error::BaseMismatch("s must be based at x".into()));
    }
    let jinv = jet_inverse(&jf)?;
    jet_compose(s, &split_components(&jinv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyjet::scalar::Rat;

    fn mi(v: Vec<u32>) -> MultiIndex {
        MultiIndex(v)
    }

    #[test]
    fn power_sum_binomial() {
        // beta = (X1, X2), r = 2, m = 2: X1^2 + 2 X1 X2 + X2^2.
        let p: TruncatedPoly<Rat> = power_sum_expand(&[0, 1], 2, 2).unwrap();
        assert_eq!(p.coeff(&mi(vec![2, 0])), Rat::from_i64(1));
        assert_eq!(p.coeff(&mi(vec![1, 1])), Rat::from_i64(2));
        assert_eq!(p.coeff(&mi(vec![0, 2])), Rat::from_i64(1));
    }

    #[test]
    fn power_sum_single_label() {
        let p: TruncatedPoly<Rat> = power_sum_expand(&[0], 3, 2).unwrap();
        assert_eq!(p.coeff(&mi(vec![3, 0])), Rat::from_i64(1));
        assert!(p.coeff(&mi(vec![2, 1])).is_zero());
    }

    #[test]
    fn power_sum_identity_for_x1x2() {
        // (1/2)[(X1+X2)^2 - X1^2 - X2^2] = X1 X2, exactly.
        let both: TruncatedPoly<Rat> = power_sum_expand(&[0, 1], 2, 2).unwrap();
        let first: TruncatedPoly<Rat> = power_sum_expand(&[0], 2, 2).unwrap();
        let second: TruncatedPoly<Rat> = power_sum_expand(&[1], 2, 2).unwrap();
        let combo = both
            .sub(&first)
            .unwrap()
            .sub(&second)
            .unwrap()
            .scale(&Rat::from_ratio(1, 2));
        let mut expected = TruncatedPoly::<Rat>::zero(2, 2);
        expected.set_coeff(&mi(vec![1, 1]), Rat::from_i64(1));
        assert_eq!(combo, expected);
    }

    fn const_top_order(
        m: usize,
        r: usize,
        entries: Vec<(Vec<u32>, i64, i64)>,
    ) -> TopOrderSection<Rat> {
        let coeffs = entries
            .into_iter()
            .map(|(e, num, den)| {
                (
                    MultiIndex(e),
                    vec![Expr::constant(Rat::from_ratio(num, den))],
                )
            })
            .collect();
        TopOrderSection::new(m, 1, r, coeffs).unwrap()
    }

    #[test]
    fn decompose_fig7_polynomial() {
        // p = x^2 - y^2: recombination exact; merged by direction it is
        // exactly the two-term form x^2 + (-y^2).
        let sec = const_top_order(2, 2, vec![(vec![2, 0], 1, 1), (vec![0, 2], -1, 1)]);
        let terms = decompose_top_order(&sec).unwrap();
        let x = [Rat::zero(), Rat::zero()];
        let rec = recombine_at(&terms, 2, 1, 2, &x).unwrap();
        let expected = sec.polynomial_at(&x).unwrap();
        assert_eq!(rec, expected);
        let merged = merge_parallel_terms(terms, 2);
        assert_eq!(merged.len(), 2);
        let rec2 = recombine_at(&merged, 2, 1, 2, &x).unwrap();
        assert_eq!(rec2, expected);
        for t in &merged {
            let w = t.v[0].eval(&x).unwrap();
            if t.conormal == vec![1, 0] {
                assert_eq!(w, Rat::from_i64(1));
            } else {
                assert_eq!(t.conormal, vec![0, 1]);
                assert_eq!(w, Rat::from_i64(-1));
            }
        }
    }

    #[test]
    fn decompose_cross_term() {
        // p = X1 X2 = (1/2)(X1+X2)^2 - (1/2)X1^2 - (1/2)X2^2.
        let sec = const_top_order(2, 2, vec![(vec![1, 1], 1, 1)]);
        let terms = decompose_top_order(&sec).unwrap();
        assert_eq!(terms.len(), 3);
        let x = [Rat::zero(), Rat::zero()];
        for t in &terms {
            let w = t.v[0].eval(&x).unwrap();
            match t.beta.as_slice() {
                [0, 1] => assert_eq!(w, Rat::from_ratio(1, 2)),
                [0] | [1] => assert_eq!(w, Rat::from_ratio(-1, 2)),
                other => panic!("unexpected beta {other:?}"),
            }
        }
        let rec = recombine_at(&terms, 2, 1, 2, &x).unwrap();
        assert_eq!(rec, sec.polynomial_at(&x).unwrap());
    }

    #[test]
    fn decompose_pure_power_hits_stirling_identity() {
        // p = X1^r: recombines through the exact summation
        // sum_j (-1)^{r+j} C(r,j) j^r / r! = 1.
        for r in 1..=4usize {
            let e = {
                let mut v = vec![0u32; 2];
                v[0] = r as u32;
                v
            };
            let sec = const_top_order(2, r, vec![(e, 1, 1)]);
            let terms = decompose_top_order(&sec).unwrap();
            let x = [Rat::zero(), Rat::zero()];
            let rec = recombine_at(&terms, 2, 1, r, &x).unwrap();
            assert_eq!(rec, sec.polynomial_at(&x).unwrap(), "r = {r}");
            let mut total = Rat::zero();
            for j in 1..=r as i64 {
                let c = crate::polyjet::multiindex::binomial(r, j as usize) as i64;
                let sign = if (r as i64 + j) % 2 == 0 { 1 } else { -1 };
                let jr = (0..r).fold(1i64, |acc, _| acc * j);
                total = total.add(&Rat::from_ratio(sign * c * jr, factorial(r as i64)));
            }
            assert_eq!(total, Rat::from_i64(1), "identity at r = {r}");
        }
    }

    #[test]
    fn term_count_depends_only_on_shape() {
        use crate::polyjet::multiindex::enumerate_multiindices;
        let m = 2;
        let r = 3;
        let all: Vec<MultiIndex> = enumerate_multiindices(m, r)
            .into_iter()
            .filter(|a| a.order() as usize == r)
            .collect();
        let mut counts = std::collections::HashSet::new();
        for seed in 1..=5i64 {
            let coeffs = all
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    (
                        a.clone(),
                        vec![Expr::constant(Rat::from_ratio(seed + i as i64, 7))],
                    )
                })
                .collect();
            let sec = TopOrderSection::new(m, 1, r, coeffs).unwrap();
            counts.insert(decompose_top_order(&sec).unwrap().len());
        }
        assert_eq!(counts.len(), 1);
    }

    #[test]
    fn affine_pullback_recenters() {
        // F = translation: derivatives unchanged for polynomial h.
        let shift = Expr::add(vec![Expr::coord(0), Expr::constant(0.25)]);
        let f = Diffeo::new(2, vec![shift, Expr::coord(1)], None);
        let x = [0.5, -0.25];
        let y = f.apply(&x).unwrap();
        let h = Expr::add(vec![Expr::powi(Expr::coord(0), 2), Expr::coord(1)]);
        let s = Jet::new(y.clone(), vec![Expr::eval_jet(&h, &y, 3).unwrap()]).unwrap();
        let pulled = jet_pullback(&f, &s, &x).unwrap();
        for alpha in crate::polyjet::multiindex::enumerate_multiindices(2, 3) {
            let a = s.derivative(&alpha)[0];
            let b = pulled.derivative(&alpha)[0];
            assert!((a - b).abs() < 1e-12, "alpha {:?}", alpha.0);
        }
    }

    #[test]
    fn scaling_pullback_scales_derivatives() {
        // F = lambda * id: D_alpha scales by lambda^{|alpha|}.
        let lam = 0.5;
        let f = Diffeo::new(
            2,
            vec![
                Expr::scale(lam, Expr::coord(0)),
                Expr::scale(lam, Expr::coord(1)),
            ],
            None,
        );
        let x = [0.5, -0.5];
        let y = f.apply(&x).unwrap();
        let h = Expr::mul(vec![Expr::coord(0), Expr::powi(Expr::coord(1), 2)]);
        let s = Jet::new(y.clone(), vec![Expr::eval_jet(&h, &y, 3).unwrap()]).unwrap();
        let pulled = jet_pullback(&f, &s, &x).unwrap();
        for alpha in crate::polyjet::multiindex::enumerate_multiindices(2, 3) {
            let a = s.derivative(&alpha)[0] * lam.powi(alpha.order() as i32);
            let b = pulled.derivative(&alpha)[0];
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_affine_exact_mode() {
        // Affine F with rational entries: pushforward then pullback is the
        // identity, exactly.
        let m = 2;
        let r = 3;
        let x = vec![Rat::from_ratio(1, 3), Rat::from_ratio(-1, 2)];
        let a = [
            [Rat::from_i64(2), Rat::from_ratio(1, 2)],
            [Rat::from_ratio(-1, 3), Rat::from_i64(1)],
        ];
        let b = [Rat::from_ratio(1, 5), Rat::from_i64(0)];
        let mut comps = Vec::new();
        let mut y = Vec::new();
        for i in 0..m {
            let mut p = TruncatedPoly::<Rat>::zero(m, r);
            let mut val = b[i].clone();
            for j in 0..m {
                p.set_coeff(&MultiIndex::unit(m, j), a[i][j].clone());
                val = val.add(&a[i][j].mul(&x[j]));
            }
            p.set_coeff(&MultiIndex::zero(m), val.clone());
            y.push(val);
            comps.push(p);
        }
        let jf = Jet::new(x.clone(), comps).unwrap();
        let jinv = jet_inverse(&jf).unwrap();
        let mut sp = TruncatedPoly::<Rat>::zero(m, r);
        sp.set_coeff(&mi(vec![0, 0]), Rat::from_ratio(3, 7));
        sp.set_coeff(&mi(vec![1, 0]), Rat::from_ratio(-2, 5));
        sp.set_coeff(&mi(vec![1, 2]), Rat::from_ratio(5, 4));
        sp.set_coeff(&mi(vec![3, 0]), Rat::from_i64(2));
        let s = Jet::new(y, vec![sp]).unwrap();
        // Pull back along F (s lives at y = F(x)), then push forward.
        let pulled = jet_compose(&s, &split_components(&jf)).unwrap();
        let back = jet_compose(&pulled, &split_components(&jinv)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn pullback_functoriality_affine() {
        // (F o G)^* = G^* o F^* on jets.
        let f = Diffeo::new(
            2,
            vec![
                Expr::add(vec![Expr::coord(0), Expr::scale(0.5, Expr::coord(1))]),
                Expr::coord(1),
            ],
            None,
        );
        let g = Diffeo::new(
            2,
            vec![
                Expr::scale(2.0, Expr::coord(0)),
                Expr::add(vec![Expr::coord(1), Expr::constant(0.125)]),
            ],
            None,
        );
        let x = [0.25, -0.5];
        let gx = g.apply(&x).unwrap();
        let fgx = f.apply(&gx).unwrap();
        let fo_g = Diffeo::new(
            2,
            f.forward
                .iter()
                .map(|e| Expr::Compose {
                    outer: Box::new(e.clone()),
                    inner: g.forward.clone(),
                })
                .collect(),
            None,
        );
        let h = Expr::mul(vec![
            Expr::powi(Expr::coord(0), 2),
            Expr::add(vec![Expr::coord(1), Expr::constant(1.0)]),
        ]);
        let s = Jet::new(fgx.clone(), vec![Expr::eval_jet(&h, &fgx, 3).unwrap()]).unwrap();
        let one_shot = jet_pullback(&fo_g, &s, &x).unwrap();
        let staged = {
            let s1 = jet_pullback(&f, &s, &gx).unwrap();
            jet_pullback(&g, &s1, &x).unwrap()
        };
        for alpha in crate::polyjet::multiindex::enumerate_multiindices(2, 3) {
            let a = one_shot.derivative(&alpha)[0];
            let b = staged.derivative(&alpha)[0];
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn primitive_jet_examples() {
        // x = 0, v = 1, u = e1, r = 2, m = 2: only the X1^2 slot, D = 2.
        let sec = PrimitiveSection::new(
            2,
            1,
            2,
            Arc::new(crate::polyjet::section::ExprField::scalar(
                2,
                Expr::constant(1.0),
            )),
            Conormal::Constant(vec![1.0, 0.0]),
            0.1,
        )
        .unwrap();
        let jet = sec.jet_at(&[0.0, 0.0]).unwrap();
        assert_eq!(jet.derivative(&mi(vec![2, 0]))[0], 2.0);
        assert_eq!(jet.derivative(&mi(vec![1, 1]))[0], 0.0);
        // u = (e1+e2)/sqrt(2): coefficients (1/2)(X1^2 + 2X1X2 + X2^2).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sec2 = PrimitiveSection::new(
            2,
            1,
            2,
            Arc::new(crate::polyjet::section::ExprField::scalar(
                2,
                Expr::constant(1.0),
            )),
            Conormal::Constant(vec![s, s]),
            0.1,
        )
        .unwrap();
        let jet2 = sec2.jet_at(&[0.0, 0.0]).unwrap();
        assert!((jet2.component(0).coeff(&mi(vec![2, 0])) - 0.5).abs() < 1e-15);
        assert!((jet2.component(0).coeff(&mi(vec![1, 1])) - 1.0).abs() < 1e-15);
        // Defining properties: (r-1)-projection zero, perp w.r.t. tau zero.
        let proj = crate::polyjet::jet::jet_project(&jet2, 1).unwrap();
        assert!(proj.is_zero());
        let norms = crate::polyjet::jet::jet_norms(&jet2, Some(&[s, s])).unwrap();
        assert!(norms.perp.unwrap() < 1e-12);
    }
}
