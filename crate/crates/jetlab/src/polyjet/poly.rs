//! Truncated polynomials: the fibre model of the jet space. A
//! `TruncatedPoly` stores the dense coefficient vector of an `m`-variable
//! polynomial of degree `<= r` in graded-lex order.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::polyjet::multiindex::{basis_len, enumerate_multiindices, rank, MultiIndex};
use crate::polyjet::scalar::Scalar;

/// Shared enumeration tables, keyed by `(m, r)`.
fn basis(m: usize, r: usize) -> Arc<Vec<MultiIndex>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<MultiIndex>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((m, r))
        .or_insert_with(|| Arc::new(enumerate_multiindices(m, r)))
        .clone()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedPoly<S> {
    m: usize,
    r: usize,
    coeffs: Vec<S>,
}

impl<S: Scalar> TruncatedPoly<S> {
    pub fn zero(m: usize, r: usize) -> Self {
        TruncatedPoly {
            m,
            r,
            coeffs: vec![S::zero(); basis_len(m, r)],
        }
    }

    pub fn constant(m: usize, r: usize, value: S) -> Self {
        let mut p = Self::zero(m, r);
        p.coeffs[0] = value;
        p
    }

    /// The monomial `X_axis` (plus an optional constant term).
    pub fn linear(m: usize, r: usize, axis: usize, constant: S) -> Self {
        assert!(axis < m && r >= 1);
        let mut p = Self::zero(m, r);
        p.coeffs[0] = constant;
        let pos = rank(&MultiIndex::unit(m, axis));
        p.coeffs[pos] = S::one();
        p
    }

    pub fn from_coeffs(m: usize, r: usize, coeffs: Vec<S>) -> Self {
        assert_eq!(coeffs.len(), basis_len(m, r));
        TruncatedPoly { m, r, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.r
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn basis(&self) -> Arc<Vec<MultiIndex>> {
        basis(self.m, self.r)
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> S {
        debug_assert_eq!(alpha.dim(), self.m);
        if alpha.order() as usize > self.r {
            return S::zero();
        }
        self.coeffs[rank(alpha)].clone()
    }

    pub fn set_coeff(&mut self, alpha: &MultiIndex, value: S) {
        assert!(alpha.order() as usize <= self.r, "index order above truncation");
        self.coeffs[rank(alpha)] = value;
    }

    pub fn add_to_coeff(&mut self, alpha: &MultiIndex, value: &S) {
        assert!(alpha.order() as usize <= self.r);
        let pos = rank(alpha);
        self.coeffs[pos] = self.coeffs[pos].add(value);
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn constant_term(&self) -> S {
        self.coeffs[0].clone()
    }

    fn check_shape(&self, o: &Self) -> Result<()> {
        if self.m != o.m || self.r != o.r {
            return Err(Error::ShapeMismatch(format!(
                "poly shapes (m={},r={}) vs (m={},r={})",
                self.m, self.r, o.m, o.r
            )));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_shape(o)?;
        Ok(TruncatedPoly {
            m: self.m,
            r: self.r,
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check_shape(o)?;
        Ok(TruncatedPoly {
            m: self.m,
            r: self.r,
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }

    pub fn scale(&self, s: &S) -> Self {
        TruncatedPoly {
            m: self.m,
            r: self.r,
            coeffs: self.coeffs.iter().map(|c| c.mul(s)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        TruncatedPoly {
            m: self.m,
            r: self.r,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    /// Truncated product.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check_shape(o)?;
        let idx = basis(self.m, self.r);
        let mut out = Self::zero(self.m, self.r);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let da = idx[i].order() as usize;
            for (j, b) in o.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                if da + idx[j].order() as usize > self.r {
                    continue;
                }
                let pos = rank(&idx[i].add(&idx[j]));
                out.coeffs[pos] = out.coeffs[pos].add(&a.mul(b));
            }
        }
        Ok(out)
    }

    pub fn pow(&self, mut e: u32) -> Result<Self> {
        let mut acc = Self::constant(self.m, self.r, S::one());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Forget homogeneous components of degree above `l`. The result is
    /// retruncated at order `l`.
    pub fn project(&self, l: usize) -> Result<Self> {
        if l > self.r {
            return Err(Error::InvalidArgument(format!(
                "projection order {l} above truncation {}",
                self.r
            )));
        }
        let keep = basis_len(self.m, l);
        Ok(TruncatedPoly {
            m: self.m,
            r: l,
            coeffs: self.coeffs[..keep].to_vec(),
        })
    }

    /// Keep only components of degree above `l`, inside the same truncation.
    pub fn tail_above(&self, l: usize) -> Self {
        let cut = basis_len(self.m, l);
        let mut coeffs = self.coeffs.clone();
        for c in coeffs.iter_mut().take(cut) {
            *c = S::zero();
        }
        TruncatedPoly {
            m: self.m,
            r: self.r,
            coeffs,
        }
    }

    /// Re-truncate to a (possibly higher) order, zero-padding new slots.
    pub fn retruncate(&self, r_new: usize) -> Self {
        if r_new == self.r {
            return self.clone();
        }
        let mut out = Self::zero(self.m, r_new);
        let idx = basis(self.m, self.r);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if idx[i].order() as usize <= r_new {
                out.coeffs[rank(&idx[i])] = c.clone();
            }
        }
        out
    }

    /// Substitute the polynomials `args` (one per variable, shared `(m, r)`)
    /// for the variables of `self`. The substitution is exact on the
    /// truncated ring: the result is the degree-`r` truncation of the
    /// composite.
    pub fn substitute(&self, args: &[TruncatedPoly<S>]) -> Result<Self> {
        if args.len() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "substitute expects {} arguments, got {}",
                self.m,
                args.len()
            )));
        }
        let (m_out, r_out) = match args.first() {
            Some(a) => (a.m, a.r),
            None => return Err(Error::ShapeMismatch("empty substitution".into())),
        };
        for a in args {
            if a.m != m_out || a.r != r_out {
                return Err(Error::ShapeMismatch(
                    "substitution arguments disagree in shape".into(),
                ));
            }
        }
        // Memoized powers of each argument up to the maximal exponent used.
        let idx = basis(self.m, self.r);
        let one = TruncatedPoly::constant(m_out, r_out, S::one());
        let mut powers: Vec<Vec<TruncatedPoly<S>>> =
            args.iter().map(|_| vec![one.clone()]).collect();
        let mut out = TruncatedPoly::zero(m_out, r_out);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let alpha = &idx[i];
            let mut term = TruncatedPoly::constant(m_out, r_out, c.clone());
            for (axis, &e) in alpha.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[axis].len() <= e as usize {
                    let last = powers[axis].last().unwrap();
                    let next = last.mul(&args[axis])?;
                    powers[axis].push(next);
                }
                term = term.mul(&powers[axis][e as usize])?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Multiplicative inverse in the truncated ring; requires a nonzero
    /// constant term. Newton iteration doubles the correct order each step.
    pub fn recip(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let inv0 = S::one().div(&c0)?;
        let mut inv = Self::constant(self.m, self.r, inv0);
        let two = Self::constant(self.m, self.r, S::from_i64(2));
        let mut correct = 1usize;
        while correct <= self.r {
            // inv <- inv * (2 - self * inv)
            let t = two.sub(&self.mul(&inv)?)?;
            inv = inv.mul(&t)?;
            correct *= 2;
        }
        Ok(inv)
    }

    /// Evaluate at a point given as offsets in the polynomial's variables.
    pub fn eval(&self, x: &[S]) -> S {
        assert_eq!(x.len(), self.m);
        let idx = basis(self.m, self.r);
        let mut acc = S::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut term = c.clone();
            for (axis, &e) in idx[i].0.iter().enumerate() {
                for _ in 0..e {
                    term = term.mul(&x[axis]);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Restrict to a subset of variables: keeps the terms supported on
    /// `keep` (the jet of the slice map that freezes the other variables
    /// at the base point).
    pub fn restrict(&self, keep: &[usize]) -> TruncatedPoly<S> {
        let idx = basis(self.m, self.r);
        let mut out = TruncatedPoly::zero(keep.len(), self.r);
        'outer: for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut e = vec![0u32; keep.len()];
            for (axis, &exp) in idx[i].0.iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                match keep.iter().position(|&k| k == axis) {
                    Some(slot) => e[slot] = exp,
                    None => continue 'outer,
                }
            }
            out.coeffs[rank(&MultiIndex(e))] = c.clone();
        }
        out
    }

    /// Embed into a larger variable set: variable `i` of `self` becomes
    /// variable `axes[i]` of the result, which has `m_new` variables and
    /// order `r_new >= r`.
    pub fn embed(&self, m_new: usize, r_new: usize, axes: &[usize]) -> Self {
        assert_eq!(axes.len(), self.m);
        assert!(r_new >= self.r);
        let idx = basis(self.m, self.r);
        let mut out = TruncatedPoly::zero(m_new, r_new);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut e = vec![0u32; m_new];
            for (axis, &exp) in idx[i].0.iter().enumerate() {
                e[axes[axis]] = exp;
            }
            out.coeffs[rank(&MultiIndex(e))] = c.clone();
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TruncatedPoly<T> {
        TruncatedPoly {
            m: self.m,
            r: self.r,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> TruncatedPoly<f64> {
        self.map(|c| c.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyjet::scalar::Rat;

    fn x(m: usize, r: usize, axis: usize) -> TruncatedPoly<Rat> {
        TruncatedPoly::linear(m, r, axis, Rat::zero())
    }

    #[test]
    fn product_truncates() {
        // (X1 + X2)^2 at r = 2 keeps all of X1^2 + 2 X1 X2 + X2^2.
        let p = x(2, 2, 0).add(&x(2, 2, 1)).unwrap();
        let sq = p.mul(&p).unwrap();
        assert_eq!(sq.coeff(&MultiIndex(vec![2, 0])), Rat::from_i64(1));
        assert_eq!(sq.coeff(&MultiIndex(vec![1, 1])), Rat::from_i64(2));
        assert_eq!(sq.coeff(&MultiIndex(vec![0, 2])), Rat::from_i64(1));
        // At r = 1 the square truncates to zero.
        let p1 = x(2, 1, 0);
        assert!(p1.mul(&p1).unwrap().is_zero());
    }

    #[test]
    fn recip_is_truncated_inverse() {
        let p = TruncatedPoly::constant(2, 3, Rat::from_i64(2))
            .add(&x(2, 3, 0))
            .unwrap()
            .add(&x(2, 3, 1).scale(&Rat::from_ratio(1, 3)))
            .unwrap();
        let inv = p.recip().unwrap();
        let prod = p.mul(&inv).unwrap();
        assert_eq!(prod, TruncatedPoly::constant(2, 3, Rat::from_i64(1)));
    }

    #[test]
    fn substitution_of_linear_args_is_exact() {
        // p(u) = u^2, u = X1 + X2 gives the binomial expansion.
        let p = x(1, 2, 0).pow(2).unwrap();
        let arg = x(2, 2, 0).add(&x(2, 2, 1)).unwrap();
        let q = p.substitute(&[arg]).unwrap();
        assert_eq!(q.coeff(&MultiIndex(vec![1, 1])), Rat::from_i64(2));
    }

    #[test]
    fn projection_drops_high_degrees() {
        let p = x(2, 3, 0).pow(3).unwrap().add(&x(2, 3, 1)).unwrap();
        let q = p.project(1).unwrap();
        assert_eq!(q.order(), 1);
        assert_eq!(q.coeff(&MultiIndex(vec![0, 1])), Rat::from_i64(1));
        assert!(q.coeff(&MultiIndex(vec![1, 0])).is_zero());
    }

    #[test]
    fn embed_remaps_axes() {
        let p = x(1, 2, 0).pow(2).unwrap();
        let q = p.embed(3, 4, &[2]);
        assert_eq!(q.coeff(&MultiIndex(vec![0, 0, 2])), Rat::from_i64(1));
    }
}
