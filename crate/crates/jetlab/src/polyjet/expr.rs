//! Expression-defined smooth fields. The grammar is deliberately small:
//! constants, coordinates, sums, products, natural powers, the univariate
//! analytic primitives `sin`, `cos`, `exp`, the two cutoff profiles, and
//! general composition. Every node is smooth on its stated domain, so the
//! jet of a field can be computed exactly (up to float rounding) at any
//! point by truncated Taylor arithmetic.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::localmodels::profiles::Profile;
use crate::polyjet::jet::Jet;
use crate::polyjet::poly::TruncatedPoly;
use crate::polyjet::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr<S> {
    Const(S),
    Coord(usize),
    Add(Vec<Expr<S>>),
    Mul(Vec<Expr<S>>),
    Pow(Box<Expr<S>>, u32),
    Sin(Box<Expr<S>>),
    Cos(Box<Expr<S>>),
    Exp(Box<Expr<S>>),
    Plateau {
        arg: Box<Expr<S>>,
        inner: f64,
        outer: f64,
        order: usize,
    },
    Transition {
        arg: Box<Expr<S>>,
        inner: f64,
        outer: f64,
        order: usize,
    },
    Compose {
        outer: Box<Expr<S>>,
        inner: Vec<Expr<S>>,
    },
}

/// `sum_j c_j (Q - Q(0))^j` truncated: the jet of a univariate analytic
/// primitive with Taylor coefficients `c` at the inner value, composed with
/// the inner jet `q`.
pub fn compose_univariate<S: Scalar>(
    coeffs: &[S],
    q: &TruncatedPoly<S>,
) -> Result<TruncatedPoly<S>> {
    let m = q.dim();
    let r = q.order();
    let centered = q.sub(&TruncatedPoly::constant(m, r, q.constant_term()))?;
    let mut out = TruncatedPoly::constant(m, r, coeffs[0].clone());
    let mut pow = TruncatedPoly::constant(m, r, S::one());
    for c in coeffs.iter().skip(1) {
        pow = pow.mul(&centered)?;
        out = out.add(&pow.scale(c))?;
    }
    Ok(out)
}

/// Taylor coefficients of sin/cos/exp at the value `v`.
fn analytic_coeffs<S: Scalar>(kind: &str, v: &S, r: usize) -> Result<Vec<S>> {
    if S::EXACT {
        return Err(Error::ExactModeUnsupported(
            "transcendental primitives need float mode",
        ));
    }
    let mut out = Vec::with_capacity(r + 1);
    let (s, c) = (v.sin()?, v.cos()?);
    let e = v.exp()?;
    let mut fac = S::one();
    for j in 0..=r {
        if j > 0 {
            fac = fac.mul(&S::from_i64(j as i64));
        }
        let d = match kind {
            "sin" => match j % 4 {
                0 => s.clone(),
                1 => c.clone(),
                2 => s.neg(),
                _ => c.neg(),
            },
            "cos" => match j % 4 {
                0 => c.clone(),
                1 => s.neg(),
                2 => c.neg(),
                _ => s.clone(),
            },
            _ => e.clone(),
        };
        out.push(d.div(&fac)?);
    }
    Ok(out)
}

fn profile_jet<S: Scalar>(
    profile: &Profile,
    arg: &TruncatedPoly<S>,
    r: usize,
) -> Result<TruncatedPoly<S>> {
    if S::EXACT {
        return Err(Error::ExactModeUnsupported(
            "profile primitives need float mode",
        ));
    }
    let coeffs = profile.taylor_at(arg.constant_term().to_f64(), r)?;
    let coeffs: Vec<S> = coeffs.iter().map(|&c| S::from_f64(c)).collect();
    compose_univariate(&coeffs, arg)
}

impl<S: Scalar> Expr<S> {
    pub fn constant(c: S) -> Self {
        Expr::Const(c)
    }

    pub fn coord(i: usize) -> Self {
        Expr::Coord(i)
    }

    pub fn add(terms: Vec<Expr<S>>) -> Self {
        Expr::Add(terms)
    }

    pub fn mul(factors: Vec<Expr<S>>) -> Self {
        Expr::Mul(factors)
    }

    pub fn scale(c: S, e: Expr<S>) -> Self {
        Expr::Mul(vec![Expr::Const(c), e])
    }

    pub fn neg(e: Expr<S>) -> Self {
        Expr::scale(S::from_i64(-1), e)
    }

    pub fn sub(a: Expr<S>, b: Expr<S>) -> Self {
        Expr::Add(vec![a, Expr::neg(b)])
    }

    pub fn powi(e: Expr<S>, k: u32) -> Self {
        Expr::Pow(Box::new(e), k)
    }

    /// Largest coordinate axis referenced by free coordinates. Coordinates
    /// inside a `Compose` refer to the inner argument list, not the ambient
    /// space, so they are not free.
    pub fn max_free_coord(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Coord(i) => Some(*i),
            Expr::Add(v) | Expr::Mul(v) => v.iter().filter_map(|e| e.max_free_coord()).max(),
            Expr::Pow(e, _) | Expr::Sin(e) | Expr::Cos(e) | Expr::Exp(e) => e.max_free_coord(),
            Expr::Plateau { arg, .. } | Expr::Transition { arg, .. } => arg.max_free_coord(),
            Expr::Compose { inner, .. } => {
                inner.iter().filter_map(|e| e.max_free_coord()).max()
            }
        }
    }

    /// Jet of the field at `x`, truncated at order `r`. The returned
    /// polynomial is in the offset variables `X = y - x`.
    pub fn eval_jet(&self, x: &[S], r: usize) -> Result<TruncatedPoly<S>> {
        let m = x.len();
        match self {
            Expr::Const(c) => Ok(TruncatedPoly::constant(m, r, c.clone())),
            Expr::Coord(i) => {
                if *i >= m {
                    return Err(Error::Domain(format!(
                        "coordinate axis {i} out of range for dimension {m}"
                    )));
                }
                if r == 0 {
                    Ok(TruncatedPoly::constant(m, 0, x[*i].clone()))
                } else {
                    Ok(TruncatedPoly::linear(m, r, *i, x[*i].clone()))
                }
            }
            Expr::Add(terms) => {
                let mut acc = TruncatedPoly::zero(m, r);
                for t in terms {
                    acc = acc.add(&t.eval_jet(x, r)?)?;
                }
                Ok(acc)
            }
            Expr::Mul(factors) => {
                let mut acc = TruncatedPoly::constant(m, r, S::one());
                for f in factors {
                    acc = acc.mul(&f.eval_jet(x, r)?)?;
                }
                Ok(acc)
            }
            Expr::Pow(e, k) => e.eval_jet(x, r)?.pow(*k),
            Expr::Sin(e) => {
                let q = e.eval_jet(x, r)?;
                let coeffs = analytic_coeffs("sin", &q.constant_term(), r)?;
                compose_univariate(&coeffs, &q)
            }
            Expr::Cos(e) => {
                let q = e.eval_jet(x, r)?;
                let coeffs = analytic_coeffs("cos", &q.constant_term(), r)?;
                compose_univariate(&coeffs, &q)
            }
            Expr::Exp(e) => {
                let q = e.eval_jet(x, r)?;
                let coeffs = analytic_coeffs("exp", &q.constant_term(), r)?;
                compose_univariate(&coeffs, &q)
            }
            Expr::Plateau {
                arg,
                inner,
                outer,
                order,
            } => {
                let q = arg.eval_jet(x, r)?;
                profile_jet(&Profile::plateau(*inner, *outer, *order), &q, r)
            }
            Expr::Transition {
                arg,
                inner,
                outer,
                order,
            } => {
                let q = arg.eval_jet(x, r)?;
                profile_jet(&Profile::transition(*inner, *outer, *order), &q, r)
            }
            Expr::Compose { outer, inner } => {
                let inner_jets: Vec<TruncatedPoly<S>> = inner
                    .iter()
                    .map(|e| e.eval_jet(x, r))
                    .collect::<Result<Vec<_>>>()?;
                let values: Vec<S> = inner_jets.iter().map(|p| p.constant_term()).collect();
                let outer_jet = outer.eval_jet(&values, r)?;
                let centered: Vec<TruncatedPoly<S>> = inner_jets
                    .iter()
                    .map(|p| {
                        p.sub(&TruncatedPoly::constant(m, r, p.constant_term()))
                            .expect("same shape")
                    })
                    .collect();
                outer_jet.substitute(&centered)
            }
        }
    }

    /// Plain value evaluation; cheaper than a 0-jet on hot grid loops.
    pub fn eval(&self, x: &[S]) -> Result<S> {
        match self {
            Expr::Const(c) => Ok(c.clone()),
            Expr::Coord(i) => {
                if *i >= x.len() {
                    return Err(Error::Domain(format!(
                        "coordinate axis {i} out of range for dimension {}",
                        x.len()
                    )));
                }
                Ok(x[*i].clone())
            }
            Expr::Add(terms) => {
                let mut acc = S::zero();
                for t in terms {
                    acc = acc.add(&t.eval(x)?);
                }
                Ok(acc)
            }
            Expr::Mul(factors) => {
                let mut acc = S::one();
                for f in factors {
                    acc = acc.mul(&f.eval(x)?);
                }
                Ok(acc)
            }
            Expr::Pow(e, k) => {
                let v = e.eval(x)?;
                let mut acc = S::one();
                for _ in 0..*k {
                    acc = acc.mul(&v);
                }
                Ok(acc)
            }
            Expr::Sin(e) => e.eval(x)?.sin(),
            Expr::Cos(e) => e.eval(x)?.cos(),
            Expr::Exp(e) => e.eval(x)?.exp(),
            Expr::Plateau {
                arg,
                inner,
                outer,
                order,
            } => {
                if S::EXACT {
                    return Err(Error::ExactModeUnsupported("plateau"));
                }
                let v = arg.eval(x)?.to_f64();
                Ok(S::from_f64(
                    Profile::plateau(*inner, *outer, *order).value(v),
                ))
            }
            Expr::Transition {
                arg,
                inner,
                outer,
                order,
            } => {
                if S::EXACT {
                    return Err(Error::ExactModeUnsupported("transition"));
                }
                let v = arg.eval(x)?.to_f64();
                Ok(S::from_f64(
                    Profile::transition(*inner, *outer, *order).value(v),
                ))
            }
            Expr::Compose { outer, inner } => {
                let values: Vec<S> =
                    inner.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?;
                outer.eval(&values)
            }
        }
    }
}

/// The jet of a vector-valued expression field at `x`: one component per
/// expression. This is the `taylor_evaluate` entry point.
pub fn taylor_evaluate<S: Scalar>(fields: &[Expr<S>], x: &[S], r: usize) -> Result<Jet<S>> {
    let components = fields
        .iter()
        .map(|f| f.eval_jet(x, r))
        .collect::<Result<Vec<_>>>()?;
    Jet::new(x.to_vec(), components)
}

// --- JSON interface -------------------------------------------------------
//
// Node kinds: {"const": 1.0}, {"coord": 0}, {"add": [..]}, {"mul": [..]},
// {"pow": {"base": .., "exp": 2}}, {"sin": ..}, {"cos": ..}, {"exp": ..},
// {"plateau": {"arg": .., "inner": 0.5, "outer": 1.0, "order": 5}},
// {"transition": {...}}, {"compose": {"outer": .., "inner": [..]}}.

impl Expr<f64> {
    pub fn to_json(&self) -> Value {
        match self {
            Expr::Const(c) => json!({ "const": c }),
            Expr::Coord(i) => json!({ "coord": i }),
            Expr::Add(v) => json!({ "add": v.iter().map(|e| e.to_json()).collect::<Vec<_>>() }),
            Expr::Mul(v) => json!({ "mul": v.iter().map(|e| e.to_json()).collect::<Vec<_>>() }),
            Expr::Pow(e, k) => json!({ "pow": { "base": e.to_json(), "exp": k } }),
            Expr::Sin(e) => json!({ "sin": e.to_json() }),
            Expr::Cos(e) => json!({ "cos": e.to_json() }),
            Expr::Exp(e) => json!({ "exp": e.to_json() }),
            Expr::Plateau {
                arg,
                inner,
                outer,
                order,
            } => json!({ "plateau": {
                "arg": arg.to_json(), "inner": inner, "outer": outer, "order": order
            } }),
            Expr::Transition {
                arg,
                inner,
                outer,
                order,
            } => json!({ "transition": {
                "arg": arg.to_json(), "inner": inner, "outer": outer, "order": order
            } }),
            Expr::Compose { outer, inner } => json!({ "compose": {
                "outer": outer.to_json(),
                "inner": inner.iter().map(|e| e.to_json()).collect::<Vec<_>>()
            } }),
        }
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }

    /// Parse an expression tree from JSON text, reporting the node path of
    /// the first offending node on failure.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::parse("$", format!("invalid JSON: {e}")))?;
        Self::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        parse_node(value, "$")
    }
}

fn parse_node(value: &Value, path: &str) -> Result<Expr<f64>> {
    let obj: &Map<String, Value> = value
        .as_object()
        .ok_or_else(|| Error::parse(path, "expected an object node"))?;
    if obj.len() != 1 {
        return Err(Error::parse(
            path,
            format!("node must have exactly one kind key, got {}", obj.len()),
        ));
    }
    let (kind, body) = obj.iter().next().unwrap();
    let sub = |suffix: &str| format!("{path}.{suffix}");
    match kind.as_str() {
        "const" => body
            .as_f64()
            .map(Expr::Const)
            .ok_or_else(|| Error::parse(sub("const"), "expected a number")),
        "coord" => {
            let axis = body
                .as_u64()
                .ok_or_else(|| Error::parse(sub("coord"), "expected a non-negative integer"))?;
            Ok(Expr::Coord(axis as usize))
        }
        "add" | "mul" => {
            let arr = body
                .as_array()
                .ok_or_else(|| Error::parse(sub(kind), "expected an array of children"))?;
            if arr.is_empty() {
                return Err(Error::parse(sub(kind), "needs at least one child"));
            }
            let children = arr
                .iter()
                .enumerate()
                .map(|(i, v)| parse_node(v, &format!("{path}.{kind}[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            Ok(if kind == "add" {
                Expr::Add(children)
            } else {
                Expr::Mul(children)
            })
        }
        "pow" => {
            let b = body
                .as_object()
                .ok_or_else(|| Error::parse(sub("pow"), "expected {base, exp}"))?;
            let base = b
                .get("base")
                .ok_or_else(|| Error::parse(sub("pow.base"), "missing"))?;
            let exp = b
                .get("exp")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::parse(sub("pow.exp"), "expected a non-negative integer"))?;
            Ok(Expr::Pow(
                Box::new(parse_node(base, &sub("pow.base"))?),
                exp as u32,
            ))
        }
        "sin" | "cos" | "exp" => {
            let child = Box::new(parse_node(body, &sub(kind))?);
            Ok(match kind.as_str() {
                "sin" => Expr::Sin(child),
                "cos" => Expr::Cos(child),
                _ => Expr::Exp(child),
            })
        }
        "plateau" | "transition" => {
            let b = body.as_object().ok_or_else(|| {
                Error::parse(sub(kind), "expected {arg, inner, outer, order}")
            })?;
            let arg = b
                .get("arg")
                .ok_or_else(|| Error::parse(format!("{path}.{kind}.arg"), "missing"))?;
            let inner = b.get("inner").and_then(Value::as_f64).ok_or_else(|| {
                Error::parse(format!("{path}.{kind}.inner"), "expected a number")
            })?;
            let outer = b.get("outer").and_then(Value::as_f64).ok_or_else(|| {
                Error::parse(format!("{path}.{kind}.outer"), "expected a number")
            })?;
            let order = b.get("order").and_then(Value::as_u64).ok_or_else(|| {
                Error::parse(format!("{path}.{kind}.order"), "expected an integer")
            })? as usize;
            if !(0.0 < inner && inner < outer) {
                return Err(Error::parse(
                    format!("{path}.{kind}"),
                    format!("edges must satisfy 0 < inner < outer, got ({inner}, {outer})"),
                ));
            }
            let arg = Box::new(parse_node(arg, &format!("{path}.{kind}.arg"))?);
            Ok(if kind == "plateau" {
                Expr::Plateau {
                    arg,
                    inner,
                    outer,
                    order,
                }
            } else {
                Expr::Transition {
                    arg,
                    inner,
                    outer,
                    order,
                }
            })
        }
        "compose" => {
            let b = body
                .as_object()
                .ok_or_else(|| Error::parse(sub("compose"), "expected {outer, inner}"))?;
            let outer = b
                .get("outer")
                .ok_or_else(|| Error::parse(sub("compose.outer"), "missing"))?;
            let inner = b
                .get("inner")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::parse(sub("compose.inner"), "expected an array"))?;
            let outer = parse_node(outer, &sub("compose.outer"))?;
            let inner = inner
                .iter()
                .enumerate()
                .map(|(i, v)| parse_node(v, &format!("{path}.compose.inner[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            if let Some(axis) = outer.max_free_coord() {
                if axis >= inner.len() {
                    return Err(Error::parse(
                        sub("compose"),
                        format!(
                            "outer references coordinate {axis} but only {} inner fields given",
                            inner.len()
                        ),
                    ));
                }
            }
            Ok(Expr::Compose {
                outer: Box::new(outer),
                inner,
            })
        }
        other => Err(Error::parse(
            path,
            format!("unknown node kind \"{other}\""),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyjet::multiindex::MultiIndex;
    use crate::polyjet::scalar::Rat;

    #[test]
    fn sine_jet_at_origin() {
        // f = sin(y1), x = 0, r = 3: derivatives (0, 1, 0, -1).
        let f = Expr::Sin(Box::new(Expr::coord(0)));
        let jet = taylor_evaluate(&[f], &[0.0], 3).unwrap();
        let d: Vec<f64> = (0..=3)
            .map(|k| jet.derivative(&MultiIndex(vec![k]))[0])
            .collect();
        assert!((d[0] - 0.0).abs() < 1e-15);
        assert!((d[1] - 1.0).abs() < 1e-15);
        assert!((d[2] - 0.0).abs() < 1e-15);
        assert!((d[3] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_jet_at_shifted_point() {
        // f = y1*y2 at (1,2), r = 2.
        let f = Expr::mul(vec![Expr::coord(0), Expr::coord(1)]);
        let jet = taylor_evaluate(&[f], &[1.0, 2.0], 2).unwrap();
        let d = |a: Vec<u32>| jet.derivative(&MultiIndex(a))[0];
        assert_eq!(d(vec![0, 0]), 2.0);
        assert_eq!(d(vec![1, 0]), 2.0);
        assert_eq!(d(vec![0, 1]), 1.0);
        assert_eq!(d(vec![1, 1]), 1.0);
        assert_eq!(d(vec![2, 0]), 0.0);
        assert_eq!(d(vec![0, 2]), 0.0);
    }

    #[test]
    fn exact_mode_rejects_transcendentals() {
        let f: Expr<Rat> = Expr::Sin(Box::new(Expr::coord(0)));
        assert!(f.eval_jet(&[Rat::zero()], 2).is_err());
    }

    #[test]
    fn compose_node_substitutes() {
        // outer(u) = u^2, inner = y1 + y2: jet equals (y1+y2)^2 directly.
        let direct = Expr::powi(Expr::add(vec![Expr::coord(0), Expr::coord(1)]), 2);
        let composed = Expr::Compose {
            outer: Box::new(Expr::powi(Expr::coord(0), 2)),
            inner: vec![Expr::add(vec![Expr::coord(0), Expr::coord(1)])],
        };
        let x = [0.3f64, -0.7];
        let a = direct.eval_jet(&x, 3).unwrap();
        let b = composed.eval_jet(&x, 3).unwrap();
        for (ca, cb) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((ca - cb).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_const_and_plateau() {
        let e = Expr::parse(r#"{"const": 1}"#).unwrap();
        assert_eq!(e, Expr::Const(1.0));
        let p = Expr::parse(
            r#"{"plateau": {"arg": {"coord": 0}, "inner": 0.5, "outer": 1.0, "order": 5}}"#,
        )
        .unwrap();
        // The plateau profile as a field: 1 inside |t| < 1/2.
        assert_eq!(p.eval(&[0.2]).unwrap(), 1.0);
        assert_eq!(p.eval(&[1.5]).unwrap(), 0.0);
    }

    #[test]
    fn parse_errors_carry_node_paths() {
        let err = Expr::parse(r#"{"add": [{"coord": 0}, {"frob": 1}]}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("$.add[1]"), "unexpected message: {msg}");
        let err = Expr::parse(r#"{"pow": {"base": {"coord": 0}}}"#).unwrap_err();
        assert!(err.to_string().contains("pow.exp"));
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        // A nested mul/add tree of depth 6.
        let mut e = Expr::coord(0);
        for i in 0..6 {
            e = if i % 2 == 0 {
                Expr::mul(vec![e, Expr::Const(1.5 + i as f64)])
            } else {
                Expr::add(vec![e, Expr::coord(1), Expr::Const(-0.25)])
            };
        }
        let s1 = e.to_json_string();
        let parsed = Expr::parse(&s1).unwrap();
        let s2 = parsed.to_json_string();
        assert_eq!(s1, s2);
    }
}
