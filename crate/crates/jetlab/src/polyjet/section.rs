//! Jet sections over `I^m`: fields of jets produced either by evaluating a
//! smooth generator in jet arithmetic or by storing a grid of samples.
//! Includes the holonomy-defect detector and the two-point `C^r` norm of
//! primitive-form sections.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::lingeo::Conormal;
use crate::polyjet::expr::Expr;
use crate::polyjet::jet::Jet;
use crate::polyjet::multiindex::{enumerate_multiindices, MultiIndex};
use crate::polyjet::poly::TruncatedPoly;

/// A smooth field evaluable in jet arithmetic at any point.
pub trait JetField: Send + Sync {
    /// Domain dimension.
    fn dim(&self) -> usize;
    /// Number of output components.
    fn len_out(&self) -> usize;
    /// Jet at `x`, truncated at order `r`.
    fn jet(&self, x: &[f64], r: usize) -> Result<Jet<f64>>;

    fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jet(x, 0)?.value())
    }
}

/// Expression-backed vector field.
#[derive(Debug, Clone)]
pub struct ExprField {
    pub m: usize,
    pub components: Vec<Expr<f64>>,
}

impl ExprField {
    pub fn new(m: usize, components: Vec<Expr<f64>>) -> Self {
        ExprField { m, components }
    }

    pub fn scalar(m: usize, e: Expr<f64>) -> Self {
        ExprField {
            m,
            components: vec![e],
        }
    }

    pub fn zero(m: usize, n: usize) -> Self {
        ExprField {
            m,
            components: (0..n).map(|_| Expr::Const(0.0)).collect(),
        }
    }
}

impl JetField for ExprField {
    fn dim(&self) -> usize {
        self.m
    }
    fn len_out(&self) -> usize {
        self.components.len()
    }
    fn jet(&self, x: &[f64], r: usize) -> Result<Jet<f64>> {
        crate::polyjet::expr::taylor_evaluate(&self.components, x, r)
    }
    fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|e| e.eval(x)).collect()
    }
}

/// Stored jets on a uniform lattice.
#[derive(Debug, Clone)]
pub struct SampledJets {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub spec: GridSpec,
    pub jets: Vec<Jet<f64>>,
}

#[derive(Clone)]
pub enum SectionGenerator {
    Field(Arc<dyn JetField>),
    Grid(Arc<SampledJets>),
}

/// A section of the `r`-jet bundle over `I^m` with values in `R^n`.
#[derive(Clone)]
pub struct JetSection {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub generator: SectionGenerator,
}

impl JetSection {
    pub fn from_field(field: Arc<dyn JetField>, r: usize) -> Self {
        JetSection {
            m: field.dim(),
            n: field.len_out(),
            r,
            generator: SectionGenerator::Field(field),
        }
    }

    pub fn jet_at(&self, x: &[f64]) -> Result<Jet<f64>> {
        match &self.generator {
            SectionGenerator::Field(f) => f.jet(x, self.r),
            SectionGenerator::Grid(g) => {
                // Only lattice points are meaningful for a sampled section.
                let steps = g.spec.steps(&g.lo, &g.hi);
                let mut digits = Vec::with_capacity(self.m);
                for (axis, &xv) in x.iter().enumerate() {
                    let t = (xv - g.lo[axis]) / steps[axis];
                    let d = t.round();
                    if (t - d).abs() > 1e-9 {
                        return Err(Error::Domain(
                            "sampled section queried off-lattice".into(),
                        ));
                    }
                    digits.push(d as usize);
                }
                let mut idx = 0usize;
                for (axis, d) in digits.iter().enumerate() {
                    idx = idx * g.spec.counts[axis] + d;
                }
                Ok(g.jets[idx].clone())
            }
        }
    }

    /// Jets on every lattice point of `[lo, hi]`, row-major.
    pub fn sample_on(&self, spec: &GridSpec, lo: &[f64], hi: &[f64]) -> Result<Vec<Jet<f64>>> {
        spec.points(lo, hi).map(|x| self.jet_at(&x)).collect()
    }
}

/// Output of the holonomy-defect scan.
#[derive(Debug, Clone)]
pub struct DefectReport {
    pub spec: GridSpec,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Per lattice point: max over `|alpha| < r` and axes of the
    /// finite-difference Cartan mismatch.
    pub values: Vec<f64>,
    pub max: f64,
    /// True when any stencil had to fall back to one-sided differences.
    pub one_sided_used: bool,
}

impl DefectReport {
    pub fn value_at(&self, digits: &[usize]) -> f64 {
        let mut idx = 0usize;
        for (axis, d) in digits.iter().enumerate() {
            idx = idx * self.spec.counts[axis] + d;
        }
        self.values[idx]
    }
}

/// At each grid point and each `|alpha| < r`, compare the finite-difference
/// derivative of the coefficient field `x -> D_alpha(x)` against the stored
/// `D_{alpha+e_i}`; holonomic sections drive this to zero with the step.
pub fn holonomy_defect(
    section: &JetSection,
    spec: &GridSpec,
    lo: &[f64],
    hi: &[f64],
) -> Result<DefectReport> {
    let m = section.m;
    if spec.dim() != m {
        return Err(Error::ShapeMismatch("grid dimension".into()));
    }
    if spec.counts.iter().any(|&c| c < 3) {
        return Err(Error::GridTooCoarse(
            "holonomy defect needs at least 3 samples per axis".into(),
        ));
    }
    let jets = section.sample_on(spec, lo, hi)?;
    let steps = spec.steps(lo, hi);
    let idx_all = enumerate_multiindices(m, section.r);
    let lower: Vec<&MultiIndex> = idx_all
        .iter()
        .filter(|a| (a.order() as usize) < section.r)
        .collect();

    let strides = {
        let mut s = vec![1usize; m];
        for axis in (0..m.saturating_sub(1)).rev() {
            s[axis] = s[axis + 1] * spec.counts[axis + 1];
        }
        s
    };

    let mut values = vec![0.0f64; jets.len()];
    let mut one_sided_used = false;
    let mut digits = vec![0usize; m];
    for (flat, slot) in values.iter_mut().enumerate() {
        // Decode digits for boundary detection.
        let mut rest = flat;
        for axis in 0..m {
            digits[axis] = rest / strides[axis];
            rest %= strides[axis];
        }
        let mut worst = 0.0f64;
        for alpha in &lower {
            let d_here: Vec<Vec<f64>> = (0..m)
                .map(|i| jets[flat].derivative(&alpha.bump(i)))
                .collect();
            for axis in 0..m {
                let h = steps[axis];
                let c = spec.counts[axis];
                let d = digits[axis];
                let fd: Vec<f64> = if d > 0 && d + 1 < c {
                    let plus = jets[flat + strides[axis]].derivative(alpha);
                    let minus = jets[flat - strides[axis]].derivative(alpha);
                    plus.iter()
                        .zip(&minus)
                        .map(|(p, q)| (p - q) / (2.0 * h))
                        .collect()
                } else {
                    one_sided_used = true;
                    // Second-order one-sided stencil.
                    let (s0, s1, s2, sign) = if d == 0 {
                        (flat, flat + strides[axis], flat + 2 * strides[axis], 1.0)
                    } else {
                        (flat, flat - strides[axis], flat - 2 * strides[axis], -1.0)
                    };
                    let f0 = jets[s0].derivative(alpha);
                    let f1 = jets[s1].derivative(alpha);
                    let f2 = jets[s2].derivative(alpha);
                    f0.iter()
                        .zip(f1.iter().zip(&f2))
                        .map(|(a, (b, c))| sign * (-3.0 * a + 4.0 * b - c) / (2.0 * h))
                        .collect()
                };
                let mismatch = fd
                    .iter()
                    .zip(&d_here[axis])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(mismatch);
            }
        }
        *slot = worst;
    }
    let max = values.iter().cloned().fold(0.0, f64::max);
    Ok(DefectReport {
        spec: spec.clone(),
        lo: lo.to_vec(),
        hi: hi.to_vec(),
        values,
        max,
        one_sided_used,
    })
}

/// The two-point `C^r` norm of a primitive-form section: with
/// `h(x, y) = v(x) * <y - x, u(x)>^r`, the sup over grid points and over
/// multi-index pairs `|alpha|, |beta| <= r` of the mixed derivative
/// `d_{x_beta} d_{y_alpha} h` at `(x, x)`, computed by jet arithmetic over
/// the doubled variable set.
pub fn section_cr_norm(
    v: &dyn JetField,
    conormal: &Conormal,
    r: usize,
    spec: &GridSpec,
    lo: &[f64],
    hi: &[f64],
) -> Result<f64> {
    if spec.counts.iter().any(|&c| c < 3) {
        return Err(Error::GridTooCoarse(
            "C^r norm needs at least 3 samples per axis".into(),
        ));
    }
    let m = v.dim();
    let order2 = 2 * r;
    let x_axes: Vec<usize> = (0..m).collect();
    let idx2 = enumerate_multiindices(2 * m, order2);
    let mut sup = 0.0f64;
    for x0 in spec.points(lo, hi) {
        // lin = sum_j u_j(x) (Y_j - X_j), as a 2m-variable jet at (x0, x0).
        let lin = match conormal {
            Conormal::Constant(u) => {
                let mut p = TruncatedPoly::<f64>::zero(2 * m, order2);
                for (j, &uj) in u.iter().enumerate() {
                    p.set_coeff(&MultiIndex::unit(2 * m, m + j), uj);
                    p.set_coeff(&MultiIndex::unit(2 * m, j), -uj);
                }
                p
            }
            Conormal::Field(comps) => {
                let mut p = TruncatedPoly::<f64>::zero(2 * m, order2);
                for (j, uj) in comps.iter().enumerate() {
                    let uj_jet = uj.eval_jet(&x0, order2)?.embed(2 * m, order2, &x_axes);
                    let mut offset = TruncatedPoly::<f64>::zero(2 * m, order2);
                    offset.set_coeff(&MultiIndex::unit(2 * m, m + j), 1.0);
                    offset.set_coeff(&MultiIndex::unit(2 * m, j), -1.0);
                    p = p.add(&uj_jet.mul(&offset)?)?;
                }
                // Check the generator is unit-length here; jets of a
                // non-normalized generator would not represent tau.
                let norm: f64 = comps
                    .iter()
                    .map(|e| e.eval(&x0).map(|v| v * v))
                    .sum::<Result<f64>>()?;
                if (norm.sqrt() - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidArgument(format!(
                        "varying co-normal must evaluate to unit vectors (norm {} at {:?})",
                        norm.sqrt(),
                        x0
                    )));
                }
                p
            }
        };
        let lin_r = lin.pow(r as u32)?;
        let v_jet_full = v.jet(&x0, order2)?;
        // Mixed derivatives aggregated across output components.
        let mut per_gamma: Vec<f64> = Vec::new();
        for comp in v_jet_full.components() {
            let v_jet = comp.embed(2 * m, order2, &x_axes);
            let h = v_jet.mul(&lin_r)?;
            for (slot, gamma) in idx2.iter().enumerate() {
                let beta_ord: u32 = gamma.0[..m].iter().sum();
                let alpha_ord: u32 = gamma.0[m..].iter().sum();
                if beta_ord as usize > r || alpha_ord as usize > r {
                    continue;
                }
                let d = h.coeff(gamma) * gamma.factorial() as f64;
                if per_gamma.len() <= slot {
                    per_gamma.resize(idx2.len(), 0.0);
                }
                per_gamma[slot] += d * d;
            }
        }
        for s in &per_gamma {
            sup = sup.max(s.sqrt());
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn bump(m: usize) -> Expr<f64> {
        // Smooth bump supported in [-1/2, 1/2]^m: product of plateaus.
        let mut factors = Vec::new();
        for axis in 0..m {
            factors.push(Expr::Plateau {
                arg: Box::new(Expr::coord(axis)),
                inner: 0.25,
                outer: 0.5,
                order: 7,
            });
        }
        Expr::mul(factors)
    }

    #[test]
    fn cr_norm_of_square_germ_is_two() {
        // v = 1, m = 2, r = 2, u = e1: h = (y1-x1)^2. Hand enumeration of
        // the mixed derivatives gives sup 2, attained by d^2_{y1} and
        // d_{x1} d_{y1}.
        let norm = section_cr_norm(
            &ExprField::scalar(2, Expr::Const(1.0)),
            &Conormal::Constant(vec![1.0, 0.0]),
            2,
            &GridSpec::cubic(2, 3),
            &[-1.0, -1.0],
            &[1.0, 1.0],
        )
        .unwrap();
        assert!((norm - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cr_norm_of_zero_is_zero() {
        let norm = section_cr_norm(
            &ExprField::scalar(2, Expr::Const(0.0)),
            &Conormal::Constant(vec![0.0, 1.0]),
            2,
            &GridSpec::cubic(2, 3),
            &[-1.0, -1.0],
            &[1.0, 1.0],
        )
        .unwrap();
        assert_eq!(norm, 0.0);
    }

    #[test]
    fn cr_norm_refinement_stable_for_bump() {
        let v = ExprField::scalar(2, bump(2));
        let u = Conormal::Constant(vec![1.0, 0.0]);
        let coarse = section_cr_norm(&v, &u, 1, &GridSpec::cubic(2, 17), &[-1.0; 2], &[1.0; 2])
            .unwrap();
        let fine = section_cr_norm(&v, &u, 1, &GridSpec::cubic(2, 65), &[-1.0; 2], &[1.0; 2])
            .unwrap();
        assert!(
            (fine - coarse).abs() <= 0.01 * fine,
            "coarse {coarse} vs fine {fine}"
        );
    }

    #[test]
    fn holonomic_section_has_vanishing_defect() {
        // sigma = j^r(f) for a smooth f: defect -> 0 with the step.
        let f = Expr::mul(vec![
            Expr::Sin(Box::new(Expr::coord(0))),
            Expr::coord(1),
        ]);
        let field = Arc::new(ExprField::scalar(2, f));
        let section = JetSection::from_field(field, 2);
        let coarse = holonomy_defect(
            &section,
            &GridSpec::cubic(2, 9),
            &[-1.0, -1.0],
            &[1.0, 1.0],
        )
        .unwrap();
        let fine = holonomy_defect(
            &section,
            &GridSpec::cubic(2, 17),
            &[-1.0, -1.0],
            &[1.0, 1.0],
        )
        .unwrap();
        assert!(fine.max < coarse.max);
        assert!(fine.max < 0.05);
        assert!(coarse.one_sided_used);
    }

    #[test]
    fn zero_section_has_zero_defect() {
        let field = Arc::new(ExprField::zero(2, 1));
        let section = JetSection::from_field(field, 2);
        let rep = holonomy_defect(
            &section,
            &GridSpec::cubic(2, 5),
            &[-1.0, -1.0],
            &[1.0, 1.0],
        )
        .unwrap();
        assert_eq!(rep.max, 0.0);
    }
}
