//! The transverse local model: given a section primitive with respect to
//! the constant hyperplane field `V = ker dx_1` and supported away from
//! the boundary, the wiggle isotopy `F_t` and the glued function
//! `f = phi * g`, `g(x) = h(p(x), x)`, produce a holonomic section
//! `sigma-hat = j^r(f)` that is close to `sigma` on the wiggled
//! neighborhood `U' = F_1({|x_m| < rho*eps/2})` and has small perp norm
//! everywhere, with errors controlled by `eps + delta/eps` and
//! `delta/eps` respectively.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, REFINEMENT_STABILITY_TOL};
use crate::lingeo::Conormal;
use crate::localmodels::result::{
    ApproximationResult, ChecksReport, MeasurementsReport, Motion, ParamsReport,
};
use crate::localmodels::wiggle::{build_wiggle_isotopy, WiggleIsotopy};
use crate::polyjet::expr::compose_univariate;
use crate::polyjet::jet::{jet_distance_c0, jet_norms, Jet};
use crate::polyjet::multiindex::MultiIndex;
use crate::polyjet::poly::TruncatedPoly;
use crate::polyjet::section::{holonomy_defect, JetField, JetSection, SectionGenerator};
use crate::primitive::PrimitiveSection;

#[derive(Debug, Clone)]
pub struct TransverseOptions {
    /// Multiplies all measurement grid densities.
    pub grid_scale: f64,
    /// Jet orders the construction must support beyond `r`.
    pub max_order: usize,
    /// Re-measure at doubled density and flag instability.
    pub check_resolution: bool,
    /// Samples per axis for the C^r-norm grid.
    pub norm_grid: usize,
    /// Hard cap on samples along the oscillating axis.
    pub axis_cap: usize,
    /// Measure the holonomy defect of the output at two resolutions.
    pub measure_holonomy: bool,
}

impl Default for TransverseOptions {
    fn default() -> Self {
        TransverseOptions {
            grid_scale: 1.0,
            max_order: 0,
            check_resolution: false,
            norm_grid: 33,
            axis_cap: 20_001,
            measure_holonomy: false,
        }
    }
}

/// The function `f = phi * g` as a jet field over `I^m` (with the family
/// parameter `z` frozen).
pub struct TransverseField {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub v: Arc<dyn JetField>,
    pub wiggle: Arc<WiggleIsotopy>,
    pub z: Vec<f64>,
    /// `c^r` for the raw co-normal `c * e_1`.
    pub v_scale: f64,
}

impl TransverseField {
    /// The rectangle index for a first coordinate.
    fn rect_index(&self, x1: f64) -> i64 {
        let j = (x1 / (2.0 * self.wiggle.delta)).round() as i64;
        j.clamp(-self.wiggle.j_max, self.wiggle.j_max)
    }

    /// Jet of the base-point interpolation `b` as a function of `x` over
    /// rectangle `j`: `b(x_m) = 2 j delta +/- delta * eta(x_m / (s*eps))`.
    fn b_jet(&self, x: &[f64], j: i64, order: usize) -> Result<TruncatedPoly<f64>> {
        let m = self.m;
        let w = &self.wiggle;
        let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let scale = 1.0 / (w.eta_scale * w.eps);
        let base = w.eta.taylor_at(x[m - 1] * scale, order)?;
        let mut pow = 1.0;
        let mut coeffs: Vec<f64> = base
            .iter()
            .map(|b| {
                let out = sign * w.delta * b * pow;
                pow *= scale;
                out
            })
            .collect();
        coeffs[0] += 2.0 * j as f64 * w.delta;
        let xm = TruncatedPoly::linear(m, order.max(1), m - 1, x[m - 1]).retruncate(order);
        compose_univariate(&coeffs, &xm)
    }

    /// Jet of `g(x) = h(p(x), x) = (x_1 - b(x_m))^r * v(p(x))` over the
    /// rectangle with index `j`.
    pub fn g_jet_in_rect(&self, x: &[f64], j: i64, order: usize) -> Result<Jet<f64>> {
        let m = self.m;
        let b = self.b_jet(x, j, order)?;
        let b0 = b.constant_term();
        let x1 = if order == 0 {
            TruncatedPoly::constant(m, 0, x[0])
        } else {
            TruncatedPoly::linear(m, order, 0, x[0])
        };
        let lead = x1.sub(&b)?.pow(self.r as u32)?.scale(&self.v_scale);
        // v at p(x) = (b(x_m), x_2, ..., x_{m-1}, 0).
        let mut p_val = vec![0.0; m];
        p_val[0] = b0;
        p_val[1..m - 1].copy_from_slice(&x[1..m - 1]);
        let v_at_p = self.v.jet(&p_val, order)?;
        let mut inner: Vec<Jet<f64>> = Vec::with_capacity(m);
        inner.push(Jet::new(x.to_vec(), vec![b])?);
        for mid in 1..m - 1 {
            let c = if order == 0 {
                TruncatedPoly::constant(m, 0, x[mid])
            } else {
                TruncatedPoly::linear(m, order, mid, x[mid])
            };
            inner.push(Jet::new(x.to_vec(), vec![c])?);
        }
        inner.push(Jet::new(
            x.to_vec(),
            vec![TruncatedPoly::constant(m, order, 0.0)],
        )?);
        let v_of_p = crate::polyjet::jet::jet_compose(&v_at_p, &inner)?;
        let comps = v_of_p
            .components()
            .iter()
            .map(|p| lead.mul(p))
            .collect::<Result<Vec<_>>>()?;
        Jet::new(x.to_vec(), comps)
    }

    /// Residual of the gluing across the shared boundary of rectangles
    /// `j` and `j+1` at `x` (zero inside the cutoff's support).
    pub fn gluing_residual_at(&self, x: &[f64], j: i64, order: usize) -> Result<f64> {
        let a = self.g_jet_in_rect(x, j, order)?;
        let b = self.g_jet_in_rect(x, j + 1, order)?;
        jet_distance_c0(&a, &b)
    }
}

impl JetField for TransverseField {
    fn dim(&self) -> usize {
        self.m
    }
    fn len_out(&self) -> usize {
        self.n
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<Jet<f64>> {
        let m = self.m;
        let w = &self.wiggle;
        // Outside the support of phi the germ is identically zero.
        let band = (w.amplitude_factor + w.rho) * w.eps;
        if x[m - 1].abs() > band {
            return Ok(Jet::zero(m, self.n, order, x.to_vec()));
        }
        let y = w.apply_inverse(1.0, x, &self.z)?;
        if y[m - 1].abs() >= 0.75 * w.rho * w.eps {
            return Ok(Jet::zero(m, self.n, order, x.to_vec()));
        }
        let phi = w.cutoff_phi_jet(x, &self.z, order)?;
        let g = self.g_jet_in_rect(x, self.rect_index(x[0]), order)?;
        let comps = g
            .components()
            .iter()
            .map(|p| phi.mul(p))
            .collect::<Result<Vec<_>>>()?;
        Jet::new(x.to_vec(), comps)
    }
}

fn conormal_scale_along_e1(sigma: &PrimitiveSection) -> Result<f64> {
    match &sigma.conormal {
        Conormal::Constant(g) => {
            if g.len() != sigma.m || g[0] == 0.0 || g[1..].iter().any(|&c| c != 0.0) {
                return Err(Error::InvalidArgument(
                    "the transverse model needs a constant co-normal along e_1".into(),
                ));
            }
            Ok(g[0].powi(sigma.r as i32))
        }
        Conormal::Field(_) => Err(Error::InvalidArgument(
            "the transverse model needs a constant co-normal".into(),
        )),
    }
}

pub struct TransverseArtifacts {
    pub field: Arc<TransverseField>,
    pub wiggle: Arc<WiggleIsotopy>,
}

/// The full transverse construction and its measurements.
pub fn transverse_approximate(
    sigma: &PrimitiveSection,
    k: usize,
    eps: f64,
    delta: f64,
    opts: &TransverseOptions,
) -> Result<ApproximationResult> {
    let (res, _) = transverse_approximate_with_artifacts(sigma, k, eps, delta, &[], opts)?;
    Ok(res)
}

pub fn transverse_approximate_with_artifacts(
    sigma: &PrimitiveSection,
    k: usize,
    eps: f64,
    delta: f64,
    z: &[f64],
    opts: &TransverseOptions,
) -> Result<(ApproximationResult, TransverseArtifacts)> {
    let m = sigma.m;
    let n = sigma.n;
    let r = sigma.r;
    if k == 0 || k >= m {
        return Err(Error::InvalidArgument(
            "the skeleton dimension must satisfy 1 <= k < m".into(),
        ));
    }
    if sigma.support_margin < eps {
        return Err(Error::SupportMargin(format!(
            "need supp(sigma) within [-1+eps, 1-eps]^m: margin {} < eps {eps}",
            sigma.support_margin
        )));
    }
    sigma.check_support_margin(5)?;
    let v_scale = conormal_scale_along_e1(sigma)?;

    let wiggle = Arc::new(build_wiggle_isotopy(
        m,
        eps,
        delta,
        r + opts.max_order,
        z.len(),
    )?);
    let injectivity_min = wiggle.injectivity_certificate(z)?;

    let field = Arc::new(TransverseField {
        m,
        n,
        r,
        v: sigma.v.clone(),
        wiggle: wiggle.clone(),
        z: z.to_vec(),
        v_scale,
    });

    let lo = vec![-1.0; m];
    let hi = vec![1.0; m];
    let cr_norm = sigma.cr_norm(&GridSpec::cubic(m, opts.norm_grid), &lo, &hi)?;

    let gs = |count: usize| ((count as f64 * opts.grid_scale) as usize).max(3);
    let x1_count = gs(GridSpec::count_for_scale(2.0, wiggle.delta)).min(opts.axis_cap);
    let mid_count = gs(9);
    let band = (wiggle.amplitude_factor + wiggle.rho) * wiggle.eps;

    // (a) C0 closeness on U' = F_1({|y_m| < rho*eps/2}), parametrized by
    // the preimage.
    let mut c0_error = 0.0f64;
    {
        let mut counts = vec![mid_count; m];
        counts[0] = x1_count;
        counts[m - 1] = 7;
        let spec = GridSpec::new(counts);
        let mut ylo = vec![-1.0; m];
        let mut yhi = vec![1.0; m];
        let half = 0.49 * wiggle.rho * wiggle.eps;
        ylo[m - 1] = -half;
        yhi[m - 1] = half;
        for y in spec.points(&ylo, &yhi) {
            let x = wiggle.apply(1.0, &y, z);
            if x.iter().any(|c| c.abs() > 1.0) {
                continue;
            }
            let hat = field.jet(&x, r)?;
            let s = sigma.jet_at(&x)?;
            c0_error = c0_error.max(jet_distance_c0(&hat, &s)?);
        }
    }

    // (b) perp norm of sigma-hat with respect to V = ker dx_1, over the
    // support band (f vanishes identically outside it).
    let u_unit = {
        let mut u = vec![0.0; m];
        u[0] = if v_scale >= 0.0 || r % 2 == 0 { 1.0 } else { 1.0 };
        u
    };
    let mut perp_sup = 0.0f64;
    {
        let mut counts = vec![mid_count; m];
        counts[0] = x1_count;
        counts[m - 1] = gs(17);
        let spec = GridSpec::new(counts);
        let mut blo = lo.clone();
        let mut bhi = hi.clone();
        blo[m - 1] = -band * 1.02;
        bhi[m - 1] = band * 1.02;
        for x in spec.points(&blo, &bhi) {
            if x[m - 1].abs() > 1.0 {
                continue;
            }
            let jet = field.jet(&x, r)?;
            if let Some(p) = jet_norms(&jet, Some(&u_unit))?.perp {
                perp_sup = perp_sup.max(p);
            }
        }
    }

    // (c) boundary checks: the isotopy is the identity and sigma-hat
    // vanishes on the boundary shell.
    let boundary_isotopy_max = wiggle.boundary_identity_max(z, 4);
    let mut boundary_section_max = 0.0f64;
    for axis in 0..m {
        for side in [-1.0, 1.0] {
            let mut slo = lo.clone();
            let mut shi = hi.clone();
            if side > 0.0 {
                slo[axis] = 1.0 - 0.4 * eps;
            } else {
                shi[axis] = -1.0 + 0.4 * eps;
            }
            for x in GridSpec::cubic(m, 3).points(&slo, &shi) {
                let jet = field.jet(&x, r)?;
                boundary_section_max = boundary_section_max.max(jet_norms(&jet, None)?.c0);
            }
        }
    }

    // (d) V-invariance of the isotopy (first row of dF_t).
    let v_invariance_max = wiggle.v_invariance_max(z, 4)?;

    // (e) gluing residual across rectangle boundaries inside U.
    let mut gluing_residual = 0.0f64;
    {
        let j_probe: Vec<i64> = {
            let jm = wiggle.j_max;
            let mut js = vec![0, 1, -1, jm / 2, -jm / 2];
            js.dedup();
            js.retain(|j| *j + 1 <= jm && *j >= -jm);
            js
        };
        for j in j_probe {
            let x1 = (2 * j + 1) as f64 * wiggle.delta;
            for t in crate::grid::linspace(-0.98, 0.98, 9) {
                let ym = t * wiggle.rho * wiggle.eps;
                let mut y = vec![0.0; m];
                y[0] = x1;
                y[m - 1] = ym;
                let x = wiggle.apply(1.0, &y, z);
                if x.iter().any(|c| c.abs() > 1.0) {
                    continue;
                }
                gluing_residual = gluing_residual.max(field.gluing_residual_at(&x, j, r)?);
            }
        }
    }

    // Optional holonomy-defect trend of the output, on a probe box that
    // covers one full wiggle period and the whole cutoff band: the finite
    // differences must resolve the cutoff's transition scale rho*eps/4,
    // otherwise the detector is not yet in its convergent regime.
    let (holo_coarse, holo_fine) = if opts.measure_holonomy {
        let section = JetSection {
            m,
            n,
            r,
            generator: SectionGenerator::Field(field.clone()),
        };
        let mut counts = vec![3; m];
        counts[0] = 49;
        counts[m - 1] = 385;
        let mut blo = vec![-0.2; m];
        let mut bhi = vec![0.2; m];
        blo[0] = -3.0 * wiggle.delta;
        bhi[0] = 3.0 * wiggle.delta;
        blo[m - 1] = -band;
        bhi[m - 1] = band;
        let coarse = holonomy_defect(&section, &GridSpec::new(counts.clone()), &blo, &bhi)?;
        let fine_spec = GridSpec::new(counts.iter().map(|c| (c - 1) * 2 + 1).collect());
        let fine = holonomy_defect(&section, &fine_spec, &blo, &bhi)?;
        (Some(coarse.max), Some(fine.max))
    } else {
        (None, None)
    };

    // Isotopy C0 distance.
    let isotopy_c0_dist = {
        let mut counts = vec![5; m];
        counts[0] = x1_count.min(4097);
        counts[m - 1] = gs(17);
        wiggle.c0_distance(z, &GridSpec::new(counts), &[0.0, 0.25, 0.5, 0.75, 1.0])
    };

    let mut under_resolved = false;
    if opts.check_resolution {
        // Double the oscillating axis density and compare the C0 error.
        let mut counts = vec![mid_count; m];
        counts[0] = (x1_count * 2).min(opts.axis_cap * 2);
        counts[m - 1] = 13;
        let spec = GridSpec::new(counts);
        let mut ylo = vec![-1.0; m];
        let mut yhi = vec![1.0; m];
        let half = 0.49 * wiggle.rho * wiggle.eps;
        ylo[m - 1] = -half;
        yhi[m - 1] = half;
        let mut refined = 0.0f64;
        for y in spec.points(&ylo, &yhi) {
            let x = wiggle.apply(1.0, &y, z);
            if x.iter().any(|c| c.abs() > 1.0) {
                continue;
            }
            let hat = field.jet(&x, r)?;
            let s = sigma.jet_at(&x)?;
            refined = refined.max(jet_distance_c0(&hat, &s)?);
        }
        if c0_error > 0.0 && (refined - c0_error).abs() > REFINEMENT_STABILITY_TOL * refined {
            under_resolved = true;
        }
        c0_error = c0_error.max(refined);
    }

    let c0_denom = cr_norm * (eps + wiggle.delta / eps);
    let perp_denom = cr_norm * (wiggle.delta / eps);
    let measurements = MeasurementsReport {
        cr_norm,
        c0_error,
        c0_ratio: if c0_denom > 0.0 { c0_error / c0_denom } else { 0.0 },
        perp_sup,
        perp_ratio: if perp_denom > 0.0 { perp_sup / perp_denom } else { 0.0 },
        lower_jet_sup: None,
        holonomy_defect_coarse: holo_coarse,
        holonomy_defect_fine: holo_fine,
    };
    if gluing_residual > 1e-8 {
        return Err(Error::GluingResidual {
            residual: gluing_residual,
            tol: 1e-8,
        });
    }
    let checks = ChecksReport {
        boundary_section_max,
        boundary_isotopy_max,
        v_invariance_max,
        gluing_residual,
        injectivity_min,
        isotopy_c0_dist,
        under_resolved,
    };
    let result = ApproximationResult {
        params: ParamsReport {
            m,
            n,
            r,
            k,
            eps,
            delta_requested: delta,
            delta_used: wiggle.delta,
            amplitude_factor: wiggle.amplitude_factor,
            angle: std::f64::consts::FRAC_PI_2,
            lambda: 0.0,
        },
        measurements,
        checks,
        path: "transverse".into(),
        sigma_hat: field.clone(),
        motion: Motion::Wiggle {
            wiggle: wiggle.clone(),
            z: z.to_vec(),
        },
    };
    Ok((result, TransverseArtifacts { field, wiggle }))
}

/// One slice of a parametric family: the last `q` axes of the generator
/// are frozen at `z`.
pub struct SliceField {
    pub family: Arc<dyn JetField>,
    pub m: usize,
    pub z: Vec<f64>,
}

impl JetField for SliceField {
    fn dim(&self) -> usize {
        self.m
    }
    fn len_out(&self) -> usize {
        self.family.len_out()
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<Jet<f64>> {
        let mut full = x.to_vec();
        full.extend_from_slice(&self.z);
        let jet = self.family.jet(&full, order)?;
        let keep: Vec<usize> = (0..self.m).collect();
        let comps = jet
            .components()
            .iter()
            .map(|p| p.restrict(&keep))
            .collect();
        Jet::new(x.to_vec(), comps)
    }
}

/// Per-parameter outcome of the parametric run.
pub struct ParametricSlice {
    pub z: Vec<f64>,
    pub result: ApproximationResult,
}

pub struct ParametricResult {
    pub slices: Vec<ParametricSlice>,
    /// Sup over interior parameter slices.
    pub c0_error_sup: f64,
    pub perp_sup: f64,
    /// Max |sigma-hat_z| over boundary parameters (exact zero expected).
    pub boundary_z_section_max: f64,
    /// Max |F_t^z - id| over boundary parameters (exact zero expected).
    pub boundary_z_isotopy_max: f64,
}

/// The parametric transverse construction: one wiggle family with extra
/// parameter plateau factors, one report per sampled `z`, and exact
/// vanishing checks at boundary parameters.
pub fn parametric_transverse_approximate(
    family: Arc<dyn JetField>,
    m: usize,
    n: usize,
    r: usize,
    q: usize,
    k: usize,
    eps: f64,
    delta: f64,
    support_margin: f64,
    z_samples: &[Vec<f64>],
    opts: &TransverseOptions,
) -> Result<ParametricResult> {
    if family.dim() != m + q {
        return Err(Error::ShapeMismatch(
            "family generator must have m + q axes".into(),
        ));
    }
    let mut slices = Vec::new();
    let mut c0_sup = 0.0f64;
    let mut perp_sup = 0.0f64;
    for z in z_samples {
        if z.len() != q {
            return Err(Error::ShapeMismatch("parameter dimension".into()));
        }
        let slice = Arc::new(SliceField {
            family: family.clone(),
            m,
            z: z.clone(),
        });
        let sigma_z = PrimitiveSection::new(
            m,
            n,
            r,
            slice,
            Conormal::Constant({
                let mut u = vec![0.0; m];
                u[0] = 1.0;
                u
            }),
            support_margin,
        )?;
        let (result, _) =
            transverse_approximate_with_artifacts(&sigma_z, k, eps, delta, z, opts)?;
        c0_sup = c0_sup.max(result.measurements.c0_error);
        perp_sup = perp_sup.max(result.measurements.perp_sup);
        slices.push(ParametricSlice {
            z: z.clone(),
            result,
        });
    }

    // Boundary parameters: the plateau factors vanish, so F^z = id and
    // (by the precondition sigma_z = 0 there) sigma-hat_z = 0 on all of
    // I^m, exactly.
    let wiggle = Arc::new(build_wiggle_isotopy(m, eps, delta, r + opts.max_order, q)?);
    let mut boundary_z_section_max = 0.0f64;
    let mut boundary_z_isotopy_max = 0.0f64;
    {
        let probe_spec = GridSpec::cubic(m, 5);
        for axis in 0..q {
            for side in [-1.0, 1.0] {
                let mut z = vec![0.0; q];
                z[axis] = side * (1.0 - 0.4 * eps);
                let slice = Arc::new(SliceField {
                    family: family.clone(),
                    m,
                    z: z.clone(),
                });
                let field = TransverseField {
                    m,
                    n,
                    r,
                    v: slice.clone(),
                    wiggle: wiggle.clone(),
                    z: z.clone(),
                    v_scale: 1.0,
                };
                for x in probe_spec.points(&vec![-1.0; m], &vec![1.0; m]) {
                    let moved = wiggle.apply(1.0, &x, &z);
                    let dist = moved
                        .iter()
                        .zip(&x)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    boundary_z_isotopy_max = boundary_z_isotopy_max.max(dist);
                    let jet = field.jet(&x, r)?;
                    boundary_z_section_max =
                        boundary_z_section_max.max(jet_norms(&jet, None)?.c0);
                }
            }
        }
    }

    Ok(ParametricResult {
        slices,
        c0_error_sup: c0_sup,
        perp_sup,
        boundary_z_section_max,
        boundary_z_isotopy_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyjet::expr::Expr;
    use crate::polyjet::section::ExprField;

    fn bump(m: usize, inner: f64, outer: f64, k: usize) -> Expr<f64> {
        Expr::mul(
            (0..m)
                .map(|axis| Expr::Plateau {
                    arg: Box::new(Expr::coord(axis)),
                    inner,
                    outer,
                    order: k,
                })
                .collect(),
        )
    }

    fn e1_section(m: usize, r: usize, v: Expr<f64>, margin: f64) -> PrimitiveSection {
        let mut u = vec![0.0; m];
        u[0] = 1.0;
        PrimitiveSection::new(
            m,
            1,
            r,
            Arc::new(ExprField::scalar(m, v)),
            Conormal::Constant(u),
            margin,
        )
        .unwrap()
    }

    #[test]
    fn zero_section_gives_zero_output() {
        let sigma = e1_section(2, 1, Expr::constant(0.0), 0.25);
        let res = transverse_approximate(&sigma, 1, 0.2, 0.02, &TransverseOptions::default())
            .unwrap();
        assert_eq!(res.measurements.c0_error, 0.0);
        assert_eq!(res.measurements.perp_sup, 0.0);
        assert_eq!(res.checks.boundary_section_max, 0.0);
        assert_eq!(res.checks.boundary_isotopy_max, 0.0);
        assert_eq!(res.checks.v_invariance_max, 0.0);
        assert!(res.checks.injectivity_min > 0.5);
    }

    #[test]
    fn bump_run_is_finite_and_structurally_sound() {
        let sigma = e1_section(2, 1, bump(2, 0.05, 0.75, 5), 0.25);
        let res = transverse_approximate(&sigma, 1, 0.2, 0.02, &TransverseOptions::default())
            .unwrap();
        assert!(res.measurements.c0_error > 0.0);
        assert!(res.measurements.c0_error.is_finite());
        assert!(res.measurements.perp_sup.is_finite());
        assert!(res.checks.structurally_sound(0.2));
        assert!(res.checks.gluing_residual < 1e-10);
        assert!(res.checks.isotopy_c0_dist < 0.2);
    }

    #[test]
    fn errors_shrink_along_the_diagonal() {
        // Halving eps and delta/eps three times decreases both measured
        // errors monotonically (m = 2, n = 1, r = 1).
        let sigma = e1_section(2, 1, bump(2, 0.05, 0.75, 5), 0.25);
        let mut c0s = Vec::new();
        let mut perps = Vec::new();
        let mut eps = 0.2;
        let mut ratio = 0.1;
        for _ in 0..3 {
            let res = transverse_approximate(
                &sigma,
                1,
                eps,
                eps * ratio,
                &TransverseOptions::default(),
            )
            .unwrap();
            c0s.push(res.measurements.c0_error);
            perps.push(res.measurements.perp_sup);
            eps /= 2.0;
            ratio /= 2.0;
        }
        for i in 1..c0s.len() {
            assert!(c0s[i] < c0s[i - 1], "c0 errors not decreasing: {c0s:?}");
            assert!(perps[i] < perps[i - 1], "perp not decreasing: {perps:?}");
        }
    }

    #[test]
    fn sigma_hat_is_holonomic() {
        let sigma = e1_section(2, 1, bump(2, 0.05, 0.75, 5), 0.25);
        let opts = TransverseOptions {
            measure_holonomy: true,
            ..TransverseOptions::default()
        };
        let res = transverse_approximate(&sigma, 1, 0.2, 0.02, &opts).unwrap();
        let coarse = res.measurements.holonomy_defect_coarse.unwrap();
        let fine = res.measurements.holonomy_defect_fine.unwrap();
        assert!(fine < coarse, "defect should shrink: {coarse} -> {fine}");
    }

    #[test]
    fn rejects_support_margin_violation() {
        let sigma = e1_section(2, 1, bump(2, 0.05, 0.75, 5), 0.1);
        let err = transverse_approximate(&sigma, 1, 0.2, 0.02, &TransverseOptions::default());
        assert!(matches!(err, Err(Error::SupportMargin(_))));
    }

    #[test]
    fn parametric_boundary_z_vanishes_exactly() {
        // sigma_z = rho(z) * sigma with rho a plateau in z.
        let m = 2;
        let q = 1;
        let vz = Expr::mul(vec![
            bump(m, 0.05, 0.75, 5),
            Expr::Plateau {
                arg: Box::new(Expr::coord(m)),
                inner: 0.3,
                outer: 0.7,
                order: 5,
            },
        ]);
        let family = Arc::new(ExprField::scalar(m + q, vz));
        let res = parametric_transverse_approximate(
            family,
            m,
            1,
            1,
            q,
            1,
            0.2,
            0.02,
            0.25,
            &[vec![0.0], vec![0.5]],
            &TransverseOptions::default(),
        )
        .unwrap();
        assert_eq!(res.boundary_z_section_max, 0.0);
        assert_eq!(res.boundary_z_isotopy_max, 0.0);
        assert!(res.c0_error_sup > 0.0);
    }

    #[test]
    fn interior_z_matches_non_parametric_run() {
        // With all parameter plateau factors equal to 1, the parametric
        // construction reduces to the plain one.
        let m = 2;
        let v = bump(m, 0.05, 0.75, 5);
        let family = Arc::new(ExprField::scalar(m + 1, v.clone()));
        let par = parametric_transverse_approximate(
            family,
            m,
            1,
            1,
            1,
            1,
            0.2,
            0.02,
            0.25,
            &[vec![0.0]],
            &TransverseOptions::default(),
        )
        .unwrap();
        let plain = transverse_approximate(
            &e1_section(m, 1, v, 0.25),
            1,
            0.2,
            0.02,
            &TransverseOptions::default(),
        )
        .unwrap();
        let a = &par.slices[0].result.measurements;
        let b = &plain.measurements;
        assert!((a.c0_error - b.c0_error).abs() < 1e-12);
        assert!((a.perp_sup - b.perp_sup).abs() < 1e-12);
    }
}
