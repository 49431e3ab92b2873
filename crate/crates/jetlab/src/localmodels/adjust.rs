//! The transversality adjustment: where the hyperplane field is almost
//! tangent to the skeleton, the holonomic approximation is written down
//! directly, with no isotopy. In the frame where the reference hyperplane
//! `H` is `ker dx_m`, the function is
//! `h(x) = psi_delta(x_m) * x_m^r * v(x)`, and the errors are proportional
//! to `angle(tau, H) + delta` times the `C^r` norm of the section.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::lingeo::{Conormal, Subspace};
use crate::localmodels::profiles::Profile;
use crate::localmodels::result::{
    ApproximationResult, ChecksReport, MeasurementsReport, Motion, ParamsReport,
};
use crate::polyjet::jet::{jet_distance_c0, jet_norms};
use crate::polyjet::multiindex::MultiIndex;
use crate::polyjet::poly::TruncatedPoly;
use crate::polyjet::section::JetField;
use crate::primitive::PrimitiveSection;

/// The angle bound under which the adjustment applies. Borderline values
/// (at or slightly above pi/4) are admitted: the error bound degrades
/// linearly with the angle while wiggling does not apply there.
pub const MAX_ADJUST_ANGLE: f64 = std::f64::consts::FRAC_PI_4 + 1e-9;

/// The function `h(x) = psi_delta(<nu, x>) * <nu, x>^r * v_eff(x)`, as a
/// jet field. `v_eff` absorbs the length of the section's raw co-normal.
pub struct AdjustField {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub nu: Vec<f64>,
    pub delta: f64,
    pub v: Arc<dyn JetField>,
    pub v_scale: f64,
    pub profile: Profile,
}

impl JetField for AdjustField {
    fn dim(&self) -> usize {
        self.m
    }
    fn len_out(&self) -> usize {
        self.n
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<crate::polyjet::jet::Jet<f64>> {
        let m = self.m;
        let s0: f64 = self.nu.iter().zip(x).map(|(a, b)| a * b).sum();
        // lin = <nu, y> as a polynomial in the offsets, constant included.
        let mut lin = TruncatedPoly::<f64>::zero(m, order);
        lin.set_coeff(&MultiIndex::zero(m), s0);
        if order >= 1 {
            for (axis, &c) in self.nu.iter().enumerate() {
                if c != 0.0 {
                    lin.set_coeff(&MultiIndex::unit(m, axis), c);
                }
            }
        }
        // psi_delta germ at s0, composed with lin.
        let base = self.profile.taylor_at(s0 / self.delta, order)?;
        let mut pow = 1.0;
        let coeffs: Vec<f64> = base
            .iter()
            .map(|b| {
                let out = b * pow;
                pow /= self.delta;
                out
            })
            .collect();
        let psi = crate::polyjet::expr::compose_univariate(&coeffs, &lin)?;
        let lead = psi.mul(&lin.pow(self.r as u32)?)?.scale(&self.v_scale);
        let vj = self.v.jet(x, order)?;
        let comps = vj
            .components()
            .iter()
            .map(|p| lead.mul(p))
            .collect::<Result<Vec<_>>>()?;
        crate::polyjet::jet::Jet::new(x.to_vec(), comps)
    }
}

/// Unit normal of a hyperplane subspace.
pub fn hyperplane_normal(h: &Subspace) -> Result<Vec<f64>> {
    let m = h.ambient();
    if h.dim() != m - 1 {
        return Err(Error::InvalidArgument(
            "the reference frame must be a hyperplane (dim m-1)".into(),
        ));
    }
    // Null space of basis^T via full QR of the basis completed by the
    // identity, as in Subspace::hyperplane.
    let mut cols: Vec<Vec<f64>> = (0..h.dim())
        .map(|j| h.basis().column(j).iter().cloned().collect())
        .collect();
    for axis in 0..m {
        let mut e = vec![0.0; m];
        e[axis] = 1.0;
        cols.push(e);
    }
    let a = DMatrix::from_fn(m, cols.len(), |i, j| cols[j][i]);
    let q = a.qr().q();
    Ok(q.column(m - 1).iter().cloned().collect())
}

pub struct AdjustOptions {
    /// Samples per axis for the C^r-norm and perp grids.
    pub norm_grid: usize,
    /// Samples along each tangential axis of the closeness slab.
    pub slab_grid: usize,
    /// Jet orders the construction must support beyond `r`.
    pub max_order: usize,
}

impl Default for AdjustOptions {
    fn default() -> Self {
        AdjustOptions {
            norm_grid: 33,
            slab_grid: 33,
            max_order: 0,
        }
    }
}

/// The transversality adjustment. `h_frame` is the reference hyperplane
/// `H`; the construction is carried out in an `H`-aligned orthonormal
/// frame internally. Returns the holonomic section, the measured distance
/// on the slab `{|<nu, x>| <= 0.45 delta}`, the measured perp sup, and
/// the ratios against `cr_norm * (angle + delta)`.
pub fn transversality_adjust(
    sigma: &PrimitiveSection,
    delta: f64,
    h_frame: &Subspace,
    opts: &AdjustOptions,
) -> Result<ApproximationResult> {
    let m = sigma.m;
    let r = sigma.r;
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidArgument("delta must lie in (0,1)".into()));
    }
    sigma.check_support_margin(5)?;
    let nu_raw = hyperplane_normal(h_frame)?;

    // Angle between tau and H, sampled for varying fields; the co-normal
    // sign is irrelevant.
    let mut angle: f64 = 0.0;
    let angle_grid = GridSpec::cubic(m, 5);
    for x in angle_grid.points(&vec![-1.0; m], &vec![1.0; m]) {
        let u = sigma.unit_conormal_at(&x)?;
        let dot: f64 = u.iter().zip(&nu_raw).map(|(a, b)| a * b).sum();
        angle = angle.max(dot.abs().clamp(0.0, 1.0).acos());
    }
    if angle > MAX_ADJUST_ANGLE {
        return Err(Error::AngleTooLarge {
            angle,
            bound: MAX_ADJUST_ANGLE,
        });
    }
    // Orient nu towards the section's co-normal.
    let u0 = sigma.unit_conormal_at(&vec![0.0; m])?;
    let dot: f64 = u0.iter().zip(&nu_raw).map(|(a, b)| a * b).sum();
    let nu: Vec<f64> = if dot < 0.0 {
        nu_raw.iter().map(|c| -c).collect()
    } else {
        nu_raw
    };

    // v_eff = |g| ^ r * v for a constant raw co-normal.
    let v_scale = match &sigma.conormal {
        Conormal::Constant(g) => g.iter().map(|c| c * c).sum::<f64>().sqrt().powi(r as i32),
        Conormal::Field(_) => 1.0,
    };
    let profile_k = 2 * (r + opts.max_order) + 3;
    let field = Arc::new(AdjustField {
        m,
        n: sigma.n,
        r,
        nu: nu.clone(),
        delta,
        v: sigma.v.clone(),
        v_scale,
        profile: Profile::plateau(0.5, 1.0, profile_k),
    });

    let cr_norm = sigma.cr_norm(
        &GridSpec::cubic(m, opts.norm_grid),
        &vec![-1.0; m],
        &vec![1.0; m],
    )?;

    // Closeness on the slab {|<nu, x>| <= 0.45 delta}: probe in the
    // nu-aligned frame and keep points inside the cube.
    let frame_rows = complete_frame(&nu);
    let mut c0_error = 0.0f64;
    {
        let mut counts = vec![opts.slab_grid.max(3); m];
        counts[m - 1] = 5;
        let spec = GridSpec::new(counts);
        let mut lo = vec![-1.0; m];
        let mut hi = vec![1.0; m];
        lo[m - 1] = -0.45 * delta;
        hi[m - 1] = 0.45 * delta;
        for tilde in spec.points(&lo, &hi) {
            // x = sum_i tilde_i * row_i (rows orthonormal, nu last).
            let x: Vec<f64> = (0..m)
                .map(|c| (0..m).map(|i| frame_rows[i][c] * tilde[i]).sum())
                .collect();
            if x.iter().any(|v| v.abs() > 1.0) {
                continue;
            }
            let hat = field.jet(&x, r)?;
            let s = sigma.jet_at(&x)?;
            c0_error = c0_error.max(jet_distance_c0(&hat, &s)?);
        }
    }

    // Perp sup over I^m: h is supported in {|<nu,x>| <= delta}, so probe
    // that slab densely plus a coarse global grid.
    let mut perp_sup = 0.0f64;
    {
        let mut counts = vec![opts.slab_grid.max(3); m];
        counts[m - 1] = 11;
        let spec = GridSpec::new(counts);
        let mut lo = vec![-1.0; m];
        let mut hi = vec![1.0; m];
        lo[m - 1] = -delta;
        hi[m - 1] = delta;
        for tilde in spec.points(&lo, &hi) {
            let x: Vec<f64> = (0..m)
                .map(|c| (0..m).map(|i| frame_rows[i][c] * tilde[i]).sum())
                .collect();
            if x.iter().any(|v| v.abs() > 1.0) {
                continue;
            }
            let u = sigma.unit_conormal_at(&x)?;
            let jet = field.jet(&x, r)?;
            if let Some(p) = jet_norms(&jet, Some(&u))?.perp {
                perp_sup = perp_sup.max(p);
            }
        }
    }

    // Boundary vanishing: v's margin forces sigma-hat = 0 on the shell.
    let mut boundary_max = 0.0f64;
    for axis in 0..m {
        for side in [-1.0, 1.0] {
            let mut lo = vec![-1.0; m];
            let mut hi = vec![1.0; m];
            let margin = sigma.support_margin.min(0.5);
            if side > 0.0 {
                lo[axis] = 1.0 - 0.9 * margin;
            } else {
                hi[axis] = -1.0 + 0.9 * margin;
            }
            for x in GridSpec::cubic(m, 3).points(&lo, &hi) {
                let jet = field.jet(&x, r)?;
                boundary_max = boundary_max.max(jet_norms(&jet, None)?.c0);
            }
        }
    }

    let denom = cr_norm * (angle + delta);
    let measurements = MeasurementsReport {
        cr_norm,
        c0_error,
        c0_ratio: if denom > 0.0 { c0_error / denom } else { 0.0 },
        perp_sup,
        perp_ratio: if denom > 0.0 { perp_sup / denom } else { 0.0 },
        lower_jet_sup: None,
        holonomy_defect_coarse: None,
        holonomy_defect_fine: None,
    };
    let checks = ChecksReport {
        boundary_section_max: boundary_max,
        boundary_isotopy_max: 0.0,
        v_invariance_max: 0.0,
        gluing_residual: 0.0,
        injectivity_min: 1.0,
        isotopy_c0_dist: 0.0,
        under_resolved: false,
    };
    Ok(ApproximationResult {
        params: ParamsReport {
            m,
            n: sigma.n,
            r,
            k: 0,
            eps: 0.0,
            delta_requested: delta,
            delta_used: delta,
            amplitude_factor: 0.0,
            angle,
            lambda: 0.0,
        },
        measurements,
        checks,
        path: "adjust".into(),
        sigma_hat: field,
        motion: Motion::Identity { m },
    })
}

/// Orthonormal rows with `nu` last; the remaining rows complete it.
pub fn complete_frame(nu: &[f64]) -> Vec<Vec<f64>> {
    let m = nu.len();
    let mut cols = vec![nu.to_vec()];
    for axis in 0..m {
        let mut e = vec![0.0; m];
        e[axis] = 1.0;
        cols.push(e);
    }
    let a = DMatrix::from_fn(m, cols.len(), |i, j| cols[j][i]);
    let q = a.qr().q();
    let mut rows: Vec<Vec<f64>> = (1..m)
        .map(|j| q.column(j).iter().cloned().collect())
        .collect();
    // q's first column is +/- nu; store nu itself as the last row.
    rows.push(nu.to_vec());
    rows
}
